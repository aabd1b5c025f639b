//! Parallel study execution.

use rayon::prelude::*;

use depkde_core::experiment::{replicate_outcome, ReplicateSummary, SamplerKind, StudyConfig};

/// Runs the replicates on the rayon pool. Each replicate draws from its own
/// random stream, so the result does not depend on scheduling and matches
/// [`depkde_core::experiment::run_study`] exactly.
pub fn run_study_parallel(cfg: &StudyConfig) -> depkde_core::Result<ReplicateSummary> {
    cfg.validate()?;
    let sd = match cfg.sampler {
        SamplerKind::Mh => Some(cfg.tuned_proposal_sd()?),
        SamplerKind::Iid => None,
    };
    let outcomes = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| replicate_outcome(cfg, r, sd))
        .collect();
    Ok(ReplicateSummary::from_outcomes(&cfg.methods, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use depkde_core::experiment::{run_study, StudyMethod};
    use depkde_core::samplers::TargetDistribution;
    use depkde_core::selectors::Method;

    #[test]
    fn matches_sequential_run() {
        let cfg = StudyConfig {
            n: 400,
            replicates: 3,
            methods: vec![
                StudyMethod::Target,
                StudyMethod::Select(Method::MBcv),
                StudyMethod::Thin,
            ],
            thin_k: 2,
            grid_points: 256,
            ..StudyConfig::full_scale(TargetDistribution::study_normal(), SamplerKind::Mh)
        };
        assert_eq!(run_study_parallel(&cfg).unwrap(), run_study(&cfg).unwrap());
    }
}

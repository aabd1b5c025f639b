//! Replicated simulation studies comparing the selectors by integrated
//! squared error against a known target.
//!
//! Every method in a replicate sees the same sample and the same ISE grid.
//! A method that fails on a replicate is counted as a failure and the
//! replicate carries on.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::density::{EvaluationGrid, IseEvaluator, Sample, DEFAULT_GRID_POINTS};
use crate::dependence::{iat, AutocorrSpec, ZetaEstimator, DEFAULT_ZETA_POINTS};
use crate::error::{invalid, Result};
use crate::pairs::{Diagonal, PairSumMode, DEFAULT_EXACT_LIMIT};
use crate::samplers::{
    iid_sample_with, mh_sample, stream_rng, thin, tune_proposal, MhConfig, TargetDistribution,
};
use crate::selectors::{
    minimize, select, select_with_cache, Method, SelectorConfig, SelectorResult, ZetaCache,
};

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Iid,
    Mh,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Iid => "iid",
            SamplerKind::Mh => "mh",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iid" => Ok(SamplerKind::Iid),
            "mh" | "mcmc" => Ok(SamplerKind::Mh),
            _ => Err(invalid(format!("unknown sampler {s:?}"))),
        }
    }
}

/// A column of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StudyMethod {
    /// The bandwidth minimising the actual ISE, which needs the truth.
    Target,
    Select(Method),
    /// Keep every k-th draw, then apply SJse to what is left.
    Thin,
}

impl StudyMethod {
    /// Table order: Target, the six selectors, Thin.
    pub fn all() -> Vec<StudyMethod> {
        let mut out = Vec::with_capacity(8);
        out.push(StudyMethod::Target);
        out.extend(
            [
                Method::Bcv,
                Method::SjSe,
                Method::SjMin,
                Method::MBcv,
                Method::MSjSe,
                Method::MSjMin,
            ]
            .map(StudyMethod::Select),
        );
        out.push(StudyMethod::Thin);
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            StudyMethod::Target => "Target",
            StudyMethod::Select(m) => m.name(),
            StudyMethod::Thin => "Thin",
        }
    }
}

impl fmt::Display for StudyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("target") {
            Ok(StudyMethod::Target)
        } else if s.eq_ignore_ascii_case("thin") {
            Ok(StudyMethod::Thin)
        } else {
            s.parse().map(StudyMethod::Select)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub target: TargetDistribution,
    pub sampler: SamplerKind,
    pub n: usize,
    pub replicates: usize,
    pub methods: Vec<StudyMethod>,
    pub thin_k: usize,
    pub seed: u64,
    /// Points in the ISE grid.
    pub grid_points: usize,
    pub zeta_spec: AutocorrSpec,
    pub zeta_points: usize,
    pub diagonal: Diagonal,
    pub pair_mode: PairSumMode,
    /// Samples above this size use a binned estimate on the ISE grid.
    pub ise_exact_limit: usize,
}

impl StudyConfig {
    /// 50 replicates of 10 000 draws, all methods, thinning by 5.
    pub fn full_scale(target: TargetDistribution, sampler: SamplerKind) -> Self {
        Self {
            target,
            sampler,
            n: 10_000,
            replicates: 50,
            methods: StudyMethod::all(),
            thin_k: 5,
            seed: 1,
            grid_points: DEFAULT_GRID_POINTS,
            zeta_spec: AutocorrSpec::default(),
            zeta_points: DEFAULT_ZETA_POINTS,
            diagonal: Diagonal::Include,
            pair_mode: PairSumMode::default(),
            ise_exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.n < 100 {
            return Err(invalid(format!("n must be at least 100, got {}", self.n)));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods requested"));
        }
        if self.methods.contains(&StudyMethod::Thin) && (self.thin_k == 0 || self.n / self.thin_k < 100) {
            return Err(invalid(format!("thin_k {} leaves too few draws", self.thin_k)));
        }
        if self.grid_points < 2 || self.zeta_points < 2 {
            return Err(invalid("grids need at least 2 points"));
        }
        Ok(())
    }

    fn selector_config(&self, method: Method, sample: &Sample) -> SelectorConfig {
        SelectorConfig {
            zeta_spec: self.zeta_spec,
            zeta_points: self.zeta_points,
            diagonal: self.diagonal,
            pair_mode: self.pair_mode,
            ..SelectorConfig::for_sample(method, sample)
        }
    }

    /// Proposal sd for the MH sampler, tuned on a stream no replicate uses.
    pub fn tuned_proposal_sd(&self) -> Result<f64> {
        tune_proposal(&self.target, &self.mh_config(0))
    }

    fn mh_config(&self, replicate: usize) -> MhConfig {
        MhConfig {
            stream: replicate as u64,
            ..MhConfig::new(self.n, self.seed)
        }
    }
}

/// One method's outcome on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub method: StudyMethod,
    pub replicate: usize,
    pub h: f64,
    pub ise: f64,
    /// ζ̂ at `h` for the sample the method smoothed.
    pub zeta: f64,
    /// Acceptance rate of the chain; 1 for iid draws.
    pub acceptance: f64,
    /// Integrated autocorrelation time of the draws themselves.
    pub iat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodFailure {
    pub method: StudyMethod,
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub acceptance: f64,
    pub iat: f64,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<MethodFailure>,
}

/// The ISE-minimising bandwidth over the selectors' bracket.
pub fn target_bandwidth(
    sample: &Sample,
    truth: &TargetDistribution,
    grid: &EvaluationGrid,
    cfg: &SelectorConfig,
) -> Result<SelectorResult> {
    target_with(&IseEvaluator::new(sample, truth, grid, DEFAULT_EXACT_LIMIT)?, cfg)
}

fn target_with(ise: &IseEvaluator<'_>, cfg: &SelectorConfig) -> Result<SelectorResult> {
    cfg.validate()?;
    let out = minimize(&mut |h| ise.ise(h), &cfg.bracket())?;
    Ok(SelectorResult {
        method: cfg.method,
        h: out.h,
        objective_at_h: out.value,
        zeta_at_h: f64::NAN,
        evaluations: out.evaluations,
        converged: out.converged,
        boundary_hit: out.boundary,
        flags: Default::default(),
    })
}

/// Draws replicate `r`'s sample and returns it with the chain's acceptance rate.
pub fn replicate_sample(cfg: &StudyConfig, r: usize, proposal_sd: Option<f64>) -> Result<(Sample, f64)> {
    match cfg.sampler {
        SamplerKind::Iid => {
            let mut rng = stream_rng(cfg.seed, r as u64);
            Ok((iid_sample_with(&cfg.target, cfg.n, &mut rng)?, 1.0))
        }
        SamplerKind::Mh => {
            let sd = match proposal_sd {
                Some(sd) => sd,
                None => cfg.tuned_proposal_sd()?,
            };
            let chain = mh_sample(
                &cfg.target,
                &MhConfig {
                    proposal_sd: sd,
                    ..cfg.mh_config(r)
                },
            )?;
            Ok((chain.sample, chain.acceptance_rate))
        }
    }
}

pub fn run_replicate(cfg: &StudyConfig, r: usize) -> Result<ReplicateOutcome> {
    let sd = match cfg.sampler {
        SamplerKind::Mh => Some(cfg.tuned_proposal_sd()?),
        SamplerKind::Iid => None,
    };
    run_replicate_tuned(cfg, r, sd)
}

/// As [`run_replicate`], with the MH proposal sd already tuned.
pub fn run_replicate_tuned(
    cfg: &StudyConfig,
    r: usize,
    proposal_sd: Option<f64>,
) -> Result<ReplicateOutcome> {
    cfg.validate()?;
    if r >= cfg.replicates {
        return Err(invalid(format!("replicate {r} out of range")));
    }
    let (sample, acceptance) = replicate_sample(cfg, r, proposal_sd)?;
    let draws_iat = iat(sample.values(), &cfg.zeta_spec)?;
    let base = cfg.selector_config(Method::SjSe, &sample);
    let grid = EvaluationGrid::for_sample(&sample, base.search_hi, cfg.grid_points)?;
    let ise = IseEvaluator::new(&sample, &cfg.target, &grid, cfg.ise_exact_limit)?;
    let mut cache = ZetaCache::for_config(&sample, &base);

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &method in &cfg.methods {
        let result = match method {
            StudyMethod::Target => target_with(&ise, &base).and_then(|res| {
                let zeta = cache.zeta(res.h)?;
                Ok((res.h, res.objective_at_h, zeta))
            }),
            StudyMethod::Select(m) => {
                select_with_cache(&sample, &base.with_method(m), &mut cache).and_then(|res| {
                    let zeta = if m.is_modified() {
                        res.zeta_at_h
                    } else {
                        cache.zeta(res.h)?
                    };
                    Ok((res.h, ise.ise(res.h)?, zeta))
                })
            }
            StudyMethod::Thin => thinned(cfg, &sample, &grid),
        };
        match result {
            Ok((h, ise, zeta)) => records.push(ReplicateRecord {
                method,
                replicate: r,
                h,
                ise,
                zeta,
                acceptance,
                iat: draws_iat,
            }),
            Err(e) => failures.push(MethodFailure {
                method,
                replicate: r,
                error: e.to_string(),
            }),
        }
    }
    Ok(ReplicateOutcome {
        replicate: r,
        acceptance,
        iat: draws_iat,
        records,
        failures,
    })
}

/// As [`run_replicate_tuned`], except that a replicate which cannot be set
/// up at all (for instance its sample fails validation) comes back as a
/// failure of every method instead of an error.
pub fn replicate_outcome(cfg: &StudyConfig, r: usize, proposal_sd: Option<f64>) -> ReplicateOutcome {
    run_replicate_tuned(cfg, r, proposal_sd).unwrap_or_else(|e| ReplicateOutcome {
        replicate: r,
        acceptance: f64::NAN,
        iat: f64::NAN,
        records: Vec::new(),
        failures: cfg
            .methods
            .iter()
            .map(|&method| MethodFailure {
                method,
                replicate: r,
                error: e.to_string(),
            })
            .collect(),
    })
}

fn thinned(cfg: &StudyConfig, sample: &Sample, grid: &EvaluationGrid) -> Result<(f64, f64, f64)> {
    let kept = thin(sample, cfg.thin_k)?;
    let res = select(&kept, &cfg.selector_config(Method::SjSe, &kept))?;
    let ise = IseEvaluator::new(&kept, &cfg.target, grid, cfg.ise_exact_limit)?.ise(res.h)?;
    let zeta = ZetaEstimator::new(&kept, cfg.zeta_spec, cfg.zeta_points).zeta(res.h)?;
    Ok((res.h, ise, zeta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: StudyMethod,
    /// Replicates with a record for this method.
    pub replicates: usize,
    pub failures: usize,
    pub mean_h: f64,
    /// sd/√replicates; absent with fewer than two records.
    pub se_h: Option<f64>,
    pub mean_ise: f64,
    pub se_ise: Option<f64>,
    pub mean_zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub methods: Vec<MethodSummary>,
    /// In replicate order.
    pub outcomes: Vec<ReplicateOutcome>,
}

impl ReplicateSummary {
    /// Aggregates outcomes in replicate order, whatever order they arrive in.
    pub fn from_outcomes(methods: &[StudyMethod], mut outcomes: Vec<ReplicateOutcome>) -> Self {
        outcomes.sort_by_key(|o| o.replicate);
        Self {
            methods: summarize(methods, &outcomes),
            outcomes,
        }
    }

    pub fn method(&self, method: StudyMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn records(&self) -> impl Iterator<Item = &ReplicateRecord> {
        self.outcomes.iter().flat_map(|o| o.records.iter())
    }

    /// One method's records, in replicate order.
    pub fn records_for(&self, method: StudyMethod) -> impl Iterator<Item = &ReplicateRecord> {
        self.records().filter(move |r| r.method == method)
    }

    pub fn total_failures(&self) -> usize {
        self.outcomes.iter().map(|o| o.failures.len()).sum()
    }
}

fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

pub fn summarize(methods: &[StudyMethod], outcomes: &[ReplicateOutcome]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let records: Vec<&ReplicateRecord> = outcomes
                .iter()
                .flat_map(|o| o.records.iter())
                .filter(|r| r.method == method)
                .collect();
            let failures = outcomes
                .iter()
                .flat_map(|o| o.failures.iter())
                .filter(|f| f.method == method)
                .count();
            let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
            let ises: Vec<f64> = records.iter().map(|r| r.ise).collect();
            let zetas: Vec<f64> = records.iter().map(|r| r.zeta).collect();
            let (mean_h, se_h) = mean_and_se(&hs);
            let (mean_ise, se_ise) = mean_and_se(&ises);
            MethodSummary {
                method,
                replicates: records.len(),
                failures,
                mean_h,
                se_h,
                mean_ise,
                se_ise,
                mean_zeta: mean_and_se(&zetas).0,
            }
        })
        .collect()
}

/// Runs every replicate in turn. The `depkde` crate runs them in parallel.
pub fn run_study(cfg: &StudyConfig) -> Result<ReplicateSummary> {
    cfg.validate()?;
    let sd = match cfg.sampler {
        SamplerKind::Mh => Some(cfg.tuned_proposal_sd()?),
        SamplerKind::Iid => None,
    };
    let outcomes = (0..cfg.replicates)
        .map(|r| replicate_outcome(cfg, r, sd))
        .collect();
    Ok(ReplicateSummary::from_outcomes(&cfg.methods, outcomes))
}

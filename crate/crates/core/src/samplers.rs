//! Target densities with exact samplers, a random-walk Metropolis-Hastings
//! sampler with acceptance-rate tuning, and thinning.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::density::Sample;
use crate::error::{invalid, Error, Result};
use crate::kernel::INV_SQRT_2PI;

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetDistribution {
    Normal {
        mean: f64,
        sd: f64,
    },
    Mixture(Vec<MixtureComponent>),
    /// exp(Z) with Z ~ N(mu, sigma²).
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

#[inline]
fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    INV_SQRT_2PI * (-0.5 * z * z).exp() / sd
}

#[inline]
fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * libm::erfc(-(x - mean) / (sd * core::f64::consts::SQRT_2))
}

impl TargetDistribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        check_scale("sd", sd)?;
        Ok(Self::Normal { mean, sd })
    }

    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for c in &components {
            check_scale("component sd", c.sd)?;
            if !(c.weight > 0.0) {
                return Err(invalid(format!(
                    "mixture weight must be positive, got {}",
                    c.weight
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self::Mixture(components))
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        check_scale("sigma", sigma)?;
        Ok(Self::LogNormal { mu, sigma })
    }

    /// N(3, 2²).
    pub fn study_normal() -> Self {
        Self::Normal { mean: 3.0, sd: 2.0 }
    }

    /// 0.7·N(0, 1) + 0.3·N(4, 1).
    pub fn study_mixture() -> Self {
        Self::Mixture(alloc::vec![
            MixtureComponent {
                weight: 0.7,
                mean: 0.0,
                sd: 1.0
            },
            MixtureComponent {
                weight: 0.3,
                mean: 4.0,
                sd: 1.0
            },
        ])
    }

    /// Log-normal whose underlying normal has mean 1 and variance 0.09.
    pub fn study_log_normal() -> Self {
        Self::LogNormal { mu: 1.0, sigma: 0.3 }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, sd } => normal_pdf(x, *mean, *sd),
            Self::Mixture(cs) => cs.iter().map(|c| c.weight * normal_pdf(x, c.mean, c.sd)).sum(),
            Self::LogNormal { mu, sigma } => {
                if x > 0.0 {
                    normal_pdf(x.ln(), *mu, *sigma) / x
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, sd } => normal_cdf(x, *mean, *sd),
            Self::Mixture(cs) => cs.iter().map(|c| c.weight * normal_cdf(x, c.mean, c.sd)).sum(),
            Self::LogNormal { mu, sigma } => {
                if x > 0.0 {
                    normal_cdf(x.ln(), *mu, *sigma)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Normal { mean, .. } => *mean,
            Self::Mixture(cs) => cs.iter().map(|c| c.weight * c.mean).sum(),
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            Self::Normal { sd, .. } => *sd,
            Self::Mixture(cs) => {
                let m = self.mean();
                let second: f64 = cs
                    .iter()
                    .map(|c| c.weight * (c.sd * c.sd + c.mean * c.mean))
                    .sum();
                (second - m * m).sqrt()
            }
            Self::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((s2.exp() - 1.0) * (2.0 * mu + s2).exp()).sqrt()
            }
        }
    }

    /// Interval holding all but about 1e-12 of the mass.
    pub fn effective_support(&self) -> (f64, f64) {
        const Z: f64 = 7.1;
        match self {
            Self::Normal { mean, sd } => (mean - Z * sd, mean + Z * sd),
            Self::Mixture(cs) => cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.mean - Z * c.sd), hi.max(c.mean + Z * c.sd))
            }),
            Self::LogNormal { mu, sigma } => ((mu - Z * sigma).exp(), (mu + Z * sigma).exp()),
        }
    }

    /// One exact draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self {
            Self::Normal { mean, sd } => mean + sd * z,
            Self::Mixture(cs) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = cs[cs.len() - 1];
                for c in cs {
                    acc += c.weight;
                    if u < acc {
                        chosen = *c;
                        break;
                    }
                }
                chosen.mean + chosen.sd * z
            }
            Self::LogNormal { mu, sigma } => (mu + sigma * z).exp(),
        }
    }
}

/// Deterministic generator for stream `stream` of `seed`; distinct streams
/// are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn iid_sample(target: &TargetDistribution, n: usize, seed: u64) -> Result<Sample> {
    iid_sample_with(target, n, &mut stream_rng(seed, 0))
}

pub fn iid_sample_with<R: Rng + ?Sized>(
    target: &TargetDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Sample> {
    if n < 2 {
        return Err(invalid(format!("need at least 2 draws, got {n}")));
    }
    Sample::new((0..n).map(|_| target.draw(rng)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub proposal_sd: f64,
    pub n_draws: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream: u64,
    /// Inclusive acceptance-rate band the tuner aims for.
    pub target_acceptance: (f64, f64),
}

impl MhConfig {
    pub fn new(n_draws: usize, seed: u64) -> Self {
        Self {
            proposal_sd: 1.0,
            n_draws,
            burn_in: 0,
            seed,
            stream: 0,
            target_acceptance: (0.20, 0.25),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MhChain {
    pub sample: Sample,
    pub acceptance_rate: f64,
}

/// Draws kept by the tuning pilot chain.
pub const PILOT_DRAWS: usize = 10_000;
pub const MAX_TUNING_STEPS: usize = 40;
const TUNING_STREAM: u64 = u64::MAX;

fn log_density(target: &TargetDistribution, x: f64) -> f64 {
    match target {
        TargetDistribution::Normal { mean, sd } => {
            let z = (x - mean) / sd;
            -0.5 * z * z
        }
        _ => target.pdf(x).ln(),
    }
}

fn run_chain<R: Rng + ?Sized>(
    target: &TargetDistribution,
    proposal_sd: f64,
    burn_in: usize,
    n_draws: usize,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let mut current = target.draw(rng);
    let mut current_ld = log_density(target, current);
    let mut accepted = 0usize;
    let mut draws = Vec::with_capacity(n_draws);
    for step in 0..burn_in + n_draws {
        let z: f64 = StandardNormal.sample(rng);
        let proposal = current + proposal_sd * z;
        let proposal_ld = log_density(target, proposal);
        let u: f64 = rng.random();
        if proposal_ld.is_finite() && u.ln() < proposal_ld - current_ld {
            current = proposal;
            current_ld = proposal_ld;
            if step >= burn_in {
                accepted += 1;
            }
        }
        if step >= burn_in {
            draws.push(current);
        }
    }
    let rate = accepted as f64 / n_draws.max(1) as f64;
    (draws, rate)
}

/// Random-walk Metropolis-Hastings with Gaussian increments, started from an
/// exact draw of the target.
pub fn mh_sample(target: &TargetDistribution, cfg: &MhConfig) -> Result<MhChain> {
    check_scale("proposal_sd", cfg.proposal_sd)?;
    if cfg.n_draws < 2 {
        return Err(invalid(format!("need at least 2 draws, got {}", cfg.n_draws)));
    }
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let (draws, acceptance_rate) = run_chain(target, cfg.proposal_sd, cfg.burn_in, cfg.n_draws, &mut rng);
    Ok(MhChain {
        sample: Sample::new(draws)?,
        acceptance_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningOutcome {
    pub proposal_sd: f64,
    pub acceptance_rate: f64,
    pub steps: usize,
}

/// Bisection on log proposal sd until a pilot chain of [`PILOT_DRAWS`]
/// draws accepts at a rate in the middle half of `cfg.target_acceptance`.
/// Aiming at the middle leaves room for the rate of later chains, which
/// use other random numbers, to stay inside the band. Every step reuses the
/// same pilot random numbers, so the rate is monotone in the proposal sd.
/// If bisection runs out of steps, the last in-band proposal is returned.
pub fn tune_proposal_traced(target: &TargetDistribution, cfg: &MhConfig) -> Result<TuningOutcome> {
    let (lo_rate, hi_rate) = cfg.target_acceptance;
    if !(0.0 < lo_rate && lo_rate <= hi_rate && hi_rate < 1.0) {
        return Err(invalid(format!(
            "acceptance band must satisfy 0 < lo <= hi < 1, got [{lo_rate}, {hi_rate}]"
        )));
    }
    let mid = 0.5 * (lo_rate + hi_rate);
    let slack = 0.25 * (hi_rate - lo_rate);
    let scale = target.sd();
    let mut log_lo = (1e-3 * scale).ln();
    let mut log_hi = (1e3 * scale).ln();
    let mut last = (scale, f64::NAN);
    let mut in_band = None;
    for step in 1..=MAX_TUNING_STEPS {
        let sd = (0.5 * (log_lo + log_hi)).exp();
        let mut rng = stream_rng(cfg.seed, TUNING_STREAM);
        let (_, rate) = run_chain(target, sd, 0, PILOT_DRAWS, &mut rng);
        last = (sd, rate);
        let outcome = TuningOutcome {
            proposal_sd: sd,
            acceptance_rate: rate,
            steps: step,
        };
        if (lo_rate..=hi_rate).contains(&rate) {
            in_band = Some(outcome);
        }
        if rate > mid + slack {
            log_lo = sd.ln();
        } else if rate < mid - slack {
            log_hi = sd.ln();
        } else {
            return Ok(outcome);
        }
    }
    in_band.ok_or(Error::Tuning {
        steps: MAX_TUNING_STEPS,
        last_sd: last.0,
        last_acceptance: last.1,
    })
}

pub fn tune_proposal(target: &TargetDistribution, cfg: &MhConfig) -> Result<f64> {
    tune_proposal_traced(target, cfg).map(|t| t.proposal_sd)
}

/// Keeps draws k, 2k, 3k, … (1-based), preserving order.
pub fn thin(sample: &Sample, k: usize) -> Result<Sample> {
    if k == 0 {
        return Err(invalid("thinning interval must be at least 1"));
    }
    if sample.len() / k < 2 {
        return Err(Error::DegenerateSample(format!(
            "thinning {} draws by {k} leaves fewer than 2",
            sample.len()
        )));
    }
    Sample::new(sample.values().iter().skip(k - 1).step_by(k).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::{iat, AutocorrSpec};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn targets() -> [TargetDistribution; 3] {
        [
            TargetDistribution::study_normal(),
            TargetDistribution::study_mixture(),
            TargetDistribution::study_log_normal(),
        ]
    }

    #[test]
    fn pdfs_integrate_to_one() {
        for t in targets() {
            let (lo, hi) = t.effective_support();
            let lo = lo.min(0.0);
            assert!(
                (simpson(|x| t.pdf(x), lo, hi, 40_000) - 1.0).abs() < 1e-8,
                "{t:?}"
            );
        }
    }

    #[test]
    fn pdf_values() {
        let t = TargetDistribution::study_normal();
        assert!((t.pdf(3.0) - 1.0 / (2.0 * core::f64::consts::PI * 4.0).sqrt()).abs() < 1e-15);
        let m = TargetDistribution::study_mixture();
        let first = 0.7 * normal_pdf(-6.0, 0.0, 1.0);
        assert!((m.pdf(-6.0) - first) / first < 1e-6);
        let ln = TargetDistribution::study_log_normal();
        assert_eq!(ln.pdf(0.0), 0.0);
        assert_eq!(ln.pdf(-1.0), 0.0);
        assert!((ln.mean() - (1.0f64 + 0.045).exp()).abs() < 1e-14);
        assert!((ln.mean() - 2.843_398_523_651_769).abs() < 1e-12);
    }

    #[test]
    fn constructors_validate() {
        assert!(TargetDistribution::normal(0.0, 0.0).is_err());
        assert!(TargetDistribution::log_normal(0.0, -1.0).is_err());
        let c = |w| MixtureComponent {
            weight: w,
            mean: 0.0,
            sd: 1.0,
        };
        assert!(TargetDistribution::mixture(alloc::vec![c(0.5), c(0.4)]).is_err());
        assert!(TargetDistribution::mixture(alloc::vec![c(0.5), c(0.5)]).is_ok());
    }

    #[test]
    fn log_normal_mean_by_simulation() {
        let t = TargetDistribution::study_log_normal();
        let s = iid_sample(&t, 1_000_000, 5).unwrap();
        assert!((s.mean() - t.mean()).abs() < 0.01);
    }

    #[test]
    fn iid_normal_moments_and_determinism() {
        let t = TargetDistribution::study_normal();
        let s = iid_sample(&t, 1_000_000, 12).unwrap();
        assert!((s.mean() - 3.0).abs() < 0.01);
        assert!((s.sd() - 2.0).abs() < 0.01);
        assert_eq!(iid_sample(&t, 100, 3).unwrap(), iid_sample(&t, 100, 3).unwrap());
        assert_ne!(iid_sample(&t, 100, 3).unwrap(), iid_sample(&t, 100, 4).unwrap());
    }

    fn ks_statistic(values: &[f64], t: &TargetDistribution) -> f64 {
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let n = sorted.len() as f64;
        sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
            let f = t.cdf(x);
            d.max((f - i as f64 / n).abs())
                .max(((i + 1) as f64 / n - f).abs())
        })
    }

    #[test]
    fn iid_samples_pass_ks() {
        for t in targets() {
            let s = iid_sample(&t, 100_000, 99).unwrap();
            assert!(ks_statistic(s.values(), &t) < 1.63 / (1e5f64).sqrt(), "{t:?}");
        }
    }

    #[test]
    fn tuning_hits_band_and_is_deterministic() {
        let t = TargetDistribution::study_normal();
        let cfg = MhConfig::new(10_000, 17);
        let tuned = tune_proposal_traced(&t, &cfg).unwrap();
        assert_eq!(tune_proposal(&t, &cfg).unwrap(), tuned.proposal_sd);
        let fresh = mh_sample(
            &t,
            &MhConfig {
                proposal_sd: tuned.proposal_sd,
                seed: 1234,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert!(
            (0.19..=0.26).contains(&fresh.acceptance_rate),
            "{}",
            fresh.acceptance_rate
        );

        let wide = MhConfig {
            target_acceptance: (0.1, 0.5),
            ..cfg
        };
        assert!(tune_proposal_traced(&t, &wide).unwrap().steps <= tuned.steps);
    }

    #[test]
    fn chain_is_reproducible() {
        let t = TargetDistribution::study_mixture();
        let cfg = MhConfig {
            proposal_sd: 4.0,
            ..MhConfig::new(5000, 8)
        };
        let a = mh_sample(&t, &cfg).unwrap();
        let b = mh_sample(&t, &cfg).unwrap();
        assert_eq!(a.sample, b.sample);
        assert_eq!(a.acceptance_rate.to_bits(), b.acceptance_rate.to_bits());
    }

    #[test]
    fn thinned_chain_marginal_passes_ks() {
        let t = TargetDistribution::study_normal();
        let mut cfg = MhConfig::new(100_000, 5);
        cfg.proposal_sd = tune_proposal(&t, &cfg).unwrap();
        let chain = mh_sample(&t, &cfg).unwrap();
        let thinned = thin(&chain.sample, 25).unwrap();
        let d = ks_statistic(thinned.values(), &t);
        // 0.1% critical value
        assert!(d < 1.95 / (thinned.len() as f64).sqrt(), "D = {d}");
    }

    #[test]
    fn detailed_balance_flows() {
        let t = TargetDistribution::study_normal();
        let cfg = MhConfig {
            proposal_sd: 6.0,
            ..MhConfig::new(400_000, 21)
        };
        let chain = mh_sample(&t, &cfg).unwrap();
        let v = chain.sample.values();
        let in_a = |x: f64| (0.0..2.0).contains(&x);
        let in_b = |x: f64| (4.0..7.0).contains(&x);
        let mut ab: f64 = 0.0;
        let mut ba = 0.0;
        for w in v.windows(2) {
            if in_a(w[0]) && in_b(w[1]) {
                ab += 1.0;
            }
            if in_b(w[0]) && in_a(w[1]) {
                ba += 1.0;
            }
        }
        assert!(ab > 100.0);
        assert!((ab - ba).abs() < 3.0 * (ab + ba).sqrt(), "{ab} vs {ba}");
    }

    #[test]
    fn thinning() {
        let s = Sample::new((0..10_000).map(|i| i as f64).collect()).unwrap();
        assert_eq!(thin(&s, 1).unwrap(), s);
        let t = thin(&s, 5).unwrap();
        assert_eq!(t.len(), 2000);
        assert_eq!(&t.values()[..3], &[4.0, 9.0, 14.0]);
        assert!(thin(&s, 0).is_err());
        assert!(thin(&s, 6000).is_err());
    }

    #[test]
    fn thinning_reduces_iat() {
        let t = TargetDistribution::study_normal();
        let mut cfg = MhConfig::new(20_000, 44);
        cfg.proposal_sd = tune_proposal(&t, &cfg).unwrap();
        let chain = mh_sample(&t, &cfg).unwrap();
        let spec = AutocorrSpec::default();
        let parent = iat(chain.sample.values(), &spec).unwrap();
        let thinned = iat(thin(&chain.sample, 5).unwrap().values(), &spec).unwrap();
        assert!(thinned < parent, "{thinned} vs {parent}");
    }
}

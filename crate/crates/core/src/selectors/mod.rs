//! The six bandwidth selectors.
//!
//! Each standard selector has a dependence-aware twin whose criterion has
//! its variance term multiplied by ζ̂(h). With ζ̂ ≡ 1 the twin reproduces the
//! standard selector bit for bit.

mod plugin;
mod search;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

pub use plugin::{
    bcv_objective, g_hat, mbcv_objective, msj_objective, pilot_bandwidths, s_functional, sj_objective,
    t_functional, Objectives, PilotBandwidths, PluginEstimates,
};
pub use search::{find_root, minimize, Boundary, Bracket, SearchOutcome};

use crate::density::Sample;
use crate::dependence::{AutocorrSpec, ZetaEstimator, DEFAULT_ZETA_POINTS};
use crate::error::{invalid, Error, Result};
use crate::pairs::{Diagonal, PairSumMode};

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bcv,
    MBcv,
    SjSe,
    MSjSe,
    SjMin,
    MSjMin,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Bcv,
        Method::MBcv,
        Method::SjSe,
        Method::MSjSe,
        Method::SjMin,
        Method::MSjMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bcv => "BCV",
            Method::MBcv => "mBCV",
            Method::SjSe => "SJse",
            Method::MSjSe => "mSJse",
            Method::SjMin => "SJmin",
            Method::MSjMin => "mSJmin",
        }
    }

    /// Whether the criterion carries the ζ̂ factor.
    pub fn is_modified(self) -> bool {
        matches!(self, Method::MBcv | Method::MSjSe | Method::MSjMin)
    }

    /// The selector with the same criterion and ζ fixed at 1.
    pub fn standard(self) -> Method {
        match self {
            Method::MBcv => Method::Bcv,
            Method::MSjSe => Method::SjSe,
            Method::MSjMin => Method::SjMin,
            m => m,
        }
    }

    pub fn modified(self) -> Method {
        match self {
            Method::Bcv => Method::MBcv,
            Method::SjSe => Method::MSjSe,
            Method::SjMin => Method::MSjMin,
            m => m,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorConfig {
    pub method: Method,
    pub search_lo: f64,
    pub search_hi: f64,
    /// Width of the final bracket for minimisers, bound on |residual| for
    /// solve-the-equation selectors.
    pub tol: f64,
    pub coarse_points: usize,
    pub zeta_spec: AutocorrSpec,
    /// Grid points ζ̂ is integrated over.
    pub zeta_points: usize,
    pub diagonal: Diagonal,
    pub pair_mode: PairSumMode,
}

pub const DEFAULT_COARSE_POINTS: usize = 40;

impl SelectorConfig {
    /// Bracket [0.05, 5]·ĥ_NS and tolerance 1e-4·ĥ_NS around the sample's
    /// normal-scale bandwidth.
    pub fn for_sample(method: Method, sample: &Sample) -> Self {
        let h_ns = sample.normal_scale_bandwidth();
        Self {
            method,
            search_lo: 0.05 * h_ns,
            search_hi: 5.0 * h_ns,
            tol: 1e-4 * h_ns,
            coarse_points: DEFAULT_COARSE_POINTS,
            zeta_spec: AutocorrSpec::default(),
            zeta_points: DEFAULT_ZETA_POINTS,
            diagonal: Diagonal::Include,
            pair_mode: PairSumMode::default(),
        }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    pub fn bracket(&self) -> Bracket {
        Bracket {
            lo: self.search_lo,
            hi: self.search_hi,
            tol: self.tol,
            coarse_points: self.coarse_points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bracket().validate()?;
        if self.tol < 1e-6 * self.search_lo {
            return Err(invalid(format!(
                "tolerance {} is below 1e-6 times the lower search bound",
                self.tol
            )));
        }
        if self.zeta_points < 2 {
            return Err(invalid("zeta grid needs at least 2 points"));
        }
        Ok(())
    }
}

/// Departures from the plain search path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SelectorFlags {
    /// Several sign changes of the bandwidth equation; the one nearest ĥ_NS was kept.
    pub multiple_roots: bool,
    /// The equation had no root, so the criterion was minimised instead.
    pub minimized_instead: bool,
    /// S(a) or T(b) was not positive and ĥ_NS was returned.
    pub normal_scale_fallback: bool,
}

impl SelectorFlags {
    pub fn any(&self) -> bool {
        self.multiple_roots || self.minimized_instead || self.normal_scale_fallback
    }

    pub fn describe(&self) -> String {
        let mut parts = alloc::vec::Vec::new();
        if self.multiple_roots {
            parts.push("multiple_roots");
        }
        if self.minimized_instead {
            parts.push("minimized_instead");
        }
        if self.normal_scale_fallback {
            parts.push("normal_scale_fallback");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorResult {
    pub method: Method,
    pub h: f64,
    /// Criterion value at `h`; for solve-the-equation selectors, the
    /// residual h − rhs(h). NaN after a normal-scale fallback.
    pub objective_at_h: f64,
    /// ζ̂(h), or 1 for the standard selectors.
    pub zeta_at_h: f64,
    /// Criterion or residual evaluations.
    pub evaluations: usize,
    pub converged: bool,
    pub boundary_hit: Boundary,
    pub flags: SelectorFlags,
}

/// ζ̂ evaluations for one sample, memoised on ln h to six decimals.
///
/// All selectors with the same bracket share the coarse grid, so one cache
/// passed to several modified selectors avoids most repeated work.
pub struct ZetaCache<'a> {
    estimator: ZetaEstimator<'a>,
    values: BTreeMap<i64, f64>,
    computed: usize,
}

impl<'a> ZetaCache<'a> {
    pub fn new(sample: &'a Sample, spec: AutocorrSpec, points: usize) -> Self {
        Self {
            estimator: ZetaEstimator::new(sample, spec, points),
            values: BTreeMap::new(),
            computed: 0,
        }
    }

    pub fn for_config(sample: &'a Sample, cfg: &SelectorConfig) -> Self {
        Self::new(sample, cfg.zeta_spec, cfg.zeta_points)
    }

    pub fn zeta(&mut self, h: f64) -> Result<f64> {
        let key = (h.ln() * 1e6).round() as i64;
        if let Some(&z) = self.values.get(&key) {
            return Ok(z);
        }
        let z = self.estimator.zeta(h)?;
        self.computed += 1;
        self.values.insert(key, z);
        Ok(z)
    }

    /// Distinct ζ̂ estimates computed so far.
    pub fn computed(&self) -> usize {
        self.computed
    }
}

pub fn select(sample: &Sample, cfg: &SelectorConfig) -> Result<SelectorResult> {
    let mut cache = ZetaCache::for_config(sample, cfg);
    select_with_cache(sample, cfg, &mut cache)
}

pub fn select_with_cache(
    sample: &Sample,
    cfg: &SelectorConfig,
    cache: &mut ZetaCache<'_>,
) -> Result<SelectorResult> {
    select_with_zeta(sample, cfg, &mut |h| cache.zeta(h))
}

/// Runs the selector with ζ supplied by the caller. The standard selectors
/// never call `zeta`.
pub fn select_with_zeta(
    sample: &Sample,
    cfg: &SelectorConfig,
    zeta: &mut dyn FnMut(f64) -> Result<f64>,
) -> Result<SelectorResult> {
    cfg.validate()?;
    let method = cfg.method;
    let modified = method.is_modified();
    let mut zeta_at = |h: f64| if modified { zeta(h) } else { Ok(1.0) };
    let obj = Objectives::new(sample, cfg.pair_mode, cfg.diagonal);
    let bracket = cfg.bracket();

    let plugin = match method.standard() {
        Method::Bcv => None,
        _ => match obj.plugin() {
            Ok(p) => Some(p),
            Err(Error::PilotFailure { .. }) => {
                let h = sample
                    .normal_scale_bandwidth()
                    .clamp(cfg.search_lo, cfg.search_hi);
                return Ok(SelectorResult {
                    method,
                    h,
                    objective_at_h: f64::NAN,
                    zeta_at_h: zeta_at(h)?,
                    evaluations: 0,
                    converged: false,
                    boundary_hit: Boundary::None,
                    flags: SelectorFlags {
                        normal_scale_fallback: true,
                        ..SelectorFlags::default()
                    },
                });
            }
            Err(e) => return Err(e),
        },
    };

    let mut flags = SelectorFlags::default();
    let outcome = match (method.standard(), plugin) {
        (Method::Bcv, _) => minimize(&mut |h| Ok(obj.bcv(h, zeta_at(h)?)), &bracket)?,
        (Method::SjMin, Some(p)) => minimize(&mut |h| Ok(obj.sj(h, &p, zeta_at(h)?)), &bracket)?,
        (Method::SjSe, Some(p)) => {
            let anchor = sample.normal_scale_bandwidth();
            match find_root(&mut |h| Ok(h - obj.sj_rhs(h, &p, zeta_at(h)?)), &bracket, anchor) {
                Ok(o) => {
                    flags.multiple_roots = o.multiple_roots;
                    o
                }
                Err(Error::RootNotFound { .. }) => {
                    flags.minimized_instead = true;
                    minimize(&mut |h| Ok(obj.sj(h, &p, zeta_at(h)?)), &bracket)?
                }
                Err(e) => return Err(e),
            }
        }
        _ => unreachable!("plug-in estimates exist for every SJ method"),
    };
    Ok(SelectorResult {
        method,
        h: outcome.h,
        objective_at_h: outcome.value,
        zeta_at_h: zeta_at(outcome.h)?,
        evaluations: outcome.evaluations,
        converged: outcome.converged && !flags.minimized_instead,
        boundary_hit: outcome.boundary,
        flags,
    })
}

/// Solve h = {R(K)ζ(h)/(nμ₂²S(ĝ(h)))}^(1/5) with ζ ≡ 1 (`modified` false) or
/// ζ̂ estimated from the sample.
pub fn solve_the_equation(sample: &Sample, modified: bool) -> Result<SelectorResult> {
    let method = if modified { Method::MSjSe } else { Method::SjSe };
    select(sample, &SelectorConfig::for_sample(method, sample))
}

/// Minimise a criterion over the configured bracket.
pub fn minimize_objective(
    objective: &mut dyn FnMut(f64) -> Result<f64>,
    cfg: &SelectorConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    minimize(objective, &cfg.bracket())
}

//! Serial dependence: autocorrelations, the integrated autocorrelation time
//! (IAT) of a series, the IAT of the kernel at a point, and the variance
//! inflation factor ζ̂ that the modified selectors use.
//!
//! The IAT uses Bartlett lag weights,
//!
//! ```text
//! τ̂ = Σ_{t=−L}^{L} (1 − |t|/n) ρ̂(|t|)
//! ```
//!
//! With `L = n − 1` ([`LagWindow::Full`]) this is the untruncated sum. The
//! default [`LagWindow::Adaptive`] stops at the end of the initial positive
//! sequence of paired autocorrelations, because the long-lag terms are
//! mostly noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::density::{EvaluationGrid, Sample};
use crate::error::{check_bandwidth, invalid, Error, Result};
use crate::fft::AutocovWorkspace;
use crate::kernel::gauss_pdf;

/// How many lags enter the IAT sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LagWindow {
    /// Stop before the first adjacent pair ρ̂(2k) + ρ̂(2k+1) that is not positive.
    #[default]
    Adaptive,
    /// All lags up to n − 1.
    Full,
    /// Lags up to the given value, clamped to n − 1.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrSpec {
    pub max_lag: LagWindow,
    /// IAT reported for a series with (numerically) zero variance.
    pub degenerate_value: f64,
}

impl Default for AutocorrSpec {
    fn default() -> Self {
        Self {
            max_lag: LagWindow::Adaptive,
            degenerate_value: 1.0,
        }
    }
}

impl AutocorrSpec {
    pub fn full() -> Self {
        Self {
            max_lag: LagWindow::Full,
            ..Self::default()
        }
    }
}

/// var(z)/mean(z²) below this counts as zero variance.
const DEGENERATE_RATIO: f64 = 1e-12;
/// Series whose entries all fall below this carry no information.
const NEGLIGIBLE: f64 = 1e-300;

fn is_degenerate(series: &[f64]) -> bool {
    let n = series.len() as f64;
    if series.iter().all(|v| v.abs() < NEGLIGIBLE) {
        return true;
    }
    let mean = series.iter().sum::<f64>() / n;
    let mean_sq = series.iter().map(|v| v * v).sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    !(mean_sq > 0.0) || var / mean_sq < DEGENERATE_RATIO
}

/// ρ̂(0..=max_lag) from the biased autocovariance with the overall mean
/// removed, computed by FFT.
pub fn sample_autocorr(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(invalid(format!(
            "autocorrelation needs at least 2 values, got {n}"
        )));
    }
    if max_lag > n - 1 {
        return Err(invalid(format!("max_lag {max_lag} exceeds n - 1 = {}", n - 1)));
    }
    if is_degenerate(series) {
        return Err(Error::DegenerateSeries);
    }
    let mut acov = vec![0.0; n];
    AutocovWorkspace::new(n).autocov(series, &mut acov);
    Ok(normalise(&acov[..=max_lag], acov[0]))
}

fn normalise(acov: &[f64], var: f64) -> Vec<f64> {
    acov.iter().map(|g| g / var).collect()
}

/// Last lag kept by the initial-positive-sequence rule.
fn adaptive_lag(rho: &[f64]) -> usize {
    let max = rho.len() - 1;
    let mut k = 0;
    while 2 * k < max {
        if rho[2 * k] + rho[2 * k + 1] <= 0.0 {
            break;
        }
        k += 1;
    }
    // Pairs 0..k are positive: lags 0..=2k-1, plus a trailing odd lag if the
    // series ran out mid-pair.
    if 2 * k >= max {
        max
    } else {
        (2 * k).saturating_sub(1)
    }
}

fn resolve_lag(window: LagWindow, rho: &[f64]) -> usize {
    let max = rho.len() - 1;
    match window {
        LagWindow::Full => max,
        LagWindow::Fixed(l) => l.min(max),
        LagWindow::Adaptive => adaptive_lag(rho),
    }
}

/// Σ_{t=−L}^{L} (1 − |t|/n) ρ̂(|t|), summed from t = −L upwards.
pub fn bartlett_iat(rho: &[f64], lag: usize, n: usize) -> f64 {
    let n = n as f64;
    let lag = lag as isize;
    let mut total = 0.0;
    for t in -lag..=lag {
        let a = t.unsigned_abs();
        total += (1.0 - a as f64 / n) * rho[a];
    }
    total
}

fn iat_from_acov(acov: &[f64], spec: &AutocorrSpec) -> f64 {
    let rho = normalise(acov, acov[0]);
    let lag = resolve_lag(spec.max_lag, &rho);
    bartlett_iat(&rho, lag, acov.len())
}

/// Integrated autocorrelation time; a zero-variance series yields
/// `spec.degenerate_value`.
pub fn iat(series: &[f64], spec: &AutocorrSpec) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(invalid(format!("IAT needs at least 2 values, got {n}")));
    }
    if let LagWindow::Fixed(l) = spec.max_lag {
        if l > n - 1 {
            return Err(invalid(format!("max_lag {l} exceeds n - 1 = {}", n - 1)));
        }
    }
    if is_degenerate(series) {
        return Ok(spec.degenerate_value);
    }
    let mut acov = vec![0.0; n];
    AutocovWorkspace::new(n).autocov(series, &mut acov);
    Ok(iat_from_acov(&acov, spec))
}

fn kernel_series(sample: &Sample, h: f64, x: f64, out: &mut [f64]) {
    let inv_h = 1.0 / h;
    for (z, y) in out.iter_mut().zip(sample.values()) {
        *z = gauss_pdf((x - y) * inv_h) * inv_h;
    }
}

/// τ̂ₙ(K_{h,x}): the IAT of z_i = K_h(x − Y_i) taken in draw order.
pub fn kernel_iat(sample: &Sample, h: f64, x: f64, spec: &AutocorrSpec) -> Result<f64> {
    check_bandwidth(h)?;
    let mut z = vec![0.0; sample.len()];
    kernel_series(sample, h, x, &mut z);
    iat(&z, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaEstimate {
    /// ∫ τ̂ₙ(K_{h,x}) f̂_h(x) dx by the trapezoidal rule.
    pub value: f64,
    pub grid: EvaluationGrid,
    pub per_point_iat: Vec<f64>,
    /// f̂_h at the grid points.
    pub density: Vec<f64>,
}

/// Points in the grid ζ̂ is integrated over.
pub const DEFAULT_ZETA_POINTS: usize = 256;

/// Adaptive windows that close within this many lags are summed directly;
/// longer ones go through the FFT.
const DIRECT_LAG_LIMIT: usize = 160;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Adaptive-window IAT from lags computed one at a time, or `None` if the
/// window runs past `DIRECT_LAG_LIMIT` or the end of the series.
fn direct_adaptive_iat(series: &[f64], centered: &mut Vec<f64>, rho: &mut Vec<f64>) -> Option<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    centered.clear();
    centered.extend(series.iter().map(|z| z - mean));
    let c = &centered[..];
    let var = dot(c, c);
    let limit = DIRECT_LAG_LIMIT.min(n - 1);
    rho.clear();
    rho.push(1.0);
    let mut k = 0;
    loop {
        if 2 * k + 1 > limit {
            return None;
        }
        for t in rho.len()..=2 * k + 1 {
            rho.push(dot(&c[..n - t], &c[t..]) / var);
        }
        if rho[2 * k] + rho[2 * k + 1] <= 0.0 {
            break;
        }
        k += 1;
    }
    Some(bartlett_iat(rho, (2 * k).saturating_sub(1), n))
}

/// Evaluates ζ̂ repeatedly for one sample, reusing buffers.
pub struct ZetaEstimator<'a> {
    sample: &'a Sample,
    spec: AutocorrSpec,
    points: usize,
    workspace: AutocovWorkspace,
    series: [Vec<f64>; 2],
    acov: [Vec<f64>; 2],
    centered: Vec<f64>,
    rho: Vec<f64>,
}

impl<'a> ZetaEstimator<'a> {
    pub fn new(sample: &'a Sample, spec: AutocorrSpec, points: usize) -> Self {
        let n = sample.len();
        Self {
            sample,
            spec,
            points,
            workspace: AutocovWorkspace::new(n),
            series: [vec![0.0; n], vec![0.0; n]],
            acov: [vec![0.0; n], vec![0.0; n]],
            centered: Vec::with_capacity(n),
            rho: Vec::with_capacity(DIRECT_LAG_LIMIT + 1),
        }
    }

    /// ζ̂ at bandwidth `h` on the sample's padded grid for that `h`.
    pub fn zeta(&mut self, h: f64) -> Result<f64> {
        let grid = EvaluationGrid::for_sample(self.sample, h, self.points)?;
        Ok(self.estimate(h, &grid)?.value)
    }

    pub fn estimate(&mut self, h: f64, grid: &EvaluationGrid) -> Result<ZetaEstimate> {
        check_bandwidth(h)?;
        let m = grid.len();
        let n = self.sample.len() as f64;
        let mut per_point_iat = vec![0.0; m];
        let mut density = vec![0.0; m];
        // points whose IAT needs the full autocovariance
        let mut pending = Vec::new();
        for j in 0..m {
            let series = &mut self.series[0];
            kernel_series(self.sample, h, grid.point(j), series);
            density[j] = series.iter().sum::<f64>() / n;
            per_point_iat[j] = if is_degenerate(series) {
                self.spec.degenerate_value
            } else if self.spec.max_lag != LagWindow::Adaptive {
                pending.push(j);
                continue;
            } else if let Some(tau) = direct_adaptive_iat(series, &mut self.centered, &mut self.rho) {
                tau
            } else {
                pending.push(j);
                continue;
            };
        }
        for pair in pending.chunks(2) {
            let [first, second] = &mut self.series;
            let [acov_first, acov_second] = &mut self.acov;
            kernel_series(self.sample, h, grid.point(pair[0]), first);
            if let Some(&j) = pair.get(1) {
                kernel_series(self.sample, h, grid.point(j), second);
                self.workspace
                    .autocov_pair(first, Some(&second[..]), acov_first, Some(&mut acov_second[..]));
            } else {
                self.workspace.autocov_pair(first, None, acov_first, None);
            }
            for (&j, acov) in pair.iter().zip(&self.acov) {
                per_point_iat[j] = iat_from_acov(acov, &self.spec);
            }
        }
        let weighted: Vec<f64> = per_point_iat.iter().zip(&density).map(|(t, f)| t * f).collect();
        Ok(ZetaEstimate {
            value: grid.trapezoid(&weighted),
            grid: *grid,
            per_point_iat,
            density,
        })
    }
}

/// ζ̂ = ∫ τ̂ₙ(K_{h,x}) f̂_h(x) dx over `grid`.
pub fn zeta_hat(sample: &Sample, h: f64, grid: &EvaluationGrid, spec: &AutocorrSpec) -> Result<ZetaEstimate> {
    ZetaEstimator::new(sample, *spec, grid.len()).estimate(h, grid)
}

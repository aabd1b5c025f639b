//! Kernel density estimates, the roughness R(f̂″_h) of their second
//! derivative, and integrated squared error against a known density.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_bandwidth, invalid, Error, Result};
use crate::kernel::{conv_phi4, gauss_pdf};
use crate::pairs::{Diagonal, PairSumMode, PairwiseSums};
use crate::samplers::TargetDistribution;

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Ordered draws. Order is meaningful: it carries the serial dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    mean: f64,
    sd: f64,
    iqr: f64,
    min: f64,
    max: f64,
}

impl Sample {
    /// Requires at least two finite values with positive standard deviation.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DegenerateSample(format!(
                "need at least 2 draws, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateSample(format!("draw {i} is not finite")));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateSample("standard deviation is zero".into()));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        Ok(Self {
            mean,
            sd,
            iqr,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn sd(&self) -> f64 {
        self.sd
    }

    /// Interquartile range from linearly interpolated quantiles.
    pub fn iqr(&self) -> f64 {
        self.iqr
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// min(sd, IQR/1.349), falling back to sd when the IQR is zero.
    pub fn scale(&self) -> f64 {
        let robust = self.iqr / 1.349;
        if robust > 0.0 {
            self.sd.min(robust)
        } else {
            self.sd
        }
    }

    /// Normal-scale rule 1.06·scale·n^(−1/5).
    pub fn normal_scale_bandwidth(&self) -> f64 {
        1.06 * self.scale() * (self.len() as f64).powf(-0.2)
    }
}

/// Type-7 quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Uniform grid x_j = lo + j·spacing, j = 0..len.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationGrid {
    lo: f64,
    spacing: f64,
    len: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 2048;

impl EvaluationGrid {
    pub fn new(lo: f64, spacing: f64, len: usize) -> Result<Self> {
        if len == 0 || !(spacing > 0.0) || !lo.is_finite() || !spacing.is_finite() {
            return Err(invalid(format!(
                "grid needs len >= 1 and positive spacing (lo={lo}, spacing={spacing}, len={len})"
            )));
        }
        Ok(Self { lo, spacing, len })
    }

    /// `len` points spanning [lo, hi] inclusive.
    pub fn spanning(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(hi > lo) || len < 2 {
            return Err(invalid(format!(
                "spanning grid needs hi > lo and at least 2 points (lo={lo}, hi={hi}, len={len})"
            )));
        }
        Self::new(lo, (hi - lo) / (len - 1) as f64, len)
    }

    /// Grid over the data padded by max(8h, 5·scale·n^(−1/5)) on each side.
    pub fn for_sample(sample: &Sample, h: f64, len: usize) -> Result<Self> {
        check_bandwidth(h)?;
        let pad = (8.0 * h).max(5.0 * sample.scale() * (sample.len() as f64).powf(-0.2));
        Self::spanning(sample.min() - pad, sample.max() + pad, len)
    }

    /// Same span, different resolution.
    pub fn resampled(&self, len: usize) -> Result<Self> {
        Self::spanning(self.lo, self.hi(), len)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |j| self.point(j))
    }

    /// Trapezoidal rule for values sampled at the grid points.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len);
        if self.len == 1 {
            return 0.0;
        }
        let interior: f64 = values.iter().sum();
        self.spacing * (interior - 0.5 * (values[0] + values[self.len - 1]))
    }
}

/// f̂_h(x) = (nh)⁻¹ Σ K((x − Y_i)/h)
pub fn kde_at(sample: &Sample, h: f64, x: f64) -> Result<f64> {
    check_bandwidth(h)?;
    Ok(kde_unchecked(sample.values(), h, x))
}

#[inline]
fn kde_unchecked(values: &[f64], h: f64, x: f64) -> f64 {
    let inv_h = 1.0 / h;
    let total: f64 = values.iter().map(|y| gauss_pdf((x - y) * inv_h)).sum();
    total / (values.len() as f64 * h)
}

pub fn kde_curve(sample: &Sample, h: f64, grid: &EvaluationGrid) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    Ok(grid
        .points()
        .map(|x| kde_unchecked(sample.values(), h, x))
        .collect())
}

/// R(f̂″_h) = ∫(f̂″_h)², as the pairwise sum (n²h⁵)⁻¹ΣᵢΣⱼ (φ∗φ)⁽⁴⁾((Yᵢ−Yⱼ)/h).
pub fn roughness_fhat2(sample: &Sample, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let pairs = PairwiseSums::new(sample, PairSumMode::default());
    Ok(roughness_from_pairs(&pairs, h))
}

pub(crate) fn roughness_from_pairs(pairs: &PairwiseSums, h: f64) -> f64 {
    let n = pairs.len() as f64;
    pairs.sum(h, conv_phi4, Diagonal::Include) / (n * n * h.powi(5))
}

/// Truth tail mass allowed outside an ISE grid.
pub const MAX_UNCOVERED_MASS: f64 = 1e-6;

pub(crate) fn check_coverage(truth: &TargetDistribution, grid: &EvaluationGrid) -> Result<()> {
    let tail_mass = truth.cdf(grid.lo()) + (1.0 - truth.cdf(grid.hi()));
    if tail_mass > MAX_UNCOVERED_MASS {
        Err(Error::Coverage { tail_mass })
    } else {
        Ok(())
    }
}

/// ∫(f̂_h − f)² by the trapezoidal rule on `grid`.
pub fn ise(sample: &Sample, h: f64, truth: &TargetDistribution, grid: &EvaluationGrid) -> Result<f64> {
    check_bandwidth(h)?;
    check_coverage(truth, grid)?;
    let curve = kde_curve(sample, h, grid)?;
    let sq: Vec<f64> = curve
        .iter()
        .zip(grid.points())
        .map(|(fh, x)| {
            let d = fh - truth.pdf(x);
            d * d
        })
        .collect();
    Ok(grid.trapezoid(&sq))
}

/// Kernel estimate on a grid from linearly binned counts, for repeated
/// evaluation at many bandwidths.
#[derive(Debug, Clone)]
pub struct BinnedGridKde {
    grid: EvaluationGrid,
    counts: Vec<f64>,
    first: usize,
    last: usize,
    n: usize,
}

impl BinnedGridKde {
    /// Mass falling outside the grid is clamped onto the end points.
    pub fn new(sample: &Sample, grid: &EvaluationGrid) -> Self {
        let m = grid.len();
        let mut counts = vec![0.0; m];
        for &y in sample.values() {
            let pos = ((y - grid.lo()) / grid.spacing()).clamp(0.0, (m - 1) as f64);
            let j = (pos.floor() as usize).min(m.saturating_sub(2));
            let w = pos - j as f64;
            counts[j] += 1.0 - w;
            if m > 1 {
                counts[j + 1] += w;
            }
        }
        let first = counts.iter().position(|&c| c != 0.0).unwrap_or(0);
        let last = counts.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        Self {
            grid: *grid,
            counts,
            first,
            last,
            n: sample.len(),
        }
    }

    pub fn curve(&self, h: f64) -> Vec<f64> {
        let m = self.grid.len();
        let reach = ((10.0 * h / self.grid.spacing()).ceil() as usize).min(m);
        let weights: Vec<f64> = (0..=reach)
            .map(|d| gauss_pdf(d as f64 * self.grid.spacing() / h))
            .collect();
        let mut out = vec![0.0; m];
        for k in self.first..=self.last {
            let c = self.counts[k];
            if c == 0.0 {
                continue;
            }
            let lo = k.saturating_sub(reach);
            let hi = (k + reach).min(m - 1);
            for (j, slot) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *slot += c * weights[j.abs_diff(k)];
            }
        }
        let norm = 1.0 / (self.n as f64 * h);
        out.iter_mut().for_each(|v| *v *= norm);
        out
    }
}

/// Repeated ISE evaluation against one truth on one grid. Samples up to
/// `exact_limit` draws use the direct estimate; larger ones use binned counts.
#[derive(Debug, Clone)]
pub struct IseEvaluator<'a> {
    sample: &'a Sample,
    grid: EvaluationGrid,
    truth_values: Vec<f64>,
    binned: Option<BinnedGridKde>,
}

impl<'a> IseEvaluator<'a> {
    pub fn new(
        sample: &'a Sample,
        truth: &TargetDistribution,
        grid: &EvaluationGrid,
        exact_limit: usize,
    ) -> Result<Self> {
        check_coverage(truth, grid)?;
        let binned = (sample.len() > exact_limit).then(|| BinnedGridKde::new(sample, grid));
        Ok(Self {
            sample,
            grid: *grid,
            truth_values: grid.points().map(|x| truth.pdf(x)).collect(),
            binned,
        })
    }

    pub fn ise(&self, h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        let curve = match &self.binned {
            Some(b) => b.curve(h),
            None => kde_curve(self.sample, h, &self.grid)?,
        };
        let sq: Vec<f64> = curve
            .iter()
            .zip(&self.truth_values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        Ok(self.grid.trapezoid(&sq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::phi2;
    use crate::samplers::iid_sample;

    fn normal_sample(n: usize, seed: u64) -> Sample {
        iid_sample(&TargetDistribution::standard_normal(), n, seed).unwrap()
    }

    #[test]
    fn sample_rejects_degenerate_input() {
        assert!(Sample::new(vec![1.0]).is_err());
        assert!(Sample::new(vec![2.0, 2.0, 2.0]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        let s = Sample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.iqr(), 1.5);
        assert_eq!(s.mean(), 2.5);
    }

    #[test]
    fn kde_point_values() {
        let s = Sample::new(vec![0.0, 1e-100]).unwrap();
        assert!((kde_at(&s, 1.0, 0.0).unwrap() - gauss_pdf(0.0)).abs() < 1e-15);
        let s = Sample::new(vec![-1.0, 1.0]).unwrap();
        assert!((kde_at(&s, 1.0, 0.0).unwrap() - 0.241_970_724_519_143_35).abs() < 1e-15);
        assert!(kde_at(&s, 0.0, 0.0).is_err());
        assert!(kde_at(&s, -1.0, 0.0).is_err());
    }

    #[test]
    fn kde_is_shift_equivariant() {
        let s = normal_sample(50, 3);
        let shifted = Sample::new(s.values().iter().map(|v| v + 5.0).collect()).unwrap();
        for x in [-1.0, 0.2, 2.0] {
            let a = kde_at(&s, 0.4, x).unwrap();
            let b = kde_at(&shifted, 0.4, x + 5.0).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn curve_equals_pointwise_loop() {
        let s = normal_sample(500, 11);
        let grid = EvaluationGrid::for_sample(&s, 0.3, 257).unwrap();
        let curve = kde_curve(&s, 0.3, &grid).unwrap();
        for (j, x) in grid.points().enumerate() {
            let mut direct = 0.0;
            for y in s.values() {
                direct += gauss_pdf((x - y) / 0.3);
            }
            direct /= 500.0 * 0.3;
            assert_eq!(curve[j], direct);
        }
        let single = EvaluationGrid::new(0.5, 1.0, 1).unwrap();
        assert_eq!(
            kde_curve(&s, 0.3, &single).unwrap(),
            vec![kde_at(&s, 0.3, 0.5).unwrap()]
        );
    }

    #[test]
    fn curve_integrates_to_one() {
        for (n, h) in [(20, 0.2), (300, 0.5), (1000, 0.05)] {
            let s = normal_sample(n, n as u64);
            let grid = EvaluationGrid::for_sample(&s, h, DEFAULT_GRID_POINTS).unwrap();
            let area = grid.trapezoid(&kde_curve(&s, h, &grid).unwrap());
            assert!((area - 1.0).abs() < 1e-3, "n={n} h={h}: {area}");
        }
    }

    fn roughness_by_quadrature(s: &Sample, h: f64) -> f64 {
        let grid = EvaluationGrid::for_sample(s, h, 20001).unwrap();
        let n = s.len() as f64;
        let values: Vec<f64> = grid
            .points()
            .map(|x| {
                let d2: f64 = s.values().iter().map(|y| phi2((x - y) / h)).sum();
                let f2 = d2 / (n * h * h * h);
                f2 * f2
            })
            .collect();
        grid.trapezoid(&values)
    }

    #[test]
    fn roughness_matches_quadrature() {
        let s = Sample::new(vec![0.0, 1e-100]).unwrap();
        let r = roughness_fhat2(&s, 1.0).unwrap();
        assert!((r - conv_phi4(0.0)).abs() < 1e-6 * r);
        assert!(((roughness_by_quadrature(&s, 1.0) - r) / r).abs() < 1e-6);

        let s = normal_sample(200, 5);
        let r = roughness_fhat2(&s, 0.4).unwrap();
        let q = roughness_by_quadrature(&s, 0.4);
        assert!(((r - q) / q).abs() < 1e-5, "{r} vs {q}");
    }

    #[test]
    fn roughness_scale_equivariance() {
        let s = normal_sample(100, 9);
        let scaled = Sample::new(s.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        let a = roughness_fhat2(&s, 0.3).unwrap();
        let b = roughness_fhat2(&scaled, 0.6).unwrap();
        assert!((b - a / 32.0).abs() < 1e-12 * a);
    }

    fn simpson(grid: &EvaluationGrid, v: &[f64]) -> f64 {
        assert!(v.len() % 2 == 1);
        let mut s = v[0] + v[v.len() - 1];
        for (i, x) in v.iter().enumerate().take(v.len() - 1).skip(1) {
            s += if i % 2 == 1 { 4.0 * x } else { 2.0 * x };
        }
        s * grid.spacing() / 3.0
    }

    #[test]
    fn ise_trapezoid_agrees_with_simpson() {
        let truth = TargetDistribution::standard_normal();
        let s = normal_sample(100, 21);
        let grid = EvaluationGrid::for_sample(&s, 0.5, 2049).unwrap();
        let trap = ise(&s, 0.5, &truth, &grid).unwrap();
        let curve = kde_curve(&s, 0.5, &grid).unwrap();
        let sq: Vec<f64> = curve
            .iter()
            .zip(grid.points())
            .map(|(f, x)| (f - truth.pdf(x)).powi(2))
            .collect();
        assert!((trap - simpson(&grid, &sq)).abs() < 1e-6);
        assert!(trap >= 0.0);
    }

    #[test]
    fn ise_reports_poor_coverage() {
        let truth = TargetDistribution::normal(3.0, 2.0).unwrap();
        let s = Sample::new(vec![2.0, 3.0, 4.0]).unwrap();
        let grid = EvaluationGrid::spanning(2.0, 4.0, 64).unwrap();
        assert!(matches!(ise(&s, 0.5, &truth, &grid), Err(Error::Coverage { .. })));
    }

    #[test]
    fn ise_vanishes_for_large_truth_sample() {
        let truth = TargetDistribution::standard_normal();
        let s = normal_sample(100_000, 1);
        let h = s.normal_scale_bandwidth();
        let grid = EvaluationGrid::for_sample(&s, h, DEFAULT_GRID_POINTS).unwrap();
        let eval = IseEvaluator::new(&s, &truth, &grid, 2000).unwrap();
        assert!(eval.ise(h).unwrap() < 0.01);
    }

    #[test]
    fn binned_ise_tracks_exact() {
        let truth = TargetDistribution::standard_normal();
        let s = normal_sample(3000, 77);
        let grid = EvaluationGrid::for_sample(&s, 2.0, DEFAULT_GRID_POINTS).unwrap();
        let exact = IseEvaluator::new(&s, &truth, &grid, usize::MAX).unwrap();
        let binned = IseEvaluator::new(&s, &truth, &grid, 0).unwrap();
        for h in [0.15, 0.25, 0.4, 0.8] {
            let (a, b) = (exact.ise(h).unwrap(), binned.ise(h).unwrap());
            assert!(((a - b) / a).abs() < 1e-2, "h={h}: {a} vs {b}");
        }
    }
}

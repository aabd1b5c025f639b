//! Plug-in machinery shared by the selectors: pilot bandwidths, the S and T
//! functional estimates, ĝ(h), and the four objective functions.

use alloc::format;

use crate::density::{roughness_from_pairs, Sample};
use crate::error::{check_bandwidth, Error, Result};
use crate::kernel::{phi4, phi6, GAUSSIAN};
use crate::pairs::{Diagonal, PairSumMode, PairwiseSums};

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotBandwidths {
    pub a: f64,
    pub b: f64,
    pub iqr: f64,
}

/// a = 0.920·IQR·n^(−1/7), b = 0.912·IQR·n^(−1/9).
pub fn pilot_bandwidths(sample: &Sample) -> Result<PilotBandwidths> {
    let iqr = sample.iqr();
    if !(iqr > 0.0) {
        return Err(Error::DegenerateSample(format!("interquartile range is {iqr}")));
    }
    let n = sample.len() as f64;
    Ok(PilotBandwidths {
        a: 0.920 * iqr * n.powf(-1.0 / 7.0),
        b: 0.912 * iqr * n.powf(-1.0 / 9.0),
        iqr,
    })
}

/// Pilot bandwidths together with S(a) and T(b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginEstimates {
    pub pilots: PilotBandwidths,
    pub s_a: f64,
    pub t_b: f64,
}

impl PluginEstimates {
    /// ĝ(h) = 1.357·{S(a)/T(b)}^(1/7)·h^(5/7)
    pub fn g_hat(&self, h: f64) -> f64 {
        1.357 * (self.s_a / self.t_b).powf(1.0 / 7.0) * h.powf(5.0 / 7.0)
    }
}

/// Objective functions of one sample, with its pairwise sums computed once.
#[derive(Debug, Clone)]
pub struct Objectives<'a> {
    sample: &'a Sample,
    pairs: PairwiseSums,
    diagonal: Diagonal,
}

impl<'a> Objectives<'a> {
    pub fn new(sample: &'a Sample, mode: PairSumMode, diagonal: Diagonal) -> Self {
        Self {
            sample,
            pairs: PairwiseSums::new(sample, mode),
            diagonal,
        }
    }

    pub fn sample(&self) -> &'a Sample {
        self.sample
    }

    fn n(&self) -> f64 {
        self.sample.len() as f64
    }

    pub fn roughness_fhat2(&self, h: f64) -> f64 {
        roughness_from_pairs(&self.pairs, h)
    }

    /// S(g) = (n(n−1)g⁵)⁻¹ ΣᵢΣⱼ φ⁽⁴⁾((Yᵢ−Yⱼ)/g)
    pub fn s_functional(&self, g: f64) -> f64 {
        let n = self.n();
        self.pairs.sum(g, phi4, self.diagonal) / (n * (n - 1.0) * g.powi(5))
    }

    /// T(b) = −(n(n−1)b⁷)⁻¹ ΣᵢΣⱼ φ⁽⁶⁾((Yᵢ−Yⱼ)/b)
    pub fn t_functional(&self, b: f64) -> f64 {
        let n = self.n();
        -self.pairs.sum(b, phi6, self.diagonal) / (n * (n - 1.0) * b.powi(7))
    }

    pub fn plugin(&self) -> Result<PluginEstimates> {
        let pilots = pilot_bandwidths(self.sample)?;
        let s_a = self.s_functional(pilots.a);
        let t_b = self.t_functional(pilots.b);
        if !(s_a > 0.0 && t_b > 0.0) {
            return Err(Error::PilotFailure { s_a, t_b });
        }
        Ok(PluginEstimates { pilots, s_a, t_b })
    }

    /// (nh)⁻¹R(K)·ζ
    fn variance_term(&self, h: f64, zeta: f64) -> f64 {
        GAUSSIAN.roughness_k / (self.n() * h) * zeta
    }

    fn bias_term(&self, h: f64, roughness: f64) -> f64 {
        h.powi(4) / 4.0 * GAUSSIAN.mu2 * GAUSSIAN.mu2 * roughness
    }

    /// (nh)⁻¹R(K)·ζ + (h⁴/4)μ₂²{R(f̂″_h) − R(K″)/(nh⁵)}; ζ = 1 gives BCV.
    pub fn bcv(&self, h: f64, zeta: f64) -> f64 {
        let corrected = self.roughness_fhat2(h) - GAUSSIAN.roughness_k2 / (self.n() * h.powi(5));
        self.variance_term(h, zeta) + self.bias_term(h, corrected)
    }

    /// (nh)⁻¹R(K)·ζ + (h⁴/4)μ₂²S(ĝ(h)); ζ = 1 gives the SJ objective.
    pub fn sj(&self, h: f64, plugin: &PluginEstimates, zeta: f64) -> f64 {
        self.variance_term(h, zeta) + self.bias_term(h, self.s_functional(plugin.g_hat(h)))
    }

    /// {R(K)·ζ/(nμ₂²S(ĝ(h)))}^(1/5), the right-hand side of the
    /// solve-the-equation fixed point h = rhs(h).
    pub fn sj_rhs(&self, h: f64, plugin: &PluginEstimates, zeta: f64) -> f64 {
        let s = self.s_functional(plugin.g_hat(h));
        (GAUSSIAN.roughness_k * zeta / (self.n() * GAUSSIAN.mu2 * GAUSSIAN.mu2 * s)).powf(0.2)
    }
}

fn default_objectives(sample: &Sample) -> Objectives<'_> {
    Objectives::new(sample, PairSumMode::default(), Diagonal::Include)
}

pub fn s_functional(sample: &Sample, g: f64) -> Result<f64> {
    check_bandwidth(g)?;
    Ok(default_objectives(sample).s_functional(g))
}

pub fn t_functional(sample: &Sample, b: f64) -> Result<f64> {
    check_bandwidth(b)?;
    Ok(default_objectives(sample).t_functional(b))
}

/// ĝ(h) with S(a) and T(b) computed from the sample at the given pilots.
pub fn g_hat(sample: &Sample, h: f64, pilots: &PilotBandwidths) -> Result<f64> {
    check_bandwidth(h)?;
    let obj = default_objectives(sample);
    let s_a = obj.s_functional(pilots.a);
    let t_b = obj.t_functional(pilots.b);
    if !(s_a > 0.0 && t_b > 0.0) {
        return Err(Error::PilotFailure { s_a, t_b });
    }
    Ok(PluginEstimates {
        pilots: *pilots,
        s_a,
        t_b,
    }
    .g_hat(h))
}

pub fn bcv_objective(sample: &Sample, h: f64) -> Result<f64> {
    mbcv_objective(sample, h, 1.0)
}

pub fn mbcv_objective(sample: &Sample, h: f64, zeta: f64) -> Result<f64> {
    check_bandwidth(h)?;
    check_zeta(zeta)?;
    Ok(default_objectives(sample).bcv(h, zeta))
}

pub fn sj_objective(sample: &Sample, h: f64, pilots: &PilotBandwidths) -> Result<f64> {
    msj_objective(sample, h, pilots, 1.0)
}

pub fn msj_objective(sample: &Sample, h: f64, pilots: &PilotBandwidths, zeta: f64) -> Result<f64> {
    check_bandwidth(h)?;
    check_zeta(zeta)?;
    let obj = default_objectives(sample);
    let s_a = obj.s_functional(pilots.a);
    let t_b = obj.t_functional(pilots.b);
    if !(s_a > 0.0 && t_b > 0.0) {
        return Err(Error::PilotFailure { s_a, t_b });
    }
    let plugin = PluginEstimates {
        pilots: *pilots,
        s_a,
        t_b,
    };
    Ok(obj.sj(h, &plugin, zeta))
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta >= 0.0 && zeta.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid(format!(
            "zeta must be finite and >= 0, got {zeta}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::INV_SQRT_2PI;
    use crate::samplers::{iid_sample, TargetDistribution};
    use alloc::vec;

    fn sample(n: usize, seed: u64) -> Sample {
        iid_sample(&TargetDistribution::standard_normal(), n, seed).unwrap()
    }

    #[test]
    fn pilot_formulas() {
        // quartiles 0.25 and 1.25 on 10_000 draws would need a constructed sample;
        // scale one with IQR 1 instead.
        let base = sample(10_000, 1);
        let unit = Sample::new(base.values().iter().map(|v| v / base.iqr()).collect()).unwrap();
        let p = pilot_bandwidths(&unit).unwrap();
        assert!((p.iqr - 1.0).abs() < 1e-12);
        assert!((p.a - 0.246_808_013_165_734_77).abs() < 1e-12);
        assert!((p.b - 0.327_755_806_138_982).abs() < 1e-12);

        let doubled = Sample::new(unit.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        let q = pilot_bandwidths(&doubled).unwrap();
        assert!((q.a - 2.0 * p.a).abs() < 1e-12 && (q.b - 2.0 * p.b).abs() < 1e-12);

        let flat = Sample::new(vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(matches!(pilot_bandwidths(&flat), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn functionals_on_two_points() {
        // two draws closer than any bandwidth resolves: all four terms sit at the origin
        let s = Sample::new(vec![0.0, 1e-100]).unwrap();
        let expected_s = 0.5 * 4.0 * 3.0 * INV_SQRT_2PI;
        assert!((s_functional(&s, 1.0).unwrap() - expected_s).abs() < 1e-12);
        let expected_t = 0.5 * 4.0 * 15.0 * INV_SQRT_2PI;
        assert!((t_functional(&s, 1.0).unwrap() - expected_t).abs() < 1e-12);
        assert!((expected_s - 2.3937).abs() < 1e-4 && (expected_t - 11.968).abs() < 1e-3);
        assert!(s_functional(&s, 0.0).is_err());
    }

    fn direct_s(values: &[f64], g: f64) -> f64 {
        let n = values.len() as f64;
        let mut total = 0.0;
        for a in values {
            for b in values {
                total += phi4((a - b) / g);
            }
        }
        total / (n * (n - 1.0) * g.powi(5))
    }

    #[test]
    fn binned_functionals_match_direct() {
        let s = sample(2000, 3);
        let binned = Objectives::new(&s, PairSumMode::Binned { cells: 1024 }, Diagonal::Include);
        let direct = direct_s(s.values(), 0.3);
        assert!(((binned.s_functional(0.3) - direct) / direct).abs() < 1e-3);
        let exact = Objectives::new(&s, PairSumMode::Exact, Diagonal::Include);
        let t = exact.t_functional(0.4);
        assert!(((binned.t_functional(0.4) - t) / t).abs() < 1e-3);
    }

    #[test]
    fn scale_equivariance() {
        let s = sample(300, 5);
        let c = 2.0;
        let scaled = Sample::new(s.values().iter().map(|v| c * v).collect()).unwrap();
        let a = s_functional(&s, 0.4).unwrap();
        let b = s_functional(&scaled, c * 0.4).unwrap();
        assert!((b - a * c.powi(-5)).abs() < 1e-12 * a.abs());
        let a = t_functional(&s, 0.5).unwrap();
        let b = t_functional(&scaled, c * 0.5).unwrap();
        assert!((b - a * c.powi(-7)).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn g_hat_power_law() {
        let plug = PluginEstimates {
            pilots: PilotBandwidths {
                a: 1.0,
                b: 1.0,
                iqr: 1.0,
            },
            s_a: 2.5,
            t_b: 2.5,
        };
        assert!((plug.g_hat(1.0) - 1.357).abs() < 1e-15);
        for h in [0.1, 0.37, 2.0] {
            let ratio = plug.g_hat(2.0 * h) / plug.g_hat(h);
            assert!((ratio - 2f64.powf(5.0 / 7.0)).abs() < 1e-14);
        }
        let s = sample(10_000, 8);
        let pilots = pilot_bandwidths(&s).unwrap();
        let first = g_hat(&s, 0.3, &pilots).unwrap();
        assert_eq!(first.to_bits(), g_hat(&s, 0.3, &pilots).unwrap().to_bits());
    }

    #[test]
    fn bcv_term_by_term() {
        let s = sample(50, 13);
        let h = 0.5;
        let n = 50.0;
        let rk = 1.0 / (2.0 * core::f64::consts::PI.sqrt());
        let rk2 = 3.0 / (8.0 * core::f64::consts::PI.sqrt());
        // fourth derivative of the N(0, 2) density, written out
        let mut rough = 0.0;
        for a in s.values() {
            for b in s.values() {
                let u = (a - b) / h;
                let v = u * u / 2.0;
                rough +=
                    (v * v - 6.0 * v + 3.0) * (-u * u / 4.0).exp() / (8.0 * core::f64::consts::PI.sqrt());
            }
        }
        rough /= n * n * h.powi(5);
        let expected = rk / (n * h) + h.powi(4) / 4.0 * (rough - rk2 / (n * h.powi(5)));
        let got = bcv_objective(&s, h).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn sj_term_by_term() {
        let s = sample(50, 14);
        let pilots = pilot_bandwidths(&s).unwrap();
        let h: f64 = 0.5;
        let n = 50.0;
        let s_a = direct_s(s.values(), pilots.a);
        let mut t_sum = 0.0;
        for a in s.values() {
            for b in s.values() {
                t_sum += phi6((a - b) / pilots.b);
            }
        }
        let t_b = -t_sum / (n * (n - 1.0) * pilots.b.powi(7));
        let g = 1.357 * (s_a / t_b).powf(1.0 / 7.0) * h.powf(5.0 / 7.0);
        let rk = 1.0 / (2.0 * core::f64::consts::PI.sqrt());
        let expected = rk / (n * h) + h.powi(4) / 4.0 * direct_s(s.values(), g);
        let got = sj_objective(&s, h, &pilots).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn modified_objectives_reduce_and_scale() {
        let s = sample(400, 2);
        let pilots = pilot_bandwidths(&s).unwrap();
        for h in [0.1, 0.3, 0.9] {
            assert_eq!(
                mbcv_objective(&s, h, 1.0).unwrap().to_bits(),
                bcv_objective(&s, h).unwrap().to_bits()
            );
            assert_eq!(
                msj_objective(&s, h, &pilots, 1.0).unwrap().to_bits(),
                sj_objective(&s, h, &pilots).unwrap().to_bits()
            );
            let first_term = GAUSSIAN.roughness_k / (400.0 * h);
            let d = mbcv_objective(&s, h, 2.0).unwrap() - bcv_objective(&s, h).unwrap();
            assert!((d - first_term).abs() < 1e-12);
            let d = msj_objective(&s, h, &pilots, 3.0).unwrap() - sj_objective(&s, h, &pilots).unwrap();
            assert!((d - 2.0 * first_term).abs() < 1e-12);
        }
        assert!(mbcv_objective(&s, 0.3, -1.0).is_err());
    }

    #[test]
    fn diagonal_flag_changes_s() {
        let s = sample(200, 6);
        let with = Objectives::new(&s, PairSumMode::Exact, Diagonal::Include);
        let without = Objectives::new(&s, PairSumMode::Exact, Diagonal::Exclude);
        let g = 0.3;
        let d = with.s_functional(g) - without.s_functional(g);
        let expected = 200.0 * phi4(0.0) / (200.0 * 199.0 * g.powi(5));
        assert!((d - expected).abs() < 1e-9 * expected);
    }
}

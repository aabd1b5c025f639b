//! One-dimensional searches over a bandwidth bracket: minimisation by a
//! coarse log-grid scan refined with golden sections, and root finding for
//! a residual by the same scan refined with Illinois steps.

use alloc::vec::Vec;

use crate::error::{Error, Result};

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Where the coarse minimum landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    None,
    Lo,
    Hi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on h (minimisation) or on the residual (roots).
    pub tol: f64,
    pub coarse_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub h: f64,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub boundary: Boundary,
    /// More than one sign change on the coarse grid (root finding only).
    pub multiple_roots: bool,
}

const MAX_REFINE_STEPS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl Bracket {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi.is_finite()) {
            return Err(crate::error::invalid(alloc::format!(
                "bandwidth bracket must satisfy 0 < lo < hi, got [{}, {}]",
                self.lo,
                self.hi
            )));
        }
        if !(self.tol > 0.0) {
            return Err(crate::error::invalid(alloc::format!(
                "tolerance must be > 0, got {}",
                self.tol
            )));
        }
        if self.coarse_points < 3 {
            return Err(crate::error::invalid("coarse grid needs at least 3 points"));
        }
        Ok(())
    }

    /// Log-spaced points from lo to hi inclusive.
    pub fn coarse_grid(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let m = self.coarse_points - 1;
        (0..=m)
            .map(|i| match i {
                0 => self.lo,
                i if i == m => self.hi,
                i => (a + (b - a) * i as f64 / m as f64).exp(),
            })
            .collect()
    }
}

struct Counted<'f> {
    f: &'f mut dyn FnMut(f64) -> Result<f64>,
    calls: usize,
}

impl Counted<'_> {
    fn eval(&mut self, h: f64) -> Result<f64> {
        self.calls += 1;
        let v = (self.f)(h)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ObjectiveEvaluation { h })
        }
    }
}

/// Minimise `objective` over the bracket and return the best point evaluated.
pub fn minimize(objective: &mut dyn FnMut(f64) -> Result<f64>, bracket: &Bracket) -> Result<SearchOutcome> {
    bracket.validate()?;
    let mut f = Counted {
        f: objective,
        calls: 0,
    };
    let grid = bracket.coarse_grid();
    let mut values = Vec::with_capacity(grid.len());
    for &h in &grid {
        values.push(f.eval(h)?);
    }
    let mut i = 0;
    for (k, &v) in values.iter().enumerate() {
        if v < values[i] {
            i = k;
        }
    }
    let last = grid.len() - 1;
    let boundary = match i {
        0 => Boundary::Lo,
        k if k == last => Boundary::Hi,
        _ => Boundary::None,
    };
    let mut best = (grid[i], values[i]);
    let (mut a, mut b) = (grid[i.saturating_sub(1)].ln(), grid[(i + 1).min(last)].ln());
    let clamp = |x: f64| x.exp().clamp(bracket.lo, bracket.hi);

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f.eval(clamp(c))?;
    let mut fd = f.eval(clamp(d))?;
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (clamp(x), fx);
        }
    }
    let mut steps = 0;
    while b.exp() - a.exp() > bracket.tol && steps < MAX_REFINE_STEPS {
        steps += 1;
        let (x, fx) = if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f.eval(clamp(c))?;
            (c, fc)
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f.eval(clamp(d))?;
            (d, fd)
        };
        if fx < best.1 {
            best = (clamp(x), fx);
        }
    }
    let width_ok = b.exp() - a.exp() <= bracket.tol;
    Ok(SearchOutcome {
        h: best.0,
        value: best.1,
        evaluations: f.calls,
        converged: width_ok && boundary == Boundary::None,
        boundary,
        multiple_roots: false,
    })
}

/// Find h in the bracket with |residual(h)| ≤ tol. Among several sign changes
/// on the coarse grid, the one closest to `anchor` on the log scale is refined.
pub fn find_root(
    residual: &mut dyn FnMut(f64) -> Result<f64>,
    bracket: &Bracket,
    anchor: f64,
) -> Result<SearchOutcome> {
    bracket.validate()?;
    let mut f = Counted {
        f: residual,
        calls: 0,
    };
    let grid = bracket.coarse_grid();
    let mut values = Vec::with_capacity(grid.len());
    for &h in &grid {
        values.push(f.eval(h)?);
    }

    // Each candidate is a pair of neighbouring grid indices; equal indices
    // mark an exact zero on the grid.
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        if v == 0.0 {
            candidates.push((k, k));
        } else if k + 1 < values.len() && v * values[k + 1] < 0.0 {
            candidates.push((k, k + 1));
        }
    }
    let Some(&(ia, ib)) = candidates.iter().min_by(|x, y| {
        let dx = ((grid[x.0] * grid[x.1]).sqrt() / anchor).ln().abs();
        let dy = ((grid[y.0] * grid[y.1]).sqrt() / anchor).ln().abs();
        dx.total_cmp(&dy)
    }) else {
        return Err(Error::RootNotFound {
            lo: bracket.lo,
            hi: bracket.hi,
            residual_lo: values[0],
            residual_hi: values[values.len() - 1],
        });
    };
    let multiple_roots = candidates.len() > 1;
    if ia == ib {
        return Ok(SearchOutcome {
            h: grid[ia],
            value: 0.0,
            evaluations: f.calls,
            converged: true,
            boundary: Boundary::None,
            multiple_roots,
        });
    }

    let (mut a, mut fa) = (grid[ia], values[ia]);
    let (mut b, mut fb) = (grid[ib], values[ib]);
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut side = 0i8;
    let mut converged = best.1.abs() <= bracket.tol;
    let mut steps = 0;
    while !converged && steps < MAX_REFINE_STEPS {
        steps += 1;
        let mut c = (fa * b - fb * a) / (fa - fb);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f.eval(c)?;
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc.abs() <= bracket.tol {
            converged = true;
        } else if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if b - a <= f64::EPSILON * b {
            break;
        }
    }
    Ok(SearchOutcome {
        h: best.0,
        value: best.1,
        evaluations: f.calls,
        converged,
        boundary: Boundary::None,
        multiple_roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bracket(lo: f64, hi: f64) -> Bracket {
        Bracket {
            lo,
            hi,
            tol: 1e-8,
            coarse_points: 40,
        }
    }

    #[test]
    fn grid_is_log_spaced_with_exact_ends() {
        let g = bracket(0.01, 10.0).coarse_grid();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[39], 10.0);
        let r = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn minimizes_a_parabola_in_log_h() {
        let mut f = |h: f64| Ok((h.ln() - 0.3f64.ln()).powi(2));
        let out = minimize(&mut f, &bracket(0.01, 10.0)).unwrap();
        assert!((out.h - 0.3).abs() < 1e-6, "{out:?}");
        assert!(out.converged);
        assert_eq!(out.boundary, Boundary::None);
        assert!(out.evaluations > 40);
    }

    #[test]
    fn reports_boundary_minimum() {
        let mut f = |h: f64| Ok(h);
        let out = minimize(&mut f, &bracket(0.5, 2.0)).unwrap();
        assert_eq!(out.boundary, Boundary::Lo);
        assert!(!out.converged);
        assert_eq!(out.h, 0.5);
        let mut g = |h: f64| Ok(-h);
        let out = minimize(&mut g, &bracket(0.5, 2.0)).unwrap();
        assert_eq!(out.boundary, Boundary::Hi);
        assert_eq!(out.h, 2.0);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let mut f = |h: f64| Ok(if h > 1.0 { f64::NAN } else { h });
        assert!(matches!(
            minimize(&mut f, &bracket(0.5, 2.0)),
            Err(Error::ObjectiveEvaluation { .. })
        ));
    }

    #[test]
    fn finds_single_root() {
        let mut r = |h: f64| Ok(h - 0.7f64.sqrt());
        let out = find_root(&mut r, &bracket(0.1, 5.0), 1.0).unwrap();
        assert!(out.converged && !out.multiple_roots);
        assert!((out.h - 0.7f64.sqrt()).abs() <= 1e-8);
    }

    #[test]
    fn picks_root_nearest_anchor() {
        let mut r = |h: f64| Ok((h - 0.2) * (h - 2.0));
        let near_small = find_root(&mut r, &bracket(0.05, 10.0), 0.25).unwrap();
        assert!((near_small.h - 0.2).abs() < 1e-7 && near_small.multiple_roots);
        let near_big = find_root(&mut r, &bracket(0.05, 10.0), 3.0).unwrap();
        assert!((near_big.h - 2.0).abs() < 1e-7);
    }

    #[test]
    fn missing_root_is_reported() {
        let mut r = |h: f64| Ok(h + 1.0);
        match find_root(&mut r, &bracket(0.1, 1.0), 0.5) {
            Err(Error::RootNotFound {
                residual_lo,
                residual_hi,
                ..
            }) => {
                assert!((residual_lo - 1.1).abs() < 1e-12 && (residual_hi - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_brackets() {
        let mut f = |h: f64| Ok(h);
        assert!(minimize(&mut f, &bracket(1.0, 0.5)).is_err());
        assert!(minimize(
            &mut f,
            &Bracket {
                tol: 0.0,
                ..bracket(0.5, 1.0)
            }
        )
        .is_err());
    }
}

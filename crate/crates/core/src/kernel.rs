//! The Gaussian kernel, its even derivatives, and the scalar functionals the
//! selectors plug into their criteria.

use crate::error::{invalid, Result};

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// (2π)^(-1/2)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn gauss_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// φ″(u) = (u² − 1)φ(u)
#[inline]
pub fn phi2(u: f64) -> f64 {
    (u * u - 1.0) * gauss_pdf(u)
}

/// φ⁽⁴⁾(u) = (u⁴ − 6u² + 3)φ(u)
#[inline]
pub fn phi4(u: f64) -> f64 {
    let u2 = u * u;
    (u2 * u2 - 6.0 * u2 + 3.0) * gauss_pdf(u)
}

/// φ⁽⁶⁾(u) = (u⁶ − 15u⁴ + 45u² − 15)φ(u)
#[inline]
pub fn phi6(u: f64) -> f64 {
    let u2 = u * u;
    (((u2 - 15.0) * u2 + 45.0) * u2 - 15.0) * gauss_pdf(u)
}

/// r-th derivative of the standard normal density.
///
/// Orders 4 and 6 are the ones the plug-in estimates need; 0 and 2 are
/// accepted as well so derivative chains can be checked down to φ itself.
pub fn gauss_deriv(order: u32, u: f64) -> Result<f64> {
    match order {
        0 => Ok(gauss_pdf(u)),
        2 => Ok(phi2(u)),
        4 => Ok(phi4(u)),
        6 => Ok(phi6(u)),
        r => Err(invalid(alloc::format!(
            "unsupported derivative order {r} (expected 0, 2, 4 or 6)"
        ))),
    }
}

/// Scaled kernel K_h(u) = K(u/h)/h.
#[inline]
pub fn scaled_kernel(h: f64, u: f64) -> f64 {
    gauss_pdf(u / h) / h
}

/// Fourth derivative of the N(0, 2) density, i.e. of φ∗φ.
///
/// ∫K″_h(x−a)K″_h(x−b)dx = h⁻⁵·conv_phi4((a−b)/h), which turns R(f̂″_h)
/// into a pairwise sum.
#[inline]
pub fn conv_phi4(u: f64) -> f64 {
    const SQRT_2: f64 = core::f64::consts::SQRT_2;
    phi4(u / SQRT_2) / (4.0 * SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelFunctionals {
    /// R(K) = ∫K²
    pub roughness_k: f64,
    /// μ₂ = ∫u²K(u)du
    pub mu2: f64,
    /// R(K″) = ∫(K″)²
    pub roughness_k2: f64,
}

/// R(K) = 1/(2√π), μ₂ = 1, R(K″) = 3/(8√π).
pub const GAUSSIAN: KernelFunctionals = KernelFunctionals {
    roughness_k: 0.282_094_791_773_878_14,
    mu2: 1.0,
    roughness_k2: 0.211_571_093_830_408_6,
};

pub fn kernel_functionals() -> KernelFunctionals {
    GAUSSIAN
}

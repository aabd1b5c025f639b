//! Iterative radix-2 FFT and the autocovariance routines built on it.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

pub(crate) struct Radix2Fft {
    len: usize,
    twiddles: Vec<Complex64>,
    bit_rev: Vec<u32>,
}

impl Radix2Fft {
    pub(crate) fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "FFT length must be a power of two");
        let half = len / 2;
        let twiddles = (0..half)
            .map(|k| {
                let angle = -2.0 * core::f64::consts::PI * k as f64 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let bits = len.trailing_zeros();
        let bit_rev = (0..len as u32)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (32 - bits)
                }
            })
            .collect();
        Self {
            len,
            twiddles,
            bit_rev,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Unnormalised inverse transform.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.bit_rev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

/// Reusable buffers for biased autocovariances of series of one fixed length.
pub(crate) struct AutocovWorkspace {
    n: usize,
    fft: Radix2Fft,
    buf: Vec<Complex64>,
}

impl AutocovWorkspace {
    pub(crate) fn new(n: usize) -> Self {
        let padded = (2 * n).saturating_sub(1).max(1).next_power_of_two();
        Self {
            n,
            fft: Radix2Fft::new(padded),
            buf: vec![Complex64::new(0.0, 0.0); padded],
        }
    }

    /// Biased autocovariance γ̂(t) = n⁻¹Σ(x_i − x̄)(x_{i+t} − x̄) for t = 0..n−1.
    pub(crate) fn autocov(&mut self, series: &[f64], out: &mut [f64]) {
        self.autocov_pair(series, None, out, None);
    }

    /// Autocovariances of two real series with one forward and one inverse
    /// transform: the first goes in the real part, the second in the
    /// imaginary part, and the two power spectra are separated by conjugate
    /// symmetry.
    pub(crate) fn autocov_pair(
        &mut self,
        first: &[f64],
        second: Option<&[f64]>,
        out_first: &mut [f64],
        out_second: Option<&mut [f64]>,
    ) {
        let n = self.n;
        assert_eq!(first.len(), n);
        let len = self.fft.len();
        // Each series is centred and scaled to unit peak so that rounding
        // in one does not swamp the other when their magnitudes differ.
        let centre = |s: &[f64]| {
            let mean = s.iter().sum::<f64>() / n as f64;
            let peak = s.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
            (mean, if peak > 0.0 { 1.0 / peak } else { 1.0 })
        };
        let (mean_first, inv_first) = centre(first);
        let (mean_second, inv_second) = second.map_or((0.0, 1.0), centre);
        for (i, slot) in self.buf.iter_mut().enumerate() {
            *slot = if i < n {
                let im = second.map_or(0.0, |s| (s[i] - mean_second) * inv_second);
                Complex64::new((first[i] - mean_first) * inv_first, im)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.fft.forward(&mut self.buf);
        // |X_k|² = |Z_k + conj Z_{N-k}|²/4, |Y_k|² = |Z_k − conj Z_{N-k}|²/4.
        // Both spectra are real and even, so X² + iY² inverts to γ_x + iγ_y.
        let mut k = 0;
        while k <= len / 2 {
            let mirror = (len - k) % len;
            let z = self.buf[k];
            let zm = self.buf[mirror].conj();
            let px = (z + zm).norm_sqr() * 0.25;
            let py = (z - zm).norm_sqr() * 0.25;
            self.buf[k] = Complex64::new(px, py);
            self.buf[mirror] = Complex64::new(px, py);
            k += 1;
        }
        self.fft.inverse(&mut self.buf);
        let scale = 1.0 / (len as f64 * n as f64);
        let scale_first = scale / (inv_first * inv_first);
        for (o, z) in out_first[..n].iter_mut().zip(&self.buf) {
            *o = z.re * scale_first;
        }
        if let Some(out) = out_second {
            let scale_second = scale / (inv_second * inv_second);
            for (o, z) in out[..n].iter_mut().zip(&self.buf) {
                *o = z.im * scale_second;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_autocov(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        (0..n)
            .map(|t| (0..n - t).map(|i| (x[i] - mean) * (x[i + t] - mean)).sum::<f64>() / n as f64)
            .collect()
    }

    fn dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                        let a = -2.0 * core::f64::consts::PI * (j * k) as f64 / n as f64;
                        acc + v * Complex64::new(a.cos(), a.sin())
                    })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64).cos() * 0.3))
            .collect();
        let mut y = x.clone();
        Radix2Fft::new(16).forward(&mut y);
        for (a, b) in y.iter().zip(dft(&x)) {
            assert!((a - b).l1_norm() < 1e-12);
        }
    }

    #[test]
    fn paired_autocov_matches_direct() {
        for n in [2usize, 3, 17, 100, 257] {
            let a: Vec<f64> = (0..n)
                .map(|i| ((i * i) as f64 * 0.37).sin() + 0.1 * i as f64)
                .collect();
            let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 1.3).cos() * 5.0 + 2.0).collect();
            let mut ws = AutocovWorkspace::new(n);
            let mut ga = vec![0.0; n];
            let mut gb = vec![0.0; n];
            ws.autocov_pair(&a, Some(&b), &mut ga, Some(&mut gb));
            let (da, db) = (direct_autocov(&a), direct_autocov(&b));
            for t in 0..n {
                assert!((ga[t] - da[t]).abs() <= 1e-10 * da[0], "n={n} t={t}");
                assert!((gb[t] - db[t]).abs() <= 1e-10 * db[0], "n={n} t={t}");
            }
        }
    }

    #[test]
    fn paired_series_of_very_different_size() {
        let n = 300;
        let small: Vec<f64> = (0..n).map(|i| 1e-40 * ((i as f64) * 0.9).sin()).collect();
        let large: Vec<f64> = (0..n).map(|i| 1e3 * ((i as f64) * 0.2).cos()).collect();
        let mut ws = AutocovWorkspace::new(n);
        let mut gs = vec![0.0; n];
        let mut gl = vec![0.0; n];
        ws.autocov_pair(&small, Some(&large), &mut gs, Some(&mut gl));
        let (ds, dl) = (direct_autocov(&small), direct_autocov(&large));
        for t in 0..n {
            assert!((gs[t] - ds[t]).abs() <= 1e-10 * ds[0], "t={t}");
            assert!((gl[t] - dl[t]).abs() <= 1e-10 * dl[0], "t={t}");
        }
    }
}

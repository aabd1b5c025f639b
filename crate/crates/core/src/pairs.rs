//! Double sums ΣᵢΣⱼ k((Yᵢ − Yⱼ)/g) over all ordered pairs of draws, for an
//! even kernel k.
//!
//! Small samples are summed directly. Larger ones are linearly binned once;
//! the products of bin counts at every lag are precomputed, so each further
//! bandwidth costs one pass over the lags. The binned path removes each
//! draw's binned self-pair and adds the diagonal back exactly, which keeps
//! the i = j contribution exact at every bandwidth.

use alloc::vec;
use alloc::vec::Vec;

use crate::density::Sample;

// shadowed by inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Samples up to this size are summed pair by pair.
pub const DEFAULT_EXACT_LIMIT: usize = 2000;
/// Bin count for larger samples.
pub const DEFAULT_BIN_CELLS: usize = 1024;

/// Beyond this many bandwidths every kernel used here underflows.
const KERNEL_REACH: f64 = 40.0;

/// Whether the i = j terms enter a double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    #[default]
    Include,
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSumMode {
    /// Exact up to `exact_limit` draws, binned on `cells` cells above it.
    Auto {
        exact_limit: usize,
        cells: usize,
    },
    Exact,
    Binned {
        cells: usize,
    },
}

impl Default for PairSumMode {
    fn default() -> Self {
        PairSumMode::Auto {
            exact_limit: DEFAULT_EXACT_LIMIT,
            cells: DEFAULT_BIN_CELLS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairwiseSums {
    n: usize,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Exact {
        values: Vec<f64>,
    },
    Binned {
        width: f64,
        /// lag_products[d] = Σ_k c_k c_{k+d}
        lag_products: Vec<f64>,
        /// Binned self-pairs at lag 0 and at lag ±1 (the latter summed over both signs).
        self_lag0: f64,
        self_lag1: f64,
    },
}

impl PairwiseSums {
    pub fn new(sample: &Sample, mode: PairSumMode) -> Self {
        let binned_cells = match mode {
            PairSumMode::Exact => None,
            PairSumMode::Binned { cells } => Some(cells),
            PairSumMode::Auto { exact_limit, cells } => (sample.len() > exact_limit).then_some(cells),
        };
        let repr = match binned_cells {
            None => {
                let mut values = sample.values().to_vec();
                values.sort_unstable_by(f64::total_cmp);
                Repr::Exact { values }
            }
            Some(cells) => Self::bin(sample, cells.max(2)),
        };
        Self {
            n: sample.len(),
            repr,
        }
    }

    fn bin(sample: &Sample, cells: usize) -> Repr {
        let (lo, hi) = (sample.min(), sample.max());
        let width = (hi - lo) / (cells - 1) as f64;
        let mut counts = vec![0.0; cells];
        let mut self_lag0 = 0.0;
        let mut self_lag1 = 0.0;
        for &y in sample.values() {
            let pos = (y - lo) / width;
            let j = (pos.floor() as usize).min(cells - 2);
            let w = pos - j as f64;
            counts[j] += 1.0 - w;
            counts[j + 1] += w;
            self_lag0 += (1.0 - w) * (1.0 - w) + w * w;
            self_lag1 += 2.0 * w * (1.0 - w);
        }
        let occupied: Vec<(usize, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (k, c))
            .collect();
        let mut lag_products = vec![0.0; cells];
        for (a, &(ka, ca)) in occupied.iter().enumerate() {
            for &(kb, cb) in &occupied[a..] {
                lag_products[kb - ka] += ca * cb;
            }
        }
        Repr::Binned {
            width,
            lag_products,
            self_lag0,
            self_lag1,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_binned(&self) -> bool {
        matches!(self.repr, Repr::Binned { .. })
    }

    /// Σ_{i≠j} k((Yᵢ − Yⱼ)/g).
    pub fn off_diagonal<K: Fn(f64) -> f64>(&self, g: f64, kernel: K) -> f64 {
        let inv_g = 1.0 / g;
        match &self.repr {
            Repr::Exact { values } => {
                let mut total = 0.0;
                for (i, &a) in values.iter().enumerate() {
                    for &b in &values[i + 1..] {
                        let u = (b - a) * inv_g;
                        if u > KERNEL_REACH {
                            break;
                        }
                        total += kernel(u);
                    }
                }
                2.0 * total
            }
            Repr::Binned {
                width,
                lag_products,
                self_lag0,
                self_lag1,
            } => {
                let step = width * inv_g;
                let mut tail = 0.0;
                for (d, &p) in lag_products.iter().enumerate().skip(1) {
                    let u = d as f64 * step;
                    if u > KERNEL_REACH {
                        break;
                    }
                    if p != 0.0 {
                        tail += p * kernel(u);
                    }
                }
                let k0 = kernel(0.0);
                (lag_products[0] - self_lag0) * k0 + 2.0 * tail - self_lag1 * kernel(step)
            }
        }
    }

    /// ΣᵢΣⱼ k((Yᵢ − Yⱼ)/g), with or without the i = j terms.
    pub fn sum<K: Fn(f64) -> f64>(&self, g: f64, kernel: K, diagonal: Diagonal) -> f64 {
        let off = self.off_diagonal(g, &kernel);
        match diagonal {
            Diagonal::Include => off + self.n as f64 * kernel(0.0),
            Diagonal::Exclude => off,
        }
    }
}

//! Small numeric helpers shared by the pressure and cover machinery.

use crate::error::{Error, Result};

/// Compensated (Kahan) accumulator. Sums over cover families must not depend
/// on accumulation noise, so every such reduction goes through this.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Ceiling with a 1e-9 guard so that values sitting a few ulp above an
/// integer (from log-ratio arithmetic) do not get bumped up a full step.
pub fn ceil_guarded(x: f64) -> i64 {
    (x - 1e-9).ceil() as i64
}

/// Result of a Perron eigenvalue computation.
#[derive(Debug, Clone, Copy)]
pub struct SpectralRadius {
    pub value: f64,
    pub iterations: usize,
    /// Width of the final Collatz-Wielandt bracket, relative to the shifted
    /// eigenvalue.
    pub residual: f64,
}

const SPECTRAL_TOL: f64 = 1e-13;
const SPECTRAL_MAX_ITER: usize = 100_000;

/// Perron root of an irreducible nonnegative matrix by power iteration on the
/// diagonally shifted matrix M + dI (the shift makes periodic matrices
/// primitive without moving the Perron vector; the root shifts by exactly d).
///
/// The Collatz-Wielandt ratios give a certified two-sided bracket at every
/// step; iteration stops when the bracket is relatively tighter than 1e-13.
pub fn spectral_radius(m: &[Vec<f64>]) -> Result<SpectralRadius> {
    let d = m.len();
    if d == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    for row in m {
        if row.len() != d {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidInput(
                "matrix entries must be finite and nonnegative".into(),
            ));
        }
    }

    let max_row_sum = m
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0_f64, f64::max);
    if max_row_sum <= 0.0 {
        return Err(Error::InvalidInput("matrix is identically zero".into()));
    }
    let shift = 0.5 * max_row_sum;

    let mut v = vec![1.0_f64; d];
    let mut w = vec![0.0_f64; d];
    for iter in 1..=SPECTRAL_MAX_ITER {
        for i in 0..d {
            let mut acc = shift * v[i];
            for j in 0..d {
                acc += m[i][j] * v[j];
            }
            w[i] = acc;
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for i in 0..d {
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let scale = w.iter().fold(0.0_f64, |a, &x| a.max(x));
        for x in w.iter_mut() {
            *x /= scale;
        }
        std::mem::swap(&mut v, &mut w);

        let residual = (hi - lo) / hi;
        if residual <= SPECTRAL_TOL || d == 1 {
            return Ok(SpectralRadius {
                value: 0.5 * (lo + hi) - shift,
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::ResourceLimit(format!(
        "power iteration did not reach residual {SPECTRAL_TOL} in {SPECTRAL_MAX_ITER} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perron_root_of_golden_mean_matrix() {
        let m = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let r = spectral_radius(&m).unwrap();
        assert!((r.value - phi).abs() < 1e-11, "got {}", r.value);
    }

    #[test]
    fn perron_root_of_periodic_permutation() {
        // Cyclic permutation has spectral radius 1 but no spectral gap;
        // the diagonal shift must still produce convergence.
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let r = spectral_radius(&m).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn kahan_handles_small_terms() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..1_000_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-10)).abs() < 1e-13);
    }

    #[test]
    fn guarded_ceil() {
        assert_eq!(ceil_guarded(4.000000000000001), 4);
        assert_eq!(ceil_guarded(4.2), 5);
        assert_eq!(ceil_guarded(16.000000000000004), 16);
    }
}

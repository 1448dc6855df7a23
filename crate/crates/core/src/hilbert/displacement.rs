use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::special::laguerre;

/// `⟨n|D(γ)|m⟩` with `D(γ) = exp(γa† − γ*a)`, via associated Laguerre polynomials.
pub fn displacement_matrix_element(n: usize, m: usize, gamma: C64) -> C64 {
    let x = gamma.norm_sqr();
    let gauss = (-0.5 * x).exp();
    // √(small!/large!) · z^(large-small) accumulated as a product
    let (small, large, z) = if n >= m { (m, n, gamma) } else { (n, m, -gamma.conj()) };
    let mut pre = C64::from(1.0);
    for k in (small + 1)..=large {
        pre *= z / (k as f64).sqrt();
    }
    pre * gauss * laguerre(small, (large - small) as f64, x)
}

/// Matrix `[⟨n|D(γ)|m⟩]` for `n < rows`, `m < cols`.
pub fn displacement_matrix(rows: usize, cols: usize, gamma: C64) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |n, m| displacement_matrix_element(n, m, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// exp(γa† − γ*a) on a truncated space by scaling and squaring of a Taylor series.
    fn expm_oracle(dim: usize, gamma: C64) -> DMatrix<C64> {
        let mut g = DMatrix::from_element(dim, dim, C64::from(0.0));
        for k in 1..dim {
            let s = (k as f64).sqrt();
            g[(k, k - 1)] += gamma * s;
            g[(k - 1, k)] -= gamma.conj() * s;
        }
        let norm = g.norm();
        let mut squarings = 0;
        let mut scale = 1.0;
        while norm * scale > 0.25 {
            scale *= 0.5;
            squarings += 1;
        }
        let gs = g * C64::from(scale);
        let mut term = DMatrix::<C64>::identity(dim, dim);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &gs / C64::from(k as f64);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn trivial_values() {
        assert_eq!(displacement_matrix_element(0, 0, C64::from(0.0)), C64::from(1.0));
        let g = C64::new(0.3, -0.7);
        let v = displacement_matrix_element(0, 0, g);
        assert!((v - C64::from((-0.5 * g.norm_sqr()).exp())).norm() < 1e-15);
        let v = displacement_matrix_element(1, 0, g);
        assert!((v - g * (-0.5 * g.norm_sqr()).exp()).norm() < 1e-15);
    }

    #[test]
    fn matches_matrix_exponential() {
        for &g in &[C64::new(0.2, 0.1), C64::new(-1.1, 0.6), C64::new(0.0, 1.7)] {
            for (n, m) in [(1, 0), (0, 3), (4, 2), (7, 9), (12, 5)] {
                let dim = n + m + 25;
                let d = expm_oracle(dim, g);
                let v = displacement_matrix_element(n, m, g);
                assert!((v - d[(n, m)]).norm() < 1e-12, "({n},{m},{g}): {v} vs {}", d[(n, m)]);
            }
        }
    }

    #[test]
    fn bounded_and_large_index_finite() {
        let g = C64::new(1.3, -0.4);
        for n in 0..60 {
            for m in 0..60 {
                let v = displacement_matrix_element(n, m, g);
                assert!(v.norm() <= 1.0 + 1e-12 && v.re.is_finite());
            }
        }
    }
}

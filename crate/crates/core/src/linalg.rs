//! Dense complex linear-algebra helpers.
//!
//! nalgebra routes `f64` products through its optimized gemm but not
//! `Complex64`, so complex products are assembled from four real products.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Split a complex matrix into (real, imaginary) parts.
pub fn split_complex(m: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    (re, im)
}

/// Recombine real and imaginary parts.
pub fn join_complex(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
        Complex64::new(re[(i, j)], im[(i, j)])
    })
}

/// Complex matrix product via four real gemms.
pub fn cmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split_complex(a);
    let (br, bi) = split_complex(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join_complex(&re, &im)
}

/// Matrix power by binary exponentiation.
pub fn cpow(m: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    let dim = m.nrows();
    let mut result = DMatrix::from_diagonal_element(dim, dim, Complex64::ONE);
    if n == 0 {
        return result;
    }
    let mut base = m.clone();
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = cmul(&result, &base);
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = cmul(&base, &base);
    }
    result
}

/// Trace norm (sum of singular values) of a complex matrix.
pub fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Trace norm of a real matrix.
pub fn trace_norm_real(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (n, k, m) = (a.nrows(), a.ncols(), b.ncols());
        DMatrix::from_fn(n, m, |i, j| {
            (0..k).map(|p| a[(i, p)] * b[(p, j)]).sum::<Complex64>()
        })
    }

    #[test]
    fn cmul_matches_naive_product() {
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(7, 7, |_, _| Complex64::new(next(), next()));
        let b = DMatrix::from_fn(7, 7, |_, _| Complex64::new(next(), next()));
        let fast = cmul(&a, &b);
        let slow = naive_mul(&a, &b);
        assert!(frobenius(&(fast - slow)) < 1e-13);
    }

    #[test]
    fn cpow_matches_repeated_multiplication() {
        let a = DMatrix::from_fn(5, 5, |i, j| {
            Complex64::new(((i + 2 * j) % 3) as f64 * 0.3, (i as f64 - j as f64) * 0.1)
        });
        let mut expected = DMatrix::from_diagonal_element(5, 5, Complex64::ONE);
        for _ in 0..13 {
            expected = naive_mul(&expected, &a);
        }
        assert!(frobenius(&(cpow(&a, 13) - expected)) < 1e-11);
        let identity = cpow(&a, 0);
        assert!(frobenius(&(identity - DMatrix::from_diagonal_element(5, 5, Complex64::ONE))) == 0.0);
    }

    #[test]
    fn trace_norm_of_diagonal_is_abs_sum() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 3.0),
        ]));
        assert!((trace_norm(&m) - 5.5).abs() < 1e-12);
    }
}

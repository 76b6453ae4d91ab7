//! Dense linear solves by Gaussian elimination with partial pivoting.

use alloc::vec::Vec;

use crate::error::{bail, Result};

const SINGULAR_TOL: f64 = 1e-12;

/// Solves `a x = b` for a row-major `n × n` matrix `a`.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        bail!(Input, "matrix has {} entries for {} unknowns", a.len(), n);
    }
    for k in 0..n {
        let (piv, best) = (k..n).map(|i| (i, a[i * n + k].abs())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= SINGULAR_TOL {
            bail!(Numeric, "singular linear system (pivot {:e} in column {})", best.max(0.0), k);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let p = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / p;
            if f == 0.0 {
                continue;
            }
            a[i * n + k] = 0.0;
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = b;
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= a[k * n + j] * x[j];
        }
        x[k] = s / a[k * n + k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn solves_small_system() {
        let x = solve(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_numeric_error() {
        assert!(matches!(solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]), Err(crate::Error::Numeric(_))));
    }
}

//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Rows of the shorter dimension are rotated pairwise until mutually
//! orthogonal. The rotation sequence is fixed, so results are bit-reproducible.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAX_SWEEPS: usize = 80;

/// `a = u · diag(singular_values) · vt`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `m × r` with orthonormal columns.
    pub u: Tensor<T>,
    pub singular_values: Vec<T>,
    /// `r × n`; rows for zero singular values are zero.
    pub vt: Tensor<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

pub fn svd<T: Scalar>(a: &Tensor<T>) -> Result<Svd<T>> {
    if a.shape().len() != 2 {
        return Err(Error::shape("svd input", &[0, 0], a.shape()));
    }
    if !a.is_finite() {
        return Err(Error::Svd("input contains non-finite entries"));
    }
    if a.rows() <= a.cols() {
        svd_wide(a)
    } else {
        let t = svd_wide(&a.transpose())?;
        Ok(Svd {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        })
    }
}

fn svd_wide<T: Scalar>(a: &Tensor<T>) -> Result<Svd<T>> {
    let (m, n) = (a.rows(), a.cols());
    let mut b = a.clone();
    let mut q = Tensor::from_fn(m, m, |i, j| if i == j { T::one() } else { T::zero() });
    let tol = T::epsilon() * T::from_usize_lossy(n.max(m));
    // Rows this small are rounding residue of a rank-deficient input; rotating
    // them against each other never converges and cannot change the result.
    let negligible = {
        let scale = T::epsilon() * a.frobenius_sq().sqrt();
        scale * scale
    };

    let mut converged = m < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..m - 1 {
            for r in p + 1..m {
                let (alpha, beta, gamma) = {
                    let (bp, br) = (b.row(p), b.row(r));
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = T::zero();
                    for (&x, &y) in bp.iter().zip(br) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::lit(2.0);
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut b, p, r, c, s);
                rotate_rows(&mut q, p, r, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Svd("Jacobi sweeps did not converge"));
    }

    let mut order: Vec<(usize, T)> = (0..m)
        .map(|i| (i, b.row(i).iter().map(|&x| x * x).sum::<T>().sqrt()))
        .collect();
    // Stable sort keeps the sweep order for equal values.
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).expect("finite norms"));

    let mut u = Tensor::zeros(&[m, m]);
    let mut vt = Tensor::zeros(&[m, n]);
    let mut sv = Vec::with_capacity(m);
    for (k, &(i, sigma)) in order.iter().enumerate() {
        sv.push(sigma);
        for row in 0..m {
            u.set(row, k, q.get(i, row));
        }
        if sigma > T::zero() {
            for (dst, &src) in vt.row_mut(k).iter_mut().zip(b.row(i)) {
                *dst = src / sigma;
            }
        }
    }
    Ok(Svd {
        u,
        singular_values: sv,
        vt,
    })
}

fn rotate_rows<T: Scalar>(m: &mut Tensor<T>, p: usize, r: usize, c: T, s: T) {
    let cols = m.cols();
    let data = m.data_mut();
    let (head, tail) = data.split_at_mut(r * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rr = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rr.iter_mut()) {
        let (xp, yr) = (*x, *y);
        *x = c * xp - s * yr;
        *y = s * xp + c * yr;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(s: &Svd<f64>, m: usize, n: usize) -> Tensor<f64> {
        Tensor::from_fn(m, n, |i, j| {
            (0..s.rank())
                .map(|k| s.u.get(i, k) * s.singular_values[k] * s.vt.get(k, j))
                .sum()
        })
    }

    #[test]
    fn wide_and_tall_reconstruct() {
        for (m, n) in [(3, 7), (7, 3), (4, 4), (1, 5), (5, 1)] {
            let a = Tensor::from_fn(m, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7 + (i as f64).sin());
            let s = svd(&a).unwrap();
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let r = reconstruct(&s, m, n);
            for (x, y) in r.data().iter().zip(a.data()) {
                assert!((x - y).abs() < 1e-12, "{m}x{n}: {x} vs {y}");
            }
            // orthonormal u columns
            for p in 0..s.rank() {
                for q in 0..s.rank() {
                    let d: f64 = (0..m).map(|i| s.u.get(i, p) * s.u.get(i, q)).sum();
                    let want = if p == q { 1.0 } else { 0.0 };
                    assert!((d - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_nan() {
        let a = Tensor::from_vec(&[1, 2], vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(svd(&a), Err(Error::Svd(_))));
    }

    #[test]
    fn zero_matrix() {
        let s = svd(&Tensor::<f64>::zeros(&[3, 4])).unwrap();
        assert!(s.singular_values.iter().all(|&x| x == 0.0));
    }
}

//! Singular spectrum analysis and Pearson-gated adaptive reconstruction.
//!
//! The series is embedded into its Hankel trajectory matrix, decomposed by
//! SVD into rank-one elementary matrices, and each elementary matrix is
//! mapped back to a series by anti-diagonal averaging. Denoising keeps the
//! shortest prefix of leading components whose sum correlates with the
//! original series at or above a threshold.

use crate::error::{Error, Result};
use crate::linalg::{svd, Svd};
use crate::scalar::Scalar;
use crate::series::TimeSeries;
use crate::tensor::Tensor;

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssaConfig<T> {
    pub embed_dim: usize,
    pub pearson_threshold: T,
}

impl<T: Scalar> Default for PssaConfig<T> {
    fn default() -> Self {
        Self {
            embed_dim: 15,
            pearson_threshold: T::lit(0.99),
        }
    }
}

impl<T: Scalar> PssaConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < 2 {
            return Err(Error::Config(format!(
                "pssa.embed_dim must be at least 2, got {}",
                self.embed_dim
            )));
        }
        let t = self.pearson_threshold;
        if !(t > T::zero() && t <= T::one()) {
            return Err(Error::Config(format!("pssa.threshold must lie in (0, 1], got {t}")));
        }
        Ok(())
    }
}

/// `S × K` Hankel matrix with `entries[i][j] = c[i + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix<T> {
    entries: Tensor<T>,
}

impl<T: Scalar> TrajectoryMatrix<T> {
    pub fn embed_dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn k(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &Tensor<T> {
        &self.entries
    }
}

pub fn embed<T: Scalar>(ts: &TimeSeries<T>, embed_dim: usize) -> Result<TrajectoryMatrix<T>> {
    embed_values(ts.values(), embed_dim)
}

fn embed_values<T: Scalar>(c: &[T], embed_dim: usize) -> Result<TrajectoryMatrix<T>> {
    let n = c.len();
    if embed_dim < 2 || embed_dim > n {
        return Err(Error::EmbedDimOutOfRange { embed_dim, len: n });
    }
    let k = n - embed_dim + 1;
    Ok(TrajectoryMatrix {
        entries: Tensor::from_fn(embed_dim, k, |i, j| c[i + j]),
    })
}

/// Averages each anti-diagonal `i + j = k` of an `S × K` matrix.
///
/// Sums deviations from the first entry of each diagonal, so a genuine Hankel
/// matrix maps back to its series without rounding.
pub fn diagonal_average<T: Scalar>(matrix: &Tensor<T>) -> Vec<T> {
    let (s, k) = (matrix.rows(), matrix.cols());
    let anchor: Vec<T> = (0..s + k - 1)
        .map(|idx| {
            if idx < k {
                matrix.get(0, idx)
            } else {
                matrix.get(idx - k + 1, k - 1)
            }
        })
        .collect();
    let mut sums = vec![T::zero(); s + k - 1];
    for i in 0..s {
        for (j, &x) in matrix.row(i).iter().enumerate() {
            sums[i + j] += x - anchor[i + j];
        }
    }
    for (idx, v) in sums.iter_mut().enumerate() {
        *v = anchor[idx] + *v / T::from_usize_lossy(anti_diagonal_len(idx, s, k));
    }
    sums
}

#[inline]
fn anti_diagonal_len(idx: usize, s: usize, k: usize) -> usize {
    let lo = idx.saturating_sub(k - 1);
    let hi = idx.min(s - 1);
    hi - lo + 1
}

/// Anti-diagonal average of `sigma · u vᵀ` without materialising the matrix.
fn hankelize_rank_one<T: Scalar>(u: &[T], sigma: T, v: &[T]) -> Vec<T> {
    let (s, k) = (u.len(), v.len());
    let mut out = vec![T::zero(); s + k - 1];
    for (i, &ui) in u.iter().enumerate() {
        let a = ui * sigma;
        for (o, &vj) in out[i..i + k].iter_mut().zip(v) {
            *o += a * vj;
        }
    }
    for (idx, x) in out.iter_mut().enumerate() {
        *x /= T::from_usize_lossy(anti_diagonal_len(idx, s, k));
    }
    out
}

#[derive(Debug, Clone)]
pub struct SsaDecomposition<T> {
    /// Every singular value of the trajectory matrix, descending.
    pub singular_values: Vec<T>,
    /// One reconstructed series per retained singular triple, leading first.
    pub components: Vec<Vec<T>>,
    pub embed_dim: usize,
}

impl<T: Scalar> SsaDecomposition<T> {
    /// Number of singular values above the rank cutoff.
    pub fn rank(&self) -> usize {
        self.components.len()
    }

    /// Elementwise sum of the first `m` components.
    pub fn reconstruct(&self, m: usize) -> Vec<T> {
        let n = self.series_len();
        let mut out = vec![T::zero(); n];
        for comp in self.components.iter().take(m) {
            for (o, &c) in out.iter_mut().zip(comp) {
                *o += c;
            }
        }
        out
    }

    pub fn series_len(&self) -> usize {
        self.components.first().map_or(0, Vec::len)
    }
}

fn effective_rank<T: Scalar>(sv: &[T]) -> usize {
    let Some(&lead) = sv.first() else { return 0 };
    if lead <= T::zero() {
        return 0;
    }
    let cut = lead * T::lit(RANK_CUTOFF).max(T::epsilon() * T::lit(10.0));
    sv.iter().take_while(|&&s| s > cut).count()
}

fn trajectory_svd<T: Scalar>(c: &[T], embed_dim: usize) -> Result<Svd<T>> {
    let traj = embed_values(c, embed_dim)?;
    svd(traj.entries())
}

pub fn decompose<T: Scalar>(ts: &TimeSeries<T>, embed_dim: usize) -> Result<SsaDecomposition<T>> {
    decompose_values(ts.values(), embed_dim)
}

fn decompose_values<T: Scalar>(c: &[T], embed_dim: usize) -> Result<SsaDecomposition<T>> {
    let sv = trajectory_svd(c, embed_dim)?;
    let rank = effective_rank(&sv.singular_values);
    let s = embed_dim;
    let mut u_col = vec![T::zero(); s];
    let components = (0..rank)
        .map(|i| {
            for (r, slot) in u_col.iter_mut().enumerate() {
                *slot = sv.u.get(r, i);
            }
            hankelize_rank_one(&u_col, sv.singular_values[i], sv.vt.row(i))
        })
        .collect();
    Ok(SsaDecomposition {
        singular_values: sv.singular_values,
        components,
        embed_dim,
    })
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: a.len(),
        });
    }
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::ZeroVariance("Pearson correlation needs non-constant inputs"));
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone)]
pub struct PssaResult<T> {
    pub denoised: TimeSeries<T>,
    /// Number of leading components kept.
    pub m_used: usize,
    pub achieved_r: T,
    pub rank: usize,
}

/// Shortest prefix of components whose sum reaches `threshold` correlation with
/// `original`. Falls back to the full rank when no shorter prefix qualifies.
///
/// Returns `(m, r, reconstruction)`.
pub fn select_prefix<T: Scalar>(original: &[T], dec: &SsaDecomposition<T>, threshold: T) -> Result<(usize, T, Vec<T>)> {
    let n = original.len();
    let rank = dec.rank();
    if rank == 0 {
        return Err(Error::ZeroVariance("cannot denoise an all-zero series"));
    }
    // Fails early for a constant original.
    pearson(original, original)?;
    let mut acc = vec![T::zero(); n];
    let mut last_r = -T::one();
    for (m, comp) in dec.components.iter().enumerate() {
        for (a, &c) in acc.iter_mut().zip(comp) {
            *a += c;
        }
        match pearson(&acc, original) {
            Ok(r) => {
                last_r = r;
                if r >= threshold {
                    return Ok((m + 1, r, acc));
                }
            }
            // A constant prefix carries no correlation; keep stacking.
            Err(Error::ZeroVariance(_)) => last_r = T::zero(),
            Err(e) => return Err(e),
        }
    }
    Ok((rank, last_r, acc))
}

pub fn pssa_denoise<T: Scalar>(ts: &TimeSeries<T>, cfg: &PssaConfig<T>) -> Result<PssaResult<T>> {
    cfg.validate()?;
    let dec = decompose(ts, cfg.embed_dim)?;
    pssa_from_decomposition(ts, &dec, cfg)
}

pub fn pssa_from_decomposition<T: Scalar>(
    ts: &TimeSeries<T>,
    dec: &SsaDecomposition<T>,
    cfg: &PssaConfig<T>,
) -> Result<PssaResult<T>> {
    let (m_used, achieved_r, values) = select_prefix(ts.values(), dec, cfg.pearson_threshold)?;
    let mut denoised = TimeSeries::new(values)?.with_interval(ts.sample_interval);
    denoised.origin_label = ts.origin_label.clone();
    Ok(PssaResult {
        denoised,
        m_used,
        achieved_r,
        rank: dec.rank(),
    })
}

/// Leak-free variant: the first `n_train` values are denoised on their own and
/// fix the component count; every later value is the last point of the
/// reconstruction of the prefix ending at it.
pub fn pssa_denoise_causal<T: Scalar>(
    ts: &TimeSeries<T>,
    n_train: usize,
    cfg: &PssaConfig<T>,
) -> Result<PssaResult<T>> {
    cfg.validate()?;
    if n_train > ts.len() || n_train < cfg.embed_dim {
        return Err(Error::SeriesTooShort {
            required: cfg.embed_dim,
            actual: n_train.min(ts.len()),
        });
    }
    let values = ts.values();
    let train = TimeSeries::new(values[..n_train].to_vec())?;
    let fitted = pssa_denoise(&train, cfg)?;
    let m = fitted.m_used;
    let mut out = fitted.denoised.into_values();
    let s = cfg.embed_dim;
    for t in n_train..values.len() {
        let prefix = &values[..=t];
        let sv = trajectory_svd(prefix, s)?;
        let keep = m.min(effective_rank(&sv.singular_values));
        let k = prefix.len() - s + 1;
        // The last point lies on a single-entry anti-diagonal.
        let last = (0..keep)
            .map(|i| sv.u.get(s - 1, i) * sv.singular_values[i] * sv.vt.get(i, k - 1))
            .sum::<T>();
        out.push(last);
    }
    let mut denoised = TimeSeries::new(out)?.with_interval(ts.sample_interval);
    denoised.origin_label = ts.origin_label.clone();
    Ok(PssaResult {
        denoised,
        m_used: m,
        achieved_r: fitted.achieved_r,
        rank: fitted.rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn embed_examples() {
        let t = embed(&ts(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(t.entries().shape(), &[2, 3]);
        assert_eq!(t.entries().data(), &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0]);
        let t = embed(&ts(&[1.0, 2.0, 3.0, 4.0]), 4).unwrap();
        assert_eq!(t.entries().shape(), &[4, 1]);
        assert_eq!(t.k(), 1);
        assert!(matches!(
            embed(&ts(&[1.0, 2.0, 3.0]), 1),
            Err(Error::EmbedDimOutOfRange { .. })
        ));
        assert!(embed(&ts(&[1.0, 2.0, 3.0]), 4).is_err());
    }

    #[test]
    fn diagonal_average_examples() {
        let h = embed(&ts(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(diagonal_average(h.entries()), vec![1.0, 2.0, 3.0, 4.0]);
        let m = Tensor::from_vec(&[2, 2], vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(diagonal_average(&m), vec![1.0, 2.5, 4.0]);
        let row = Tensor::from_vec(&[1, 4], vec![7.0, -1.0, 0.5, 2.0]).unwrap();
        assert_eq!(diagonal_average(&row), vec![7.0, -1.0, 0.5, 2.0]);
    }

    #[test]
    fn constant_series_is_rank_one() {
        let d = decompose(&ts(&[5.0; 5]), 3).unwrap();
        assert_eq!(d.rank(), 1);
        for x in &d.components[0] {
            assert!((x - 5.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_series_has_no_components() {
        let d = decompose(&ts(&[0.0; 8]), 3).unwrap();
        assert_eq!(d.rank(), 0);
        assert!(d.singular_values.iter().all(|&s| s == 0.0));
        assert!(pssa_denoise(
            &ts(&[0.0; 8]),
            &PssaConfig {
                embed_dim: 3,
                pearson_threshold: 0.99
            }
        )
        .is_err());
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0f64, 2.0, 3.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        let r = pearson(&a, &[1.0, 2.0, 4.0]).unwrap();
        let hand = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        assert!((r - hand).abs() < 1e-12);
        assert!((r - 0.98198).abs() < 1e-5);
        assert!(matches!(pearson(&a, &[1.0, 1.0, 1.0]), Err(Error::ZeroVariance(_))));
        assert!(matches!(pearson(&a, &[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn constant_input_errors() {
        let err = pssa_denoise(&ts(&[3.0; 40]), &PssaConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)), "{err:?}");
    }

    #[test]
    fn invalid_config() {
        let bad = PssaConfig {
            embed_dim: 15,
            pearson_threshold: 0.0,
        };
        assert!(bad.validate().is_err());
        let bad = PssaConfig {
            embed_dim: 1,
            pearson_threshold: 0.9,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn causal_mode_keeps_train_part_and_length() {
        let v: Vec<f64> = (0..120)
            .map(|i| 8.0 + (i as f64 * 0.3).sin() + 0.1 * ((i * 37 % 11) as f64 - 5.0) / 5.0)
            .collect();
        let s = ts(&v);
        let cfg = PssaConfig::default();
        let causal = pssa_denoise_causal(&s, 100, &cfg).unwrap();
        assert_eq!(causal.denoised.len(), 120);
        let train_only = pssa_denoise(&ts(&v[..100]), &cfg).unwrap();
        assert_eq!(&causal.denoised.values()[..100], train_only.denoised.values());
        // Appending future data must not change a causal value.
        let shorter = pssa_denoise_causal(&ts(&v[..110]), 100, &cfg).unwrap();
        assert_eq!(&causal.denoised.values()[..110], shorter.denoised.values());
    }
}

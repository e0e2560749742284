//! Weighted selection from an arbitrary tight frame.
//!
//! Vector norms are first equalized by duplication: with `v_a` a vector of
//! minimal norm, `v_j` is replaced by `n_j = floor(|v_j|^2 / |v_a|^2)` copies
//! of `v_j / sqrt(n_j)`. The frame operator is unchanged, every copy has
//! squared norm in `[|v_a|^2, 2 |v_a|^2)`, and the copies satisfy the halving
//! norm condition with `theta = 2`. Halving the copies and folding them back
//! gives weights `lambda_j = (M'/(2N)) (copies of j kept) / n_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{weighted_operator, FrameBounds, FrameSystem};
use crate::halving::{halving_select, HalvingCertificate, TIGHT_TOL};
use crate::partition::OracleConfig;
use crate::scalar::C64;

/// Default cap on the number of copies `M'`.
pub const DEFAULT_DUPLICATION_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuplicationMap {
    /// `n_j` for each source vector.
    pub counts: Vec<usize>,
    /// `M' = sum_j n_j`.
    pub m_prime: usize,
    /// Source index of each copy.
    pub copy_to_source: Vec<usize>,
    /// Index of the minimal-norm anchor vector.
    pub anchor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCertificate {
    /// `lambda_j >= 0`, one per source vector.
    #[serde(with = "crate::serde_dec::vec")]
    pub weights: Vec<f64>,
    /// `{ j : lambda_j != 0 }`, ascending.
    pub support: Vec<usize>,
    /// Verified bounds of `sum_j lambda_j v_j v_j^*`.
    pub bounds: FrameBounds,
    /// Number of selected copies `|J|`; the support never exceeds it.
    pub support_budget: usize,
    /// `M' / (2N)`.
    #[serde(with = "crate::serde_dec")]
    pub scale: f64,
    pub duplication: DuplicationMap,
    pub halving: HalvingCertificate,
}

/// Duplicates vectors to equalize norms. Requires a tight frame without zero
/// vectors; fails when more than `cap` copies would be needed.
pub fn duplicate_normalize_capped(frame: &FrameSystem, cap: usize) -> Result<(FrameSystem, DuplicationMap)> {
    let norms = frame.norms_sq();
    if let Some(j) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroVector { index: j });
    }
    let b = crate::frame::frame_bounds(frame)?;
    if (b.lower - 1.0).abs() > TIGHT_TOL || (b.upper - 1.0).abs() > TIGHT_TOL {
        return Err(Error::NotTight {
            lower: b.lower,
            upper: b.upper,
            tol: TIGHT_TOL,
        });
    }
    let mut anchor = 0;
    for (j, &x) in norms.iter().enumerate() {
        if x < norms[anchor] {
            anchor = j;
        }
    }
    let base = norms[anchor];
    let mut counts = Vec::with_capacity(norms.len());
    let mut total: u128 = 0;
    for (j, &x) in norms.iter().enumerate() {
        let ratio = x / base;
        let nj = ratio.floor().max(1.0);
        let per = x / nj;
        if !(per >= base * (1.0 - 1e-12) && per < 2.0 * base) {
            return Err(Error::Internal(format!(
                "copy count {nj} for vector {j} breaks the norm window"
            )));
        }
        if nj > cap as f64 {
            return Err(Error::DuplicationCap {
                m_prime: nj as u128,
                cap,
            });
        }
        let nj = nj as usize;
        total += nj as u128;
        counts.push(nj);
    }
    if total > cap as u128 {
        return Err(Error::DuplicationCap { m_prime: total, cap });
    }
    let m_prime = total as usize;
    let n = frame.dim();
    let mut cols = nalgebra::DMatrix::<C64>::zeros(n, m_prime);
    let mut copy_to_source = Vec::with_capacity(m_prime);
    let mut k = 0;
    for (j, &nj) in counts.iter().enumerate() {
        let s = C64::new(1.0 / (nj as f64).sqrt(), 0.0);
        let v = frame.columns().column(j) * s;
        for _ in 0..nj {
            cols.set_column(k, &v);
            copy_to_source.push(j);
            k += 1;
        }
    }
    let dup = FrameSystem::from_columns(cols, frame.field())?;
    Ok((
        dup,
        DuplicationMap {
            counts,
            m_prime,
            copy_to_source,
            anchor,
        },
    ))
}

pub fn duplicate_normalize(frame: &FrameSystem) -> Result<(FrameSystem, DuplicationMap)> {
    duplicate_normalize_capped(frame, DEFAULT_DUPLICATION_CAP)
}

/// Nonnegative weights on the frame with support at most the number of
/// selected copies and eigensolve-verified two-sided bounds.
pub fn weighted_select(frame: &FrameSystem, cfg: &OracleConfig) -> Result<WeightedCertificate> {
    weighted_select_capped(frame, cfg, DEFAULT_DUPLICATION_CAP)
}

pub fn weighted_select_capped(
    frame: &FrameSystem,
    cfg: &OracleConfig,
    cap: usize,
) -> Result<WeightedCertificate> {
    let (dup, map) = duplicate_normalize_capped(frame, cap)?;
    // theta = 2 needs 2 <= M'/N; with fewer copies fall back to the largest
    // admissible theta, which takes the fast path anyway
    let n = frame.dim() as f64;
    let theta = 2.0_f64.min(map.m_prime as f64 / n);
    let halving = halving_select(&dup, theta, cfg)?;
    let scale = map.m_prime as f64 / (2.0 * n);
    let mut kept = vec![0usize; frame.len()];
    for &k in &halving.indices {
        kept[map.copy_to_source[k]] += 1;
    }
    let weights: Vec<f64> = kept
        .iter()
        .zip(&map.counts)
        .map(|(&c, &nj)| scale * c as f64 / nj as f64)
        .collect();
    let support: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] != 0.0).collect();
    let (lo, hi) = weighted_operator(frame, &weights)?.extreme_eigenvalues()?;
    Ok(WeightedCertificate {
        weights,
        support,
        bounds: FrameBounds { lower: lo, upper: hi },
        support_budget: halving.indices.len(),
        scale,
        duplication: map,
        halving,
    })
}

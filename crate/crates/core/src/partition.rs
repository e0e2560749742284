//! Splitting a frame into two halves that each carry about half of the frame
//! operator.
//!
//! Given vectors with `|v_j|^2 <= delta` and `alpha I <= sum_j v_j v_j^* <= beta I`
//! with `beta >= alpha > delta`, a partition `S_1, S_2` exists such that each
//! side satisfies
//!
//! ```text
//! alpha (1 - 5 sqrt(delta/alpha)) / 2  <=  sum_{j in S_i} v_j v_j^*  <=  beta (1 + 5 sqrt(delta/alpha)) / 2
//! ```
//!
//! Existence is nonconstructive, so this module searches for such a split and
//! verifies every candidate with a dense eigensolve. Small index sets are
//! enumerated exhaustively; larger ones are searched with seeded random
//! balanced splits.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{gather, gram_of_columns, subset_bounds, FrameBounds, FrameSystem, HermitianMatrix};
use crate::scalar::C64;

/// Largest active set the exhaustive strategy accepts.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Default number of randomized candidates.
pub const DEFAULT_BUDGET: usize = 10_000;

/// Slack allowed when comparing measured bounds with targets.
pub const VERIFY_SLACK: f64 = 1e-10;

const TIE_EPS: f64 = 1e-12;
const BATCH: usize = 64;
const REFRESH_EVERY: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] indices, randomized above.
    Auto,
    Exhaustive,
    Randomized,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "exhaustive" => Ok(Strategy::Exhaustive),
            "randomized" => Ok(Strategy::Randomized),
            other => Err(format!(
                "unknown strategy `{other}` (expected auto, exhaustive or randomized)"
            )),
        }
    }
}

/// Search settings shared by every pipeline that needs partitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub strategy: Strategy,
    pub budget: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            budget: DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Config for round `round` of an iterated search; each round gets its
    /// own deterministic stream.
    pub(crate) fn for_round(&self, round: usize) -> Self {
        Self {
            seed: self
                .seed
                .wrapping_add((round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..*self
        }
    }
}

/// Lower and upper per-side targets for a split of a frame with bounds
/// `(alpha, beta)` and squared vector norms at most `delta`.
pub fn ap1_targets(alpha: f64, beta: f64, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !(alpha > delta) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "split targets need alpha > delta > 0, got alpha = {alpha}, delta = {delta}"
        )));
    }
    if !(beta >= alpha) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "split targets need beta >= alpha, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let r = 5.0 * (delta / alpha).sqrt();
    Ok((alpha * (1.0 - r) / 2.0, beta * (1.0 + r) / 2.0))
}

/// A validated request to split `active` indices of a frame.
#[derive(Clone, Debug)]
pub struct PartitionRequest<'a> {
    frame: &'a FrameSystem,
    active: Vec<usize>,
    delta: f64,
    alpha: f64,
    beta: f64,
}

impl<'a> PartitionRequest<'a> {
    pub fn new(
        frame: &'a FrameSystem,
        mut active: Vec<usize>,
        delta: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::Precondition("active index set is empty".into()));
        }
        active.sort_unstable();
        if active.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("active index set has duplicates".into()));
        }
        if let Some(&bad) = active.iter().find(|&&j| j >= frame.len()) {
            return Err(Error::Precondition(format!(
                "active index {bad} out of range for {} vectors",
                frame.len()
            )));
        }
        ap1_targets(alpha, beta, delta)?;
        Ok(Self {
            frame,
            active,
            delta,
            alpha,
            beta,
        })
    }

    /// Request over the whole frame with `delta` taken as the largest squared
    /// norm and `(alpha, beta)` the measured frame bounds.
    pub fn whole_frame(frame: &'a FrameSystem) -> Result<Self> {
        let (_, delta) = frame.max_norm_sq();
        let b = crate::frame::frame_bounds(frame)?;
        Self::new(frame, (0..frame.len()).collect(), delta, b.lower, b.upper)
    }

    pub fn frame(&self) -> &FrameSystem {
        self.frame
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn targets(&self) -> (f64, f64) {
        // validated at construction
        ap1_targets(self.alpha, self.beta, self.delta).expect("validated targets")
    }

    fn check_norms(&self) -> Result<()> {
        let bound = self.delta * (1.0 + 1e-12);
        for &j in &self.active {
            let ns = self.frame.norm_sq(j);
            if ns > bound {
                return Err(Error::VectorNorm {
                    index: j,
                    norm_sq: ns,
                    bound: self.delta,
                });
            }
        }
        Ok(())
    }
}

/// A verified split of the active set. `s1` is never larger than `s2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub bounds_s1: FrameBounds,
    pub bounds_s2: FrameBounds,
}

fn meets(b: &FrameBounds, lower: f64, upper: f64) -> bool {
    b.lower >= lower - VERIFY_SLACK && b.upper <= upper + VERIFY_SLACK
}

fn bounds_of(op: &HermitianMatrix, empty: bool) -> Result<FrameBounds> {
    if empty {
        return Ok(FrameBounds::ZERO);
    }
    let (lo, hi) = op.extreme_eigenvalues()?;
    Ok(FrameBounds {
        lower: lo,
        upper: hi,
    })
}

/// Orders the two sides so the first is the smaller one; on equal sizes the
/// side holding the smallest index comes first.
fn normalize(a: Vec<usize>, b: Vec<usize>, ba: FrameBounds, bb: FrameBounds) -> PartitionResult {
    let a_first = match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a <= b,
    };
    if a_first {
        PartitionResult {
            s1: a,
            s2: b,
            bounds_s1: ba,
            bounds_s2: bb,
        }
    } else {
        PartitionResult {
            s1: b,
            s2: a,
            bounds_s1: bb,
            bounds_s2: ba,
        }
    }
}

/// Finds a split meeting the request's targets on both sides.
pub fn spectral_partition(req: &PartitionRequest<'_>, cfg: &OracleConfig) -> Result<PartitionResult> {
    req.check_norms()?;
    let n = req.active.len();
    match cfg.strategy {
        Strategy::Exhaustive => exhaustive(req),
        Strategy::Randomized => randomized(req, cfg),
        Strategy::Auto if n <= EXHAUSTIVE_LIMIT => exhaustive(req),
        Strategy::Auto => randomized(req, cfg),
    }
}

/// One evaluated split from the exhaustive enumeration. `mask` selects, among
/// `active[1..]`, the indices joining `active[0]` on the first side.
#[derive(Clone, Copy, Debug)]
struct Evaluated {
    mask: u32,
    first: FrameBounds,
    second: FrameBounds,
}

fn split_from_mask(active: &[usize], mask: u32) -> (Vec<usize>, Vec<usize>) {
    let mut a = vec![active[0]];
    let mut b = Vec::new();
    for (i, &j) in active.iter().enumerate().skip(1) {
        if mask & (1 << (i - 1)) != 0 {
            a.push(j);
        } else {
            b.push(j);
        }
    }
    (a, b)
}

/// Enumerates all `2^(n-1)` splits (the side with `active[0]` listed first) and
/// returns those meeting the targets, in mask order.
fn enumerate_accepted(req: &PartitionRequest<'_>) -> Result<Vec<Evaluated>> {
    let n = req.active.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::ExhaustiveTooLarge {
            size: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let (lower, upper) = req.targets();
    let field = req.frame.field();
    let cols = gather(req.frame.columns(), &req.active)?;
    let dim = cols.nrows();
    let outer: Vec<DMatrix<C64>> = (0..n)
        .map(|i| {
            let v = cols.column(i);
            &v * v.adjoint()
        })
        .collect();
    let total: DMatrix<C64> = outer
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, o| acc + o);
    let count: u64 = 1u64 << (n - 1);
    let chunk = REFRESH_EVERY as u64;
    let chunks = count.div_ceil(chunk);

    let from_scratch = |mask: u32| -> DMatrix<C64> {
        let mut s = outer[0].clone();
        for i in 1..n {
            if mask & (1 << (i - 1)) != 0 {
                s += &outer[i];
            }
        }
        s
    };

    let per_chunk: Vec<Result<Vec<Evaluated>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(count);
            let mut found = Vec::new();
            // Gray-code walk inside the chunk, refreshed from scratch at its start.
            let gray = |k: u64| (k ^ (k >> 1)) as u32;
            let mut mask = gray(start);
            let mut first = from_scratch(mask);
            for k in start..end {
                if k > start {
                    let next = gray(k);
                    let flipped = (mask ^ next).trailing_zeros() as usize;
                    let o = &outer[flipped + 1];
                    if next & (1 << flipped) != 0 {
                        first += o;
                    } else {
                        first -= o;
                    }
                    mask = next;
                }
                let a_count = 1 + mask.count_ones() as usize;
                if n > 1 && a_count == n {
                    // both sides nonempty whenever there is a choice
                    continue;
                }
                let second = &total - &first;
                let fb = bounds_of(&HermitianMatrix::symmetrized(first.clone(), field), false)?;
                if !meets(&fb, lower, upper) {
                    continue;
                }
                let sb = bounds_of(
                    &HermitianMatrix::symmetrized(second, field),
                    a_count == n,
                )?;
                if meets(&sb, lower, upper) {
                    found.push(Evaluated {
                        mask,
                        first: fb,
                        second: sb,
                    });
                }
            }
            Ok(found)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_chunk {
        all.extend(r?);
    }
    all.sort_by_key(|e| e.mask);
    Ok(all)
}

/// Every split of the active set that meets the targets, as
/// `(side containing the smallest active index, other side)`, in enumeration
/// order. Both sides are nonempty unless the active set is a singleton.
/// Sizes above [`EXHAUSTIVE_LIMIT`] are rejected.
pub fn accepted_splits(req: &PartitionRequest<'_>) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    req.check_norms()?;
    Ok(enumerate_accepted(req)?
        .into_iter()
        .map(|e| split_from_mask(&req.active, e.mask))
        .collect())
}

/// Width of the band holding both sides' spectra.
fn spread(r: &PartitionResult) -> f64 {
    r.bounds_s1.upper.max(r.bounds_s2.upper) - r.bounds_s1.lower.min(r.bounds_s2.lower)
}

/// The accepted split whose two sides are spectrally closest; ties go to the
/// lexicographically smallest `s1`.
fn exhaustive(req: &PartitionRequest<'_>) -> Result<PartitionResult> {
    let accepted = enumerate_accepted(req)?;
    let (lower, upper) = req.targets();
    let mut best: Option<PartitionResult> = None;
    for e in accepted {
        let (a, b) = split_from_mask(&req.active, e.mask);
        let cand = normalize(a, b, e.first, e.second);
        best = Some(match best {
            None => cand,
            Some(cur) => {
                let (x, y) = (spread(&cand), spread(&cur));
                if x < y - TIE_EPS || ((x - y).abs() <= TIE_EPS && cand.s1 < cur.s1) {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    let best = best.ok_or(Error::NoPartition {
        size: req.active.len(),
        lower,
        upper,
    })?;
    finalize(req, best)
}

fn randomized(req: &PartitionRequest<'_>, cfg: &OracleConfig) -> Result<PartitionResult> {
    let (lower, upper) = req.targets();
    let n = req.active.len();
    let half = n / 2;
    let field = req.frame.field();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tried = 0usize;
    while tried < cfg.budget {
        let batch = BATCH.min(cfg.budget - tried);
        let candidates: Vec<(Vec<usize>, Vec<usize>)> = (0..batch)
            .map(|_| {
                let mut perm = req.active.clone();
                perm.shuffle(&mut rng);
                let mut a = perm[..half].to_vec();
                let mut b = perm[half..].to_vec();
                a.sort_unstable();
                b.sort_unstable();
                (a, b)
            })
            .collect();
        let results: Vec<Result<Option<(FrameBounds, FrameBounds)>>> = candidates
            .par_iter()
            .map(|(a, b)| {
                let fa = bounds_of(
                    &gram_of_columns(&gather(req.frame.columns(), a)?, field),
                    a.is_empty(),
                )?;
                if !meets(&fa, lower, upper) {
                    return Ok(None);
                }
                let fb = bounds_of(
                    &gram_of_columns(&gather(req.frame.columns(), b)?, field),
                    b.is_empty(),
                )?;
                Ok(meets(&fb, lower, upper).then_some((fa, fb)))
            })
            .collect();
        for ((a, b), r) in candidates.into_iter().zip(results) {
            if let Some((fa, fb)) = r? {
                return finalize(req, normalize(a, b, fa, fb));
            }
        }
        tried += batch;
    }
    Err(Error::SearchExhausted { tried })
}

/// Recomputes both sides from scratch before handing the split out.
fn finalize(req: &PartitionRequest<'_>, mut res: PartitionResult) -> Result<PartitionResult> {
    let (lower, upper) = req.targets();
    res.bounds_s1 = subset_bounds(req.frame, &res.s1)?;
    res.bounds_s2 = subset_bounds(req.frame, &res.s2)?;
    if !meets(&res.bounds_s1, lower, upper) || !meets(&res.bounds_s2, lower, upper) {
        return Err(Error::Internal(
            "split failed re-verification from scratch".into(),
        ));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameSystem;

    #[test]
    fn targets_formula() {
        let (lo, hi) = ap1_targets(1.0, 1.0, 1.0 / 400.0).unwrap();
        assert!((lo - 0.375).abs() < 1e-15 && (hi - 0.625).abs() < 1e-15);
        let (lo, hi) = ap1_targets(1.0, 1.0, 1.0 / 25.0).unwrap();
        assert!(lo.abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        let r = 5.0 * (1.0_f64 / 150.0).sqrt();
        let (lo, hi) = ap1_targets(0.375, 0.625, 1.0 / 400.0).unwrap();
        assert!((lo - 0.375 * (1.0 - r) / 2.0).abs() < 1e-15);
        assert!((hi - 0.625 * (1.0 + r) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn targets_domain_errors() {
        assert!(matches!(ap1_targets(0.5, 1.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(ap1_targets(1.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(ap1_targets(1.0, 0.5, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_pair_splits() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f = FrameSystem::from_real(vec![vec![h], vec![h]]).unwrap();
        let req = PartitionRequest::new(&f, vec![0, 1], 0.5, 1.0, 1.0).unwrap();
        let (lo, hi) = req.targets();
        assert!((lo - (1.0 - 5.0 * 0.5_f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((hi - (1.0 + 5.0 * 0.5_f64.sqrt()) / 2.0).abs() < 1e-15);
        let res = spectral_partition(&req, &OracleConfig::default()).unwrap();
        assert_eq!((res.s1.clone(), res.s2.clone()), (vec![0], vec![1]));
        assert!((res.bounds_s1.lower - 0.5).abs() < 1e-15);
        assert!((res.bounds_s2.upper - 0.5).abs() < 1e-15);
        assert_eq!(accepted_splits(&req).unwrap(), vec![(vec![0], vec![1])]);
    }

    #[test]
    fn paired_copies_split_exactly_in_half() {
        let s = 0.5;
        let vs = vec![
            vec![s, 0.0],
            vec![s, 0.0],
            vec![0.0, s],
            vec![0.0, s],
            vec![s, 0.0],
            vec![s, 0.0],
            vec![0.0, s],
            vec![0.0, s],
        ];
        let f = FrameSystem::from_real(vs).unwrap();
        // 4 copies on each axis of squared norm 1/4: tight. delta = 1/4 < alpha.
        let req = PartitionRequest::new(&f, (0..8).collect(), 0.25, 1.0, 1.0).unwrap();
        let res = spectral_partition(
            &req,
            &OracleConfig {
                strategy: Strategy::Exhaustive,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((res.bounds_s1.lower - 0.5).abs() < 1e-12);
        assert!((res.bounds_s1.upper - 0.5).abs() < 1e-12);
        assert_eq!(res.s1.len(), 4);
    }

    #[test]
    fn randomized_is_deterministic() {
        let n = 2;
        let m = 64;
        let vs: Vec<Vec<C64>> = (0..m)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let ang = 2.0 * std::f64::consts::PI * (k * j) as f64 / m as f64;
                        C64::from_polar(1.0 / (m as f64).sqrt(), ang)
                    })
                    .collect()
            })
            .collect();
        let f = FrameSystem::new(vs, crate::scalar::Field::Complex).unwrap();
        let req =
            PartitionRequest::new(&f, (0..m).collect(), n as f64 / m as f64, 1.0, 1.0).unwrap();
        let cfg = OracleConfig {
            strategy: Strategy::Randomized,
            budget: 1000,
            seed: 42,
        };
        let a = spectral_partition(&req, &cfg).unwrap();
        let b = spectral_partition(&req, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.s1.len() + a.s2.len(), m);
    }

    #[test]
    fn oversize_exhaustive_rejected() {
        let m = 30;
        let s = (1.0 / m as f64).sqrt();
        let f = FrameSystem::from_real((0..m).map(|_| vec![s]).collect()).unwrap();
        let req = PartitionRequest::new(&f, (0..m).collect(), 1.0 / m as f64, 1.0, 1.0).unwrap();
        let cfg = OracleConfig {
            strategy: Strategy::Exhaustive,
            ..Default::default()
        };
        assert!(matches!(
            spectral_partition(&req, &cfg),
            Err(Error::ExhaustiveTooLarge { size: 30, .. })
        ));
    }

    #[test]
    fn norm_precondition_names_vector() {
        let f = FrameSystem::from_real(vec![vec![0.1], vec![0.9]]).unwrap();
        let req = PartitionRequest::new(&f, vec![0, 1], 0.1, 0.9, 1.0).unwrap();
        assert!(matches!(
            spectral_partition(&req, &OracleConfig::default()),
            Err(Error::VectorNorm { index: 1, .. })
        ));
    }

    #[test]
    fn impossible_targets_report_no_partition() {
        // stated bounds far above the actual operator 0.02: each side would
        // need at least alpha (1 - 5 sqrt(0.01)) / 2 = 0.25
        let f = FrameSystem::from_real(vec![vec![0.1], vec![0.1]]).unwrap();
        let req = PartitionRequest::new(&f, vec![0, 1], 0.01, 1.0, 1.0).unwrap();
        assert!(matches!(
            spectral_partition(&req, &OracleConfig::default()),
            Err(Error::NoPartition { .. })
        ));
    }

    #[test]
    fn empty_request_rejected() {
        let f = FrameSystem::from_real(vec![vec![1.0]]).unwrap();
        assert!(PartitionRequest::new(&f, vec![], 0.1, 1.0, 1.0).is_err());
    }
}

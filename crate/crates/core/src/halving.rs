//! Repeated halving of a tight frame down to a subset of size `O(theta N)` that
//! keeps two-sided control of the frame operator.
//!
//! With `delta = theta N / M`, each round splits the surviving vectors and
//! keeps the smaller side. The guaranteed bounds follow the recursion
//!
//! ```text
//! alpha_{j+1} = alpha_j (1 - 5 sqrt(delta/alpha_j)) / 2
//! beta_{j+1}  = beta_j  (1 + 5 sqrt(delta/alpha_j)) / 2
//! ```
//!
//! started from `alpha_0 = beta_0 = 1` (or the frame bounds `A, B` for a
//! non-tight frame), and the iteration stops after the last index `L` with
//! `alpha_L >= 100 delta`. The result satisfies `25 delta <= alpha_{L+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{frame_bounds, subset_bounds, FrameBounds, FrameSystem};
use crate::partition::{spectral_partition, OracleConfig, PartitionRequest, VERIFY_SLACK};

/// Tolerance on tightness required before halving.
pub const TIGHT_TOL: f64 = 1e-8;

/// Squared norms at or below this are treated as zero vectors.
const ZERO_NORM_SQ: f64 = 1e-30;

/// The halving schedule for a fixed `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Al1Schedule {
    #[serde(with = "crate::serde_dec")]
    pub delta: f64,
    /// `(alpha_j, beta_j)` for `j = 0..=L+1`.
    pub steps: Vec<(f64, f64)>,
    /// Index `L` of the last step with `alpha_j >= 100 delta`.
    pub last: usize,
}

impl Al1Schedule {
    pub fn alpha(&self, j: usize) -> f64 {
        self.steps[j].0
    }

    pub fn beta(&self, j: usize) -> f64 {
        self.steps[j].1
    }

    /// `(alpha_{L+1}, beta_{L+1})`.
    pub fn terminal(&self) -> (f64, f64) {
        self.steps[self.last + 1]
    }

    /// Number of halving rounds, `L + 1`.
    pub fn rounds(&self) -> usize {
        self.last + 1
    }
}

/// Schedule from `alpha_0 = beta_0 = 1`; `delta` must lie in `(0, 1/100)`.
pub fn al1_schedule(delta: f64) -> Result<Al1Schedule> {
    if !(delta > 0.0 && delta < 0.01) {
        return Err(Error::Domain(format!(
            "halving schedule needs 0 < delta < 1/100, got {delta}"
        )));
    }
    schedule_from(1.0, 1.0, delta)
}

/// Schedule seeded at arbitrary frame bounds. Needs `alpha0 >= 100 delta`.
pub fn schedule_from(alpha0: f64, beta0: f64, delta: f64) -> Result<Al1Schedule> {
    if !(delta > 0.0) || !(alpha0 >= 100.0 * delta) || !(beta0 >= alpha0) || !beta0.is_finite() {
        return Err(Error::Domain(format!(
            "schedule needs beta0 >= alpha0 >= 100 delta > 0, got alpha0 = {alpha0}, beta0 = {beta0}, delta = {delta}"
        )));
    }
    let mut steps = vec![(alpha0, beta0)];
    loop {
        let (a, b) = *steps.last().expect("nonempty");
        let r = 5.0 * (delta / a).sqrt();
        let next = (a * (1.0 - r) / 2.0, b * (1.0 + r) / 2.0);
        steps.push(next);
        if next.0 < 100.0 * delta {
            break;
        }
    }
    let last = steps.len() - 2;
    let (a_end, _) = steps[last + 1];
    if a_end < 25.0 * delta {
        return Err(Error::Internal(format!(
            "schedule ended at alpha = {a_end:e} below 25 delta = {:e}",
            25.0 * delta
        )));
    }
    Ok(Al1Schedule { delta, steps, last })
}

/// One halving round as it happened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub active: usize,
    pub kept: usize,
    /// Schedule pair the kept side was verified against.
    #[serde(with = "crate::serde_dec")]
    pub target_lower: f64,
    #[serde(with = "crate::serde_dec")]
    pub target_upper: f64,
    pub measured: FrameBounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalvingPath {
    /// `delta` too large to iterate: every vector is kept.
    Fast,
    Iterative,
}

/// Output of [`halving_select`]: the selected indices and their certified
/// bounds, unscaled (the rescaled form multiplies by `M/N`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalvingCertificate {
    pub indices: Vec<usize>,
    #[serde(with = "crate::serde_dec")]
    pub theta: f64,
    #[serde(with = "crate::serde_dec")]
    pub delta: f64,
    /// `N`.
    pub dim: usize,
    /// `M`.
    pub total: usize,
    pub path: HalvingPath,
    pub schedule: Option<Al1Schedule>,
    #[serde(with = "crate::serde_dec")]
    pub theoretical_lower: f64,
    #[serde(with = "crate::serde_dec")]
    pub theoretical_upper: f64,
    /// Eigensolve-verified bounds of `sum_{j in J} v_j v_j^*`.
    pub actual: FrameBounds,
    pub rounds: Vec<RoundRecord>,
}

impl HalvingCertificate {
    /// `M / N`.
    pub fn rescale(&self) -> f64 {
        self.total as f64 / self.dim as f64
    }

    /// Bounds of `(M/N) sum_{j in J} v_j v_j^*`.
    pub fn rescaled(&self) -> FrameBounds {
        self.actual.scaled(self.rescale())
    }

    /// Measured `c_0` with `c_0 theta <= (M/N) sum_J`.
    pub fn c0(&self) -> f64 {
        self.rescaled().lower / self.theta
    }

    /// Measured `C_0` with `(M/N) sum_J <= C_0 theta`.
    pub fn big_c0(&self) -> f64 {
        self.rescaled().upper / self.theta
    }

    /// Measured `C_1` with `|J| = C_1 theta N`.
    pub fn c1(&self) -> f64 {
        self.indices.len() as f64 / (self.theta * self.dim as f64)
    }

    /// Cardinality bound `M / 2^{L+1}` (or `M` on the fast path).
    pub fn size_budget(&self) -> usize {
        match &self.schedule {
            Some(s) => self.total >> s.rounds().min(63),
            None => self.total,
        }
    }
}

fn check_norms(frame: &FrameSystem, delta: f64) -> Result<()> {
    let bound = delta * (1.0 + 1e-9);
    for j in 0..frame.len() {
        let ns = frame.norm_sq(j);
        if ns > bound {
            return Err(Error::VectorNorm {
                index: j,
                norm_sq: ns,
                bound: delta,
            });
        }
    }
    Ok(())
}

fn validate_theta(frame: &FrameSystem, theta: f64) -> Result<f64> {
    let (n, m) = (frame.dim() as f64, frame.len() as f64);
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Precondition(format!("theta must be positive, got {theta}")));
    }
    if theta > (m / n) * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "theta = {theta} exceeds M/N = {}",
            m / n
        )));
    }
    Ok(theta * n / m)
}

/// Selects `J` from a tight frame with `|v_j|^2 <= theta N / M`.
pub fn halving_select(frame: &FrameSystem, theta: f64, cfg: &OracleConfig) -> Result<HalvingCertificate> {
    let delta = validate_theta(frame, theta)?;
    let b = frame_bounds(frame)?;
    if (b.lower - 1.0).abs() > TIGHT_TOL || (b.upper - 1.0).abs() > TIGHT_TOL {
        return Err(Error::NotTight {
            lower: b.lower,
            upper: b.upper,
            tol: TIGHT_TOL,
        });
    }
    check_norms(frame, delta)?;
    if delta >= 0.01 {
        return fast_path(frame, theta, delta, FrameBounds { lower: 1.0, upper: 1.0 });
    }
    let schedule = al1_schedule(delta)?;
    iterate(frame, theta, schedule, cfg)
}

/// Variant for a frame with bounds `A, B` instead of a tight frame. The
/// schedule starts at `(A, B)`; when `A < 100 delta` no round can be
/// certified and every vector is kept.
pub fn halving_select_frame(
    frame: &FrameSystem,
    bounds: FrameBounds,
    theta: f64,
    cfg: &OracleConfig,
) -> Result<HalvingCertificate> {
    let delta = validate_theta(frame, theta)?;
    if !(bounds.lower > delta) || bounds.upper < bounds.lower {
        return Err(Error::Precondition(format!(
            "frame bounds ({}, {}) must satisfy B >= A > delta = {delta}",
            bounds.lower, bounds.upper
        )));
    }
    let measured = frame_bounds(frame)?;
    if measured.lower < bounds.lower * (1.0 - TIGHT_TOL)
        || measured.upper > bounds.upper * (1.0 + TIGHT_TOL)
    {
        return Err(Error::Precondition(format!(
            "measured frame bounds ({}, {}) fall outside the stated ({}, {})",
            measured.lower, measured.upper, bounds.lower, bounds.upper
        )));
    }
    check_norms(frame, delta)?;
    if bounds.lower < 100.0 * delta {
        return fast_path(frame, theta, delta, bounds);
    }
    let schedule = schedule_from(bounds.lower, bounds.upper, delta)?;
    iterate(frame, theta, schedule, cfg)
}

fn nonzero(frame: &FrameSystem, indices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    indices
        .into_iter()
        .filter(|&j| frame.norm_sq(j) > ZERO_NORM_SQ)
        .collect()
}

fn fast_path(frame: &FrameSystem, theta: f64, delta: f64, start: FrameBounds) -> Result<HalvingCertificate> {
    let indices = nonzero(frame, 0..frame.len());
    let actual = subset_bounds(frame, &indices)?;
    Ok(HalvingCertificate {
        indices,
        theta,
        delta,
        dim: frame.dim(),
        total: frame.len(),
        path: HalvingPath::Fast,
        schedule: None,
        theoretical_lower: start.lower,
        theoretical_upper: start.upper,
        actual,
        rounds: Vec::new(),
    })
}

fn iterate(
    frame: &FrameSystem,
    theta: f64,
    schedule: Al1Schedule,
    cfg: &OracleConfig,
) -> Result<HalvingCertificate> {
    let delta = schedule.delta;
    let mut active: Vec<usize> = (0..frame.len()).collect();
    let mut rounds = Vec::with_capacity(schedule.rounds());
    for k in 0..schedule.rounds() {
        let (alpha, beta) = schedule.steps[k];
        let req = PartitionRequest::new(frame, active.clone(), delta, alpha, beta)?;
        let split = spectral_partition(&req, &cfg.for_round(k))?;
        let (target_lower, target_upper) = schedule.steps[k + 1];
        let kept = split.s1;
        let measured = split.bounds_s1;
        if measured.lower < target_lower - VERIFY_SLACK
            || measured.upper > target_upper + VERIFY_SLACK
        {
            return Err(Error::Internal(format!(
                "round {k}: kept side bounds ({}, {}) miss schedule ({target_lower}, {target_upper})",
                measured.lower, measured.upper
            )));
        }
        rounds.push(RoundRecord {
            round: k,
            active: active.len(),
            kept: kept.len(),
            target_lower,
            target_upper,
            measured,
        });
        active = kept;
    }
    let indices = nonzero(frame, active);
    let actual = subset_bounds(frame, &indices)?;
    let (theoretical_lower, theoretical_upper) = schedule.terminal();
    Ok(HalvingCertificate {
        indices,
        theta,
        delta,
        dim: frame.dim(),
        total: frame.len(),
        path: HalvingPath::Iterative,
        schedule: Some(schedule),
        theoretical_lower,
        theoretical_upper,
        actual,
        rounds,
    })
}

/// Trace sandwich for the selected set:
/// `N lower / max_J |v_j|^2 <= |J| <= N upper / min_J |v_j|^2`, where the
/// minimum runs over nonzero vectors.
pub fn check_cardinality_sandwich(cert: &HalvingCertificate, frame: &FrameSystem) -> bool {
    if cert.indices.is_empty() || cert.indices.iter().any(|&j| j >= frame.len()) {
        return false;
    }
    let norms: Vec<f64> = cert.indices.iter().map(|&j| frame.norm_sq(j)).collect();
    let max = norms.iter().copied().fold(0.0_f64, f64::max);
    let min = norms
        .iter()
        .copied()
        .filter(|&x| x > ZERO_NORM_SQ)
        .fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !min.is_finite() {
        return false;
    }
    let n = frame.dim() as f64;
    let size = cert.indices.len() as f64;
    let slack = 1e-9;
    size >= n * cert.actual.lower / max * (1.0 - slack) && size <= n * cert.actual.upper / min * (1.0 + slack)
}

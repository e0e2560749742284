//! Sampled systems and the discretization pipelines built on top of the
//! frame machinery.
//!
//! A [`SampledSystem`] holds the values `u_i(x^j)` of `N` functions at `M`
//! points together with a probability weight on each point. When the
//! functions are orthonormal for that discrete measure, the vectors
//! `v_j = sqrt(w_j) (u_1(x^j), ..., u_N(x^j))` form a tight frame, and
//! subsets of the frame become subsets of sampling points.

mod complex;
mod continuous;
mod orthonormal;

pub use complex::{complexify_via_real, transfer_certificate, RealMapping};
pub use continuous::{
    discretize_continuous, monte_carlo_refine, ContinuousSystem, DiscreteSource, MonteCarloConfig,
    MonteCarloSample,
};
pub(crate) use continuous::uniform_in;
pub use orthonormal::{reorthonormalize, Reorthonormalized, RANK_TOL};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, StageExt};
use crate::frame::{gather, gram_of_columns, FrameBounds, FrameSystem, HermitianMatrix};
use crate::halving::{halving_select, HalvingCertificate, HalvingPath};
use crate::partition::OracleConfig;
use crate::scalar::{Field, C64};
use crate::weighted::{weighted_select_capped, WeightedCertificate, DEFAULT_DUPLICATION_CAP};

/// Orthonormality residual accepted by the equal-weight and weighted
/// pipelines (it matches the tightness tolerance of halving).
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Residual accepted when computing a Nikol'skii constant.
pub const NIKOLSKII_TOL: f64 = 1e-6;

/// Agreement required between stored and recomputed constants.
pub const REVERIFY_TOL: f64 = 1e-10;

/// Probability weights on the sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointWeights {
    Uniform,
    Explicit(#[serde(with = "crate::serde_dec::vec")] Vec<f64>),
}

/// Values `u_i(x^j)` of `N` functions at `M` weighted points.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSystem {
    values: DMatrix<C64>,
    points: Vec<Vec<f64>>,
    weights: PointWeights,
    field: Field,
}

impl SampledSystem {
    /// `values` is `N x M`; `points[j]` labels column `j`.
    pub fn new(
        values: DMatrix<C64>,
        points: Vec<Vec<f64>>,
        weights: PointWeights,
        field: Field,
    ) -> Result<Self> {
        let (n, m) = values.shape();
        if n == 0 || m == 0 {
            return Err(Error::EmptySystem);
        }
        if points.len() != m {
            return Err(Error::Precondition(format!(
                "{} point labels for {m} columns",
                points.len()
            )));
        }
        let d = points[0].len();
        if let Some(j) = points.iter().position(|p| p.len() != d) {
            return Err(Error::Precondition(format!(
                "point {j} has {} coordinates, expected {d}",
                points[j].len()
            )));
        }
        if let Some(k) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { point: k / n });
        }
        if field == Field::Real && values.iter().any(|z| z.im != 0.0) {
            return Err(Error::Precondition(
                "real-tagged system has a nonzero imaginary part".into(),
            ));
        }
        if let PointWeights::Explicit(w) = &weights {
            if w.len() != m {
                return Err(Error::Precondition(format!("{} weights for {m} points", w.len())));
            }
            if let Some(j) = w.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::Precondition(format!("weight {j} is negative or not finite")));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "point weights sum to {total}, not 1"
                )));
            }
        }
        Ok(Self {
            values,
            points,
            weights,
            field,
        })
    }

    /// Uniform weights, one-dimensional point labels.
    pub fn uniform(values: DMatrix<C64>, points: Vec<f64>, field: Field) -> Result<Self> {
        let points = points.into_iter().map(|x| vec![x]).collect();
        Self::new(values, points, PointWeights::Uniform, field)
    }

    /// Number of functions `N`.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of points `M`.
    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point_weights(&self) -> &PointWeights {
        &self.weights
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn weight(&self, j: usize) -> f64 {
        match &self.weights {
            PointWeights::Uniform => 1.0 / self.m() as f64,
            PointWeights::Explicit(w) => w[j],
        }
    }

    pub fn weight_vec(&self) -> Vec<f64> {
        (0..self.m()).map(|j| self.weight(j)).collect()
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.weights, PointWeights::Uniform)
    }

    /// `G_{ik} = sum_j w_j u_i(x^j) conj(u_k(x^j))`.
    pub fn gram(&self) -> HermitianMatrix {
        gram_of_columns(&self.scaled_columns(), self.field)
    }

    /// Spectral norm `|G - I|`.
    pub fn orthonormality_residual(&self) -> Result<f64> {
        self.gram().identity_deviation()
    }

    /// `sum_i |u_i(x^j)|^2` for every point.
    pub fn per_point_sums(&self) -> Vec<f64> {
        (0..self.m())
            .map(|j| self.values.column(j).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Columns scaled by `sqrt(w_j)`.
    fn scaled_columns(&self) -> DMatrix<C64> {
        let mut a = self.values.clone();
        for j in 0..self.m() {
            let s = C64::new(self.weight(j).sqrt(), 0.0);
            a.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        a
    }

    /// SHA-256 over a canonical encoding of the system.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"l2disc-system-v1");
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.m() as u64).to_le_bytes());
        h.update(self.field.as_str().as_bytes());
        h.update((self.points[0].len() as u64).to_le_bytes());
        for p in &self.points {
            for x in p {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        match &self.weights {
            PointWeights::Uniform => h.update(b"uniform"),
            PointWeights::Explicit(w) => {
                h.update(b"explicit");
                for x in w {
                    h.update(x.to_bits().to_le_bytes());
                }
            }
        }
        for z in self.values.iter() {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Nikol'skii `(2, inf)` constant of a sampled orthonormal system.
///
/// For an orthonormal basis, `sup_f |f(x)| / |f|_2 = (sum_i |u_i(x)|^2)^{1/2}`,
/// so the smallest `t` with `|f|_inf <= t sqrt(N) |f|_2` on the sample is
/// `t^2 = max_j sum_i |u_i(x^j)|^2 / N`. On a grid drawn from a continuum
/// this is a lower estimate of the continuous constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NikolskiiReport {
    #[serde(with = "crate::serde_dec")]
    pub t: f64,
    #[serde(with = "crate::serde_dec")]
    pub t_squared: f64,
    pub argmax: usize,
    #[serde(with = "crate::serde_dec::vec")]
    pub argmax_point: Vec<f64>,
    #[serde(with = "crate::serde_dec::vec")]
    pub per_point_sums: Vec<f64>,
    pub n: usize,
    pub m: usize,
}

pub fn condition_e_constant(system: &SampledSystem) -> Result<NikolskiiReport> {
    let residual = system.orthonormality_residual()?;
    if residual > NIKOLSKII_TOL {
        return Err(Error::Precondition(format!(
            "system is not orthonormal: |G - I| = {residual:e}"
        )));
    }
    let sums = system.per_point_sums();
    let mut argmax = 0;
    for (j, &s) in sums.iter().enumerate() {
        if s > sums[argmax] {
            argmax = j;
        }
    }
    let t_squared = sums[argmax] / system.n() as f64;
    Ok(NikolskiiReport {
        t: t_squared.sqrt(),
        t_squared,
        argmax,
        argmax_point: system.points[argmax].clone(),
        per_point_sums: sums,
        n: system.n(),
        m: system.m(),
    })
}

/// `v_j = sqrt(w_j) (u_1(x^j), ..., u_N(x^j))^T`; tight iff the system is
/// orthonormal for its point weights.
pub fn build_frame_from_samples(system: &SampledSystem) -> Result<FrameSystem> {
    FrameSystem::from_columns(system.scaled_columns(), system.field)
}

/// Settings shared by the discretization pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeConfig {
    pub oracle: OracleConfig,
    /// Overrides the Nikol'skii-derived `theta` of the equal-weight path.
    #[serde(with = "crate::serde_dec::opt")]
    pub theta: Option<f64>,
    pub duplication_cap: usize,
    pub monte_carlo: MonteCarloConfig,
}

impl Default for DiscretizeConfig {
    fn default() -> Self {
        Self {
            oracle: OracleConfig::default(),
            theta: None,
            duplication_cap: DEFAULT_DUPLICATION_CAP,
            monte_carlo: MonteCarloConfig::default(),
        }
    }
}

impl DiscretizeConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            oracle: OracleConfig::with_seed(seed),
            monte_carlo: MonteCarloConfig {
                seed,
                ..MonteCarloConfig::default()
            },
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    EqualWeight,
    Weighted,
    Continuous,
    Transferred,
}

/// What the constants are measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The discrete `L2` norm of the sampled system (its Gram matrix).
    Discrete,
    /// The coefficient norm, i.e. the continuous `L2` norm of a basis that is
    /// orthonormal for the underlying measure.
    Coefficients,
}

/// Weights of the discretized quadratic form `sum_k omega_k |f(xi^k)|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionWeights {
    /// `omega_k = 1/m`.
    Uniform,
    Explicit(#[serde(with = "crate::serde_dec::vec")] Vec<f64>),
}

impl SelectionWeights {
    pub fn resolve(&self, m: usize) -> Vec<f64> {
        match self {
            SelectionWeights::Uniform => vec![1.0 / m as f64; m],
            SelectionWeights::Explicit(w) => w.clone(),
        }
    }
}

/// One pipeline stage and what it measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageRecord {
    Nikolskii {
        n: usize,
        m: usize,
        #[serde(with = "crate::serde_dec")]
        t_squared: f64,
    },
    Halving {
        path: HalvingPath,
        #[serde(with = "crate::serde_dec")]
        theta: f64,
        #[serde(with = "crate::serde_dec")]
        delta: f64,
        rounds: usize,
        selected: usize,
        budget: usize,
        #[serde(with = "crate::serde_dec")]
        theoretical_lower: f64,
        #[serde(with = "crate::serde_dec")]
        theoretical_upper: f64,
        actual: FrameBounds,
    },
    Duplication {
        m_prime: usize,
        anchor: usize,
        #[serde(with = "crate::serde_dec")]
        scale: f64,
        support: usize,
        support_budget: usize,
        bounds: FrameBounds,
    },
    MonteCarlo {
        #[serde(with = "crate::serde_dec")]
        delta: f64,
        m: usize,
        #[serde(with = "crate::serde_dec")]
        deviation: f64,
        attempts: usize,
        seed: u64,
    },
    Reorthonormalize {
        input_dim: usize,
        rank: usize,
    },
    Theta {
        /// `(2 t)^2` with `t` read off the raw sample.
        #[serde(with = "crate::serde_dec")]
        doubled_sample_t_squared: f64,
        /// Exact `t^2` of the re-orthonormalized system on the sample.
        #[serde(with = "crate::serde_dec")]
        exact_t_squared: f64,
        #[serde(with = "crate::serde_dec")]
        theta: f64,
    },
    Pullback {
        #[serde(with = "crate::serde_dec")]
        deviation: f64,
        discrete: FrameBounds,
        interval: FrameBounds,
    },
    Transfer {
        y_dim: usize,
        real: FrameBounds,
    },
}

impl StageRecord {
    fn halving(cert: &HalvingCertificate) -> Self {
        StageRecord::Halving {
            path: cert.path,
            theta: cert.theta,
            delta: cert.delta,
            rounds: cert.rounds.len(),
            selected: cert.indices.len(),
            budget: cert.size_budget(),
            theoretical_lower: cert.theoretical_lower,
            theoretical_upper: cert.theoretical_upper,
            actual: cert.actual,
        }
    }

    fn duplication(cert: &WeightedCertificate) -> Self {
        StageRecord::Duplication {
            m_prime: cert.duplication.m_prime,
            anchor: cert.duplication.anchor,
            scale: cert.scale,
            support: cert.support.len(),
            support_budget: cert.support_budget,
            bounds: cert.bounds,
        }
    }
}

/// Selected points, their weights and the verified two-sided constants
/// `c |f|^2 <= sum_k omega_k |f(xi^k)|^2 <= C |f|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationCertificate {
    pub kind: CertificateKind,
    /// Fingerprint of the sampled system the indices refer to.
    pub system_fingerprint: String,
    pub indices: Vec<usize>,
    #[serde(with = "crate::serde_dec::vecvec")]
    pub points: Vec<Vec<f64>>,
    pub weights: SelectionWeights,
    pub m: usize,
    /// `(c, C)`.
    pub constants: FrameBounds,
    pub budget: usize,
    pub reference: Reference,
    pub log: Vec<StageRecord>,
}

impl DiscretizationCertificate {
    pub fn ratio(&self) -> f64 {
        self.constants.ratio()
    }
}

/// Extreme eigenvalues of `sum_k omega_k a_k a_k^*` over the columns `a_k` of
/// `selected`, relative to `reference` (identity when `None`).
pub fn certified_constants(
    selected: &DMatrix<C64>,
    omegas: &[f64],
    reference: Option<&HermitianMatrix>,
    field: Field,
) -> Result<FrameBounds> {
    if selected.ncols() != omegas.len() {
        return Err(Error::Precondition(format!(
            "{} weights for {} selected points",
            omegas.len(),
            selected.ncols()
        )));
    }
    if let Some(k) = omegas.iter().position(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::Precondition(format!("weight {k} is negative or not finite")));
    }
    let mut cols = selected.clone();
    for (k, &w) in omegas.iter().enumerate() {
        let s = C64::new(w.sqrt(), 0.0);
        cols.column_mut(k).iter_mut().for_each(|z| *z *= s);
    }
    let d = gram_of_columns(&cols, field);
    let (lo, hi) = match reference {
        Some(g) => d.relative_extremes(g)?,
        None => d.extreme_eigenvalues()?,
    };
    Ok(FrameBounds { lower: lo, upper: hi })
}

fn constants_on(
    system: &SampledSystem,
    indices: &[usize],
    omegas: &[f64],
    reference: Reference,
) -> Result<FrameBounds> {
    let cols = gather(system.values(), indices)?;
    let gram;
    let r = match reference {
        Reference::Discrete => {
            gram = system.gram();
            Some(&gram)
        }
        Reference::Coefficients => None,
    };
    certified_constants(&cols, omegas, r, system.field())
}

fn require_orthonormal(system: &SampledSystem) -> Result<f64> {
    let residual = system.orthonormality_residual()?;
    if residual > ORTHONORMAL_TOL {
        return Err(Error::Precondition(format!(
            "system is not orthonormal within {ORTHONORMAL_TOL:e}: |G - I| = {residual:e}"
        )));
    }
    Ok(residual)
}

/// Equal-weight discretization of a uniformly weighted orthonormal system:
/// halving with `theta = t^2` selects `m` points with
/// `c |f|^2 <= (1/m) sum_{j in J} |f(x^j)|^2 <= C |f|^2`.
pub fn discretize_equal_weight(
    system: &SampledSystem,
    cfg: &DiscretizeConfig,
) -> Result<DiscretizationCertificate> {
    if !system.is_uniform() {
        return Err(Error::Precondition(
            "equal-weight discretization needs uniform point weights".into(),
        ));
    }
    require_orthonormal(system).stage("nikolskii")?;
    let report = condition_e_constant(system).stage("nikolskii")?;
    let ratio = system.m() as f64 / system.n() as f64;
    let theta = match cfg.theta {
        Some(t) => t,
        // t^2 <= M/N up to roundoff
        None => report.t_squared.min(ratio),
    };
    let frame = build_frame_from_samples(system)?;
    let halving = halving_select(&frame, theta, &cfg.oracle).stage("halving")?;
    let indices = halving.indices.clone();
    let m = indices.len();
    let omegas = vec![1.0 / m as f64; m];
    let constants = constants_on(system, &indices, &omegas, Reference::Discrete).stage("certify")?;
    if !(constants.lower > 0.0) {
        return Err(Error::Internal(format!(
            "selected points do not discretize: lower constant {}",
            constants.lower
        ))
        .in_stage("certify"));
    }
    let budget = halving.size_budget();
    if m > budget {
        return Err(Error::Internal(format!("{m} points exceed the budget {budget}")).in_stage("certify"));
    }
    Ok(DiscretizationCertificate {
        kind: CertificateKind::EqualWeight,
        system_fingerprint: system.fingerprint(),
        points: indices.iter().map(|&j| system.points[j].clone()).collect(),
        indices,
        weights: SelectionWeights::Uniform,
        m,
        constants,
        budget,
        reference: Reference::Discrete,
        log: vec![
            StageRecord::Nikolskii {
                n: report.n,
                m: report.m,
                t_squared: report.t_squared,
            },
            StageRecord::halving(&halving),
        ],
    })
}

/// Weighted discretization of an arbitrary sampled system: nonnegative
/// weights on at most `|J|` points with verified constants.
pub fn discretize_weighted(
    system: &SampledSystem,
    cfg: &DiscretizeConfig,
) -> Result<DiscretizationCertificate> {
    let mut log = Vec::new();
    let residual = system.orthonormality_residual().stage("reorthonormalize")?;
    let work = if residual > RANK_TOL {
        let r = reorthonormalize(system).stage("reorthonormalize")?;
        if r.rank != system.n() {
            return Err(Error::Precondition(format!(
                "functions are linearly dependent on the sample (rank {} < {})",
                r.rank,
                system.n()
            ))
            .in_stage("reorthonormalize"));
        }
        log.push(StageRecord::Reorthonormalize {
            input_dim: system.n(),
            rank: r.rank,
        });
        r.system
    } else {
        system.clone()
    };
    let frame = build_frame_from_samples(&work)?;
    let nonzero: Vec<usize> = (0..frame.len()).filter(|&j| frame.norm_sq(j) > 0.0).collect();
    let sub = frame.subset(&nonzero)?;
    let wc = weighted_select_capped(&sub, &cfg.oracle, cfg.duplication_cap).stage("weighted")?;
    log.push(StageRecord::halving(&wc.halving));
    log.push(StageRecord::duplication(&wc));
    let indices: Vec<usize> = wc.support.iter().map(|&k| nonzero[k]).collect();
    // lambda_k |<w, v_k>|^2 = lambda_k w_j |f(x^j)|^2
    let omegas: Vec<f64> = wc
        .support
        .iter()
        .map(|&k| wc.weights[k] * system.weight(nonzero[k]))
        .collect();
    let constants = constants_on(system, &indices, &omegas, Reference::Discrete).stage("certify")?;
    Ok(DiscretizationCertificate {
        kind: CertificateKind::Weighted,
        system_fingerprint: system.fingerprint(),
        points: indices.iter().map(|&j| system.points[j].clone()).collect(),
        m: indices.len(),
        indices,
        weights: SelectionWeights::Explicit(omegas),
        constants,
        budget: wc.support_budget,
        reference: Reference::Discrete,
        log,
    })
}

/// Outcome of recomputing a certificate's constants from raw data.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub recomputed: FrameBounds,
    pub stored: FrameBounds,
    pub fingerprint_ok: bool,
    pub problems: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REVERIFY_TOL * b.abs().max(1.0)
}

fn compare(cert: &DiscretizationCertificate, recomputed: FrameBounds, fingerprint_ok: bool, mut problems: Vec<String>) -> Verification {
    if !fingerprint_ok {
        problems.push("system fingerprint does not match".into());
    }
    if !close(recomputed.lower, cert.constants.lower) || !close(recomputed.upper, cert.constants.upper) {
        problems.push(format!(
            "constants differ: stored ({}, {}), recomputed ({}, {})",
            cert.constants.lower, cert.constants.upper, recomputed.lower, recomputed.upper
        ));
    }
    if !(recomputed.lower > 0.0) {
        problems.push(format!("lower constant {} is not positive", recomputed.lower));
    }
    if cert.m != cert.indices.len() || cert.m != cert.points.len() {
        problems.push(format!(
            "m = {} but {} indices and {} points",
            cert.m,
            cert.indices.len(),
            cert.points.len()
        ));
    }
    if cert.m > cert.budget {
        problems.push(format!("m = {} exceeds budget {}", cert.m, cert.budget));
    }
    Verification {
        recomputed,
        stored: cert.constants,
        fingerprint_ok,
        problems,
    }
}

fn resolved_weights(cert: &DiscretizationCertificate) -> Result<Vec<f64>> {
    let w = cert.weights.resolve(cert.indices.len());
    if w.len() != cert.indices.len() {
        return Err(Error::MappingMismatch(format!(
            "{} weights for {} points",
            w.len(),
            cert.indices.len()
        )));
    }
    Ok(w)
}

/// Recomputes a certificate's constants on the system its indices refer to.
/// Stored constants are never trusted.
pub fn verify_certificate(cert: &DiscretizationCertificate, system: &SampledSystem) -> Result<Verification> {
    if let Some(&bad) = cert.indices.iter().find(|&&j| j >= system.m()) {
        return Err(Error::MappingMismatch(format!(
            "index {bad} out of range for {} points",
            system.m()
        )));
    }
    let omegas = resolved_weights(cert)?;
    let mut problems = Vec::new();
    for (k, &j) in cert.indices.iter().enumerate() {
        if cert.points.get(k) != Some(&system.points[j]) {
            problems.push(format!("point {k} does not match system point {j}"));
            break;
        }
    }
    let recomputed = constants_on(system, &cert.indices, &omegas, cert.reference)?;
    Ok(compare(cert, recomputed, cert.system_fingerprint == system.fingerprint(), problems))
}

/// Recomputes the constants of a coefficient-referenced certificate by
/// evaluating the basis at the stored points.
pub fn verify_continuous(cert: &DiscretizationCertificate, spec: &dyn ContinuousSystem) -> Result<Verification> {
    if cert.reference != Reference::Coefficients {
        return Err(Error::MappingMismatch(
            "certificate is not measured against the continuous norm".into(),
        ));
    }
    let omegas = resolved_weights(cert)?;
    let n = spec.dim();
    let mut cols = DMatrix::<C64>::zeros(n, cert.points.len());
    for (k, p) in cert.points.iter().enumerate() {
        let vals = spec.evaluate(p);
        if vals.len() != n {
            return Err(Error::Precondition(format!(
                "evaluator returned {} values, expected {n}",
                vals.len()
            )));
        }
        if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { point: k });
        }
        for (i, z) in vals.into_iter().enumerate() {
            cols[(i, k)] = z;
        }
    }
    let recomputed = certified_constants(&cols, &omegas, None, spec.field())?;
    Ok(compare(cert, recomputed, true, Vec::new()))
}

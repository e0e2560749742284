use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    certified_constants, condition_e_constant, discretize_equal_weight, reorthonormalize,
    CertificateKind, DiscretizationCertificate, DiscretizeConfig, PointWeights, Reference,
    SampledSystem, StageRecord,
};
use crate::error::{Error, Result, StageExt};
use crate::frame::{gather, FrameBounds};
use crate::scalar::{Field, C64};

/// Functions `u_1, ..., u_N` on a probability space `(Omega, mu)`, given by a
/// sampler for `mu` and a pointwise evaluator.
pub trait ContinuousSystem {
    /// `N`.
    fn dim(&self) -> usize;

    fn field(&self) -> Field;

    /// Draws one point from `mu`.
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// `(u_1(x), ..., u_N(x))`.
    fn evaluate(&self, x: &[f64]) -> Vec<C64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Accept the sample once `|G - I| <= delta`.
    #[serde(with = "crate::serde_dec")]
    pub delta: f64,
    pub m_start: usize,
    pub m_cap: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            delta: 0.5,
            m_start: 32,
            m_cap: 1 << 16,
            seed: 0,
        }
    }
}

/// An i.i.d. sample whose Gram matrix is within `delta` of the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSample {
    pub system: SampledSystem,
    /// Measured `|G - I|`.
    pub deviation: f64,
    /// Number of sample sizes tried.
    pub attempts: usize,
}

fn evaluate_at(spec: &dyn ContinuousSystem, points: &[Vec<f64>], offset: usize, out: &mut Vec<Vec<C64>>) -> Result<()> {
    let n = spec.dim();
    for (k, p) in points.iter().enumerate() {
        let vals = spec.evaluate(p);
        if vals.len() != n {
            return Err(Error::Precondition(format!(
                "evaluator returned {} values, expected {n}",
                vals.len()
            )));
        }
        if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { point: offset + k });
        }
        out.push(vals);
    }
    Ok(())
}

/// Draws i.i.d. points from `mu`, doubling the sample until the Gram matrix
/// of the sampled functions satisfies `|G - I| <= delta`. Equivalently,
/// `| |f|^2_sample - |f|^2 | <= delta |f|^2` for every `f` in the span. The
/// sample is extended rather than redrawn, so all draws stay i.i.d.
pub fn monte_carlo_refine(spec: &dyn ContinuousSystem, cfg: &MonteCarloConfig) -> Result<MonteCarloSample> {
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Precondition(format!(
            "refinement needs 0 < delta < 1, got {}",
            cfg.delta
        )));
    }
    let n = spec.dim();
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    if cfg.m_start == 0 || cfg.m_start > cfg.m_cap {
        return Err(Error::Precondition(format!(
            "need 0 < m_start <= m_cap, got {} and {}",
            cfg.m_start, cfg.m_cap
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut columns: Vec<Vec<C64>> = Vec::new();
    let mut best = f64::INFINITY;
    let mut target = cfg.m_start;
    let mut attempts = 0;
    loop {
        let fresh: Vec<Vec<f64>> = (points.len()..target).map(|_| spec.sample(&mut rng)).collect();
        evaluate_at(spec, &fresh, points.len(), &mut columns)?;
        points.extend(fresh);
        attempts += 1;
        let m = points.len();
        let values = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
        let system = SampledSystem::new(values, points.clone(), PointWeights::Uniform, spec.field())?;
        let deviation = system.orthonormality_residual()?;
        if deviation <= cfg.delta {
            return Ok(MonteCarloSample {
                system,
                deviation,
                attempts,
            });
        }
        best = best.min(deviation);
        if target.saturating_mul(2) > cfg.m_cap {
            return Err(Error::RefinementFailed {
                m,
                deviation: best,
                delta: cfg.delta,
            });
        }
        target *= 2;
    }
}

/// A sampled system viewed as a measure space: points are drawn by index
/// with probability equal to the point weight, and the point coordinate is
/// the index itself.
#[derive(Clone, Debug)]
pub struct DiscreteSource<'a> {
    system: &'a SampledSystem,
    picker: WeightedIndex<f64>,
}

impl<'a> DiscreteSource<'a> {
    pub fn new(system: &'a SampledSystem) -> Result<Self> {
        let picker = WeightedIndex::new(system.weight_vec())
            .map_err(|e| Error::Precondition(format!("point weights: {e}")))?;
        Ok(Self { system, picker })
    }
}

impl ContinuousSystem for DiscreteSource<'_> {
    fn dim(&self) -> usize {
        self.system.n()
    }

    fn field(&self) -> Field {
        self.system.field()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![self.picker.sample(rng) as f64]
    }

    fn evaluate(&self, x: &[f64]) -> Vec<C64> {
        let j = x[0] as usize;
        self.system.values().column(j).iter().copied().collect()
    }
}

/// Equal-weight discretization of the `L2(mu)` norm of an orthonormal system
/// on a measure space.
///
/// Stages: refine an i.i.d. sample to `|G - I| <= delta`, orthonormalize the
/// functions on the sample, select points by halving with `theta` the
/// smaller of `(2t)^2` (read off the raw sample) and the exact Nikol'skii
/// constant of the new basis, then measure the constants against the
/// coefficient norm. Those constants lie in
/// `[c_disc (1 - dev), C_disc (1 + dev)]` with `dev` the measured Gram
/// deviation; both are recorded.
pub fn discretize_continuous(spec: &dyn ContinuousSystem, cfg: &DiscretizeConfig) -> Result<DiscretizationCertificate> {
    let mc = monte_carlo_refine(spec, &cfg.monte_carlo).stage("monte_carlo")?;
    let sample = &mc.system;
    let n = sample.n();
    let raw_t_squared = sample.per_point_sums().into_iter().fold(0.0, f64::max) / n as f64;
    let doubled = 4.0 * raw_t_squared;

    let r = reorthonormalize(sample).stage("reorthonormalize")?;
    let exact = condition_e_constant(&r.system).stage("reorthonormalize")?.t_squared;
    let theta = cfg.theta.unwrap_or(doubled.min(exact));

    let inner_cfg = DiscretizeConfig {
        theta: Some(theta),
        ..*cfg
    };
    let disc = discretize_equal_weight(&r.system, &inner_cfg)?;

    let m = disc.m;
    let cols = gather(sample.values(), &disc.indices)?;
    let constants = certified_constants(&cols, &vec![1.0 / m as f64; m], None, spec.field()).stage("pullback")?;
    let dev = mc.deviation;
    let interval = FrameBounds {
        lower: disc.constants.lower * (1.0 - dev),
        upper: disc.constants.upper * (1.0 + dev),
    };
    let slack = 1e-10 * interval.upper.max(1.0);
    if constants.lower < interval.lower - slack || constants.upper > interval.upper + slack {
        return Err(Error::Internal(format!(
            "constants ({}, {}) escape the pull-back interval ({}, {})",
            constants.lower, constants.upper, interval.lower, interval.upper
        ))
        .in_stage("pullback"));
    }
    if !(constants.lower > 0.0) {
        return Err(Error::Internal(format!("lower constant {} is not positive", constants.lower)).in_stage("pullback"));
    }

    let mut log = vec![
        StageRecord::MonteCarlo {
            delta: cfg.monte_carlo.delta,
            m: sample.m(),
            deviation: dev,
            attempts: mc.attempts,
            seed: cfg.monte_carlo.seed,
        },
        StageRecord::Reorthonormalize {
            input_dim: n,
            rank: r.rank,
        },
        StageRecord::Theta {
            doubled_sample_t_squared: doubled,
            exact_t_squared: exact,
            theta,
        },
    ];
    log.extend(disc.log.iter().cloned());
    log.push(StageRecord::Pullback {
        deviation: dev,
        discrete: disc.constants,
        interval,
    });
    Ok(DiscretizationCertificate {
        kind: CertificateKind::Continuous,
        system_fingerprint: sample.fingerprint(),
        indices: disc.indices.clone(),
        points: disc.points.clone(),
        weights: disc.weights.clone(),
        m,
        constants,
        budget: disc.budget,
        reference: Reference::Coefficients,
        log,
    })
}

/// Uniform random point in `[lo, hi)`.
pub(crate) fn uniform_in(rng: &mut dyn RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

//! Built-in orthonormal systems.
//!
//! All generators are deterministic functions of their descriptor.

use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::discretize::{reorthonormalize, ContinuousSystem, SampledSystem};
use crate::error::{Error, Result};
use crate::scalar::{Field, C64};

/// What system to build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemDescriptor {
    /// `1, sqrt2 cos x, sqrt2 sin x, ..., sqrt2 cos dx, sqrt2 sin dx` with
    /// `N = 2d + 1`, on the grid `x_j = 2 pi j / M`. Needs `M > 2d`.
    Trig { n: usize, m: usize },
    /// `u_k(x_j) = exp(2 pi i k j / M)`, `k < N <= M`.
    Dft { n: usize, m: usize },
    /// First `N` rows of the Sylvester Hadamard matrix of order `M`.
    Walsh { n: usize, m: usize },
    /// Orthonormalized standard normal samples.
    RandomOrthonormal { n: usize, m: usize, seed: u64, field: Field },
    /// `u_i = sqrt(M) 1_{x_i}`: all mass of each function on one point.
    Indicator { n: usize, m: usize },
    /// A system stored on disk.
    File { path: PathBuf },
}

impl SystemDescriptor {
    pub fn name(&self) -> &'static str {
        match self {
            SystemDescriptor::Trig { .. } => "trig",
            SystemDescriptor::Dft { .. } => "dft",
            SystemDescriptor::Walsh { .. } => "walsh",
            SystemDescriptor::RandomOrthonormal { .. } => "random_orthonormal",
            SystemDescriptor::Indicator { .. } => "indicator",
            SystemDescriptor::File { .. } => "file",
        }
    }
}

fn check_n_le_m(kind: &str, n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition(format!("{kind}: N must be positive")));
    }
    if n > m {
        return Err(Error::Precondition(format!("{kind}: N = {n} exceeds M = {m}")));
    }
    Ok(())
}

fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 / m as f64).collect()
}

pub fn make_system(d: &SystemDescriptor) -> Result<SampledSystem> {
    match *d {
        SystemDescriptor::Trig { n, m } => {
            if n % 2 == 0 {
                return Err(Error::Precondition(format!("trig: N = {n} must be odd")));
            }
            check_n_le_m("trig", n, m)?;
            let x: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
            let v = DMatrix::from_fn(n, m, |i, j| C64::new(trig_value(i, x[j]), 0.0));
            SampledSystem::uniform(v, x, Field::Real)
        }
        SystemDescriptor::Dft { n, m } => {
            check_n_le_m("dft", n, m)?;
            let v = DMatrix::from_fn(n, m, |k, j| {
                C64::from_polar(1.0, 2.0 * PI * ((k * j) % m) as f64 / m as f64)
            });
            SampledSystem::uniform(v, grid(m), Field::Complex)
        }
        SystemDescriptor::Walsh { n, m } => {
            if !m.is_power_of_two() {
                return Err(Error::Precondition(format!("walsh: M = {m} is not a power of two")));
            }
            check_n_le_m("walsh", n, m)?;
            let v = DMatrix::from_fn(n, m, |i, j| {
                C64::new(if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            });
            SampledSystem::uniform(v, grid(m), Field::Real)
        }
        SystemDescriptor::RandomOrthonormal { n, m, seed, field } => {
            check_n_le_m("random_orthonormal", n, m)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
            let v = DMatrix::from_fn(n, m, |_, _| match field {
                Field::Real => C64::new(g(), 0.0),
                Field::Complex => C64::new(g(), g()),
            });
            let raw = SampledSystem::uniform(v, grid(m), field)?;
            let r = reorthonormalize(&raw)?;
            if r.rank != n {
                return Err(Error::Internal(format!(
                    "random_orthonormal: rank {} < {n}",
                    r.rank
                )));
            }
            Ok(r.system)
        }
        SystemDescriptor::Indicator { n, m } => {
            check_n_le_m("indicator", n, m)?;
            let s = (m as f64).sqrt();
            let v = DMatrix::from_fn(n, m, |i, j| C64::new(if i == j { s } else { 0.0 }, 0.0));
            SampledSystem::uniform(v, grid(m), Field::Real)
        }
        SystemDescriptor::File { ref path } => crate::io::load_system(path),
    }
}

fn trig_value(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let k = ((i + 1) / 2) as f64;
    if i % 2 == 1 {
        2.0_f64.sqrt() * (k * x).cos()
    } else {
        2.0_f64.sqrt() * (k * x).sin()
    }
}

/// The real trigonometric system of degree `d` on `[0, 2 pi)` with the
/// normalized Lebesgue measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrigSystem {
    pub degree: usize,
}

impl TrigSystem {
    pub fn with_dim(n: usize) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::Precondition(format!("trig: N = {n} must be odd")));
        }
        Ok(Self { degree: n / 2 })
    }
}

impl ContinuousSystem for TrigSystem {
    fn dim(&self) -> usize {
        2 * self.degree + 1
    }

    fn field(&self) -> Field {
        Field::Real
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![crate::discretize::uniform_in(rng, 0.0, 2.0 * PI)]
    }

    fn evaluate(&self, x: &[f64]) -> Vec<C64> {
        (0..self.dim()).map(|i| C64::new(trig_value(i, x[0]), 0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::condition_e_constant;
    use crate::frame::verify_tight;
    use crate::discretize::build_frame_from_samples;

    #[test]
    fn dft_4_16() {
        let s = make_system(&SystemDescriptor::Dft { n: 4, m: 16 }).unwrap();
        assert!(s.orthonormality_residual().unwrap() < 1e-10);
        assert!((condition_e_constant(&s).unwrap().t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn walsh_8_32() {
        let s = make_system(&SystemDescriptor::Walsh { n: 8, m: 32 }).unwrap();
        assert_eq!(s.field(), Field::Real);
        assert!(s.orthonormality_residual().unwrap() < 1e-12);
        assert!((condition_e_constant(&s).unwrap().t - 1.0).abs() < 1e-12);
        assert!(make_system(&SystemDescriptor::Walsh { n: 2, m: 24 }).is_err());
    }

    #[test]
    fn trig_5_64() {
        let s = make_system(&SystemDescriptor::Trig { n: 5, m: 64 }).unwrap();
        assert!(s.orthonormality_residual().unwrap() < 1e-12);
        assert!(make_system(&SystemDescriptor::Trig { n: 4, m: 64 }).is_err());
        // M = 2d + 1 is the smallest grid that works
        let s = make_system(&SystemDescriptor::Trig { n: 5, m: 5 }).unwrap();
        assert!(s.orthonormality_residual().unwrap() < 1e-12);
    }

    #[test]
    fn random_is_deterministic_and_orthonormal() {
        for field in [Field::Real, Field::Complex] {
            let d = SystemDescriptor::RandomOrthonormal { n: 3, m: 20, seed: 9, field };
            let a = make_system(&d).unwrap();
            assert_eq!(a, make_system(&d).unwrap());
            assert!(a.orthonormality_residual().unwrap() < 1e-12);
            assert!(verify_tight(&build_frame_from_samples(&a).unwrap(), 1e-12));
        }
    }

    #[test]
    fn indicator_constant() {
        let s = make_system(&SystemDescriptor::Indicator { n: 3, m: 12 }).unwrap();
        assert!((condition_e_constant(&s).unwrap().t_squared - 4.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_trig_matches_grid() {
        let t = TrigSystem::with_dim(5).unwrap();
        let s = make_system(&SystemDescriptor::Trig { n: 5, m: 16 }).unwrap();
        let x = s.points()[3][0];
        let v = t.evaluate(&[x]);
        for i in 0..5 {
            assert!((v[i] - s.values()[(i, 3)]).norm() < 1e-15);
        }
    }
}

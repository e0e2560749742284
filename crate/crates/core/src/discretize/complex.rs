use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    constants_on, reorthonormalize, CertificateKind, DiscretizationCertificate, Reference,
    SampledSystem, StageRecord,
};
use crate::error::{Error, Result};
use crate::frame::FrameBounds;
use crate::scalar::{Field, C64};

/// Links a complex system to the real system `Y` spanned by the real and
/// imaginary parts of its functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMapping {
    pub complex_fingerprint: String,
    pub real_fingerprint: String,
    /// `dim Y <= 2N`.
    pub real_dim: usize,
    pub complex_dim: usize,
}

/// Real orthonormal basis of `span{Re u_i, Im u_i}` on the same points and
/// weights.
///
/// Every `f` in the complex span splits as `f_R + i f_I` with both parts in
/// `Y`, and `|f(x)|^2 = f_R(x)^2 + f_I(x)^2`, so a weighted point set that
/// discretizes `Y` discretizes the complex span with the same points,
/// weights and constants.
pub fn complexify_via_real(system: &SampledSystem) -> Result<(SampledSystem, RealMapping)> {
    if system.field() != Field::Complex {
        return Err(Error::Precondition("system is tagged real".into()));
    }
    let (n, m) = (system.n(), system.m());
    let v = system.values();
    let stacked = DMatrix::from_fn(2 * n, m, |r, j| {
        let z = v[(r / 2, j)];
        C64::new(if r % 2 == 0 { z.re } else { z.im }, 0.0)
    });
    let lifted = SampledSystem::new(
        stacked,
        system.points().to_vec(),
        system.point_weights().clone(),
        Field::Real,
    )?;
    let y = reorthonormalize(&lifted)?.system;
    let mapping = RealMapping {
        complex_fingerprint: system.fingerprint(),
        real_fingerprint: y.fingerprint(),
        real_dim: y.n(),
        complex_dim: n,
    };
    Ok((y, mapping))
}

/// Replays a certificate of the real system `Y` on the complex system,
/// recomputing the constants and checking they fall inside the real ones.
pub fn transfer_certificate(
    real: &DiscretizationCertificate,
    system: &SampledSystem,
    mapping: &RealMapping,
) -> Result<DiscretizationCertificate> {
    if real.system_fingerprint != mapping.real_fingerprint {
        return Err(Error::MappingMismatch(
            "certificate was not issued for the mapped real system".into(),
        ));
    }
    if system.fingerprint() != mapping.complex_fingerprint {
        return Err(Error::MappingMismatch(
            "complex system differs from the one the mapping was built from".into(),
        ));
    }
    if real.reference != Reference::Discrete {
        return Err(Error::MappingMismatch(
            "only certificates against the discrete norm can be transferred".into(),
        ));
    }
    if let Some(&bad) = real.indices.iter().find(|&&j| j >= system.m()) {
        return Err(Error::MappingMismatch(format!(
            "index {bad} out of range for {} points",
            system.m()
        )));
    }
    let omegas = real.weights.resolve(real.indices.len());
    let constants = constants_on(system, &real.indices, &omegas, Reference::Discrete)?;
    let slack = 1e-10 * real.constants.upper.max(1.0);
    if constants.lower < real.constants.lower - slack || constants.upper > real.constants.upper + slack {
        return Err(Error::Internal(format!(
            "complex constants ({}, {}) escape the real interval ({}, {})",
            constants.lower, constants.upper, real.constants.lower, real.constants.upper
        )));
    }
    let mut log = real.log.clone();
    log.push(StageRecord::Transfer {
        y_dim: mapping.real_dim,
        real: FrameBounds {
            lower: real.constants.lower,
            upper: real.constants.upper,
        },
    });
    Ok(DiscretizationCertificate {
        kind: CertificateKind::Transferred,
        system_fingerprint: mapping.complex_fingerprint.clone(),
        indices: real.indices.clone(),
        points: real.points.clone(),
        weights: real.weights.clone(),
        m: real.m,
        constants,
        budget: real.budget,
        reference: Reference::Discrete,
        log,
    })
}

use nalgebra::{DMatrix, DVector};

use super::SampledSystem;
use crate::error::{Error, Result};
use crate::scalar::{Field, C64};

/// Singular values below `RANK_TOL` times the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// An orthonormal basis of the span of a sampled system's functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Reorthonormalized {
    /// `l` functions, orthonormal for the input's point weights.
    pub system: SampledSystem,
    /// Numerical rank `l`.
    pub rank: usize,
    /// `l x N` matrix `B` with `new_k = sum_i B_{ki} old_i`.
    pub change_of_basis: DMatrix<C64>,
    /// Input functions that contributed a new direction, in order.
    pub pivots: Vec<usize>,
}

/// Orthonormalizes the functions of `system` for its own point weights.
///
/// Functions are processed in order with two passes of Gram-Schmidt, so the
/// change of basis is lower triangular on the pivots with a real positive
/// diagonal, and an orthonormal input comes back unchanged. A final
/// Cholesky step cleans up residual roundoff.
pub fn reorthonormalize(system: &SampledSystem) -> Result<Reorthonormalized> {
    let n = system.n();
    let m = system.m();
    let sqrt_w: Vec<f64> = (0..m).map(|j| system.weight(j).sqrt()).collect();
    let a = DMatrix::from_fn(n, m, |i, j| system.values()[(i, j)] * sqrt_w[j]);
    let sigma = singular_values(&a, system.field())?;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return Err(Error::ZeroRowSpace);
    }
    let rank = sigma.iter().filter(|&&s| s > RANK_TOL * smax).count();

    let (mut q, mut b, pivots) = gram_schmidt(&a, smax);
    if pivots.len() != rank {
        let (q2, b2) = svd_basis(&a, rank, system.field())?;
        q = q2;
        b = b2;
    }
    polish(&mut q, &mut b)?;

    let values = &b * system.values();
    let values = if system.field() == Field::Real {
        values.map(|z| C64::new(z.re, 0.0))
    } else {
        values
    };
    let out = SampledSystem::new(
        values,
        system.points().to_vec(),
        system.point_weights().clone(),
        system.field(),
    )?;
    Ok(Reorthonormalized {
        rank: out.n(),
        system: out,
        change_of_basis: b,
        pivots,
    })
}

fn singular_values(a: &DMatrix<C64>, field: Field) -> Result<Vec<f64>> {
    let dim = a.nrows().min(a.ncols());
    let s = if field == Field::Real {
        a.map(|z| z.re)
            .try_svd(false, false, f64::EPSILON, 10_000)
            .ok_or(Error::EigenNonConvergence { dim })?
            .singular_values
            .iter()
            .copied()
            .collect()
    } else {
        a.clone()
            .try_svd(false, false, f64::EPSILON, 10_000)
            .ok_or(Error::EigenNonConvergence { dim })?
            .singular_values
            .iter()
            .copied()
            .collect()
    };
    Ok(s)
}

fn dot(x: &DVector<C64>, y: &DVector<C64>) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

fn gram_schmidt(a: &DMatrix<C64>, smax: f64) -> (DMatrix<C64>, DMatrix<C64>, Vec<usize>) {
    let (n, m) = a.shape();
    let mut qs: Vec<DVector<C64>> = Vec::new();
    let mut bs: Vec<DVector<C64>> = Vec::new();
    let mut pivots = Vec::new();
    for i in 0..n {
        let mut r: DVector<C64> = a.row(i).transpose().into_owned();
        let mut coef = DVector::<C64>::zeros(n);
        coef[i] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for (q, b) in qs.iter().zip(&bs) {
                let p = dot(&r, q);
                r -= q * p;
                coef -= b * p;
            }
        }
        let nrm = r.norm();
        if nrm > RANK_TOL * smax {
            let s = C64::new(1.0 / nrm, 0.0);
            qs.push(r * s);
            bs.push(coef * s);
            pivots.push(i);
        }
    }
    let l = qs.len();
    let q = DMatrix::from_fn(l, m, |k, j| qs[k][j]);
    let b = DMatrix::from_fn(l, n, |k, i| bs[k][i]);
    (q, b, pivots)
}

fn svd_basis(a: &DMatrix<C64>, rank: usize, field: Field) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let (n, m) = a.shape();
    let dim = n.min(m);
    let svd = if field == Field::Real {
        let s = a
            .map(|z| z.re)
            .try_svd(true, true, f64::EPSILON, 10_000)
            .ok_or(Error::EigenNonConvergence { dim })?;
        (
            s.u.unwrap().map(|x| C64::new(x, 0.0)),
            s.v_t.unwrap().map(|x| C64::new(x, 0.0)),
            s.singular_values.iter().copied().collect::<Vec<_>>(),
        )
    } else {
        let s = a
            .clone()
            .try_svd(true, true, f64::EPSILON, 10_000)
            .ok_or(Error::EigenNonConvergence { dim })?;
        (
            s.u.unwrap(),
            s.v_t.unwrap(),
            s.singular_values.iter().copied().collect::<Vec<_>>(),
        )
    };
    let (u, vt, sigma) = svd;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    let mut q = DMatrix::<C64>::zeros(rank, m);
    let mut b = DMatrix::<C64>::zeros(rank, n);
    for (k, &s) in order.iter().take(rank).enumerate() {
        // row k of V^* spans the same line as (1/sigma) u^* A
        let mut coef: DVector<C64> = u.column(s).map(|z| z.conj()) / C64::new(sigma[s], 0.0);
        let mut row: DVector<C64> = vt.row(s).transpose().into_owned();
        let lead = coef.iter().copied().find(|z| z.norm() > RANK_TOL).unwrap_or(C64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        coef *= phase;
        row *= phase;
        q.set_row(k, &row.transpose());
        b.set_row(k, &coef.transpose());
    }
    Ok((q, b))
}

fn polish(q: &mut DMatrix<C64>, b: &mut DMatrix<C64>) -> Result<()> {
    let l = q.nrows();
    let h = &*q * q.adjoint();
    let chol = h.cholesky().ok_or(Error::NotPositiveDefinite { dim: l })?;
    let lo = chol.l();
    *q = lo
        .solve_lower_triangular(q)
        .ok_or(Error::NotPositiveDefinite { dim: l })?;
    *b = lo
        .solve_lower_triangular(b)
        .ok_or(Error::NotPositiveDefinite { dim: l })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(values: DMatrix<C64>) -> SampledSystem {
        let m = values.ncols();
        let field = Field::infer(values.iter());
        SampledSystem::uniform(values, (0..m).map(|j| j as f64).collect(), field).unwrap()
    }

    fn random(n: usize, m: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| re(rng.random::<f64>() - 0.5))
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let m = 8;
        let v = DMatrix::from_fn(3, m, |k, j| {
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * j) as f64 / m as f64)
        });
        let s = uniform(v.clone());
        let r = reorthonormalize(&s).unwrap();
        assert_eq!(r.rank, 3);
        let d = &r.change_of_basis - DMatrix::<C64>::identity(3, 3);
        assert!(d.iter().all(|z| z.norm() < 1e-12));
        assert!((r.system.values() - v).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn duplicated_row_drops_rank() {
        let mut v = random(3, 10, 1);
        let row = v.row(0).into_owned();
        v.set_row(2, &row);
        let r = reorthonormalize(&uniform(v)).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.pivots, vec![0, 1]);
        assert!(r.system.orthonormality_residual().unwrap() < 1e-12);
    }

    #[test]
    fn random_full_rank() {
        let r = reorthonormalize(&uniform(random(4, 20, 7))).unwrap();
        assert_eq!(r.rank, 4);
        assert!(r.system.orthonormality_residual().unwrap() < 1e-12);
        for k in 0..4 {
            let lead = r.change_of_basis[(k, k)];
            assert!(lead.re > 0.0 && lead.im == 0.0);
        }
    }

    #[test]
    fn change_of_basis_reproduces_values() {
        let s = uniform(random(3, 12, 3));
        let r = reorthonormalize(&s).unwrap();
        let d = &r.change_of_basis * s.values() - r.system.values();
        assert!(d.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn zero_rows_rejected() {
        let v = DMatrix::<C64>::zeros(2, 5);
        assert!(matches!(reorthonormalize(&uniform(v)), Err(Error::ZeroRowSpace)));
    }

    #[test]
    fn idempotent() {
        let once = reorthonormalize(&uniform(random(3, 9, 11))).unwrap();
        let twice = reorthonormalize(&once.system).unwrap();
        assert_eq!(once.rank, twice.rank);
        let d = twice.system.values() - once.system.values();
        assert!(d.iter().all(|z| z.norm() < 1e-10));
    }
}

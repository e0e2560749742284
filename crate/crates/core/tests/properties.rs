use l2disc::discretize::{
    build_frame_from_samples, complexify_via_real, condition_e_constant, discretize_weighted,
    monte_carlo_refine, reorthonormalize, transfer_certificate, verify_certificate, DiscretizeConfig,
    MonteCarloConfig, SampledSystem,
};
use l2disc::frame::{frame_operator, subset_bounds, weighted_operator};
use l2disc::halving::al1_schedule;
use l2disc::partition::{accepted_splits, ap1_targets, PartitionRequest};
use l2disc::systems::{make_system, SystemDescriptor, TrigSystem};
use l2disc::weighted::{duplicate_normalize_capped, weighted_select_capped};
use l2disc::{Error, Field, OracleConfig, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Frames needing more copies than this are outside the tested regime.
const COPY_CAP: usize = 100_000;

fn field_of(complex: bool) -> Field {
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

fn random_system(n: usize, m: usize, seed: u64, complex: bool) -> SampledSystem {
    make_system(&SystemDescriptor::RandomOrthonormal {
        n,
        m,
        seed,
        field: field_of(complex),
    })
    .unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> DVector<C64> {
    DVector::from_fn(n, |_, _| {
        let im = if complex { rng.random::<f64>() - 0.5 } else { 0.0 };
        C64::new(rng.random::<f64>() - 0.5, im)
    })
}

/// Neumaier-compensated sum, so long sums of copies stay exact to roundoff.
fn exact_sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn quad(op: &DMatrix<C64>, w: &DVector<C64>) -> f64 {
    (w.adjoint() * op * w)[(0, 0)].re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_frames_are_tight(n in 1usize..5, extra in 0usize..20, seed: u64, complex: bool) {
        let s = random_system(n, n + extra, seed, complex);
        let f = build_frame_from_samples(&s).unwrap();
        let d = frame_operator(&f).entries() - DMatrix::<C64>::identity(n, n);
        prop_assert!(d.iter().all(|z| z.norm() < 1e-12));
        let total: f64 = f.norms_sq().iter().sum();
        prop_assert!((total - n as f64).abs() < 1e-12);
    }

    #[test]
    fn complementary_subsets(n in 1usize..4, extra in 1usize..12, seed: u64, mask: u32) {
        let m = n + extra;
        let f = build_frame_from_samples(&random_system(n, m, seed, false)).unwrap();
        let a: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let b: Vec<usize> = (0..m).filter(|j| mask & (1 << j) == 0).collect();
        prop_assume!(!a.is_empty() && !b.is_empty());
        let ba = subset_bounds(&f, &a).unwrap();
        let bb = subset_bounds(&f, &b).unwrap();
        prop_assert!((ba.lower + bb.upper - 1.0).abs() < 1e-10);
        prop_assert!((ba.upper + bb.lower - 1.0).abs() < 1e-10);
    }

    #[test]
    fn split_targets_bracket_half(alpha in 1e-3f64..10.0, spread in 1.0f64..3.0, frac in 1e-4f64..0.999) {
        let delta = alpha * frac;
        let beta = alpha * spread;
        let (lo, hi) = ap1_targets(alpha, beta, delta).unwrap();
        prop_assert!(lo <= alpha / 2.0 && hi >= beta / 2.0);
        let r = 5.0 * (delta / alpha).sqrt();
        prop_assert!((lo - alpha * (1.0 - r) / 2.0).abs() <= 1e-15 * alpha);
        prop_assert!((hi - beta * (1.0 + r) / 2.0).abs() <= 1e-15 * beta * 4.0);
    }

    #[test]
    fn schedule_sandwich(log_delta in -6.0f64..-2.0001) {
        let delta = 10f64.powf(log_delta);
        let s = al1_schedule(delta).unwrap();
        for j in 0..=s.last {
            prop_assert!(s.alpha(j) >= 100.0 * delta);
        }
        let (a, b) = s.terminal();
        prop_assert!(a >= 25.0 * delta && a < 100.0 * delta);
        prop_assert!(b >= a);
        for j in 0..s.rounds() {
            let (lo, hi) = ap1_targets(s.alpha(j), s.beta(j), delta).unwrap();
            prop_assert!((lo - s.alpha(j + 1)).abs() <= 1e-12 * lo);
            prop_assert!((hi - s.beta(j + 1)).abs() <= 1e-12 * hi);
        }
    }

    #[test]
    fn accepted_splits_meet_targets(n in 1usize..3, extra in 1usize..8, seed: u64, alpha_mult in 1.01f64..60.0) {
        let m = n + extra;
        let f = build_frame_from_samples(&random_system(n, m, seed, false)).unwrap();
        let delta = f.max_norm_sq().1;
        let alpha = delta * alpha_mult;
        let req = PartitionRequest::new(&f, (0..m).collect(), delta, alpha, alpha).unwrap();
        let (lo, hi) = req.targets();
        for (a, b) in accepted_splits(&req).unwrap() {
            prop_assert!(a.contains(&0) && !b.is_empty());
            for side in [&a, &b] {
                let bd = subset_bounds(&f, side).unwrap();
                prop_assert!(bd.lower >= lo - 1e-10 && bd.upper <= hi + 1e-10);
            }
        }
    }

    #[test]
    fn duplication_preserves_operator(n in 1usize..4, extra in 0usize..10, seed: u64, complex: bool) {
        let m = n + extra;
        let f = build_frame_from_samples(&random_system(n, m, seed, complex)).unwrap();
        let dup = duplicate_normalize_capped(&f, COPY_CAP);
        prop_assume!(!matches!(dup, Err(Error::DuplicationCap { .. })));
        let (dup, map) = dup.unwrap();
        let d = frame_operator(&dup).entries() - frame_operator(&f).entries();
        prop_assert!(d.iter().all(|z| z.norm() < 1e-13));
        let total = exact_sum(&dup.norms_sq());
        prop_assert!((total - n as f64).abs() < 1e-12);
        let bound = 2.0 * n as f64 / map.m_prime as f64;
        prop_assert!(dup.norms_sq().iter().all(|&x| x < bound));
        prop_assert_eq!(map.counts.iter().sum::<usize>(), map.m_prime);
    }

    #[test]
    fn weighted_quadratic_form(n in 1usize..4, extra in 0usize..10, seed: u64, complex: bool) {
        let m = n + extra;
        let f = build_frame_from_samples(&random_system(n, m, seed, complex)).unwrap();
        let c = weighted_select_capped(&f, &OracleConfig::with_seed(seed), COPY_CAP);
        prop_assume!(!matches!(c, Err(Error::DuplicationCap { .. })));
        let c = c.unwrap();
        prop_assert!(c.weights.iter().all(|&w| w >= 0.0));
        prop_assert!(c.support.len() <= c.support_budget);
        let op = weighted_operator(&f, &c.weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let w = random_vec(&mut rng, n, complex);
            let direct: f64 = (0..m)
                .map(|j| c.weights[j] * (w.adjoint() * f.columns().column(j))[(0, 0)].norm_sqr())
                .sum();
            let nw = w.norm_squared();
            prop_assert!((direct - quad(op.entries(), &w)).abs() < 1e-10 * direct.max(1.0));
            prop_assert!(direct >= c.bounds.lower * nw - 1e-10 && direct <= c.bounds.upper * nw + 1e-10);
        }
    }

    #[test]
    fn pointwise_nikolskii_identity(seed: u64, complex: bool) {
        let s = random_system(3, 24, seed, complex);
        let sums = s.per_point_sums();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let j = rng.random_range(0..24);
            let a = random_vec(&mut rng, 3, complex);
            let fx: C64 = (0..3).map(|i| a[i] * s.values()[(i, j)]).sum();
            prop_assert!(fx.norm() / a.norm() <= sums[j].sqrt() + 1e-9);
            // coefficients conj(u_i(x)) attain the bound
            let b: Vec<C64> = (0..3).map(|i| s.values()[(i, j)].conj()).collect();
            let gx: C64 = (0..3).map(|i| b[i] * s.values()[(i, j)]).sum();
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((gx.norm() / nb - sums[j].sqrt()).abs() < 1e-6);
        }
        let r = condition_e_constant(&s).unwrap();
        prop_assert!(r.t >= 1.0 - 1e-10);
    }

    #[test]
    fn reorthonormalize_is_idempotent(n in 1usize..5, extra in 0usize..10, seed: u64, complex: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = n + extra;
        let v = DMatrix::from_fn(n, m, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, if complex { rng.random::<f64>() - 0.5 } else { 0.0 })
        });
        let s = SampledSystem::uniform(v, (0..m).map(|j| j as f64).collect(), field_of(complex)).unwrap();
        let once = reorthonormalize(&s).unwrap();
        let twice = reorthonormalize(&once.system).unwrap();
        prop_assert_eq!(once.rank, twice.rank);
        prop_assert!(once.system.orthonormality_residual().unwrap() < 1e-12);
        prop_assert!(twice.system.orthonormality_residual().unwrap() < 1e-12);
        // same row space: equal orthogonal projectors onto the span
        let p = |x: &DMatrix<C64>| x.adjoint() * x / C64::new(m as f64, 0.0);
        let d = p(once.system.values()) - p(twice.system.values());
        prop_assert!(d.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn transfer_inside_real_interval(n in 1usize..4, extra in 0usize..12, seed: u64) {
        let s = random_system(n, 2 * n + extra, seed, true);
        let (y, map) = complexify_via_real(&s).unwrap();
        prop_assert!(map.real_dim <= 2 * n);
        let real = discretize_weighted(&y, &DiscretizeConfig::with_seed(seed)).unwrap();
        let c = transfer_certificate(&real, &s, &map).unwrap();
        prop_assert!(c.constants.lower >= real.constants.lower - 1e-10);
        prop_assert!(c.constants.upper <= real.constants.upper + 1e-10);
        prop_assert!(verify_certificate(&c, &s).unwrap().passed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gram_deviation_bounds_every_function(seed: u64) {
        let spec = TrigSystem { degree: 2 };
        let cfg = MonteCarloConfig { seed, ..MonteCarloConfig::default() };
        let mc = monte_carlo_refine(&spec, &cfg).unwrap();
        let s = &mc.system;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..1000 {
            let a = random_vec(&mut rng, 5, false);
            let sample: f64 = (0..s.m())
                .map(|j| (0..5).map(|i| a[i] * s.values()[(i, j)]).sum::<C64>().norm_sqr())
                .sum::<f64>()
                / s.m() as f64;
            let exact = a.norm_squared();
            prop_assert!((sample - exact).abs() <= mc.deviation * exact + 1e-9);
        }
    }
}

use l2disc::discretize::{
    build_frame_from_samples, condition_e_constant, discretize_equal_weight, discretize_weighted,
    verify_certificate, CertificateKind, DiscretizeConfig, SampledSystem, SelectionWeights,
};
use l2disc::halving::HalvingPath;
use l2disc::io::{load_certificate, load_system, save_certificate, save_system, CertificateDocument, RunSettings};
use l2disc::systems::{make_system, SystemDescriptor};
use l2disc::{check_cardinality_sandwich, halving_select, Field, OracleConfig, Strategy, C64};
use nalgebra::DMatrix;

fn randomized(seed: u64) -> OracleConfig {
    OracleConfig {
        strategy: Strategy::Randomized,
        budget: 10_000,
        seed,
    }
}

#[test]
fn iterative_halving_on_walsh() {
    let s = make_system(&SystemDescriptor::Walsh { n: 4, m: 512 }).unwrap();
    let f = build_frame_from_samples(&s).unwrap();
    let c = halving_select(&f, 1.0, &randomized(3)).unwrap();
    assert_eq!(c.path, HalvingPath::Iterative);
    let sched = c.schedule.as_ref().unwrap();
    let delta = 4.0 / 512.0;
    assert!(c.actual.lower >= 25.0 * delta - 1e-10);
    assert!(c.actual.upper <= sched.terminal().1 + 1e-10);
    assert!(c.indices.len() <= 512 >> sched.rounds());
    assert!(check_cardinality_sandwich(&c, &f));
    for (k, r) in c.rounds.iter().enumerate() {
        assert_eq!(r.round, k);
        assert!(r.measured.lower >= r.target_lower - 1e-10);
    }
}

#[test]
fn equal_weight_certificate_reverifies() {
    let s = make_system(&SystemDescriptor::Dft { n: 2, m: 512 }).unwrap();
    let cfg = DiscretizeConfig::with_seed(11);
    let c = discretize_equal_weight(&s, &cfg).unwrap();
    assert_eq!(c.kind, CertificateKind::EqualWeight);
    assert!(c.m < 512 && c.m <= c.budget);
    let v = verify_certificate(&c, &s).unwrap();
    assert!(v.passed(), "{:?}", v.problems);
    assert!((v.recomputed.lower - c.constants.lower).abs() < 1e-10);
    // determinism
    assert_eq!(c, discretize_equal_weight(&s, &cfg).unwrap());
}

#[test]
fn concentrated_system_cannot_shrink() {
    let s = make_system(&SystemDescriptor::Indicator { n: 3, m: 30 }).unwrap();
    let r = condition_e_constant(&s).unwrap();
    assert!((r.t_squared - 10.0).abs() < 1e-12);
    let c = discretize_equal_weight(&s, &DiscretizeConfig::default()).unwrap();
    // every point that carries mass is kept
    assert_eq!(c.indices, vec![0, 1, 2]);
    assert_eq!(c.budget, 30);
    assert!((c.constants.lower - 10.0).abs() < 1e-12);
}

/// `u_1 = 1` and `u_2` large on four points and small elsewhere.
fn spiky(m: usize) -> SampledSystem {
    let heavy = 4.0;
    let a = (m as f64 / (heavy + heavy * heavy / (m as f64 - heavy))).sqrt();
    let b = -heavy * a / (m as f64 - heavy);
    let v = DMatrix::from_fn(2, m, |i, j| {
        C64::new(
            match (i, j < 4) {
                (0, _) => 1.0,
                (_, true) => a,
                (_, false) => b,
            },
            0.0,
        )
    });
    SampledSystem::uniform(v, (0..m).map(|j| j as f64).collect(), Field::Real).unwrap()
}

#[test]
fn weighted_beats_equal_weight_on_spiky_system() {
    let s = spiky(1024);
    assert!(s.orthonormality_residual().unwrap() < 1e-12);
    let cfg = DiscretizeConfig::with_seed(2);
    let eq = discretize_equal_weight(&s, &cfg).unwrap();
    assert_eq!(eq.m, 1024);
    let w = discretize_weighted(&s, &cfg).unwrap();
    assert!(w.m < eq.m, "weighted support {} vs {}", w.m, eq.m);
    assert!(w.m <= w.budget);
    for c in [&eq, &w] {
        assert!(verify_certificate(c, &s).unwrap().passed());
        assert!(c.constants.lower > 0.0);
    }
}

#[test]
fn weighted_on_complex_system() {
    let s = make_system(&SystemDescriptor::Dft { n: 3, m: 64 }).unwrap();
    let c = discretize_weighted(&s, &DiscretizeConfig::default()).unwrap();
    assert!(matches!(c.weights, SelectionWeights::Explicit(_)));
    assert!(verify_certificate(&c, &s).unwrap().passed());
}

#[test]
fn weighted_reorthonormalizes_when_needed() {
    let base = make_system(&SystemDescriptor::Trig { n: 3, m: 20 }).unwrap();
    let v = base.values() * C64::new(3.0, 0.0);
    let s = SampledSystem::uniform(v, base.points().iter().map(|p| p[0]).collect(), Field::Real).unwrap();
    let c = discretize_weighted(&s, &DiscretizeConfig::default()).unwrap();
    assert!(verify_certificate(&c, &s).unwrap().passed());
}

#[test]
fn certificate_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = make_system(&SystemDescriptor::Walsh { n: 2, m: 256 }).unwrap();
    let sys_path = dir.path().join("walsh.csv");
    save_system(&s, &sys_path).unwrap();
    let loaded = load_system(&sys_path).unwrap();
    assert_eq!(loaded, s);

    let cfg = DiscretizeConfig::with_seed(5);
    let c = discretize_equal_weight(&loaded, &cfg).unwrap();
    let settings = RunSettings {
        command: "select".into(),
        seed: 5,
        strategy: cfg.oracle.strategy,
        budget: cfg.oracle.budget,
        theta: None,
        delta: None,
    };
    let doc = CertificateDocument::new(c, settings, "walsh n=2 m=256".into());
    let cert_path = dir.path().join("cert.json");
    save_certificate(&doc, &cert_path).unwrap();
    let back = load_certificate(&cert_path).unwrap();
    assert_eq!(back, doc);
    assert!(verify_certificate(&back.certificate, &s).unwrap().passed());

    // same inputs, same bytes
    let again = discretize_equal_weight(&loaded, &cfg).unwrap();
    let doc2 = CertificateDocument::new(again, doc.settings.clone(), doc.source.clone());
    assert_eq!(doc2.to_json().unwrap(), std::fs::read_to_string(&cert_path).unwrap());
}

#[test]
fn certificate_against_other_system_fails() {
    let s = make_system(&SystemDescriptor::Walsh { n: 2, m: 64 }).unwrap();
    let other = make_system(&SystemDescriptor::Dft { n: 2, m: 64 }).unwrap();
    let c = discretize_equal_weight(&s, &DiscretizeConfig::default()).unwrap();
    let v = verify_certificate(&c, &other).unwrap();
    assert!(!v.fingerprint_ok);
    assert!(!v.passed());
}

mod common;

use common::*;
use weakvalue::hilbert::{Projector, StateVector};
use weakvalue::meter::{
    exact_readouts, gaussian_overlap, pointer_expectations, reduced_state_fidelity, window_joint_state,
    window_readout, BranchedJointState, GaussianMeter, PointerState,
};
use weakvalue::rng::RandomSource;
use weakvalue::weakvalues::weak_value;
use weakvalue::Complex64;

#[test]
fn overlap_matches_quadrature() {
    let mut rng = RandomSource::from_seed(101);
    for _ in 0..25 {
        let a = 6.0 * rng.uniform() - 3.0;
        let b = 6.0 * rng.uniform() - 3.0;
        let sigma = 0.2 + 2.0 * rng.uniform();
        let (qs, h) = grid(-10.0 * sigma + a.min(b), 10.0 * sigma + a.max(b), 4097);
        let vals: Vec<f64> = qs.iter().map(|&q| phi(q - a, sigma) * phi(q - b, sigma)).collect();
        let numeric = trapezoid(&vals, h);
        assert!((numeric - gaussian_overlap(a, b, sigma)).abs() < 1e-8, "a={a} b={b} sigma={sigma}");
    }
}

#[test]
fn expectations_match_quadrature_pure() {
    let mut rng = RandomSource::from_seed(202);
    for _ in 0..25 {
        let sigma = 0.3 + 1.5 * rng.uniform();
        let n = 1 + (rng.next_u64() % 4) as usize;
        let terms: Vec<(Complex64, f64)> = (0..n)
            .map(|_| {
                (
                    Complex64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0),
                    4.0 * rng.uniform() - 2.0,
                )
            })
            .collect();
        let p = PointerState::pure("x", 1.0, sigma, terms.clone());
        let e = pointer_expectations(&p).unwrap();
        let (norm, q, mom) = pointer_moments_by_quadrature(&terms, &|_, _| 1.0, sigma);
        assert!((norm - p.norm_sqr()).abs() < 1e-8);
        assert!((e.mean_q - q).abs() < 1e-8, "{} vs {q}", e.mean_q);
        assert!((e.mean_p - mom).abs() < 1e-8, "{} vs {mom}", e.mean_p);
    }
}

#[test]
fn expectations_match_quadrature_traced() {
    // Pointer states obtained by tracing a second meter carry coherence
    // factors; check those too.
    let mut rng = RandomSource::from_seed(303);
    for case in 0..20 {
        let dim = 2 + case % 3;
        let s = random_scenario(&mut rng, dim);
        let fam = random_family(&mut rng, dim, 2);
        let m0 = GaussianMeter::for_projector("P0", &fam[0], 0.3 + rng.uniform(), 0.5 + rng.uniform()).unwrap();
        let m1 = GaussianMeter::for_projector("P1", &fam[1], 0.3 + rng.uniform(), 0.5 + rng.uniform()).unwrap();
        let s = s.with_meters(vec![m0, m1]).unwrap();
        let post = window_readout(&s).unwrap();
        for p in &post.pointers {
            let e = pointer_expectations(p).unwrap();
            let (norm, q, mom) = pointer_moments_by_quadrature(p.terms(), &|k, l| p.coherence(k, l), p.sigma());
            assert!((norm - post.probability).abs() < 1e-8);
            assert!((e.mean_q - q).abs() < 1e-8);
            assert!((e.mean_p - mom).abs() < 1e-8);
        }
    }
}

#[test]
fn coupling_preserves_norm() {
    let mut rng = RandomSource::from_seed(404);
    for case in 0..50 {
        let dim = 1 + case % 6;
        let psi = random_state(&mut rng, dim);
        let mut joint = BranchedJointState::new(&psi);
        for k in 0..3 {
            let h = random_hermitian(&mut rng, dim);
            let m = GaussianMeter::for_operator(format!("m{k}"), &h, 2.0 * rng.uniform(), 0.5 + rng.uniform()).unwrap();
            joint = joint.couple(&m).unwrap();
            assert!((joint.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn commuting_meters_couple_in_either_order() {
    let mut rng = RandomSource::from_seed(505);
    for case in 0..30 {
        let dim = 2 + case % 5;
        let psi = random_state(&mut rng, dim);
        let fam = random_family(&mut rng, dim, 2);
        let a = GaussianMeter::for_projector("a", &fam[0], 0.7, 1.0).unwrap();
        let b = GaussianMeter::for_projector("b", &fam[1], 0.4, 1.3).unwrap();
        let ab = BranchedJointState::new(&psi).couple(&a).unwrap().couple(&b).unwrap();
        let ba = BranchedJointState::new(&psi).couple(&b).unwrap().couple(&a).unwrap();
        assert_eq!(ab.branches().len(), ba.branches().len());
        for x in ab.branches() {
            let y = ba
                .branches()
                .iter()
                .find(|y| y.shifts[0] == x.shifts[1] && y.shifts[1] == x.shifts[0])
                .expect("matching branch");
            let diff = x.component.add(&y.component.scale(c(-1.0))).unwrap();
            assert!(diff.norm() < 1e-10);
        }
    }
}

#[test]
fn no_collapse_is_quadratic() {
    let (pre, _) = three_box_states();
    let loss = |g: f64| {
        let joint = window_joint_state(&three_box(vec![box_meter("A", g)])).unwrap();
        1.0 - reduced_state_fidelity(&joint, &pre).unwrap()
    };
    for g in [0.1, 0.05, 0.02] {
        let ratio = loss(g) / loss(g / 2.0);
        assert!((3.5..=4.5).contains(&ratio), "g={g} ratio={ratio}");
        assert!(loss(g) <= g * g);
    }
}

#[test]
fn weak_limit_recovery_three_box() {
    let err = |label: &str, w: f64, g: f64| {
        (exact_readouts(&three_box(vec![box_meter(label, g)])).unwrap()[0].real_estimate() - w).abs()
    };
    // For A and B the two other branches cancel after postselection, so the
    // pointer is an undistorted shift and the estimate is exact at any g.
    for (label, w) in [("A", 1.0), ("B", 1.0)] {
        for g in [0.2, 0.1, 0.05] {
            assert!(err(label, w, g) < 1e-12, "{label} at g={g}");
        }
    }
    let ratio = err("C", -1.0, 0.1) / err("C", -1.0, 0.05);
    assert!((3.0..=5.0).contains(&ratio), "C: ratio {ratio}");
}

#[test]
fn imaginary_part_from_momentum() {
    // |in⟩ = (|0⟩ + |1⟩)/√2, |f⟩ = (|0⟩ + i|1⟩)/√2: (Π_0)_w = (1 + i)/2.
    let i = Complex64::new(0.0, 1.0);
    let pre = StateVector::normalized(vec![c(1.0), c(1.0)]).unwrap();
    let post = StateVector::normalized(vec![c(1.0), i]).unwrap();
    let p0 = Projector::basis(2, 0).unwrap();
    let s = weakvalue::scenario::Scenario::without_evolution(pre, post, vec![]).unwrap();
    let wv = weak_value(p0.as_operator(), &s).unwrap().value;
    assert!((wv - Complex64::new(0.5, 0.5)).norm() < 1e-14);

    for sigma in [0.5, 1.0, 2.0] {
        let readout = |g: f64| {
            let m = GaussianMeter::for_projector("P0", &p0, g, sigma).unwrap();
            exact_readouts(&s.with_meters(vec![m]).unwrap()).unwrap().remove(0)
        };
        let r = readout(1e-4);
        assert!((r.real_estimate() - wv.re).abs() < 1e-6);
        assert!((r.imag_estimate() - wv.im).abs() < 1e-6, "sigma={sigma}: {}", r.imag_estimate());
        // Closed-form momentum agrees with the quadrature oracle at finite g.
        let m = GaussianMeter::for_projector("P0", &p0, 0.1 * sigma, sigma).unwrap();
        let post = window_readout(&s.with_meters(vec![m]).unwrap()).unwrap();
        let (_, _, mom) = pointer_moments_by_quadrature(post.pointers[0].terms(), &|_, _| 1.0, sigma);
        assert!((pointer_expectations(&post.pointers[0]).unwrap().mean_p - mom).abs() < 1e-8);
    }
}

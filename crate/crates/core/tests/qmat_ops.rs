use proptest::prelude::*;
use qcap_core::channels::{standard_channel, ChannelKind};
use qcap_core::qmat::{
    apply_channel, c64, diag, eigh, fidelity, identity, max_abs_diff, positive_part_projector,
    purified_distance, purify, trace_distance, trace_norm, CMat, ChannelOutput, DensityOperator,
    HermitianOperator, StateVector, SystemLabel, WiretapChannel,
};
use qcap_core::random;
use qcap_core::Error;

fn qubit(name: &str) -> SystemLabel {
    SystemLabel::new(name, 2)
}

fn ket(name: &str, amps: &[f64]) -> DensityOperator {
    let v = qcap_core::qmat::CVec::from_iterator(amps.len(), amps.iter().map(|&a| c64(a, 0.0)));
    StateVector::new(vec![SystemLabel::new(name, amps.len())], v)
        .unwrap()
        .to_density()
}

fn kron_oracle(a: &CMat, b: &CMat) -> CMat {
    let (da, db) = (a.nrows(), b.nrows());
    CMat::from_fn(da * db, da * db, |r, c| a[(r / db, c / db)] * b[(r % db, c % db)])
}

#[test]
fn tensor_of_identities() {
    let a = HermitianOperator::single("A", identity(2)).unwrap();
    let b = HermitianOperator::single("B", identity(3)).unwrap();
    let ab = a.tensor(&b).unwrap();
    assert_eq!(ab.matrix(), &identity(6));
    assert_eq!(ab.names(), vec!["A", "B"]);
}

#[test]
fn tensor_of_basis_states() {
    let ab = ket("A", &[1.0, 0.0]).tensor(&ket("B", &[0.0, 1.0])).unwrap();
    let mut expect = CMat::zeros(4, 4);
    expect[(1, 1)] = c64(1.0, 0.0);
    assert_eq!(ab.matrix(), &expect);
}

#[test]
fn tensor_of_diagonals_matches_entrywise_kronecker() {
    let a = DensityOperator::diagonal("A", &[0.5, 0.5]).unwrap();
    let b = DensityOperator::diagonal("B", &[0.9, 0.1]).unwrap();
    let ab = a.tensor(&b).unwrap();
    let oracle = kron_oracle(a.matrix(), b.matrix());
    assert!(max_abs_diff(ab.matrix(), &oracle) < 1e-15);
    assert!(max_abs_diff(ab.matrix(), &diag(&[0.45, 0.05, 0.45, 0.05])) < 1e-15);
}

#[test]
fn tensor_label_collision() {
    let a = DensityOperator::maximally_mixed("A", 2);
    assert!(matches!(a.tensor(&a), Err(Error::LabelCollision(_))));
}

#[test]
fn bell_partial_trace() {
    let s = 0.5f64.sqrt();
    let bell = StateVector::new(
        vec![qubit("A"), qubit("B")],
        qcap_core::qmat::CVec::from_vec(vec![c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)]),
    )
    .unwrap()
    .to_density();
    let a = bell.partial_trace(&["B"]).unwrap();
    assert!(max_abs_diff(a.matrix(), &diag(&[0.5, 0.5])) < 1e-15);
}

#[test]
fn partial_trace_of_product() {
    let mut r = random::rng(7, 0);
    let ra = random::density(vec![qubit("A")], &mut r);
    let sb = random::density(vec![SystemLabel::new("B", 3)], &mut r);
    let back = ra.tensor(&sb).unwrap().partial_trace(&["B"]).unwrap();
    assert!(max_abs_diff(back.matrix(), ra.matrix()) < 1e-14);
}

#[test]
fn partial_trace_matches_index_summation() {
    let mut r = random::rng(11, 0);
    let rho = random::density(vec![qubit("A"), qubit("B")], &mut r);
    let m = rho.matrix();
    let mut oracle = CMat::zeros(2, 2);
    for b in 0..2 {
        for b2 in 0..2 {
            for a in 0..2 {
                oracle[(b, b2)] += m[(a * 2 + b, a * 2 + b2)];
            }
        }
    }
    let got = rho.partial_trace(&["A"]).unwrap();
    assert!(max_abs_diff(got.matrix(), &oracle) < 1e-12);
    assert!(matches!(rho.partial_trace(&["C"]), Err(Error::UnknownLabel(_))));
}

#[test]
fn identity_dilation_keeps_state() {
    let ch = WiretapChannel::identity(2);
    let mut r = random::rng(3, 0);
    let rho = random::density(vec![qubit("A")], &mut r);
    let b = apply_channel(&ch, &rho, ChannelOutput::B).unwrap();
    assert!(max_abs_diff(b.matrix(), rho.matrix()) < 1e-14);
}

#[test]
fn full_damping_resets() {
    let ch = standard_channel(ChannelKind::AmplitudeDamping, 1.0).unwrap();
    let mut r = random::rng(5, 0);
    for _ in 0..5 {
        let rho = random::density(vec![qubit("A")], &mut r);
        let b = apply_channel(&ch, &rho, ChannelOutput::B).unwrap();
        assert!(max_abs_diff(b.matrix(), &diag(&[1.0, 0.0])) < 1e-14);
    }
}

#[test]
fn damping_matches_kraus_form() {
    let g: f64 = 0.3;
    let ch = standard_channel(ChannelKind::AmplitudeDamping, g).unwrap();
    let one = DensityOperator::diagonal("A", &[0.0, 1.0]).unwrap();
    let k0 = diag(&[1.0, (1.0 - g).sqrt()]);
    let mut k1 = CMat::zeros(2, 2);
    k1[(0, 1)] = c64(g.sqrt(), 0.0);
    let oracle = &k0 * one.matrix() * k0.adjoint() + &k1 * one.matrix() * k1.adjoint();
    let b = apply_channel(&ch, &one, ChannelOutput::B).unwrap();
    assert!(max_abs_diff(b.matrix(), &oracle) < 1e-14);
    assert!(max_abs_diff(b.matrix(), &diag(&[0.3, 0.7])) < 1e-14);
}

#[test]
fn channel_rejects_wrong_input() {
    let ch = WiretapChannel::identity(2);
    let rho = DensityOperator::maximally_mixed("Q", 2);
    assert!(apply_channel(&ch, &rho, ChannelOutput::B).is_err());
    let big = DensityOperator::maximally_mixed("A", 3);
    assert!(apply_channel(&ch, &big, ChannelOutput::B).is_err());
}

#[test]
fn distance_examples() {
    let zero = ket("A", &[1.0, 0.0]);
    let one = ket("A", &[0.0, 1.0]);
    let s = 0.5f64.sqrt();
    let plus = ket("A", &[s, s]);
    let mixed = DensityOperator::maximally_mixed("A", 2);
    assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-15);
    assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
    assert!((trace_distance(&zero, &mixed).unwrap() - 0.5).abs() < 1e-15);
    assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-7);
    assert!(fidelity(&zero, &one).unwrap().abs() < 1e-7);
    assert!((fidelity(&plus, &zero).unwrap() - s).abs() < 1e-7);
    assert!(purified_distance(&zero, &zero).unwrap() < 1e-6);
    assert!((purified_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-7);
    assert!((purified_distance(&plus, &zero).unwrap() - s).abs() < 1e-7);
}

#[test]
fn distance_dimension_mismatch() {
    let a = DensityOperator::maximally_mixed("A", 2);
    let b = DensityOperator::maximally_mixed("A", 3);
    assert!(trace_distance(&a, &b).is_err());
    assert!(fidelity(&a, &b).is_err());
    assert!(purified_distance(&a, &b).is_err());
}

#[test]
fn positive_part_examples() {
    let z = HermitianOperator::single("A", diag(&[1.0, -1.0])).unwrap();
    assert!(max_abs_diff(positive_part_projector(&z).matrix(), &diag(&[1.0, 0.0])) < 1e-15);
    let neg = HermitianOperator::single("A", diag(&[-1.0, -0.5, 0.0])).unwrap();
    assert!(max_abs_diff(positive_part_projector(&neg).matrix(), &CMat::zeros(3, 3)) < 1e-15);
}

#[test]
fn positive_part_of_random_hermitian() {
    let mut r = random::rng(19, 0);
    for _ in 0..10 {
        let g = random::ginibre(4, 4, &mut r);
        let h = (&g + g.adjoint()).scale(0.5);
        let op = HermitianOperator::single("A", h.clone()).unwrap();
        let p = positive_part_projector(&op);
        let got = qcap_core::qmat::trace_product(p.matrix(), &h);
        let oracle: f64 = eigh(&h).values.iter().filter(|&&l| l > 1e-10).sum();
        assert!((got - oracle).abs() < 1e-10);
    }
}

#[test]
fn purify_examples() {
    let zero = ket("A", &[1.0, 0.0]);
    let p = purify(&zero, "R").unwrap();
    assert!((p.eigh().max() - 1.0).abs() < 1e-12);
    assert!(max_abs_diff(p.reduce_to(&["R"]).unwrap().matrix(), &diag(&[1.0, 0.0])).min(
        max_abs_diff(p.reduce_to(&["R"]).unwrap().matrix(), &diag(&[0.0, 1.0]))
    ) < 1e-12);

    let mixed = DensityOperator::maximally_mixed("A", 2);
    let bell = purify(&mixed, "R").unwrap();
    assert!((bell.eigh().max() - 1.0).abs() < 1e-12);
    let ic = bell.reduce_to(&["R"]).unwrap().entropy() - bell.entropy();
    assert!((ic - 1.0).abs() < 1e-12);

    let rho = DensityOperator::diagonal("A", &[0.7, 0.3]).unwrap();
    let p = purify(&rho, "R").unwrap();
    assert!(max_abs_diff(p.reduce_to(&["A"]).unwrap().matrix(), rho.matrix()) < 1e-10);
    // Schmidt coefficients from the reduced spectrum.
    let spec = eigh(p.reduce_to(&["R"]).unwrap().matrix()).values;
    assert!((spec[0].sqrt() - 0.3f64.sqrt()).abs() < 1e-10);
    assert!((spec[1].sqrt() - 0.7f64.sqrt()).abs() < 1e-10);
}

fn random_pair(seed: u64, d: usize) -> (DensityOperator, DensityOperator, DensityOperator) {
    let mut r = random::rng(seed, 0);
    let l = vec![SystemLabel::new("A", d)];
    (
        random::density(l.clone(), &mut r),
        random::density(l.clone(), &mut r),
        random::density(l, &mut r),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>(), d in 2usize..5) {
        let (a, b, c) = random_pair(seed, d);
        for f in [trace_distance, purified_distance] {
            let (ab, bc, ac) = (f(&a, &b).unwrap(), f(&b, &c).unwrap(), f(&a, &c).unwrap());
            prop_assert!((ab - f(&b, &a).unwrap()).abs() < 1e-9);
            prop_assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn trace_and_purified_distance_sandwich(seed in any::<u64>(), d in 2usize..5) {
        let (a, b, _) = random_pair(seed, d);
        let t = trace_distance(&a, &b).unwrap();
        let p = purified_distance(&a, &b).unwrap();
        prop_assert!(t <= p + 1e-9);
        prop_assert!(p <= (2.0 * t).sqrt() + 1e-9);
    }

    #[test]
    fn channels_contract_trace_distance(seed in any::<u64>()) {
        let (a, b, _) = random_pair(seed, 2);
        let mut r = random::rng(seed, 1);
        let ch = random::channel(2, 3, 2, &mut r);
        let na = apply_channel(&ch, &a, ChannelOutput::B).unwrap();
        let nb = apply_channel(&ch, &b, ChannelOutput::B).unwrap();
        prop_assert!(trace_distance(&na, &nb).unwrap() <= trace_distance(&a, &b).unwrap() + 1e-9);
        prop_assert!((na.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn distances_invariant_under_tensoring(seed in any::<u64>()) {
        let (a, b, _) = random_pair(seed, 2);
        let mut r = random::rng(seed, 2);
        let tau = random::density(vec![SystemLabel::new("T", 3)], &mut r);
        let at = a.tensor(&tau).unwrap();
        let bt = b.tensor(&tau).unwrap();
        prop_assert!((trace_distance(&at, &bt).unwrap() - trace_distance(&a, &b).unwrap()).abs() < 1e-9);
        prop_assert!((purified_distance(&at, &bt).unwrap() - purified_distance(&a, &b).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn dilation_is_trace_preserving(seed in any::<u64>(), da in 2usize..4, db in 1usize..4, de in 1usize..4) {
        prop_assume!(db * de >= da);
        let mut r = random::rng(seed, 3);
        let ch = random::channel(da, db, de, &mut r);
        let rho = random::density(vec![SystemLabel::new("A", da)], &mut r);
        for keep in [ChannelOutput::B, ChannelOutput::E, ChannelOutput::BE] {
            let out = apply_channel(&ch, &rho, keep).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-10);
        }
        let be = apply_channel(&ch, &rho, ChannelOutput::BE).unwrap();
        prop_assert!(trace_norm(&(be.matrix() - be.matrix().adjoint())) < 1e-12);
    }
}

use proptest::prelude::*;
use qcap_core::channels::{standard_channel, ChannelKind};
use qcap_core::classical::{ClassicalCqq, ClassicalPair};
use qcap_core::divergences::*;
use qcap_core::qmat::{
    apply_channel, c64, diag, eigh, identity, trace_product, CMat, ChannelOutput, CVec,
    DensityOperator, StateVector, SystemLabel,
};
use qcap_core::random;
use statrs::distribution::{ContinuousCDF, Normal};

fn qubit(name: &str) -> SystemLabel {
    SystemLabel::new(name, 2)
}

fn pure(name: &str, amps: &[f64]) -> DensityOperator {
    let v = CVec::from_iterator(amps.len(), amps.iter().map(|&a| c64(a, 0.0)));
    StateVector::new(vec![SystemLabel::new(name, amps.len())], v)
        .unwrap()
        .to_density()
}

fn bell() -> DensityOperator {
    let s = 0.5f64.sqrt();
    let v = CVec::from_vec(vec![c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)]);
    StateVector::new(vec![qubit("A"), qubit("B")], v).unwrap().to_density()
}

fn classically_correlated() -> DensityOperator {
    DensityOperator::from_matrix(vec![qubit("A"), qubit("B")], diag(&[0.5, 0.0, 0.0, 0.5])).unwrap()
}

fn random_pair(seed: u64, d: usize) -> (DensityOperator, DensityOperator) {
    let mut r = random::rng(seed, 0);
    let l = vec![SystemLabel::new("A", d)];
    (random::density(l.clone(), &mut r), random::density(l, &mut r))
}

/// Minimum type-II error over randomized classical tests: every subset `S`
/// accepted outright plus one outcome `j` accepted with the weight that
/// spends the remaining type-I budget.
fn classical_np_oracle(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let n = p.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let acc_p: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| p[i]).sum();
        let acc_q: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| q[i]).sum();
        if 1.0 - acc_p <= eps + 1e-12 {
            best = best.min(acc_q);
        }
        for j in (0..n).filter(|j| mask >> j & 1 == 0) {
            if p[j] <= 0.0 {
                continue;
            }
            let w = (1.0 - eps - acc_p) / p[j];
            if (0.0..=1.0).contains(&w) {
                best = best.min(acc_q + w * q[j]);
            }
        }
    }
    best
}

/// Error pair of `T = Σ_i f_i |v_i⟩⟨v_i|` over the eigenvectors of `ρ − tσ`
/// sorted descending, with full weight on the first `k` and weight `w` on
/// the next one.
fn family_test(rho: &CMat, sigma: &CMat, t: f64, k: usize, w: f64) -> (f64, f64) {
    let e = eigh(&(rho - sigma.scale(t)));
    let d = rho.nrows();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| e.values[b].total_cmp(&e.values[a]));
    let mut test = CMat::zeros(d, d);
    for (rank, &i) in idx.iter().enumerate() {
        let f = if rank < k {
            1.0
        } else if rank == k {
            w
        } else {
            0.0
        };
        let v = e.vectors.column(i);
        test += (&v * v.adjoint()).scale(f);
    }
    (1.0 - trace_product(&test, rho), trace_product(&test, sigma))
}

/// Exact weight on the next eigenvector so that the type-I error equals `eps`.
fn solved_family(rho: &CMat, sigma: &CMat, t: f64, k: usize, eps: f64) -> Option<f64> {
    let (a0, b0) = family_test(rho, sigma, t, k, 0.0);
    let (a1, b1) = family_test(rho, sigma, t, k, 1.0);
    if (a0 - a1).abs() < 1e-15 {
        return (a0 <= eps + 1e-12).then_some(b0);
    }
    let w = (a0 - eps) / (a0 - a1);
    (-1e-12..=1.0 + 1e-12)
        .contains(&w)
        .then(|| b0 + w.clamp(0.0, 1.0) * (b1 - b0))
}

fn grid_search_type_ii(rho: &CMat, sigma: &CMat, eps: f64) -> f64 {
    let d = rho.nrows();
    let eval = |t: f64| {
        (0..d)
            .filter_map(|k| solved_family(rho, sigma, t, k, eps))
            .fold(f64::INFINITY, f64::min)
    };
    let (lo, hi) = (-8.0f64, 8.0f64);
    let n = 10_000;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let lt = lo + (hi - lo) * i as f64 / n as f64;
        let v = eval(lt.exp());
        if v < best.0 {
            best = (v, lt);
        }
    }
    let step = (hi - lo) / n as f64;
    for i in 0..=n {
        let lt = best.1 - step + 2.0 * step * i as f64 / n as f64;
        best.0 = best.0.min(eval(lt.exp()));
    }
    best.0
}

#[test]
fn relative_entropy_examples() {
    let zero = pure("A", &[1.0, 0.0]);
    let one = pure("A", &[0.0, 1.0]);
    let mixed = DensityOperator::maximally_mixed("A", 2);
    assert!(relative_entropy(&mixed, &mixed).unwrap().abs() < 1e-12);
    assert!((relative_entropy(&zero, &mixed).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
}

#[test]
fn variance_examples() {
    let p = [0.5, 0.5];
    let q = [0.9, 0.1];
    let rho = DensityOperator::diagonal("A", &p).unwrap();
    let sigma = DensityOperator::diagonal("A", &q).unwrap();
    let llr: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a / b).log2()).collect();
    let d: f64 = p.iter().zip(&llr).map(|(a, l)| a * l).sum();
    let v: f64 = p.iter().zip(&llr).map(|(a, l)| a * (l - d).powi(2)).sum();
    assert!((relative_entropy_variance(&rho, &sigma).unwrap() - v).abs() < 1e-12);
    assert!(relative_entropy_variance(&rho, &rho).unwrap().abs() < 1e-12);
    let mm = DensityOperator::maximally_mixed("A", 2)
        .tensor(&DensityOperator::maximally_mixed("B", 2))
        .unwrap();
    assert!(relative_entropy_variance(&mm, &mm).unwrap().abs() < 1e-12);
    let zero = pure("A", &[1.0, 0.0]);
    let one = pure("A", &[0.0, 1.0]);
    assert!(relative_entropy_variance(&zero, &one).is_err());
}

#[test]
fn dmax_examples() {
    let mut r = random::rng(1, 0);
    let rho = random::density(vec![qubit("A")], &mut r);
    assert!(dmax(&rho, &rho).unwrap().abs() < 1e-9);
    let a = DensityOperator::diagonal("A", &[0.75, 0.25]).unwrap();
    let m = DensityOperator::maximally_mixed("A", 2);
    // Generalized eigenvalues of a diagonal pair are entrywise ratios.
    let oracle = (0.75f64 / 0.5).max(0.25 / 0.5).log2();
    assert!((dmax(&a, &m).unwrap() - oracle).abs() < 1e-12);
    let s = 0.5f64.sqrt();
    let plus = pure("A", &[s, s]);
    assert_eq!(dmax(&pure("A", &[1.0, 0.0]), &plus).unwrap(), f64::INFINITY);
}

#[test]
fn hypothesis_testing_identical_states() {
    let mut r = random::rng(2, 0);
    let rho = random::density(vec![SystemLabel::new("A", 3)], &mut r);
    for eps in [0.0, 0.1, 0.5, 0.9] {
        let v = dh_eps(&rho, &rho, eps).unwrap();
        assert!((v + (1.0 - eps).log2()).abs() < 1e-8, "eps {eps}: {v}");
    }
}

#[test]
fn hypothesis_testing_commuting_pair_matches_brute_force() {
    let p = [0.5, 0.5];
    let q = [0.9, 0.1];
    let rho = DensityOperator::diagonal("A", &p).unwrap();
    let sigma = DensityOperator::diagonal("A", &q).unwrap();
    let oracle = -classical_np_oracle(&p, &q, 0.5).log2();
    assert!((oracle - 10f64.log2()).abs() < 1e-12);
    assert!((dh_eps(&rho, &sigma, 0.5).unwrap() - oracle).abs() < 1e-9);
}

#[test]
fn hypothesis_testing_random_qubit_matches_grid_search() {
    for seed in 0..5 {
        let (rho, sigma) = random_pair(100 + seed, 2);
        let got = dh_eps(&rho, &sigma, 0.1).unwrap();
        let oracle = -grid_search_type_ii(rho.matrix(), sigma.matrix(), 0.1).log2();
        assert!((got - oracle).abs() < 1e-6, "seed {seed}: {got} vs {oracle}");
    }
}

#[test]
fn optimal_test_reports_consistent_errors() {
    let (rho, sigma) = random_pair(9, 3);
    let t = optimal_test(&rho, &sigma, 0.2).unwrap();
    let m = t.test.as_hermitian().matrix();
    assert!((t.type_i - (1.0 - trace_product(m, rho.matrix()))).abs() < 1e-9);
    assert!((t.type_ii - trace_product(m, sigma.matrix())).abs() < 1e-9);
    assert!(t.type_i <= 0.2 + 1e-9);
    assert!((0.0..=1.0).contains(&t.boundary_weight));
    assert!(optimal_test(&rho, &sigma, 1.0).is_err());
    assert!(optimal_test(&rho, &sigma, -0.1).is_err());
}

#[test]
fn type_i_of_threshold_projector_grows_with_threshold() {
    let (rho, sigma) = random_pair(13, 3);
    let mut last = -1.0;
    for i in 0..400 {
        let t = (i as f64 * 0.02 - 4.0).exp();
        let k = eigvals_positive(rho.matrix(), sigma.matrix(), t);
        let (type_i, _) = family_test(rho.matrix(), sigma.matrix(), t, k, 0.0);
        assert!(type_i >= last - 1e-12);
        last = type_i;
    }
}

fn eigvals_positive(rho: &CMat, sigma: &CMat, t: f64) -> usize {
    eigh(&(rho - sigma.scale(t))).values.iter().filter(|&&l| l > 0.0).count()
}

#[test]
fn dmax_smooth_examples() {
    let (rho, sigma) = random_pair(21, 2);
    let same = dmax_smooth(&rho, &rho, 0.1).unwrap();
    assert!(same.lower <= 1e-12 && same.upper.abs() < 1e-9);
    let tiny = dmax_smooth(&rho, &sigma, 1e-7).unwrap();
    assert!(tiny.upper - tiny.lower < 1e-3);
    assert!((tiny.upper - dmax(&rho, &sigma).unwrap()).abs() < 1e-12);
    assert!(dmax_smooth(&rho, &sigma, 0.0).is_err());
    assert!(dmax_smooth(&rho, &sigma, 1.0).is_err());
}

#[test]
fn dmax_smooth_biased_bit_matches_diagonal_sweep() {
    let rho = DensityOperator::diagonal("A", &[0.99, 0.01]).unwrap();
    let m = DensityOperator::maximally_mixed("A", 2);
    let got = dmax_smooth(&rho, &m, 0.2).unwrap();
    let mut oracle = f64::INFINITY;
    let n = 2_000_000;
    for i in 0..=n {
        let q = i as f64 / n as f64;
        let f = (0.99 * q).sqrt() + (0.01 * (1.0 - q)).sqrt();
        if (1.0 - f * f).max(0.0).sqrt() <= 0.2 {
            oracle = oracle.min((2.0 * q.max(1.0 - q)).log2());
        }
    }
    assert!((got.lower - oracle).abs() < 1e-4, "{} vs {oracle}", got.lower);
    assert!((got.upper - 1.98f64.log2()).abs() < 1e-12);
}

#[test]
fn mutual_information_examples() {
    let mut r = random::rng(4, 0);
    let prod = random::density(vec![qubit("A")], &mut r)
        .tensor(&random::density(vec![qubit("B")], &mut r))
        .unwrap();
    let eps = 0.1;
    assert!(i_h_eps(&prod, &["A"], eps).unwrap() <= -(1.0f64 - eps).log2() + 1e-8);
    assert!(i_max(&prod, &["A"]).unwrap().abs() < 1e-8);
    assert!(i_max_smooth(&prod, &["A"], eps).unwrap().upper.abs() < 1e-8);
    assert!(i_max_alt_smooth(&prod, &["A"], eps).unwrap().upper.abs() < 1e-8);

    // Diagonal pair against the uniform product: largest ratio 0.5 / 0.25.
    let cc = classically_correlated();
    assert!((i_max(&cc, &["A"]).unwrap() - (0.5f64 / 0.25).log2()).abs() < 1e-9);

    // 4·Φ⁺ relative to I/4 has top eigenvalue 4.
    let b = bell();
    let ratio = eigh(&(b.matrix().scale(4.0) * identity(4))).max();
    assert!((i_max(&b, &["A"]).unwrap() - ratio.log2()).abs() < 1e-9);
    assert!((ratio - 4.0).abs() < 1e-12);
}

#[test]
fn coherent_information_examples() {
    assert!((coherent_info(&bell(), &["A"]).unwrap() - 1.0).abs() < 1e-12);
    let pp = pure("A", &[1.0, 0.0]).tensor(&pure("B", &[0.0, 1.0])).unwrap();
    assert!(coherent_info(&pp, &["A"]).unwrap().abs() < 1e-12);
    let neg = DensityOperator::maximally_mixed("A", 2)
        .tensor(&pure("B", &[1.0, 0.0]))
        .unwrap();
    assert!((coherent_info(&neg, &["A"]).unwrap() + 1.0).abs() < 1e-12);

    let st = CqqState::new(vec![0.25, 0.75], vec![bell(), neg], vec!["A".into()]).unwrap();
    assert!((cond_coherent_info(&st).unwrap() - (0.25 - 0.75)).abs() < 1e-12);
}

fn product_block(seed: u64) -> DensityOperator {
    let mut r = random::rng(seed, 0);
    random::density(vec![qubit("A")], &mut r)
        .tensor(&random::density(vec![qubit("B")], &mut r))
        .unwrap()
}

#[test]
fn conditional_hypothesis_testing_examples() {
    let eps = 0.2;
    let blk = product_block(5);
    let one = CqqState::new(vec![1.0], vec![blk.clone()], vec!["A".into()]).unwrap();
    assert!((cond_i_h_eps(&one, eps).unwrap() - i_h_eps(&blk, &["A"], eps).unwrap()).abs() < 1e-12);

    let corr = classically_correlated();
    let v_prod = i_h_eps(&blk, &["A"], 0.01).unwrap();
    let v_corr = i_h_eps(&corr, &["A"], 0.01).unwrap();
    let even = CqqState::new(vec![0.5, 0.5], vec![blk.clone(), corr.clone()], vec!["A".into()]).unwrap();
    assert!((cond_i_h_eps(&even, 0.01).unwrap() - v_prod.min(v_corr)).abs() < 1e-12);

    let p = [0.99, 0.01];
    assert!((classical_purified_distance(&[1.0, 0.0], &p) - 0.1).abs() < 1e-12);
    assert!(classical_purified_distance(&[0.0, 1.0], &p) > eps);
    let skew = CqqState::new(p.to_vec(), vec![corr.clone(), blk.clone()], vec!["A".into()]).unwrap();
    let common = i_h_eps(&corr, &["A"], eps).unwrap();
    let rare = i_h_eps(&blk, &["A"], eps).unwrap();
    let oracle = common.min(rare).max(common);
    assert!((cond_i_h_eps(&skew, eps).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn conditional_max_information_examples() {
    let eps = 0.2;
    let blk = product_block(6);
    let one = CqqState::new(vec![1.0], vec![blk.clone()], vec!["A".into()]).unwrap();
    assert_eq!(
        cond_i_max_smooth(&one, eps).unwrap(),
        i_max_smooth(&blk, &["A"], eps).unwrap()
    );
    let corr = classically_correlated();
    let per = i_max_smooth(&corr, &["A"], eps).unwrap();
    for w in [0.5, 0.9, 0.99] {
        let eq = CqqState::new(vec![w, 1.0 - w], vec![corr.clone(), corr.clone()], vec!["A".into()]).unwrap();
        assert_eq!(cond_i_max_smooth(&eq, eps).unwrap(), per);
    }

    let skew = CqqState::new(vec![0.99, 0.01], vec![blk.clone(), bell()], vec!["A".into()]).unwrap();
    let common = i_max_smooth(&blk, &["A"], eps).unwrap();
    let rare = i_max_smooth(&bell(), &["A"], eps).unwrap();
    let got = cond_i_max_smooth(&skew, eps).unwrap();
    assert!((got.upper - common.upper.max(rare.upper).min(common.upper)).abs() < 1e-12);
    assert!((got.lower - common.lower.max(rare.lower).min(common.lower)).abs() < 1e-12);
    assert!(got.upper < rare.upper);
    let alt = cond_i_max_alt_smooth(&skew, eps).unwrap();
    assert!(alt.lower <= alt.upper);
}

#[test]
fn sub_alphabet_search_limit() {
    let w = vec![1.0 / 13.0; 13];
    assert!(matches!(
        sub_alphabets(&w, 0.1),
        Err(qcap_core::Error::AlphabetTooLarge { size: 13, limit: 12 })
    ));
}

#[test]
fn scalar_helpers() {
    assert_eq!(binary_entropy(0.5), 1.0);
    assert_eq!(binary_entropy(0.0), 0.0);
    let normal = Normal::standard();
    for q in [0.975, 0.8413, 0.01, 0.5, 0.3] {
        assert!((inv_gaussian_cdf(q).unwrap() - normal.inverse_cdf(q)).abs() < 1e-9);
    }
    assert!((inv_gaussian_cdf(0.975).unwrap() - 1.959964).abs() < 1e-6);
    assert!(inv_gaussian_cdf(0.0).is_err());
    assert!(inv_gaussian_cdf(1.0).is_err());
}

#[test]
fn second_order_examples() {
    assert!((second_order_dh(0.7, 2.0, 0.5, 30).unwrap() - 21.0).abs() < 1e-9);
    assert!((second_order_dh(0.7, 0.0, 0.2, 30).unwrap() - 21.0).abs() < 1e-9);
    assert!((second_order_dmax(0.7, 0.0, 0.2, 30).unwrap() - 21.0).abs() < 1e-9);
    let q = Normal::standard().inverse_cdf(0.8413);
    let v = second_order_dh(1.0, 1.0, 0.8413, 100).unwrap();
    assert!((v - (100.0 + 10.0 * q)).abs() < 1e-8);
    assert!((v - 110.0).abs() < 1e-2);
}

#[test]
fn iid_hypothesis_testing_follows_second_order_expansion() {
    let eps = 0.2;
    for (p, q) in [
        (vec![0.7, 0.2, 0.1], vec![0.3, 0.3, 0.4]),
        (vec![0.5, 0.5], vec![0.9, 0.1]),
    ] {
        let pair = ClassicalPair::new(&p, &q).unwrap();
        let d = pair.relative_entropy();
        let v = pair.relative_entropy_variance().unwrap();
        let z = Normal::standard().inverse_cdf(eps);
        for n in 4..=12usize {
            let nf = n as f64;
            let got = pair.iid_power(n).dh_eps(eps).unwrap() / nf;
            let gap = (got - d - (v / nf).sqrt() * z).abs();
            assert!(gap <= 3.0 * (nf + 1.0).log2() / nf, "n {n}: gap {gap}");
        }
    }
}

#[test]
fn conditional_hypothesis_testing_approaches_mutual_information() {
    let eps = 0.2;
    let joint = |a: f64| vec![vec![a, 0.5 - a], vec![0.5 - a, a]];
    let pairs: Vec<ClassicalPair> = [0.45, 0.35]
        .iter()
        .map(|&a| qcap_core::classical::mutual_information_pair(&joint(a)).unwrap())
        .collect();
    let cqq = ClassicalCqq::new(vec![0.6, 0.4], pairs).unwrap();
    let target = cqq.average_relative_entropy();
    let gaps: Vec<f64> = (1..=12)
        .map(|n| (cqq.nfold(n).cond_dh_eps(eps).unwrap() / n as f64 - target).abs())
        .collect();
    let early: f64 = gaps[..4].iter().sum::<f64>() / 4.0;
    let late: f64 = gaps[8..].iter().sum::<f64>() / 4.0;
    assert!(gaps[11] < gaps[0]);
    assert!(late < early, "{early} vs {late}");
    for (k, g) in gaps.iter().enumerate().skip(3) {
        let n = (k + 1) as f64;
        assert!(*g <= 3.0 * (n + 1.0).log2() / n + 1.0 / n.sqrt(), "n {n}: {g}");
    }
}

fn random_bipartite(seed: u64, da: usize, db: usize) -> DensityOperator {
    let mut r = random::rng(seed, 7);
    random::density(vec![SystemLabel::new("A", da), SystemLabel::new("B", db)], &mut r)
}

fn random_cqq(seed: u64) -> CqqState {
    let mut r = random::rng(seed, 8);
    let w = random::probability_vector(3, &mut r);
    let blocks = (0..3).map(|i| random_bipartite(seed ^ (i + 1), 2, 2)).collect();
    CqqState::new(w, blocks, vec!["A".into()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hypothesis_testing_bounded_by_relative_entropy(seed in any::<u64>(), d in 2usize..5, eps in 0.05f64..0.9) {
        let (rho, sigma) = random_pair(seed, d);
        let lhs = dh_eps(&rho, &sigma, eps).unwrap();
        let rhs = (relative_entropy(&rho, &sigma).unwrap() + binary_entropy(eps)) / (1.0 - eps);
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn relative_entropy_below_max(seed in any::<u64>(), d in 2usize..5) {
        let (rho, sigma) = random_pair(seed, d);
        prop_assert!(relative_entropy(&rho, &sigma).unwrap() <= dmax(&rho, &sigma).unwrap() + 1e-9);
    }

    #[test]
    fn data_processing(seed in any::<u64>(), eps in 0.05f64..0.9) {
        let (rho, sigma) = random_pair(seed, 2);
        let mut r = random::rng(seed, 1);
        let ch = random::channel(2, 3, 2, &mut r);
        let nr = apply_channel(&ch, &rho, ChannelOutput::B).unwrap();
        let ns = apply_channel(&ch, &sigma, ChannelOutput::B).unwrap();
        prop_assert!(dmax(&nr, &ns).unwrap() <= dmax(&rho, &sigma).unwrap() + 1e-9);
        prop_assert!(dh_eps(&nr, &ns, eps).unwrap() <= dh_eps(&rho, &sigma, eps).unwrap() + 1e-9);
    }

    #[test]
    fn neyman_pearson_beats_grid_and_random_tests(seed in any::<u64>(), d in 2usize..4, eps in 0.05f64..0.5) {
        let (rho, sigma) = random_pair(seed, d);
        let opt = optimal_test(&rho, &sigma, eps).unwrap().type_ii;
        let (rm, sm) = (rho.matrix(), sigma.matrix());
        for i in 0..100 {
            let t = (i as f64 * 0.12 - 6.0).exp();
            for j in 0..=100 {
                let w = j as f64 / 100.0;
                for k in 0..d {
                    let (a, b) = family_test(rm, sm, t, k, w);
                    if a <= eps {
                        prop_assert!(opt <= b + 1e-9);
                    }
                }
            }
        }
        let mut r = random::rng(seed, 2);
        for _ in 0..1000 {
            let m = random::measurement(rho.systems().to_vec(), &mut r);
            let mm = m.as_hermitian().matrix();
            let a = 1.0 - trace_product(mm, rm);
            let b = trace_product(mm, sm);
            // Mix with the identity test until the type-I budget is met.
            let s = if a > eps { 1.0 - eps / a } else { 0.0 };
            prop_assert!(opt <= (1.0 - s) * b + s + 1e-9);
        }
    }

    #[test]
    fn commuting_pairs_match_classical_oracle(seed in any::<u64>(), d in 2usize..6, eps in 0.01f64..0.9) {
        let mut r = random::rng(seed, 3);
        let p = random::probability_vector(d, &mut r);
        let q = random::probability_vector(d, &mut r);
        let rho = DensityOperator::diagonal("A", &p).unwrap();
        let sigma = DensityOperator::diagonal("A", &q).unwrap();
        let oracle = classical_np_oracle(&p, &q, eps);
        let got = optimal_test(&rho, &sigma, eps).unwrap().type_ii;
        prop_assert!((got - oracle).abs() < 1e-8);
        let fast = ClassicalPair::new(&p, &q).unwrap().optimal_type_ii(eps).unwrap();
        prop_assert!((fast - oracle).abs() < 1e-8);
    }

    #[test]
    fn distances_bracket(seed in any::<u64>(), d in 2usize..4) {
        let (rho, sigma) = random_pair(seed, d);
        let t = qcap_core::qmat::trace_distance(&rho, &sigma).unwrap();
        let f = qcap_core::qmat::fidelity(&rho, &sigma).unwrap();
        prop_assert!(1.0 - f <= t + 1e-9);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn smoothing_bridge(seed in any::<u64>(), eps in 0.1f64..0.6, frac in 0.1f64..0.9) {
        let rho = random_bipartite(seed, 2, 2);
        let gamma = eps * frac;
        let alt = i_max_alt_smooth(&rho, &["A"], eps).unwrap();
        let std = i_max_smooth(&rho, &["A"], eps - gamma).unwrap();
        prop_assert!(alt.lower <= alt.upper);
        prop_assert!(alt.upper <= std.upper + (3.0 / (gamma * gamma)).log2() + 1e-9);
    }

    #[test]
    fn conditional_hypothesis_testing_bounded(seed in any::<u64>(), eps in 0.05f64..0.8) {
        let st = random_cqq(seed);
        let lhs = cond_i_h_eps(&st, eps).unwrap();
        let rhs = (cond_mutual_information(&st).unwrap() + binary_entropy(eps)) / (1.0 - eps);
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn conditional_max_information_continuity(seed in any::<u64>(), eps in 0.05f64..0.5) {
        let st = random_cqq(seed);
        let lower = cond_i_max_smooth(&st, eps).unwrap().lower;
        let i = cond_mutual_information(&st).unwrap();
        let slack = 3.0 * eps * 2f64.log2() + 2.0 * (1.0 + eps) * binary_entropy(eps / (1.0 + eps));
        prop_assert!(lower >= i - slack - 1e-6);
    }

    #[test]
    fn smoothing_interval_ordered(seed in any::<u64>(), eps in 0.01f64..0.9) {
        let (rho, sigma) = random_pair(seed, 3);
        let s = dmax_smooth(&rho, &sigma, eps).unwrap();
        prop_assert!(s.lower <= s.upper + 1e-12);
    }
}

#[test]
fn channel_output_smoothing_stays_ordered() {
    let ch = standard_channel(ChannelKind::Depolarizing, 0.3).unwrap();
    let rho = pure("A", &[1.0, 0.0]);
    let out = apply_channel(&ch, &rho, ChannelOutput::B).unwrap();
    let m = DensityOperator::maximally_mixed("B", 2);
    let s = dmax_smooth(&out, &m, 0.1).unwrap();
    assert!(s.lower < s.upper);
}

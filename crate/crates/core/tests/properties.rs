//! Property tests for the state-space invariants and protocol guarantees.

use num_complex::Complex64;
use proptest::prelude::*;

use phase_oracle::classical::{classical_query, full_sweep, transcripts_indistinguishable};
use phase_oracle::hilbert::{inner_product, projector_probability};
use phase_oracle::oracle::{
    make_phase_profile, MembershipTable, OracleSpec, PhaseKind, PhaseProfile,
};
use phase_oracle::protocols::{
    answer_one_probability, dj_run, recover_function, DJConfig, MiddleOp, SecondCall, Verdict,
};
use phase_oracle::rng::CounterRng;
use phase_oracle::{BasisLabel, StateVector};

fn random_state(n: u32, seed: u64) -> StateVector {
    let mut rng = CounterRng::new(seed);
    let amps = (0..2usize << n)
        .map(|_| Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5))
        .collect();
    StateVector::normalized(n, amps).unwrap()
}

fn random_table(n: u32, seed: u64) -> MembershipTable {
    let mut rng = CounterRng::new(seed);
    MembershipTable::new(n, (0..1usize << n).map(|_| rng.next_bit()).collect()).unwrap()
}

fn random_balanced(n: u32, seed: u64) -> MembershipTable {
    let mut rng = CounterRng::new(seed);
    let len = 1usize << n;
    let mut idx: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        idx.swap(i, rng.below(i as u64 + 1) as usize);
    }
    let mut f = vec![0; len];
    for &x in &idx[..len / 2] {
        f[x] = 1;
    }
    MembershipTable::new(n, f).unwrap()
}

/// ⟨ψ|χ⟩ evaluated in closed form from the per-string phases, without
/// touching the state-vector path:
/// forward: (1/2ⁿ) Σ s(x) e^{i(φ_{x,0} + φ_{x,f(x)})}, inverse: (1/2ⁿ) Σ s(x),
/// with s(x) = (-1)^{f(x)} under the sign flip and 1 under the identity.
fn closed_form_inner(oracle: &OracleSpec, middle: MiddleOp, second: SecondCall) -> Complex64 {
    let f = oracle.membership().bits();
    let p = oracle.phases();
    let len = f.len() as f64;
    f.iter()
        .enumerate()
        .map(|(x, &fx)| {
            let sign = match middle {
                MiddleOp::SignFlip if fx == 1 => -1.0,
                _ => 1.0,
            };
            let phase = match second {
                SecondCall::ForwardU => {
                    p.phi0()[x] + if fx == 0 { p.phi0()[x] } else { p.phi1()[x] }
                }
                SecondCall::InverseU => 0.0,
            };
            Complex64::from_polar(sign, phase)
        })
        .sum::<Complex64>()
        / len
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz_and_projector_symmetry(n in 1u32..=6, s1: u64, s2: u64) {
        let a = random_state(n, s1);
        let b = random_state(n, s2);
        prop_assert!(inner_product(&a, &b).unwrap().norm() <= 1.0 + 1e-12);
        let pab = projector_probability(&a, &b).unwrap();
        let pba = projector_probability(&b, &a).unwrap();
        prop_assert!((pab - pba).abs() <= 1e-12);
        prop_assert!((inner_product(&a, &a).unwrap() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn oracle_preserves_norm_and_inverts(n in 1u32..=10, table_seed: u64, phase_seed: u64, state_seed: u64) {
        let oracle = OracleSpec::with_kind(
            random_table(n, table_seed),
            PhaseKind::UniformRandom { seed: phase_seed },
        ).unwrap();
        let psi = random_state(n, state_seed);
        let image = oracle.apply(&psi).unwrap();
        prop_assert!((image.norm() - 1.0).abs() <= 1e-10);
        let back = oracle.apply_inverse(&image).unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
        let inv_first = oracle.apply(&oracle.apply_inverse(&psi).unwrap()).unwrap();
        for (a, b) in inv_first.amplitudes().iter().zip(psi.amplitudes()) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn membership_readout_ignores_phases(n in 1u32..=8, table_seed: u64, phase_seed: u64) {
        let table = random_table(n, table_seed);
        let oracle = OracleSpec::with_kind(table.clone(), PhaseKind::UniformRandom { seed: phase_seed }).unwrap();
        for x in 0..1u64 << n {
            let image = oracle.apply(&StateVector::basis(BasisLabel::new(x, 0), n).unwrap()).unwrap();
            let want = f64::from(table.bits()[x as usize]);
            prop_assert!((image.answer_one_probability() - want).abs() <= 1e-12);
        }
        let expected = table.count() as f64 / (1u64 << n) as f64;
        prop_assert!((answer_one_probability(&oracle).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn dj_matches_closed_form(n in 1u32..=8, table_seed: u64, phase_seed: u64, mid in 0u8..2, sec in 0u8..2) {
        let middle = if mid == 0 { MiddleOp::SignFlip } else { MiddleOp::Identity };
        let second = if sec == 0 { SecondCall::ForwardU } else { SecondCall::InverseU };
        let oracle = OracleSpec::with_kind(
            random_table(n, table_seed),
            PhaseKind::UniformRandom { seed: phase_seed },
        ).unwrap();
        let out = dj_run(&oracle, &DJConfig::new(middle, second, "uniform_random")).unwrap();
        let want = closed_form_inner(&oracle, middle, second);
        prop_assert!((out.inner - want).norm() <= 1e-12);
        prop_assert!((out.probability - out.inner.norm_sqr()).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&out.probability));
    }

    #[test]
    fn working_regimes_are_exact_under_promise(n in 1u32..=8, seed: u64, full: bool) {
        let table = if full { MembershipTable::full(n).unwrap() } else { random_balanced(n, seed) };
        let (p, v) = if full { (1.0, Verdict::A) } else { (0.0, Verdict::B) };
        let runs = [
            (OracleSpec::with_kind(table.clone(), PhaseKind::Zero).unwrap(), DJConfig::standard()),
            (
                OracleSpec::with_kind(table.clone(), PhaseKind::FPi(&table)).unwrap(),
                DJConfig::new(MiddleOp::Identity, SecondCall::ForwardU, "f_pi"),
            ),
            (
                OracleSpec::with_kind(table.clone(), PhaseKind::UniformRandom { seed }).unwrap(),
                DJConfig::new(MiddleOp::SignFlip, SecondCall::InverseU, "uniform_random"),
            ),
        ];
        for (oracle, config) in runs {
            let out = dj_run(&oracle, &config).unwrap();
            prop_assert!((out.probability - p).abs() <= 1e-9, "{}", config.regime);
            prop_assert_eq!(out.verdict, v);
        }
    }

    #[test]
    fn readout_recovers_random_tables(n in 1u32..=8, seed: u64) {
        let mut rng = CounterRng::new(seed);
        let len = 1u64 << n;
        let mut h: Vec<u8> = (0..len).map(|_| rng.next_bit()).collect();
        let z = rng.below(len);
        h[z as usize] = 1;
        let oracle = OracleSpec::with_kind(MembershipTable::empty(n).unwrap(), PhaseKind::EncodeFunction(&h)).unwrap();
        prop_assert_eq!(recover_function(&oracle, z).unwrap().h, h);
    }

    #[test]
    fn classical_answers_depend_only_on_membership(n in 1u32..=10, table_seed: u64, s1: u64, s2: u64) {
        let table = random_table(n, table_seed);
        let a = OracleSpec::with_kind(table.clone(), PhaseKind::UniformRandom { seed: s1 }).unwrap();
        let b = OracleSpec::new(
            table.clone(),
            make_phase_profile(n, PhaseKind::UniformRandom { seed: s2 }).unwrap(),
        ).unwrap();
        prop_assert!(transcripts_indistinguishable(&a, &b, &full_sweep(n)).unwrap());
        for x in 0..1u64 << n {
            prop_assert_eq!(classical_query(&a, x).unwrap(), table.bits()[x as usize]);
        }
    }

    #[test]
    fn explicit_profiles_reduce_into_range(angles in proptest::collection::vec(-100.0f64..100.0, 4)) {
        let p = PhaseProfile::explicit(1, angles[..2].to_vec(), angles[2..].to_vec()).unwrap();
        for a in p.phi0().iter().chain(p.phi1()) {
            prop_assert!((0.0..std::f64::consts::TAU).contains(a));
        }
    }
}

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use phasechain::chain::{reconstruct, validity_basis, ChainState, Mode};
use phasechain::encoding::{BitPair, BlockCodec, PhaseSchedule};
use phasechain::quantum::{
    gram_schmidt_complete, projective_measure, ProjectorSet, RandomSource, StateVector, UnitaryMatrix,
};
use proptest::prelude::*;

fn state(qubits: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << qubits)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(move |v| {
            StateVector::from_unnormalized(qubits, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
        })
}

fn euler() -> impl Strategy<Value = UnitaryMatrix> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(t, p, l)| UnitaryMatrix::euler(t, p, l))
}

fn strings(max: usize) -> impl Strategy<Value = Vec<BitPair>> {
    (0u8..2, prop::collection::vec(0u8..4, 0..max)).prop_map(|(g, rest)| {
        std::iter::once(BitPair::from_value(g))
            .chain(rest.into_iter().map(BitPair::from_value))
            .collect()
    })
}

proptest! {
    #[test]
    fn unitaries_preserve_norm(psi in state(4), u in euler(), q in 0usize..4, v in euler()) {
        let out = psi.apply(&u, &[q]).unwrap().apply(&v.kron(&UnitaryMatrix::hadamard()), &[(q + 1) % 4, (q + 3) % 4]).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_inverts(psi in state(3), u in euler(), q in 0usize..3) {
        let back = psi.apply(&u, &[q]).unwrap().apply(&u.adjoint(), &[q]).unwrap();
        prop_assert!((back.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validity_outcomes_are_complete(s in strings(4), psi_seed in any::<u64>()) {
        let sched = PhaseSchedule::new(PI / 5.0, 2).unwrap();
        for mode in [Mode::Spatial, Mode::Temporal] {
            let basis = validity_basis(&s, &sched, mode).unwrap();
            prop_assert!(basis.is_valid());
            let q = basis.qubit_count();
            let mut rng = RandomSource::new(psi_seed, 0);
            let amps = (0..1 << q).map(|_| Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5)).collect();
            let psi = StateVector::from_unnormalized(q, amps).unwrap();
            let total: f64 = basis.probabilities(&psi).unwrap().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_is_orthonormal(a in state(2), b in state(2)) {
        prop_assume!(a.fidelity(&b).unwrap() < 0.99);
        // orthogonalize b against a to build a valid seed pair
        let c = a.inner(&b).unwrap();
        let perp: Vec<Complex64> = b.amplitudes().iter().zip(a.amplitudes()).map(|(x, y)| x - c * y).collect();
        let b = StateVector::from_unnormalized(2, perp).unwrap();
        let basis = gram_schmidt_complete(&[a.clone(), b], 4).unwrap();
        prop_assert_eq!(basis.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let ip = basis[i].inner(&basis[j]).unwrap().norm();
                let expected = (i == j) as u8 as f64;
                prop_assert!((ip - expected).abs() < 1e-10);
            }
        }
        prop_assert!((basis[0].fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn codec_is_a_bijection(seed in any::<u64>(), blocks in 1usize..40) {
        let codec = BlockCodec::random(&mut RandomSource::new(seed, 0), blocks);
        for i in 1..=blocks {
            let mut images: Vec<u8> = BitPair::ALL.iter().map(|p| codec.forward(i, *p).unwrap().value()).collect();
            for p in BitPair::ALL {
                prop_assert_eq!(codec.inverse(i, codec.forward(i, p).unwrap()).unwrap(), p);
            }
            images.sort();
            prop_assert_eq!(images, vec![0, 1, 2, 3]);
        }
        prop_assert!(codec.forward(blocks + 1, BitPair::ALL[0]).is_err());
        let again = BlockCodec::from_json(&codec.to_json()).unwrap();
        prop_assert_eq!(again, codec);
    }

    #[test]
    fn schedules_stay_in_budget(n in 2u32..20, frac in 0.0001f64..0.9999, m in 1usize..2000) {
        let theta1 = frac * PhaseSchedule::theta1_bound(n);
        let s = PhaseSchedule::new(theta1, n).unwrap();
        let total = s.cumulative_phase(m);
        prop_assert!(total < FRAC_PI_2);
        prop_assert!(total <= s.budget() * (1.0 + 1e-15));
        prop_assert!(PhaseSchedule::new(PhaseSchedule::theta1_bound(n), n).is_err());
    }

    #[test]
    fn snapshots_round_trip(s in strings(5), temporal in any::<bool>()) {
        let sched = PhaseSchedule::new(PI / 5.0, 2).unwrap();
        let mode = if temporal { Mode::Temporal } else { Mode::Spatial };
        let c = reconstruct(&sched, &s, mode).unwrap();
        let back = ChainState::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back.strings(), c.strings());
        prop_assert_eq!(back.branch0_label(), c.branch0_label());
        prop_assert!((back.realize().unwrap().fidelity(&c.realize().unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }
}

/// Frequencies of a single-qubit measurement stay within 4σ of Born.
#[test]
fn measurement_statistics_within_four_sigma() {
    let trials = 20_000u64;
    for (qubit, theta) in [(0usize, 0.3f64), (1, 1.1), (2, 2.0)] {
        let psi = StateVector::basis(&[0, 0, 0]).unwrap().apply(&UnitaryMatrix::euler(theta, 0.2, 0.7), &[qubit]).unwrap();
        let p1 = psi.qubit_probability(qubit, 1);
        let set = ProjectorSet::single_qubit(3, qubit).unwrap();
        let ones = (0..trials)
            .filter(|&t| projective_measure(&psi, &set, &mut RandomSource::new(77, t)).unwrap().0 == 1)
            .count() as f64;
        let sigma = (p1 * (1.0 - p1) / trials as f64).sqrt();
        assert!((ones / trials as f64 - p1).abs() <= 4.0 * sigma, "qubit {qubit}: {} vs {p1}", ones / trials as f64);
    }
}

#[test]
fn collapse_is_idempotent() {
    let psi = StateVector::basis(&[0, 0]).unwrap().apply(&UnitaryMatrix::hadamard(), &[1]).unwrap();
    let set = ProjectorSet::single_qubit(2, 1).unwrap();
    let mut rng = RandomSource::new(4, 0);
    let (first, post) = projective_measure(&psi, &set, &mut rng).unwrap();
    for _ in 0..20 {
        let (again, post2) = projective_measure(&post, &set, &mut rng).unwrap();
        assert_eq!(again, first);
        assert!((post2.fidelity(&post).unwrap() - 1.0).abs() < 1e-12);
    }
}

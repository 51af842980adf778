use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use vqe_maxcut::ansatz::{Circuit, CircuitSpec, Family};
use vqe_maxcut::graphs::{brute_force_max_cut, cost, cut_value, Graph, Partition};
use vqe_maxcut::simulator::{Angle, GateOp, StateVector};
use vqe_maxcut::vqe::energy;

fn graph_on(n: usize) -> impl Strategy<Value = Graph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |keep| {
        let edges = pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e);
        Graph::new(n, edges).unwrap()
    })
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(graph_on)
}

fn graph_and_partition(max_n: usize) -> impl Strategy<Value = (Graph, Partition)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        (
            Just(g),
            proptest::collection::vec(any::<bool>(), n).prop_map(Partition::new),
        )
    })
}

fn gate_strategy(n: usize) -> impl Strategy<Value = GateOp> {
    let angle = -10.0..10.0f64;
    prop_oneof![
        (0..n).prop_map(|target| GateOp::H { target }),
        (0..n, angle.clone()).prop_map(|(target, a)| GateOp::Ry {
            target,
            angle: Angle::Literal(a)
        }),
        (0..n, angle).prop_map(|(target, a)| GateOp::Rx {
            target,
            angle: Angle::Literal(a)
        }),
        (0..n, 1..n).prop_map(move |(control, shift)| GateOp::Cnot {
            control,
            target: (control + shift) % n
        }),
    ]
}

fn inverse(g: &GateOp) -> GateOp {
    match *g {
        GateOp::Ry {
            target,
            angle: Angle::Literal(a),
        } => GateOp::Ry {
            target,
            angle: Angle::Literal(-a),
        },
        GateOp::Rx {
            target,
            angle: Angle::Literal(a),
        } => GateOp::Rx {
            target,
            angle: Angle::Literal(-a),
        },
        other => other,
    }
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn random_state(n: usize, gates: &[GateOp]) -> StateVector {
    let mut s = StateVector::zero_state(n).unwrap();
    s.apply_all(gates, &[]).unwrap();
    s
}

proptest! {
    #[test]
    fn cut_is_invariant_under_complement((g, x) in graph_and_partition(10)) {
        prop_assert_eq!(cut_value(&g, &x).unwrap(), cut_value(&g, &x.complement()).unwrap());
    }

    #[test]
    fn cost_is_negated_cut((g, x) in graph_and_partition(10)) {
        prop_assert_eq!(cost(&g, &x).unwrap(), -(cut_value(&g, &x).unwrap() as i64));
    }

    #[test]
    fn oracle_bounds_every_partition((g, x) in graph_and_partition(9)) {
        let (opt, witness) = brute_force_max_cut(&g).unwrap();
        prop_assert!(cut_value(&g, &x).unwrap() <= opt);
        prop_assert_eq!(cut_value(&g, &witness).unwrap(), opt);
        prop_assert!(!witness.bit(0));
        prop_assert!(opt <= g.edge_count());
    }

    #[test]
    fn norm_survives_100_gates(gates in proptest::collection::vec(gate_strategy(5), 100)) {
        let s = random_state(5, &gates);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_are_undone_by_their_inverses(
        prep in proptest::collection::vec(gate_strategy(4), 20),
        gate in gate_strategy(4),
    ) {
        let start = random_state(4, &prep);
        let mut s = start.clone();
        s.apply(&gate, &[]).unwrap();
        s.apply(&inverse(&gate), &[]).unwrap();
        prop_assert!(max_diff(&s, &start) < 1e-12);
    }

    #[test]
    fn expectation_matches_explicit_cut_sum(
        g in graph_on(6),
        prep in proptest::collection::vec(gate_strategy(6), 30),
    ) {
        let s = random_state(6, &prep);
        let got = s.ising_expectation(&g).unwrap();
        let want = explicit(&g, &s);
        prop_assert!((got - want).abs() < 1e-10, "{} vs {}", got, want);
    }

    #[test]
    fn energy_is_bounded_by_edge_count(
        g in graph_strategy(6),
        circuit in 0usize..8,
        params in proptest::collection::vec(0.0..TAU, 24),
    ) {
        let spec = CircuitSpec::new(Circuit::all()[circuit], 2, g.n()).unwrap();
        let e = energy(&spec, &g, &params[..spec.parameter_count()]).unwrap();
        let m = g.edge_count() as f64;
        prop_assert!(e >= -m - 1e-9 && e <= m + 1e-9);
        let (opt, _) = brute_force_max_cut(&g).unwrap();
        prop_assert!(e >= m - 2.0 * opt as f64 - 1e-9);
    }

    #[test]
    fn energy_is_two_pi_periodic(
        g in graph_strategy(5),
        circuit in 0usize..8,
        params in proptest::collection::vec(-PI..PI, 20),
        slot in 0usize..20,
    ) {
        let spec = CircuitSpec::new(Circuit::all()[circuit], 2, g.n()).unwrap();
        let k = spec.parameter_count();
        let base = &params[..k];
        let mut shifted = base.to_vec();
        shifted[slot % k] += TAU;
        let a = energy(&spec, &g, base).unwrap();
        let b = energy(&spec, &g, &shifted).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn unentangled_families_prepare_product_states(
        family in prop_oneof![Just(Family::Ry), Just(Family::RyRx)],
        hadamard in any::<bool>(),
        params in proptest::collection::vec(0.0..TAU, 24),
    ) {
        let spec = CircuitSpec::new(Circuit { family, hadamard }, 3, 4).unwrap();
        let s = spec.prepare_state(&params[..spec.parameter_count()]).unwrap();
        // A product state factorises across every cut of the register:
        // a[i]·a[j] = a[i with j's high part]·a[j with i's high part].
        let a = s.amplitudes();
        for split in 1..4 {
            let low = (1usize << split) - 1;
            for i in 0..16 {
                for j in 0..16 {
                    let x = (i & low) | (j & !low);
                    let y = (j & low) | (i & !low);
                    prop_assert!((a[i] * a[j] - a[x] * a[y]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ry_zero_or_pi_gives_basis_states(bits in proptest::collection::vec(any::<bool>(), 1..8)) {
        let n = bits.len();
        let spec = CircuitSpec::new("ry".parse().unwrap(), 1, n).unwrap();
        let params: Vec<f64> = bits.iter().map(|&b| if b { PI } else { 0.0 }).collect();
        let s = spec.prepare_state(&params).unwrap();
        let x = Partition::new(bits);
        prop_assert_eq!(s.argmax_bitstring(), x.clone());
        prop_assert!((s.amplitudes()[x.to_index()].norm_sqr() - 1.0).abs() < 1e-12);
    }
}

fn explicit(g: &Graph, s: &StateVector) -> f64 {
    s.amplitudes()
        .iter()
        .enumerate()
        .map(|(x, a)| {
            let cut = cut_value(g, &Partition::from_index(x, g.n())).unwrap();
            a.norm_sqr() * (g.edge_count() as f64 - 2.0 * cut as f64)
        })
        .sum()
}

#[test]
fn cnot_is_its_own_inverse_on_every_ordered_pair() {
    let prep: Vec<GateOp> = (0..4)
        .map(|q| GateOp::Ry {
            target: q,
            angle: Angle::Literal(0.3 + q as f64),
        })
        .chain((0..4).map(|q| GateOp::Rx {
            target: q,
            angle: Angle::Literal(1.1 * q as f64),
        }))
        .collect();
    let start = random_state(4, &prep);
    for control in 0..4 {
        for target in (0..4).filter(|&t| t != control) {
            let mut s = start.clone();
            let g = GateOp::Cnot { control, target };
            s.apply(&g, &[]).unwrap();
            assert!(
                max_diff(&s, &start) > 1e-6,
                "CNOT {control}->{target} acted trivially"
            );
            s.apply(&g, &[]).unwrap();
            assert!(max_diff(&s, &start) < 1e-15);
        }
    }
}

#[test]
fn explicit_amplitudes_round_trip() {
    let amps = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
    let s = StateVector::from_amplitudes(amps).unwrap();
    let g = Graph::new(1, []).unwrap();
    assert_eq!(s.ising_expectation(&g).unwrap(), 0.0);
}

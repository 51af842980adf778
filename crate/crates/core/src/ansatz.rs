//! The eight layered circuit families: RY, RYCNOT, RYRX, RYRXCNOT, each with
//! or without a leading Hadamard ladder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{Angle, GateOp, StateVector, MAX_QUBITS};

/// Repeated layer body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ry,
    RyCnot,
    RyRx,
    RyRxCnot,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Ry, Family::RyCnot, Family::RyRx, Family::RyRxCnot];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ry => "ry",
            Family::RyCnot => "rycnot",
            Family::RyRx => "ryrx",
            Family::RyRxCnot => "ryrxcnot",
        }
    }

    pub fn has_rx(self) -> bool {
        matches!(self, Family::RyRx | Family::RyRxCnot)
    }

    pub fn entangles(self) -> bool {
        matches!(self, Family::RyCnot | Family::RyRxCnot)
    }

    /// Rotation gates per qubit per layer.
    fn banks(self) -> usize {
        if self.has_rx() {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::argument(format!("unknown circuit family {s:?}")))
    }
}

/// Family plus Hadamard flag; the CLI names are `ry`, `hry`, `rycnot`, `hrycnot`, ….
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Circuit {
    pub family: Family,
    pub hadamard: bool,
}

impl Circuit {
    /// Non-Hadamard circuits first, then their H variants.
    pub fn all() -> Vec<Circuit> {
        [false, true]
            .into_iter()
            .flat_map(|hadamard| {
                Family::ALL
                    .into_iter()
                    .map(move |family| Circuit { family, hadamard })
            })
            .collect()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hadamard {
            f.write_str("h")?;
        }
        f.write_str(self.family.name())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || {
            Error::argument(format!(
                "unknown circuit {s:?} (expected one of ry, rycnot, ryrx, ryrxcnot, hry, hrycnot, hryrx, hryrxcnot)"
            ))
        };
        let (hadamard, rest) = match s.strip_prefix('h') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let family = rest.parse().map_err(|_| unknown())?;
        Ok(Circuit { family, hadamard })
    }
}

/// A concrete ansatz: circuit, depth and register size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircuitSpec {
    pub family: Family,
    pub hadamard: bool,
    pub layers: usize,
    pub n: usize,
}

impl CircuitSpec {
    pub fn new(circuit: Circuit, layers: usize, n: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::argument("layer count must be at least 1"));
        }
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Size(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        if circuit.family.entangles() && n < 2 {
            return Err(Error::argument(format!(
                "{} needs at least 2 qubits",
                circuit.family
            )));
        }
        Ok(Self {
            family: circuit.family,
            hadamard: circuit.hadamard,
            layers,
            n,
        })
    }

    pub fn circuit(&self) -> Circuit {
        Circuit {
            family: self.family,
            hadamard: self.hadamard,
        }
    }

    /// `n·l` for the RY families, `2·n·l` with the RX bank; each layer has its
    /// own angles.
    pub fn parameter_count(&self) -> usize {
        self.family.banks() * self.n * self.layers
    }

    /// Gate sequence: optional H on every qubit, then `layers` copies of the
    /// family body (RY bank, RX bank if any, ring of CNOTs
    /// `0→1, 1→2, …, n-2→n-1, n-1→0` if entangling). Slots run layer-major,
    /// RY bank before RX bank, qubits ascending.
    pub fn build(&self) -> Vec<GateOp> {
        let n = self.n;
        let mut gates = Vec::new();
        if self.hadamard {
            gates.extend((0..n).map(|target| GateOp::H { target }));
        }
        let mut slot = 0;
        let mut next_slot = || {
            slot += 1;
            Angle::Slot(slot - 1)
        };
        for _ in 0..self.layers {
            for target in 0..n {
                gates.push(GateOp::Ry {
                    target,
                    angle: next_slot(),
                });
            }
            if self.family.has_rx() {
                for target in 0..n {
                    gates.push(GateOp::Rx {
                        target,
                        angle: next_slot(),
                    });
                }
            }
            if self.family.entangles() {
                for control in 0..n {
                    gates.push(GateOp::Cnot {
                        control,
                        target: (control + 1) % n,
                    });
                }
            }
        }
        gates
    }

    /// `U(θ)|0…0⟩`.
    pub fn prepare_state(&self, params: &[f64]) -> Result<StateVector> {
        self.check_params(params)?;
        let mut s = StateVector::zero_state(self.n)?;
        s.apply_all(&self.build(), params)?;
        Ok(s)
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        let want = self.parameter_count();
        if params.len() != want {
            return Err(Error::Binding(format!(
                "{} layers={} n={} takes {want} parameters, got {}",
                self.circuit(),
                self.layers,
                self.n,
                params.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;

    fn spec(name: &str, layers: usize, n: usize) -> CircuitSpec {
        CircuitSpec::new(name.parse().unwrap(), layers, n).unwrap()
    }

    #[test]
    fn names_round_trip() {
        let names: Vec<String> = Circuit::all().iter().map(|c| c.to_string()).collect();
        assert_eq!(
            names,
            [
                "ry",
                "rycnot",
                "ryrx",
                "ryrxcnot",
                "hry",
                "hrycnot",
                "hryrx",
                "hryrxcnot"
            ]
        );
        for name in &names {
            assert_eq!(&name.parse::<Circuit>().unwrap().to_string(), name);
        }
        assert!("hh".parse::<Circuit>().is_err());
        assert!("rz".parse::<Circuit>().is_err());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(spec("ryrx", 1, 4).parameter_count(), 8);
        assert_eq!(spec("ry", 5, 10).parameter_count(), 50);
        assert_eq!(spec("ryrxcnot", 20, 10).parameter_count(), 400);
        assert_eq!(spec("hrycnot", 3, 10).parameter_count(), 30);
    }

    #[test]
    fn invalid_specs() {
        let ry: Circuit = "ry".parse().unwrap();
        assert!(CircuitSpec::new(ry, 0, 4).is_err());
        assert!(CircuitSpec::new("rycnot".parse().unwrap(), 1, 1).is_err());
        assert!(CircuitSpec::new(ry, 1, 1).is_ok());
        assert!(CircuitSpec::new(ry, 1, 25).is_err());
    }

    #[test]
    fn build_ry_two_qubits() {
        let gates = spec("ry", 1, 2).build();
        assert_eq!(
            gates,
            vec![
                GateOp::Ry {
                    target: 0,
                    angle: Angle::Slot(0)
                },
                GateOp::Ry {
                    target: 1,
                    angle: Angle::Slot(1)
                },
            ]
        );
    }

    #[test]
    fn build_hrycnot_four_qubits() {
        let gates = spec("hrycnot", 1, 4).build();
        assert_eq!(gates.len(), 12);
        assert!(gates[..4].iter().all(|g| matches!(g, GateOp::H { .. })));
        let cnots: Vec<_> = gates[8..]
            .iter()
            .map(|g| match *g {
                GateOp::Cnot { control, target } => (control, target),
                other => panic!("expected CNOT, got {other:?}"),
            })
            .collect();
        assert_eq!(cnots, [(0, 1), (1, 2), (2, 3), (3, 0)]);
    }

    #[test]
    fn build_ryrx_slot_order() {
        let gates = spec("ryrx", 2, 3).build();
        assert_eq!(gates.len(), 12);
        let slots: Vec<_> = gates.iter().map(|g| g.slot().unwrap()).collect();
        assert_eq!(slots, (0..12).collect::<Vec<_>>());
        // second layer: RY bank on slots 6..9 before RX bank on 9..12
        assert!(matches!(
            gates[6],
            GateOp::Ry {
                target: 0,
                angle: Angle::Slot(6)
            }
        ));
        assert!(matches!(
            gates[9],
            GateOp::Rx {
                target: 0,
                angle: Angle::Slot(9)
            }
        ));
    }

    #[test]
    fn hadamard_ladder_once_regardless_of_depth() {
        let gates = spec("hry", 3, 4).build();
        assert_eq!(
            gates
                .iter()
                .filter(|g| matches!(g, GateOp::H { .. }))
                .count(),
            4
        );
        assert_eq!(gates.len(), 4 + 12);
    }

    #[test]
    fn two_qubit_ring_is_kept() {
        let gates = spec("rycnot", 1, 2).build();
        assert_eq!(
            &gates[2..],
            &[
                GateOp::Cnot {
                    control: 0,
                    target: 1
                },
                GateOp::Cnot {
                    control: 1,
                    target: 0
                }
            ]
        );
    }

    #[test]
    fn zero_angle_states() {
        let plus = 0.25; // |+⟩^⊗4 amplitude
        for name in ["hry", "hrycnot"] {
            let s = spec(name, 1, 4).prepare_state(&[0.0; 4]).unwrap();
            for a in s.amplitudes() {
                assert!((a.re - plus).abs() < 1e-12 && a.im.abs() < 1e-12, "{name}");
            }
        }
        let s = spec("ry", 1, 4).prepare_state(&[0.0; 4]).unwrap();
        assert_eq!(s, StateVector::zero_state(4).unwrap());
        let s = spec("hry", 1, 1).prepare_state(&[0.0]).unwrap();
        assert!((s.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn wrong_parameter_length_is_a_binding_error() {
        let s = spec("ry", 1, 3);
        assert!(matches!(s.prepare_state(&[0.0; 2]), Err(Error::Binding(_))));
        assert!(matches!(s.prepare_state(&[0.0; 4]), Err(Error::Binding(_))));
    }
}

//! Dense state-vector simulation for the gate set the ansätze use
//! (H, RY, RX, CNOT), exact Ising expectation values and measurement.
//!
//! Amplitude index bit `k` is qubit `k` (little-endian).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graphs::{Graph, Partition};

/// Memory guard: 2^24 amplitudes is 256 MiB.
pub const MAX_QUBITS: usize = 24;

/// Rotation angle: either fixed, or read from the parameter vector at bind time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Literal(f64),
    Slot(usize),
}

impl Angle {
    fn resolve(self, params: &[f64]) -> Result<f64> {
        match self {
            Angle::Literal(a) => Ok(a),
            Angle::Slot(i) => params.get(i).copied().ok_or_else(|| {
                Error::Binding(format!(
                    "parameter slot {i} unbound ({} parameters supplied)",
                    params.len()
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    H { target: usize },
    Ry { target: usize, angle: Angle },
    Rx { target: usize, angle: Angle },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn slot(&self) -> Option<usize> {
        match *self {
            GateOp::Ry {
                angle: Angle::Slot(i),
                ..
            }
            | GateOp::Rx {
                angle: Angle::Slot(i),
                ..
            } => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n` qubits, `1 <= n <= MAX_QUBITS`.
    pub fn zero_state(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Size(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two. No
    /// normalisation is performed.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len.trailing_zeros() as usize > MAX_QUBITS {
            return Err(Error::Size(format!(
                "amplitude count {len} is not 2^n for n in 1..={MAX_QUBITS}"
            )));
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm_sqr())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::argument(format!(
                "qubit {q} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    /// Applies one gate in place, binding slot angles from `params`.
    pub fn apply(&mut self, gate: &GateOp, params: &[f64]) -> Result<()> {
        match *gate {
            GateOp::H { target } => {
                self.check_qubit(target)?;
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(target, [[h, h], [h, -h]]);
            }
            GateOp::Ry { target, angle } => {
                self.check_qubit(target)?;
                let (s, c) = (angle.resolve(params)? / 2.0).sin_cos();
                self.apply_ry(target, c, s);
            }
            GateOp::Rx { target, angle } => {
                self.check_qubit(target)?;
                let (s, c) = (angle.resolve(params)? / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let mis = Complex64::new(0.0, -s);
                self.apply_1q(target, [[c, mis], [mis, c]]);
            }
            GateOp::Cnot { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(Error::argument(format!(
                        "CNOT control and target are both qubit {control}"
                    )));
                }
                self.apply_cnot(control, target);
            }
        }
        Ok(())
    }

    /// Applies a gate sequence starting from the current state.
    pub fn apply_all(&mut self, gates: &[GateOp], params: &[f64]) -> Result<()> {
        gates.iter().try_for_each(|g| self.apply(g, params))
    }

    fn apply_1q(&mut self, target: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1 << target;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    // RY has a real matrix, so skip the complex-by-complex products.
    fn apply_ry(&mut self, target: usize, c: f64, s: f64) {
        let stride = 1 << target;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = x * c - y * s;
                *a1 = x * s + y * c;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cbit, tbit) = (1usize << control, 1usize << target);
        let (lo, hi) = (control.min(target), control.max(target));
        // Enumerate indices with both bits clear by inserting two zero bits.
        for k in 0..self.amps.len() >> 2 {
            let mut i = k;
            i = (i & ((1 << lo) - 1)) | ((i >> lo) << (lo + 1));
            i = (i & ((1 << hi) - 1)) | ((i >> hi) << (hi + 1));
            let i = i | cbit;
            self.amps.swap(i, i | tbit);
        }
    }

    /// `⟨ψ|Σ_{(u,v)∈E} Z_u Z_v|ψ⟩`.
    pub fn ising_expectation(&self, g: &Graph) -> Result<f64> {
        let diag = IsingDiagonal::new(g)?;
        diag.expectation(self)
    }

    /// Basis index with the largest probability, lowest index on ties.
    pub fn argmax_bitstring(&self) -> Partition {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (i, p) in self.probabilities().enumerate() {
            if p > best_p {
                best = i;
                best_p = p;
            }
        }
        Partition::from_index(best, self.n)
    }

    /// Multinomial measurement of all qubits; keys are partition strings
    /// (qubit 0 first).
    pub fn sample_counts(&self, shots: usize, seed: u64) -> Result<BTreeMap<String, usize>> {
        if shots == 0 {
            return Err(Error::argument("shots must be at least 1"));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| Error::argument(format!("state cannot be sampled: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hist = vec![0usize; self.amps.len()];
        for _ in 0..shots {
            hist[dist.sample(&mut rng)] += 1;
        }
        Ok(hist
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (Partition::from_index(i, self.n).to_string(), c))
            .collect())
    }
}

/// Diagonal of the Ising Hamiltonian in the computational basis:
/// entry `x` is `|E| - 2·cut(x)`.
///
/// The expectation is accumulated edge by edge as `P(same side) - P(opposite
/// sides)`, which is exact on basis states and on the uniform superposition.
#[derive(Debug, Clone)]
pub struct IsingDiagonal {
    n: usize,
    masks: Vec<usize>,
    values: Vec<f64>,
}

impl IsingDiagonal {
    pub fn new(g: &Graph) -> Result<Self> {
        let n = g.n();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Size(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        let m = g.edge_count() as i64;
        let masks: Vec<usize> = g
            .edges()
            .iter()
            .map(|&(u, v)| (1 << u) | (1 << v))
            .collect();
        let values = (0..1usize << n)
            .map(|x| {
                let cut = masks
                    .iter()
                    .filter(|&&mk| (x & mk).count_ones() == 1)
                    .count() as i64;
                (m - 2 * cut) as f64
            })
            .collect();
        Ok(Self { n, masks, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expectation(&self, s: &StateVector) -> Result<f64> {
        if s.n != self.n {
            return Err(Error::argument(format!(
                "state has {} qubits, graph has {} nodes",
                s.n, self.n
            )));
        }
        let probs: Vec<f64> = s.probabilities().collect();
        let mut total = 0.0;
        for &mask in &self.masks {
            let (mut same, mut diff) = (0.0, 0.0);
            for (x, &p) in probs.iter().enumerate() {
                if (x & mask).count_ones() == 1 {
                    diff += p;
                } else {
                    same += p;
                }
            }
            total += same - diff;
        }
        Ok(total)
    }
}

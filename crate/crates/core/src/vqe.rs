//! The hybrid loop: energy objective, optimisation, partition read-out and
//! approximation ratio.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitSpec;
use crate::error::{Error, Result};
use crate::graphs::{cut_value, Graph, Instance, Partition};
use crate::optimize::{minimize, OptimizerConfig, Termination};
use crate::simulator::{GateOp, IsingDiagonal, StateVector};

/// How the starting angles are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// All angles zero.
    #[default]
    Zero,
    /// Uniform in `[0, 2π)`, drawn from ChaCha8 seeded with the run seed on
    /// stream `instance_id`.
    Random,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Zero => "zero",
            InitMode::Random => "random",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitMode::Zero),
            "random" => Ok(InitMode::Random),
            other => Err(Error::argument(format!("unknown init mode {other:?}"))),
        }
    }
}

impl InitMode {
    pub fn initial_params(self, count: usize, seed: u64, instance_id: usize) -> Vec<f64> {
        match self {
            InitMode::Zero => vec![0.0; count],
            InitMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(instance_id as u64);
                (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
            }
        }
    }
}

/// Prepared circuit and Hamiltonian diagonal for repeated energy calls.
pub struct EnergyObjective {
    spec: CircuitSpec,
    gates: Vec<GateOp>,
    diag: IsingDiagonal,
}

impl EnergyObjective {
    pub fn new(spec: CircuitSpec, g: &Graph) -> Result<Self> {
        if spec.n != g.n() {
            return Err(Error::argument(format!(
                "circuit has {} qubits, graph has {} nodes",
                spec.n,
                g.n()
            )));
        }
        Ok(Self {
            gates: spec.build(),
            diag: IsingDiagonal::new(g)?,
            spec,
        })
    }

    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        self.spec.check_params(params)?;
        let mut s = StateVector::zero_state(self.spec.n)?;
        s.apply_all(&self.gates, params)?;
        Ok(s)
    }

    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        self.diag.expectation(&self.state(params)?)
    }
}

/// `⟨ψ(θ)|H_C|ψ(θ)⟩` for one circuit and graph.
pub fn energy(spec: &CircuitSpec, g: &Graph, params: &[f64]) -> Result<f64> {
    EnergyObjective::new(*spec, g)?.energy(params)
}

/// `cut / optimal`.
pub fn approximation_ratio(cut: usize, optimal: usize) -> Result<f64> {
    if optimal == 0 {
        return Err(Error::Domain("optimal cut must be positive".into()));
    }
    if cut > optimal {
        return Err(Error::OracleViolation { cut, optimal });
    }
    Ok(cut as f64 / optimal as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance_id: usize,
    pub spec: CircuitSpec,
    pub seed: u64,
    pub init_mode: InitMode,
    /// Objective value of every evaluation, in order; entry `k` is evaluation `k+1`.
    pub trace: Vec<f64>,
    pub final_energy: f64,
    pub partition: Partition,
    pub cut: usize,
    pub optimal_cut: usize,
    pub approx_ratio: f64,
    pub eval_count: usize,
    pub termination: Termination,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn run_id(&self) -> String {
        run_id(
            self.instance_id,
            &self.spec.circuit().to_string(),
            self.spec.layers,
            self.seed,
        )
    }
}

/// Stable run identifier, also used for trace file names.
pub fn run_id(instance_id: usize, circuit: &str, layers: usize, seed: u64) -> String {
    format!("i{instance_id:04}_{circuit}_l{layers:02}_s{seed}")
}

/// One VQE execution. The final energy is the best objective value seen; the
/// partition is the most probable basis state of the best parameters.
pub fn run_vqe(
    inst: &Instance,
    spec: &CircuitSpec,
    cfg: &OptimizerConfig,
    seed: u64,
    init: InitMode,
) -> Result<RunRecord> {
    let start = Instant::now();
    let objective = EnergyObjective::new(*spec, &inst.graph)?;
    let x0 = init.initial_params(spec.parameter_count(), seed, inst.id);
    let result = minimize(
        |theta| {
            objective
                .energy(theta)
                .expect("parameter vector length fixed by the circuit")
        },
        &x0,
        cfg,
    )?;
    let partition = objective.state(&result.best_x)?.argmax_bitstring();
    let cut = cut_value(&inst.graph, &partition)?;
    let approx_ratio = approximation_ratio(cut, inst.optimal_cut)?;
    let eval_count = result.trace.len();
    Ok(RunRecord {
        instance_id: inst.id,
        spec: *spec,
        seed,
        init_mode: init,
        trace: result.trace.into_values(),
        final_energy: result.best_value,
        partition,
        cut,
        optimal_cut: inst.optimal_cut,
        approx_ratio,
        eval_count,
        termination: result.termination,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::ansatz::Circuit;

    fn spec(name: &str, layers: usize, n: usize) -> CircuitSpec {
        CircuitSpec::new(name.parse::<Circuit>().unwrap(), layers, n).unwrap()
    }

    fn square() -> Graph {
        Graph::cycle(4).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = crate::graphs::generate_erdos_renyi(6, 0.5, 9, 100).unwrap();
        let zeros = vec![0.0; 6];
        assert!(energy(&spec("hry", 1, 6), &g, &zeros).unwrap().abs() < 1e-12);
        assert_eq!(
            energy(&spec("ry", 1, 6), &g, &zeros).unwrap(),
            g.edge_count() as f64
        );
        let e = energy(&spec("ry", 1, 4), &square(), &[0.0, PI, 0.0, PI]).unwrap();
        assert!((e + 4.0).abs() < 1e-12);
    }

    #[test]
    fn energy_dimension_errors() {
        assert!(energy(&spec("ry", 1, 3), &square(), &[0.0; 3]).is_err());
        assert!(matches!(
            energy(&spec("ry", 1, 4), &square(), &[0.0; 3]),
            Err(Error::Binding(_))
        ));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(approximation_ratio(4, 4).unwrap(), 1.0);
        assert_eq!(approximation_ratio(2, 4).unwrap(), 0.5);
        assert!(matches!(
            approximation_ratio(5, 4),
            Err(Error::OracleViolation { .. })
        ));
        assert!(matches!(approximation_ratio(0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn solves_small_instances() {
        let cfg = OptimizerConfig::default();
        let sq = Instance::solve(0, square()).unwrap();
        let r = run_vqe(&sq, &spec("ry", 1, 4), &cfg, 30, InitMode::Zero).unwrap();
        assert_eq!(r.approx_ratio, 1.0);

        let tri = Instance::solve(1, Graph::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap()).unwrap();
        let r = run_vqe(&tri, &spec("ry", 1, 3), &cfg, 30, InitMode::Zero).unwrap();
        assert_eq!((r.cut, r.approx_ratio), (2, 1.0));
        assert_eq!(r.eval_count, r.trace.len());
        assert_eq!(r.trace[0], 3.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = Instance::solve(
            3,
            crate::graphs::generate_erdos_renyi(6, 0.4, 3, 100).unwrap(),
        )
        .unwrap();
        let cfg = OptimizerConfig::default();
        for init in [InitMode::Zero, InitMode::Random] {
            let s = spec("hrycnot", 2, 6);
            let mut a = run_vqe(&inst, &s, &cfg, 31, init).unwrap();
            let mut b = run_vqe(&inst, &s, &cfg, 31, init).unwrap();
            a.wall_time = 0.0;
            b.wall_time = 0.0;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_init_depends_on_seed_and_instance() {
        let a = InitMode::Random.initial_params(8, 30, 0);
        assert!(a.iter().all(|v| (0.0..TAU).contains(v)));
        assert_ne!(a, InitMode::Random.initial_params(8, 31, 0));
        assert_ne!(a, InitMode::Random.initial_params(8, 30, 1));
        assert_eq!(a[..4], InitMode::Random.initial_params(4, 30, 0)[..]);
        assert_eq!(InitMode::Zero.initial_params(3, 30, 0), vec![0.0; 3]);
    }

    #[test]
    fn run_id_format() {
        assert_eq!(run_id(7, "hryrx", 3, 30), "i0007_hryrx_l03_s30");
    }
}

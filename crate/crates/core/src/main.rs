use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use vqe_maxcut::ansatz::{Circuit, CircuitSpec};
use vqe_maxcut::experiments::{self, RunRow, SweepConfig, RUNS_FILE, TRACE_DIR};
use vqe_maxcut::graphs::{self, Graph, Instance};
use vqe_maxcut::io::write_atomic;
use vqe_maxcut::optimize::{Method, OptimizerConfig};
use vqe_maxcut::report::{self, Figure, ReportSpec};
use vqe_maxcut::vqe::{run_vqe, InitMode};

#[derive(Parser)]
#[command(
    name = "vqe-maxcut",
    version,
    about = "VQE on unweighted MaxCut: graphs, runs, sweeps and figures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate connected Erdős–Rényi instances with their optimal cuts.
    GenGraphs {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed_base: u64,
        #[arg(long, default_value_t = 10_000)]
        max_attempts: usize,
        /// Output directory for graph_<id>.txt files and instances.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one VQE optimisation on a graph file.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        circuit: Circuit,
        #[arg(long)]
        layers: usize,
        #[arg(long, default_value = "cobyla")]
        optimizer: Method,
        #[arg(long, default_value_t = 5000)]
        max_evals: usize,
        #[arg(long, default_value_t = 0.5)]
        rho_beg: f64,
        #[arg(long, default_value_t = 1e-4)]
        rho_end: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "zero")]
        init: InitMode,
        /// Instance id recorded in the output; also selects the random-init stream.
        #[arg(long, default_value_t = 0)]
        instance_id: usize,
        /// Output directory for runs.csv and traces/.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; overrides the config (0 = all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a figure from a finished sweep directory.
    Report {
        #[arg(value_enum)]
        figure: FigureArg,
        #[arg(long)]
        runs: PathBuf,
        /// SVG output path.
        #[arg(long)]
        out: PathBuf,
        /// Companion CSV path (default: the SVG path with a .csv extension).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Keep only these circuits (repeatable or comma-separated).
        #[arg(long, value_delimiter = ',')]
        circuit: Vec<String>,
        /// Keep only these depths (repeatable or comma-separated).
        #[arg(long, value_delimiter = ',')]
        layers: Vec<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Convergence,
    Boxplot,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<vqe_maxcut::Error> for Failure {
    fn from(e: vqe_maxcut::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenGraphs {
            count,
            n,
            p,
            seed_base,
            max_attempts,
            out,
        } => {
            let generated = graphs::generate_instances(count, n, p, seed_base, max_attempts)?;
            graphs::write_instances(&out, &generated)?;
            for (_, row) in &generated {
                println!(
                    "instance {:>4}  seed {:>6}  edges {:>3}  optimal_cut {:>3}",
                    row.id, row.seed, row.edge_count, row.optimal_cut
                );
            }
            println!("wrote {} instances to {}", generated.len(), out.display());
        }
        Command::Solve {
            graph,
            circuit,
            layers,
            optimizer,
            max_evals,
            rho_beg,
            rho_end,
            seed,
            init,
            instance_id,
            out,
        } => {
            let text = fs::read_to_string(&graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let g = Graph::parse(&text).with_context(|| format!("parsing {}", graph.display()))?;
            let inst = Instance::solve(instance_id, g)?;
            let spec = CircuitSpec::new(circuit, layers, inst.graph.n())?;
            let cfg = OptimizerConfig {
                method: optimizer,
                max_evals,
                initial_step: rho_beg,
                final_tolerance: rho_end,
                seed,
            };
            cfg.validate()?;
            let rec = run_vqe(&inst, &spec, &cfg, seed, init)?;

            let comments = vec![
                format!("version: {}", experiments::VERSION),
                cfg.describe(),
                format!("graph: {}", graph.display()),
            ];
            fs::create_dir_all(out.join(TRACE_DIR))
                .with_context(|| format!("creating {}", out.display()))?;
            let run_id = rec.run_id();
            write_atomic(
                &experiments::trace_path(&out, &run_id),
                &experiments::encode_trace(&rec.trace, &comments),
            )?;
            write_atomic(
                &out.join(RUNS_FILE),
                &experiments::encode_runs(&[RunRow::from(&rec)], &comments),
            )?;
            println!("run            {run_id}");
            println!("parameters     {}", spec.parameter_count());
            println!("evaluations    {} ({:?})", rec.eval_count, rec.termination);
            println!("final energy   {}", rec.final_energy);
            println!("partition      {}", rec.partition);
            println!("cut / optimal  {} / {}", rec.cut, rec.optimal_cut);
            println!("approx ratio   {}", rec.approx_ratio);
        }
        Command::Sweep { config, jobs, out } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let records = experiments::run_sweep(&cfg)?;
            println!(
                "{} runs written to {}",
                records.len(),
                cfg.output_dir.display()
            );
            println!(
                "{:<10} {:>6} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                "circuit", "layers", "runs", "mean", "std", "min", "median", "max", "evals"
            );
            for s in experiments::summarize_records(&records)? {
                println!(
                    "{:<10} {:>6} {:>5} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.0}",
                    s.circuit.to_string(),
                    s.layers,
                    s.count,
                    s.mean,
                    s.std,
                    s.min,
                    s.median,
                    s.max,
                    s.mean_eval_count
                );
            }
        }
        Command::Report {
            figure,
            runs,
            out,
            csv,
            circuit,
            layers,
        } => {
            let circuits = report::parse_circuit_filter(&circuit)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let figure = match figure {
                FigureArg::Convergence => Figure::Convergence,
                FigureArg::Boxplot => Figure::Boxplot,
            };
            let mut spec = ReportSpec::new(runs, figure, out);
            spec.circuits = circuits;
            spec.layers = layers;
            if let Some(csv) = csv {
                spec.out_csv = csv;
            }
            report::render(&spec)?;
            println!(
                "wrote {} and {}",
                spec.out_svg.display(),
                spec.out_csv.display()
            );
        }
    }
    Ok(())
}

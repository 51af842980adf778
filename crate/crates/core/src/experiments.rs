//! Cartesian sweeps over instances × circuits × depths × seeds, their on-disk
//! layout and grouped statistics.
//!
//! A sweep directory contains:
//!
//! ```text
//! config.json            the SweepConfig as run
//! manifest.json          code version, config and run count
//! instances/             graph_<id>.txt + instances.csv
//! traces/trace_<id>.csv  eval_index,energy per run
//! runs.csv               one row per run, sorted
//! ```
//!
//! While a sweep is in flight an `INCOMPLETE` marker and `runs.partial.csv`
//! (rows in completion order) exist; both are removed on success.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Circuit, CircuitSpec, Family};
use crate::error::{Error, Result};
use crate::graphs::{self, Instance, DEFAULT_MAX_ATTEMPTS};
use crate::io::write_atomic;
use crate::optimize::{OptimizerConfig, Termination};
use crate::vqe::{self, run_vqe, InitMode, RunRecord};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const RUNS_FILE: &str = "runs.csv";
pub const PARTIAL_RUNS_FILE: &str = "runs.partial.csv";
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const TRACE_DIR: &str = "traces";
pub const INSTANCE_DIR: &str = "instances";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub count: usize,
    pub n: usize,
    pub p: f64,
    /// Instance `i` is generated with seed `seed_base + i`.
    pub seed_base: u64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
}

fn default_max_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

/// Inclusive seed range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub instances: InstanceConfig,
    pub families: Vec<Family>,
    /// Hadamard-ladder settings crossed with `families`.
    pub hadamard: Vec<bool>,
    pub layers: Vec<usize>,
    pub seeds: SeedRange,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub init_mode: InitMode,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[serde(default)]
    pub jobs: usize,
    /// When false, `wall_time_s` is written as 0 so outputs are byte-reproducible.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
}

fn default_true() -> bool {
    true
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let inst = &self.instances;
        if inst.count == 0 {
            return Err(Error::argument("sweep needs at least one instance"));
        }
        if inst.n < 2 || inst.n > graphs::MAX_BRUTE_FORCE_NODES {
            return Err(Error::argument(format!(
                "instance size must be in 2..={}",
                graphs::MAX_BRUTE_FORCE_NODES
            )));
        }
        for (name, empty) in [
            ("families", self.families.is_empty()),
            ("hadamard", self.hadamard.is_empty()),
            ("layers", self.layers.is_empty()),
        ] {
            if empty {
                return Err(Error::argument(format!("{name} list is empty")));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::argument(format!(
                "seed range {}..={} is empty",
                self.seeds.first, self.seeds.last
            )));
        }
        if has_duplicates(&self.families)
            || has_duplicates(&self.hadamard)
            || has_duplicates(&self.layers)
        {
            return Err(Error::argument(
                "families, hadamard and layers must not repeat entries",
            ));
        }
        for &l in &self.layers {
            for c in self.circuits() {
                CircuitSpec::new(c, l, inst.n)?;
            }
        }
        self.optimizer.validate()
    }

    /// Circuits in sweep order (family, then Hadamard flag).
    pub fn circuits(&self) -> Vec<Circuit> {
        let mut families = self.families.clone();
        families.sort();
        let mut hadamard = self.hadamard.clone();
        hadamard.sort();
        families
            .iter()
            .flat_map(|&family| {
                hadamard.iter().map(move |&h| Circuit {
                    family,
                    hadamard: h,
                })
            })
            .collect()
    }

    pub fn total_runs(&self) -> usize {
        self.instances.count * self.circuits().len() * self.layers.len() * self.seeds.len()
    }

    fn header_lines(&self) -> Vec<String> {
        vec![
            VERSION.to_string(),
            format!("{} init={}", self.optimizer.describe(), self.init_mode),
        ]
    }
}

fn has_duplicates<T: Ord + Clone>(items: &[T]) -> bool {
    let mut v = items.to_vec();
    v.sort();
    v.windows(2).any(|w| w[0] == w[1])
}

/// Flat row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRow {
    pub instance_id: usize,
    pub family: Family,
    pub hadamard: bool,
    pub layers: usize,
    pub seed: u64,
    pub init_mode: InitMode,
    pub eval_count: usize,
    pub final_energy: f64,
    pub cut: usize,
    pub optimal_cut: usize,
    pub approx_ratio: f64,
    pub termination: Termination,
    pub wall_time_s: f64,
}

impl RunRow {
    pub const COLUMNS: [&'static str; 13] = [
        "instance_id",
        "family",
        "hadamard",
        "layers",
        "seed",
        "init_mode",
        "eval_count",
        "final_energy",
        "cut",
        "optimal_cut",
        "approx_ratio",
        "termination",
        "wall_time_s",
    ];

    pub fn circuit(&self) -> Circuit {
        Circuit {
            family: self.family,
            hadamard: self.hadamard,
        }
    }

    pub fn run_id(&self) -> String {
        vqe::run_id(
            self.instance_id,
            &self.circuit().to_string(),
            self.layers,
            self.seed,
        )
    }

    fn sort_key(&self) -> (usize, Family, bool, usize, u64) {
        (
            self.instance_id,
            self.family,
            self.hadamard,
            self.layers,
            self.seed,
        )
    }
}

impl From<&RunRecord> for RunRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            instance_id: r.instance_id,
            family: r.spec.family,
            hadamard: r.spec.hadamard,
            layers: r.spec.layers,
            seed: r.seed,
            init_mode: r.init_mode,
            eval_count: r.eval_count,
            final_energy: r.final_energy,
            cut: r.cut,
            optimal_cut: r.optimal_cut,
            approx_ratio: r.approx_ratio,
            termination: r.termination,
            wall_time_s: r.wall_time,
        }
    }
}

fn write_comments(out: &mut impl Write, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}

/// Serialises rows as `runs.csv`: `#` comment lines, the column header, rows.
pub fn encode_runs(rows: &[RunRow], comments: &[String]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_comments(&mut buf, comments).expect("write to Vec");
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(buf);
    wtr.write_record(RunRow::COLUMNS).expect("write to Vec");
    for row in rows {
        wtr.serialize(row).expect("RunRow serialises to CSV");
    }
    wtr.into_inner().expect("flush to Vec")
}

/// Parses `runs.csv` content. `#` lines are skipped; errors name the 1-based
/// data row.
pub fn decode_runs(input: impl Read) -> Result<Vec<RunRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Record {
        row: 0,
        message: e.to_string(),
    })?;
    if headers.iter().ne(RunRow::COLUMNS) {
        return Err(Error::Record {
            row: 0,
            message: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Record {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_runs(file)
}

pub fn trace_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(TRACE_DIR).join(format!("trace_{run_id}.csv"))
}

pub fn encode_trace(values: &[f64], comments: &[String]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_comments(&mut buf, comments).expect("write to Vec");
    let mut wtr = csv::Writer::from_writer(buf);
    wtr.write_record(["eval_index", "energy"])
        .expect("write to Vec");
    for (i, v) in values.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), v.to_string()])
            .expect("write to Vec");
    }
    wtr.into_inner().expect("flush to Vec")
}

/// Reads a trace file; indices must run 1, 2, 3, ….
pub fn read_trace(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    let mut values = Vec::new();
    for (i, rec) in rdr.deserialize::<(usize, f64)>().enumerate() {
        let (idx, v) = rec.map_err(|e| Error::Record {
            row: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        if idx != i + 1 {
            return Err(Error::Record {
                row: i + 1,
                message: format!(
                    "{}: expected eval_index {}, got {idx}",
                    path.display(),
                    i + 1
                ),
            });
        }
        values.push(v);
    }
    Ok(values)
}

struct Task<'a> {
    instance: &'a Instance,
    spec: CircuitSpec,
    seed: u64,
}

/// Runs every (instance, circuit, layers, seed) combination and persists the
/// results under `cfg.output_dir`. Returned records are sorted by
/// `(instance_id, family, hadamard, layers, seed)` whatever the worker count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir.join(TRACE_DIR)).map_err(|e| Error::io(dir, e))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    write_atomic(&marker, b"sweep in progress or aborted\n")?;

    write_atomic(
        &dir.join("config.json"),
        serde_json::to_string_pretty(cfg)?.as_bytes(),
    )?;
    let manifest = serde_json::json!({
        "version": VERSION,
        "total_runs": cfg.total_runs(),
        "config": cfg,
    });
    write_atomic(
        &dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::argument(format!("cannot start worker pool: {e}")))?;

    let ic = &cfg.instances;
    let generated = pool.install(|| {
        graphs::generate_instances(ic.count, ic.n, ic.p, ic.seed_base, ic.max_attempts)
    })?;
    graphs::write_instances(&dir.join(INSTANCE_DIR), &generated)?;
    let instances: Vec<Instance> = generated.into_iter().map(|(inst, _)| inst).collect();

    let circuits = cfg.circuits();
    let mut layers = cfg.layers.clone();
    layers.sort_unstable();
    let mut tasks = Vec::with_capacity(cfg.total_runs());
    for inst in &instances {
        for &circuit in &circuits {
            for &l in &layers {
                let spec = CircuitSpec::new(circuit, l, ic.n)?;
                for seed in cfg.seeds.iter() {
                    tasks.push(Task {
                        instance: inst,
                        spec,
                        seed,
                    });
                }
            }
        }
    }

    let comments = cfg.header_lines();
    let partial_path = dir.join(PARTIAL_RUNS_FILE);
    let mut partial = File::create(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    partial
        .write_all(&encode_runs(&[], &comments))
        .map_err(|e| Error::io(&partial_path, e))?;
    let partial = Mutex::new(partial);

    let records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let mut rec = run_vqe(t.instance, &t.spec, &cfg.optimizer, t.seed, cfg.init_mode)?;
                if !cfg.record_wall_time {
                    rec.wall_time = 0.0;
                }
                let tpath = trace_path(dir, &rec.run_id());
                write_atomic(&tpath, &encode_trace(&rec.trace, &comments))?;
                let mut wtr = csv::WriterBuilder::new()
                    .has_headers(false)
                    .from_writer(Vec::new());
                wtr.serialize(RunRow::from(&rec))
                    .expect("RunRow serialises to CSV");
                let line = wtr.into_inner().expect("flush to Vec");
                let mut f = partial.lock().unwrap_or_else(|p| p.into_inner());
                f.write_all(&line)
                    .map_err(|e| Error::io(&partial_path, e))?;
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    drop(partial);

    let rows: Vec<RunRow> = records.iter().map(RunRow::from).collect();
    debug_assert!(rows.windows(2).all(|w| w[0].sort_key() < w[1].sort_key()));
    write_atomic(&dir.join(RUNS_FILE), &encode_runs(&rows, &comments))?;
    fs::remove_file(&partial_path).map_err(|e| Error::io(&partial_path, e))?;
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(records)
}

/// Per (circuit, layers) statistics of a set of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub circuit: Circuit,
    pub layers: usize,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean_final_energy: f64,
    pub mean_eval_count: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (position `(len-1)·q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorted-order sum, so the result does not depend on input order.
fn mean_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Descriptive statistics of one sample (approximation ratios or anything else).
pub fn describe(values: &[f64]) -> Result<(f64, f64, [f64; 5])> {
    if values.is_empty() {
        return Err(Error::argument("cannot describe an empty sample"));
    }
    let mut sorted = values.to_vec();
    let mean = mean_of(&mut sorted);
    let mut dev: Vec<f64> = sorted.iter().map(|v| (v - mean).powi(2)).collect();
    let std = mean_of(&mut dev).sqrt();
    let five = [
        sorted[0],
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
        sorted[sorted.len() - 1],
    ];
    Ok((mean, std, five))
}

/// Groups rows by (circuit, layers) and summarises the approximation ratios.
pub fn summarize(rows: &[RunRow]) -> Result<Vec<SummaryStats>> {
    if rows.is_empty() {
        return Err(Error::argument("no runs to summarise"));
    }
    let mut groups: BTreeMap<(Circuit, usize), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.circuit(), r.layers)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((circuit, layers), group)| {
            let ratios: Vec<f64> = group.iter().map(|r| r.approx_ratio).collect();
            let (mean, std, [min, q1, median, q3, max]) = describe(&ratios)?;
            let mut energies: Vec<f64> = group.iter().map(|r| r.final_energy).collect();
            let mut evals: Vec<f64> = group.iter().map(|r| r.eval_count as f64).collect();
            Ok(SummaryStats {
                circuit,
                layers,
                count: group.len(),
                mean,
                std,
                min,
                q1,
                median,
                q3,
                max,
                mean_final_energy: mean_of(&mut energies),
                mean_eval_count: mean_of(&mut evals),
            })
        })
        .collect()
}

pub fn summarize_records(records: &[RunRecord]) -> Result<Vec<SummaryStats>> {
    let rows: Vec<RunRow> = records.iter().map(RunRow::from).collect();
    summarize(&rows)
}

/// True when a sweep in `dir` was interrupted or failed.
pub fn is_incomplete(dir: &Path) -> bool {
    dir.join(INCOMPLETE_MARKER).exists()
}

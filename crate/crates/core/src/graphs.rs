//! MaxCut instances: unweighted undirected graphs, partitions, cut evaluation
//! and the exhaustive optimum used as ground truth.
//!
//! Random instances come from a seeded Erdős–Rényi generator whose random
//! stream is fully specified (see [`SplitMix64`] and [`generate_erdos_renyi`])
//! so that edge lists can be reproduced bit-for-bit in any language.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest graph accepted by [`brute_force_max_cut`].
pub const MAX_BRUTE_FORCE_NODES: usize = 30;

/// Default number of whole-graph resamples before giving up on connectivity.
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

/// SplitMix64 (Steele, Lea & Flood 2014), the random stream behind graph
/// generation.
///
/// State update `s += 0x9E3779B97F4A7C15`, output
/// `z = s; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; z = (z ^ z>>27) * 0x94D049BB133111EB; z ^ z>>31`
/// (wrapping arithmetic). The initial state is the seed itself.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` built from the top 53 bits of the next output.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Undirected, unweighted simple graph on nodes `0..n`.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, normalising each edge to `u < v` and sorting.
    /// Self-loops, duplicates and out-of-range labels are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::argument(format!(
                    "edge ({a}, {b}) out of range for n={n}"
                )));
            }
            if a == b {
                return Err(Error::argument(format!("self-loop on node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::argument(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self { n, edges }
    }

    /// Ring `0-1-…-(n-1)-0`. Requires `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::argument("cycle needs at least 3 nodes"));
        }
        Self::new(n, (0..n).map(|u| (u, (u + 1) % n)))
    }

    /// `K_{a,b}` with parts `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges = (0..a)
            .flat_map(|u| (a..a + b).map(move |v| (u, v)))
            .collect();
        Self { n: a + b, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Serialises to the edge-list text format: `"n m"` then one `"u v"` line
    /// per edge, `u < v`, sorted. No trailing newline.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}", self.n, self.edges.len());
        for (u, v) in &self.edges {
            out.push_str(&format!("\n{u} {v}"));
        }
        out
    }

    /// Parses the edge-list text format. Errors name the 1-based line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let (n, m) = parse_pair(hline, header)?;

        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(m);
        for (line, text) in lines {
            let (a, b) = parse_pair(line, text)?;
            let err = |message: String| Error::Parse { line, message };
            if a >= n || b >= n {
                return Err(err(format!("node out of range for n={n}")));
            }
            if a == b {
                return Err(err(format!("self-loop on node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(err(format!("duplicate edge {} {}", e.0, e.1)));
            }
            if edges.len() == m {
                return Err(err(format!("more edges than the declared {m}")));
            }
            edges.push(e);
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: hline,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        edges.sort_unstable();
        Ok(Self { n, edges })
    }
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize)> {
    let err = |message: String| Error::Parse { line, message };
    let mut it = text.split_whitespace();
    let mut next = || -> Result<usize> {
        let tok = it
            .next()
            .ok_or_else(|| err(format!("expected two integers, got {text:?}")))?;
        tok.parse()
            .map_err(|_| err(format!("invalid integer {tok:?}")))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(err(format!("expected two integers, got {text:?}")));
    }
    Ok(pair)
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Two-set assignment of the nodes. Bit `v == false` puts node `v` in `S`,
/// `true` in `T`.
///
/// The textual form lists bits in node order, so `"001"` puts node 2 alone
/// in `T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    bits: Vec<bool>,
}

impl Partition {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    /// Little-endian decoding of a basis index: bit `v` of `index` is node `v`.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self {
            bits: (0..n).map(|v| (index >> v) & 1 == 1).collect(),
        }
    }

    pub fn to_index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0, |acc, (v, _)| acc | (1 << v))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, v: usize) -> bool {
        self.bits[v]
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::argument(format!("invalid partition bit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

fn check_len(g: &Graph, x: &Partition) -> Result<()> {
    if x.len() != g.n() {
        return Err(Error::argument(format!(
            "partition length {} does not match graph size {}",
            x.len(),
            g.n()
        )));
    }
    Ok(())
}

/// Number of edges whose endpoints fall on different sides.
pub fn cut_value(g: &Graph, x: &Partition) -> Result<usize> {
    check_len(g, x)?;
    Ok(g.edges
        .iter()
        .filter(|&&(u, v)| x.bit(u) != x.bit(v))
        .count())
}

/// MaxCut cost `C(x) = -Σ_{(u,v)∈E} (x_u + x_v - 2 x_u x_v)`.
pub fn cost(g: &Graph, x: &Partition) -> Result<i64> {
    check_len(g, x)?;
    let total: i64 = g
        .edges
        .iter()
        .map(|&(u, v)| {
            let (xu, xv) = (x.bit(u) as i64, x.bit(v) as i64);
            xu + xv - 2 * xu * xv
        })
        .sum();
    Ok(-total)
}

/// Exhaustive maximum cut.
///
/// Node 0 is pinned to `S` (cuts are invariant under complement), so
/// `2^(n-1)` partitions are scanned. The witness is the lexicographically
/// smallest optimal partition in its textual form.
pub fn brute_force_max_cut(g: &Graph) -> Result<(usize, Partition)> {
    let n = g.n();
    if n == 0 || n > MAX_BRUTE_FORCE_NODES {
        return Err(Error::Size(format!(
            "brute force supports 1..={MAX_BRUTE_FORCE_NODES} nodes, got {n}"
        )));
    }
    // Scanning r ascending, with node i stored at bit (n-1-i) of r, visits
    // partitions in lexicographic order of their text; node 0 is the top bit.
    let masks: Vec<u32> = g
        .edges
        .iter()
        .map(|&(u, v)| (1u32 << (n - 1 - u)) | (1u32 << (n - 1 - v)))
        .collect();
    let mut best_cut = 0;
    let mut best_r = 0u32;
    for r in 0..(1u32 << (n - 1)) {
        let cut = masks.iter().filter(|&&m| (r & m).count_ones() == 1).count();
        if cut > best_cut {
            best_cut = cut;
            best_r = r;
        }
    }
    let witness = Partition::new((0..n).map(|i| (best_r >> (n - 1 - i)) & 1 == 1).collect());
    Ok((best_cut, witness))
}

/// Seeded G(n, p) conditioned on connectivity.
///
/// One SplitMix64 stream seeded with `seed` drives every attempt: pairs are
/// visited in row-major order `(0,1), (0,2), …, (0,n-1), (1,2), …` and pair
/// `{u,v}` becomes an edge when the next [`SplitMix64::next_f64`] draw is
/// `< p`. A disconnected draw is discarded whole and the stream continues
/// with the next attempt.
pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64, max_attempts: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::argument(format!("need n >= 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::argument(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    if max_attempts == 0 {
        return Err(Error::argument("max_attempts must be at least 1"));
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..max_attempts {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.next_f64() < p {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph { n, edges };
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailed {
        n,
        p,
        attempts: max_attempts,
    })
}

/// A graph together with its brute-force optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: usize,
    pub graph: Graph,
    pub optimal_cut: usize,
}

impl Instance {
    /// Runs the exhaustive oracle. The graph must be connected with at least
    /// one edge.
    pub fn solve(id: usize, graph: Graph) -> Result<Self> {
        if graph.edge_count() == 0 || !graph.is_connected() {
            return Err(Error::argument(format!(
                "instance {id} must be a connected graph with at least one edge"
            )));
        }
        let (optimal_cut, _) = brute_force_max_cut(&graph)?;
        Ok(Self {
            id,
            graph,
            optimal_cut,
        })
    }
}

/// Row of `instances.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub id: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub edge_count: usize,
    pub optimal_cut: usize,
}

/// Generates and solves `count` instances; instance `i` uses seed
/// `seed_base + i`.
pub fn generate_instances(
    count: usize,
    n: usize,
    p: f64,
    seed_base: u64,
    max_attempts: usize,
) -> Result<Vec<(Instance, InstanceRow)>> {
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|id| {
            let seed = seed_base + id as u64;
            let graph = generate_erdos_renyi(n, p, seed, max_attempts)?;
            let inst = Instance::solve(id, graph)?;
            let row = InstanceRow {
                id,
                n,
                p,
                seed,
                edge_count: inst.graph.edge_count(),
                optimal_cut: inst.optimal_cut,
            };
            Ok((inst, row))
        })
        .collect()
}

pub fn graph_file_name(id: usize) -> String {
    format!("graph_{id}.txt")
}

/// Writes `graph_<id>.txt` files and the `instances.csv` manifest into `dir`.
pub fn write_instances(dir: &Path, instances: &[(Instance, InstanceRow)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (inst, _) in instances {
        let path = dir.join(graph_file_name(inst.id));
        crate::io::write_atomic(&path, format!("{}\n", inst.graph.to_text()).as_bytes())?;
    }
    let path = dir.join("instances.csv");
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for (_, row) in instances {
        wtr.serialize(row).map_err(|e| Error::Csv {
            path: path.clone(),
            source: e,
        })?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::io(&path, e.into_error()))?;
    crate::io::write_atomic(&path, &bytes)
}

/// Reads `instances.csv` plus the graph files next to it and re-checks each
/// stored optimum against the oracle.
pub fn read_instances(dir: &Path) -> Result<Vec<Instance>> {
    let path = dir.join("instances.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| Error::Csv {
        path: path.clone(),
        source: e,
    })?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<InstanceRow>() {
        let row = row.map_err(|e| Error::Csv {
            path: path.clone(),
            source: e,
        })?;
        let gpath = dir.join(graph_file_name(row.id));
        let text = fs::read_to_string(&gpath).map_err(|e| Error::io(&gpath, e))?;
        let inst = Instance::solve(row.id, Graph::parse(&text)?)?;
        if inst.optimal_cut != row.optimal_cut || inst.graph.edge_count() != row.edge_count {
            return Err(Error::argument(format!(
                "manifest row for instance {} disagrees with its graph file",
                row.id
            )));
        }
        out.push(inst);
    }
    Ok(out)
}

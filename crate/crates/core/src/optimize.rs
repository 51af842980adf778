//! Derivative-free minimisation with a full evaluation trace.
//!
//! [`Method::Cobyla`] follows Powell's COBYLA iteration (simplex of `d+1`
//! interpolation points, linear model, trust-region steps, geometry repair,
//! `ρ` halving from `initial_step` down to `final_tolerance`) specialised to
//! problems without constraints. [`Method::NelderMead`] is the classic
//! simplex search and serves as a cross-check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cobyla,
    NelderMead,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cobyla => "cobyla",
            Method::NelderMead => "nelder-mead",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cobyla" => Ok(Method::Cobyla),
            "nelder-mead" | "neldermead" | "nm" => Ok(Method::NelderMead),
            other => Err(Error::argument(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_evals: usize,
    /// COBYLA `ρ_beg`, or the Nelder–Mead initial edge length (radians).
    pub initial_step: f64,
    /// COBYLA `ρ_end`, or the Nelder–Mead simplex-size tolerance (radians).
    pub final_tolerance: f64,
    /// Reserved for stochastic restarts; both methods are deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Cobyla,
            max_evals: 5000,
            initial_step: 0.5,
            final_tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 {
            return Err(Error::argument("max_evals must be at least 1"));
        }
        let ok = self.final_tolerance > 0.0
            && self.final_tolerance < self.initial_step
            && self.initial_step.is_finite();
        if !ok {
            return Err(Error::argument(format!(
                "need 0 < final_tolerance ({}) < initial_step ({})",
                self.final_tolerance, self.initial_step
            )));
        }
        Ok(())
    }

    /// One-line description used in output file headers.
    pub fn describe(&self) -> String {
        format!(
            "optimizer={} max_evals={} initial_step={} final_tolerance={}",
            self.method, self.max_evals, self.initial_step, self.final_tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    /// 1-based evaluation count.
    pub index: usize,
    pub params: Vec<f64>,
    pub value: f64,
}

/// Every objective evaluation in call order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectiveTrace {
    points: Vec<TracePoint>,
}

impl ObjectiveTrace {
    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    /// First point attaining the minimum value.
    pub fn best(&self) -> Option<&TracePoint> {
        self.points
            .iter()
            .reduce(|best, p| if p.value < best.value { p } else { best })
    }

    pub fn into_values(self) -> Vec<f64> {
        self.points.into_iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    BudgetExhausted,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::BudgetExhausted => "budget_exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub trace: ObjectiveTrace,
    pub termination: Termination,
}

/// Minimises `f` from `x0`. Evaluation 1 is always `f(x0)` and every call of
/// `f` is recorded in the trace.
pub fn minimize<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::argument("cannot minimise over zero parameters"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("starting point has non-finite entries"));
    }
    let mut eval = Evaluator {
        f,
        max_evals: cfg.max_evals,
        trace: ObjectiveTrace::default(),
    };
    let termination = match cfg.method {
        Method::Cobyla => cobyla(&mut eval, x0, cfg.initial_step, cfg.final_tolerance)?,
        Method::NelderMead => nelder_mead(&mut eval, x0, cfg.initial_step, cfg.final_tolerance)?,
    };
    let trace = eval.trace;
    let best = trace.best().expect("at least one evaluation");
    Ok(Minimum {
        best_x: best.params.clone(),
        best_value: best.value,
        termination,
        trace,
    })
}

struct Evaluator<F> {
    f: F,
    max_evals: usize,
    trace: ObjectiveTrace,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<F> {
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.max_evals
    }

    fn count(&self) -> usize {
        self.trace.len()
    }

    fn call(&mut self, x: &[f64]) -> Result<f64> {
        let value = (self.f)(x);
        let index = self.trace.len() + 1;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                index,
                value,
                trace: std::mem::take(&mut self.trace),
            });
        }
        self.trace.points.push(TracePoint {
            index,
            params: x.to_vec(),
            value,
        });
        Ok(value)
    }
}

const COBYLA_ALPHA: f64 = 0.25;
const COBYLA_BETA: f64 = 2.1;
const COBYLA_GAMMA: f64 = 0.5;
const COBYLA_DELTA: f64 = 1.1;

enum Stage {
    Evaluate,
    Iterate,
    Reduce,
}

/// Unconstrained COBYLA.
///
/// `sim` holds the simplex as column displacements from the pole (column
/// `d`, the best vertex); `simi` is the inverse of the displacement matrix.
/// With no constraints the merit function is the objective itself, the
/// penalty parameter stays zero, and the trust-region subproblem has the
/// closed form `-ρ ∇f / |∇f|`.
fn cobyla<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    x0: &[f64],
    rho_beg: f64,
    rho_end: f64,
) -> Result<Termination> {
    let d = x0.len();
    let mut rho = rho_beg;
    let mut x = x0.to_vec();

    let mut sim = vec![vec![0.0; d + 1]; d];
    let mut simi = vec![vec![0.0; d]; d];
    for i in 0..d {
        sim[i][d] = x[i];
        sim[i][i] = rho;
        simi[i][i] = 1.0 / rho;
    }
    let mut fvals = vec![0.0; d + 1];
    let mut jdrop = d;
    let mut trial_step = false;

    let mut grad_neg = vec![0.0; d];
    let mut vsig = vec![0.0; d];
    let mut veta = vec![0.0; d];
    let mut sigbar = vec![0.0; d];
    let mut dx = vec![0.0; d];
    let mut acceptable = true;
    let mut prerem = 0.0;
    let mut iterations = 0usize;
    let mut f;

    let mut stage = Stage::Evaluate;
    loop {
        match stage {
            Stage::Evaluate => {
                if eval.exhausted() {
                    return Ok(Termination::BudgetExhausted);
                }
                f = eval.call(&x)?;
                let nf = eval.count();

                if trial_step {
                    // Decide whether x replaces a vertex; mandatory when f improved.
                    let pole_f = fvals[d];
                    let (trured, prerem_eff) = if f == pole_f {
                        (0.0, 0.0)
                    } else {
                        (pole_f - f, prerem)
                    };
                    let mut ratio = if trured <= 0.0 { 1.0 } else { 0.0 };
                    let mut drop = None;
                    for j in 0..d {
                        let t = dot(&simi[j], &dx).abs();
                        if t > ratio {
                            drop = Some(j);
                            ratio = t;
                        }
                        sigbar[j] = t * vsig[j];
                    }
                    let parsig = COBYLA_ALPHA * rho;
                    let mut edgmax = COBYLA_DELTA * rho;
                    let mut far = None;
                    for j in 0..d {
                        if sigbar[j] >= parsig || sigbar[j] >= vsig[j] {
                            let t = if trured > 0.0 {
                                (0..d)
                                    .map(|i| (dx[i] - sim[i][j]).powi(2))
                                    .sum::<f64>()
                                    .sqrt()
                            } else {
                                veta[j]
                            };
                            if t > edgmax {
                                far = Some(j);
                                edgmax = t;
                            }
                        }
                    }
                    if far.is_some() {
                        drop = far;
                    }
                    match drop {
                        None => stage = Stage::Reduce,
                        Some(j) => {
                            replace_vertex(&mut sim, &mut simi, j, &dx);
                            fvals[j] = f;
                            stage = if trured > 0.0 && trured >= 0.1 * prerem_eff {
                                Stage::Iterate
                            } else {
                                Stage::Reduce
                            };
                        }
                    }
                    continue;
                }

                fvals[jdrop] = f;
                if nf > d + 1 {
                    // geometry step just evaluated
                    trial_step = true;
                    stage = Stage::Iterate;
                    continue;
                }
                // Building the initial simplex; keep the best point at the pole.
                if jdrop < d {
                    if fvals[d] <= f {
                        x[jdrop] = sim[jdrop][d];
                    } else {
                        sim[jdrop][d] = x[jdrop];
                        fvals[jdrop] = fvals[d];
                        fvals[d] = f;
                        for k in 0..=jdrop {
                            sim[jdrop][k] = -rho;
                            let t: f64 = (k..=jdrop).map(|i| simi[i][k]).sum();
                            simi[jdrop][k] = -t;
                        }
                    }
                }
                if nf <= d {
                    jdrop = nf - 1;
                    x[jdrop] += rho;
                    continue;
                }
                trial_step = true;
                stage = Stage::Iterate;
            }

            Stage::Iterate => {
                // Move the best vertex to the pole.
                let mut nbest = d;
                let mut phimin = fvals[d];
                for (j, &fj) in fvals.iter().enumerate().take(d) {
                    if fj < phimin {
                        nbest = j;
                        phimin = fj;
                    }
                }
                if nbest < d {
                    fvals.swap(d, nbest);
                    for i in 0..d {
                        let t = sim[i][nbest];
                        sim[i][nbest] = 0.0;
                        sim[i][d] += t;
                        let mut tempa = 0.0;
                        for k in 0..d {
                            sim[i][k] -= t;
                            tempa -= simi[k][i];
                        }
                        simi[nbest][i] = tempa;
                    }
                }

                // The O(d³) consistency check runs once every d iterations.
                iterations += 1;
                if iterations.is_multiple_of(d) {
                    let err = inverse_error(&sim, &simi);
                    if err > 0.1 {
                        return Err(Error::DegenerateSimplex(err));
                    }
                }

                // Linear model: grad_neg = -∇f.
                for (i, g) in grad_neg.iter_mut().enumerate() {
                    *g = -(0..d)
                        .map(|j| (fvals[j] - fvals[d]) * simi[j][i])
                        .sum::<f64>();
                }

                let parsig = COBYLA_ALPHA * rho;
                let pareta = COBYLA_BETA * rho;
                acceptable = true;
                for j in 0..d {
                    let wsig: f64 = simi[j].iter().map(|v| v * v).sum();
                    let weta: f64 = (0..d).map(|i| sim[i][j] * sim[i][j]).sum();
                    vsig[j] = 1.0 / wsig.sqrt();
                    veta[j] = weta.sqrt();
                    if vsig[j] < parsig || veta[j] > pareta {
                        acceptable = false;
                    }
                }

                if !trial_step && !acceptable {
                    // Geometry step: replace the worst-shaped vertex.
                    let mut worst = None;
                    let mut t = pareta;
                    for j in 0..d {
                        if veta[j] > t {
                            worst = Some(j);
                            t = veta[j];
                        }
                    }
                    if worst.is_none() {
                        for j in 0..d {
                            if vsig[j] < t {
                                worst = Some(j);
                                t = vsig[j];
                            }
                        }
                    }
                    let j = worst.expect("unacceptable simplex has a vertex to drop");
                    jdrop = j;
                    let scale = COBYLA_GAMMA * rho * vsig[j];
                    for i in 0..d {
                        dx[i] = scale * simi[j][i];
                    }
                    // Step downhill on the linear model.
                    if dot(&grad_neg, &dx) < 0.0 {
                        dx.iter_mut().for_each(|v| *v = -*v);
                    }
                    replace_vertex(&mut sim, &mut simi, j, &dx);
                    for i in 0..d {
                        x[i] = sim[i][d] + dx[i];
                    }
                    stage = Stage::Evaluate;
                    continue;
                }

                // Trust-region step on the linear model.
                let gnorm = dot(&grad_neg, &grad_neg).sqrt();
                if gnorm == 0.0 {
                    trial_step = true;
                    stage = Stage::Reduce;
                    continue;
                }
                for i in 0..d {
                    dx[i] = rho * grad_neg[i] / gnorm;
                }
                prerem = dot(&grad_neg, &dx);
                for i in 0..d {
                    x[i] = sim[i][d] + dx[i];
                }
                trial_step = true;
                stage = Stage::Evaluate;
            }

            Stage::Reduce => {
                if !acceptable {
                    trial_step = false;
                    stage = Stage::Iterate;
                    continue;
                }
                if rho > rho_end {
                    rho *= 0.5;
                    if rho <= 1.5 * rho_end {
                        rho = rho_end;
                    }
                    stage = Stage::Iterate;
                    continue;
                }
                return Ok(Termination::Converged);
            }
        }
    }
}

/// Installs displacement `dx` as simplex column `j` and updates the inverse
/// by a rank-one correction.
fn replace_vertex(sim: &mut [Vec<f64>], simi: &mut [Vec<f64>], j: usize, dx: &[f64]) {
    let d = dx.len();
    for i in 0..d {
        sim[i][j] = dx[i];
    }
    let pivot = dot(&simi[j], dx);
    simi[j].iter_mut().for_each(|v| *v /= pivot);
    let row_j = simi[j].clone();
    for (k, row) in simi.iter_mut().enumerate() {
        if k != j {
            let t = dot(row, dx);
            for (r, &s) in row.iter_mut().zip(&row_j) {
                *r -= t * s;
            }
        }
    }
}

fn inverse_error(sim: &[Vec<f64>], simi: &[Vec<f64>]) -> f64 {
    let d = simi.len();
    let mut err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut t = if i == j { -1.0 } else { 0.0 };
            for k in 0..d {
                t += simi[i][k] * sim[k][j];
            }
            err = err.max(t.abs());
        }
    }
    err
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const NM_REFLECT: f64 = 1.0;
const NM_EXPAND: f64 = 2.0;
const NM_CONTRACT: f64 = 0.5;
const NM_SHRINK: f64 = 0.5;

/// Nelder–Mead with the standard coefficients. Converged once every vertex
/// lies within `tol` of the best vertex in each coordinate.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    x0: &[f64],
    step: f64,
    tol: f64,
) -> Result<Termination> {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    for k in 0..=d {
        if eval.exhausted() {
            return Ok(Termination::BudgetExhausted);
        }
        let mut v = x0.to_vec();
        if k > 0 {
            v[k - 1] += step;
        }
        let fv = eval.call(&v)?;
        simplex.push((v, fv));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size <= tol {
            return Ok(Termination::Converged);
        }

        let centroid: Vec<f64> = (0..d)
            .map(|i| simplex[..d].iter().map(|(v, _)| v[i]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let toward = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        if eval.exhausted() {
            return Ok(Termination::BudgetExhausted);
        }
        let xr = toward(NM_REFLECT);
        let fr = eval.call(&xr)?;

        if fr < simplex[0].1 {
            if eval.exhausted() {
                simplex[d] = (xr, fr);
                return Ok(Termination::BudgetExhausted);
            }
            let xe = toward(NM_EXPAND);
            let fe = eval.call(&xe)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }

        if eval.exhausted() {
            return Ok(Termination::BudgetExhausted);
        }
        let (xc, fc, accept) = if fr < worst.1 {
            let xc = toward(NM_CONTRACT);
            let fc = eval.call(&xc)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = toward(-NM_CONTRACT);
            let fc = eval.call(&xc)?;
            let ok = fc < worst.1;
            (xc, fc, ok)
        };
        if accept {
            simplex[d] = (xc, fc);
            continue;
        }

        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if eval.exhausted() {
                return Ok(Termination::BudgetExhausted);
            }
            let v: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, x)| b + NM_SHRINK * (x - b))
                .collect();
            let fv = eval.call(&v)?;
            *vertex = (v, fv);
        }
    }
}

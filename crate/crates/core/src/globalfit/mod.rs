//! Existence of a global joint distribution as linear feasibility.
//!
//! One LP variable per cell of the product outcome space of all observables
//! (a deterministic assignment of an eigenvalue to every observable), one
//! equality row per (context, outcome tuple) requiring the cells that project
//! onto that tuple to sum to the context probability. A feasible point is a
//! global table whose marginals reproduce every context; infeasibility is
//! certified by phase-1 duals, which read as a noncontextuality inequality
//! the model violates.

mod scalar;
mod simplex;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use scalar::{rationalize, Scalar};
pub use simplex::{Optimum, PhaseOne, Tableau};

use crate::contexts::{ravel, unravel, Context, EmpiricalModel};
use crate::error::{Error, Result};

/// Feasibility tolerance for constraint residuals and certificate checks.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub label: String,
    pub eigenvalues: Vec<f64>,
}

/// `Σ_{v ∈ support} x_v = rhs`, all coefficients 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub context: usize,
    pub outcome: Vec<f64>,
    pub support: Vec<usize>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSystem {
    axes: Vec<Axis>,
    contexts: Vec<Context>,
    rows: Vec<LpRow>,
    single_context: bool,
}

impl LpSystem {
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.eigenvalues.len()).collect()
    }

    pub fn n_vars(&self) -> usize {
        self.shape().iter().product()
    }

    /// Dense 0/1 coefficient vector of row `i`.
    pub fn coefficients(&self, i: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.n_vars()];
        for &v in &self.rows[i].support {
            c[v] = 1.0;
        }
        c
    }

    /// Eigenvalue of every observable at cell `v`.
    pub fn cell_outcome(&self, v: usize) -> Vec<f64> {
        unravel(v, &self.shape())
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.eigenvalues[i])
            .collect()
    }

    /// Cell index of a full outcome tuple (one eigenvalue per axis, in axis order).
    pub fn cell_index(&self, outcome: &[f64]) -> Result<usize> {
        if outcome.len() != self.axes.len() {
            return Err(Error::UnknownCell(format!(
                "expected {} values, got {}",
                self.axes.len(),
                outcome.len()
            )));
        }
        let idx = outcome
            .iter()
            .zip(&self.axes)
            .map(|(&x, axis)| {
                axis.eigenvalues
                    .iter()
                    .position(|&e| (e - x).abs() <= 1e-9 * e.abs().max(1.0))
                    .ok_or_else(|| {
                        Error::UnknownCell(format!("{} has no eigenvalue {x}", axis.label))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ravel(&idx, &self.shape()))
    }

    /// Cell index from `label = value` pairs covering every axis.
    pub fn cell_from_assignment(&self, assignment: &[(String, f64)]) -> Result<usize> {
        let mut outcome = Vec::with_capacity(self.axes.len());
        for axis in &self.axes {
            let hits: Vec<f64> = assignment
                .iter()
                .filter(|(l, _)| l.eq_ignore_ascii_case(&axis.label))
                .map(|&(_, v)| v)
                .collect();
            match hits.as_slice() {
                [v] => outcome.push(*v),
                [] => return Err(Error::UnknownCell(format!("no value for {}", axis.label))),
                _ => return Err(Error::UnknownCell(format!("{} assigned twice", axis.label))),
            }
        }
        if let Some((l, _)) = assignment
            .iter()
            .find(|(l, _)| !self.axes.iter().any(|a| a.label.eq_ignore_ascii_case(l)))
        {
            return Err(Error::UnknownCell(format!("unknown observable {l}")));
        }
        self.cell_index(&outcome)
    }

    /// The same system with every row of context `c` removed.
    pub fn without_context(&self, c: usize) -> LpSystem {
        let mut out = self.clone();
        out.rows.retain(|r| r.context != c);
        out.single_context = false;
        out
    }

    /// Largest `|Σ_support x − rhs|` over all rows.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.support.iter().map(|&v| x[v]).sum::<f64>() - r.rhs).abs())
            .fold(0.0, f64::max)
    }

    fn rows_by_var(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vars()];
        for (i, r) in self.rows.iter().enumerate() {
            for &v in &r.support {
                out[v].push(i);
            }
        }
        out
    }
}

/// Builds the feasibility system of a model.
pub fn assemble_lp(m: &EmpiricalModel) -> Result<LpSystem> {
    if !m.compatibility().passed {
        return Err(Error::ModelIncoherent);
    }
    let axes: Vec<Axis> = m
        .labels()
        .iter()
        .zip(m.eigenvalues())
        .map(|(label, vals)| Axis {
            label: label.clone(),
            eigenvalues: vals.clone(),
        })
        .collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.eigenvalues.len()).collect();
    let n_vars: usize = shape.iter().product();

    let mut rows = Vec::new();
    for (ci, d) in m.contexts().iter().enumerate() {
        let members = d.context().members();
        let sub_shape = d.shape();
        let offset = rows.len();
        rows.extend((0..d.len()).map(|k| LpRow {
            context: ci,
            outcome: d.outcome(k),
            support: Vec::new(),
            rhs: d.probs()[k],
        }));
        for v in 0..n_vars {
            let idx = unravel(v, &shape);
            let sub: Vec<usize> = members.iter().map(|&mbr| idx[mbr]).collect();
            rows[offset + ravel(&sub, &sub_shape)].support.push(v);
        }
    }
    Ok(LpSystem {
        axes,
        contexts: m.contexts().iter().map(|d| d.context().clone()).collect(),
        rows,
        single_context: m.is_single_context(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    GloballyNoncontextual,
    GloballyContextual,
}

/// Explicit global distribution over the full outcome product space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTable {
    pub axes: Vec<Axis>,
    pub cells: Vec<f64>,
    /// False unless all observables commute; otherwise the table is a
    /// classical bookkeeping device with no quantum sample space behind it.
    pub quantum_sample_space: bool,
}

impl GlobalTable {
    fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.eigenvalues.len()).collect()
    }

    /// Marginal onto the given axes (ascending), row-major.
    pub fn marginal(&self, members: &[usize]) -> Vec<f64> {
        let shape = self.shape();
        let sub_shape: Vec<usize> = members.iter().map(|&m| shape[m]).collect();
        let mut out = vec![0.0; sub_shape.iter().product()];
        for (v, &p) in self.cells.iter().enumerate() {
            let idx = unravel(v, &shape);
            let sub: Vec<usize> = members.iter().map(|&m| idx[m]).collect();
            out[ravel(&sub, &sub_shape)] += p;
        }
        out
    }

    /// Largest entrywise gap between this table's marginals and the model's tables.
    pub fn max_marginal_error(&self, m: &EmpiricalModel) -> f64 {
        m.contexts()
            .iter()
            .flat_map(|d| {
                self.marginal(d.context().members())
                    .into_iter()
                    .zip(d.probs().to_vec())
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessTerm {
    pub context: usize,
    pub outcome: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessNormalization {
    /// Centered per context and scaled to `±a·b` correlator weights; bound 2.
    Chsh,
    /// Scaled so the largest `|weight|` is 1.
    MaxAbs,
}

/// Noncontextuality inequality `Σ w · Pr ≤ bound` violated by the model.
///
/// Every global assignment (LP cell) satisfies it; `violation` is the
/// model's excess over `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub terms: Vec<WitnessTerm>,
    pub bound: f64,
    pub value: f64,
    pub violation: f64,
    pub normalization: WitnessNormalization,
}

impl Witness {
    /// Largest cell sum of weights minus `bound`; ≤ 0 for a valid certificate.
    pub fn max_cell_excess(&self, lp: &LpSystem) -> f64 {
        let mut sums = vec![0.0; lp.n_vars()];
        for (t, r) in self.terms.iter().zip(lp.rows()) {
            for &v in &r.support {
                sums[v] += t.weight;
            }
        }
        sums.into_iter().fold(f64::NEG_INFINITY, f64::max) - self.bound
    }

    /// `Σ_c σ_c E_c` where `σ_c` is the sign of the witness's correlator
    /// weight on context `c` and `E_c` the model's correlator. Defined only
    /// for four two-member contexts of ±1-valued observables.
    pub fn chsh_value(&self, lp: &LpSystem) -> Option<f64> {
        if !is_bell_square(lp) {
            return None;
        }
        let mut s = 0.0;
        for c in 0..lp.contexts().len() {
            let (mut corr_w, mut corr_p) = (0.0, 0.0);
            for (t, r) in self.terms.iter().zip(lp.rows()) {
                if r.context == c {
                    let ab = r.outcome[0] * r.outcome[1];
                    corr_w += t.weight * ab;
                    corr_p += r.rhs * ab;
                }
            }
            if corr_w == 0.0 {
                return None;
            }
            s += corr_w.signum() * corr_p;
        }
        Some(s)
    }
}

fn is_pm_one(vals: &[f64]) -> bool {
    vals.len() == 2 && (vals[0] - 1.0).abs() < 1e-9 && (vals[1] + 1.0).abs() < 1e-9
}

fn is_bell_square(lp: &LpSystem) -> bool {
    lp.contexts().len() == 4
        && lp.contexts().iter().all(|c| {
            c.len() == 2
                && c.members()
                    .iter()
                    .all(|&m| is_pm_one(&lp.axes()[m].eigenvalues))
        })
        && lp.rows().len() == 16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub phase_one_objective: f64,
    /// Constraint residual of the returned table (0 when infeasible).
    pub max_residual: f64,
    pub exact: bool,
    pub eliminated_vars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub verdict: Verdict,
    pub table: Option<GlobalTable>,
    pub witness: Option<Witness>,
    pub stats: SolverStats,
}

struct Presolved<T> {
    tableau: Tableau<T>,
    kept_vars: Vec<usize>,
    eliminated: Vec<bool>,
}

enum RawOutcome<T> {
    Feasible { x: Vec<f64>, presolved: Presolved<T> },
    Infeasible { duals: Vec<f64>, objective: f64, iterations: usize },
}

/// Rows with zero right-hand side force their support to zero; those
/// variables are removed before phase 1 and the rows dropped.
fn phase_one<T: Scalar>(lp: &LpSystem, rhs: &[T], tol: &T) -> (RawOutcome<T>, usize) {
    let n = lp.n_vars();
    let zero_row: Vec<bool> = rhs.iter().map(|b| !b.is_positive()).collect();
    let mut eliminated = vec![false; n];
    for (r, z) in lp.rows().iter().zip(&zero_row) {
        if *z {
            for &v in &r.support {
                eliminated[v] = true;
            }
        }
    }
    let kept_vars: Vec<usize> = (0..n).filter(|&v| !eliminated[v]).collect();
    let mut col_of = vec![usize::MAX; n];
    for (k, &v) in kept_vars.iter().enumerate() {
        col_of[v] = k;
    }
    let kept_rows: Vec<usize> = (0..lp.rows().len()).filter(|&i| !zero_row[i]).collect();
    let a: Vec<Vec<T>> = kept_rows
        .iter()
        .map(|&i| {
            let mut row = vec![T::zero(); kept_vars.len()];
            for &v in &lp.rows()[i].support {
                if !eliminated[v] {
                    row[col_of[v]] = T::one();
                }
            }
            row
        })
        .collect();
    let b: Vec<T> = kept_rows.iter().map(|&i| rhs[i].clone()).collect();
    let n_eliminated = n - kept_vars.len();

    let mut tableau = Tableau::new(a, b, kept_vars.len());
    match tableau.phase_one(tol) {
        PhaseOne::Feasible { x } => {
            let mut full = vec![0.0; n];
            for (k, &v) in kept_vars.iter().enumerate() {
                full[v] = x[k].to_f64();
            }
            (
                RawOutcome::Feasible {
                    x: full,
                    presolved: Presolved {
                        tableau,
                        kept_vars,
                        eliminated,
                    },
                },
                n_eliminated,
            )
        }
        PhaseOne::Infeasible { objective, duals } => {
            let mut y = vec![0.0; lp.rows().len()];
            for (k, &i) in kept_rows.iter().enumerate() {
                y[i] = duals[k].to_f64();
            }
            // Make eliminated columns satisfy yᵀA ≤ 0 via the zero rows, which
            // contribute nothing to yᵀb.
            let by_var = lp.rows_by_var();
            let excess = (0..n)
                .filter(|&v| eliminated[v])
                .map(|v| {
                    by_var[v]
                        .iter()
                        .filter(|&&i| !zero_row[i])
                        .map(|&i| y[i])
                        .sum::<f64>()
                })
                .fold(0.0, f64::max);
            for (i, z) in zero_row.iter().enumerate() {
                if *z {
                    y[i] = -excess;
                }
            }
            (
                RawOutcome::Infeasible {
                    duals: y,
                    objective: objective.to_f64(),
                    iterations: tableau.iterations,
                },
                n_eliminated,
            )
        }
    }
}

fn float_rhs(lp: &LpSystem) -> Vec<f64> {
    lp.rows().iter().map(|r| r.rhs.max(0.0)).collect()
}

fn exact_rhs(lp: &LpSystem, tol: f64) -> Vec<BigRational> {
    lp.rows().iter().map(|r| rationalize(r.rhs.max(0.0), tol * 1e-3)).collect()
}

fn exact_tol(tol: f64) -> BigRational {
    BigRational::from_float(tol.max(0.0)).unwrap_or_default()
}

fn finish(
    lp: &LpSystem,
    raw: RawOutcome<impl Scalar>,
    eliminated_vars: usize,
    tol: f64,
    exact: bool,
) -> Result<FeasibilityResult> {
    match raw {
        RawOutcome::Feasible { x, presolved } => {
            let cells: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
            let max_residual = lp.max_residual(&cells);
            if max_residual > tol {
                return Err(Error::NumericalFailure(format!(
                    "feasible basis leaves residual {max_residual:.3e}"
                )));
            }
            Ok(FeasibilityResult {
                verdict: Verdict::GloballyNoncontextual,
                table: Some(GlobalTable {
                    axes: lp.axes().to_vec(),
                    cells,
                    quantum_sample_space: lp.single_context,
                }),
                witness: None,
                stats: SolverStats {
                    iterations: presolved.tableau.iterations,
                    phase_one_objective: 0.0,
                    max_residual,
                    exact,
                    eliminated_vars,
                },
            })
        }
        RawOutcome::Infeasible {
            duals,
            objective,
            iterations,
        } => {
            let witness = certify(lp, &duals, tol)?;
            Ok(FeasibilityResult {
                verdict: Verdict::GloballyContextual,
                table: None,
                witness: Some(witness),
                stats: SolverStats {
                    iterations,
                    phase_one_objective: objective,
                    max_residual: 0.0,
                    exact,
                    eliminated_vars,
                },
            })
        }
    }
}

/// Checks the raw Farkas certificate, then normalizes it.
fn certify(lp: &LpSystem, duals: &[f64], tol: f64) -> Result<Witness> {
    let raw = Witness {
        terms: terms_from(lp, duals),
        bound: 0.0,
        value: 0.0,
        violation: 0.0,
        normalization: WitnessNormalization::MaxAbs,
    };
    let excess = raw.max_cell_excess(lp);
    let value: f64 = duals.iter().zip(lp.rows()).map(|(y, r)| y * r.rhs).sum();
    if excess > tol || value <= tol {
        return Err(Error::NumericalFailure(format!(
            "phase 1 reported infeasibility but the certificate is invalid \
             (cell excess {excess:.3e}, value {value:.3e})"
        )));
    }
    let (weights, normalization) = match chsh_normalized(lp, duals) {
        Some(w) => (w, WitnessNormalization::Chsh),
        None => {
            let scale = duals.iter().fold(0.0f64, |acc, y| acc.max(y.abs()));
            (duals.iter().map(|y| y / scale).collect(), WitnessNormalization::MaxAbs)
        }
    };
    let mut witness = Witness {
        terms: terms_from(lp, &weights),
        bound: 0.0,
        value: weights.iter().zip(lp.rows()).map(|(w, r)| w * r.rhs).sum(),
        violation: 0.0,
        normalization,
    };
    witness.bound = witness.max_cell_excess(lp);
    witness.violation = witness.value - witness.bound;
    if witness.violation <= tol {
        return Err(Error::NumericalFailure(
            "normalized witness lost its violation".into(),
        ));
    }
    Ok(witness)
}

fn terms_from(lp: &LpSystem, weights: &[f64]) -> Vec<WitnessTerm> {
    lp.rows()
        .iter()
        .zip(weights)
        .map(|(r, &w)| WitnessTerm {
            context: r.context,
            outcome: r.outcome.clone(),
            weight: w,
        })
        .collect()
}

/// Recognizes weights of the form `κ_c + λ σ_c a b` with an odd number of
/// negative `σ_c` and rescales them to `σ_c a b`.
fn chsh_normalized(lp: &LpSystem, duals: &[f64]) -> Option<Vec<f64>> {
    if !is_bell_square(lp) {
        return None;
    }
    let n_ctx = lp.contexts().len();
    let mut mean = vec![0.0; n_ctx];
    let mut corr = vec![0.0; n_ctx];
    for (y, r) in duals.iter().zip(lp.rows()) {
        mean[r.context] += y / 4.0;
        corr[r.context] += y * r.outcome[0] * r.outcome[1] / 4.0;
    }
    let lambda = corr.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if lambda <= 0.0 {
        return None;
    }
    let scale_tol = 1e-7 * lambda;
    if corr.iter().any(|c| (c.abs() - lambda).abs() > scale_tol) {
        return None;
    }
    if corr.iter().filter(|c| **c < 0.0).count() % 2 == 0 {
        return None;
    }
    let mut out = Vec::with_capacity(duals.len());
    for (y, r) in duals.iter().zip(lp.rows()) {
        let ab = r.outcome[0] * r.outcome[1];
        let centered = y - mean[r.context];
        if (centered - corr[r.context] * ab).abs() > scale_tol {
            return None;
        }
        out.push(corr[r.context].signum() * ab);
    }
    Some(out)
}

/// Phase-1 simplex in double precision.
pub fn solve_feasibility(lp: &LpSystem, tol: f64) -> Result<FeasibilityResult> {
    let (raw, elim) = phase_one(lp, &float_rhs(lp), &tol);
    finish(lp, raw, elim, tol, false)
}

/// Phase-1 simplex in exact rational arithmetic. Each right-hand side is
/// replaced by the simplest rational within `tol · 1e-3` of it, which
/// recovers inputs such as `1/3` exactly. Generic inputs do not round to a
/// consistent rational system, so the phase-1 objective is compared
/// against `tol` exactly as in floating point.
pub fn solve_feasibility_exact(lp: &LpSystem, tol: f64) -> Result<FeasibilityResult> {
    let (raw, elim) = phase_one(lp, &exact_rhs(lp, tol), &exact_tol(tol));
    finish(lp, raw, elim, tol, true)
}

/// Infeasibility certificate of an LP, or `NotInfeasible`.
pub fn extract_witness(lp: &LpSystem) -> Result<Witness> {
    solve_feasibility(lp, DEFAULT_FEASIBILITY_TOL)?
        .witness
        .ok_or(Error::NotInfeasible)
}

fn range_generic<T: Scalar>(lp: &LpSystem, rhs: &[T], tol: &T, cell: usize) -> Result<(f64, f64)> {
    let (raw, _) = phase_one(lp, rhs, tol);
    let RawOutcome::Feasible { presolved, .. } = raw else {
        return Err(Error::InfeasibleSystem);
    };
    if presolved.eliminated[cell] {
        return Ok((0.0, 0.0));
    }
    let k = presolved.kept_vars.iter().position(|&v| v == cell).expect("kept");
    let n = presolved.kept_vars.len();
    let mut bounds = [0.0; 2];
    for (slot, sign) in [T::one(), -T::one()].into_iter().enumerate() {
        let mut cost = vec![T::zero(); n];
        cost[k] = sign;
        let mut t = presolved.tableau.clone();
        match t.minimize(&cost) {
            Optimum::Optimal { x, .. } => bounds[slot] = x[k].to_f64(),
            Optimum::Unbounded => {
                return Err(Error::NumericalFailure("coordinate range is unbounded".into()))
            }
        }
    }
    Ok((bounds[0].max(0.0), bounds[1].max(bounds[0]).max(0.0)))
}

/// Minimum and maximum of one global-table cell over all feasible tables.
/// `cell` is a full outcome tuple in axis order.
pub fn coordinate_range(lp: &LpSystem, cell: &[f64], tol: f64) -> Result<(f64, f64)> {
    let v = lp.cell_index(cell)?;
    range_generic(lp, &float_rhs(lp), &tol, v)
}

pub fn coordinate_range_exact(lp: &LpSystem, cell: &[f64], tol: f64) -> Result<(f64, f64)> {
    let v = lp.cell_index(cell)?;
    range_generic(lp, &exact_rhs(lp, tol), &exact_tol(tol), v)
}

pub fn classify(m: &EmpiricalModel, tol: f64) -> Result<FeasibilityResult> {
    solve_feasibility(&assemble_lp(m)?, tol)
}

pub fn classify_exact(m: &EmpiricalModel, tol: f64) -> Result<FeasibilityResult> {
    solve_feasibility_exact(&assemble_lp(m)?, tol)
}

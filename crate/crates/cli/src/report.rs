use serde::{Deserialize, Serialize};

use contextual::contexts::{build_empirical_model, CompatibilityReport, EmpiricalModel};
use contextual::globalfit::{
    assemble_lp, coordinate_range, coordinate_range_exact, solve_feasibility, solve_feasibility_exact,
    GlobalTable, LpSystem, SolverStats, Verdict, Witness,
};
use contextual::scenario::Scenario;
use contextual::spectral::{BORN_TOL, DEFAULT_COMMUTE_TOL, DEFAULT_GROUPING_TOL};
use contextual::Error;

use crate::format::{num, table};
use crate::source::{load, load_with, parse_cell, parse_sweep};
use crate::{AnalyzeArgs, CliError, Outcome, RangeArgs, EXIT_CONTEXTUAL, EXIT_OK};

pub const TOOL: &str = "contextual";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CHSH_NOTE: &str = "chsh_value sums the four context correlators with the signs carried by \
the witness, so the reported value does not depend on which context the measurement angles place \
the minus sign in";
pub const NO_SAMPLE_SPACE_NOTE: &str = "the global table reproduces every context table but the \
observables do not all commute, so it corresponds to no quantum sample space";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub compatibility: f64,
    pub commutation: f64,
    pub grouping: f64,
    pub born: f64,
}

impl Tolerances {
    pub fn new(tol: f64) -> Self {
        Self {
            feasibility: tol,
            compatibility: tol,
            commutation: DEFAULT_COMMUTE_TOL,
            grouping: DEFAULT_GROUPING_TOL,
            born: BORN_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTable {
    pub label: String,
    pub members: Vec<String>,
    pub outcomes: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub witness: Witness,
    pub chsh_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellValue {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRange {
    pub cell: Vec<CellValue>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub labels: Vec<String>,
    pub tolerances: Tolerances,
    pub exact: bool,
    pub contexts: Vec<ContextTable>,
    pub compatibility: CompatibilityReport,
    pub verdict: Verdict,
    pub global_table: Option<GlobalTable>,
    pub witness: Option<WitnessReport>,
    pub ranges: Vec<CellRange>,
    pub stats: SolverStats,
    pub notes: Vec<String>,
}

impl Report {
    /// A table exactly when noncontextual, a witness exactly when contextual.
    pub fn is_consistent(&self) -> bool {
        match self.verdict {
            Verdict::GloballyNoncontextual => self.global_table.is_some() && self.witness.is_none(),
            Verdict::GloballyContextual => self.global_table.is_none() && self.witness.is_some(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::GloballyNoncontextual => EXIT_OK,
            Verdict::GloballyContextual => EXIT_CONTEXTUAL,
        }
    }
}

fn context_tables(m: &EmpiricalModel) -> Vec<ContextTable> {
    m.contexts()
        .iter()
        .map(|d| ContextTable {
            label: m.context_label(d.context()),
            members: d.context().members().iter().map(|&i| m.labels()[i].clone()).collect(),
            outcomes: d.outcomes(),
            probs: d.probs().to_vec(),
        })
        .collect()
}

fn solve(lp: &LpSystem, tol: f64, exact: bool) -> Result<contextual::globalfit::FeasibilityResult, Error> {
    if exact {
        solve_feasibility_exact(lp, tol)
    } else {
        solve_feasibility(lp, tol)
    }
}

fn range_of(lp: &LpSystem, outcome: &[f64], tol: f64, exact: bool) -> Result<(f64, f64), Error> {
    if exact {
        coordinate_range_exact(lp, outcome, tol)
    } else {
        coordinate_range(lp, outcome, tol)
    }
}

fn cell_values(lp: &LpSystem, outcome: &[f64]) -> Vec<CellValue> {
    lp.axes()
        .iter()
        .zip(outcome)
        .map(|(a, &value)| CellValue {
            label: a.label.clone(),
            value,
        })
        .collect()
}

/// Runs the full pipeline on one scenario.
pub fn build_report(s: &Scenario, tol: f64, exact: bool, cell: Option<&[(String, f64)]>) -> Result<Report, CliError> {
    let model = build_empirical_model(s, tol)?;
    let lp = assemble_lp(&model)?;
    let res = solve(&lp, tol, exact)?;
    let mut notes = Vec::new();

    let witness = res.witness.map(|w| {
        let chsh_value = w.chsh_value(&lp);
        if chsh_value.is_some() {
            notes.push(CHSH_NOTE.to_string());
        }
        WitnessReport { witness: w, chsh_value }
    });
    if res.table.as_ref().is_some_and(|t| !t.quantum_sample_space) {
        notes.push(NO_SAMPLE_SPACE_NOTE.to_string());
    }

    let mut ranges = Vec::new();
    if let Some(assignment) = cell {
        let outcome = lp.cell_outcome(lp.cell_from_assignment(assignment)?);
        if res.verdict == Verdict::GloballyNoncontextual {
            let (min, max) = range_of(&lp, &outcome, tol, exact)?;
            ranges.push(CellRange {
                cell: cell_values(&lp, &outcome),
                min,
                max,
            });
        } else {
            notes.push("no global distribution, so no cell range".to_string());
        }
    }

    Ok(Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        scenario: s.name().into(),
        labels: model.labels().to_vec(),
        tolerances: Tolerances::new(tol),
        exact,
        contexts: context_tables(&model),
        compatibility: model.compatibility().clone(),
        verdict: res.verdict,
        global_table: res.table,
        witness,
        ranges,
        stats: res.stats,
        notes,
    })
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::GloballyNoncontextual => "GloballyNoncontextual",
        Verdict::GloballyContextual => "GloballyContextual",
    }
}

fn outcome_cells(o: &[f64]) -> Vec<String> {
    o.iter().map(|&x| num(x)).collect()
}

pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario: {}\n", r.scenario));
    out.push_str(&format!("observables: {}\n", r.labels.join(" ")));
    out.push_str(&format!(
        "tolerance: {:e}{}\n",
        r.tolerances.feasibility,
        if r.exact { " (exact rational LP)" } else { "" }
    ));
    for c in &r.contexts {
        out.push_str(&format!("context {}\n", c.label));
        let mut rows = vec![c.members.iter().cloned().chain(["prob".to_string()]).collect::<Vec<_>>()];
        for (o, &p) in c.outcomes.iter().zip(&c.probs) {
            let mut row = outcome_cells(o);
            row.push(num(p));
            rows.push(row);
        }
        out.push_str(&table(&rows));
    }
    out.push_str(&format!(
        "compatibility: {} (max discrepancy {:.3e})\n",
        if r.compatibility.passed { "passed" } else { "FAILED" },
        r.compatibility.max_discrepancy()
    ));
    out.push_str(&format!("verdict: {}\n", verdict_text(r.verdict)));
    if let Some(t) = &r.global_table {
        out.push_str("global table (nonzero cells)\n");
        let mut rows = vec![t.axes.iter().map(|a| a.label.clone()).chain(["prob".to_string()]).collect::<Vec<_>>()];
        let shape: Vec<usize> = t.axes.iter().map(|a| a.eigenvalues.len()).collect();
        for (v, &p) in t.cells.iter().enumerate() {
            if num(p) == "0" {
                continue;
            }
            let mut k = v;
            let mut idx = vec![0; shape.len()];
            for (slot, &s) in idx.iter_mut().zip(&shape).rev() {
                *slot = k % s;
                k /= s;
            }
            let mut row: Vec<String> = idx.iter().zip(&t.axes).map(|(&i, a)| num(a.eigenvalues[i])).collect();
            row.push(num(p));
            rows.push(row);
        }
        out.push_str(&table(&rows));
    }
    if let Some(w) = &r.witness {
        out.push_str("witness: sum of weight * Pr(context outcome) <= bound for every global assignment\n");
        let mut rows = vec![vec!["context".to_string(), "outcome".to_string(), "weight".to_string()]];
        for t in &w.witness.terms {
            if num(t.weight) == "0" {
                continue;
            }
            rows.push(vec![
                r.contexts[t.context].label.clone(),
                format!("({})", outcome_cells(&t.outcome).join(",")),
                num(t.weight),
            ]);
        }
        out.push_str(&table(&rows));
        out.push_str(&format!(
            "bound: {}  value: {}  violation: {}\n",
            num(w.witness.bound),
            num(w.witness.value),
            num(w.witness.violation)
        ));
        if let Some(v) = w.chsh_value {
            out.push_str(&format!("CHSH value: {}\n", num(v)));
        }
    }
    for range in &r.ranges {
        let cell: Vec<String> = range.cell.iter().map(|c| format!("{}={}", c.label, num(c.value))).collect();
        out.push_str(&format!("range {}: {} {}\n", cell.join(","), num(range.min), num(range.max)));
    }
    for n in &r.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    let cell = a.cell.as_deref().map(parse_cell).transpose()?;
    if let Some(spec) = &a.sweep {
        let values = parse_sweep(c, spec)?;
        let mut out = String::from("p,verdict,max_marginal_error\n");
        let mut code = EXIT_OK;
        for p in values {
            let s = load_with(c, Some(p))?;
            let r = build_report(&s, c.tol, c.exact, None)?;
            code = code.max(r.exit_code());
            let err = r
                .global_table
                .as_ref()
                .map(|t| t.max_marginal_error(&build_empirical_model(&s, c.tol).expect("built above")))
                .map_or(String::new(), |e| format!("{e:.3e}"));
            out.push_str(&format!("{},{},{}\n", num(p), verdict_text(r.verdict), err));
        }
        return Ok(Outcome { stdout: out, code });
    }
    let s = load(c)?;
    let r = build_report(&s, c.tol, c.exact, cell.as_deref())?;
    let stdout = if c.json {
        serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
    } else {
        render_text(&r)
    };
    Ok(Outcome {
        stdout,
        code: r.exit_code(),
    })
}

/// `Ok(None)` when the scenario admits no global distribution.
fn range_for(s: &Scenario, assignment: &[(String, f64)], tol: f64, exact: bool) -> Result<Option<CellRange>, CliError> {
    let model = build_empirical_model(s, tol)?;
    let lp = assemble_lp(&model)?;
    let outcome = lp.cell_outcome(lp.cell_from_assignment(assignment)?);
    match range_of(&lp, &outcome, tol, exact) {
        Ok((min, max)) => Ok(Some(CellRange {
            cell: cell_values(&lp, &outcome),
            min,
            max,
        })),
        Err(Error::InfeasibleSystem) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub const NO_GLOBAL: &str = "no global distribution: the scenario is globally contextual";

pub fn cmd_range(a: &RangeArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    let cell = parse_cell(&a.cell)?;
    if let Some(spec) = &a.sweep {
        let values = parse_sweep(c, spec)?;
        let mut out = String::from("p,min,max\n");
        let mut code = EXIT_OK;
        for p in values {
            let s = load_with(c, Some(p))?;
            match range_for(&s, &cell, c.tol, c.exact)? {
                Some(r) => out.push_str(&format!("{},{},{}\n", num(p), num(r.min), num(r.max))),
                None => {
                    code = EXIT_CONTEXTUAL;
                    out.push_str(&format!("{},,\n", num(p)));
                }
            }
        }
        return Ok(Outcome { stdout: out, code });
    }
    let s = load(c)?;
    match range_for(&s, &cell, c.tol, c.exact)? {
        Some(r) => Ok(Outcome {
            stdout: if c.json {
                serde_json::to_string_pretty(&r).expect("range serializes") + "\n"
            } else {
                format!("{} {}\n", num(r.min), num(r.max))
            },
            code: EXIT_OK,
        }),
        None => Ok(Outcome {
            stdout: format!("{NO_GLOBAL}\n"),
            code: EXIT_CONTEXTUAL,
        }),
    }
}

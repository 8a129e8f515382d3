use std::fs::File;
use std::io::{BufWriter, Write};

use serde::{Deserialize, Serialize};

use contextual::simulator::{
    empirical_frequencies, primary_agreement, run_seed, Apparatus, Experiment, FrequencyTable, Handle, RunRecord,
    TwoApparatus,
};

use crate::format::{num, table};
use crate::report::{TOOL, VERSION};
use crate::source::load;
use crate::{CliError, HandleArg, Outcome, SimulateArgs, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub outcome: Vec<f64>,
    pub count: u64,
    pub frequency: f64,
    /// Born-rule probability, when the mode has a closed form.
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub mode: String,
    pub runs: usize,
    pub seed: u64,
    pub axes: Vec<String>,
    pub cells: Vec<SimCell>,
    /// Fraction of counterfactual pairs with equal primary pointers.
    pub primary_agreement: Option<f64>,
    /// Fraction of counterfactual pairs whose secondary outcomes differ.
    pub secondary_disagreement: Option<f64>,
}

impl SimulationReport {
    pub fn cell(&self, outcome: &[f64]) -> Option<&SimCell> {
        self.cells.iter().find(|c| c.outcome == outcome)
    }
}

/// Every index tuple of `shape`, row-major.
fn tuples(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    (0..total)
        .map(|mut k| {
            let mut idx = vec![0; shape.len()];
            for (slot, &s) in idx.iter_mut().zip(shape).rev() {
                *slot = k % s;
                k /= s;
            }
            idx
        })
        .collect()
}

fn cells(
    freq: &FrequencyTable,
    eigenvalues: &[Vec<f64>],
    expected: impl Fn(&[usize]) -> Option<f64>,
) -> Vec<SimCell> {
    let shape: Vec<usize> = eigenvalues.iter().map(Vec::len).collect();
    tuples(&shape)
        .into_iter()
        .map(|idx| {
            let count = freq.count(&idx);
            SimCell {
                outcome: idx.iter().zip(eigenvalues).map(|(&i, e)| e[i]).collect(),
                count,
                frequency: count as f64 / freq.total as f64,
                expected: expected(&idx),
            }
        })
        .collect()
}

fn write_log(path: &std::path::Path, records: &[&RunRecord]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in records {
        writeln!(w, "{}", r.to_json_line()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let s = load(c)?;
    let app = Apparatus::from_scenario(&s, &a.primary, &a.secondary_b, &a.secondary_c, Handle::B)?;
    let exp = Experiment::new(s.rho(), &app)?;
    let ev_a = app.primary().eigenvalues();
    let ev_b = app.secondary(Handle::B).eigenvalues();
    let ev_c = app.secondary(Handle::C).eigenvalues();

    let mut report = SimulationReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        scenario: s.name().into(),
        mode: String::new(),
        runs: a.runs,
        seed: c.seed,
        axes: Vec::new(),
        cells: Vec::new(),
        primary_agreement: None,
        secondary_disagreement: None,
    };

    match a.handle {
        HandleArg::B | HandleArg::C => {
            let (handle, label, ev) = if a.handle == HandleArg::B {
                (Handle::B, &a.secondary_b, &ev_b)
            } else {
                (Handle::C, &a.secondary_c, &ev_c)
            };
            let records = exp.batch(c.seed, a.runs, handle)?;
            if let Some(path) = &a.log {
                write_log(path, &records.iter().collect::<Vec<_>>())?;
            }
            let freq = empirical_frequencies(&records)?;
            let joint = exp.joint_distribution(handle);
            report.mode = handle.to_string();
            report.axes = vec![a.primary.clone(), label.clone()];
            report.cells = cells(&freq, &[ev_a.clone(), ev.clone()], |i| Some(joint[i[0] * ev.len() + i[1]]));
        }
        HandleArg::Pair => {
            let pairs = (0..a.runs)
                .map(|i| exp.counterfactual_pair(run_seed(c.seed, i)))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(path) = &a.log {
                let flat: Vec<&RunRecord> = pairs.iter().flat_map(|(b, c)| [b, c]).collect();
                write_log(path, &flat)?;
            }
            let freq = FrequencyTable::from_outcomes(pairs.iter().map(|(b, c)| vec![b.pointer1, b.pointer2, c.pointer2]))?;
            let differ = pairs.iter().filter(|(b, c)| b.pointer2 != c.pointer2).count();
            report.mode = "pair".into();
            report.axes = vec![a.primary.clone(), a.secondary_b.clone(), a.secondary_c.clone()];
            report.cells = cells(&freq, &[ev_a.clone(), ev_b.clone(), ev_c.clone()], |_| None);
            report.primary_agreement = Some(primary_agreement(&pairs));
            report.secondary_disagreement = Some(differ as f64 / a.runs as f64);
        }
        HandleArg::TwoApparatus => {
            let two = TwoApparatus::from_apparatus(s.rho(), &app)?;
            let recs = two.batch(c.seed, a.runs)?;
            if let Some(path) = &a.log {
                let flat: Vec<&RunRecord> = recs.iter().flat_map(|r| [&r.first, &r.second]).collect();
                write_log(path, &flat)?;
            }
            let freq = FrequencyTable::from_outcomes(recs.iter().map(|r| r.outcome().to_vec()))?;
            let jb = exp.joint_distribution(Handle::B);
            let jc = exp.joint_distribution(Handle::C);
            let (nb, nc) = (ev_b.len(), ev_c.len());
            report.mode = "two-apparatus".into();
            report.axes = vec![
                format!("{}1", a.primary),
                a.secondary_b.clone(),
                format!("{}2", a.primary),
                a.secondary_c.clone(),
            ];
            report.cells = cells(&freq, &[ev_a.clone(), ev_b.clone(), ev_a.clone(), ev_c.clone()], |i| {
                Some(jb[i[0] * nb + i[1]] * jc[i[2] * nc + i[3]])
            });
        }
    }

    let stdout = if c.json {
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        render_text(&report)
    };
    Ok(Outcome { stdout, code: EXIT_OK })
}

pub fn render_text(r: &SimulationReport) -> String {
    let mut out = format!(
        "scenario: {}\nmode: {}  runs: {}  seed: {}\n",
        r.scenario, r.mode, r.runs, r.seed
    );
    let mut rows = vec![r
        .axes
        .iter()
        .cloned()
        .chain(["count", "frequency", "expected"].map(String::from))
        .collect::<Vec<_>>()];
    for cell in &r.cells {
        let mut row: Vec<String> = cell.outcome.iter().map(|&x| num(x)).collect();
        row.push(cell.count.to_string());
        row.push(num(cell.frequency));
        row.push(cell.expected.map_or("-".into(), num));
        rows.push(row);
    }
    out.push_str(&table(&rows));
    if let Some(x) = r.primary_agreement {
        out.push_str(&format!("primary pointer agreement: {}\n", num(x)));
    }
    if let Some(x) = r.secondary_disagreement {
        out.push_str(&format!("secondary outcomes differ: {}\n", num(x)));
    }
    out
}

use serde::{Deserialize, Serialize};

use contextual::contexts::{build_empirical_model, compatibility_graph, enumerate_contexts};
use contextual::spectral::{spectral_decompose, validate_pdi, DEFAULT_COMMUTE_TOL, DEFAULT_GROUPING_TOL};

use crate::format::num;
use crate::source::load;
use crate::{CliError, Outcome, ValidateArgs, EXIT_ERROR, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableLint {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    pub ranks: Vec<usize>,
    pub failed_checks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lint {
    pub scenario: String,
    pub dim: usize,
    pub observables: Vec<ObservableLint>,
    pub commuting_pairs: Vec<(String, String)>,
    pub contexts: Vec<String>,
    pub compatibility_passed: bool,
    pub valid: bool,
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<Outcome, CliError> {
    let c = &a.common;
    let s = load(c)?;
    let labels = s.labels();
    let mut observables = Vec::new();
    for o in s.observables() {
        let pdi = spectral_decompose(&o.matrix, DEFAULT_GROUPING_TOL)?;
        let report = validate_pdi(&pdi, c.tol);
        observables.push(ObservableLint {
            label: o.label.clone(),
            eigenvalues: pdi.eigenvalues(),
            ranks: pdi.blocks().iter().map(|b| b.projector.rank()).collect(),
            failed_checks: report.checks.iter().filter(|ch| !ch.passed).map(|ch| ch.name.clone()).collect(),
        });
    }
    let model = build_empirical_model(&s, c.tol);
    let lint = Lint {
        scenario: s.name().into(),
        dim: s.dim(),
        commuting_pairs: compatibility_graph(&s, DEFAULT_COMMUTE_TOL)
            .into_iter()
            .map(|(i, j)| (labels[i].to_string(), labels[j].to_string()))
            .collect(),
        contexts: enumerate_contexts(&s, DEFAULT_COMMUTE_TOL)
            .iter()
            .map(|ctx| {
                let names: Vec<&str> = ctx.members().iter().map(|&m| labels[m]).collect();
                format!("{{{}}}", names.join(","))
            })
            .collect(),
        compatibility_passed: model.is_ok(),
        valid: model.is_ok() && observables.iter().all(|o| o.failed_checks.is_empty()),
        observables,
    };
    let code = if lint.valid { EXIT_OK } else { EXIT_ERROR };
    let stdout = if c.json {
        serde_json::to_string_pretty(&lint).expect("lint serializes") + "\n"
    } else {
        render_text(&lint)
    };
    Ok(Outcome { stdout, code })
}

fn render_text(l: &Lint) -> String {
    let mut out = format!("scenario: {} (dimension {}, {} observables)\n", l.scenario, l.dim, l.observables.len());
    for o in &l.observables {
        let ev: Vec<String> = o.eigenvalues.iter().map(|&x| num(x)).collect();
        let ranks: Vec<String> = o.ranks.iter().map(ToString::to_string).collect();
        let status = if o.failed_checks.is_empty() {
            "ok".to_string()
        } else {
            format!("failed {}", o.failed_checks.join(", "))
        };
        out.push_str(&format!(
            "observable {}: eigenvalues [{}] ranks [{}] {}\n",
            o.label,
            ev.join(", "),
            ranks.join(", "),
            status
        ));
    }
    let pairs: Vec<String> = l.commuting_pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    out.push_str(&format!("commuting pairs: {}\n", if pairs.is_empty() { "none".into() } else { pairs.join(" ") }));
    out.push_str(&format!("contexts: {}\n", l.contexts.join(" ")));
    out.push_str(&format!(
        "compatibility: {}\n",
        if l.compatibility_passed { "passed" } else { "FAILED" }
    ));
    out.push_str(if l.valid { "valid\n" } else { "invalid\n" });
    out
}

//! Scenarios: a labeled set of observables on one Hilbert space together
//! with the state that assigns them probabilities.
//!
//! File format (JSON, unknown keys rejected, complex numbers as `[re, im]`):
//!
//! ```text
//! {"name": str, "dim": int,
//!  "observables": [{"label": str, "matrix": [[[re, im], ...], ...]}],
//!  "rho": [[[re, im], ...], ...]}
//! ```

use std::collections::HashSet;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{spectral_decompose, ComplexMatrix, DensityOperator, DEFAULT_GROUPING_TOL};

/// Tolerance used when validating scenario files.
pub const SCENARIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub label: String,
    pub matrix: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    dim: usize,
    observables: Vec<Observable>,
    rho: DensityOperator,
}

impl Scenario {
    /// Validates observables (Hermitian, right dimension, unique labels) and the state.
    pub fn new(
        name: impl Into<String>,
        observables: Vec<Observable>,
        rho: ComplexMatrix,
        tol: f64,
    ) -> Result<Self> {
        let dim = rho.dim();
        let mut seen = HashSet::new();
        for obs in &observables {
            if !seen.insert(obs.label.as_str()) {
                return Err(Error::Validation {
                    label: obs.label.clone(),
                    reason: "duplicate label".into(),
                });
            }
            if obs.matrix.dim() != dim {
                return Err(Error::Validation {
                    label: obs.label.clone(),
                    reason: format!("dimension {} does not match rho dimension {dim}", obs.matrix.dim()),
                });
            }
            let residual = obs.matrix.hermiticity_residual();
            if residual > tol * obs.matrix.frobenius_norm().max(1.0) {
                return Err(Error::Validation {
                    label: obs.label.clone(),
                    reason: format!("not Hermitian (residual {residual:.3e})"),
                });
            }
        }
        let rho = validate_density(&rho, tol).map_err(|e| Error::Validation {
            label: "rho".into(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            name: name.into(),
            dim,
            observables,
            rho,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn labels(&self) -> Vec<&str> {
        self.observables.iter().map(|o| o.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.observables.iter().position(|o| o.label == label)
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    /// Same observables, different state.
    pub fn with_rho(&self, rho: ComplexMatrix, tol: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.observables.clone(), rho, tol)
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            name: self.name.clone(),
            dim: self.dim,
            observables: self
                .observables
                .iter()
                .map(|o| ObservableFile {
                    label: o.label.clone(),
                    matrix: to_pairs(&o.matrix),
                })
                .collect(),
            rho: to_pairs(self.rho.matrix()),
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization is infallible")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableFile {
    label: String,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    dim: usize,
    observables: Vec<ObservableFile>,
    rho: Vec<Vec<[f64; 2]>>,
}

fn to_pairs(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    m.rows().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn from_pairs(label: &str, dim: usize, rows: Vec<Vec<[f64; 2]>>) -> Result<ComplexMatrix> {
    if rows.len() != dim {
        return Err(Error::Validation {
            label: label.into(),
            reason: format!("{} rows, expected {dim}", rows.len()),
        });
    }
    let rows = rows
        .into_iter()
        .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(rows).map_err(|e| Error::Validation {
        label: label.into(),
        reason: e.to_string(),
    })
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_slice(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.dim == 0 {
        return Err(Error::Validation {
            label: "dim".into(),
            reason: "dimension must be positive".into(),
        });
    }
    let observables = file
        .observables
        .into_iter()
        .map(|o| {
            let matrix = from_pairs(&o.label, file.dim, o.matrix)?;
            Ok(Observable {
                label: o.label,
                matrix,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rho = from_pairs("rho", file.dim, file.rho)?;
    Scenario::new(file.name, observables, rho, SCENARIO_TOL)
}

/// Checks Hermiticity, positivity (via the spectral decomposition) and unit trace.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> Result<DensityOperator> {
    let residual = m.hermiticity_residual();
    if residual > tol * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let pdi = spectral_decompose(m, DEFAULT_GROUPING_TOL)?;
    let min_eigenvalue = pdi.blocks().last().map(|b| b.eigenvalue).unwrap_or(0.0);
    if min_eigenvalue < -tol {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(Error::BadTrace { trace });
    }
    Ok(DensityOperator::from_validated(m.hermitian_part()))
}

/// Three observables on a qutrit: `A = diag(−1, 1, 1)`, `B = 1 ⊕ σ_x`,
/// `C = diag(1, 1, −1)`, with `ρ = diag(p, r, r)`, `r = (1 − p)/2`.
/// `A` commutes with `B` and `C`; `B` and `C` do not commute.
pub fn builtin_abc(p: f64) -> Result<Scenario> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} must lie in [0, 1]")));
    }
    let r = (1.0 - p) / 2.0;
    let obs = |label: &str, rows: &[&[f64]]| Observable {
        label: label.into(),
        matrix: ComplexMatrix::from_real_rows(rows).expect("static matrix"),
    };
    let observables = vec![
        obs("A", &[&[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]),
        obs("B", &[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
        obs("C", &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -1.0]]),
    ];
    Scenario::new("abc", observables, ComplexMatrix::diagonal(&[p, r, r]), SCENARIO_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChshState {
    /// `(|01⟩ − |10⟩)/√2`
    Singlet,
    /// `|00⟩`
    Product00,
}

impl FromStr for ChshState {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "singlet" => Ok(Self::Singlet),
            "product00" => Ok(Self::Product00),
            other => Err(format!("unknown state `{other}` (expected singlet or product00)")),
        }
    }
}

impl fmt::Display for ChshState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Singlet => "singlet",
            Self::Product00 => "product00",
        })
    }
}

/// Measurement angles `(A, A′, B, B′)` in the x–z plane that maximize the
/// singlet's CHSH violation.
pub const DEFAULT_CHSH_ANGLES: [f64; 4] = [0.0, FRAC_PI_2, 3.0 * FRAC_PI_4, FRAC_PI_4];

/// `cos θ σ_z + sin θ σ_x`
pub fn spin_along(theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    ComplexMatrix::from_real_rows(&[&[c, s], &[s, -c]]).expect("static matrix")
}

/// Two-qubit Bell scenario with observables `A, A′` on the first qubit and
/// `B, B′` on the second, in that order.
pub fn builtin_chsh(state: ChshState, angles: [f64; 4]) -> Result<Scenario> {
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::OutOfRange("angles must be finite".into()));
    }
    let id = ComplexMatrix::identity(2);
    let observables = vec![
        Observable { label: "A".into(), matrix: spin_along(angles[0]).kron(&id) },
        Observable { label: "A'".into(), matrix: spin_along(angles[1]).kron(&id) },
        Observable { label: "B".into(), matrix: id.kron(&spin_along(angles[2])) },
        Observable { label: "B'".into(), matrix: id.kron(&spin_along(angles[3])) },
    ];
    let ket = match state {
        ChshState::Singlet => [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
        ChshState::Product00 => [1.0, 0.0, 0.0, 0.0],
    };
    let ket: Vec<Complex64> = ket.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Scenario::new(
        format!("chsh-{state}"),
        observables,
        ComplexMatrix::outer(&ket),
        SCENARIO_TOL,
    )
}

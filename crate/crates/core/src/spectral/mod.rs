//! Projective decompositions of the identity (PDIs) and the dense complex
//! linear algebra behind them.
//!
//! An observable `A = A†` is represented by its spectral form `A = Σ_j a_j P_j`
//! where the `a_j` are the distinct eigenvalues and the `P_j` are mutually
//! orthogonal projectors summing to the identity. Blocks are always kept in
//! strictly descending eigenvalue order; every downstream outcome ordering
//! (context tables, LP variables, inverse-CDF sampling) inherits it.

mod jacobi;
mod matrix;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use jacobi::{hermitian_eigen, Eigen, OFF_DIAGONAL_TOL};
pub use matrix::ComplexMatrix;

use crate::error::{Error, Result};

/// Relative tolerance for grouping nearly equal eigenvalues.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-8;
/// Relative tolerance for commutation tests.
pub const DEFAULT_COMMUTE_TOL: f64 = 1e-9;
/// Absolute slack allowed when clamping Born probabilities into `[0, 1]`.
pub const BORN_TOL: f64 = 1e-9;

/// Orthogonal projector stored densely; the rank is recovered from the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projector {
    /// Checks Hermiticity, idempotency and integrality of the trace.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let dim = matrix.dim() as f64;
        let herm = matrix.hermiticity_residual();
        if herm > tol * dim {
            return Err(Error::InvalidProjector(format!(
                "not Hermitian (residual {herm:.3e})"
            )));
        }
        let idem = (&(&matrix * &matrix) - &matrix).frobenius_norm();
        if idem > tol * dim {
            return Err(Error::InvalidProjector(format!(
                "not idempotent (residual {idem:.3e})"
            )));
        }
        let tr = matrix.trace().re;
        if (tr - tr.round()).abs() > tol * dim {
            return Err(Error::InvalidProjector(format!("non-integer trace {tr}")));
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    /// Wraps a matrix without validating it; `rank` is `round(Re Tr M)`.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let rank = matrix.trace().re.round().max(0.0) as usize;
        Self { matrix, rank }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub eigenvalue: f64,
    pub projector: Projector,
}

/// Projective decomposition of the identity with eigenvalue labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdi {
    dim: usize,
    blocks: Vec<Block>,
}

impl Pdi {
    /// Builds a PDI and rejects it unless every invariant in [`validate_pdi`] holds.
    pub fn new(blocks: Vec<Block>, tol: f64) -> Result<Self> {
        let pdi = Self::from_blocks_unchecked(blocks)?;
        let report = validate_pdi(&pdi, tol);
        if let Some(bad) = report.checks.iter().find(|c| !c.passed) {
            return Err(Error::InvalidProjector(format!(
                "PDI check `{}` failed (residual {:.3e})",
                bad.name, bad.residual
            )));
        }
        Ok(pdi)
    }

    /// Assembles blocks without checking the PDI invariants. Only the
    /// dimensions are checked.
    pub fn from_blocks_unchecked(blocks: Vec<Block>) -> Result<Self> {
        let dim = blocks
            .first()
            .map(|b| b.projector.dim())
            .ok_or_else(|| Error::InvalidProjector("PDI has no blocks".into()))?;
        for b in &blocks {
            if b.projector.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.projector.dim(),
                });
            }
        }
        Ok(Self { dim, blocks })
    }

    /// The single-block PDI `{I}` labeled with eigenvalue `value`.
    pub fn trivial(dim: usize, value: f64) -> Self {
        Self {
            dim,
            blocks: vec![Block {
                eigenvalue: value,
                projector: Projector::from_matrix_unchecked(ComplexMatrix::identity(dim)),
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.eigenvalue).collect()
    }

    /// `Σ_j a_j P_j`
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.blocks.iter().fold(ComplexMatrix::zeros(self.dim), |acc, b| {
            &acc + &b.projector.matrix().scale(b.eigenvalue)
        })
    }

    pub fn to_refinement(&self) -> Refinement {
        Refinement {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .map(|b| RefinedBlock {
                    outcome: vec![b.eigenvalue],
                    projector: b.projector.clone(),
                })
                .collect(),
        }
    }
}

/// A block of a joint decomposition, labeled by one eigenvalue per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedBlock {
    pub outcome: Vec<f64>,
    pub projector: Projector,
}

/// Common refinement of several compatible PDIs: the nonzero products of
/// their projectors, sorted by outcome tuple in lexicographically descending
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    dim: usize,
    blocks: Vec<RefinedBlock>,
}

impl Refinement {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[RefinedBlock] {
        &self.blocks
    }

    /// Refines further by another PDI.
    pub fn refine(&self, other: &Pdi, tol: f64) -> Result<Refinement> {
        self.projectors_commute_with(other, tol)?;
        let mut blocks = Vec::new();
        for a in &self.blocks {
            for b in other.blocks() {
                let product = (a.projector.matrix() * b.projector.matrix()).hermitian_part();
                if product.frobenius_norm() <= tol {
                    continue;
                }
                let mut outcome = a.outcome.clone();
                outcome.push(b.eigenvalue);
                blocks.push(RefinedBlock {
                    outcome,
                    projector: Projector::from_matrix_unchecked(product),
                });
            }
        }
        blocks.sort_by(|x, y| descending_lex(&x.outcome, &y.outcome));
        Ok(Refinement {
            dim: self.dim,
            blocks,
        })
    }

    fn projectors_commute_with(&self, other: &Pdi, tol: f64) -> Result<()> {
        if self.dim != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim(),
            });
        }
        for a in &self.blocks {
            for b in other.blocks() {
                if !commutes(a.projector.matrix(), b.projector.matrix(), tol)? {
                    return Err(Error::Incompatible(format!(
                        "projector for outcome {:?} does not commute with projector for eigenvalue {}",
                        a.outcome, b.eigenvalue
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn descending_lex(x: &[f64], y: &[f64]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        match b.total_cmp(a) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    x.len().cmp(&y.len())
}

/// Validated density operator: Hermitian, positive semidefinite, unit trace.
/// Construct through [`crate::scenario::validate_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub(crate) fn from_validated(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Groups the eigenvalues of a Hermitian matrix into a canonical PDI.
///
/// Eigenvalues closer than `tol · ‖m‖_F` to their sorted neighbour share a
/// block; the block is labeled with the group mean.
pub fn spectral_decompose(m: &ComplexMatrix, tol: f64) -> Result<Pdi> {
    let norm = m.frobenius_norm();
    let residual = m.hermiticity_residual();
    if residual > tol * norm.max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let eigen = hermitian_eigen(m)?;
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&i, &j| eigen.values[j].total_cmp(&eigen.values[i]));

    let group_tol = tol * norm;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if eigen.values[*g.last().unwrap()] - eigen.values[i] <= group_tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }

    let blocks = groups
        .into_iter()
        .map(|g| {
            let value = snap_integer(
                g.iter().map(|&i| eigen.values[i]).sum::<f64>() / g.len() as f64,
                norm,
            );
            let proj = g
                .iter()
                .fold(ComplexMatrix::zeros(m.dim()), |acc, &i| {
                    &acc + &ComplexMatrix::outer(&eigen.vector(i))
                })
                .hermitian_part();
            Block {
                eigenvalue: value,
                projector: Projector {
                    matrix: proj,
                    rank: g.len(),
                },
            }
        })
        .collect();
    Ok(Pdi {
        dim: m.dim(),
        blocks,
    })
}

/// Eigenvalues within round-off of an integer are reported as that integer,
/// so outcome labels such as `±1` compare exactly downstream.
fn snap_integer(x: f64, scale: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * scale.max(1.0) {
        r
    } else {
        x
    }
}

/// `‖mn − nm‖_F ≤ tol · ‖m‖_F · ‖n‖_F`
pub fn commutes(m: &ComplexMatrix, n: &ComplexMatrix, tol: f64) -> Result<bool> {
    m.check_same_dim(n)?;
    let comm = &(m * n) - &(n * m);
    Ok(comm.frobenius_norm() <= tol * m.frobenius_norm() * n.frobenius_norm())
}

/// All nonzero products `P_j Q_k`, labeled `(a_j, b_k)`.
pub fn common_refinement(a: &Pdi, b: &Pdi, tol: f64) -> Result<Refinement> {
    a.to_refinement().refine(b, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Measures every PDI invariant; never fails.
pub fn validate_pdi(p: &Pdi, tol: f64) -> ValidationReport {
    let dim = p.dim() as f64;
    let mut checks = Vec::new();
    let mut push = |name: &str, residual: f64, passed: bool| {
        checks.push(ValidationCheck {
            name: name.to_string(),
            passed,
            residual,
        })
    };

    let herm = p
        .blocks
        .iter()
        .map(|b| b.projector.matrix().hermiticity_residual())
        .fold(0.0, f64::max);
    push("hermitian", herm, herm <= tol * dim);

    let idem = p
        .blocks
        .iter()
        .map(|b| {
            let m = b.projector.matrix();
            (&(m * m) - m).frobenius_norm()
        })
        .fold(0.0, f64::max);
    push("idempotent", idem, idem <= tol * dim);

    let mut trace_ok = true;
    let mut trace_res: f64 = 0.0;
    for b in &p.blocks {
        let tr = b.projector.matrix().trace().re;
        let r = (tr - tr.round()).abs();
        trace_res = trace_res.max(r);
        trace_ok &= r <= tol && tr.round() as i64 == b.projector.rank() as i64;
    }
    push("integer_trace", trace_res, trace_ok);

    let worst_step = p
        .blocks
        .windows(2)
        .map(|w| w[1].eigenvalue - w[0].eigenvalue)
        .fold(f64::NEG_INFINITY, f64::max);
    let descending = p.blocks.windows(2).all(|w| w[0].eigenvalue > w[1].eigenvalue);
    push("descending", worst_step.max(0.0), descending);

    let mut orth: f64 = 0.0;
    for (j, a) in p.blocks.iter().enumerate() {
        for b in &p.blocks[j + 1..] {
            orth = orth.max((a.projector.matrix() * b.projector.matrix()).frobenius_norm());
        }
    }
    push("orthogonal", orth, orth <= tol);

    let sum = p
        .blocks
        .iter()
        .fold(ComplexMatrix::zeros(p.dim()), |acc, b| &acc + b.projector.matrix());
    let complete = (&sum - &ComplexMatrix::identity(p.dim())).frobenius_norm();
    push("complete", complete, complete <= tol);

    let rank_sum: usize = p.blocks.iter().map(|b| b.projector.rank()).sum();
    let rank_gap = (rank_sum as f64 - dim).abs();
    push("rank_sum", rank_gap, rank_sum == p.dim());

    ValidationReport { checks }
}

/// `Re Tr(ρ M)` for a Hermitian operator `M`, without range checks.
pub fn born_weight(rho: &DensityOperator, m: &ComplexMatrix) -> Result<f64> {
    rho.matrix().check_same_dim(m)?;
    Ok(rho.matrix().trace_product(m).re)
}

/// Clamps a probability that is within [`BORN_TOL`] of `[0, 1]`.
pub(crate) fn clamp_probability(x: f64) -> Result<f64> {
    if !(-BORN_TOL..=1.0 + BORN_TOL).contains(&x) {
        return Err(Error::OutOfRange(format!("probability {x} outside [0, 1]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Born-rule probability `Tr(ρ P)`.
pub fn born_probability(rho: &DensityOperator, p: &Projector) -> Result<f64> {
    clamp_probability(born_weight(rho, p.matrix())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn abc() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let a = ComplexMatrix::diagonal(&[-1.0, 1.0, 1.0]);
        let b = ComplexMatrix::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])
            .unwrap();
        let c = ComplexMatrix::diagonal(&[1.0, 1.0, -1.0]);
        (a, b, c)
    }

    fn close(x: &ComplexMatrix, y: &ComplexMatrix, tol: f64) -> bool {
        (x - y).frobenius_norm() <= tol
    }

    fn rho(entries: &[f64]) -> DensityOperator {
        DensityOperator::from_validated(ComplexMatrix::diagonal(entries))
    }

    #[test]
    fn decompose_a() {
        let (a, _, _) = abc();
        let pdi = spectral_decompose(&a, DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(pdi.len(), 2);
        assert!((pdi.blocks()[0].eigenvalue - 1.0).abs() < 1e-12);
        assert!((pdi.blocks()[1].eigenvalue + 1.0).abs() < 1e-12);
        assert_eq!(pdi.blocks()[0].projector.rank(), 2);
        assert_eq!(pdi.blocks()[1].projector.rank(), 1);
        assert!(close(
            pdi.blocks()[0].projector.matrix(),
            &ComplexMatrix::diagonal(&[0.0, 1.0, 1.0]),
            1e-12
        ));
        assert!(close(
            pdi.blocks()[1].projector.matrix(),
            &ComplexMatrix::diagonal(&[1.0, 0.0, 0.0]),
            1e-12
        ));
    }

    #[test]
    fn decompose_identity() {
        let pdi = spectral_decompose(&ComplexMatrix::identity(3), DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(pdi.len(), 1);
        assert_eq!(pdi.blocks()[0].eigenvalue, 1.0);
        assert_eq!(pdi.blocks()[0].projector.rank(), 3);
    }

    #[test]
    fn decompose_b_matches_hand_diagonalized_sigma_x() {
        let (_, b, _) = abc();
        let pdi = spectral_decompose(&b, DEFAULT_GROUPING_TOL).unwrap();
        let plus = ComplexMatrix::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5], &[0.0, 0.5, 0.5]])
            .unwrap();
        let minus =
            ComplexMatrix::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.5, -0.5], &[0.0, -0.5, 0.5]])
                .unwrap();
        assert_eq!(pdi.eigenvalues().len(), 2);
        assert!((pdi.blocks()[0].eigenvalue - 1.0).abs() < 1e-12);
        assert!(close(pdi.blocks()[0].projector.matrix(), &plus, 1e-12));
        assert!(close(pdi.blocks()[1].projector.matrix(), &minus, 1e-12));
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            spectral_decompose(&m, DEFAULT_GROUPING_TOL),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn commutation_examples() {
        let (a, b, c) = abc();
        assert!(commutes(&a, &b, DEFAULT_COMMUTE_TOL).unwrap());
        assert!(commutes(&a, &c, DEFAULT_COMMUTE_TOL).unwrap());
        assert!(!commutes(&b, &c, DEFAULT_COMMUTE_TOL).unwrap());
        assert!(commutes(&b, &b, DEFAULT_COMMUTE_TOL).unwrap());
        assert!(matches!(
            commutes(&a, &ComplexMatrix::identity(2), DEFAULT_COMMUTE_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn refinement_of_a_and_b() {
        let (a, b, c) = abc();
        let pa = spectral_decompose(&a, DEFAULT_GROUPING_TOL).unwrap();
        let pb = spectral_decompose(&b, DEFAULT_GROUPING_TOL).unwrap();
        let r = common_refinement(&pa, &pb, DEFAULT_COMMUTE_TOL).unwrap();
        let outcomes: Vec<Vec<f64>> = r
            .blocks()
            .iter()
            .map(|b| b.outcome.iter().map(|x| x.round()).collect())
            .collect();
        assert_eq!(outcomes, vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(r.blocks().iter().all(|b| b.projector.rank() == 1));

        let pc = spectral_decompose(&c, DEFAULT_GROUPING_TOL).unwrap();
        assert!(matches!(
            common_refinement(&pb, &pc, DEFAULT_COMMUTE_TOL),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn refinement_with_trivial_and_self() {
        let (a, _, _) = abc();
        let pa = spectral_decompose(&a, DEFAULT_GROUPING_TOL).unwrap();
        let r = common_refinement(&pa, &Pdi::trivial(3, 1.0), DEFAULT_COMMUTE_TOL).unwrap();
        assert_eq!(r.blocks().len(), pa.len());
        for (rb, b) in r.blocks().iter().zip(pa.blocks()) {
            assert!(close(rb.projector.matrix(), b.projector.matrix(), 1e-12));
        }
        let r = common_refinement(&pa, &pa, DEFAULT_COMMUTE_TOL).unwrap();
        assert_eq!(r.blocks().len(), 2);
        for (rb, b) in r.blocks().iter().zip(pa.blocks()) {
            assert_eq!(rb.outcome, vec![b.eigenvalue, b.eigenvalue]);
            assert!(close(rb.projector.matrix(), b.projector.matrix(), 1e-12));
        }
    }

    #[test]
    fn validate_reports() {
        let (a, _, _) = abc();
        let pa = spectral_decompose(&a, DEFAULT_GROUPING_TOL).unwrap();
        assert!(validate_pdi(&pa, 1e-9).passed());

        let id = Projector::from_matrix_unchecked(ComplexMatrix::identity(3));
        let bad = Pdi::from_blocks_unchecked(vec![
            Block { eigenvalue: 1.0, projector: id.clone() },
            Block { eigenvalue: 0.0, projector: id },
        ])
        .unwrap();
        let report = validate_pdi(&bad, 1e-9);
        assert!(!report.check("orthogonal").unwrap().passed);
        assert!(!report.check("complete").unwrap().passed);
        assert!(Pdi::new(bad.blocks().to_vec(), 1e-9).is_err());
    }

    #[test]
    fn perturbed_projector_reports_idempotency_residual() {
        let (a, _, _) = abc();
        let pa = spectral_decompose(&a, DEFAULT_GROUPING_TOL).unwrap();
        let mut blocks = pa.blocks().to_vec();
        let mut m = blocks[0].projector.matrix().clone();
        m[(1, 1)] += Complex64::new(1e-3, 0.0);
        // Independent residual: (1 + ε)² − (1 + ε) = ε + ε² on the perturbed entry.
        let expected = 1e-3 + 1e-6;
        blocks[0].projector = Projector::from_matrix_unchecked(m);
        let report = validate_pdi(&Pdi::from_blocks_unchecked(blocks).unwrap(), 1e-9);
        let idem = report.check("idempotent").unwrap();
        assert!(!idem.passed);
        assert!((idem.residual - expected).abs() < 1e-12);
    }

    #[test]
    fn born_examples() {
        let third = 1.0 / 3.0;
        let p = Projector::new(ComplexMatrix::diagonal(&[0.0, 1.0, 1.0]), 1e-12).unwrap();
        let uniform = rho(&[third, third, third]);
        assert!((born_probability(&uniform, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let id = Projector::new(ComplexMatrix::identity(3), 1e-12).unwrap();
        assert!((born_probability(&uniform, &id).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(born_probability(&rho(&[1.0, 0.0, 0.0]), &p).unwrap(), 0.0);
        let p2 = Projector::new(ComplexMatrix::identity(2), 1e-12).unwrap();
        assert!(matches!(
            born_probability(&uniform, &p2),
            Err(Error::DimensionMismatch { .. })
        ));
        // A non-normalized "state" pushes the result out of range.
        let heavy = rho(&[2.0, 0.0, 0.0]);
        assert!(matches!(born_probability(&heavy, &id), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn projector_constructor_rejects_non_idempotent() {
        assert!(Projector::new(ComplexMatrix::diagonal(&[0.5, 1.0]), 1e-9).is_err());
    }
}

//! Contexts (maximal sets of pairwise commuting observables), their
//! Born-rule joint distributions, and the empirical model they form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::spectral::{
    born_weight, commutes, spectral_decompose, ComplexMatrix, Pdi, DEFAULT_GROUPING_TOL,
};

/// Indices into a scenario's observable list, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Context {
    members: Vec<usize>,
}

impl Context {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, obs: usize) -> bool {
        self.members.binary_search(&obs).is_ok()
    }

    pub fn intersection(&self, other: &Context) -> Vec<usize> {
        self.members
            .iter()
            .copied()
            .filter(|m| other.contains(*m))
            .collect()
    }
}

/// Joint outcome distribution of one context.
///
/// Outcomes enumerate the full Cartesian product of the members' eigenvalue
/// lists in row-major order (last member varies fastest); zero-probability
/// tuples are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDistribution {
    context: Context,
    eigenvalues: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl ContextDistribution {
    /// `eigenvalues[i]` lists the outcomes of `context.members()[i]`.
    pub fn new(context: Context, eigenvalues: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != context.len() {
            return Err(Error::DimensionMismatch {
                expected: context.len(),
                found: eigenvalues.len(),
            });
        }
        let cells: usize = eigenvalues.iter().map(Vec::len).product();
        if probs.len() != cells {
            return Err(Error::DimensionMismatch {
                expected: cells,
                found: probs.len(),
            });
        }
        Ok(Self {
            context,
            eigenvalues,
            probs,
        })
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.eigenvalues.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Per-member block indices of cell `k`.
    pub fn index_tuple(&self, k: usize) -> Vec<usize> {
        unravel(k, &self.shape())
    }

    pub fn outcome(&self, k: usize) -> Vec<f64> {
        self.index_tuple(k)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&i, vals)| vals[i])
            .collect()
    }

    pub fn outcomes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.outcome(k)).collect()
    }

    /// Probability of the cell whose outcome tuple is `outcome` (matched within 1e-9).
    pub fn prob_of(&self, outcome: &[f64]) -> Option<f64> {
        (0..self.len())
            .find(|&k| {
                self.outcome(k)
                    .iter()
                    .zip(outcome)
                    .all(|(a, b)| (a - b).abs() <= 1e-9)
            })
            .map(|k| self.probs[k])
    }
}

pub(crate) fn unravel(mut k: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for (slot, &n) in out.iter_mut().zip(shape).rev() {
        *slot = k % n;
        k /= n;
    }
    out
}

pub(crate) fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiscrepancy {
    pub first: usize,
    pub second: usize,
    pub shared: Vec<usize>,
    pub discrepancy: f64,
    pub passed: bool,
}

/// Marginal agreement of every overlapping pair of contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub tol: f64,
    pub pairs: Vec<PairDiscrepancy>,
    pub passed: bool,
}

impl CompatibilityReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.pairs.iter().map(|p| p.discrepancy).fold(0.0, f64::max)
    }
}

/// One distribution per maximal context, plus the marginal agreement check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModel {
    name: String,
    labels: Vec<String>,
    eigenvalues: Vec<Vec<f64>>,
    contexts: Vec<ContextDistribution>,
    compatibility: CompatibilityReport,
}

impl EmpiricalModel {
    /// Assembles a model from explicit tables (no quantum state needed) and
    /// records, without enforcing, the compatibility check.
    pub fn from_tables(
        name: impl Into<String>,
        labels: Vec<String>,
        eigenvalues: Vec<Vec<f64>>,
        contexts: Vec<ContextDistribution>,
        tol: f64,
    ) -> Result<Self> {
        if labels.len() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: eigenvalues.len(),
            });
        }
        for d in &contexts {
            for (&m, vals) in d.context().members().iter().zip(d.eigenvalues()) {
                if m >= labels.len() {
                    return Err(Error::NotSubset(m));
                }
                if vals != &eigenvalues[m] {
                    return Err(Error::Validation {
                        label: labels[m].clone(),
                        reason: "context table uses a different eigenvalue list".into(),
                    });
                }
            }
        }
        let mut model = Self {
            name: name.into(),
            labels,
            eigenvalues,
            contexts,
            compatibility: CompatibilityReport {
                tol,
                pairs: Vec::new(),
                passed: true,
            },
        };
        model.compatibility = check_compatibility(&model, tol);
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Eigenvalues of every observable, canonical descending order.
    pub fn eigenvalues(&self) -> &[Vec<f64>] {
        &self.eigenvalues
    }

    pub fn contexts(&self) -> &[ContextDistribution] {
        &self.contexts
    }

    pub fn compatibility(&self) -> &CompatibilityReport {
        &self.compatibility
    }

    /// True when a single context holds every observable.
    pub fn is_single_context(&self) -> bool {
        self.contexts.len() == 1 && self.contexts[0].context().len() == self.labels.len()
    }

    pub fn context_label(&self, c: &Context) -> String {
        let names: Vec<&str> = c.members().iter().map(|&m| self.labels[m].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// Edges `(i, j)`, `i < j`, between commuting observables.
pub fn compatibility_graph(s: &Scenario, tol: f64) -> Vec<(usize, usize)> {
    let obs = s.observables();
    let mut edges = Vec::new();
    for i in 0..obs.len() {
        for j in (i + 1)..obs.len() {
            // Dimensions are validated by the scenario, so commutes cannot fail.
            if commutes(&obs[i].matrix, &obs[j].matrix, tol).unwrap_or(false) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Maximal cliques of the compatibility graph, sorted lexicographically.
pub fn enumerate_contexts(s: &Scenario, tol: f64) -> Vec<Context> {
    let n = s.observables().len();
    let mut adj = vec![vec![false; n]; n];
    for (i, j) in compatibility_graph(s, tol) {
        adj[i][j] = true;
        adj[j][i] = true;
    }
    let mut cliques = Vec::new();
    bron_kerbosch(&adj, Vec::new(), (0..n).collect(), Vec::new(), &mut cliques);
    let mut contexts: Vec<Context> = cliques.into_iter().map(Context::new).collect();
    contexts.sort();
    contexts
}

fn bron_kerbosch(
    adj: &[Vec<bool>],
    r: Vec<usize>,
    p: Vec<usize>,
    x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() && !r.is_empty() {
            out.push(r);
        }
        return;
    }
    // Pivot on the vertex of P ∪ X with the most neighbours in P.
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count())
        .expect("P is nonempty");
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
    let (mut p, mut x) = (p, x);
    for v in candidates {
        let mut r_next = r.clone();
        r_next.push(v);
        let p_next = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let x_next = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r_next, p_next, x_next, out);
        p.retain(|&u| u != v);
        x.push(v);
    }
}

/// Spectral decompositions of every observable in a scenario.
pub fn observable_pdis(s: &Scenario) -> Result<Vec<Pdi>> {
    s.observables()
        .iter()
        .map(|o| {
            spectral_decompose(&o.matrix, DEFAULT_GROUPING_TOL).map_err(|e| Error::Validation {
                label: o.label.clone(),
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Born-rule table `Tr(ρ P_{j1} Q_{j2} …)` of a context.
pub fn context_distribution(s: &Scenario, c: &Context, tol: f64) -> Result<ContextDistribution> {
    let pdis = observable_pdis(s)?;
    distribution_from_pdis(s, &pdis, c, tol)
}

pub(crate) fn distribution_from_pdis(
    s: &Scenario,
    pdis: &[Pdi],
    c: &Context,
    tol: f64,
) -> Result<ContextDistribution> {
    let members = c.members();
    if members.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&m) = members.iter().find(|&&m| m >= pdis.len()) {
        return Err(Error::NotSubset(m));
    }
    let obs = s.observables();
    for (k, &i) in members.iter().enumerate() {
        for &j in &members[k + 1..] {
            if !commutes(&obs[i].matrix, &obs[j].matrix, tol)? {
                return Err(Error::Incompatible(format!(
                    "{} and {} do not commute",
                    obs[i].label, obs[j].label
                )));
            }
        }
    }

    let shape: Vec<usize> = members.iter().map(|&m| pdis[m].len()).collect();
    let cells: usize = shape.iter().product();
    let mut probs = Vec::with_capacity(cells);
    for k in 0..cells {
        let idx = unravel(k, &shape);
        let product = members
            .iter()
            .zip(&idx)
            .fold(ComplexMatrix::identity(s.dim()), |acc, (&m, &j)| {
                &acc * pdis[m].blocks()[j].projector.matrix()
            })
            .hermitian_part();
        let w = born_weight(s.rho(), &product)?;
        if w < -tol || w > 1.0 + tol {
            return Err(Error::OutOfRange(format!("context probability {w}")));
        }
        probs.push(w.clamp(0.0, 1.0));
    }
    let eigenvalues = members.iter().map(|&m| pdis[m].eigenvalues()).collect();
    ContextDistribution::new(c.clone(), eigenvalues, probs)
}

/// Sums out every member not in `keep`.
pub fn marginalize(d: &ContextDistribution, keep: &[usize]) -> Result<ContextDistribution> {
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&m) = keep.iter().find(|&&m| !d.context().contains(m)) {
        return Err(Error::NotSubset(m));
    }
    let target = Context::new(keep.to_vec());
    let positions: Vec<usize> = target
        .members()
        .iter()
        .map(|m| d.context().members().iter().position(|x| x == m).unwrap())
        .collect();
    let shape = d.shape();
    let sub_shape: Vec<usize> = positions.iter().map(|&p| shape[p]).collect();
    let mut probs = vec![0.0; sub_shape.iter().product()];
    for (k, &pr) in d.probs().iter().enumerate() {
        let idx = unravel(k, &shape);
        let sub: Vec<usize> = positions.iter().map(|&p| idx[p]).collect();
        probs[ravel(&sub, &sub_shape)] += pr;
    }
    let eigenvalues = positions.iter().map(|&p| d.eigenvalues()[p].clone()).collect();
    ContextDistribution::new(target, eigenvalues, probs)
}

/// Compares marginals on the intersection of every overlapping context pair.
pub fn check_compatibility(m: &EmpiricalModel, tol: f64) -> CompatibilityReport {
    let mut pairs = Vec::new();
    let ctxs = m.contexts();
    for i in 0..ctxs.len() {
        for j in (i + 1)..ctxs.len() {
            let shared = ctxs[i].context().intersection(ctxs[j].context());
            if shared.is_empty() {
                continue;
            }
            let discrepancy = match (marginalize(&ctxs[i], &shared), marginalize(&ctxs[j], &shared)) {
                (Ok(a), Ok(b)) => a
                    .probs()
                    .iter()
                    .zip(b.probs())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max),
                _ => f64::INFINITY,
            };
            pairs.push(PairDiscrepancy {
                first: i,
                second: j,
                shared,
                discrepancy,
                passed: discrepancy <= tol,
            });
        }
    }
    let passed = pairs.iter().all(|p| p.passed);
    CompatibilityReport { tol, pairs, passed }
}

/// Contexts, their Born tables, and the compatibility check, in one pass.
pub fn build_empirical_model(s: &Scenario, tol: f64) -> Result<EmpiricalModel> {
    let pdis = observable_pdis(s)?;
    let contexts = enumerate_contexts(s, tol)
        .iter()
        .map(|c| distribution_from_pdis(s, &pdis, c, tol))
        .collect::<Result<Vec<_>>>()?;
    let model = EmpiricalModel::from_tables(
        s.name(),
        s.labels().into_iter().map(String::from).collect(),
        pdis.iter().map(Pdi::eigenvalues).collect(),
        contexts,
        tol,
    )?;
    if !model.compatibility.passed {
        return Err(Error::IncompatibleMarginals {
            max_discrepancy: model.compatibility.max_discrepancy(),
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin_abc, builtin_chsh, ChshState, Observable, DEFAULT_CHSH_ANGLES};
    use crate::spectral::DEFAULT_COMMUTE_TOL as TOL;

    fn rounded(v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x.round()).collect()
    }

    fn assert_table(d: &ContextDistribution, expected: &[(f64, f64, f64)]) {
        assert_eq!(d.len(), expected.len());
        for &(a, b, p) in expected {
            let got = d.prob_of(&[a, b]).unwrap();
            assert!((got - p).abs() < 1e-12, "({a},{b}): {got} vs {p}");
        }
    }

    #[test]
    fn abc_graph_and_contexts() {
        let s = builtin_abc(0.3).unwrap();
        assert_eq!(compatibility_graph(&s, TOL), vec![(0, 1), (0, 2)]);
        assert_eq!(
            enumerate_contexts(&s, TOL),
            vec![Context::new(vec![0, 1]), Context::new(vec![0, 2])]
        );
    }

    #[test]
    fn chsh_graph_and_contexts() {
        let s = builtin_chsh(ChshState::Singlet, DEFAULT_CHSH_ANGLES).unwrap();
        assert_eq!(compatibility_graph(&s, TOL), vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        let ctx: Vec<Vec<usize>> = enumerate_contexts(&s, TOL)
            .iter()
            .map(|c| c.members().to_vec())
            .collect();
        assert_eq!(ctx, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
    }

    #[test]
    fn single_and_all_commuting() {
        let one = Scenario::new(
            "one",
            vec![Observable { label: "Z".into(), matrix: ComplexMatrix::diagonal(&[1.0, -1.0]) }],
            ComplexMatrix::diagonal(&[1.0, 0.0]),
            1e-9,
        )
        .unwrap();
        assert!(compatibility_graph(&one, TOL).is_empty());
        assert_eq!(enumerate_contexts(&one, TOL), vec![Context::new(vec![0])]);
        let model = build_empirical_model(&one, TOL).unwrap();
        assert_eq!(model.contexts().len(), 1);

        let diag = |d: &[f64], l: &str| Observable { label: l.into(), matrix: ComplexMatrix::diagonal(d) };
        let all = Scenario::new(
            "diag",
            vec![diag(&[1.0, 2.0, 3.0], "X"), diag(&[1.0, 1.0, 0.0], "Y"), diag(&[0.0, 5.0, 0.0], "Z")],
            ComplexMatrix::diagonal(&[0.2, 0.3, 0.5]),
            1e-9,
        )
        .unwrap();
        assert_eq!(enumerate_contexts(&all, TOL), vec![Context::new(vec![0, 1, 2])]);
    }

    #[test]
    fn abc_tables() {
        let (p, r) = (0.2, 0.4);
        let s = builtin_abc(p).unwrap();
        let ab = context_distribution(&s, &Context::new(vec![0, 1]), TOL).unwrap();
        let ac = context_distribution(&s, &Context::new(vec![0, 2]), TOL).unwrap();
        let expected = [(1.0, 1.0, r), (1.0, -1.0, r), (-1.0, 1.0, p), (-1.0, -1.0, 0.0)];
        assert_table(&ab, &expected);
        assert_table(&ac, &expected);
        assert_eq!(rounded(&ab.outcome(0)), vec![1.0, 1.0]);
        assert_eq!(rounded(&ab.outcome(3)), vec![-1.0, -1.0]);

        let third = 1.0 / 3.0;
        let s = builtin_abc(third).unwrap();
        let a = context_distribution(&s, &Context::new(vec![0]), TOL).unwrap();
        assert!((a.probs()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((a.probs()[1] - third).abs() < 1e-12);

        let s = builtin_abc(0.5).unwrap();
        assert!(matches!(
            context_distribution(&s, &Context::new(vec![1, 2]), TOL),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn marginals_of_first_box() {
        let (p, r) = (0.2, 0.4);
        let s = builtin_abc(p).unwrap();
        let ab = context_distribution(&s, &Context::new(vec![0, 1]), TOL).unwrap();
        let b = marginalize(&ab, &[1]).unwrap();
        assert!((b.probs()[0] - (p + r)).abs() < 1e-12 && (b.probs()[1] - r).abs() < 1e-12);
        let a = marginalize(&ab, &[0]).unwrap();
        assert!((a.probs()[0] - 2.0 * r).abs() < 1e-12 && (a.probs()[1] - p).abs() < 1e-12);
        assert_eq!(marginalize(&ab, &[1, 0]).unwrap(), ab);
        assert_eq!(marginalize(&ab, &[]), Err(Error::EmptySubset));
        assert_eq!(marginalize(&ab, &[2]), Err(Error::NotSubset(2)));
    }

    #[test]
    fn compatibility_reports() {
        let s = builtin_abc(0.2).unwrap();
        let model = build_empirical_model(&s, TOL).unwrap();
        let report = model.compatibility();
        assert!(report.passed);
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].shared, vec![0]);

        let chsh = builtin_chsh(ChshState::Singlet, DEFAULT_CHSH_ANGLES).unwrap();
        let model = build_empirical_model(&chsh, TOL).unwrap();
        assert_eq!(model.compatibility().pairs.len(), 4);
        assert!(model.compatibility().max_discrepancy() < 1e-12);

        // Perturb the {A,B} table by 0.05 in one row.
        let model = build_empirical_model(&s, TOL).unwrap();
        let mut tables = model.contexts().to_vec();
        let d = &tables[0];
        let mut probs = d.probs().to_vec();
        probs[0] += 0.05;
        probs[2] -= 0.05;
        tables[0] = ContextDistribution::new(d.context().clone(), d.eigenvalues().to_vec(), probs).unwrap();
        let bad = EmpiricalModel::from_tables(
            "perturbed",
            model.labels().to_vec(),
            model.eigenvalues().to_vec(),
            tables,
            1e-9,
        )
        .unwrap();
        let pair = &bad.compatibility().pairs[0];
        assert!(!pair.passed);
        assert!((pair.discrepancy - 0.05).abs() < 1e-12);
    }
}

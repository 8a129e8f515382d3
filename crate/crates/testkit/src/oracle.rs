//! Exact-rational reference for the global-distribution question.
//!
//! Scenarios are built from rational orthogonal matrices so every quantity
//! is exact. All observables have spectrum in `{+1, −1}`, hence their
//! eigenprojectors are `(I ± O)/2`. The oracle derives contexts by brute
//! force over subsets and decides feasibility of `A x = b, x ≥ 0` by
//! enumerating bases and solving each one in fraction-free integer
//! arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use contextual::scenario::{Observable, Scenario};
use contextual::Result;

use crate::rational::{cayley, q, QMatrix, Q};

/// A scenario with rational, ±1-spectrum observables and a rational state.
#[derive(Debug, Clone)]
pub struct ExactScenario {
    pub name: String,
    pub observables: Vec<QMatrix>,
    pub rho: QMatrix,
}

impl ExactScenario {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// The floating-point image, ready for the library pipeline.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let observables = self
            .observables
            .iter()
            .enumerate()
            .map(|(k, o)| Observable {
                label: format!("O{k}"),
                matrix: o.to_complex(),
            })
            .collect();
        Scenario::new(self.name.clone(), observables, self.rho.to_complex(), 1e-9)
    }
}

const PYTHAGOREAN: [(i64, i64, i64); 4] = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25)];

/// A rational point `(cos θ, sin θ)` on the unit circle.
fn rational_angle<R: Rng>(rng: &mut R) -> (Q, Q) {
    let choices: Vec<(Q, Q)> = PYTHAGOREAN
        .iter()
        .flat_map(|&(a, b, c)| [(q(a, c), q(b, c)), (q(b, c), q(a, c))])
        .chain([(q(1, 1), q(0, 1)), (q(0, 1), q(1, 1))])
        .collect();
    let (c, s) = choices[rng.random_range(0..choices.len())].clone();
    let c = if rng.random_bool(0.5) { -c } else { c };
    let s = if rng.random_bool(0.5) { -s } else { s };
    (c, s)
}

/// `cos θ · Z + sin θ · X`.
fn qubit_observable(c: Q, s: Q) -> QMatrix {
    QMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => c.clone(),
        (1, 1) => -c.clone(),
        _ => s.clone(),
    })
}

fn singlet() -> QMatrix {
    QMatrix::from_fn(4, |i, j| match (i, j) {
        (1, 1) | (2, 2) => q(1, 2),
        (1, 2) | (2, 1) => q(-1, 2),
        _ => q(0, 1),
    })
}

fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> QMatrix {
    let mut s = QMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = q(rng.random_range(-3..=3), rng.random_range(1..=2));
            s[(j, i)] = -v.clone();
            s[(i, j)] = v;
        }
    }
    cayley(&s)
}

/// Mixture of rank-1 projectors onto random integer vectors.
fn random_state<R: Rng>(rng: &mut R, n: usize) -> QMatrix {
    let terms = rng.random_range(1..=3);
    let mut rho = QMatrix::zeros(n);
    let weights: Vec<i64> = (0..terms).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    for w in weights {
        let v: Vec<i64> = loop {
            let v: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
            if v.iter().any(|&x| x != 0) {
                break v;
            }
        };
        let norm: i64 = v.iter().map(|x| x * x).sum();
        let coef = q(w, total * norm);
        let proj = QMatrix::from_fn(n, |i, j| q(v[i] * v[j], 1) * &coef);
        rho = &rho + &proj;
    }
    rho
}

/// Qubit-pair scenario: local ±1 observables on each side, state a
/// singlet mixed with white noise or a random two-qubit state.
pub fn random_bipartite<R: Rng>(rng: &mut R, index: usize) -> ExactScenario {
    let (n_alice, n_bob) = if rng.random_bool(0.6) {
        (2, 2)
    } else {
        (rng.random_range(1..=2), rng.random_range(1..=2))
    };
    let id = QMatrix::identity(2);
    let mut observables = Vec::new();
    for _ in 0..n_alice {
        let (c, s) = rational_angle(rng);
        observables.push(qubit_observable(c, s).kron(&id));
    }
    for _ in 0..n_bob {
        let (c, s) = rational_angle(rng);
        observables.push(id.kron(&qubit_observable(c, s)));
    }
    observables.shuffle(rng);
    let rho = if rng.random_bool(0.75) {
        let w = if rng.random_bool(0.3) { q(1, 1) } else { q(rng.random_range(0..=10), 10) };
        let noise = QMatrix::identity(4).scale(&q(1, 4));
        &singlet().scale(&w) + &noise.scale(&(Q::one() - &w))
    } else {
        random_state(rng, 4)
    };
    ExactScenario {
        name: format!("bipartite-{index}"),
        observables,
        rho,
    }
}

/// Single system of dimension 3 or 4; observables diagonal in one of a few
/// shared rational bases, so some pairs commute and others do not.
pub fn random_single_system<R: Rng>(rng: &mut R, index: usize) -> ExactScenario {
    let n = rng.random_range(3..=4);
    let bases: Vec<QMatrix> = (0..rng.random_range(1..=3)).map(|_| random_orthogonal(rng, n)).collect();
    let count = rng.random_range(2..=4);
    let observables = (0..count)
        .map(|_| {
            let b = &bases[rng.random_range(0..bases.len())];
            let d: Vec<Q> = (0..n).map(|_| if rng.random_bool(0.5) { q(1, 1) } else { q(-1, 1) }).collect();
            &(b * &QMatrix::diagonal(&d)) * &b.transpose()
        })
        .collect();
    ExactScenario {
        name: format!("single-{index}"),
        observables,
        rho: random_state(rng, n),
    }
}

/// Exact empirical model as an equality system over the product of all
/// observables' outcomes.
#[derive(Debug, Clone)]
pub struct ExactSystem {
    /// Present outcomes per observable, each +1 or −1.
    pub outcomes: Vec<Vec<i8>>,
    /// Maximal sets of pairwise commuting observables, as bitmasks.
    pub contexts: Vec<u32>,
    pub rows: Vec<Vec<bool>>,
    pub rhs: Vec<Q>,
}

fn projector(o: &QMatrix, sign: i8) -> QMatrix {
    let i = QMatrix::identity(o.dim());
    let half = q(1, 2);
    if sign > 0 {
        (&i + o).scale(&half)
    } else {
        (&i - o).scale(&half)
    }
}

fn unravel(mut k: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (slot, &s) in idx.iter_mut().zip(shape).rev() {
        *slot = k % s;
        k /= s;
    }
    idx
}

pub fn exact_system(s: &ExactScenario) -> ExactSystem {
    let n = s.observables.len();
    let outcomes: Vec<Vec<i8>> = s
        .observables
        .iter()
        .map(|o| [1i8, -1].into_iter().filter(|&e| !projector(o, e).is_zero()).collect())
        .collect();

    let commute = |i: usize, j: usize| {
        let (a, b) = (&s.observables[i], &s.observables[j]);
        a * b == b * a
    };
    let is_clique = |mask: u32| {
        (0..n).all(|i| (0..n).all(|j| i >= j || mask & (1 << i) == 0 || mask & (1 << j) == 0 || commute(i, j)))
    };
    let cliques: Vec<u32> = (1u32..1 << n).filter(|&m| is_clique(m)).collect();
    let contexts: Vec<u32> = cliques
        .iter()
        .copied()
        .filter(|&m| !cliques.iter().any(|&o| o != m && o & m == m))
        .collect();

    let shape: Vec<usize> = outcomes.iter().map(Vec::len).collect();
    let n_vars: usize = shape.iter().product();
    let cells: Vec<Vec<usize>> = (0..n_vars).map(|v| unravel(v, &shape)).collect();

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for &ctx in &contexts {
        let members: Vec<usize> = (0..n).filter(|&i| ctx & (1 << i) != 0).collect();
        let sub_shape: Vec<usize> = members.iter().map(|&m| shape[m]).collect();
        for k in 0..sub_shape.iter().product() {
            let idx = unravel(k, &sub_shape);
            let mut prod = QMatrix::identity(s.dim());
            for (&m, &i) in members.iter().zip(&idx) {
                prod = &prod * &projector(&s.observables[m], outcomes[m][i]);
            }
            rows.push(
                cells
                    .iter()
                    .map(|c| members.iter().zip(&idx).all(|(&m, &i)| c[m] == i))
                    .collect(),
            );
            rhs.push((&s.rho * &prod).trace());
        }
    }
    ExactSystem {
        outcomes,
        contexts,
        rows,
        rhs,
    }
}

/// Fraction-free Gaussian elimination of an `r × (r + 1)` augmented
/// system. Returns the determinant and the numerators `x_i · det`.
fn bareiss_solve(mut m: Vec<Vec<i128>>) -> Option<(i128, Vec<i128>)> {
    let r = m.len();
    let mut prev = 1i128;
    for k in 0..r {
        let piv = (k..r).find(|&i| m[i][k] != 0)?;
        if piv != k {
            m.swap(piv, k);
        }
        for i in k + 1..r {
            for j in k + 1..=r {
                let v = m[i][j]
                    .checked_mul(m[k][k])
                    .and_then(|a| m[i][k].checked_mul(m[k][j]).and_then(|b| a.checked_sub(b)))
                    .expect("Bareiss overflow");
                m[i][j] = v / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    let det = m[r - 1][r - 1];
    // Back substitution on the echelon form keeps x_i · det integral.
    let mut num = vec![0i128; r];
    for i in (0..r).rev() {
        let mut acc = m[i][r].checked_mul(det).expect("overflow");
        for j in i + 1..r {
            acc -= m[i][j].checked_mul(num[j]).expect("overflow");
        }
        assert_eq!(acc % m[i][i], 0, "fraction-free back substitution");
        num[i] = acc / m[i][i];
    }
    Some((det, num))
}

/// Row indices of a maximal independent subset, or `None` when `b` is not
/// in the column space of `A`.
fn independent_rows(rows: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<usize>> {
    let width = rows.first().map_or(0, Vec::len);
    let mut basis: Vec<(Vec<Q>, Q, usize)> = Vec::new();
    let mut chosen = Vec::new();
    for (idx, (row, b)) in rows.iter().zip(rhs).enumerate() {
        let mut v = row.clone();
        let mut c = b.clone();
        for (brow, bb, pc) in &basis {
            if !v[*pc].is_zero() {
                let f = v[*pc].clone() / &brow[*pc];
                for (x, y) in v.iter_mut().zip(brow) {
                    *x -= &f * y;
                }
                c -= &f * bb;
            }
        }
        match (0..width).find(|&j| !v[j].is_zero()) {
            Some(pc) => {
                basis.push((v, c, pc));
                chosen.push(idx);
            }
            None if !c.is_zero() => return None,
            None => {}
        }
    }
    Some(chosen)
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    for i in (0..r).rev() {
        if c[i] < n - r + i {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact feasibility of `A x = b, x ≥ 0` by basis enumeration.
pub fn exact_feasible(sys: &ExactSystem) -> bool {
    let n_vars = sys.rows.first().map_or(0, Vec::len);
    // Cells under a zero-probability row are forced to zero.
    let mut alive = vec![true; n_vars];
    for (row, b) in sys.rows.iter().zip(&sys.rhs) {
        if b.is_zero() {
            for (a, &r) in alive.iter_mut().zip(row) {
                if r {
                    *a = false;
                }
            }
        }
    }
    let cols: Vec<usize> = (0..n_vars).filter(|&j| alive[j]).collect();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    for (row, b) in sys.rows.iter().zip(&sys.rhs) {
        if b.is_zero() {
            continue;
        }
        let r: Vec<Q> = cols.iter().map(|&j| if row[j] { Q::one() } else { Q::zero() }).collect();
        if r.iter().all(Zero::is_zero) {
            return false;
        }
        rows.push(r);
        rhs.push(b.clone());
    }
    if rows.is_empty() {
        return true;
    }
    let Some(ind) = independent_rows(&rows, &rhs) else {
        return false;
    };

    let lcm = rhs.iter().fold(BigInt::one(), |acc, b| acc.lcm(b.denom()));
    let scale = BigRational::from_integer(lcm);
    let b_int: Vec<i128> = ind
        .iter()
        .map(|&i| (&rhs[i] * &scale).to_integer().to_i128().expect("rhs fits in i128"))
        .collect();
    let a_int: Vec<Vec<i128>> = ind
        .iter()
        .map(|&i| rows[i].iter().map(|x| x.to_integer().to_i128().unwrap()).collect())
        .collect();

    let r = ind.len();
    let n = cols.len();
    if r > n {
        return false;
    }
    let mut comb: Vec<usize> = (0..r).collect();
    loop {
        let m: Vec<Vec<i128>> = (0..r)
            .map(|i| comb.iter().map(|&j| a_int[i][j]).chain([b_int[i]]).collect())
            .collect();
        if let Some((det, num)) = bareiss_solve(m) {
            if det != 0 && num.iter().all(|&x| x == 0 || (x > 0) == (det > 0)) {
                let mut x = vec![Q::zero(); n];
                for (&j, &v) in comb.iter().zip(&num) {
                    x[j] = BigRational::new(v.into(), det.into()) / &scale;
                }
                let ok = rows.iter().zip(&rhs).all(|(row, b)| {
                    row.iter().zip(&x).fold(Q::zero(), |acc, (a, xi)| acc + a * xi) == *b
                });
                assert!(ok, "basis solution must satisfy the full system");
                debug_assert!(x.iter().all(|v| !v.is_negative()));
                return true;
            }
        }
        if !next_combination(&mut comb, n) {
            return false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn chsh(w: Q) -> ExactScenario {
        let id = QMatrix::identity(2);
        let z = qubit_observable(q(1, 1), q(0, 1));
        let x = qubit_observable(q(0, 1), q(1, 1));
        // Rational stand-ins for the ±45° axes.
        let b1 = qubit_observable(q(3, 5), q(4, 5));
        let b2 = qubit_observable(q(3, 5), q(-4, 5));
        let noise = QMatrix::identity(4).scale(&q(1, 4));
        ExactScenario {
            name: "chsh".into(),
            observables: vec![z.kron(&id), x.kron(&id), id.kron(&b1), id.kron(&b2)],
            rho: &singlet().scale(&w) + &noise.scale(&(Q::one() - &w)),
        }
    }

    #[test]
    fn chsh_family_threshold() {
        // S = w · (3/5 + 4/5 + 3/5 + 4/5) = 14w/5, violating iff w > 5/7.
        let sys = exact_system(&chsh(q(1, 1)));
        assert_eq!(sys.contexts.len(), 4);
        assert!(!exact_feasible(&sys));
        assert!(!exact_feasible(&exact_system(&chsh(q(3, 4)))));
        assert!(exact_feasible(&exact_system(&chsh(q(5, 7)))));
        assert!(exact_feasible(&exact_system(&chsh(q(1, 2)))));
    }

    #[test]
    fn commuting_scenarios_are_feasible() {
        let mut rng = StdRng::seed_from_u64(5);
        for i in 0..20 {
            let mut s = random_single_system(&mut rng, i);
            // Force one basis for all observables.
            let q0 = random_orthogonal(&mut rng, s.dim());
            s.observables = s
                .observables
                .iter()
                .map(|_| {
                    let d: Vec<Q> = (0..s.dim()).map(|k| if k % 2 == 0 { q(1, 1) } else { q(-1, 1) }).collect();
                    &(&q0 * &QMatrix::diagonal(&d)) * &q0.transpose()
                })
                .collect();
            let sys = exact_system(&s);
            assert_eq!(sys.contexts.len(), 1);
            assert!(exact_feasible(&sys));
        }
    }

    #[test]
    fn bareiss_solves_small_system() {
        // 2x + y = 5, x + 3y = 10 → x = 1, y = 3.
        let (det, num) = bareiss_solve(vec![vec![2, 1, 5], vec![1, 3, 10]]).unwrap();
        assert_eq!((num[0] / det, num[1] / det), (1, 3));
    }
}

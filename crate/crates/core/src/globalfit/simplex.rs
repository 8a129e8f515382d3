//! Dense two-phase simplex on `A x = b, x ≥ 0` with Bland's rule.
//!
//! Phase 1 adds one artificial variable per row and minimizes their sum.
//! The artificial columns are kept in the tableau for the whole solve, so
//! their reduced costs yield the phase-1 duals `y_i = 1 − d_{art(i)}`. At a
//! positive optimum these satisfy `yᵀA ≤ 0` and `yᵀb > 0`, a Farkas
//! certificate of infeasibility.

use super::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Rows whose sign was flipped to make `b ≥ 0`.
    flipped: Vec<bool>,
    n_vars: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOne<T> {
    Feasible { x: Vec<T> },
    Infeasible { objective: T, duals: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimum<T> {
    Optimal { x: Vec<T>, value: T },
    Unbounded,
}

const MAX_ITERATIONS: usize = 100_000;

impl<T: Scalar> Tableau<T> {
    /// `a` is row-major with `n_vars` columns.
    pub fn new(a: Vec<Vec<T>>, b: Vec<T>, n_vars: usize) -> Self {
        let m = a.len();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        for (i, (mut row, bi)) in a.into_iter().zip(b).enumerate() {
            assert_eq!(row.len(), n_vars, "row {i} has wrong width");
            let flip = bi.is_negative();
            if flip {
                row = row.into_iter().map(|x| -x).collect();
            }
            row.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
            rows.push(row);
            rhs.push(if flip { -bi } else { bi });
            flipped.push(flip);
        }
        Self {
            rows,
            rhs,
            basis: (n_vars..n_vars + m).collect(),
            flipped,
            n_vars,
            iterations: 0,
        }
    }

    fn width(&self) -> usize {
        self.n_vars + self.rows.len()
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut d = cost.to_vec();
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[bv];
            if cb.is_zero() {
                continue;
            }
            for (dj, aij) in d.iter_mut().zip(row) {
                *dj = dj.clone() - cb.clone() * aij.clone();
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / piv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f == T::zero() {
                continue;
            }
            for (x, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                *x = x.clone() - f.clone() * p.clone();
            }
            self.rows[i][c] = T::zero();
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Bland's rule on columns `0..limit`. Returns false on unboundedness.
    fn run(&mut self, cost: &[T], limit: usize) -> bool {
        loop {
            assert!(self.iterations < MAX_ITERATIONS, "simplex iteration limit reached");
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..limit).find(|&j| d[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].clone() / row[enter].clone();
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }

    fn primal(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.width()];
        for (i, &bv) in self.basis.iter().enumerate() {
            x[bv] = self.rhs[i].clone();
        }
        x.truncate(self.n_vars);
        x
    }

    /// Minimizes the sum of artificials. `feasibility_tol` bounds the
    /// objective accepted as zero.
    pub fn phase_one(&mut self, feasibility_tol: &T) -> PhaseOne<T> {
        let w = self.width();
        let cost: Vec<T> = (0..w)
            .map(|j| if j < self.n_vars { T::zero() } else { T::one() })
            .collect();
        let bounded = self.run(&cost, w);
        debug_assert!(bounded, "phase 1 is bounded below by zero");

        let objective = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&bv, _)| bv >= self.n_vars)
            .fold(T::zero(), |acc, (_, v)| acc + v.clone());
        if objective > *feasibility_tol {
            let d = self.reduced_costs(&cost);
            let duals = (0..self.rows.len())
                .map(|i| {
                    let y = T::one() - d[self.n_vars + i].clone();
                    if self.flipped[i] {
                        -y
                    } else {
                        y
                    }
                })
                .collect();
            return PhaseOne::Infeasible { objective, duals };
        }
        self.drive_out_artificials();
        PhaseOne::Feasible { x: self.primal() }
    }

    /// Pivots zero-level artificials out of the basis where the row allows.
    /// Rows where it does not are redundant and stay inert.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows.len() {
            if self.basis[r] < self.n_vars {
                continue;
            }
            if let Some(c) = (0..self.n_vars).find(|&j| !self.rows[r][j].is_zero()) {
                self.pivot(r, c);
            }
        }
    }

    /// Minimizes `cost · x` over the original variables, starting from a
    /// phase-1 feasible basis. Artificials never re-enter.
    pub fn minimize(&mut self, cost: &[T]) -> Optimum<T> {
        assert_eq!(cost.len(), self.n_vars);
        let mut full = cost.to_vec();
        full.extend((0..self.rows.len()).map(|_| T::zero()));
        if !self.run(&full, self.n_vars) {
            return Optimum::Unbounded;
        }
        let x = self.primal();
        let value = x
            .iter()
            .zip(cost)
            .fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
        Optimum::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn feasible_system_returns_solution() {
        // x0 + x1 = 1, x1 + x2 = 0.5
        let a = vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]];
        let mut t = Tableau::new(a.clone(), vec![1.0, 0.5], 3);
        match t.phase_one(&1e-9) {
            PhaseOne::Feasible { x } => {
                assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
                assert!((x[1] + x[2] - 0.5).abs() < 1e-12);
                assert!(x.iter().all(|&v| v >= 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_system_yields_farkas_duals() {
        // x0 + x1 = 1, x0 + x1 = 2
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]];
        let b = vec![q(1, 1), q(2, 1)];
        let mut t = Tableau::new(a.clone(), b.clone(), 2);
        match t.phase_one(&q(0, 1)) {
            PhaseOne::Infeasible { objective, duals } => {
                assert_eq!(objective, q(1, 1));
                for j in 0..2 {
                    let s = duals[0].clone() * a[0][j].clone() + duals[1].clone() * a[1][j].clone();
                    assert!(s <= q(0, 1));
                }
                let yb = duals[0].clone() * b[0].clone() + duals[1].clone() * b[1].clone();
                assert!(yb > q(0, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_row_is_flipped_back_in_duals() {
        // -x0 = -1 and x0 = 0 is infeasible.
        let a = vec![vec![-1.0], vec![1.0]];
        let b = vec![-1.0, 0.0];
        let mut t = Tableau::new(a.clone(), b.clone(), 1);
        let PhaseOne::Infeasible { duals, .. } = t.phase_one(&1e-9) else {
            panic!("expected infeasible");
        };
        let s = duals[0] * a[0][0] + duals[1] * a[1][0];
        assert!(s <= 1e-12);
        assert!(duals[0] * b[0] + duals[1] * b[1] > 0.0);
    }

    #[test]
    fn phase_two_ranges_a_free_coordinate() {
        // x0 + x1 = 1 (redundant copy included), x0 ≤ 1 implicitly.
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let mut t = Tableau::new(a, vec![1.0, 1.0], 2);
        assert!(matches!(t.phase_one(&1e-9), PhaseOne::Feasible { .. }));
        let mut lo = t.clone();
        let Optimum::Optimal { value, .. } = lo.minimize(&[1.0, 0.0]) else { panic!() };
        assert!(value.abs() < 1e-12);
        let Optimum::Optimal { value, .. } = t.minimize(&[-1.0, 0.0]) else { panic!() };
        assert!((value + 1.0).abs() < 1e-12);
    }
}

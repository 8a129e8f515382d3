//! Random complex scenarios with built-in commutation structure.

use num_complex::Complex64;
use rand::Rng;

use contextual::scenario::{Observable, Scenario};
use contextual::spectral::ComplexMatrix;

fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> ComplexMatrix {
    let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
    ComplexMatrix::from_rows(rows).unwrap()
}

/// Unitary from Gram–Schmidt on random complex vectors, stored as columns.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| random_complex(rng)).collect();
        for c in &cols {
            let dot: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    from_fn(n, |i, j| cols[j][i])
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = from_fn(n, |_, _| random_complex(rng));
    (&g + &g.adjoint()).scale(0.5)
}

/// Full-rank random state `G G† / Tr(G G†)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = from_fn(n, |_, _| random_complex(rng));
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    m.scale(1.0 / t)
}

/// `U diag(values) U†`.
pub fn conjugate_diagonal(u: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    &(u * &ComplexMatrix::diagonal(values)) * &u.adjoint()
}

/// `U (D ⊕ H) U†` where `H` acts on the trailing `h.dim()` coordinates.
fn conjugate_block(u: &ComplexMatrix, head: &[f64], h: &ComplexMatrix) -> ComplexMatrix {
    let k = head.len();
    let n = k + h.dim();
    let inner = from_fn(n, |i, j| {
        if i < k || j < k {
            if i == j {
                Complex64::new(head[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else {
            h[(i - k, j - k)]
        }
    });
    &(u * &inner) * &u.adjoint()
}

fn labeled(matrices: Vec<ComplexMatrix>) -> Vec<Observable> {
    matrices
        .into_iter()
        .enumerate()
        .map(|(k, matrix)| Observable {
            label: format!("X{k}"),
            matrix,
        })
        .collect()
}

/// Two qubits with one or two random local observables per side; every
/// Alice observable commutes with every Bob observable.
pub fn random_local_scenario<R: Rng>(rng: &mut R, index: usize) -> Scenario {
    let id = ComplexMatrix::identity(2);
    let mut obs = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        obs.push(random_hermitian(rng, 2).kron(&id));
    }
    for _ in 0..rng.random_range(1..=2) {
        obs.push(id.kron(&random_hermitian(rng, 2)));
    }
    Scenario::new(format!("local-{index}"), labeled(obs), random_density(rng, 4), 1e-9).unwrap()
}

/// One observable with a degenerate eigenspace plus two or three others
/// that act inside that eigenspace: all commute with the first, and
/// generically not with each other.
pub fn random_block_scenario<R: Rng>(rng: &mut R, index: usize) -> Scenario {
    let n = rng.random_range(3..=4);
    let deg = n - 1;
    let u = random_unitary(rng, n);
    let head = [rng.random_range(-2.0..2.0)];
    let mut values = vec![head[0] - 1.0; n];
    values[0] = head[0];
    let mut obs = vec![conjugate_diagonal(&u, &values)];
    for _ in 0..rng.random_range(2..=3) {
        let h = random_hermitian(rng, deg);
        obs.push(conjugate_block(&u, &[rng.random_range(-1.0..1.0)], &h));
    }
    Scenario::new(format!("block-{index}"), labeled(obs), random_density(rng, n), 1e-9).unwrap()
}

/// Direct `Re Tr(ρ · M₁ M₂ ⋯ M_k)` without any library shortcuts.
pub fn trace_of_product(rho: &ComplexMatrix, factors: &[&ComplexMatrix]) -> f64 {
    let n = rho.dim();
    let mut acc = ComplexMatrix::identity(n);
    for f in factors {
        let mut next = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += acc[(i, k)] * f[(k, j)];
                }
                next[(i, j)] = s;
            }
        }
        acc = next;
    }
    (0..n)
        .map(|i| (0..n).map(|k| rho[(i, k)] * acc[(k, i)]).sum::<Complex64>())
        .sum::<Complex64>()
        .re
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = StdRng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 4);
        let d = &(&u * &u.adjoint()) - &ComplexMatrix::identity(4);
        assert!(d.frobenius_norm() < 1e-12);
    }

    #[test]
    fn block_observables_commute_with_the_first() {
        let mut rng = StdRng::seed_from_u64(2);
        let s = random_block_scenario(&mut rng, 0);
        let a = &s.observables()[0].matrix;
        for o in &s.observables()[1..] {
            let c = &(a * &o.matrix) - &(&o.matrix * a);
            assert!(c.frobenius_norm() < 1e-12);
        }
    }
}

use contextual::contexts::build_empirical_model;
use contextual::globalfit::{assemble_lp, classify, coordinate_range, Verdict};
use contextual::scenario::builtin_abc;

const TOL: f64 = 1e-9;

fn family_table(p: f64, s: f64) -> Vec<((f64, f64, f64), f64)> {
    let r = (1.0 - p) / 2.0;
    vec![
        ((1.0, 1.0, 1.0), r - s),
        ((1.0, -1.0, -1.0), r - s),
        ((1.0, 1.0, -1.0), s),
        ((1.0, -1.0, 1.0), s),
        ((-1.0, 1.0, 1.0), p),
        ((-1.0, -1.0, -1.0), 0.0),
        ((-1.0, 1.0, -1.0), 0.0),
        ((-1.0, -1.0, 1.0), 0.0),
    ]
}

#[test]
fn explicit_global_family_satisfies_constraints() {
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let r = (1.0 - p) / 2.0;
        let model = build_empirical_model(&builtin_abc(p).unwrap(), TOL).unwrap();
        let lp = assemble_lp(&model).unwrap();
        for s in [0.0, r / 2.0, r] {
            let mut x = vec![0.0; lp.n_vars()];
            for ((a, b, c), v) in family_table(p, s) {
                x[lp.cell_index(&[a, b, c]).unwrap()] = v;
            }
            assert!(lp.max_residual(&x) <= 1e-12, "p = {p}, s = {s}");
        }
    }
}

#[test]
fn context_tables_are_linear_in_p() {
    let tables: Vec<Vec<f64>> = (0..=10)
        .map(|k| {
            let m = build_empirical_model(&builtin_abc(k as f64 / 10.0).unwrap(), TOL).unwrap();
            m.contexts()[0].probs().to_vec()
        })
        .collect();
    for w in tables.windows(3) {
        for c in 0..4 {
            assert!((w[0][c] - 2.0 * w[1][c] + w[2][c]).abs() < 1e-12);
        }
    }
}

#[test]
fn every_p_is_noncontextual_with_range_zero_to_r() {
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let r = (1.0 - p) / 2.0;
        let model = build_empirical_model(&builtin_abc(p).unwrap(), TOL).unwrap();
        let res = classify(&model, TOL).unwrap();
        assert_eq!(res.verdict, Verdict::GloballyNoncontextual);
        assert!(res.table.unwrap().max_marginal_error(&model) <= 1e-9);
        let lp = assemble_lp(&model).unwrap();
        let (lo, hi) = coordinate_range(&lp, &[1.0, 1.0, -1.0], TOL).unwrap();
        assert!(lo.abs() < 1e-8 && (hi - r).abs() < 1e-8, "p = {p}: ({lo}, {hi})");
    }
}

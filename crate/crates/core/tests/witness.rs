use contextual::contexts::{build_empirical_model, Context, ContextDistribution, EmpiricalModel};
use contextual::globalfit::{
    assemble_lp, classify, classify_exact, extract_witness, Verdict, WitnessNormalization,
};
use contextual::scenario::{builtin_chsh, ChshState, DEFAULT_CHSH_ANGLES};

fn pr_box() -> EmpiricalModel {
    let pm = vec![1.0, -1.0];
    let correlated = vec![0.5, 0.0, 0.0, 0.5];
    let anti = vec![0.0, 0.5, 0.5, 0.0];
    let tables = [(0, 2, &correlated), (0, 3, &correlated), (1, 2, &correlated), (1, 3, &anti)]
        .into_iter()
        .map(|(a, b, p)| {
            ContextDistribution::new(Context::new(vec![a, b]), vec![pm.clone(), pm.clone()], p.clone())
                .unwrap()
        })
        .collect();
    let labels = ["A0", "A1", "B0", "B1"].map(String::from).to_vec();
    EmpiricalModel::from_tables("pr-box", labels, vec![pm; 4], tables, 1e-9).unwrap()
}

#[test]
fn pr_box_reaches_algebraic_maximum() {
    let m = pr_box();
    let res = classify(&m, 1e-9).unwrap();
    assert_eq!(res.verdict, Verdict::GloballyContextual);
    assert!(res.table.is_none());
    let w = res.witness.unwrap();
    let lp = assemble_lp(&m).unwrap();
    assert_eq!(w.normalization, WitnessNormalization::Chsh);
    assert!((w.chsh_value(&lp).unwrap() - 4.0).abs() < 1e-9);
    assert!((w.bound - 2.0).abs() < 1e-9);
    assert!(w.max_cell_excess(&lp) <= 1e-9);
}

#[test]
fn singlet_witness_is_a_valid_certificate() {
    let s = builtin_chsh(ChshState::Singlet, DEFAULT_CHSH_ANGLES).unwrap();
    let m = build_empirical_model(&s, 1e-9).unwrap();
    let lp = assemble_lp(&m).unwrap();
    let w = extract_witness(&lp).unwrap();
    assert!(w.max_cell_excess(&lp) <= 1e-9);
    assert!(w.violation > 0.8);
    assert!((w.chsh_value(&lp).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-6);

    let exact = classify_exact(&m, 1e-9).unwrap();
    assert_eq!(exact.verdict, Verdict::GloballyContextual);
    assert!((exact.witness.unwrap().chsh_value(&lp).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn removing_a_context_restores_feasibility() {
    let s = builtin_chsh(ChshState::Singlet, DEFAULT_CHSH_ANGLES).unwrap();
    let m = build_empirical_model(&s, 1e-9).unwrap();
    let lp = assemble_lp(&m).unwrap();
    for c in 0..4 {
        let sub = lp.without_context(c);
        let res = contextual::globalfit::solve_feasibility(&sub, 1e-9).unwrap();
        assert_eq!(res.verdict, Verdict::GloballyNoncontextual);
    }
}

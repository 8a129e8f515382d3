use contextual::contexts::{build_empirical_model, enumerate_contexts, observable_pdis};
use contextual::scenario::Scenario;
use contextual::spectral::DEFAULT_COMMUTE_TOL;
use contextual_testkit::random::{random_block_scenario, random_local_scenario, trace_of_product};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn scenarios(n: usize, seed: u64) -> Vec<Scenario> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                random_local_scenario(&mut rng, i)
            } else {
                random_block_scenario(&mut rng, i)
            }
        })
        .collect()
}

#[test]
fn overlapping_tables_share_marginals() {
    let mut overlapping = 0;
    for s in scenarios(220, 17) {
        let m = build_empirical_model(&s, 1e-9).unwrap();
        let report = m.compatibility();
        assert!(report.passed);
        assert!(report.max_discrepancy() <= 1e-9, "{}: {}", s.name(), report.max_discrepancy());
        overlapping += report.pairs.len();
    }
    assert!(overlapping >= 200);
}

#[test]
fn table_entries_match_direct_traces() {
    for s in scenarios(60, 23) {
        let pdis = observable_pdis(&s).unwrap();
        let m = build_empirical_model(&s, 1e-9).unwrap();
        for d in m.contexts() {
            for k in 0..d.len() {
                let idx = d.index_tuple(k);
                let factors: Vec<_> = d
                    .context()
                    .members()
                    .iter()
                    .zip(&idx)
                    .map(|(&obs, &j)| pdis[obs].blocks()[j].projector.matrix())
                    .collect();
                let expected = trace_of_product(s.rho().matrix(), &factors).clamp(0.0, 1.0);
                assert!((d.probs()[k] - expected).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn contexts_are_maximal_commuting_sets() {
    for s in scenarios(60, 29) {
        let ctx = enumerate_contexts(&s, DEFAULT_COMMUTE_TOL);
        let n = s.observables().len();
        let commute = |i: usize, j: usize| {
            let (a, b) = (&s.observables()[i].matrix, &s.observables()[j].matrix);
            (&(a * b) - &(b * a)).frobenius_norm() < 1e-9
        };
        for c in &ctx {
            for &i in c.members() {
                for &j in c.members() {
                    assert!(commute(i, j));
                }
            }
            for extra in (0..n).filter(|o| !c.contains(*o)) {
                assert!(c.members().iter().any(|&i| !commute(i, extra)));
            }
        }
        let mut sorted = ctx.clone();
        sorted.sort();
        assert_eq!(sorted, ctx);
    }
}

use contextual::contexts::build_empirical_model;
use contextual::globalfit::{classify, classify_exact, Verdict, DEFAULT_FEASIBILITY_TOL};
use contextual_testkit::oracle::{exact_feasible, exact_system, random_bipartite, random_single_system};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn simplex_matches_rational_oracle() {
    let mut rng = StdRng::seed_from_u64(0xC0FFEE);
    let (mut contextual, mut noncontextual) = (0, 0);
    for i in 0..240 {
        let exact = if i % 2 == 0 {
            random_bipartite(&mut rng, i)
        } else {
            random_single_system(&mut rng, i)
        };
        let expected = exact_feasible(&exact_system(&exact));
        let model = build_empirical_model(&exact.to_scenario().unwrap(), 1e-9).unwrap();
        let float = classify(&model, DEFAULT_FEASIBILITY_TOL).unwrap();
        assert_eq!(
            float.verdict == Verdict::GloballyNoncontextual,
            expected,
            "scenario {i}: {:?}",
            exact
        );
        let rational = classify_exact(&model, DEFAULT_FEASIBILITY_TOL).unwrap();
        assert_eq!(rational.verdict, float.verdict, "exact mode disagrees on {i}");
        if expected {
            noncontextual += 1;
        } else {
            contextual += 1;
        }
    }
    println!("{contextual} contextual, {noncontextual} noncontextual");
    assert!(contextual >= 10, "only {contextual} contextual scenarios generated");
    assert!(noncontextual >= 10);
}

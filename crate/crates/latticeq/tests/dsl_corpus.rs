//! Frozen 30-expression corpus: parse, classify, canonical round-trip, and
//! evaluation agreement with the core predicate machinery at n = 720.

use latticeq::dsl::{
    classify, eval_expr, parse, print_canonical, Bindings, ClassifiedPredicate, Var,
};
use latticeq::forms::{eval_gaussian, GaussianPredicate, PerturbedGaussianPredicate};
use latticeq::FiniteUniverse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
enum Tag {
    Gaussian,
    Perturbed(u64, u64),
    Sampled,
}

/// The corpus lives in tests/data/corpus.tsv (shared with the acceptance
/// gate): source text, expected classification, and the frozen canonical
/// rendering where one is pinned ("-" otherwise).
fn corpus() -> Vec<(String, Tag, Option<String>)> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/corpus.tsv");
    let text = std::fs::read_to_string(path).expect("corpus file readable");
    let rows: Vec<_> = text
        .lines()
        .map(|line| {
            let mut cols = line.split('\t');
            let src = cols.next().expect("expr column").to_string();
            let tag = match cols.next().expect("tag column") {
                "gaussian" => Tag::Gaussian,
                "sampled" => Tag::Sampled,
                t => {
                    let mut parts = t.splitn(3, ':');
                    assert_eq!(parts.next(), Some("perturbed"), "unknown tag {t:?}");
                    Tag::Perturbed(
                        parts.next().unwrap().parse().unwrap(),
                        parts.next().unwrap().parse().unwrap(),
                    )
                }
            };
            let canonical = match cols.next().expect("canonical column") {
                "-" => None,
                c => Some(c.to_string()),
            };
            (src, tag, canonical)
        })
        .collect();
    assert_eq!(rows.len(), 30, "the corpus is frozen at 30 expressions");
    rows
}

#[test]
fn corpus_parses_and_classifies_30_of_30() {
    for (idx, (src, tag, _)) in corpus().iter().enumerate() {
        let expr = parse(src).unwrap_or_else(|e| panic!("#{idx} {src:?}: parse failed: {e}"));
        let got = classify(&expr).unwrap_or_else(|e| panic!("#{idx} {src:?}: classify: {e}"));
        let ok = match (tag, &got) {
            (Tag::Gaussian, ClassifiedPredicate::Gaussian { .. }) => true,
            (Tag::Perturbed(h, l), ClassifiedPredicate::PerturbedGaussian { big_h, big_l }) => {
                (big_h, big_l) == (h, l)
            }
            (Tag::Sampled, ClassifiedPredicate::Sampled) => true,
            _ => false,
        };
        assert!(ok, "#{idx} {src:?}: classified as {got:?}");
    }
}

#[test]
fn corpus_round_trips_30_of_30() {
    let mut passes = 0;
    for (idx, (src, _, frozen)) in corpus().iter().enumerate() {
        let canonical = print_canonical(&parse(src).unwrap()).unwrap();
        if let Some(expect) = frozen {
            assert_eq!(&canonical, expect, "#{idx} {src:?}: frozen canonical text");
        }
        let reparsed = parse(&canonical)
            .unwrap_or_else(|e| panic!("#{idx}: canonical {canonical:?} must reparse: {e}"));
        let again = print_canonical(&reparsed).unwrap();
        assert_eq!(canonical, again, "#{idx} {src:?}: canonical text must be stable");
        // Classification survives the round trip.
        let a = classify(&parse(src).unwrap()).unwrap();
        let b = classify(&reparsed).unwrap();
        assert_eq!(a, b, "#{idx} {src:?}: classification must survive printing");
        passes += 1;
    }
    assert_eq!(passes, 30, "round-trip must be 30/30");
}

#[test]
fn corpus_evaluation_agrees_with_core_predicates() {
    let u = FiniteUniverse::new(720, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0_45);
    for (idx, (src, _, _)) in corpus().iter().enumerate() {
        let expr = parse(src).unwrap();
        let classified = classify(&expr).unwrap();
        let canon = parse(&print_canonical(&expr).unwrap()).unwrap();
        for _ in 0..100 {
            let k = rng.gen_range(-60i64..=60);
            let p1 = rng.gen_range(-60i64..=60);
            let p2 = rng.gen_range(-60i64..=60);
            let x = rng.gen_range(-4.0f64..4.0);
            let mut b = Bindings::with_n(720);
            b.k = Some(k);
            b.x = Some(x);
            b.params.insert(1, p1);
            b.params.insert(2, p2);
            let dsl_value = eval_expr(&expr, &b).unwrap();

            // The canonical form evaluates identically.
            let canon_value = eval_expr(&canon, &b).unwrap();
            assert!(
                (dsl_value - canon_value).norm() <= 1e-10 * (1.0 + dsl_value.norm()),
                "#{idx} {src:?} at k={k} p1={p1} p2={p2}: {dsl_value} vs canonical {canon_value}"
            );

            // Classified predicates evaluate identically through the core.
            match &classified {
                ClassifiedPredicate::Gaussian { eta, vars, form } => {
                    let coords: Vec<i64> = vars
                        .iter()
                        .map(|v| match v {
                            Var::K => k,
                            Var::P(1) => p1,
                            Var::P(2) => p2,
                            other => panic!("#{idx}: unexpected variable {other:?}"),
                        })
                        .collect();
                    let pred = GaussianPredicate::new(eta.to_complex(), form.clone());
                    let core = eval_gaussian(&pred, &coords, &u).unwrap();
                    assert!(
                        (dsl_value - core).norm() <= 1e-10,
                        "#{idx} {src:?} at {coords:?}: dsl {dsl_value} vs core {core}"
                    );
                }
                ClassifiedPredicate::PerturbedGaussian { big_h, big_l } => {
                    let pred = PerturbedGaussianPredicate::new(*big_h, *big_l).unwrap();
                    let core = pred.eval(k, &u);
                    assert!(
                        (dsl_value - core).norm() <= 1e-10,
                        "#{idx} {src:?} at k={k}: dsl {dsl_value} vs core {core}"
                    );
                }
                ClassifiedPredicate::Sampled => {}
            }
        }
    }
}

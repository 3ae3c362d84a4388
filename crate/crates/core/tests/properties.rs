use openmaps::frontend::{parse_model, Model};
use openmaps::generate;
use openmaps::hybrid::IntegratorConfig;
use openmaps::lts::{
    check_bisimulation, check_morphism, greatest_bisimulation, is_open, relation_from_span, span_from_relation, strong_bisimilarity,
    BisimEngine, LtsMorphism, OpenMode,
};
use openmaps::observations::{greatest_approx_bisimulation, ApproxEngine, Metric, ObsPoint, ObsSpace};
use openmaps::probabilistic::{check_prob_morphism, f_forget, prob_bisimilarity, ProbMorphism};
use openmaps::rational::{int, ratio, Rational};
use openmaps::timed::{enabled_times, theta_step, Config};
use openmaps::unfolding::{is_tree, unf_is_open_check, unfold, UnfOpenness};
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn point(v: &[i64]) -> ObsPoint {
    ObsPoint::Vector(v.iter().map(|&k| ratio(k, 4)).collect())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn engines_agree_on_greatest_bisimulation(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let (t, u) = generate::lts_pair(&mut rng, 10, 2);
        let a = greatest_bisimulation(&t, &u, BisimEngine::PartitionRefinement);
        prop_assert_eq!(&a, &greatest_bisimulation(&t, &u, BisimEngine::NaiveFixpoint));
        if a.contains(t.initial(), u.initial()) {
            prop_assert!(check_bisimulation(&t, &u, &a).is_ok());
        }
    }

    #[test]
    fn relation_span_relation_is_identity(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let (t, u) = generate::lts_pair(&mut rng, 8, 2);
        if let Some(r) = strong_bisimilarity(&t, &u) {
            let span = span_from_relation(&t, &u, &r).unwrap();
            prop_assert_eq!(relation_from_span(&span), r);
        }
    }

    #[test]
    fn split_copies_are_bisimilar_and_their_maps_open(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let t = generate::lts(&mut rng, 8, 2);
        let (copy, map) = generate::split_copy_with_map(&mut rng, &t);
        let f = LtsMorphism::new(copy.clone(), t.clone(), map).unwrap();
        prop_assert!(strong_bisimilarity(&copy, &t).is_some());
        prop_assert!(check_morphism(&f).is_valid());
        prop_assert!(is_open(&f, OpenMode::GraphBisim).unwrap().is_open());
    }

    #[test]
    fn identities_and_composites_are_morphisms(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let f = generate::morphism(&mut rng, 6, 2);
        prop_assert!(check_morphism(&f).is_valid());
        let id = LtsMorphism::identity(f.target());
        prop_assert!(is_open(&id, OpenMode::GraphBisim).unwrap().is_open());
        let composite = LtsMorphism::new(f.source().clone(), f.target().clone(), f.map().iter().map(|(s, q)| (s.clone(), id.apply(q).to_string())).collect()).unwrap();
        prop_assert_eq!(composite, f);
    }

    #[test]
    fn open_routes_agree(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let f = generate::morphism(&mut rng, 6, 2);
        let graph = is_open(&f, OpenMode::GraphBisim).unwrap();
        let lift = is_open(&f, OpenMode::LiftingOracle { max_len: 32 }).unwrap();
        prop_assert_eq!(graph.is_open(), lift.is_open());
    }

    #[test]
    fn unfoldings_are_trees_with_open_projections(seed in any::<u64>(), depth in 0usize..4) {
        let mut rng = generate::rng(seed);
        let t = generate::lts(&mut rng, 5, 2);
        let (tree, unf) = unfold(&t, depth);
        prop_assert!(is_tree(&tree.lts));
        prop_assert!(check_morphism(&unf).is_valid());
        let open = matches!(unf_is_open_check(&t, depth), UnfOpenness::Open { .. });
        prop_assert!(open);
    }

    #[test]
    fn distances_are_pseudometrics(
        xs in proptest::collection::vec((-8i64..=8, -8i64..=8), 3),
        euclid in any::<bool>(),
    ) {
        let space = ObsSpace::RealVector { dim: 2, metric: if euclid { Metric::Euclidean } else { Metric::Sup } };
        let p: Vec<ObsPoint> = xs.iter().map(|&(a, b)| point(&[a, b])).collect();
        prop_assert_eq!(space.distance(&p[0], &p[0]).squared().clone(), int(0));
        prop_assert_eq!(space.distance(&p[0], &p[1]), space.distance(&p[1], &p[0]));
        let (ab, bc, ac) = (space.distance(&p[0], &p[1]).to_f64(), space.distance(&p[1], &p[2]).to_f64(), space.distance(&p[0], &p[2]).to_f64());
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn approx_relations_grow_with_epsilon(seed in any::<u64>(), e1 in 0i64..8, extra in 0i64..8) {
        let mut rng = generate::rng(seed);
        let (t, u) = generate::lts_pair(&mut rng, 6, 2);
        let (t, u) = (generate::observe(&mut rng, t, 1), generate::observe(&mut rng, u, 1));
        let (small, large) = (ratio(e1, 4), ratio(e1 + extra, 4));
        let r1 = greatest_approx_bisimulation(&t, &u, &small, ApproxEngine::SeedRefine).unwrap();
        let r2 = greatest_approx_bisimulation(&t, &u, &large, ApproxEngine::SeedRefine).unwrap();
        prop_assert!(r1.is_subset(&r2));
        prop_assert_eq!(r1, greatest_approx_bisimulation(&t, &u, &small, ApproxEngine::NaiveSweep).unwrap());
    }

    #[test]
    fn prob_covers_are_morphisms_and_bisimilarity_spans_verify(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let p = generate::prob_system(&mut rng, 6, 2);
        prop_assert!(check_prob_morphism(&ProbMorphism::identity(&p)).is_valid());
        let g = generate::prob_cover(&mut rng, &p);
        prop_assert!(check_prob_morphism(&g).is_valid());
        if let Some(span) = prob_bisimilarity(g.source(), g.target()) {
            prop_assert!(span.verify().is_ok());
        }
        // Forgetting probabilities preserves the transition graph.
        let forgotten = f_forget(&p);
        prop_assert_eq!(forgotten.transitions(), p.lts().transitions());
    }

    #[test]
    fn theta_step_is_nonempty_exactly_on_enabled_delays(seed in any::<u64>(), k in 1i64..=12) {
        let mut rng = generate::rng(seed);
        let sys = generate::tts(&mut rng, 4, 2, false);
        let t: Rational = ratio(k, 2);
        for s in sys.states() {
            let nu: Vec<Rational> = sys.clock_names().iter().map(|_| ratio(rng.gen_range(0..=6), 2)).collect();
            let cfg = Config { state: s.clone(), nu };
            for a in sys.actions() {
                let succ = theta_step(&sys, &cfg, &a, &t).unwrap();
                let enabled = enabled_times(&sys, &cfg, &a).unwrap();
                let admits = enabled.iter().any(|e| e.times.as_ref().is_some_and(|iv| iv.contains(&t)));
                prop_assert_eq!(!succ.is_empty(), admits);
                for c in &succ {
                    prop_assert!(enabled.iter().any(|e| e.dst == c.state && e.times.as_ref().is_some_and(|iv| iv.contains(&t))));
                }
            }
        }
    }

    #[test]
    fn models_survive_print_and_parse(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let lts = generate::lts(&mut rng, 6, 2);
        let models = vec![
            Model::Obs(generate::observe(&mut rng, lts.clone(), 2)),
            Model::Prob(generate::with_probabilities(&mut rng, lts.clone())),
            Model::Lts(lts),
            Model::Tts(generate::tts(&mut rng, 4, 2, false)),
            Model::Tree(generate::observed_tree(&mut rng, 5, 2)),
            Model::Hybrid(generate::linear_hybrid(&mut rng, 1, &IntegratorConfig::default()).0),
        ];
        for m in models {
            let text = serde_json::to_string_pretty(&m.to_file()).unwrap();
            prop_assert_eq!(parse_model(&text).unwrap(), m);
        }
    }
}

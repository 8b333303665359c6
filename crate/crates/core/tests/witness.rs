use atn_core::furstenberg::{sample_coded_measure, SkewParams};
use atn_core::measures::{BernoulliMeasure, EmpiricalMeasure, MeasureOracle, ProbabilityVector};
use atn_core::symbolic::{restrict, Alphabet, FunnyWord, Interval, Support};
use atn_core::witness::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bernoulli(p: &[f64]) -> BernoulliMeasure {
    BernoulliMeasure::new(ProbabilityVector::new(p.to_vec()).unwrap())
}

fn params(n: usize, eps: f64, size: usize, budget: usize, seed: u64) -> SearchParams {
    SearchParams {
        n,
        eps,
        delta: 0.1,
        support_sizes: vec![size],
        budget,
        seed,
        confidence: 0.95,
    }
}

#[test]
fn instance_validation() {
    let a = Alphabet::new(2).unwrap();
    let w = FunnyWord::new(a, Support::interval(0, 2).unwrap(), vec![0, 1, 0]).unwrap();
    assert!(Theorem21Instance::new(vec![], 0.1, 0.1).is_err());
    assert!(Theorem21Instance::new(vec![w.clone()], 0.0, 0.1).is_err());
    assert!(Theorem21Instance::new(vec![w.clone()], 0.1, 1.0).is_err());
    let b = FunnyWord::new(Alphabet::new(3).unwrap(), Support::new(vec![0]).unwrap(), vec![2]).unwrap();
    assert!(Theorem21Instance::new(vec![w.clone(), b], 0.1, 0.1).is_err());
    let inst = Theorem21Instance::new(vec![w], 0.1, 0.1).unwrap();
    assert_eq!((inst.n(), inst.min_support_len()), (1, 3));
}

#[test]
fn uniform_bernoulli_statistic_is_small() {
    let m = bernoulli(&[0.5, 0.5]);
    let a = m.alphabet();
    let support = Support::interval(0, 49).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let words: Vec<FunnyWord> = (0..2)
        .map(|_| FunnyWord::new(a, support.clone(), (0..50).map(|_| rng.random_range(0..2)).collect()).unwrap())
        .collect();
    let inst = Theorem21Instance::new(words, 0.1, 0.1).unwrap();
    let r = theorem21_statistic(&inst, &m, 0.95).unwrap();
    assert!(r.exact);
    assert!(r.statistic < 0.9);
    assert_eq!(r.statistic, r.optimistic);
    assert_eq!(r.verdict, Verdict::ViolatedAtResolution);
    assert_eq!(r.terms.len(), 2);
}

#[test]
fn greedy_word_takes_the_likeliest_symbol() {
    let m = bernoulli(&[0.2, 0.5, 0.3]);
    let support = Support::new(vec![-3, 0, 8]).unwrap();
    let w = greedy_funny_word(&m, &support).unwrap();
    assert_eq!(w.symbols(), &[1, 1, 1]);
    let tie = bernoulli(&[0.4, 0.2, 0.4]);
    assert_eq!(greedy_funny_word(&tie, &support).unwrap().symbols(), &[0, 0, 0]);
}

#[test]
fn exchangeable_bernoulli_makes_every_word_equal() {
    let m = bernoulli(&[1.0, 1.0, 1.0]);
    let support = Support::interval(0, 19).unwrap();
    let greedy = greedy_funny_word(&m, &support).unwrap();
    let g = m.ball_measure(&greedy, 0.25, 0.95).unwrap().estimate;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let w = greedy.with_symbols((0..20).map(|_| rng.random_range(0..3)).collect()).unwrap();
        let v = m.ball_measure(&w, 0.25, 0.95).unwrap().estimate;
        assert!((v - g).abs() <= 1e-15 * g.max(1e-300));
    }
}

#[test]
fn single_word_on_concentrated_measure_gives_support_size() {
    let a = Alphabet::new(2).unwrap();
    let data = vec![1u8; 8 * 500];
    let em = EmpiricalMeasure::from_flat(a, Interval::with_len(0, 8).unwrap(), data, None).unwrap();
    let r = non_atn_evidence(&em, &params(1, 0.2, 5, 40, 3)).unwrap();
    assert_eq!(r.terms[0].estimate, 1.0);
    assert_eq!(r.statistic, 5.0);
    assert_eq!(r.terms[0].word, greedy_funny_word(&em, &Support::interval(0, 4).unwrap()).unwrap().to_string());
    assert_eq!(r.verdict, Verdict::ConditionMet);
}

#[test]
fn radius_near_one_leaves_out_only_the_antipode() {
    let m = bernoulli(&[0.7, 0.3]);
    let r = non_atn_evidence(&m, &params(2, 0.999, 4, 20, 4)).unwrap();
    // Only words differing everywhere stay outside; the best centre is 0000.
    let expected = 1.0 - 0.3f64.powi(4);
    for t in &r.terms {
        assert!((t.estimate - expected).abs() < 1e-12);
    }
    assert!((r.statistic - 8.0 * expected).abs() < 1e-12);
}

#[test]
fn biased_bernoulli_search_finds_the_mode() {
    let m = bernoulli(&[0.9, 0.1]);
    let r = non_atn_evidence(&m, &params(2, 0.1, 12, 200, 5)).unwrap();
    // The all-zero word maximizes every ball for a product measure biased to 0.
    let support = Support::interval(0, 11).unwrap();
    let mode = FunnyWord::new(m.alphabet(), support, vec![0; 12]).unwrap();
    let best = m.ball_measure(&mode, 0.1, 0.95).unwrap().estimate;
    for t in &r.terms {
        assert!((t.estimate - best).abs() < 1e-15);
    }
    assert_eq!(r.search.as_ref().unwrap().support_sizes, vec![12, 12]);
}

#[test]
fn search_is_deterministic_and_echoes_inputs() {
    let p = SkewParams::golden(2).unwrap();
    let em = sample_coded_measure(&p, Interval::with_len(0, 12).unwrap(), 20_000, 1).unwrap();
    let sp = SearchParams {
        n: 2,
        eps: 1.0 / 12.0,
        delta: 0.04,
        support_sizes: vec![6, 8],
        budget: 150,
        seed: 77,
        confidence: 0.95,
    };
    let a = non_atn_evidence(&em, &sp).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| non_atn_evidence(&em, &sp).unwrap());
    assert_eq!(a, b);
    let s = a.search.as_ref().unwrap();
    assert_eq!((s.seed, s.budget, s.support_sizes.clone()), (77, 150, vec![6, 8]));
    assert!(s.evaluations <= 2 * 150);
    assert_eq!((a.n, a.eps, a.delta), (2, 1.0 / 12.0, 0.04));
    assert!((a.threshold - 0.96).abs() < 1e-15);
    assert!(a.optimistic >= a.statistic);
    let json = serde_json::to_string(&a).unwrap();
    assert!(json.contains("\"seed\":77"));
    let back: WitnessReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}

#[test]
fn search_rejects_bad_parameters() {
    let m = bernoulli(&[0.5, 0.5]);
    assert!(non_atn_evidence(&m, &params(0, 0.1, 4, 10, 1)).is_err());
    assert!(non_atn_evidence(&m, &params(2, 0.1, 4, 0, 1)).is_err());
    assert!(non_atn_evidence(&m, &params(2, 1.5, 4, 10, 1)).is_err());
    let mut sp = params(3, 0.1, 4, 10, 1);
    sp.support_sizes = vec![4, 5];
    assert!(non_atn_evidence(&m, &sp).is_err());
    let em = EmpiricalMeasure::from_flat(Alphabet::new(2).unwrap(), Interval::with_len(0, 3).unwrap(), vec![0; 30], None)
        .unwrap();
    assert!(non_atn_evidence(&em, &params(1, 0.1, 4, 10, 1)).is_err());
}

#[test]
fn greedy_is_competitive_on_coded_measure() {
    let p = SkewParams::golden(2).unwrap();
    let len = 10;
    let em = sample_coded_measure(&p, Interval::with_len(0, len).unwrap(), 100_000, 8).unwrap();
    let support = Support::interval(0, len as i64 - 1).unwrap();
    let eps = 1.0 / 12.0;
    let greedy = em.ball_measure(&greedy_funny_word(&em, &support).unwrap(), eps, 0.95).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut best = 0.0f64;
    let mut sigma = 0.0;
    for _ in 0..1000 {
        let w = restrict(&em.sample_word(support.hull(), &mut rng).unwrap(), &support).unwrap();
        let e = em.ball_measure(&w, eps, 0.95).unwrap();
        if e.estimate > best {
            best = e.estimate;
            sigma = e.half_width / 1.96;
        }
    }
    let greedy_sigma = greedy.half_width / 1.96;
    assert!(greedy.estimate <= best + 3.0 * sigma.max(greedy_sigma));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn statistic_grows_with_radius(
        bits in proptest::collection::vec(0u8..2, 1..30),
        p0 in 0.05f64..0.95,
        e1 in 0.01f64..0.99,
        e2 in 0.01f64..0.99,
    ) {
        let m = bernoulli(&[p0, 1.0 - p0]);
        let support = Support::interval(0, bits.len() as i64 - 1).unwrap();
        let w = FunnyWord::new(m.alphabet(), support, bits).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = theorem21_statistic(&Theorem21Instance::new(vec![w.clone(), w.clone()], lo, 0.1).unwrap(), &m, 0.95).unwrap();
        let b = theorem21_statistic(&Theorem21Instance::new(vec![w.clone(), w], hi, 0.1).unwrap(), &m, 0.95).unwrap();
        prop_assert!(a.statistic <= b.statistic * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn search_never_loses_to_its_greedy_start(
        p0 in 0.05f64..0.95,
        size in 2usize..16,
        seed in 0u64..1000,
    ) {
        let m = bernoulli(&[p0, 1.0 - p0]);
        let r = non_atn_evidence(&m, &params(1, 0.2, size, 100, seed)).unwrap();
        let g = greedy_funny_word(&m, &Support::interval(0, size as i64 - 1).unwrap()).unwrap();
        let v = m.ball_measure(&g, 0.2, 0.95).unwrap().estimate;
        prop_assert!(r.terms[0].estimate >= v);
    }
}

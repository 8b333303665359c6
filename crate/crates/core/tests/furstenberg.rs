use atn_core::furstenberg::*;
use atn_core::measures::{ball_measure_empirical, MeasureOracle};
use atn_core::symbolic::{FunnyWord, Interval, Support};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden2() -> SkewParams {
    SkewParams::golden(2).unwrap()
}

#[test]
fn orbit_endpoints_and_rational_closed_form() {
    let p = golden2();
    let z = TorusPoint::new(0.3, 0.7);
    assert_eq!(skew_orbit(z, &p, 0, 0).unwrap(), vec![z]);
    assert!(skew_orbit(z, &p, 1, 0).is_err());

    let zero = SkewParams::with_any_alpha(0.0, 2).unwrap();
    let (s, t) = (0.1234, 0.4321);
    let orbit = skew_orbit(TorusPoint::new(s, t), &zero, 0, 2).unwrap();
    assert!(circle_distance(orbit[1].t, 2.0 * s + t) < 1e-15);
    assert!(circle_distance(orbit[2].t, 4.0 * s + t) < 1e-15);
    assert_eq!(orbit[2].s, s);
}

#[test]
fn closed_form_matches_iteration() {
    let p = golden2();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let z = TorusPoint::random(&mut rng);
        let closed = skew_orbit(z, &p, -200, 10_000).unwrap();
        let iterated = skew_orbit_iterated(z, &p, -200, 10_000).unwrap();
        for (a, b) in closed.iter().zip(&iterated) {
            assert!(circle_distance(a.s, b.s) < 1e-9);
            assert!(circle_distance(a.t, b.t) < 1e-9);
        }
    }
}

#[test]
fn coding_examples() {
    let zero = SkewParams::with_any_alpha(0.0, 2).unwrap();
    let w = code_point(TorusPoint::new(0.0, 0.0), &zero, Interval::new(-5, 5).unwrap()).unwrap();
    assert!(w.symbols().iter().all(|&s| s == 0));

    let p = golden2();
    let w = code_point(TorusPoint::new(0.2, 0.5), &p, Interval::new(0, 0).unwrap()).unwrap();
    assert_eq!(w.symbols(), &[1]);
}

#[test]
fn rotation_cycles_symbols() {
    let p = golden2();
    let window = Interval::with_len(0, 50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let z = TorusPoint::random(&mut rng);
        let a = code_point(z, &p, window).unwrap();
        let b = code_point(rotate(z, &p), &p, window).unwrap();
        for (x, y) in a.symbols().iter().zip(b.symbols()) {
            assert_eq!(*y, (x + 1) % 3);
        }
    }
}

#[test]
fn sampled_measures() {
    let p = golden2();
    let window = Interval::new(0, 4).unwrap();
    let one = sample_coded_measure(&p, window, 1, 3).unwrap();
    assert_eq!(one.samples(), 1);

    let n = 200_000;
    let em = sample_coded_measure(&p, window, n, 3).unwrap();
    let again = sample_coded_measure(&p, window, n, 3).unwrap();
    assert_eq!(em, again);
    let marginal = em.marginal(0).unwrap();
    for f in marginal {
        let sigma = (f * (1.0 - f) / n as f64).sqrt();
        assert!((f - 1.0 / 3.0).abs() < 4.0 * sigma);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = golden2();
    let window = Interval::new(0, 6).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| sample_coded_measure(&p, window, 50_000, 9).unwrap());
    let many = sample_coded_measure(&p, window, 50_000, 9).unwrap();
    assert_eq!(single, many);
}

#[test]
fn character_sum_examples() {
    let p = golden2();
    let a = p.alphabet();
    let support = Support::new(vec![0, 3, 7]).unwrap();
    let x = FunnyWord::new(a, support.clone(), vec![0, 1, 2]).unwrap();
    let s = character_sum(&x, &x).unwrap();
    assert_eq!(s.counts, vec![3, 0, 0]);
    assert!((s.value.re - 3.0).abs() < 1e-15 && s.value.im.abs() < 1e-15);

    let binary = atn_core::symbolic::Alphabet::new(2).unwrap();
    let x = FunnyWord::new(binary, support.clone(), vec![0, 1, 0]).unwrap();
    let y = FunnyWord::new(binary, support.clone(), vec![1, 0, 1]).unwrap();
    let s = character_sum(&y, &x).unwrap();
    assert!((s.value.re + 3.0).abs() < 1e-12 && s.value.im.abs() < 1e-12);

    let other = FunnyWord::new(a, Support::new(vec![0, 1, 2]).unwrap(), vec![0, 0, 0]).unwrap();
    let x = FunnyWord::new(a, support, vec![0, 0, 0]).unwrap();
    assert!(character_sum(&other, &x).is_err());
}

proptest! {
    #[test]
    fn character_sum_invariants(
        pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..40),
    ) {
        let a = atn_core::symbolic::Alphabet::new(4).unwrap();
        let support = Support::interval(0, pairs.len() as i64 - 1).unwrap();
        let x = FunnyWord::new(a, support.clone(), pairs.iter().map(|p| p.0).collect()).unwrap();
        let y = FunnyWord::new(a, support, pairs.iter().map(|p| p.1).collect()).unwrap();
        let s = character_sum(&y, &x).unwrap();
        prop_assert_eq!(s.counts.iter().sum::<usize>(), pairs.len());
        prop_assert!(s.value.norm() <= pairs.len() as f64 + 1e-9);
        let direct: num_complex::Complex64 = pairs
            .iter()
            .map(|&(xi, yi)| {
                let d = (yi as i32 - xi as i32).rem_euclid(4) as f64;
                num_complex::Complex64::from_polar(1.0, std::f64::consts::TAU * d / 4.0)
            })
            .sum();
        prop_assert!((direct - s.value).norm() < 1e-9);
        // Triangle-inequality step: |S| >= a_1 - (n - a_1).
        let a1 = s.counts[0] as f64;
        prop_assert!(s.value.norm() + 1e-9 >= a1 - (pairs.len() as f64 - a1));
    }
}

#[test]
fn mean_square_character_sum_on_mixed_supports() {
    let p = golden2();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for len in [10usize, 30] {
        let contiguous = Support::interval(0, len as i64 - 1).unwrap();
        let mut scattered: Vec<i64> = Vec::new();
        while scattered.len() < len {
            let v = rng.random_range(-500..500);
            if !scattered.contains(&v) {
                scattered.push(v);
            }
        }
        for support in [contiguous, Support::new(scattered.clone()).unwrap()] {
            let x = sample_base_word(&p, &support, 5).unwrap();
            let r = mean_square_character_sum(&p, &x, 100_000, 6).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
}

#[test]
fn checks_agree_with_empirical_ball_and_implication() {
    let p = golden2();
    let support = Support::interval(0, 29).unwrap();
    let x = sample_base_word(&p, &support, 11).unwrap();
    let n_s = 100_000;
    let ineq = ineq3_check(&p, &x, n_s, 12).unwrap();
    let em = sample_coded_measure(&p, support.hull(), n_s, 12).unwrap();
    let ball = ball_measure_empirical(&em, &x, ineq3_radius(2), 0.5).unwrap();
    assert!((ineq.statistic - 60.0 * ball.estimate).abs() < 1e-12);
    assert_eq!(ineq.implication_violations, 0);
    assert!(ineq.ball_hits > 0);

    let markov = markov_tail_check(&p, &x, n_s, 12).unwrap();
    assert_eq!(markov.implication_violations, 0);
    assert!(markov.tail_hits >= markov.ball_hits);
    assert!(markov.pass);
    assert!((markov.bound - 36.0 / 25.0 / 30.0).abs() < 1e-15);
}

#[test]
fn single_site_checks() {
    let p = golden2();
    let support = Support::new(vec![0]).unwrap();
    let x = sample_base_word(&p, &support, 1).unwrap();
    let markov = markov_tail_check(&p, &x, 10_000, 2).unwrap();
    assert!(markov.bound >= 1.0 && markov.pass);
    let ineq = ineq3_check(&p, &x, 100_000, 2).unwrap();
    // The ball is the one-symbol cylinder: ν ≈ 1/3, statistic ≈ 2/3.
    assert!((ineq.statistic - 2.0 / 3.0).abs() < 4.0 * ineq.sigma.max(1e-3));
    assert!(ineq.pass);
}

#[test]
fn pair_correlations_small_sample() {
    let p = golden2();
    let r = pair_correlations(&p, 3, 100_000, 1).unwrap();
    assert_eq!(r.cells.len(), 27);
    let total: f64 = r.cells.iter().filter(|c| c.lag == 2).map(|c| c.frequency).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(pair_correlations(&p, 0, 10, 1).is_err());
}

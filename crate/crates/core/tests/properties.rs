use bakerevt_core::geometry::ellipse_disk_ratio;
use bakerevt_core::measure::{srb_ball_measure, Ball, EstimatorResult, SelfSimilar};
use bakerevt_core::pointprocess::{poisson_pmf, polya_aeppli_pmf, tv_distance};
use bakerevt_core::symbolic::{
    conjugacy_tolerance, BakerParams, Metric, Orbit, Point, SymbolicPoint, Word,
};
use bakerevt_core::ulam::{build_ulam, decode_dump, encode_dump, punch_hole, CoverKind};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = BakerParams> {
    (0.2f64..0.8, 0.1f64..0.5, 0.1f64..0.5)
        .prop_map(|(a, ga, gb)| BakerParams::new(a, ga, gb).unwrap())
}

fn bits(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..=1, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shift_is_conjugate_to_the_map(p in params(), past in bits(64), future in bits(84)) {
        let depth = 64;
        let steps = 20;
        let tol = conjugacy_tolerance(&p, steps, depth);
        let z = SymbolicPoint::from_symbols(p, &past, &future).unwrap();
        let start = z.evaluate_coords(depth).unwrap();
        let (mut x, mut y) = (start.x, start.y);
        for k in 1..=steps {
            if (y - p.alpha()).abs() <= tol {
                break;
            }
            (x, y) = p.apply_map_coords(x, y).unwrap();
            let s = z.apply_shift(k).unwrap().evaluate_coords(depth).unwrap();
            prop_assert!((s.x - x).abs() <= tol && (s.y - y).abs() <= tol, "k = {k}");
        }
    }

    #[test]
    fn shared_past_contracts_shared_future_expands(
        p in params(),
        m in 1usize..30,
        common in bits(30),
        tail_a in bits(30),
        tail_b in bits(30),
    ) {
        let mk = |tail: &[u8]| {
            let mut s = common[..m].to_vec();
            s.extend_from_slice(tail);
            s
        };
        let (sa, sb) = (mk(&tail_a), mk(&tail_b));
        let a = SymbolicPoint::from_symbols(p, &sa, &sa).unwrap();
        let b = SymbolicPoint::from_symbols(p, &sb, &sb).unwrap();
        let (pa, pb) = (a.evaluate_coords(m + 30).unwrap(), b.evaluate_coords(m + 30).unwrap());
        prop_assert!((pa.x - pb.x).abs() <= p.max_contraction().powi(m as i32) + 1e-15);
        prop_assert!((pa.y - pb.y).abs() <= p.max_y_ratio().powi(m as i32) + 1e-15);
    }

    #[test]
    fn periodic_points_return_exactly(p in params(), w in bits(12), len in 1usize..=12) {
        let word = Word::new(w[..len].to_vec()).unwrap();
        let pp = SymbolicPoint::periodic_with_capacity(p, &word, 64, len);
        let a = pp.point.evaluate_coords(64).unwrap();
        let b = pp.point.apply_shift(len).unwrap().evaluate_coords(64).unwrap();
        prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
        prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        prop_assert!(len % pp.minimal_period == 0);
    }

    #[test]
    fn word_text_round_trip(w in bits(40), len in 1usize..=40) {
        let word = Word::new(w[..len].to_vec()).unwrap();
        let back: Word = word.to_string().parse().unwrap();
        prop_assert_eq!(back, word);
    }

    #[test]
    fn orbit_engine_matches_stored_shift(p in params(), past in bits(64), future in bits(200)) {
        let z = SymbolicPoint::from_symbols(p, &past, &future).unwrap();
        let (mut orbit, mut src) = Orbit::from_point_for(&z, 100).unwrap();
        for k in 0..100 {
            let Ok(q) = orbit.next_point(&mut src) else { break };
            let s = z.apply_shift(k).unwrap().evaluate_coords(64).unwrap();
            prop_assert!((q.x - s.x).abs() < 1e-12 && (q.y - s.y).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn polya_aeppli_is_a_distribution(theta in 0.2f64..=1.0, t in 0.1f64..3.0) {
        let pmf: Vec<f64> = (0..=200).map(|k| polya_aeppli_pmf(theta, t, k).unwrap()).collect();
        prop_assert!(pmf.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((mean - t).abs() < 1e-8);
    }

    #[test]
    fn polya_aeppli_degenerates_to_poisson(t in 0.01f64..10.0, k in 0u64..80) {
        prop_assert_eq!(polya_aeppli_pmf(1.0, t, k).unwrap(), poisson_pmf(t, k));
    }

    #[test]
    fn tv_is_a_metric(
        a in proptest::collection::vec(0.0f64..1.0, 1..8),
        b in proptest::collection::vec(0.0f64..1.0, 1..8),
        c in proptest::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let (a, b, c) = (norm(a), norm(b), norm(c));
        let d = tv_distance(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert_eq!(d, tv_distance(&b, &a));
        prop_assert!(tv_distance(&a, &a) < 1e-8);
        prop_assert!(d <= tv_distance(&a, &c) + tv_distance(&c, &b) + 1e-12);
    }

    #[test]
    fn bernoulli_estimates_are_frequencies(n in 2u64..10_000, frac in 0.0f64..=1.0) {
        let s = (n as f64 * frac) as u64;
        let e = EstimatorResult::bernoulli(s, n);
        prop_assert!((0.0..=1.0).contains(&e.estimate));
        prop_assert!(e.std_error >= 0.0 && e.std_error <= 0.5 / ((n - 1) as f64).sqrt() + 1e-15);
    }

    #[test]
    fn ball_measure_grows_with_radius(
        a in 0.3f64..0.7,
        g in 0.15f64..0.5,
        x in 0.0f64..=1.0,
        y in 0.0f64..=1.0,
        r in 0.01f64..0.2,
        sup in any::<bool>(),
    ) {
        let p = BakerParams::symmetric(a, g).unwrap();
        let metric = if sup { Metric::Sup } else { Metric::Euclidean };
        let small = srb_ball_measure(&p, &Ball::new(Point::new(x, y), r, metric).unwrap());
        let big = srb_ball_measure(&p, &Ball::new(Point::new(x, y), 2.0 * r, metric).unwrap());
        prop_assert!((0.0..=1.0).contains(&small));
        prop_assert!(small <= big * (1.0 + 1e-6) + 1e-12);
    }

    #[test]
    fn self_similar_cdf_is_monotone(p in params(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let mu = SelfSimilar::horizontal(&p);
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(mu.cdf(lo) <= mu.cdf(hi));
        prop_assert!((mu.mass(lo, hi) - (mu.cdf(hi) - mu.cdf(lo))).abs() < 1e-12);
    }

    #[test]
    fn ulam_rows_are_stochastic(m in 1u32..=6) {
        let op = build_ulam(m).unwrap();
        prop_assert!(op.row_sums().iter().all(|&s| s == 1.0));
        prop_assert!(op.column_sums().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn ulam_dump_round_trips(
        m in 2u32..=5,
        x in 0.0f64..=1.0,
        y in 0.0f64..=1.0,
        r in 0.01f64..0.2,
        sup in any::<bool>(),
    ) {
        let metric = if sup { Metric::Sup } else { Metric::Euclidean };
        let ball = Ball::new(Point::new(x, y), r, metric).unwrap();
        let op = punch_hole(&build_ulam(m).unwrap(), &ball, CoverKind::Outer).unwrap();
        let bytes = encode_dump(&op);
        prop_assert_eq!(encode_dump(&decode_dump(&bytes).unwrap()), bytes);
    }

    #[test]
    fn dump_decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = decode_dump(&bytes);
        let mut framed = b"BKULAM01".to_vec();
        framed.extend_from_slice(&bytes);
        let _ = decode_dump(&framed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ellipse_ratio_is_a_decreasing_fraction(p in 1u32..=3, k in 1u32..=4) {
        let r = ellipse_disk_ratio(p, k).unwrap();
        let next = ellipse_disk_ratio(p, k + 1).unwrap();
        prop_assert!(0.0 < next && next < r && r < 1.0);
    }
}

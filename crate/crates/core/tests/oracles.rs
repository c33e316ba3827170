mod common;

use std::collections::BTreeMap;

use common::oracle;
use labelassist::imgcore::{self, BitDepth, Connectivity, Image, Mask};
use labelassist::post_assist::{self, PostprocessSpec};
use labelassist::selector::{
    aggregate_scores, next_sample, QueryStrategyId, SampleId, SelectorConfig, StrategyScores, StrategyWeight,
    TieBreak,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn otsu_matches_exhaustive_scan() {
    let mut r = rng(1);
    for _ in 0..300 {
        let img = oracle::random_image(&mut r, 64);
        assert_eq!(imgcore::otsu_threshold(&img).ok(), oracle::otsu(&img), "{img:?}");
    }
}

#[test]
fn otsu_sixteen_bit_matches_scan() {
    let mut r = rng(2);
    for _ in 0..30 {
        let (w, h) = (r.gen_range(2..20), r.gen_range(2..20));
        let data = (0..w * h).map(|_| r.gen_range(0..=u16::MAX)).collect();
        let img = Image::gray(w, h, BitDepth::Sixteen, data).unwrap();
        assert_eq!(imgcore::otsu_threshold(&img).ok(), oracle::otsu(&img));
    }
}

#[test]
fn components_and_holes_match_flood_fill() {
    let mut r = rng(3);
    for _ in 0..300 {
        let m = oracle::random_mask(&mut r, 32);
        assert_eq!(
            imgcore::connected_components(&m, Connectivity::Eight).1 as usize,
            oracle::components(&m, true)
        );
        assert_eq!(
            imgcore::connected_components(&m, Connectivity::Four).1 as usize,
            oracle::components(&m, false)
        );
        assert_eq!(imgcore::count_holes(&m), oracle::holes(&m));
        assert_eq!(imgcore::fill_holes(&m), oracle::fill_holes(&m));
        let min_area = r.gen_range(0..20);
        assert_eq!(imgcore::remove_small_segments(&m, min_area), oracle::remove_small(&m, min_area));
    }
}

#[test]
fn morphology_matches_window_definitions() {
    let mut r = rng(4);
    for _ in 0..150 {
        let m = oracle::random_mask(&mut r, 24);
        let radius = r.gen_range(1..4);
        assert_eq!(imgcore::dilate(&m, radius).unwrap(), oracle::dilate(&m, radius));
        assert_eq!(imgcore::erode(&m, radius).unwrap(), oracle::erode(&m, radius));
        assert_eq!(imgcore::morph_close(&m, radius).unwrap(), oracle::close(&m, radius));
        assert_eq!(imgcore::morph_open(&m, radius).unwrap(), oracle::open(&m, radius));
    }
}

#[test]
fn filters_match_sorting_oracles() {
    let mut r = rng(5);
    for _ in 0..60 {
        let img = oracle::random_image(&mut r, 20);
        let radius = r.gen_range(1..3);
        assert_eq!(imgcore::denoise_median(&img, radius).unwrap().data(), oracle::median(&img, radius));
        let lo = r.gen_range(0.0..50.0);
        let hi = r.gen_range(lo + 1.0..=100.0);
        assert_eq!(imgcore::percentile_level(&img, lo).unwrap(), oracle::percentile(&img, lo));
        assert_eq!(imgcore::normalize_intensity(&img, lo, hi).unwrap().data(), oracle::normalize(&img, lo, hi));
    }
}

#[test]
fn dice_analytic_case() {
    let a = Mask::from_fn(4, 4, |x, y| y == 0 && x < 4);
    let b = Mask::from_fn(4, 4, |x, y| (y == 0 && x >= 2) || (y == 1 && x < 2));
    assert_eq!((a.area(), b.area()), (4, 4));
    assert_eq!(imgcore::dice(&a, &b).unwrap(), 0.5);
    let empty = Mask::empty(3, 3);
    assert_eq!(imgcore::dice(&empty, &empty).unwrap(), 1.0);
}

fn mask_pair() -> impl Strategy<Value = (Mask, Mask)> {
    (1u32..16, 1u32..16, any::<u64>()).prop_map(|(w, h, seed)| {
        let mut r = rng(seed);
        let (p, q) = (r.gen_range(0.0..=1.0), r.gen_range(0.0..=1.0));
        (Mask::from_fn(w, h, |_, _| r.gen_bool(p)), Mask::from_fn(w, h, |_, _| r.gen_bool(q)))
    })
}

fn any_mask() -> impl Strategy<Value = Mask> {
    (any::<u64>(), 1u32..40).prop_map(|(seed, side)| oracle::random_mask(&mut rng(seed), side))
}

fn weights_and_scores() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (1usize..5, 1usize..12).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec(0.0f64..10.0, k).prop_filter("nonzero", |w| w.iter().sum::<f64>() > 0.0),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), k),
        )
    })
}

const STRATEGIES: [fn() -> QueryStrategyId; 4] = [
    || QueryStrategyId::Sequential,
    || QueryStrategyId::Random,
    || QueryStrategyId::CherryPick,
    || QueryStrategyId::SequenceAware,
];

fn build(weights: &[f64], scores: &[Vec<f64>]) -> (SelectorConfig, Vec<StrategyScores>) {
    let ids: Vec<SampleId> = (0..scores[0].len()).map(|i| SampleId::new(format!("x{i:02}"))).collect();
    let cfg = SelectorConfig {
        entries: weights
            .iter()
            .enumerate()
            .map(|(j, &weight)| StrategyWeight {
                strategy: STRATEGIES[j](),
                weight,
            })
            .collect(),
        tie_break: TieBreak::LowestId,
        seed: 0,
    };
    let per = scores
        .iter()
        .enumerate()
        .map(|(j, s)| {
            StrategyScores::new(STRATEGIES[j](), ids.iter().cloned().zip(s.iter().copied()).collect()).unwrap()
        })
        .collect();
    (cfg, per)
}

proptest! {
    #[test]
    fn dice_properties((a, b) in mask_pair()) {
        let d = imgcore::dice(&a, &b).unwrap();
        prop_assert_eq!(d, imgcore::dice(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - oracle::dice(&a, &b)).abs() < 1e-15);
        if a.area() > 0 {
            prop_assert_eq!(imgcore::dice(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn closing_and_opening_laws(m in any_mask(), r in 1u32..4) {
        let c = imgcore::morph_close(&m, r).unwrap();
        let o = imgcore::morph_open(&m, r).unwrap();
        prop_assert!(m.is_subset_of(&c));
        prop_assert!(o.is_subset_of(&m));
        prop_assert_eq!(imgcore::morph_close(&c, r).unwrap(), c);
        prop_assert_eq!(imgcore::morph_open(&o, r).unwrap(), o);
    }

    #[test]
    fn hole_filling_laws(m in any_mask()) {
        let f = imgcore::fill_holes(&m);
        prop_assert_eq!(imgcore::count_holes(&f), 0);
        prop_assert!(m.is_subset_of(&f));
        prop_assert_eq!(m.xor_count(&f).unwrap(), f.area() - m.area());
        prop_assert_eq!(imgcore::fill_holes(&f), f);
    }

    #[test]
    fn default_postprocess_is_idempotent(m in any_mask()) {
        let spec = PostprocessSpec::default();
        let once = spec.apply(&m).unwrap();
        prop_assert_eq!(spec.apply(&once).unwrap(), once);
    }

    #[test]
    fn aggregation_matches_formula((weights, scores) in weights_and_scores()) {
        let (cfg, per) = build(&weights, &scores);
        let got = aggregate_scores(&per, &cfg).unwrap();
        let total: f64 = weights.iter().sum();
        for (i, value) in got.values().enumerate() {
            let direct: f64 = weights.iter().zip(&scores).map(|(w, s)| w * s[i]).sum::<f64>() / total;
            prop_assert!((value - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn argmax_invariant_under_weight_scaling((weights, scores) in weights_and_scores(), c in 1e-3f64..1e3) {
        let (cfg, per) = build(&weights, &scores);
        let scaled: Vec<f64> = weights.iter().map(|w| w * c).collect();
        let (cfg2, _) = build(&scaled, &scores);
        let none = Default::default();
        let a = next_sample(&aggregate_scores(&per, &cfg).unwrap(), &none, TieBreak::LowestId, 0, 0).unwrap();
        let b = next_sample(&aggregate_scores(&per, &cfg2).unwrap(), &none, TieBreak::LowestId, 0, 0).unwrap();
        prop_assert_eq!(a.0, b.0);
    }

    #[test]
    fn inspection_is_weighted_mean(segments in 0u32..6, holes in 0u32..4, ts in 1u32..4, th in 0u32..3,
                                   ws in 0.0f64..5.0, wh in 0.0f64..5.0, gamma0 in 0.0f64..=1.0) {
        prop_assume!(ws + wh > 0.0);
        // Row of `segments` separated 3x3 rings (each ring one hole) then
        // solid squares.
        let m = Mask::from_fn(40, 5, |x, y| {
            let k = x / 4;
            let (lx, ly) = (x % 4, y);
            k < segments && lx < 3 && ly < 3 && !(k < holes && lx == 1 && ly == 1)
        });
        let metrics = vec![
            post_assist::InspectionMetricSpec {
                metric: post_assist::InspectionMetric::SegmentCount { target: ts },
                weight: ws,
            },
            post_assist::InspectionMetricSpec {
                metric: post_assist::InspectionMetric::HoleCount { target: th },
                weight: wh,
            },
        ];
        let report = post_assist::inspect(&m, &metrics, gamma0).unwrap();
        let g = |obs: u32, t: u32| 1.0 / (1.0 + (obs as f64 - t as f64).abs());
        let h = holes.min(segments);
        let direct = (ws * g(segments, ts) + wh * g(h, th)) / (ws + wh);
        prop_assert!((report.final_score - direct).abs() <= 1e-12);
        prop_assert_eq!(report.warning, report.final_score <= gamma0);
    }
}

#[test]
fn unlabeled_argmax_is_never_labeled() {
    let mut r = rng(9);
    for _ in 0..200 {
        let n = r.gen_range(2..10);
        let scores: BTreeMap<SampleId, f64> = (0..n)
            .map(|i| (SampleId::new(format!("s{i}")), (r.gen_range(0..4) as f64) / 3.0))
            .collect();
        let labeled = scores.keys().filter(|_| r.gen_bool(0.4)).cloned().collect();
        let tie = if r.gen_bool(0.5) { TieBreak::LowestId } else { TieBreak::SeededRandom };
        match next_sample(&scores, &labeled, tie, r.gen(), r.gen()) {
            Ok((id, s)) => {
                assert!(!labeled.contains(&id));
                let best = scores.iter().filter(|(k, _)| !labeled.contains(*k)).map(|(_, &v)| v).fold(f64::MIN, f64::max);
                assert_eq!(s, best);
            }
            Err(_) => assert_eq!(labeled.len(), n),
        }
    }
}

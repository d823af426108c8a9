//! Property tests for the structural invariants of covers, classification
//! and leader fields.

use fractal_core::bits::BitSet;
use fractal_core::cover::{build_cover, CoverConfig};
use fractal_core::duplication::{audit_card_bounds, classify, DuplicationParams};
use fractal_core::leaders::{compute_leaders, increasing_spectrum, SpectrumOptions};
use fractal_core::lws::{render_haar, synthesize, LwsParams};
use fractal_core::spec::FractalSpec;
use proptest::prelude::*;

fn arb_digit_spec() -> impl Strategy<Value = (FractalSpec, u32, f64)> {
    (1u32..=3, proptest::collection::btree_set(0u16..8, 1..=4)).prop_filter_map(
        "digits must fit the block",
        |(m, digits)| {
            let limit = 1u16 << m;
            let ds: Vec<u16> = digits.into_iter().filter(|&d| d < limit).collect();
            if ds.is_empty() {
                return None;
            }
            let spec = FractalSpec::digit_restricted(m, &ds).ok()?;
            let h = (ds.len() as f64).log2() / m as f64;
            Some((spec, m, h))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn count_range_matches_naive(
        members in proptest::collection::btree_set(0u64..512, 0..64),
        lo in 0u64..512,
        span in 0u64..512,
    ) {
        let mut set = BitSet::new(512);
        for &m in &members {
            set.insert(m);
        }
        let hi = (lo + span).min(512);
        let naive = members.iter().filter(|&&m| m >= lo && m < hi).count() as u64;
        prop_assert_eq!(set.count_range(lo, hi), naive);
    }

    #[test]
    fn cover_projection_is_exact((spec, _m, _h) in arb_digit_spec(), j in 1u32..10, extra in 1u32..5) {
        let coarse = build_cover(&spec, j).unwrap();
        let fine = build_cover(&spec, j + extra).unwrap();
        prop_assert_eq!(fine.members.project_down(extra), coarse.members);
    }

    #[test]
    fn cover_counts_monotone((spec, _m, _h) in arb_digit_spec(), j in 0u32..12) {
        let a = build_cover(&spec, j).unwrap().count();
        let b = build_cover(&spec, j + 1).unwrap().count();
        prop_assert!(b >= a && b <= 2 * a);
    }

    #[test]
    fn classification_partitions_the_cover(
        (spec, _m, h) in arb_digit_spec(),
        j in 4u32..9,
        eps in 0.01f64..0.3,
    ) {
        let params = DuplicationParams::new(1.0, eps, h);
        let report = classify(&spec, j, &params, &CoverConfig::default()).unwrap();
        let cover = build_cover(&spec, j).unwrap();
        prop_assert_eq!(report.parent_total(), cover.count());
        // Audit margins are finite or +inf, never NaN.
        let audit = audit_card_bounds(&report);
        prop_assert!(!audit.normal_lower.margin_log2.is_nan());
        prop_assert!(!audit.slow_children_upper.margin_log2.is_nan());
    }

    #[test]
    fn leaders_nest_monotonically(seed in 0u64..1000) {
        let p = LwsParams { alpha: 1.0, eta: 0.5, h: 1.0, j_max: 8, seed };
        let c = synthesize(&FractalSpec::FullInterval, &p, &CoverConfig::default()).unwrap();
        let field = compute_leaders(&c, 8);
        for j in 0..8u32 {
            for k in 0..(1u64 << j) {
                let d = field.value(j, k);
                prop_assert!(d >= field.value(j + 1, 2 * k));
                prop_assert!(d >= field.value(j + 1, 2 * k + 1));
            }
        }
    }

    #[test]
    fn spectrum_is_monotone_in_h(seed in 0u64..200) {
        let p = LwsParams { alpha: 1.0, eta: 0.5, h: 1.0, j_max: 10, seed };
        let c = synthesize(&FractalSpec::FullInterval, &p, &CoverConfig::default()).unwrap();
        let field = compute_leaders(&c, 10);
        let grid: Vec<f64> = (1..=10).map(|i| 0.4 + 0.2 * i as f64).collect();
        let est = increasing_spectrum(&field, &grid, &SpectrumOptions::default(), None);
        for pair in est.levels.windows(2) {
            prop_assert!(pair[1].d_leq >= pair[0].d_leq);
        }
    }

    #[test]
    fn renders_add_exactly_for_dyadic_magnitudes(seed in 0u64..100, split in 0u32..7) {
        let p = LwsParams { alpha: 1.0, eta: 0.5, h: 1.0, j_max: 6, seed };
        let full = synthesize(&FractalSpec::FullInterval, &p, &CoverConfig::default()).unwrap();
        let mut low = full.clone();
        let mut high = full.clone();
        for j in 0..=6usize {
            if (j as u32) < split {
                high.active[j] = BitSet::new(1u64 << j);
            } else {
                low.active[j] = BitSet::new(1u64 << j);
            }
        }
        let r_full = render_haar(&full, 7).unwrap();
        let r_low = render_haar(&low, 7).unwrap();
        let r_high = render_haar(&high, 7).unwrap();
        for i in 0..r_full.len() {
            prop_assert_eq!(r_full[i], r_low[i] + r_high[i]);
        }
    }
}

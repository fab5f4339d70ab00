//! Tests against scipy fixtures and an independent oracle built on `statrs`.

use alseg::stats::{paired_t, unpaired_t, wilcoxon_signed_rank, Direction};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn upper_t(t: f64, df: f64) -> f64 {
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

fn oracle_welch(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (vx, vy) = (var(x) / x.len() as f64, var(y) / y.len() as f64);
    let t = (mean(x) - mean(y)) / (vx + vy).sqrt();
    let df = (vx + vy).powi(2) / (vx * vx / (x.len() - 1) as f64 + vy * vy / (y.len() - 1) as f64);
    (t, upper_t(t, df))
}

/// W⁺ with average ranks, and its upper-tail normal p-value.
fn oracle_wilcoxon(d: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = d.iter().copied().filter(|&v| v != 0.0).collect();
    let n = d.len() as f64;
    let rank = |v: f64| {
        let below = d.iter().filter(|w| w.abs() < v.abs()).count() as f64;
        let equal = d.iter().filter(|w| w.abs() == v.abs()).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let w: f64 = d.iter().filter(|&&v| v > 0.0).map(|&v| rank(v)).sum();
    let mut mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < mags.len() {
        let j = mags[i..].iter().take_while(|&&m| m == mags[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let sd = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0).sqrt();
    let z = (w - n * (n + 1.0) / 4.0 - 0.5) / sd;
    (w, 1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z))
}

#[test]
fn scipy_fixtures() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/stats_reference.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let fixtures = doc["fixtures"].as_array().unwrap();
    assert_eq!(fixtures.len(), 50);
    let v = |x: &serde_json::Value| -> Vec<f64> { x.as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect() };
    for f in fixtures {
        let dir = if f["direction"] == "less" { Direction::Less } else { Direction::Greater };
        let (x, y, z) = (v(&f["x"]), v(&f["y"]), v(&f["z"]));
        let w = unpaired_t(&x, &z, dir).unwrap();
        assert!((w.p_one_sided - f["welch_p"].as_f64().unwrap()).abs() < 1e-6);
        let s = wilcoxon_signed_rank(&x, &y, dir).unwrap();
        assert!((s.p_one_sided - f["wilcoxon_p"].as_f64().unwrap()).abs() < 1e-6);
        assert_eq!(s.statistic, f["wilcoxon_w"].as_f64().unwrap());
        let p = paired_t(&x, &y, dir).unwrap();
        assert!((p.p_one_sided - f["paired_p"].as_f64().unwrap()).abs() < 1e-6);
    }
}

#[test]
fn worked_paired_example() {
    let r = paired_t(&[1.0, 2.0, 3.0], &[0.0; 3], Direction::Greater).unwrap();
    assert!((r.statistic - 12f64.sqrt()).abs() < 1e-12);
    assert!((r.p_one_sided - 0.0371).abs() < 1e-3);
    assert!((r.p_one_sided - upper_t(12f64.sqrt(), 2.0)).abs() < 1e-9);
}

#[test]
fn antisymmetric_wilcoxon_is_centred() {
    let d = [1.0, -1.0, 2.0, -2.0];
    let r = wilcoxon_signed_rank(&d, &[0.0; 4], Direction::Greater).unwrap();
    assert_eq!(r.statistic, 5.0);
    assert!((r.p_one_sided - 0.5).abs() < 0.15);
}

#[test]
fn degenerate_conventions() {
    let x = [0.4, 0.6, 0.8];
    let r = wilcoxon_signed_rank(&x, &x, Direction::Greater).unwrap();
    assert!(r.degenerate && r.p_one_sided == 1.0);
    assert_eq!(paired_t(&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0], Direction::Greater).unwrap().p_one_sided, 0.0);
    assert_eq!(unpaired_t(&[1.0, 1.0], &[3.0, 3.0], Direction::Less).unwrap().p_one_sided, 0.0);
    assert!(paired_t(&[1.0], &[2.0], Direction::Greater).unwrap().degenerate);
    assert!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0], Direction::Less).is_err());
}

fn sample(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-400i32..400).prop_map(|v| v as f64 / 100.0), n)
}

fn paired(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|k| (sample(k..k + 1), sample(k..k + 1)))
}

proptest! {
    #[test]
    fn p_values_in_unit_interval((x, y) in paired(2..30)) {
        for dir in [Direction::Greater, Direction::Less] {
            for r in [paired_t(&x, &y, dir).unwrap(), unpaired_t(&x, &y, dir).unwrap(), wilcoxon_signed_rank(&x, &y, dir).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&r.p_one_sided), "{:?}", r);
            }
        }
    }

    #[test]
    fn t_tails_sum_to_one((x, y) in paired(2..30)) {
        let g = paired_t(&x, &y, Direction::Greater).unwrap();
        let l = paired_t(&x, &y, Direction::Less).unwrap();
        if !g.degenerate || g.p_one_sided == 0.5 {
            prop_assert!((g.p_one_sided + l.p_one_sided - 1.0).abs() < 1e-12);
        }
        let g = unpaired_t(&x, &y, Direction::Greater).unwrap();
        let l = unpaired_t(&x, &y, Direction::Less).unwrap();
        if !g.degenerate || g.p_one_sided == 0.5 {
            prop_assert!((g.p_one_sided + l.p_one_sided - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_sign_survives_affine_rescaling((x, y) in paired(2..20), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let f = |v: &[f64]| v.iter().map(|a| scale * a + shift).collect::<Vec<_>>();
        let a = paired_t(&x, &y, Direction::Greater).unwrap().statistic;
        let b = paired_t(&f(&x), &f(&y), Direction::Greater).unwrap().statistic;
        prop_assert_eq!(a.signum(), b.signum());
        let a = unpaired_t(&x, &y, Direction::Greater).unwrap().statistic;
        let b = unpaired_t(&f(&x), &f(&y), Direction::Greater).unwrap().statistic;
        prop_assert_eq!(a.signum(), b.signum());
    }

    #[test]
    fn welch_matches_oracle(x in sample(3..25), y in sample(3..25)) {
        prop_assume!(var(&x) > 0.0 && var(&y) > 0.0);
        let (t, p) = oracle_welch(&x, &y);
        let r = unpaired_t(&x, &y, Direction::Greater).unwrap();
        prop_assert!((r.statistic - t).abs() < 1e-9 * t.abs().max(1.0));
        prop_assert!((r.p_one_sided - p).abs() < 1e-6);
    }

    #[test]
    fn wilcoxon_matches_oracle((x, y) in paired(2..40)) {
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        prop_assume!(d.iter().any(|&v| v != 0.0));
        let (w, p) = oracle_wilcoxon(&d);
        let r = wilcoxon_signed_rank(&x, &y, Direction::Greater).unwrap();
        prop_assert_eq!(r.statistic, w);
        prop_assert!((r.p_one_sided - p).abs() < 1e-6);
    }

    #[test]
    fn reversing_direction_reverses_the_tail((x, y) in paired(3..20)) {
        let g = wilcoxon_signed_rank(&x, &y, Direction::Greater).unwrap();
        let swapped = wilcoxon_signed_rank(&y, &x, Direction::Less).unwrap();
        prop_assert!((g.p_one_sided - swapped.p_one_sided).abs() < 1e-12);
        let g = paired_t(&x, &y, Direction::Greater).unwrap();
        let swapped = paired_t(&y, &x, Direction::Less).unwrap();
        prop_assert!((g.p_one_sided - swapped.p_one_sided).abs() < 1e-12);
    }
}

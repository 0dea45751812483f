use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

use superres::bounds::{bound_inf, bounds_near, tail_bound, tail_bound_coarse};
use superres::kernel::{kgamma_all, kgamma_eval, KernelSpec};
use superres::kernel_sum::KernelSumTable;

const SLACK: f64 = 1e-12;
const TAU_MIN: f64 = 1.26;

fn spec(fc: f64) -> KernelSpec {
    KernelSpec::default_for(fc).unwrap()
}

/// Shared table at a modest grid step; soundness does not depend on the step.
fn table() -> &'static KernelSumTable {
    static T: OnceLock<KernelSumTable> = OnceLock::new();
    T.get_or_init(|| KernelSumTable::build(&spec(1e3), TAU_MIN, 1e-4, TAU_MIN / 2.0).unwrap())
}

fn scaled_kernel(spec: &KernelSpec, tau: f64) -> [f64; 4] {
    let fc = spec.f_cut();
    let k = kgamma_all(spec, tau / fc);
    std::array::from_fn(|l| k[l] / fc.powi(l as i32))
}

#[test]
fn sandwich_sweep_has_no_violations() {
    let mut violations = Vec::new();
    for fc in [1e3, 1e4] {
        let s = spec(fc);
        for i in 1..=3000 {
            let tau = i as f64 * 1e-3;
            let k = scaled_kernel(&s, tau);
            for (l, &value) in k.iter().enumerate() {
                let scale = fc.powi(l as i32);
                let (lo, hi) = bounds_near(&s, tau, l).unwrap();
                let (lo, hi) = (lo / scale, hi / scale);
                if value < lo - SLACK || value > hi + SLACK {
                    violations.push((fc, l, tau, lo, value, hi));
                }
            }
        }
    }
    assert!(violations.is_empty(), "{} violations, first {:?}", violations.len(), violations.first());
}

#[test]
fn tail_bound_is_valid_and_decreasing_on_its_range() {
    let s = spec(1e3);
    for l in 0..4 {
        let mut prev = f64::INFINITY;
        for i in 0..=44_900 {
            let tau = 1.0 + i as f64 * 0.01;
            let b = tail_bound(&s, tau, l).unwrap();
            assert!(b <= prev, "order {l}: not decreasing at tau = {tau}");
            let k = kgamma_eval(&s, tau / 1e3, l).unwrap().abs();
            assert!(k <= b * (1.0 + SLACK) + SLACK, "order {l}: |K| = {k} > {b} at tau = {tau}");
            prev = b;
        }
    }
}

#[test]
fn zeroth_tail_bound_approaches_the_product_limit() {
    let tau = 400.0;
    let limit = |s: &KernelSpec| -> f64 { s.gamma().iter().map(|g| 1.0 / (2.0 * PI * g * tau)).product() };
    // At f_min = 10^3 each factor carries 1 / (1 - pi^2 tau^2 / (6 f_min^2)).
    let s = spec(1e3);
    let correction = (1.0 - PI * PI * tau * tau / 6e6).powi(-3);
    let ratio = tail_bound(&s, tau, 0).unwrap() / (limit(&s) * correction);
    assert!((ratio - 1.0).abs() < 1e-12, "{ratio}");
    // With a large f_min the correction vanishes and the plain product remains.
    let wide = KernelSpec::new(s.gamma().to_vec(), 1e5, 1e5).unwrap();
    let ratio = tail_bound(&wide, tau, 0).unwrap() / limit(&wide);
    assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn kernel_sums_are_positive_finite_and_reproducible() {
    let s = spec(1e3);
    let a = KernelSumTable::build(&s, TAU_MIN, 1e-4, TAU_MIN / 2.0).unwrap();
    let b = table();
    for k in -(a.max_index() as i64)..=a.max_index() as i64 {
        for l in 0..4 {
            let v = a.at_index(l, k);
            assert!(v.is_finite() && v > 0.0, "H_{l} at index {k} = {v}");
            assert_eq!(v.to_bits(), b.at_index(l, k).to_bits());
        }
    }
}

#[test]
fn kernel_sums_scale_with_the_cutoff() {
    let small = KernelSumTable::build(&spec(1e3), TAU_MIN, 1e-3, 0.3).unwrap();
    let large = KernelSumTable::build(&spec(2e3), TAU_MIN, 1e-3, 0.3).unwrap();
    for l in 0..4 {
        let ratio = large.value(l, 0.2).unwrap() / small.value(l, 0.2).unwrap();
        let expected = 2f64.powi(l as i32);
        assert!((ratio - expected).abs() <= 1e-12 * expected, "order {l}: {ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sandwich_holds_at_random_cutoffs(fc in 1e3..1e4f64, tau in 1e-3..3.0f64, l in 0usize..4) {
        let s = spec(fc);
        let (lo, hi) = bounds_near(&s, tau, l).unwrap();
        let scale = fc.powi(l as i32);
        let k = scaled_kernel(&s, tau)[l];
        prop_assert!(lo / scale - SLACK <= k && k <= hi / scale + SLACK, "{} <= {} <= {}", lo / scale, k, hi / scale);
    }

    #[test]
    fn kernel_derivatives_match_differences(fc in 1e3..1e4f64, tau in 0.01..20.0f64, l in 1usize..4) {
        let s = spec(fc);
        let h = 1e-5 / fc;
        let t = tau / fc;
        let exact = kgamma_eval(&s, t, l).unwrap();
        let fd = (kgamma_eval(&s, t + h, l - 1).unwrap() - kgamma_eval(&s, t - h, l - 1).unwrap()) / (2.0 * h);
        let scale = (2.0 * PI * fc).powi(l as i32);
        prop_assert!((exact - fd).abs() <= 1e-5 * scale, "{} vs {}", exact, fd);
    }

    #[test]
    fn bound_inf_covers_its_cell(tau in 0.0..40.0f64, offset in -1.0..1.0f64, l in 0usize..4) {
        let s = spec(1e3);
        let eps = 1e-6;
        let b = bound_inf(&s, tau, eps, l).unwrap();
        let k = kgamma_eval(&s, (tau + offset * eps) / 1e3, l).unwrap().abs();
        prop_assert!(k <= b * (1.0 + SLACK), "{} > {}", k, b);
        prop_assert!(bound_inf(&s, tau, 2.0 * eps, l).unwrap() >= b);
    }

    #[test]
    fn coarse_tail_bound_dominates_the_kernel(t in 0.08..0.5f64, l in 0usize..4) {
        let s = spec(1e3);
        let b = tail_bound_coarse(&s, t, l).unwrap();
        prop_assert!(b.is_finite() && b > 0.0);
        prop_assert!(kgamma_eval(&s, t, l).unwrap().abs() <= b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Direct summation over 50 spikes, 25 on each side, with gaps of at
    /// least the minimum separation.
    #[test]
    fn kernel_sums_bound_direct_summation(
        tau in -0.63..0.63f64,
        extra in prop::collection::vec(0.0..0.3f64, 50),
        l in 0usize..4,
    ) {
        let s = spec(1e3);
        let fc = s.f_cut();
        let mut spikes = Vec::new();
        let (mut right, mut left) = (0.0, 0.0);
        for (i, e) in extra.iter().enumerate() {
            let gap = TAU_MIN * (1.0 + e) / fc;
            if i % 2 == 0 {
                right += gap;
                spikes.push(right);
            } else {
                left -= gap;
                spikes.push(left);
            }
        }
        let t = tau / fc;
        let direct: f64 = spikes.iter().map(|&tj| kgamma_eval(&s, t - tj, l).unwrap().abs()).sum();
        let h = table().value(l, tau).unwrap() + table().value(l, -tau).unwrap();
        prop_assert!(direct <= h, "sum {} exceeds H {}", direct, h);
    }
}

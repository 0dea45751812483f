use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use superres::model::{forward_measure, forward_multi, LowPassData, MultiSpikeTrain, ProblemConfig, SpikeTrain, C64};
use superres::recovery::{
    check_exact_recovery, demix, estimate_amplitudes, measurement_matrix, recover_gtv, recover_tv,
    RecoveryOptions, RecoveryTolerance,
};

/// Spikes on a grid of `4 f_c` slots, six to eight slots apart, with an
/// off-grid offset so nothing lines up with the locator grid.
fn spike_train(fc: usize, max_spikes: usize) -> impl Strategy<Value = SpikeTrain> {
    let slots = 4 * fc;
    (
        0..slots,
        0.0..1.0f64,
        prop::collection::vec(0usize..3, 1..=max_spikes),
        prop::collection::vec((0.5..2.0f64, -3.2..3.2f64), max_spikes),
    )
        .prop_map(move |(start, offset, gaps, amps)| {
            let mut slot = start;
            let mut support = Vec::new();
            for g in gaps {
                if slot >= start + slots - 6 {
                    break;
                }
                support.push(((slot % slots) as f64 + offset) / slots as f64);
                slot += 6 + g;
            }
            let amps = amps[..support.len()].iter().map(|&(r, p)| C64::from_polar(r, p)).collect();
            SpikeTrain::new(support, amps).unwrap()
        })
}

fn instance(fcs: std::ops::RangeInclusive<usize>, max_spikes: usize) -> impl Strategy<Value = (ProblemConfig, SpikeTrain)> {
    fcs.prop_flat_map(move |fc| (Just(ProblemConfig::new(fc).unwrap()), spike_train(fc, max_spikes)))
}

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tv_pipeline_reproduces_data_and_signal((cfg, x) in instance(4..=20, 5)) {
        let y = forward_measure(&x, cfg);
        let r = recover_tv(&y, &RecoveryOptions::standard()).unwrap();
        let refit = forward_measure(&r.estimate, cfg);
        let diff: f64 = refit.coeffs().iter().zip(y.coeffs()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-6 * y.norm(), "{} vs {}", diff, y.norm());
        let tol = RecoveryTolerance::standard(cfg);
        prop_assert!(check_exact_recovery(&x, &r.estimate, tol.tol_t, tol.tol_a), "{:?}", r.estimate);
        // Sampled locator stays within the dual constraint.
        let p = &r.dual.polynomials()[0];
        let top = (0..8192).map(|g| p.eval(g as f64 / 8192.0).norm()).fold(0.0, f64::max);
        prop_assert!(top <= 1.0 + 1e-6, "{}", top);
    }

    #[test]
    fn tv_recovery_is_homogeneous((cfg, x) in instance(4..=12, 3), s in prop_oneof![1e-3..1e-1f64, 10.0..1e3f64]) {
        let opts = RecoveryOptions::standard();
        let a = recover_tv(&forward_measure(&x, cfg), &opts).unwrap().estimate;
        let b = recover_tv(&forward_measure(&x.scaled(s), cfg), &opts).unwrap().estimate;
        prop_assert_eq!(a.len(), b.len());
        for j in 0..a.len() {
            prop_assert!((a.support()[j] - b.support()[j]).abs() <= 1e-9);
            let expect = a.amplitudes()[j] * s;
            prop_assert!((b.amplitudes()[j] - expect).norm() <= 1e-6 * expect.norm());
        }
    }

    #[test]
    fn demixing_conserves_the_data(
        (cfg, x) in instance(8..=20, 3),
        picks in prop::collection::btree_set(0usize..41, 1..=2),
        values in prop::collection::vec((0.5..2.0f64, -3.2..3.2f64), 2),
    ) {
        let n = cfg.n();
        let mut coeffs = forward_measure(&x, cfg).into_coeffs();
        for (l, &(r, p)) in picks.iter().zip(&values) {
            coeffs[l % n] += C64::from_polar(r, p);
        }
        let y = LowPassData::new(cfg, coeffs).unwrap();
        let r = demix(&y, 1.0 / (n as f64).sqrt(), &RecoveryOptions::standard()).unwrap();
        prop_assume!(r.dual.residuals.converged);
        let fit = forward_measure(&r.spectra, cfg);
        let diff: f64 = (0..n)
            .map(|i| (fit.coeffs()[i] + r.spikes[i] - y.coeffs()[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        prop_assert!(diff <= 1e-6 * y.norm(), "{} vs {}", diff, y.norm());
    }

    #[test]
    fn group_recovery_finds_the_shared_support(
        (cfg, x) in instance(6..=16, 4),
        extra in prop::collection::vec(complex(), 8),
    ) {
        let m = 2;
        let amps = DMatrix::from_fn(x.len(), m, |j, k| if k == 0 { x.amplitudes()[j] } else { extra[j] + x.amplitudes()[j] * 0.5 });
        let truth = MultiSpikeTrain::new(x.support().to_vec(), amps).unwrap();
        let r = recover_gtv(&forward_multi(&truth, cfg), &RecoveryOptions::standard()).unwrap();
        let tol = RecoveryTolerance::standard(cfg);
        prop_assert!(superres::recovery::check_exact_recovery_multi(&truth, &r.estimate, tol.tol_t, tol.tol_a), "{:?}", r.estimate);
    }
}

proptest! {
    #[test]
    fn amplitudes_solve_the_normal_equations(
        fc in 3usize..30,
        raw in prop::collection::btree_set(0usize..64, 1..5),
        data in prop::collection::vec(complex(), 61),
    ) {
        let cfg = ProblemConfig::new(fc).unwrap();
        // At most one point per 1/64, so F_T has full column rank when |T| <= n.
        let support: Vec<f64> = raw.iter().map(|&k| k as f64 / 64.0).collect();
        let y = LowPassData::new(cfg, data[..cfg.n()].to_vec()).unwrap();
        let a = estimate_amplitudes(&support, &y).unwrap();
        let ft = measurement_matrix(&support, cfg);
        let r = DVector::from_column_slice(y.coeffs()) - &ft * DVector::from_column_slice(&a);
        let grad = ft.adjoint() * r;
        prop_assert!(grad.norm() <= 1e-9 * (ft.norm() * y.norm()).max(1.0), "{}", grad.norm());
    }

    #[test]
    fn exact_recovery_check_is_consistent(x in spike_train(10, 5), shift in 1.5..3.0f64, which in 0usize..5) {
        let cfg = ProblemConfig::new(10).unwrap();
        let tol = RecoveryTolerance::standard(cfg);
        prop_assert!(check_exact_recovery(&x, &x, tol.tol_t, tol.tol_a));
        // Reordering the estimate does not matter.
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.reverse();
        let shuffled = SpikeTrain::new(
            order.iter().map(|&j| x.support()[j]).collect(),
            order.iter().map(|&j| x.amplitudes()[j]).collect(),
        ).unwrap();
        prop_assert!(check_exact_recovery(&x, &shuffled, tol.tol_t, tol.tol_a));
        let j = which % x.len();
        // Moving one spike or one amplitude past its tolerance fails the check.
        let mut support = x.support().to_vec();
        support[j] = (support[j] + shift * tol.tol_t).rem_euclid(1.0);
        let moved = SpikeTrain::new(support, x.amplitudes().to_vec()).unwrap();
        prop_assert!(!check_exact_recovery(&x, &moved, tol.tol_t, tol.tol_a));
        let mut amps = x.amplitudes().to_vec();
        amps[j] *= 1.0 + shift * tol.tol_a;
        let scaled = SpikeTrain::new(x.support().to_vec(), amps).unwrap();
        prop_assert!(!check_exact_recovery(&x, &scaled, tol.tol_t, tol.tol_a));
        // A missing spike fails too.
        if x.len() > 1 {
            let fewer = SpikeTrain::new(x.support()[1..].to_vec(), x.amplitudes()[1..].to_vec()).unwrap();
            prop_assert!(!check_exact_recovery(&x, &fewer, tol.tol_t, tol.tol_a));
        }
    }
}

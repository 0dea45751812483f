use nalgebra::DMatrix;
use proptest::prelude::*;

use superres::model::{forward_measure, toeplitz_adjoint, MultiLowPassData, ProblemConfig, SpikeTrain, C64};
use superres::sdp::{min_eigenvalue, psd_project, solve, verify_bounded_polynomial, SdpProblem, SolverOptions};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn hermitian(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    })
}

/// `B B^*` with `B` of random rank.
fn psd(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    (1..=n).prop_flat_map(move |r| {
        prop::collection::vec(complex(), n * r).prop_map(move |v| {
            let b = DMatrix::from_vec(n, r, v);
            &b * b.adjoint()
        })
    })
}

/// Spikes on a grid of `4 f_c` slots, six to eight slots apart.
fn spike_train(fc: usize, max_spikes: usize) -> impl Strategy<Value = SpikeTrain> {
    let slots = 4 * fc;
    (
        0..slots,
        prop::collection::vec(0usize..3, 1..=max_spikes),
        prop::collection::vec((0.5..2.0f64, -3.2..3.2f64), max_spikes),
    )
        .prop_map(move |(start, gaps, amps)| {
            let mut slot = start;
            let mut support = Vec::new();
            for g in gaps {
                if slot >= start + slots - 6 {
                    break;
                }
                support.push((slot % slots) as f64 / slots as f64 + 0.1 / slots as f64);
                slot += 6 + g;
            }
            let amps = amps[..support.len()].iter().map(|&(r, p)| C64::from_polar(r, p)).collect();
            SpikeTrain::new(support, amps).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_keeps_psd_input(n in 1usize..10, q in psd(10)) {
        let q = q.view((0, 0), (n, n)).into_owned();
        let p = psd_project(&q).unwrap();
        prop_assert!((&p - &q).norm() <= 1e-12 * q.norm().max(1.0), "{}", (&p - &q).norm());
    }

    #[test]
    fn projection_is_idempotent_psd_and_nearest(
        m in hermitian(8),
        others in prop::collection::vec(psd(8), 100),
    ) {
        let p = psd_project(&m).unwrap();
        let scale = m.norm().max(1.0);
        prop_assert!(min_eigenvalue(&p).unwrap() >= -1e-12 * scale);
        prop_assert!((psd_project(&p).unwrap() - &p).norm() <= 1e-12 * scale);
        let best = (&m - &p).norm();
        for q in &others {
            prop_assert!(best <= (&m - q).norm() + 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// The returned dual satisfies the LMI, the Toeplitz constraint and, for
    /// demixing, the box constraint, checked independently of the solver's
    /// own diagnostics.
    #[test]
    fn converged_duals_are_feasible(
        x in (2usize..=30).prop_flat_map(|fc| (Just(fc), spike_train(fc, 4))),
        demix in any::<bool>(),
    ) {
        let (fc, x) = x;
        let cfg = ProblemConfig::new(fc).unwrap();
        let y = forward_measure(&x, cfg);
        let eta = 1.0 / (cfg.n() as f64).sqrt();
        let problem = if demix { SdpProblem::demix(&y, eta).unwrap() } else { SdpProblem::tv(&y) };
        let opts = SolverOptions::default();
        let sol = solve(&problem, &opts).unwrap();
        prop_assume!(sol.residuals.converged);
        let tol = opts.tol_abs;
        let chk = verify_bounded_polynomial(&sol.c, &sol.lambda, 1, tol).unwrap();
        prop_assert!(chk.min_eigenvalue >= -tol * sol.lambda.norm().max(1.0), "{:?}", chk);
        let tz = toeplitz_adjoint(&sol.lambda).unwrap();
        let off = tz.iter().enumerate().map(|(d, v)| (v - C64::new(if d == 0 { 1.0 } else { 0.0 }, 0.0)).norm()).fold(0.0, f64::max);
        prop_assert!(off <= tol, "{}", off);
        if demix {
            let top = sol.c.iter().map(|v| v.norm()).fold(0.0, f64::max);
            prop_assert!(top <= eta + tol, "{} > {}", top, eta);
        }
    }

    #[test]
    fn single_signal_group_tv_matches_tv(x in (3usize..=20).prop_flat_map(|fc| (Just(fc), spike_train(fc, 3)))) {
        let (fc, x) = x;
        let cfg = ProblemConfig::new(fc).unwrap();
        let y = forward_measure(&x, cfg);
        let opts = SolverOptions::default();
        let tv = solve(&SdpProblem::tv(&y), &opts).unwrap();
        let gtv = solve(&SdpProblem::gtv(&MultiLowPassData::from_single(&y)), &opts).unwrap();
        prop_assert!((tv.objective - gtv.objective).abs() <= 1e-6 * tv.objective.abs().max(1.0), "{} vs {}", tv.objective, gtv.objective);
    }

    #[test]
    fn objective_matches_total_variation(x in (5usize..=20).prop_flat_map(|fc| (Just(fc), spike_train(fc, 4)))) {
        let (fc, x) = x;
        let y = forward_measure(&x, ProblemConfig::new(fc).unwrap());
        let sol = solve(&SdpProblem::tv(&y), &SolverOptions::default()).unwrap();
        let tv = x.tv_norm();
        prop_assert!((sol.objective - tv).abs() <= 1e-3 * tv, "{} vs {}", sol.objective, tv);
    }

    #[test]
    fn objective_scales_with_the_data(x in (3usize..=12).prop_flat_map(|fc| (Just(fc), spike_train(fc, 3))), s in 1e-3..1e3f64) {
        let (fc, x) = x;
        let cfg = ProblemConfig::new(fc).unwrap();
        let opts = SolverOptions::default();
        let a = solve(&SdpProblem::tv(&forward_measure(&x, cfg)), &opts).unwrap();
        let b = solve(&SdpProblem::tv(&forward_measure(&x.scaled(s), cfg)), &opts).unwrap();
        prop_assert!((b.objective - s * a.objective).abs() <= 1e-9 * s * a.objective, "{} vs {}", b.objective, s * a.objective);
    }
}

#[test]
fn combined_residual_drops_tenfold_per_500_iterations() {
    let fc = 20;
    let cfg = ProblemConfig::new(fc).unwrap();
    let support: Vec<f64> = [0.05, 0.19, 0.33, 0.52, 0.71, 0.86].to_vec();
    let amps = (0..support.len()).map(|j| C64::from_polar(1.0, 1.3 * j as f64)).collect();
    let x = SpikeTrain::new(support, amps).unwrap();
    let opts = SolverOptions {
        trace: true,
        ..SolverOptions::default()
    };
    let sol = solve(&SdpProblem::tv(&forward_measure(&x, cfg)), &opts).unwrap();
    assert!(sol.residuals.converged);
    let combined: Vec<f64> = sol.trace.iter().map(|r| r.primal_res.hypot(r.dual_res)).collect();
    for i in 0..combined.len().saturating_sub(500) {
        assert!(
            combined[i + 500] <= combined[i] / 10.0,
            "window at {i}: {} -> {} over {} iterations",
            combined[i],
            combined[i + 500],
            combined.len()
        );
    }
}

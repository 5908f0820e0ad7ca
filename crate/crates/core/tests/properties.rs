use asus_core::estimators::{fit_auxscr, fit_ejs};
use asus_core::kernel::{partition, soft_estimate};
use asus_core::theory::{
    efficiency_diagnostics, misclass_rates, risk_gap_first_order, RegimeParams,
};
use asus_core::tuner::{fit_asus, fit_sureshrink_with};
use asus_core::{DataBatch, SearchConfig};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

prop_compose! {
    fn batch_strategy(max_n: usize)(n in 8..max_n)(
        y in prop::collection::vec(-6.0f64..6.0, n),
        sigma in prop::collection::vec(0.2f64..3.0, n),
        s in prop::collection::vec(-4.0f64..4.0, n),
    ) -> DataBatch {
        DataBatch::new(y, sigma, s).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn partition_covers_every_coordinate(
        s in prop::collection::vec(-5.0f64..5.0, 1..80),
        mut tau in prop::collection::vec(-5.0f64..5.0, 0..4),
    ) {
        tau.sort_by(f64::total_cmp);
        tau.dedup();
        let g = partition(&s, &tau).unwrap();
        prop_assert_eq!(g.assignment.len(), s.len());
        prop_assert_eq!(g.sizes.iter().sum::<usize>(), s.len());
        for (i, &k) in g.assignment.iter().enumerate() {
            prop_assert!(k <= tau.len());
            if k > 0 {
                prop_assert!(s[i] > tau[k - 1]);
            }
            if k < tau.len() {
                prop_assert!(s[i] <= tau[k]);
            }
        }
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(y in -20.0f64..20.0, sigma in 0.01f64..5.0, t in 0.0f64..5.0) {
        let e = soft_estimate(y, sigma, t);
        prop_assert!(e.abs() <= y.abs());
        prop_assert!(e == 0.0 || e.signum() == y.signum());
    }

    #[test]
    fn asus_is_scale_equivariant(b in batch_strategy(60), k in -3i32..=3, c in 0.1f64..10.0) {
        let cfg = SearchConfig::new(2);
        let base = fit_asus(&b, &cfg).unwrap();
        let scale = |c: f64| DataBatch::new(
            b.y().iter().map(|v| c * v).collect(),
            b.sigma().iter().map(|v| c * v).collect(),
            b.s().to_vec(),
        ).unwrap();

        // powers of two rescale exactly, so the whole fit carries over
        let p = 2f64.powi(k);
        let fit = fit_asus(&scale(p), &cfg).unwrap();
        prop_assert_eq!(&fit.hp, &base.hp);
        prop_assert_eq!(&fit.group_sizes, &base.group_sizes);
        for (a, e) in fit.theta_hat.iter().zip(&base.theta_hat) {
            prop_assert_eq!(*a, p * e);
        }

        // otherwise rounding may break near-ties, but the minimum scales by c^2
        let fit = fit_asus(&scale(c), &cfg).unwrap();
        let (got, want) = (fit.sure_value.unwrap(), c * c * base.sure_value.unwrap());
        prop_assert!(close(got, want, 1e-9), "{} vs {}", got, want);
    }

    #[test]
    fn asus_shrinks_and_is_deterministic(b in batch_strategy(60)) {
        let cfg = SearchConfig::new(2);
        let fit = fit_asus(&b, &cfg).unwrap();
        for (e, y) in fit.theta_hat.iter().zip(b.y()) {
            prop_assert!(e.abs() <= y.abs());
        }
        prop_assert_eq!(fit_asus(&b, &cfg).unwrap(), fit);
    }

    #[test]
    fn more_groups_never_raise_sure_without_hybrid(b in batch_strategy(50)) {
        let one = fit_sureshrink_with(&b, &SearchConfig::new(1).with_hybrid(false)).unwrap();
        let two = fit_asus(&b, &SearchConfig::new(2).with_hybrid(false)).unwrap();
        let three = fit_asus(&b, &SearchConfig::new(3).with_hybrid(false)).unwrap();
        let (s1, s2, s3) = (one.sure_value.unwrap(), two.sure_value.unwrap(), three.sure_value.unwrap());
        prop_assert!(s2 <= s1 + 1e-12, "{} > {}", s2, s1);
        prop_assert!(s3 <= s2 + 1e-12, "{} > {}", s3, s2);
    }

    #[test]
    fn auxscr_zeroes_the_screened_group(b in batch_strategy(80)) {
        let fit = fit_auxscr(&b).unwrap();
        let tau = fit.hp.as_ref().unwrap().tau()[0];
        for (i, e) in fit.theta_hat.iter().enumerate() {
            if b.s()[i].abs() <= tau {
                prop_assert_eq!(*e, 0.0);
            }
        }
    }

    #[test]
    fn ejs_is_translation_equivariant(b in batch_strategy(60), c in -10.0f64..10.0) {
        let base = fit_ejs(&b).unwrap();
        let shifted = DataBatch::new(
            b.y().iter().map(|v| v + c).collect(),
            b.sigma().to_vec(),
            b.s().to_vec(),
        ).unwrap();
        let fit = fit_ejs(&shifted).unwrap();
        for (a, e) in fit.theta_hat.iter().zip(&base.theta_hat) {
            prop_assert!((a - e - c).abs() < 1e-8, "{} vs {}", a, e + c);
        }
    }

    #[test]
    fn misclassification_is_monotone_in_tau(
        b in batch_strategy(60),
        tau_star in -2.0f64..2.0,
        mut taus in prop::collection::vec(-5.0f64..5.0, 2..8),
    ) {
        let b = b.clone().with_xi(b.s().iter().map(|v| v * 0.5 + 0.3).collect()).unwrap();
        taus.sort_by(f64::total_cmp);
        let rates: Vec<_> = taus.iter().map(|&t| misclass_rates(&b, t, tau_star).unwrap()).collect();
        for w in rates.windows(2) {
            prop_assert!(w[1].q21 <= w[0].q21);
            prop_assert!(w[1].q12 >= w[0].q12);
        }
        for r in &rates {
            prop_assert!((0.0..=1.0).contains(&r.q21) && (0.0..=1.0).contains(&r.q12));
        }
    }

    #[test]
    fn gap_grows_with_log_inverse_pi1(
        alpha in 0.3f64..0.9,
        p in prop::collection::vec(0.37f64..0.999, 2),
        n in 1000usize..100_000,
    ) {
        // pi1 ln(1/pi1) is increasing in ln(1/pi1) for pi1 >= 1/e.
        let (hi, lo) = (p[0].max(p[1]), p[0].min(p[1]));
        let gap = |pi1| risk_gap_first_order(&RegimeParams::new(alpha, 0.95, pi1, 1.0, n).unwrap()).unwrap();
        prop_assert!(gap(lo) >= gap(hi));
    }

    #[test]
    fn ri_identity_is_exact(r_os in 0.0f64..1.0, d_as in 0.001f64..1.0, d_ns in 0.001f64..2.0) {
        let (r_as, r_ns) = (r_os + d_as, r_os + d_ns);
        let d = efficiency_diagnostics(r_ns, r_as, r_os).unwrap();
        let (ri, e) = (d.ri.unwrap(), d.e.unwrap());
        prop_assert_eq!(ri, 1.0 - 1.0 / e);
        prop_assert!(close(ri, (r_ns - r_as) / (r_ns - r_os), 1e-12));
    }
}

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use heraldlab_core::fock::{squeeze_op, wigner_origin, FockVector};
use heraldlab_core::herald::{build_resource, herald_fock, r_out, GaussianResourceParams};
use heraldlab_core::planner::{plan, plan_with_params, verify_plan, Strategy, TargetState};

const ROWS: [(f64, f64, f64, usize); 3] = [(3.0, -3.0, 0.5, 1), (5.0, -1.0, 0.14, 1), (4.0, -4.0, 0.5, 2)];

#[test]
fn resource_fits_in_cutoff_30() {
    for (r0, r1, t, _) in ROWS {
        let p = GaussianResourceParams::from_db(r0, r1, t).unwrap();
        let res = build_resource(&p, 30).unwrap();
        let mass: f64 = res.value.mode1_distribution().iter().sum::<f64>() * (1.0 - res.leakage);
        assert!(mass >= 0.999, "({r0}, {r1}, {t}): {mass}");
    }
}

#[test]
fn rows_herald_squeezed_fock_states() {
    for (r0, r1, t, n) in ROWS {
        let p = GaussianResourceParams::from_db(r0, r1, t).unwrap();
        let (d, psi) = herald_fock(&p, n, 30).unwrap();
        let expect = squeeze_op(d.r_out, 30).unwrap().apply(&FockVector::fock(n, 30)).unwrap().value.normalized().unwrap();
        let f = psi.fidelity(&expect).unwrap();
        assert!(f >= 0.999, "({r0}, {r1}, {t}) n={n}: {f}");
        let w0 = wigner_origin(&psi.to_density());
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((w0 - parity / PI).abs() < 1e-4, "W(0) = {w0}");
    }
}

#[test]
fn symmetric_rows_have_zero_r_out() {
    for (r0, r1, t, _) in [ROWS[0], ROWS[2]] {
        let p = GaussianResourceParams::from_db(r0, r1, t).unwrap();
        assert!(r_out(&p).abs() < 1e-12);
    }
}

#[test]
fn rows_plan_as_targets() {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    for (r0, r1, t, n) in ROWS {
        let p = GaussianResourceParams::from_db(r0, r1, t).unwrap();
        let mut c = vec![zero; n + 1];
        c[n] = one;
        let target = TargetState::new(r_out(&p), c).unwrap();
        let fixed = plan_with_params(&target, p, 1.3e4, 30).unwrap();
        assert!((fixed.r_out - r_out(&p)).abs() < 1e-12);
        assert!(verify_plan(&fixed, 30).unwrap().fidelity >= 0.999);
        let free = plan(&target, 1.3e4, &Strategy::Symmetric, 30).unwrap();
        assert!(verify_plan(&free, 30).unwrap().fidelity >= 0.999);
    }
}

#[test]
fn vacuum_target_needs_no_displacement() {
    let target = TargetState::new(0.0, vec![C64::new(1.0, 0.0)]).unwrap();
    let pl = plan(&target, 1.3e4, &Strategy::Symmetric, 30).unwrap();
    assert_eq!(pl.n_detect, 0);
    assert!(pl.alphas.is_empty());
}

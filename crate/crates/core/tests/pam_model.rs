mod common;

use approx::assert_relative_eq;
use common::{closed_form_free_strain, mckibben_raw};
use musclesim::pam::{
    calibrate_pam, calibrated_params, force_strain_table, pam_force, pam_free_strain, write_curves_csv, PamParams,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = PamParams<f64>> {
    (10.0f64..50.0, 2.0f64..12.0, 50.0f64..300.0, 0.0f64..20.0).prop_map(|(braid, d, len, kt)| PamParams {
        rest_length: len,
        effective_diameter: d,
        braid_angle: braid,
        tube_stiffness: kt,
        max_pressure: 0.6,
    })
}

#[test]
fn endpoints_fit_exactly() {
    let fit = calibrate_pam((0.5, 38.05), (0.5, 0.301)).unwrap();
    let p = fit.into_params(220.0, 0.6);
    assert_relative_eq!(pam_force(&p, 0.5, 0.0).unwrap(), 38.05, max_relative = 1e-6);
    assert_relative_eq!(pam_free_strain(&p, 0.5).unwrap(), 0.301, max_relative = 1e-6);
    assert_relative_eq!(closed_form_free_strain(&p), 0.301, max_relative = 1e-12);
}

#[test]
fn shipped_curve_file_endpoints() {
    let p = calibrated_params(220.0);
    let curves = force_strain_table(&p, &[0.5], 50).unwrap();
    let mut out = Vec::new();
    write_curves_csv(&curves, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(text.lines().next(), Some("pressure_mpa,strain,force_n"));
    assert_eq!(rows.len(), 50);
    assert_relative_eq!(rows[0][2], 38.05, max_relative = 1e-6);
    assert_eq!(rows[0][1], 0.0);
    assert_relative_eq!(rows[49][1], 0.301, max_relative = 1e-6);
    assert!(rows[49][2].abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn force_matches_oracle(p in params(), pressure in 0.0f64..0.6, strain in 0.0f64..0.99) {
        let f = pam_force(&p, pressure, strain).unwrap();
        let oracle = mckibben_raw(&p, pressure, strain).max(0.0);
        prop_assert!((f - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
    }

    #[test]
    fn force_falls_with_strain(p in params(), pressure in 0.0f64..0.6, a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(pam_force(&p, pressure, lo).unwrap() >= pam_force(&p, pressure, hi).unwrap());
    }

    #[test]
    fn force_is_linear_in_pressure_without_tube(
        p in params(), pressure in 0.0f64..0.3, scale in 0.0f64..2.0, strain in 0.0f64..0.99,
    ) {
        let p = PamParams { tube_stiffness: 0.0, ..p };
        let f1 = pam_force(&p, pressure, strain).unwrap();
        let f2 = pam_force(&p, pressure * scale, strain).unwrap();
        prop_assert!((f2 - scale * f1).abs() <= 1e-9 * f2.abs().max(1.0));
    }

    #[test]
    fn free_strain_is_a_root(p in params(), pressure in 0.01f64..0.6) {
        let eps = pam_free_strain(&p, pressure).unwrap();
        let raw = mckibben_raw(&p, pressure, eps);
        if mckibben_raw(&p, pressure, 0.0) > 0.0 {
            prop_assert!(raw.abs() < 1e-9, "residual {raw} N at {eps}");
        } else {
            prop_assert_eq!(eps, 0.0);
        }
    }

    #[test]
    fn free_strain_ignores_pressure_without_tube(p in params(), a in 0.01f64..0.6, b in 0.01f64..0.6) {
        let p = PamParams { tube_stiffness: 0.0, ..p };
        let (ea, eb) = (pam_free_strain(&p, a).unwrap(), pam_free_strain(&p, b).unwrap());
        prop_assert!((ea - eb).abs() < 1e-8);
        prop_assert!((ea - closed_form_free_strain(&p)).abs() < 1e-8);
    }
}

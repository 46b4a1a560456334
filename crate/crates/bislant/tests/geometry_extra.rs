//! Cross-cutting geometric invariants that span several modules.

use bislant::immersion::{frame, second_fundamental, SecondOrder, Stencil};
use bislant::scenario::{builtin, Scenario};
use bislant::slant::{mixed_tg_check, slant_angle, DistFrame, ANGLE_GATE};
use bislant::warped::{adapted_frame, chen_inequality, WarpDeclaration};
use bislant::{AmbientSpace, Chart, ToleranceProfile, Vector};

fn paper_chart_components() -> Vec<String> {
    [
        "u1*cos(u2)",
        "u1*sin(u2)",
        "u3*cos(u4)",
        "u3*sin(u4)",
        "u2*cos(u1)",
        "u2*sin(u1)",
        "u4*cos(u3)",
        "u4*sin(u3)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// The orthonormal-frame matrix of the tangential complex operator is
/// unchanged by the conformal factor.
#[test]
fn p_matrix_is_conformally_invariant() {
    let chart = Chart::new(4, &paper_chart_components(), &[], 8).unwrap();
    let conformal = AmbientSpace::new(4, "-(x1^2 + x2^2 + 1)").unwrap();
    let flat = AmbientSpace::flat(4);
    for u in [
        Vector::from_row_slice(&[0.6, 0.1, 1.5, 0.5]),
        Vector::from_row_slice(&[0.8, 0.3, 1.6, 0.4]),
    ] {
        let a = frame(&chart, &conformal, &u).unwrap().frame;
        let b = frame(&chart, &flat, &u).unwrap().frame;
        let diff = (&a.p_mat - &b.p_mat).norm();
        assert!(diff <= 1e-8, "P differs by {diff} at {u:?}");
    }
}

/// Scaling the conformal potential scales the Lee data linearly, and the
/// logarithmic-derivative identity keeps holding when the warp is rescaled
/// the same way.
#[test]
fn potential_scaling_family() {
    let profile = ToleranceProfile::default();
    let chart = Chart::new(4, &paper_chart_components(), &[], 8).unwrap();
    let u = Vector::from_row_slice(&[0.7, 0.2, 1.5, 0.45]);
    for c in [0.5, 1.0, 2.0] {
        let space = AmbientSpace::new(4, &format!("-{c}*(x1^2 + x2^2 + 1)")).unwrap();
        let lambda = format!("exp(-{c}*(1 + u1^2)/2)");
        let warp = WarpDeclaration::new(&lambda, 4, &[0, 1]).unwrap();
        let state = frame(&chart, &space, &u).unwrap().frame;
        let d1 = DistFrame::build(&state, &[0, 1]).unwrap();
        let mut max_res: f64 = 0.0;
        for (xi, x) in d1.coeffs.iter().enumerate() {
            let lhs = warp.log_derivative(&u, x).unwrap();
            let rhs = 0.5 * state.g(&state.lee.b, &d1.ambient[xi]);
            max_res = max_res.max((lhs - rhs).abs());
        }
        assert!(
            max_res <= profile.tol_second,
            "scale {c}: residual {max_res}"
        );
    }
}

/// Metric compatibility of the normal connection on the bundled scenario:
/// the derivative of g(xi, eta) splits into the two perp derivatives.
#[test]
fn normal_connection_is_metric_compatible() {
    let scenario = Scenario::from_json(builtin("paper-example").unwrap()).unwrap();
    let c = scenario.compile(None, false).unwrap();
    let u = Vector::from_row_slice(&[0.7, 0.25, 1.5, 0.4]);
    let stencil = Stencil::new(&c.chart, &c.space, &u, &c.profile).unwrap();
    let center = &stencil.center;
    let second = SecondOrder::build(&stencil).unwrap();
    for al in 0..center.normal_dim() {
        for be in 0..center.normal_dim() {
            for dir in 0..center.param_dim() {
                // d/du_i g(nu_a, nu_b) along the submanifold
                let lhs = stencil
                    .derive(dir, |st| {
                        Ok(Vector::from_vec(vec![st
                            .metric
                            .apply(&st.nor_frame[al], &st.nor_frame[be])]))
                    })
                    .unwrap()[0];
                let mut fa = |st: &bislant::immersion::FrameState| Ok(st.nor_frame[al].clone());
                let (perp_a, _) =
                    bislant::immersion::normal_connection(&stencil, &second, &mut fa, dir).unwrap();
                let mut fb = |st: &bislant::immersion::FrameState| Ok(st.nor_frame[be].clone());
                let (perp_b, _) =
                    bislant::immersion::normal_connection(&stencil, &second, &mut fb, dir).unwrap();
                let rhs = center.g(&perp_a, &center.nor_frame[be])
                    + center.g(&center.nor_frame[al], &perp_b);
                assert!(
                    (lhs - rhs).abs() <= c.profile.tol_second,
                    "({al},{be}) dir {dir}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

/// Product charts decouple: a circle times a line has no mixed second
/// fundamental form.
#[test]
fn circle_times_line_is_mixed_totally_geodesic() {
    let profile = ToleranceProfile::default();
    let space = AmbientSpace::flat(2);
    let comps: Vec<String> = ["cos(u1)", "u2", "sin(u1)", "0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let chart = Chart::new(2, &comps, &[], 4).unwrap();
    let u = Vector::from_row_slice(&[0.9, -0.3]);
    let stencil = Stencil::new(&chart, &space, &u, &profile).unwrap();
    let second = SecondOrder::build(&stencil).unwrap();
    let d1 = DistFrame::build(&stencil.center, &[0]).unwrap();
    let d2 = DistFrame::build(&stencil.center, &[1]).unwrap();
    assert_eq!(mixed_tg_check(&stencil.center, &second, &d1, &d2), 0.0);
}

/// Embedding the bundled chart in a larger ambient produces a nontrivial
/// invariant normal complement; the adapted frame and the block accounting
/// still close.
#[test]
fn invariant_complement_in_larger_ambient() {
    let profile = ToleranceProfile::default();
    // same immersion inside R^10: one extra complex direction stays zero
    let comps: Vec<String> = [
        "u1*cos(u2)",
        "u1*sin(u2)",
        "u3*cos(u4)",
        "u3*sin(u4)",
        "0",
        "u2*cos(u1)",
        "u2*sin(u1)",
        "u4*cos(u3)",
        "u4*sin(u3)",
        "0",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let chart = Chart::new(4, &comps, &[], 10).unwrap();
    let space = AmbientSpace::new(5, "-(x1^2 + x2^2 + 1)").unwrap();
    let split = bislant::DistributionSplit::new(vec![0, 1], vec![2, 3], 4).unwrap();
    let u = Vector::from_row_slice(&[0.7, 0.2, 1.5, 0.45]);

    let stencil = Stencil::new(&chart, &space, &u, &profile).unwrap();
    let second = SecondOrder::build(&stencil).unwrap();
    let state = &stencil.center;
    let rec1 = slant_angle(state, &space, &split.i1, &profile).unwrap();
    let rec2 = slant_angle(state, &space, &split.i2, &profile).unwrap();

    let adapted = adapted_frame(state, &space, &split, &rec1, &rec2, ANGLE_GATE).unwrap();
    assert_eq!(adapted.vectors.len(), 10);
    assert_eq!(
        adapted
            .labels
            .iter()
            .filter(|l| l.starts_with("MU"))
            .count(),
        2
    );
    assert!(adapted.gram_residual <= 1e-6);

    let record = chen_inequality(&stencil, &second, &split, ANGLE_GATE).unwrap();
    assert!(record.block_sum_residual <= 1e-8);
    // the immersion never leaves the first four complex directions, so h
    // has no component in the invariant complement
    assert!(record.mu_norm2 <= 1e-20);
    assert!(record.slack >= -profile.tol_second);
}

/// Constructed failure for the umbilic fit: condition values generated by
/// the model with one angle, fitted with the other, mis-scale the recovered
/// mean pairing by exactly the ratio of the squared sines.
#[test]
fn umbilic_fit_is_scale_sensitive() {
    let theta_right = 1.2f64;
    let theta_wrong = 0.6f64;
    let omega_x = 0.8;
    let gamma_true = 0.37; // nonzero mean pairing
    let gram: [f64; 2] = [1.0, 1.7]; // g(Z,Z) over a two-vector fiber frame

    // condition values following the umbilic model with the right angle
    let cond: Vec<f64> = gram
        .iter()
        .map(|g| theta_right.sin().powi(2) * (0.5 * omega_x + gamma_true) * g)
        .collect();

    // least-squares recovery of the pairing, as in the condition battery
    let fit = |theta: f64| -> f64 {
        let num: f64 = cond.iter().zip(gram.iter()).map(|(c, g)| c * g).sum();
        let den: f64 = gram.iter().map(|g| g * g).sum();
        num / (theta.sin().powi(2) * den) - 0.5 * omega_x
    };
    let recovered_right = fit(theta_right);
    let recovered_wrong = fit(theta_wrong);
    assert!((recovered_right - gamma_true).abs() < 1e-12);
    let expected_ratio = theta_right.sin().powi(2) / theta_wrong.sin().powi(2);
    let actual_ratio = (recovered_wrong + 0.5 * omega_x) / (gamma_true + 0.5 * omega_x);
    assert!(
        (actual_ratio - expected_ratio).abs() < 1e-12,
        "mis-assigned angle must scale the recovered pairing by sin^2 ratio"
    );
    assert!((recovered_wrong - gamma_true).abs() > 0.1);
}

/// The slant record of the full tangent space of a holomorphic chart is the
/// zero angle with spread zero even in a conformal ambient.
#[test]
fn conformal_holomorphic_chart_angle() {
    let profile = ToleranceProfile::default();
    let space = AmbientSpace::new(2, "-x1").unwrap();
    let comps: Vec<String> = ["u1", "0", "u2", "0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let chart = Chart::new(2, &comps, &[], 4).unwrap();
    let state = frame(&chart, &space, &Vector::from_row_slice(&[0.4, 0.9]))
        .unwrap()
        .frame;
    let rec = slant_angle(&state, &space, &[0, 1], &profile).unwrap();
    assert!(rec.theta.abs() < 1e-7);
    assert!(rec.eig_spread <= profile.tol_eig);
}

/// The mean curvature of the bundled scenario varies with the conformal
/// factor even though the slant angles do not.
#[test]
fn mean_curvature_feels_the_conformal_factor() {
    let profile = ToleranceProfile::default();
    let chart = Chart::new(4, &paper_chart_components(), &[], 8).unwrap();
    let conformal = AmbientSpace::new(4, "-(x1^2 + x2^2 + 1)").unwrap();
    let flat = AmbientSpace::flat(4);
    let u = Vector::from_row_slice(&[0.7, 0.2, 1.5, 0.45]);
    let a = second_fundamental(&chart, &conformal, &u, &profile).unwrap();
    let b = second_fundamental(&chart, &flat, &u, &profile).unwrap();
    let na = a.frame.g_norm(&a.second().mean_curvature);
    let nb = b.frame.g_norm(&b.second().mean_curvature);
    assert!(
        (na - nb).abs() > 1e-3,
        "conformal factor must move |H|: {na} vs {nb}"
    );
}

//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`.

use bislant::immersion::{SecondOrder, Stencil};
use bislant::report::{CheckRecord, CheckReport};
use bislant::runner::{run, Command, Overrides};
use bislant::scenario::{builtin, Scenario};
use bislant::slant::slant_angle;
use bislant::{AmbientSpace, Vector};

fn load(name: &str) -> Scenario {
    Scenario::from_json(builtin(name).unwrap()).unwrap()
}

fn run_builtin(command: Command, name: &str, overrides: &Overrides) -> (CheckReport, i32) {
    run(command, &load(name), &format!("builtin:{name}"), overrides).unwrap()
}

fn records<'a>(report: &'a CheckReport, check: &str) -> Vec<&'a CheckRecord> {
    report.records.iter().filter(|r| r.check == check).collect()
}

fn max_residual(report: &CheckReport, check: &str) -> f64 {
    records(report, check)
        .iter()
        .map(|r| r.residual)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn assert_all_pass(report: &CheckReport, check: &str) {
    let rows = records(report, check);
    assert!(!rows.is_empty(), "no records for {check}");
    for r in rows {
        assert!(
            r.pass,
            "{check} fails at point {} with residual {}",
            r.point_index, r.residual
        );
    }
}

fn passed(name: &str, detail: &str) {
    println!("acceptance {name}: PASS ({detail})");
}

/// Structure equations hold on the warped builtin at every admitted grid
/// point, and the Lee-sign flip is caught by the exterior-derivative gate at
/// (at least) 90% of the points.
#[test]
fn criterion_01_structure_equations() {
    let (report, code) = run_builtin(
        Command::AmbientCheck,
        "paper-example",
        &Overrides::default(),
    );
    assert_eq!(code, 0, "{}", report.to_text());
    assert!(
        report.points.admitted >= 50,
        "need at least 50 admitted points, got {}",
        report.points.admitted
    );
    for check in ["struct_domega", "struct_jcompat", "struct_lee_closed"] {
        assert_all_pass(&report, check);
        assert!(max_residual(&report, check) <= 1e-4);
    }

    let (flipped, code) = run_builtin(
        Command::AmbientCheck,
        "paper-example",
        &Overrides {
            flip_lee_sign: true,
            ..Default::default()
        },
    );
    assert_eq!(code, 1, "the flipped run must fail");
    let rows = records(&flipped, "struct_domega");
    let failing = rows.iter().filter(|r| !r.pass).count();
    assert!(
        failing * 10 >= rows.len() * 9,
        "exterior-derivative gate must fail at >= 90% of points, failed {failing}/{}",
        rows.len()
    );
    passed(
        "01 structure equations",
        &format!(
            "{} points, flip caught at {failing}/{}",
            report.points.admitted,
            rows.len()
        ),
    );
}

/// The four operator-block identities hold at tol_first on every admitted
/// point of every shipped scenario.
#[test]
fn criterion_02_operator_identities() {
    for name in ["paper-example", "paper-example-flat", "kahler-product"] {
        let (report, _) = run_builtin(Command::FrameReport, name, &Overrides::default());
        for check in [
            "jsplit_p2_tf",
            "jsplit_f2_ft",
            "jsplit_fp_ff",
            "jsplit_tf_pt",
        ] {
            assert_all_pass(&report, check);
            assert!(
                max_residual(&report, check) <= 1e-6,
                "{name}/{check}: {}",
                max_residual(&report, check)
            );
        }
    }
    passed("02 operator identities", "3 scenarios, 4 identities each");
}

/// Eigen-computed squared cosines match the declared closed forms at every
/// admitted point, including the frozen spot values, and the eigenvalue
/// spreads confirm pointwise slant.
#[test]
fn criterion_03_slant_angle_oracle() {
    let (report, code) = run_builtin(Command::SlantCheck, "paper-example", &Overrides::default());
    assert_eq!(code, 0, "{}", report.to_text());
    assert!(report.points.admitted >= 50);
    for check in [
        "slant_closed_form_theta1",
        "slant_closed_form_theta2",
        "slant_theta1_spread",
        "slant_theta2_spread",
    ] {
        assert_all_pass(&report, check);
        assert!(max_residual(&report, check) <= 1e-6);
    }

    // spot values at u = (0.6, 0.1, 1.5, 0.5); the closed forms evaluate to
    // 0.4954175587744206 and 0.004491178180406598 there
    let compiled = load("paper-example").compile(None, false).unwrap();
    let u = Vector::from_row_slice(&[0.6, 0.1, 1.5, 0.5]);
    let state = bislant::immersion::frame(&compiled.chart, &compiled.space, &u)
        .unwrap()
        .frame;
    let r1 = slant_angle(
        &state,
        &compiled.space,
        &compiled.split.i1,
        &compiled.profile,
    )
    .unwrap();
    let r2 = slant_angle(
        &state,
        &compiled.space,
        &compiled.split.i2,
        &compiled.profile,
    )
    .unwrap();
    assert!((r1.cos2 - 0.4954175587744206).abs() <= 1e-6, "{}", r1.cos2);
    assert!(
        (r2.cos2 - 0.004491178180406598).abs() <= 1e-6,
        "{}",
        r2.cos2
    );
    assert!((r1.cos2 - 0.49541).abs() <= 1e-4);
    assert!((r2.cos2 - 0.004491).abs() <= 1e-5);
    assert!(r1.eig_spread <= 1e-6 && r2.eig_spread <= 1e-6);
    passed(
        "03 slant-angle oracle",
        &format!(
            "{} points; spot cos2 = {:.6}, {:.6}",
            report.points.admitted, r1.cos2, r2.cos2
        ),
    );
}

/// Slant angles are conformally invariant: the warped and flat ambient give
/// the same angles at the same points to 1e-8.
#[test]
fn criterion_04_conformal_invariance() {
    let warped = load("paper-example").compile(None, false).unwrap();
    let flat_space = AmbientSpace::flat(4);
    let mut checked = 0usize;
    let mut max_diff: f64 = 0.0;
    for u in &warped.samples {
        if !warped.chart.admits(u).unwrap() {
            continue;
        }
        let state_c = bislant::immersion::frame(&warped.chart, &warped.space, u)
            .unwrap()
            .frame;
        let state_f = bislant::immersion::frame(&warped.chart, &flat_space, u)
            .unwrap()
            .frame;
        for idx in [&warped.split.i1, &warped.split.i2] {
            let rc = slant_angle(&state_c, &warped.space, idx, &warped.profile).unwrap();
            let rf = slant_angle(&state_f, &flat_space, idx, &warped.profile).unwrap();
            max_diff = max_diff.max((rc.theta - rf.theta).abs());
            assert!(
                (rc.theta - rf.theta).abs() <= 1e-8,
                "angle differs at {u:?}: {} vs {}",
                rc.theta,
                rf.theta
            );
        }
        checked += 1;
    }
    assert!(checked >= 50);
    passed(
        "04 conformal invariance",
        &format!("{checked} points, max angle difference {max_diff:.2e}"),
    );
}

/// The six warped-product identities hold on the builtin; the orthogonality
/// of the Lee vector to the fiber holds at tol_first; inverting the warping
/// function breaks the logarithmic-derivative identity at every point where
/// the Lee pairing is visible.
#[test]
fn criterion_05_warp_identity_battery() {
    let (report, code) = run_builtin(Command::WarpedCheck, "paper-example", &Overrides::default());
    assert_eq!(code, 0, "{}", report.to_text());
    for check in [
        "warp_id_hxz_fy",
        "warp_id_hxz_fw",
        "warp_id_hxy_fz",
        "warp_id_hzw_fx",
        "warp_id_dlambda",
    ] {
        assert_all_pass(&report, check);
        assert!(max_residual(&report, check) <= 1e-4);
    }
    assert_all_pass(&report, "warp_id_b_fiber");
    assert!(max_residual(&report, "warp_id_b_fiber") <= 1e-6);

    let (flipped, code) = run_builtin(
        Command::WarpedCheck,
        "paper-example",
        &Overrides {
            invert_lambda: true,
            ..Default::default()
        },
    );
    assert_eq!(code, 1, "inverted warp must fail");
    // on this grid the base Lee pairing |g(B, X)| is bounded well away from
    // zero, so the identity must fail at every point
    for r in records(&flipped, "warp_id_dlambda") {
        assert!(
            !r.pass && r.residual > 1e-2,
            "inverted warp must break the identity at point {}",
            r.point_index
        );
    }
    passed(
        "05 warp identity battery",
        "6 identities + negative control",
    );
}

/// The logarithmic-gradient identity and the mixed-connection law hold on
/// the builtin; on unwarped products both residuals vanish to 1e-10.
#[test]
fn criterion_06_characterization() {
    let (report, code) = run_builtin(Command::WarpedCheck, "paper-example", &Overrides::default());
    assert_eq!(code, 0);
    assert_all_pass(&report, "char_grad_corollary");
    assert!(max_residual(&report, "char_grad_corollary") <= 1e-6);
    for check in ["char_nabla_xz", "char_nabla_zx"] {
        assert_all_pass(&report, check);
        assert!(max_residual(&report, check) <= 1e-4);
    }

    for name in ["paper-example-flat", "kahler-product"] {
        let (product, code) = run_builtin(Command::WarpedCheck, name, &Overrides::default());
        assert_eq!(code, 0);
        for check in ["char_grad_corollary", "char_nabla_xz", "char_nabla_zx"] {
            let max = max_residual(&product, check);
            assert!(max <= 1e-10, "{name}/{check}: {max}");
        }
    }
    passed(
        "06 characterization",
        "gradient corollary + mixed connection, warped and product",
    );
}

/// Condition battery: on the flat variant both distributions have totally
/// geodesic leaves; on the warped builtin the base passes, the fiber is
/// umbilic with mean -B^T/2, and the fiber totally-geodesic condition fails.
#[test]
fn criterion_07_condition_battery() {
    let (flat, code) = run_builtin(
        Command::SlantCheck,
        "paper-example-flat",
        &Overrides::default(),
    );
    assert_eq!(code, 0);
    for check in [
        "d1_totally_geodesic_condition",
        "d1_tg_omega_clause",
        "d2_totally_geodesic_condition",
        "d2_tg_omega_clause",
    ] {
        let max = max_residual(&flat, check);
        assert!(max <= 1e-4, "flat {check}: {max}");
    }

    let (warped, code) = run_builtin(Command::SlantCheck, "paper-example", &Overrides::default());
    assert_eq!(code, 0);
    // base distribution: totally geodesic leaves
    assert!(max_residual(&warped, "d1_totally_geodesic_condition") <= 1e-4);
    assert!(max_residual(&warped, "d1_tg_omega_clause") <= 1e-6);
    // fiber distribution: totally geodesic must fail through the Lee clause
    // at every point
    for r in records(&warped, "d2_tg_omega_clause") {
        assert!(
            r.residual > 1e-2,
            "fiber TG must fail at point {}, clause {}",
            r.point_index,
            r.residual
        );
    }
    // and the umbilic fit must hold with mean curvature -B^T/2
    let (wreport, code) = run_builtin(Command::WarpedCheck, "paper-example", &Overrides::default());
    assert_eq!(code, 0);
    assert_all_pass(&wreport, "char_mean_curvature_fit");
    assert!(max_residual(&wreport, "char_mean_curvature_fit") <= 1e-4);
    assert!(max_residual(&warped, "d2_umbilic_fit") <= 1e-4);
    passed(
        "07 condition battery",
        "flat TG both; warped: base TG, fiber umbilic with -B^T/2, fiber TG fails",
    );
}

/// The lower bound for |h|^2 holds on every shipped scenario, with exact
/// block-norm accounting; the product scenario meets it with rhs = 0.
#[test]
fn criterion_08_chen_inequality() {
    for name in ["paper-example", "paper-example-flat", "kahler-product"] {
        let (report, code) = run_builtin(Command::Chen, name, &Overrides::default());
        assert_eq!(code, 0, "{name}:\n{}", report.to_text());
        for r in records(&report, "chen_slack") {
            assert!(r.residual >= -1e-4, "{name}: negative slack {}", r.residual);
        }
        assert_all_pass(&report, "chen_block_sum");
        assert!(max_residual(&report, "chen_block_sum") <= 1e-8);
    }
    let (product, _) = run_builtin(Command::Chen, "kahler-product", &Overrides::default());
    for (slack, (rhs, lhs)) in records(&product, "chen_slack").iter().zip(
        records(&product, "chen_rhs")
            .iter()
            .zip(records(&product, "chen_lhs").iter()),
    ) {
        assert!(rhs.residual.abs() <= 1e-12, "product rhs must vanish");
        assert!((slack.residual - lhs.residual).abs() <= 1e-12);
    }
    passed("08 chen inequality", "3 scenarios; product meets the bound");
}

/// The four Riemannian/Weyl relations hold at tol_second on the builtin and
/// cancel exactly (1e-12) on flat-ambient scenarios.
#[test]
fn criterion_09_weyl_relations() {
    let checks = [
        "weyl_induced_connection",
        "weyl_second_fundamental",
        "weyl_shape_operator",
        "weyl_normal_connection",
    ];
    let (report, code) = run_builtin(Command::FrameReport, "paper-example", &Overrides::default());
    assert_eq!(code, 0);
    for check in checks {
        assert_all_pass(&report, check);
        assert!(max_residual(&report, check) <= 1e-4);
    }
    for name in ["paper-example-flat", "kahler-product"] {
        let (flat, _) = run_builtin(Command::FrameReport, name, &Overrides::default());
        for check in checks {
            let max = max_residual(&flat, check);
            assert!(max <= 1e-12, "{name}/{check}: {max}");
        }
    }
    passed("09 weyl relations", "warped within gate; flat exactly zero");
}

/// The adapted orthonormal frame closes: Gram residual and the J
/// decomposition of the fiber pairs both at 1e-6 on the builtin.
#[test]
fn criterion_10_adapted_frame() {
    let (report, code) = run_builtin(Command::WarpedCheck, "paper-example", &Overrides::default());
    assert_eq!(code, 0);
    for check in [
        "adapted_gram",
        "adapted_j_decomposition_d1",
        "adapted_j_decomposition_d2",
    ] {
        assert_all_pass(&report, check);
        assert!(max_residual(&report, check) <= 1e-6);
    }
    passed("10 adapted frame", "gram + J decomposition at 1e-6");
}

/// Byte-identical JSON reports across repeated CLI invocations.
#[test]
fn criterion_11_determinism() {
    let exe = env!("CARGO_BIN_EXE_bislant");
    let invoke = || {
        std::process::Command::new(exe)
            .args([
                "all",
                "--builtin",
                "paper-example",
                "--seed",
                "7",
                "--format",
                "json",
            ])
            .output()
            .expect("binary runs")
    };
    let a = invoke();
    let b = invoke();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout, "reports must be byte-identical");
    passed(
        "11 determinism",
        &format!("{} identical bytes", a.stdout.len()),
    );
}

/// Exactly-zero residual floor for the mixed connection on unwarped
/// products (supporting detail of the characterization criterion).
#[test]
fn product_mixed_connection_is_exactly_zero() {
    let compiled = load("kahler-product").compile(Some(2), false).unwrap();
    for u in &compiled.samples {
        let stencil = Stencil::new(&compiled.chart, &compiled.space, u, &compiled.profile).unwrap();
        let second = SecondOrder::build(&stencil).unwrap();
        for &x in &compiled.split.i1 {
            for &z in &compiled.split.i2 {
                assert_eq!(second.nabla_coord[x][z].norm(), 0.0);
                assert_eq!(second.nabla_coord[z][x].norm(), 0.0);
            }
        }
    }
}

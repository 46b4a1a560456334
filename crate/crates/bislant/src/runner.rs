//! Command dispatch: sample the scenario, evaluate the requested check
//! battery at every admitted point, and assemble a deterministic report.
//!
//! Exit codes: `0` all gates pass, `1` at least one gate fails (the report
//! is still emitted), `2` usage or schema error, `3` numerical degeneracy
//! (rank loss, gated angles, stencil failures) at more than the allowed
//! fraction of admitted points.

use crate::ambient::LeeSign;
use crate::error::{Error, Result};
use crate::immersion::{self, SecondOrder, Stencil};
use crate::report::{CheckItem, CheckRecord, CheckReport, Format, Gate, PointCounts};
use crate::scenario::{Compiled, Scenario};
use crate::slant::{self, dist_conditions, slant_angle_with_frame, DistFrame, ANGLE_GATE};
use crate::warped;

/// Fraction of admitted points that may hit pointwise degeneracies before
/// the run is considered degenerate as a whole (exit code 3).
pub const MAX_DEGENERATE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Ambient structure equations at the chart image points.
    AmbientCheck,
    /// Frames, operator-block identities, slant angles, and the
    /// submanifold-level connection relations.
    FrameReport,
    /// Slant condition batteries for both distributions.
    SlantCheck,
    /// Warp validation, the identity battery, and the characterization.
    WarpedCheck,
    /// The lower bound for |h|^2 with equality diagnostics.
    Chen,
    /// Everything above.
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::AmbientCheck => "ambient-check",
            Command::FrameReport => "frame-report",
            Command::SlantCheck => "slant-check",
            Command::WarpedCheck => "warped-check",
            Command::Chen => "chen",
            Command::All => "all",
        }
    }

    fn wants_ambient(self) -> bool {
        matches!(self, Command::AmbientCheck | Command::All)
    }

    fn wants_frame(self) -> bool {
        matches!(self, Command::FrameReport | Command::All)
    }

    fn wants_slant(self) -> bool {
        matches!(self, Command::SlantCheck | Command::All)
    }

    fn wants_warped(self) -> bool {
        matches!(self, Command::WarpedCheck | Command::All)
    }

    fn wants_chen(self) -> bool {
        matches!(self, Command::Chen | Command::All)
    }
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ambient-check" => Command::AmbientCheck,
            "frame-report" => Command::FrameReport,
            "slant-check" => Command::SlantCheck,
            "warped-check" => Command::WarpedCheck,
            "chen" => Command::Chen,
            "all" => Command::All,
            other => {
                return Err(Error::Usage {
                    message: format!("unknown command `{other}`"),
                })
            }
        })
    }
}

/// CLI-level overrides applied on top of the scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol_first: Option<f64>,
    pub tol_second: Option<f64>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub allow_degenerate_angles: bool,
    /// Negative control: report the Lee form with the opposite sign.
    pub flip_lee_sign: bool,
    /// Negative control: replace the warping function by its reciprocal.
    pub invert_lambda: bool,
}

/// Run a command against a scenario. Returns the report and the exit code.
pub fn run(
    command: Command,
    scenario: &Scenario,
    source_label: &str,
    overrides: &Overrides,
) -> Result<(CheckReport, i32)> {
    let mut scenario = scenario.clone();
    if let Some(seed) = overrides.seed {
        scenario.samples.seed = seed;
    }
    let mut compiled = scenario.compile(overrides.grid, overrides.invert_lambda)?;
    if overrides.flip_lee_sign {
        compiled.space = compiled.space.with_lee_sign(LeeSign::Flipped);
    }
    let mut profile = compiled.profile;
    if let Some(t) = overrides.tol_first {
        profile.tol_first = t;
    }
    if let Some(t) = overrides.tol_second {
        profile.tol_second = t;
    }
    profile.validate()?;
    compiled.profile = profile;
    let angle_gate = if overrides.allow_degenerate_angles {
        1e-12
    } else {
        ANGLE_GATE
    };
    if command.wants_warped() && compiled.warp.is_none() {
        return Err(Error::Usage {
            message: format!(
                "command `{}` requires a warp declaration in the scenario",
                command.name()
            ),
        });
    }

    let mut report = CheckReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        scenario_source: source_label.to_string(),
        scenario_sha256: scenario.sha256(),
        tolerances: profile,
        points: PointCounts {
            requested: compiled.samples.len(),
            admitted: 0,
            guard_skipped: 0,
            degenerate_skipped: 0,
        },
        records: Vec::new(),
        summary: Vec::new(),
    };

    for (index, u) in compiled.samples.iter().enumerate() {
        if !compiled.chart.admits(u)? {
            report.points.guard_skipped += 1;
            continue;
        }
        match run_point(command, &compiled, u, angle_gate) {
            Ok(items) => {
                report.points.admitted += 1;
                for item in items {
                    let gate = item.gate.resolve(&profile);
                    report.records.push(CheckRecord {
                        point_index: index,
                        u: u.as_slice().to_vec(),
                        check: item.name.to_string(),
                        residual: item.residual,
                        gate,
                        pass: gate.map(|g| item.residual <= g).unwrap_or(true),
                    });
                }
            }
            Err(e) if e.is_degeneracy() => {
                report.points.admitted += 1;
                report.points.degenerate_skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }

    report.finalize();

    let degenerate_fraction = if report.points.admitted > 0 {
        report.points.degenerate_skipped as f64 / report.points.admitted as f64
    } else {
        1.0
    };
    let code = if degenerate_fraction > MAX_DEGENERATE_FRACTION {
        3
    } else if report.all_pass() {
        0
    } else {
        1
    };
    Ok((report, code))
}

/// Evaluate the requested battery at one admitted point.
fn run_point(
    command: Command,
    compiled: &Compiled,
    u: &crate::numerics::Vector,
    angle_gate: f64,
) -> Result<Vec<CheckItem>> {
    let mut items = Vec::new();
    let space = &compiled.space;
    let profile = &compiled.profile;

    if command.wants_ambient() {
        let x = compiled.chart.position(u)?;
        items.extend(space.check_structure(&x, profile)?);
    }

    let needs_stencil = command.wants_frame()
        || command.wants_slant()
        || command.wants_warped()
        || command.wants_chen();
    if !needs_stencil {
        return Ok(items);
    }

    let stencil = Stencil::new(&compiled.chart, space, u, profile)?;
    let second = SecondOrder::build(&stencil)?;
    let state = &stencil.center;
    let split = &compiled.split;

    let d1 = DistFrame::build(state, &split.i1)?;
    let d2 = DistFrame::build(state, &split.i2)?;
    let rec1 = slant_angle_with_frame(state, space, &d1, profile)?;
    let rec2 = slant_angle_with_frame(state, space, &d2, profile)?;

    let slant_items = |items: &mut Vec<CheckItem>| {
        items.push(CheckItem::info("slant_theta1", rec1.theta));
        items.push(CheckItem::info("slant_theta2", rec2.theta));
        items.push(CheckItem::new(
            "slant_theta1_spread",
            rec1.eig_spread,
            Gate::Eig,
        ));
        items.push(CheckItem::new(
            "slant_theta2_spread",
            rec2.eig_spread,
            Gate::Eig,
        ));
        items.push(CheckItem::new(
            "slant_p_invariance_d1",
            rec1.invariance_residual,
            Gate::First,
        ));
        items.push(CheckItem::new(
            "slant_p_invariance_d2",
            rec2.invariance_residual,
            Gate::First,
        ));
        items.push(CheckItem::info(
            "slant_proper_bislant",
            if rec1.proper && rec2.proper && (rec1.theta - rec2.theta).abs() > 1e-9 {
                1.0
            } else {
                0.0
            },
        ));
    };

    let closed_form_items = |items: &mut Vec<CheckItem>| -> Result<()> {
        if let Some(expr) = &split.cos2_theta1 {
            let declared = expr.eval_slice(u.as_slice())?;
            items.push(CheckItem::new(
                "slant_closed_form_theta1",
                (rec1.cos2 - declared).abs(),
                Gate::First,
            ));
        }
        if let Some(expr) = &split.cos2_theta2 {
            let declared = expr.eval_slice(u.as_slice())?;
            items.push(CheckItem::new(
                "slant_closed_form_theta2",
                (rec2.cos2 - declared).abs(),
                Gate::First,
            ));
        }
        Ok(())
    };

    if command.wants_frame() {
        items.push(CheckItem::new(
            "frame_gram",
            state.frame_gram_residual(),
            Gate::Fixed(1e-8),
        ));
        let [r1, r2, r3, r4] = state.j_split_residuals();
        items.push(CheckItem::new("jsplit_p2_tf", r1, Gate::First));
        items.push(CheckItem::new("jsplit_f2_ft", r2, Gate::First));
        items.push(CheckItem::new("jsplit_fp_ff", r3, Gate::First));
        items.push(CheckItem::new("jsplit_tf_pt", r4, Gate::First));
        items.push(CheckItem::new(
            "p_skew",
            state.p_skew_residual(),
            Gate::Fixed(1e-8),
        ));
        slant_items(&mut items);
        closed_form_items(&mut items)?;
        items.extend(immersion::check_weyl_relations(&stencil, &second)?);
        items.extend(immersion::check_pftf_derivatives(&stencil, &second)?);
        // Weingarten cross-check over the normal frame fields
        let mut cross_max: f64 = 0.0;
        for al in 0..state.normal_dim() {
            for i in 0..state.param_dim() {
                let mut field = |st: &immersion::FrameState| Ok(st.nor_frame[al].clone());
                let (_, cross) = immersion::normal_connection(&stencil, &second, &mut field, i)?;
                cross_max = cross_max.max(cross);
            }
        }
        items.push(CheckItem::new(
            "weingarten_consistency",
            cross_max,
            Gate::Second,
        ));
    }

    if command.wants_slant() {
        if !command.wants_frame() {
            slant_items(&mut items);
            closed_form_items(&mut items)?;
        }
        let c1 = dist_conditions(&stencil, &second, &split.i1, &split.i2, rec1.theta)?;
        let c2 = dist_conditions(&stencil, &second, &split.i2, &split.i1, rec2.theta)?;
        items.extend(slant::condition_items("d1", &c1));
        items.extend(slant::condition_items("d2", &c2));
        items.push(CheckItem::info(
            "mixed_totally_geodesic",
            slant::mixed_tg_check(state, &second, &d1, &d2),
        ));
    }

    if command.wants_warped() {
        let warp = compiled.warp.as_ref().expect("checked by run()");
        items.extend(warped::validate_warp(&stencil, split, warp)?);
        items.extend(warped::check_warp_identities(
            &stencil, &second, split, warp,
        )?);
        items.extend(warped::check_characterization(
            &stencil, &second, split, warp,
        )?);
        let frame = warped::adapted_frame(state, space, split, &rec1, &rec2, angle_gate)?;
        items.push(CheckItem::new(
            "adapted_gram",
            frame.gram_residual,
            Gate::First,
        ));
        items.push(CheckItem::new(
            "adapted_j_decomposition_d1",
            frame.j_decomposition_d1,
            Gate::First,
        ));
        items.push(CheckItem::new(
            "adapted_j_decomposition_d2",
            frame.j_decomposition_d2,
            Gate::First,
        ));
    }

    if command.wants_chen() {
        let record = warped::chen_inequality(&stencil, &second, split, angle_gate)?;
        items.extend(warped::chen_items(&record, profile));
    }

    Ok(items)
}

/// Convenience wrapper: run and serialize in one call.
pub fn run_to_string(
    command: Command,
    scenario: &Scenario,
    source_label: &str,
    overrides: &Overrides,
    format: Format,
) -> Result<(String, i32)> {
    let (report, code) = run(command, scenario, source_label, overrides)?;
    Ok((report.emit(format), code))
}

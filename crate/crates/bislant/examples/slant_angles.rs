//! Pointwise slant angles: the eigenvalue route against the declared closed
//! forms, and their invariance under the conformal factor.
//!
//! ```text
//! cargo run --example slant_angles
//! ```

use bislant::immersion::frame;
use bislant::scenario::{builtin, Scenario};
use bislant::slant::slant_angle;
use bislant::{AmbientSpace, Vector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_json(builtin("paper-example").unwrap())?;
    let c = scenario.compile(None, false)?;
    let flat = AmbientSpace::flat(4);

    println!(
        "{:>22} {:>12} {:>12} {:>10}",
        "u", "cos2 eigen", "cos2 closed", "spread"
    );
    for u in [
        Vector::from_row_slice(&[0.6, 0.1, 1.5, 0.5]),
        Vector::from_row_slice(&[0.7, 0.25, 1.4, 0.45]),
        Vector::from_row_slice(&[0.85, 0.3, 1.65, 0.35]),
    ] {
        let state = frame(&c.chart, &c.space, &u)?.frame;
        let rec1 = slant_angle(&state, &c.space, &c.split.i1, &c.profile)?;
        let rec2 = slant_angle(&state, &c.space, &c.split.i2, &c.profile)?;
        let cf1 = c
            .split
            .cos2_theta1
            .as_ref()
            .unwrap()
            .eval_slice(u.as_slice())?;
        let cf2 = c
            .split
            .cos2_theta2
            .as_ref()
            .unwrap()
            .eval_slice(u.as_slice())?;
        println!(
            "{:>22} {:>12.8} {:>12.8} {:>10.2e}",
            format!("{:?}", u.as_slice()),
            rec1.cos2,
            cf1,
            rec1.eig_spread
        );
        println!(
            "{:>22} {:>12.8} {:>12.8} {:>10.2e}",
            "", rec2.cos2, cf2, rec2.eig_spread
        );

        // conformal invariance: the flat ambient sees the same angles
        let state_flat = frame(&c.chart, &flat, &u)?.frame;
        let flat1 = slant_angle(&state_flat, &flat, &c.split.i1, &c.profile)?;
        println!(
            "{:>22} conformal vs flat angle difference: {:.2e}",
            "",
            (rec1.theta - flat1.theta).abs()
        );
    }
    Ok(())
}

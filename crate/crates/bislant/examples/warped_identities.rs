//! The warped-product battery at one point: warp validation, the six
//! identities, the characterization conditions, and the adapted frame.
//!
//! ```text
//! cargo run --example warped_identities
//! ```

use bislant::immersion::{SecondOrder, Stencil};
use bislant::scenario::{builtin, Scenario};
use bislant::slant::{slant_angle, ANGLE_GATE};
use bislant::warped;
use bislant::Vector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_json(builtin("paper-example").unwrap())?;
    let c = scenario.compile(None, false)?;
    let warp = c.warp.as_ref().expect("bundled scenario declares a warp");
    let u = Vector::from_row_slice(&[0.75, 0.2, 1.45, 0.42]);

    let stencil = Stencil::new(&c.chart, &c.space, &u, &c.profile)?;
    let second = SecondOrder::build(&stencil)?;
    let state = &stencil.center;

    println!("warp validation:");
    for item in warped::validate_warp(&stencil, &c.split, warp)? {
        println!("  {:<24} {:>12.3e}", item.name, item.residual);
    }
    println!("identity battery:");
    for item in warped::check_warp_identities(&stencil, &second, &c.split, warp)? {
        println!("  {:<24} {:>12.3e}", item.name, item.residual);
    }
    println!("characterization:");
    for item in warped::check_characterization(&stencil, &second, &c.split, warp)? {
        println!("  {:<24} {:>12.3e}", item.name, item.residual);
    }

    let rec1 = slant_angle(state, &c.space, &c.split.i1, &c.profile)?;
    let rec2 = slant_angle(state, &c.space, &c.split.i2, &c.profile)?;
    let frame = warped::adapted_frame(state, &c.space, &c.split, &rec1, &rec2, ANGLE_GATE)?;
    println!("adapted frame ({} vectors):", frame.vectors.len());
    println!("  labels            {:?}", frame.labels);
    println!("  gram residual     {:.3e}", frame.gram_residual);
    println!(
        "  J decompositions  {:.3e} / {:.3e}",
        frame.j_decomposition_d1, frame.j_decomposition_d2
    );

    // the logarithmic gradient of the warp is half the tangential Lee vector
    let bt = state.tangential(&state.lee.b);
    let grad = warp.log_gradient(&u)?;
    println!("grad(ln lambda) in coordinates: {:?}", grad.as_slice());
    println!("(1/2) B^T has coordinate pairing {:?}", {
        let coords = state.coords_of_tangent(&bt);
        coords
            .as_slice()
            .iter()
            .map(|x| 0.5 * x)
            .collect::<Vec<_>>()
    });
    Ok(())
}

//! Frames and the tangential/normal split of the complex structure along
//! the bundled immersion: induced metric, orthonormal frames, the blocks
//! `P, F, t, f`, and their four algebraic identities.
//!
//! ```text
//! cargo run --example frames_and_operators
//! ```

use bislant::immersion::second_fundamental;
use bislant::scenario::{builtin, Scenario};
use bislant::Vector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_json(builtin("paper-example").unwrap())?;
    let c = scenario.compile(None, false)?;
    let u = Vector::from_row_slice(&[0.7, 0.25, 1.5, 0.4]);

    let state = second_fundamental(&c.chart, &c.space, &u, &c.profile)?;
    let frame = &state.frame;

    println!("u            = {:?}", u.as_slice());
    println!("x(u)         = {:?}", frame.x.as_slice());
    println!("induced metric:");
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| format!("{:9.5}", frame.gram[(i, j)]))
            .collect();
        println!("  [{}]", row.join(" "));
    }
    println!("frame gram residual: {:.3e}", frame.frame_gram_residual());

    println!("P (tangential block of J in the orthonormal frame):");
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| format!("{:9.5}", frame.p_mat[(i, j)]))
            .collect();
        println!("  [{}]", row.join(" "));
    }
    let [r1, r2, r3, r4] = frame.j_split_residuals();
    println!(
        "block identities: P^2+tF+I {r1:.2e}, f^2+Ft+I {r2:.2e}, FP+fF {r3:.2e}, tf+Pt {r4:.2e}"
    );

    let second = state.second();
    println!(
        "mean curvature |H| = {:.6}",
        frame.g_norm(&second.mean_curvature)
    );
    println!(
        "h on the first orthonormal frame pair: {:?}",
        second.h_frame[0][0].as_slice()
    );
    Ok(())
}

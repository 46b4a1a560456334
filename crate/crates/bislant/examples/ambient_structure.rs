//! The conformal Kähler ambient: Lee form, Lee vector, and the pointwise
//! structure-equation residuals.
//!
//! ```text
//! cargo run --example ambient_structure
//! ```

use bislant::{AmbientSpace, ToleranceProfile, Vector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // g = e^sigma * Euclidean on R^8, sigma = -(x1^2 + x2^2 + 1)
    let space = AmbientSpace::new(4, "-(x1^2 + x2^2 + 1)")?;
    let profile = ToleranceProfile::default();
    let p = Vector::from_row_slice(&[0.5, 0.2, 1.4, 0.4, 0.1, 0.2, 1.0, 0.2]);

    println!("sigma(p)    = {}", space.sigma_at(&p)?);
    let lee = space.lee_data(&p)?;
    println!("omega(p)    = {:?}", lee.omega.as_slice());
    println!("B(p)        = {:?}", lee.b.as_slice());

    // the metric dual pairing g(B, U) = omega(U)
    let g = space.metric(&p)?;
    let u = Vector::from_row_slice(&[1.0, -0.5, 0.0, 0.3, 0.2, 0.0, 0.0, 1.0]);
    println!(
        "duality     : g(B,U) = {:.12}, omega(U) = {:.12}",
        g.apply(&lee.b, &u),
        lee.omega_of(&u)
    );

    println!("structure-equation residuals at p:");
    for item in space.check_structure(&p, &profile)? {
        println!(
            "  {:<20} {:>12.3e}  (gate {:.0e})",
            item.name,
            item.residual,
            item.gate.resolve(&profile).unwrap()
        );
    }

    // on the flat space every residual is exactly zero
    let flat = AmbientSpace::flat(4);
    let max = flat
        .check_structure(&p, &profile)?
        .into_iter()
        .map(|i| i.residual)
        .fold(0.0f64, f64::max);
    println!("flat-space max residual: {max:e}");
    Ok(())
}

//! The lower bound for the squared norm of the second fundamental form,
//! with block-norm accounting and the equality-case diagnosis.
//!
//! ```text
//! cargo run --example chen_inequality
//! ```

use bislant::immersion::{SecondOrder, Stencil};
use bislant::scenario::{builtin, Scenario};
use bislant::slant::ANGLE_GATE;
use bislant::warped::{chen_inequality, equality_case, EqualityDiagnosis};
use bislant::Vector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["paper-example", "kahler-product"] {
        let scenario = Scenario::from_json(builtin(name).unwrap())?;
        let c = scenario.compile(None, false)?;
        let u = match name {
            "paper-example" => Vector::from_row_slice(&[0.7, 0.2, 1.5, 0.45]),
            _ => Vector::from_row_slice(&[0.3, -0.4, 0.2, 0.8]),
        };
        let stencil = Stencil::new(&c.chart, &c.space, &u, &c.profile)?;
        let second = SecondOrder::build(&stencil)?;
        let record = chen_inequality(&stencil, &second, &c.split, ANGLE_GATE)?;

        println!("== {name} at {:?}", u.as_slice());
        println!("  |h|^2      = {:.8}", record.lhs);
        println!("  bound      = {:.8}", record.rhs);
        println!("  slack      = {:.8}", record.slack);
        println!("  block norms (rows: D1xD1, D1xD2, D2xD2; cols: FD1, FD2, mu):");
        for row in record.component_norms {
            println!(
                "    [{:>11.3e} {:>11.3e} {:>11.3e}]",
                row[0], row[1], row[2]
            );
        }
        println!("  block sum defect: {:.3e}", record.block_sum_residual);
        match equality_case(&record, &c.profile) {
            EqualityDiagnosis::Strict { slack } => {
                println!("  diagnosis: strict inequality (slack {slack:.6})");
            }
            EqualityDiagnosis::Equality {
                mu_residual,
                minimal,
                mixed_totally_geodesic,
                consistent,
            } => {
                println!(
                    "  diagnosis: equality case (mu residual {mu_residual:.2e}, minimal {minimal}, mixed-TG {mixed_totally_geodesic}, consistent {consistent})"
                );
            }
        }
    }
    Ok(())
}

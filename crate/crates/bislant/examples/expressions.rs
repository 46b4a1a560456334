//! Parse, evaluate, and differentiate closed-form expressions.
//!
//! ```text
//! cargo run --example expressions
//! ```

use bislant::expr::{Bindings, Expression};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let expr = Expression::parse("u1*cos(u2) + exp(-(u1^2)/2)", &["u1", "u2"])?;
    println!("expression : {expr}");
    println!("variables  : {:?}", expr.variables());

    let mut bindings = Bindings::new();
    bindings.insert("u1".into(), 0.8);
    bindings.insert("u2".into(), 0.3);
    println!("value      : {}", expr.eval(&bindings)?);
    println!("d/du1      : {}", expr.eval_derivative(&bindings, "u1")?);
    println!("d/du2      : {}", expr.eval_derivative(&bindings, "u2")?);

    // precedence: ^ binds tightest and associates right, unary minus sits
    // between ^ and the multiplicative level
    for source in ["1 + 2*3", "-2^2", "2^3^2"] {
        let e = Expression::parse(source, &[])?;
        println!("{source:>8} = {}", e.eval(&Bindings::new())?);
    }

    // domain errors name the offending subexpression
    let log_expr = Expression::parse("log(u1 - 1)", &["u1"])?;
    let mut at_zero = Bindings::new();
    at_zero.insert("u1".into(), 0.5);
    match log_expr.eval(&at_zero) {
        Err(e) => println!("domain error: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

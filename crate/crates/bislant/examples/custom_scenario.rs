//! Load a scenario JSON file and run the full battery, printing the text
//! report and propagating the exit code.
//!
//! ```text
//! cargo run --example custom_scenario -- crates/bislant/scenarios/kahler_product.json
//! ```

use bislant::report::Format;
use bislant::runner::{run_to_string, Command, Overrides};
use bislant::scenario::Scenario;

fn main() {
    let path = match std::env::args().nth(1) {
        Some(p) => p,
        None => {
            eprintln!("usage: custom_scenario <scenario.json>");
            std::process::exit(2);
        }
    };
    let scenario = match Scenario::load(std::path::Path::new(&path)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    match run_to_string(
        Command::All,
        &scenario,
        &format!("file:{path}"),
        &Overrides::default(),
        Format::Text,
    ) {
        Ok((text, code)) => {
            print!("{text}");
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

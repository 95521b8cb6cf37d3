//! Finite-difference gradient check of every registered model graph.
//!
//! cargo run --release --example gradcheck

use rbp::gradcheck::{run_all, GRADCHECK_TOLERANCE};

fn main() {
    let outcomes = run_all();
    for o in &outcomes {
        match o.error {
            Some(e) => println!("{:<16} {e:.1e}", o.name),
            None => println!("{:<16} {}", o.name, o.message.as_deref().unwrap_or("?")),
        }
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{} graphs, {failed} above {GRADCHECK_TOLERANCE:e}", outcomes.len());
}

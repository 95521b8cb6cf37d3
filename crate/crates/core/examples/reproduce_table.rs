//! Re-runs one results table in fast mode and writes the CSV report.
//!
//! cargo run --release --example reproduce_table -- [table 1-6] [sims] [out.csv]

use std::path::PathBuf;

use rbp::harness::{reproduce_table, write_report, ReproduceOptions};

fn main() -> rbp::Result<()> {
    let mut args = std::env::args().skip(1);
    let table: u8 = args.next().map(|s| s.parse().expect("table")).unwrap_or(1);
    let sims: usize = args.next().map(|s| s.parse().expect("sims")).unwrap_or(10);
    let opts = ReproduceOptions {
        sims,
        ..ReproduceOptions::default()
    };
    let report = reproduce_table(table, &opts)?;
    print!("{}", report.render());
    if let Some(out) = args.next().map(PathBuf::from) {
        write_report(&report, &out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

//! Recomputes the per-scenario tables from the bundled reference counts.

use dtnsim::metrics::{read_counts_csv, render_summary, reports_from_counts, Delta};
use dtnsim::Catalog;

const COUNTS: &str = include_str!("../data/reference_counts.csv");

fn main() -> dtnsim::Result<()> {
    let catalog = Catalog::builtin();
    let rows = read_counts_csv(COUNTS)?;
    let reports = reports_from_counts(&rows, |n| catalog.delta_params(n).map(Delta::from))?;
    if let Some(first) = reports.first() {
        println!("{}", first.render_counts());
    }
    print!("{}", render_summary(&reports));
    Ok(())
}

//! Lists the built-in scenarios with their connection ratio and flows.

use dtnsim::metrics::{format_truncated, Delta};
use dtnsim::Catalog;

fn main() -> dtnsim::Result<()> {
    let catalog = Catalog::builtin();
    for n in catalog.numbers() {
        let spec = catalog.build(n, 20, 1, Default::default())?;
        let d = Delta::from(catalog.delta_params(n).expect("listed"));
        println!(
            "scenario {n}: {} mobiles, {} connections, ratio {}",
            spec.mobile_nodes,
            spec.ftp_count(),
            format_truncated(d.truncated(), 2)
        );
        for c in &spec.connections {
            println!(
                "  FTP({:>2}) {} -> {:<4} cluster {}  {:>3}s..{:>3}s  {} bytes",
                c.ftp,
                c.src,
                c.dst,
                c.cluster.number(),
                c.start.as_secs_f64(),
                c.stop.as_secs_f64(),
                c.bytes
            );
        }
    }
    Ok(())
}

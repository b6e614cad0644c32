//! Writes a run's trace to a file, parses it back, and checks nothing changed.

use std::fs::File;
use std::io::BufReader;

use dtnsim::trace::{parse, TraceWriter};
use dtnsim::{build_scenario, ModelParams, SimConfig, Simulation, TraceRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("dtnsim_example.tr");
    let spec = build_scenario(1, 50, 2)?;
    let file = std::io::BufWriter::new(File::create(&path)?);
    let sink = (Vec::<TraceRecord>::new(), TraceWriter::new(file));
    let mut sim = Simulation::new(
        SimConfig::from_scenario(&spec, ModelParams::default()),
        sink,
    )?;
    sim.run()?;
    let (in_memory, writer) = sim.into_sink();
    writer.into_inner()?;

    let back = parse(BufReader::new(File::open(&path)?))?;
    println!("{}: {} records", path.display(), back.len());
    for r in back.iter().take(5) {
        println!("  {r}");
    }
    assert_eq!(back, in_memory);
    println!("round trip identical");
    std::fs::remove_file(path)?;
    Ok(())
}

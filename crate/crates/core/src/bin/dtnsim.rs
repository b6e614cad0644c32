use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtnsim::bundle::MbConvention;
use dtnsim::cli::{self, AnalyzeInput, Overrides, RunConfig, SweepConfig};
use dtnsim::Catalog;

#[derive(Parser)]
#[command(
    name = "dtnsim",
    version,
    about = "Bundle-layer custody transfer simulator and trace analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario at one pause time and write its trace.
    Run {
        #[arg(long)]
        scenario: u32,
        #[arg(long)]
        pause: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "run.tr")]
        out: PathBuf,
        /// Also write the waypoint plans ("node t_arrive x y speed pause").
        #[arg(long)]
        waypoints: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run every pause time (and seed) of one or more scenarios.
    Sweep {
        /// Scenario numbers; all catalog scenarios when omitted.
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seed: Vec<u64>,
        /// Pause times; 10,20,...,100 when omitted.
        #[arg(long, value_delimiter = ',')]
        pause: Vec<u32>,
        #[arg(long, default_value = "traces")]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Build tables and figure CSVs from a trace directory or a counts CSV.
    Analyze {
        /// Directory laid out as s<NN>/p<pause>_seed<k>.tr
        #[arg(required_unless_present = "counts", conflicts_with = "counts")]
        traces: Option<PathBuf>,
        /// Counts CSV (scenario,pause,dtn,overall,received,send,drop[,seed]).
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Print the built-in scenario catalog.
    Catalog,
}

#[derive(Args)]
struct ModelArgs {
    /// Radio range in meters.
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    speed_min: Option<f64>,
    #[arg(long)]
    speed_max: Option<f64>,
    #[arg(long, default_value = "decimal")]
    mb_convention: MbConvention,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

impl ModelArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            range_m: self.range,
            speed_min: self.speed_min,
            speed_max: self.speed_max,
            mb: self.mb_convention,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

fn execute(command: Command) -> dtnsim::Result<u8> {
    match command {
        Command::Run {
            scenario,
            pause,
            seed,
            out,
            waypoints,
            model,
        } => {
            let cfg = RunConfig {
                scenario_n: scenario,
                pause_time: pause,
                seed,
                output: out,
                overrides: model.overrides(),
                catalog: model.catalog.clone(),
                waypoints,
            };
            let stats = cli::cmd_run(&cfg)?;
            println!(
                "{}: {} records, {} events, created {} delivered {} stored {}, drops {} (RTR {}, MAC {})",
                cfg.output.display(),
                stats.records,
                stats.dispatched,
                stats.created,
                stats.delivered,
                stats.stored_at_horizon,
                stats.rtr_drops + stats.mac_drops,
                stats.rtr_drops,
                stats.mac_drops
            );
            Ok(0)
        }
        Command::Sweep {
            scenario,
            seed,
            pause,
            out,
            model,
        } => {
            let cfg = SweepConfig {
                scenarios: scenario,
                seeds: seed,
                pauses: pause,
                out_dir: out,
                overrides: model.overrides(),
                catalog: model.catalog.clone(),
            };
            let cells = cli::cmd_sweep(&cfg)?;
            let mut failed = 0;
            for c in &cells {
                match &c.outcome {
                    Ok(s) => println!("ok   {} ({} records)", c.path.display(), s.records),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL {}: {e}", c.path.display());
                    }
                }
            }
            println!("{} of {} runs succeeded", cells.len() - failed, cells.len());
            Ok(if failed == 0 { 0 } else { 2 })
        }
        Command::Analyze {
            traces,
            counts,
            out,
            catalog,
        } => {
            let input = match (traces, counts) {
                (_, Some(c)) => AnalyzeInput::Counts(c),
                (Some(t), None) => AnalyzeInput::Traces(t),
                (None, None) => unreachable!("clap requires one"),
            };
            let reports = cli::cmd_analyze(&input, &out, catalog.as_deref())?;
            print!("{}", dtnsim::metrics::render_summary(&reports));
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Catalog => {
            print!("{}", Catalog::builtin().to_toml_string());
            Ok(0)
        }
    }
}

//! Command implementations behind the `dtnsim` binary: single runs, pause
//! sweeps and trace/counts analysis.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bundle::MbConvention;
use crate::error::{Error, Result};
use crate::metrics::{self, Delta, MetricsReport, RunMetrics};
use crate::scenario::{Catalog, ScenarioSpec, HORIZON, PAUSE_TIMES};
use crate::sim::{ModelParams, RunStats, SimConfig, Simulation};
use crate::trace::{self, TraceWriter};

/// Model knobs exposed on the command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub range_m: Option<f64>,
    pub speed_min: Option<f64>,
    pub speed_max: Option<f64>,
    pub mb: MbConvention,
}

impl Overrides {
    pub fn model(&self) -> ModelParams {
        let mut m = ModelParams::default();
        if let Some(r) = self.range_m {
            m.topology.range_m = r;
        }
        if let Some(s) = self.speed_min {
            m.topology.speed_min = s;
        }
        if let Some(s) = self.speed_max {
            m.topology.speed_max = s;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario_n: u32,
    pub pause_time: u32,
    pub seed: u64,
    pub output: PathBuf,
    pub overrides: Overrides,
    /// Catalog file replacing the built-in one.
    pub catalog: Option<PathBuf>,
    /// Where to export the waypoint plans, if anywhere.
    pub waypoints: Option<PathBuf>,
}

impl RunConfig {
    /// Resolves the scenario and checks the overrides.
    pub fn validate(&self) -> Result<(ScenarioSpec, ModelParams)> {
        let catalog = load_catalog(self.catalog.as_deref())?;
        let spec = catalog.build(
            self.scenario_n,
            self.pause_time,
            self.seed,
            self.overrides.mb,
        )?;
        let model = self.overrides.model();
        model.topology.validate()?;
        Ok((spec, model))
    }
}

pub fn load_catalog(path: Option<&Path>) -> Result<Catalog> {
    match path {
        Some(p) => Catalog::load(p),
        None => Ok(Catalog::builtin()),
    }
}

/// Exit status for an error: 1 for configuration problems, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::ScheduleInPast { .. } => 1,
        _ => 2,
    }
}

/// Runs one scenario and writes its trace.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunStats> {
    let (spec, model) = cfg.validate()?;
    run_to_file(&spec, model, &cfg.output, cfg.waypoints.as_deref())
}

fn run_to_file(
    spec: &ScenarioSpec,
    model: ModelParams,
    out: &Path,
    waypoints: Option<&Path>,
) -> Result<RunStats> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut sim = Simulation::new(
        SimConfig::from_scenario(spec, model),
        TraceWriter::new(file),
    )?;
    if let Some(path) = waypoints {
        let mut text = String::from("# node t_arrive x y speed pause\n");
        for plan in sim.topology().plans() {
            for line in plan.export_lines() {
                text.push_str(&line);
                text.push('\n');
            }
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    match sim.run() {
        Ok(stats) => {
            sim.into_sink()
                .into_inner()
                .map_err(|e| Error::io(out, e))?;
            Ok(stats)
        }
        Err(e) => {
            // best effort: the sink is what failed
            let _ = sim.into_sink().mark_partial(&e.to_string());
            Err(e)
        }
    }
}

/// `root/s<NN>/p<pause>_seed<k>.tr`
pub fn trace_path(root: &Path, scenario_n: u32, pause: u32, seed: u64) -> PathBuf {
    root.join(format!("s{scenario_n:02}"))
        .join(format!("p{pause}_seed{seed}.tr"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub scenarios: Vec<u32>,
    pub seeds: Vec<u64>,
    pub pauses: Vec<u32>,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
    pub catalog: Option<PathBuf>,
}

#[derive(Debug)]
pub struct SweepCell {
    pub scenario_n: u32,
    pub pause: u32,
    pub seed: u64,
    pub path: PathBuf,
    pub outcome: Result<RunStats>,
}

/// Runs every (scenario, pause, seed) cell in parallel. A failing cell does
/// not stop the others; configuration errors are reported before anything runs.
pub fn cmd_sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    let catalog = load_catalog(cfg.catalog.as_deref())?;
    let model = cfg.overrides.model();
    model.topology.validate()?;
    let scenarios = if cfg.scenarios.is_empty() {
        catalog.numbers()
    } else {
        cfg.scenarios.clone()
    };
    let pauses = if cfg.pauses.is_empty() {
        PAUSE_TIMES.to_vec()
    } else {
        cfg.pauses.clone()
    };
    let seeds = if cfg.seeds.is_empty() {
        vec![1]
    } else {
        cfg.seeds.clone()
    };
    let mut jobs = Vec::new();
    for &n in &scenarios {
        for &p in &pauses {
            for &s in &seeds {
                jobs.push(catalog.build(n, p, s, cfg.overrides.mb)?);
            }
        }
    }
    Ok(jobs
        .par_iter()
        .map(|spec| {
            let path = trace_path(&cfg.out_dir, spec.scenario_n, spec.pause_time, spec.seed);
            let outcome = run_to_file(spec, model.clone(), &path, None);
            SweepCell {
                scenario_n: spec.scenario_n,
                pause: spec.pause_time,
                seed: spec.seed,
                path,
                outcome,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnalyzeInput {
    /// A directory of traces laid out as `s<NN>/p<pause>_seed<k>.tr`.
    Traces(PathBuf),
    /// Per-pause counts in the result-table layout; nothing is simulated.
    Counts(PathBuf),
}

/// Files written by an analysis, relative to the output directory.
pub const REPORT_FILES: [&str; 7] = [
    "tables.txt",
    "counts.csv",
    "g1_received.csv",
    "g2_theta.csv",
    "g3_throughput.csv",
    "g3_throughput_windows.csv",
    "g4_overhead.csv",
];

pub fn cmd_analyze(
    input: &AnalyzeInput,
    out_dir: &Path,
    catalog: Option<&Path>,
) -> Result<Vec<MetricsReport>> {
    let catalog = load_catalog(catalog)?;
    let delta_of = |n: u32| catalog.delta_params(n).map(Delta::from);
    let reports = match input {
        AnalyzeInput::Counts(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let rows = metrics::read_counts_csv(&text).map_err(|e| located(path, e))?;
            metrics::reports_from_counts(&rows, delta_of)?
        }
        AnalyzeInput::Traces(dir) => analyze_traces(dir, &delta_of)?,
    };
    write_reports(&reports, out_dir)?;
    Ok(reports)
}

fn located(path: &Path, e: crate::error::TraceParseError) -> Error {
    Error::TraceParse(crate::error::TraceParseError {
        message: format!("{}: {}", path.display(), e.message),
        ..e
    })
}

struct TraceFile {
    scenario_n: u32,
    pause: u32,
    seed: u64,
    path: PathBuf,
}

fn parse_trace_name(path: &Path) -> Option<TraceFile> {
    let stem = path.file_stem()?.to_str()?;
    let (pause, seed) = stem.strip_prefix('p')?.split_once("_seed")?;
    let parent = path.parent()?.file_name()?.to_str()?;
    Some(TraceFile {
        scenario_n: parent.strip_prefix('s')?.parse().ok()?,
        pause: pause.parse().ok()?,
        seed: seed.parse().ok()?,
        path: path.to_path_buf(),
    })
}

fn collect_traces(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    paths.sort();
    for p in paths {
        if p.is_dir() {
            collect_traces(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "tr") {
            out.push(p);
        }
    }
    Ok(())
}

fn analyze_traces(
    dir: &Path,
    delta_of: &(dyn Fn(u32) -> Option<Delta> + Sync),
) -> Result<Vec<MetricsReport>> {
    let mut paths = Vec::new();
    collect_traces(dir, &mut paths)?;
    if paths.is_empty() {
        return Err(Error::config(format!(
            "no .tr files under {}",
            dir.display()
        )));
    }
    let files: Vec<TraceFile> = paths
        .iter()
        .map(|p| {
            parse_trace_name(p).ok_or_else(|| {
                Error::config(format!(
                    "{}: expected s<NN>/p<pause>_seed<k>.tr",
                    p.display()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let analyzed: Vec<(TraceFile, RunMetrics)> = files
        .into_par_iter()
        .map(|f| {
            let file = File::open(&f.path).map_err(|e| Error::io(&f.path, e))?;
            let records = trace::parse(BufReader::new(file)).map_err(|e| located(&f.path, e))?;
            let m = RunMetrics::from_records(&records, HORIZON);
            Ok((f, m))
        })
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<(u32, u64), Vec<(u32, RunMetrics)>> = BTreeMap::new();
    for (f, m) in analyzed {
        groups
            .entry((f.scenario_n, f.seed))
            .or_default()
            .push((f.pause, m));
    }
    groups
        .into_iter()
        .map(|((n, seed), runs)| {
            let d = delta_of(n)
                .ok_or_else(|| Error::config(format!("scenario {n} is not in the catalog")))?;
            Ok(MetricsReport::from_runs(n, Some(seed), d, &runs))
        })
        .collect()
}

fn write_reports(reports: &[MetricsReport], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut tables = String::new();
    for r in reports {
        tables.push_str(&r.render_counts());
        tables.push('\n');
    }
    tables.push_str(&metrics::render_summary(reports));
    let contents = [
        tables,
        metrics::write_counts_csv(reports),
        metrics::figure_received(reports),
        metrics::figure_theta(reports),
        metrics::figure_throughput(reports),
        metrics::figure_throughput_windows(reports),
        metrics::figure_overhead(reports),
    ];
    for (name, text) in REPORT_FILES.iter().zip(contents) {
        let path = out_dir.join(name);
        let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(text.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

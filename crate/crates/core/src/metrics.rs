//! Trace analysis: per-pause packet counts, the connection-density ratio Δ,
//! the scaled aggregates Λ₁, Λ₂ and Θ, windowed throughput and routing
//! overhead.
//!
//! Δ, Λ₁, Λ₂ and Θ are computed as exact rationals; truncation only happens
//! when rendering (Δ at two decimals, Λ at three).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use num_rational::Ratio;

use crate::error::{MetricsError, TraceParseError};
use crate::scenario::{DeltaParams, PAUSE_TIMES};
use crate::stack::DTN_PACKET_BYTES;
use crate::time::{SimTime, MICROS_PER_SEC};
use crate::trace::{Layer, TraceEvent, TraceRecord, TraceSink, TraceType};

pub type Exact = Ratio<i128>;

pub const THROUGHPUT_WINDOW: SimTime = SimTime::from_millis(500);

/// One result-table row.
///
/// * `dtn` - bundle-agent data sends (`s`, `AGT`, `dtn`)
/// * `overall` - every `s` record
/// * `received` - every `r` record
/// * `send` - every `s` record at the `AGT` layer (data, acks, reports)
/// * `drop` - every `d` record (always `RTR` or `MAC`)
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PauseTimeCounts {
    pub pause: u32,
    pub dtn: u64,
    pub overall: u64,
    pub received: u64,
    pub send: u64,
    pub drop: u64,
}

/// Table columns, numbered as in the result tables (pause time is column 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Column {
    Pause = 1,
    Dtn = 2,
    Overall = 3,
    Received = 4,
    Send = 5,
    Drop = 6,
}

impl PauseTimeCounts {
    pub fn with_pause(mut self, pause: u32) -> Self {
        self.pause = pause;
        self
    }

    pub fn get(&self, column: Column) -> u64 {
        match column {
            Column::Pause => u64::from(self.pause),
            Column::Dtn => self.dtn,
            Column::Overall => self.overall,
            Column::Received => self.received,
            Column::Send => self.send,
            Column::Drop => self.drop,
        }
    }

    pub fn observe(&mut self, rec: &TraceRecord) {
        match rec.event {
            TraceEvent::Send => {
                self.overall += 1;
                if rec.layer == Layer::Agt {
                    self.send += 1;
                    if rec.ptype == TraceType::Dtn {
                        self.dtn += 1;
                    }
                }
            }
            TraceEvent::Receive => self.received += 1,
            TraceEvent::Drop => self.drop += 1,
        }
    }

    /// Non-data share of sends when the whole row is taken as one window.
    pub fn overhead_percent(&self) -> f64 {
        if self.overall == 0 {
            return 0.0;
        }
        100.0 * self.overall.saturating_sub(self.dtn) as f64 / self.overall as f64
    }
}

/// Counts one completed run. The pause field is left at zero.
pub fn count_packets<'a, I>(records: I) -> PauseTimeCounts
where
    I: IntoIterator<Item = &'a TraceRecord>,
{
    let mut c = PauseTimeCounts::default();
    for r in records {
        c.observe(r);
    }
    c
}

/// Connection-density ratio `F_c / N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Delta {
    pub ftp_count: u64,
    pub nodes: u64,
}

impl Delta {
    /// Truncated toward zero at two decimals; the value used downstream.
    pub fn truncated(&self) -> Exact {
        let hundredths = (100 * self.ftp_count) / self.nodes;
        Exact::new(i128::from(hundredths), 100)
    }

    pub fn exact(&self) -> Exact {
        Exact::new(i128::from(self.ftp_count), i128::from(self.nodes))
    }

    pub fn full_precision(&self) -> f64 {
        self.ftp_count as f64 / self.nodes as f64
    }
}

impl From<DeltaParams> for Delta {
    fn from(p: DeltaParams) -> Self {
        Delta {
            ftp_count: p.ftp_count,
            nodes: p.nodes,
        }
    }
}

pub fn delta(ftp_count: u64, nodes: u64) -> Result<Delta, MetricsError> {
    if nodes == 0 {
        return Err(MetricsError::ZeroNodes);
    }
    Ok(Delta { ftp_count, nodes })
}

/// `T·Δ / 1000` over bundle-agent data sends.
pub fn lambda1(total: u64, delta: Exact) -> Exact {
    Exact::from_integer(i128::from(total)) * delta / 1000
}

/// `T·Δ / 10` over RTR and MAC drops.
pub fn lambda2(total_drops: u64, delta: Exact) -> Exact {
    Exact::from_integer(i128::from(total_drops)) * delta / 10
}

/// `PDTN_i·Δ / 100` for one pause time.
pub fn theta(pdtn: u64, delta: Exact) -> Exact {
    Exact::from_integer(i128::from(pdtn)) * delta / 100
}

/// Truncates a non-negative value toward zero at `places` decimals.
pub fn truncate(x: Exact, places: u32) -> Exact {
    let scale = 10i128.pow(places);
    Exact::new((x * scale).to_integer(), scale)
}

/// Fixed-point rendering truncated at `places` decimals.
pub fn format_truncated(x: Exact, places: u32) -> String {
    let scale = 10i128.pow(places);
    let scaled = (x * scale).to_integer();
    let (int, frac) = (scaled / scale, (scaled % scale).abs());
    if places == 0 {
        return int.to_string();
    }
    format!("{int}.{frac:0width$}", width = places as usize)
}

pub fn to_f64(x: Exact) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Column sum over a complete sweep (one row per pause time 10..=100).
pub fn sum_column(rows: &[PauseTimeCounts], column: Column) -> Result<u64, MetricsError> {
    check_complete(rows)?;
    Ok(rows.iter().map(|r| r.get(column)).sum())
}

fn check_complete(rows: &[PauseTimeCounts]) -> Result<(), MetricsError> {
    let mut seen = std::collections::BTreeSet::new();
    for r in rows {
        if !PAUSE_TIMES.contains(&r.pause) {
            return Err(MetricsError::UnexpectedPause(r.pause));
        }
        if !seen.insert(r.pause) {
            return Err(MetricsError::DuplicatePause(r.pause));
        }
    }
    let missing: Vec<u32> = PAUSE_TIMES
        .iter()
        .copied()
        .filter(|p| !seen.contains(p))
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingPauseRows(missing));
    }
    Ok(())
}

/// Per-window tallies for throughput and overhead.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCounts {
    window: SimTime,
    delivered: Vec<u64>,
    sends: Vec<u64>,
    data_sends: Vec<u64>,
}

impl WindowCounts {
    pub fn new(window: SimTime, horizon: SimTime) -> Self {
        assert!(window > SimTime::ZERO, "window must be positive");
        let n = horizon.as_micros().div_ceil(window.as_micros()) as usize;
        WindowCounts {
            window,
            delivered: vec![0; n],
            sends: vec![0; n],
            data_sends: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.delivered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delivered.is_empty()
    }

    pub fn window(&self) -> SimTime {
        self.window
    }

    fn slot(&mut self, t: SimTime) -> usize {
        let i = (t.as_micros() / self.window.as_micros()) as usize;
        if i >= self.delivered.len() {
            self.delivered.resize(i + 1, 0);
            self.sends.resize(i + 1, 0);
            self.data_sends.resize(i + 1, 0);
        }
        i
    }

    pub fn observe(&mut self, rec: &TraceRecord) {
        match rec.event {
            TraceEvent::Receive if rec.layer == Layer::Agt && rec.ptype == TraceType::Dtn => {
                let i = self.slot(rec.time);
                self.delivered[i] += 1;
            }
            TraceEvent::Send => {
                let i = self.slot(rec.time);
                self.sends[i] += 1;
                if rec.ptype == TraceType::Dtn {
                    self.data_sends[i] += 1;
                }
            }
            _ => {}
        }
    }

    pub fn window_starts(&self) -> Vec<SimTime> {
        (0..self.len())
            .map(|i| SimTime::from_micros(i as u64 * self.window.as_micros()))
            .collect()
    }

    /// Delivered bundles times packet size in bits, per second of window.
    pub fn throughput(&self) -> Vec<f64> {
        let bits = u64::from(DTN_PACKET_BYTES) * 8;
        let w = self.window.as_micros() as f64;
        self.delivered
            .iter()
            .map(|&k| (k * bits * MICROS_PER_SEC) as f64 / w)
            .collect()
    }

    /// Percent of sends that are not bundle data; 0 for windows without sends.
    pub fn overhead(&self) -> Vec<f64> {
        self.sends
            .iter()
            .zip(&self.data_sends)
            .map(|(&all, &data)| {
                if all == 0 {
                    0.0
                } else {
                    100.0 * (all - data) as f64 / all as f64
                }
            })
            .collect()
    }

    /// All sends per bundle-data send; 0 when a window has no data sends.
    pub fn overhead_ratio(&self) -> Vec<f64> {
        self.sends
            .iter()
            .zip(&self.data_sends)
            .map(|(&all, &data)| {
                if data == 0 {
                    0.0
                } else {
                    all as f64 / data as f64
                }
            })
            .collect()
    }

    /// Mean overhead over windows that saw at least one send.
    pub fn mean_overhead(&self) -> f64 {
        let active: Vec<f64> = self
            .overhead()
            .into_iter()
            .zip(&self.sends)
            .filter(|(_, &s)| s > 0)
            .map(|(o, _)| o)
            .collect();
        if active.is_empty() {
            0.0
        } else {
            active.iter().sum::<f64>() / active.len() as f64
        }
    }

    pub fn mean_throughput(&self) -> f64 {
        let t = self.throughput();
        if t.is_empty() {
            0.0
        } else {
            t.iter().sum::<f64>() / t.len() as f64
        }
    }
}

pub fn throughput_series<'a, I>(records: I, window: SimTime, horizon: SimTime) -> Vec<f64>
where
    I: IntoIterator<Item = &'a TraceRecord>,
{
    let mut w = WindowCounts::new(window, horizon);
    records.into_iter().for_each(|r| w.observe(r));
    w.throughput()
}

pub fn routing_overhead_series<'a, I>(records: I, window: SimTime, horizon: SimTime) -> Vec<f64>
where
    I: IntoIterator<Item = &'a TraceRecord>,
{
    let mut w = WindowCounts::new(window, horizon);
    records.into_iter().for_each(|r| w.observe(r));
    w.overhead()
}

/// Streaming analyzer usable as a run's trace sink.
#[derive(Clone, Debug)]
pub struct RunMetrics {
    pub counts: PauseTimeCounts,
    pub windows: WindowCounts,
}

impl RunMetrics {
    pub fn new(horizon: SimTime) -> Self {
        RunMetrics {
            counts: PauseTimeCounts::default(),
            windows: WindowCounts::new(THROUGHPUT_WINDOW, horizon),
        }
    }

    pub fn from_records<'a, I>(records: I, horizon: SimTime) -> Self
    where
        I: IntoIterator<Item = &'a TraceRecord>,
    {
        let mut m = RunMetrics::new(horizon);
        for r in records {
            m.observe(r);
        }
        m
    }

    pub fn observe(&mut self, rec: &TraceRecord) {
        self.counts.observe(rec);
        self.windows.observe(rec);
    }
}

impl TraceSink for RunMetrics {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        self.observe(rec);
        Ok(())
    }
}

/// Everything derived for one scenario (and seed).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub scenario_n: u32,
    pub seed: Option<u64>,
    pub delta: Delta,
    /// Sorted by pause time.
    pub rows: Vec<PauseTimeCounts>,
    /// Column sums; present only for a complete sweep.
    pub t_dtn: Option<u64>,
    pub t_drop: Option<u64>,
    pub lambda1: Option<Exact>,
    pub lambda2: Option<Exact>,
    pub theta: Vec<(u32, Exact)>,
    /// Per pause time: windowed series, when traces were analyzed.
    pub throughput: BTreeMap<u32, Vec<f64>>,
    pub overhead: BTreeMap<u32, Vec<f64>>,
    /// Per pause time: mean overhead percent and sends-per-data-send ratio.
    pub overhead_by_pause: BTreeMap<u32, (f64, f64)>,
}

impl MetricsReport {
    pub fn from_counts(
        scenario_n: u32,
        seed: Option<u64>,
        delta: Delta,
        mut rows: Vec<PauseTimeCounts>,
    ) -> Self {
        rows.sort_by_key(|r| r.pause);
        let d = delta.truncated();
        let t_dtn = sum_column(&rows, Column::Dtn).ok();
        let t_drop = sum_column(&rows, Column::Drop).ok();
        let theta = rows.iter().map(|r| (r.pause, theta(r.dtn, d))).collect();
        let overhead_by_pause = rows
            .iter()
            .map(|r| {
                let ratio = if r.dtn == 0 {
                    0.0
                } else {
                    r.overall as f64 / r.dtn as f64
                };
                (r.pause, (r.overhead_percent(), ratio))
            })
            .collect();
        MetricsReport {
            scenario_n,
            seed,
            delta,
            rows,
            t_dtn,
            t_drop,
            lambda1: t_dtn.map(|t| lambda1(t, d)),
            lambda2: t_drop.map(|t| lambda2(t, d)),
            theta,
            throughput: BTreeMap::new(),
            overhead: BTreeMap::new(),
            overhead_by_pause,
        }
    }

    /// Builds a report from analyzed runs, one per pause time.
    pub fn from_runs(
        scenario_n: u32,
        seed: Option<u64>,
        delta: Delta,
        runs: &[(u32, RunMetrics)],
    ) -> Self {
        let rows = runs.iter().map(|(p, m)| m.counts.with_pause(*p)).collect();
        let mut rep = MetricsReport::from_counts(scenario_n, seed, delta, rows);
        for (p, m) in runs {
            rep.throughput.insert(*p, m.windows.throughput());
            rep.overhead.insert(*p, m.windows.overhead());
            let ratios: Vec<f64> = m
                .windows
                .overhead_ratio()
                .into_iter()
                .filter(|r| *r > 0.0)
                .collect();
            let ratio = if ratios.is_empty() {
                0.0
            } else {
                ratios.iter().sum::<f64>() / ratios.len() as f64
            };
            rep.overhead_by_pause
                .insert(*p, (m.windows.mean_overhead(), ratio));
        }
        rep
    }

    pub fn label(&self) -> String {
        match self.seed {
            Some(s) => format!("s{}_seed{}", self.scenario_n, s),
            None => format!("s{}", self.scenario_n),
        }
    }

    /// Result table in the per-scenario layout.
    pub fn render_counts(&self) -> String {
        let mut out = String::new();
        let seed = self.seed.map(|s| format!(", seed {s}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "Scenario {}: {} mobile nodes, {} FTP connections{seed}",
            self.scenario_n, self.delta.nodes, self.delta.ftp_count
        );
        let _ = writeln!(
            out,
            "{:>13} | {:>8} | {:>8} | {:>8} | {:>8} | {:>6}",
            "Pause Time(s)", "DTN", "Overall", "Received", "Send", "Drop"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>13} | {:>8} | {:>8} | {:>8} | {:>8} | {:>6}",
                r.pause, r.dtn, r.overall, r.received, r.send, r.drop
            );
        }
        out
    }
}

/// Summary tables: Δ with Λ₁ over data sends and Δ with Λ₂ over drops.
pub fn render_summary(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let _ = writeln!(out, "Delta and Lambda1 for bundle data packets");
    let _ = writeln!(
        out,
        "{:>6} | {:>12} | {:>6} | {:>10} | {:>5} | {:>8} | {:>8}",
        "Sr.No.", "Report", "NN", "Fc", "T", "Delta", "Lambda1"
    );
    for (i, r) in reports.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>6} | {:>12} | {:>6} | {:>10} | {:>5} | {:>8} | {:>8}",
            i + 1,
            r.label(),
            r.delta.nodes,
            r.delta.ftp_count,
            dash(r.t_dtn.map(|t| t.to_string())),
            format_truncated(r.delta.truncated(), 2),
            dash(r.lambda1.map(|l| format_truncated(l, 3))),
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Delta and Lambda2 for RTR and MAC packets dropped");
    let _ = writeln!(
        out,
        "{:>6} | {:>12} | {:>6} | {:>10} | {:>5} | {:>8} | {:>8}",
        "Sr.No.", "Report", "NN", "Fc", "T", "Delta", "Lambda2"
    );
    for (i, r) in reports.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>6} | {:>12} | {:>6} | {:>10} | {:>5} | {:>8} | {:>8}",
            i + 1,
            r.label(),
            r.delta.nodes,
            r.delta.ftp_count,
            dash(r.t_drop.map(|t| t.to_string())),
            format_truncated(r.delta.truncated(), 2),
            dash(r.lambda2.map(|l| format_truncated(l, 3))),
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Columns: DTN = AGT data sends; Overall = all sends; Received = all receives; \
         Send = all AGT sends (data, custody acks, delivery reports); Drop = RTR + MAC drops."
    );
    let _ = writeln!(
        out,
        "Delta full precision: {}",
        reports
            .iter()
            .map(|r| format!("{}={:.4}", r.label(), r.delta.full_precision()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    out
}

/// A row of a counts CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountsRow {
    pub scenario: u32,
    pub seed: Option<u64>,
    pub counts: PauseTimeCounts,
}

const COUNT_COLUMNS: [&str; 7] = [
    "scenario", "pause", "dtn", "overall", "received", "send", "drop",
];

/// Reads `scenario,pause,dtn,overall,received,send,drop` with an optional
/// `seed` column, in any column order.
pub fn read_counts_csv(text: &str) -> Result<Vec<CountsRow>, TraceParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(TraceParseError {
        line: 1,
        column: 1,
        message: "empty counts file".into(),
    })?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| names.iter().position(|n| *n == name);
    let mut idx = [0usize; 7];
    for (k, name) in COUNT_COLUMNS.iter().enumerate() {
        idx[k] = find(name).ok_or_else(|| TraceParseError {
            line: 1,
            column: 1,
            message: format!("missing column {name:?}"),
        })?;
    }
    let seed_idx = find("seed");
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(TraceParseError {
                line: line_no,
                column: 1,
                message: format!("expected {} cells, found {}", names.len(), cells.len()),
            });
        }
        let cell = |c: usize| -> Result<u64, TraceParseError> {
            cells[c].parse::<u64>().map_err(|_| TraceParseError {
                line: line_no,
                column: cells[..c].iter().map(|s| s.len() + 1).sum::<usize>() + 1,
                message: format!("column {:?}: invalid count {:?}", names[c], cells[c]),
            })
        };
        let v: Vec<u64> = idx.iter().map(|&c| cell(c)).collect::<Result<_, _>>()?;
        rows.push(CountsRow {
            scenario: v[0] as u32,
            seed: seed_idx.map(cell).transpose()?,
            counts: PauseTimeCounts {
                pause: v[1] as u32,
                dtn: v[2],
                overall: v[3],
                received: v[4],
                send: v[5],
                drop: v[6],
            },
        });
    }
    Ok(rows)
}

pub fn write_counts_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("scenario,seed,pause,dtn,overall,received,send,drop\n");
    for r in reports {
        for c in &r.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.scenario_n,
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                c.pause,
                c.dtn,
                c.overall,
                c.received,
                c.send,
                c.drop
            );
        }
    }
    out
}

/// Groups counts rows into one report per (scenario, seed).
pub fn reports_from_counts(
    rows: &[CountsRow],
    delta_of: impl Fn(u32) -> Option<Delta>,
) -> Result<Vec<MetricsReport>, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::Empty("counts file has no rows".into()));
    }
    let mut groups: BTreeMap<(u32, Option<u64>), Vec<PauseTimeCounts>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.scenario, r.seed))
            .or_default()
            .push(r.counts);
    }
    groups
        .into_iter()
        .map(|((n, seed), rows)| {
            let d = delta_of(n)
                .ok_or_else(|| MetricsError::Empty(format!("no catalog entry for scenario {n}")))?;
            Ok(MetricsReport::from_counts(n, seed, d, rows))
        })
        .collect()
}

fn pause_figure(
    reports: &[MetricsReport],
    value: impl Fn(&MetricsReport, u32) -> Option<String>,
) -> String {
    let mut out = String::from("pause_time");
    for r in reports {
        out.push(',');
        out.push_str(&r.label());
    }
    out.push('\n');
    for p in PAUSE_TIMES {
        out.push_str(&p.to_string());
        for r in reports {
            out.push(',');
            out.push_str(&value(r, p).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

/// Received packets per pause time.
pub fn figure_received(reports: &[MetricsReport]) -> String {
    pause_figure(reports, |r, p| {
        r.rows
            .iter()
            .find(|c| c.pause == p)
            .map(|c| c.received.to_string())
    })
}

/// Θ per pause time.
pub fn figure_theta(reports: &[MetricsReport]) -> String {
    pause_figure(reports, |r, p| {
        r.theta
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, t)| format!("{:.4}", to_f64(*t)))
    })
}

/// Mean throughput (bits/s over all windows) per pause time.
pub fn figure_throughput(reports: &[MetricsReport]) -> String {
    pause_figure(reports, |r, p| {
        r.throughput.get(&p).map(|s| {
            format!(
                "{:.1}",
                if s.is_empty() {
                    0.0
                } else {
                    s.iter().sum::<f64>() / s.len() as f64
                }
            )
        })
    })
}

/// Routing overhead per pause time: percent and sends-per-data-send ratio.
pub fn figure_overhead(reports: &[MetricsReport]) -> String {
    let mut out = String::from("pause_time");
    for r in reports {
        let _ = write!(out, ",{0}_percent,{0}_ratio", r.label());
    }
    out.push('\n');
    for p in PAUSE_TIMES {
        out.push_str(&p.to_string());
        for r in reports {
            match r.overhead_by_pause.get(&p) {
                Some((pct, ratio)) => {
                    let _ = write!(out, ",{pct:.2},{ratio:.3}");
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Windowed throughput series, one column per (report, pause time).
pub fn figure_throughput_windows(reports: &[MetricsReport]) -> String {
    let mut cols: Vec<(String, &Vec<f64>)> = Vec::new();
    for r in reports {
        for (p, s) in &r.throughput {
            cols.push((format!("{}_p{}", r.label(), p), s));
        }
    }
    let len = cols.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    let mut out = String::from("window_start");
    for (name, _) in &cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..len {
        out.push_str(&SimTime::from_micros(i as u64 * THROUGHPUT_WINDOW.as_micros()).to_string());
        for (_, s) in &cols {
            out.push(',');
            if let Some(v) = s.get(i) {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::NodeId;

    fn r(event: TraceEvent, us: u64, layer: Layer, ptype: TraceType) -> TraceRecord {
        TraceRecord {
            event,
            time: SimTime::from_micros(us),
            node: NodeId::Mobile(0),
            layer,
            pkt_id: 1,
            ptype,
            size_bytes: 1540,
            flow: 0,
        }
    }

    fn q(n: i128, d: i128) -> Exact {
        Exact::new(n, d)
    }

    #[test]
    fn counts_follow_column_definitions() {
        assert_eq!(count_packets(&[]), PauseTimeCounts::default());
        let recs = vec![
            r(TraceEvent::Send, 1, Layer::Agt, TraceType::Dtn),
            r(TraceEvent::Send, 2, Layer::Rtr, TraceType::Dtn),
            r(TraceEvent::Send, 3, Layer::Agt, TraceType::Ack),
            r(TraceEvent::Receive, 4, Layer::Rtr, TraceType::Dtn),
            r(TraceEvent::Receive, 5, Layer::Agt, TraceType::Dtn),
            r(TraceEvent::Drop, 6, Layer::Mac, TraceType::Rtc),
        ];
        let c = count_packets(&recs);
        assert_eq!((c.overall, c.received, c.drop), (3, 2, 1));
        assert_eq!((c.dtn, c.send), (1, 2));
    }

    #[test]
    fn delta_truncates() {
        assert_eq!(delta(2, 10).unwrap().truncated(), q(20, 100));
        assert_eq!(delta(10, 150).unwrap().truncated(), q(6, 100));
        assert_eq!(delta(5, 30).unwrap().truncated(), q(16, 100));
        assert_eq!(delta(0, 7).unwrap().truncated(), q(0, 1));
        assert_eq!(delta(1, 0), Err(MetricsError::ZeroNodes));
        assert_eq!(
            format_truncated(delta(14, 200).unwrap().truncated(), 2),
            "0.07"
        );
    }

    #[test]
    fn lambda_values() {
        assert_eq!(format_truncated(lambda1(65545, q(20, 100)), 3), "13.109");
        assert_eq!(format_truncated(lambda1(66843, q(9, 100)), 3), "6.015");
        assert_eq!(format_truncated(lambda1(66366, q(16, 100)), 3), "10.618");
        assert_eq!(lambda1(0, q(3, 10)), q(0, 1));
        assert_eq!(lambda2(239, q(20, 100)), q(478, 100));
        assert_eq!(lambda2(966, q(7, 100)), q(6762, 1000));
        assert_eq!(lambda2(0, q(7, 100)), q(0, 1));
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(8176, q(20, 100)), q(16352, 1000));
        assert_eq!(theta(8477, q(7, 100)), q(59339, 10000));
        assert_eq!(theta(0, q(7, 100)), q(0, 1));
    }

    #[test]
    fn sum_column_needs_all_pause_times() {
        let rows: Vec<_> = PAUSE_TIMES
            .iter()
            .map(|&p| PauseTimeCounts {
                pause: p,
                ..Default::default()
            })
            .collect();
        assert_eq!(sum_column(&rows, Column::Drop), Ok(0));
        assert_eq!(
            sum_column(&rows[2..], Column::Dtn),
            Err(MetricsError::MissingPauseRows(vec![10, 20]))
        );
        let mut dup = rows.clone();
        dup[1].pause = 10;
        assert_eq!(
            sum_column(&dup, Column::Dtn),
            Err(MetricsError::DuplicatePause(10))
        );
    }

    #[test]
    fn throughput_per_window() {
        let half = THROUGHPUT_WINDOW;
        let horizon = SimTime::from_secs(2);
        let recs: Vec<_> = (0..100)
            .map(|i| r(TraceEvent::Receive, 500_000 + i, Layer::Agt, TraceType::Dtn))
            .chain([r(
                TraceEvent::Receive,
                1_000_000,
                Layer::Agt,
                TraceType::Dtn,
            )])
            .chain([r(
                TraceEvent::Receive,
                1_000_001,
                Layer::Rtr,
                TraceType::Dtn,
            )])
            .collect();
        let s = throughput_series(&recs, half, horizon);
        assert_eq!(s, vec![0.0, 2_464_000.0, 24_640.0, 0.0]);
    }

    #[test]
    fn overhead_per_window() {
        let recs = vec![
            r(TraceEvent::Send, 0, Layer::Agt, TraceType::Dtn),
            r(TraceEvent::Send, 1, Layer::Agt, TraceType::Ack),
            r(TraceEvent::Send, 600_000, Layer::Rtr, TraceType::Dtn),
        ];
        let s = routing_overhead_series(&recs, THROUGHPUT_WINDOW, SimTime::from_secs(2));
        assert_eq!(s, vec![50.0, 0.0, 0.0, 0.0]);
        let row = PauseTimeCounts {
            pause: 30,
            dtn: 6943,
            overall: 13950,
            ..Default::default()
        };
        assert!((row.overhead_percent() - 50.23).abs() < 0.01);
        assert_eq!(PauseTimeCounts::default().overhead_percent(), 0.0);
    }

    #[test]
    fn counts_csv_with_and_without_seed() {
        let rows = read_counts_csv(
            "scenario,pause,dtn,overall,received,send,drop\n1,20,2894,5934,2964,2925,28\n",
        )
        .unwrap();
        assert_eq!(rows[0].seed, None);
        assert_eq!(rows[0].counts.drop, 28);
        let rows = read_counts_csv(
            "seed,scenario,pause,dtn,overall,received,send,drop\n3,2,10,1,2,3,4,5\n",
        )
        .unwrap();
        assert_eq!(
            (rows[0].seed, rows[0].scenario, rows[0].counts.drop),
            (Some(3), 2, 5)
        );
        let e = read_counts_csv(
            "scenario,pause,dtn,overall,received,send,drop\n1,20,x,5934,2964,2925,28\n",
        )
        .unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
        assert!(read_counts_csv("scenario,pause\n").is_err());
    }

    #[test]
    fn partial_report_has_no_lambdas() {
        let rep = MetricsReport::from_counts(
            1,
            Some(1),
            delta(2, 10).unwrap(),
            vec![PauseTimeCounts {
                pause: 50,
                dtn: 10,
                overall: 20,
                received: 10,
                send: 10,
                drop: 1,
            }],
        );
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.lambda1.is_none() && rep.lambda2.is_none());
        assert_eq!(rep.theta, vec![(50, q(2, 100))]);
        assert!(render_summary(&[rep.clone()]).contains(" - "));
        assert_eq!(rep.render_counts().lines().count(), 3);
    }
}

use dtnsim::metrics::{
    count_packets, format_truncated, read_counts_csv, reports_from_counts, theta, truncate, Column,
    Delta, Exact, MetricsReport, RunMetrics, WindowCounts, THROUGHPUT_WINDOW,
};
use dtnsim::scenario::{HORIZON, PAUSE_TIMES};
use dtnsim::trace::{parse_str, Layer, TraceEvent, TraceType};
use dtnsim::{Catalog, NodeId, SimTime, TraceRecord};
use proptest::prelude::*;

const REFERENCE_COUNTS: &str = include_str!("../data/reference_counts.csv");

fn reports() -> Vec<MetricsReport> {
    let catalog = Catalog::builtin();
    let rows = read_counts_csv(REFERENCE_COUNTS).unwrap();
    reports_from_counts(&rows, |n| catalog.delta_params(n).map(Delta::from)).unwrap()
}

fn report(n: u32) -> MetricsReport {
    reports().into_iter().find(|r| r.scenario_n == n).unwrap()
}

#[test]
fn reference_counts_cover_every_cell() {
    let rows = read_counts_csv(REFERENCE_COUNTS).unwrap();
    assert_eq!(rows.len(), 60);
    for n in 1..=6 {
        let pauses: Vec<u32> = rows
            .iter()
            .filter(|r| r.scenario == n)
            .map(|r| r.counts.pause)
            .collect();
        assert_eq!(pauses, PAUSE_TIMES);
    }
}

#[test]
fn scenario_one_sums() {
    let r = report(1);
    assert_eq!(format_truncated(r.delta.truncated(), 2), "0.20");
    assert_eq!(r.t_drop, Some(239));
    assert_eq!(
        r.lambda1.map(|x| format_truncated(x, 3)).as_deref(),
        Some("13.109")
    );
    assert_eq!(r.lambda2, Some(Exact::new(478, 100)));
}

#[test]
fn drop_based_metric_matches_by_scenario() {
    let want = [
        (1, "4.780"),
        (2, "5.456"),
        (3, "6.902"),
        (4, "5.418"),
        (5, "5.160"),
        (6, "6.762"),
    ];
    for (n, l2) in want {
        assert_eq!(
            report(n).lambda2.map(|x| format_truncated(x, 3)).as_deref(),
            Some(l2),
            "scenario {n}"
        );
    }
}

#[test]
fn theta_is_per_pause_dtn_times_delta_over_100() {
    let r = report(3);
    let d = r.delta.truncated();
    for (row, (pause, th)) in r.rows.iter().zip(&r.theta) {
        assert_eq!(row.pause, *pause);
        assert_eq!(*th, theta(row.dtn, d));
        assert_eq!(
            *th,
            Exact::from_integer(row.dtn as i128) * d / Exact::from_integer(100)
        );
    }
}

#[test]
fn counting_a_trace_by_hand() {
    let text = "\
s 0.100000 W0 AGT 1 dtn 1540 0
r 0.100500 B0 RTR 1 dtn 1540 0
s 0.100600 B0 AGT 2 dtn 1540 0
s 0.100610 B0 AGT 3 ack 40 0
d 0.101000 B0 RTR 2 dtn 1540 0
s 0.200000 B0 RTR 4 rtc 48 0
r 0.200100 M0 AGT 5 dtn 1540 0
d 0.300000 B0 MAC 6 dtn 1540 0
";
    let recs = parse_str(text).unwrap();
    let c = count_packets(&recs);
    assert_eq!(c.get(Column::Dtn), 2);
    assert_eq!(c.get(Column::Overall), 4);
    assert_eq!(c.get(Column::Received), 2);
    assert_eq!(c.get(Column::Send), 3);
    assert_eq!(c.get(Column::Drop), 2);

    let m = RunMetrics::from_records(&recs, SimTime::from_secs(1));
    // window [0, 0.5): 4 sends, 2 of them data
    assert_eq!(m.windows.overhead()[0], 50.0);
    assert_eq!(m.windows.throughput()[0], 24_640.0);
}

#[test]
fn empty_windows_do_not_count_towards_mean_overhead() {
    let mut w = WindowCounts::new(THROUGHPUT_WINDOW, HORIZON);
    let send = |t: u64, ptype| TraceRecord {
        event: TraceEvent::Send,
        time: SimTime::from_millis(t),
        node: NodeId::BaseStation(0),
        layer: Layer::Agt,
        pkt_id: t,
        ptype,
        size_bytes: 0,
        flow: 0,
    };
    w.observe(&send(10, TraceType::Dtn));
    w.observe(&send(20, TraceType::Ack));
    w.observe(&send(5_010, TraceType::Rtc));
    assert_eq!(w.mean_overhead(), 75.0);
}

proptest! {
    #[test]
    fn truncation_never_rounds_up(num in 0i128..10_000_000, den in 1i128..100_000, places in 0u32..5) {
        let x = Exact::new(num, den);
        let t = truncate(x, places);
        prop_assert!(t <= x);
        prop_assert!(x - t < Exact::new(1, 10i128.pow(places)));
    }

    #[test]
    fn throughput_is_linear_in_receives(k in 0u64..500, window in 0u64..200) {
        let mut w = WindowCounts::new(THROUGHPUT_WINDOW, HORIZON);
        let start = window * 500_000;
        for i in 0..k {
            w.observe(&TraceRecord {
                event: TraceEvent::Receive,
                time: SimTime::from_micros(start + i * 997 % 500_000),
                node: NodeId::Mobile(0),
                layer: Layer::Agt,
                pkt_id: i,
                ptype: TraceType::Dtn,
                size_bytes: 1540,
                flow: 0,
            });
        }
        prop_assert_eq!(w.throughput()[window as usize], (k * 24_640) as f64);
    }
}

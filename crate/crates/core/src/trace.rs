//! Event trace: one line per send, receive or drop.
//!
//! ```text
//! <event> <time> <node> <layer> <pkt_id> <ptype> <size> <flow>
//! s 10.000001 W0 AGT 7 dtn 1540 0
//! ```
//!
//! Fields are separated by single spaces and lines end with LF. Times always
//! carry six decimals. Drops never use the `AGT` layer. A line starting with
//! `#` is a comment, except the partial-output marker written when a run
//! aborted on an I/O error.

use std::fmt;
use std::io::{self, BufRead, BufWriter, Write};

use crate::error::TraceParseError;
use crate::time::SimTime;
use crate::topology::NodeId;

pub const PARTIAL_MARKER: &str = "# partial";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Send,
    Receive,
    Drop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Agt,
    Rtr,
    Mac,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceType {
    Dtn,
    Ack,
    Rtc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub event: TraceEvent,
    pub time: SimTime,
    pub node: NodeId,
    pub layer: Layer,
    pub pkt_id: u64,
    pub ptype: TraceType,
    pub size_bytes: u32,
    pub flow: u32,
}

impl TraceEvent {
    fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Send => "s",
            TraceEvent::Receive => "r",
            TraceEvent::Drop => "d",
        }
    }
}

impl Layer {
    fn as_str(self) -> &'static str {
        match self {
            Layer::Agt => "AGT",
            Layer::Rtr => "RTR",
            Layer::Mac => "MAC",
        }
    }
}

impl TraceType {
    fn as_str(self) -> &'static str {
        match self {
            TraceType::Dtn => "dtn",
            TraceType::Ack => "ack",
            TraceType::Rtc => "rtc",
        }
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {} {}",
            self.event.as_str(),
            self.time,
            self.node,
            self.layer.as_str(),
            self.pkt_id,
            self.ptype.as_str(),
            self.size_bytes,
            self.flow
        )
    }
}

/// Parses one line (without its terminator). `line_no` is 1-based.
pub fn parse_line(line: &str, line_no: usize) -> Result<TraceRecord, TraceParseError> {
    let err = |column: usize, message: String| TraceParseError {
        line: line_no,
        column,
        message,
    };
    let mut fields = Vec::with_capacity(8);
    let mut start = 0;
    for (i, part) in line.split(' ').enumerate() {
        if part.is_empty() {
            return Err(err(start + 1, format!("empty field {}", i + 1)));
        }
        fields.push((start + 1, part));
        start += part.len() + 1;
    }
    if fields.len() != 8 {
        return Err(err(
            line.len().max(1),
            format!("expected 8 fields, found {}", fields.len()),
        ));
    }
    let (c, v) = fields[0];
    let event = match v {
        "s" => TraceEvent::Send,
        "r" => TraceEvent::Receive,
        "d" => TraceEvent::Drop,
        _ => return Err(err(c, format!("unknown event {v:?}"))),
    };
    let (c, v) = fields[1];
    if v.split_once('.').is_none_or(|(_, frac)| frac.len() != 6) {
        return Err(err(c, format!("time {v:?} must have six decimals")));
    }
    let time: SimTime = v
        .parse()
        .map_err(|_| err(c, format!("invalid time {v:?}")))?;
    let (c, v) = fields[2];
    let node: NodeId = v.parse().map_err(|m| err(c, m))?;
    let (c, v) = fields[3];
    let layer = match v {
        "AGT" => Layer::Agt,
        "RTR" => Layer::Rtr,
        "MAC" => Layer::Mac,
        _ => return Err(err(c, format!("unknown layer {v:?}"))),
    };
    if event == TraceEvent::Drop && layer == Layer::Agt {
        return Err(err(c, "drops are never recorded at the AGT layer".into()));
    }
    let (c, v) = fields[4];
    let pkt_id = parse_uint(v).ok_or_else(|| err(c, format!("invalid packet id {v:?}")))?;
    let (c, v) = fields[5];
    let ptype = match v {
        "dtn" => TraceType::Dtn,
        "ack" => TraceType::Ack,
        "rtc" => TraceType::Rtc,
        _ => return Err(err(c, format!("unknown packet type {v:?}"))),
    };
    let (c, v) = fields[6];
    let size_bytes = parse_uint(v)
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| err(c, format!("invalid size {v:?}")))?;
    let (c, v) = fields[7];
    let flow = parse_uint(v)
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| err(c, format!("invalid flow {v:?}")))?;
    Ok(TraceRecord {
        event,
        time,
        node,
        layer,
        pkt_id,
        ptype,
        size_bytes,
        flow,
    })
}

// canonical decimal only: no sign, no leading zeros
fn parse_uint(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0'))
    {
        return None;
    }
    s.parse().ok()
}

/// Reads a whole trace. Also enforces that times never decrease.
pub fn parse<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, TraceParseError> {
    let mut out = Vec::new();
    let mut last = SimTime::ZERO;
    for (i, line) in reader.split(b'\n').enumerate() {
        let line_no = i + 1;
        let bytes = line.map_err(|e| TraceParseError {
            line: line_no,
            column: 1,
            message: format!("read error: {e}"),
        })?;
        let text = std::str::from_utf8(&bytes).map_err(|e| TraceParseError {
            line: line_no,
            column: e.valid_up_to() + 1,
            message: "invalid UTF-8".into(),
        })?;
        if text.starts_with('#') {
            if text.starts_with(PARTIAL_MARKER) {
                return Err(TraceParseError {
                    line: line_no,
                    column: 1,
                    message: "trace is incomplete (run aborted while writing)".into(),
                });
            }
            continue;
        }
        if text.is_empty() {
            return Err(TraceParseError {
                line: line_no,
                column: 1,
                message: "empty line".into(),
            });
        }
        let rec = parse_line(text, line_no)?;
        if rec.time < last {
            return Err(TraceParseError {
                line: line_no,
                column: 3,
                message: format!("time {} goes backwards (previous {last})", rec.time),
            });
        }
        last = rec.time;
        out.push(rec);
    }
    Ok(out)
}

pub fn parse_str(text: &str) -> Result<Vec<TraceRecord>, TraceParseError> {
    parse(text.as_bytes())
}

/// Receiver of trace records during a run.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()>;

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        self.push(*rec);
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) -> io::Result<()> {
        Ok(())
    }
}

impl<S: TraceSink + ?Sized> TraceSink for &mut S {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        (**self).record(rec)
    }

    fn flush(&mut self) -> io::Result<()> {
        (**self).flush()
    }
}

impl<A: TraceSink, B: TraceSink> TraceSink for (A, B) {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        self.0.record(rec)?;
        self.1.record(rec)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.0.flush()?;
        self.1.flush()
    }
}

/// Writes records in the line format.
pub struct TraceWriter<W: Write> {
    out: BufWriter<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(inner: W) -> Self {
        TraceWriter {
            out: BufWriter::new(inner),
        }
    }

    /// Best-effort marker telling readers the file is truncated.
    pub fn mark_partial(&mut self, reason: &str) -> io::Result<()> {
        writeln!(self.out, "{PARTIAL_MARKER}: {reason}")?;
        self.out.flush()
    }

    pub fn into_inner(self) -> io::Result<W> {
        self.out.into_inner().map_err(|e| e.into_error())
    }
}

impl<W: Write> TraceSink for TraceWriter<W> {
    fn record(&mut self, rec: &TraceRecord) -> io::Result<()> {
        writeln!(self.out, "{rec}")
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(
        event: TraceEvent,
        us: u64,
        node: NodeId,
        layer: Layer,
        id: u64,
        flow: u32,
    ) -> TraceRecord {
        TraceRecord {
            event,
            time: SimTime::from_micros(us),
            node,
            layer,
            pkt_id: id,
            ptype: TraceType::Dtn,
            size_bytes: 1540,
            flow,
        }
    }

    #[test]
    fn emits_exact_lines() {
        let send = rec(
            TraceEvent::Send,
            10_000_001,
            NodeId::Wired(0),
            Layer::Agt,
            7,
            0,
        );
        assert_eq!(send.to_string(), "s 10.000001 W0 AGT 7 dtn 1540 0");
        let drop = rec(
            TraceEvent::Drop,
            12_500_000,
            NodeId::Mobile(3),
            Layer::Mac,
            9912,
            2,
        );
        assert_eq!(drop.to_string(), "d 12.500000 M3 MAC 9912 dtn 1540 2");
    }

    #[test]
    fn parses_emitted_lines() {
        let text = "s 10.000001 W0 AGT 7 dtn 1540 0\nd 12.500000 M3 MAC 9912 dtn 1540 2\n";
        let recs = parse_str(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(
            recs[0],
            rec(
                TraceEvent::Send,
                10_000_001,
                NodeId::Wired(0),
                Layer::Agt,
                7,
                0
            )
        );
        assert_eq!(recs[1].node, NodeId::Mobile(3));
    }

    #[test]
    fn writer_output_parses_back() {
        let mut w = TraceWriter::new(Vec::new());
        let r = rec(
            TraceEvent::Receive,
            1,
            NodeId::BaseStation(1),
            Layer::Rtr,
            3,
            4,
        );
        w.record(&r).unwrap();
        let bytes = w.into_inner().unwrap();
        assert_eq!(parse(&bytes[..]).unwrap(), vec![r]);
    }

    #[test]
    fn malformed_lines_name_line_and_column() {
        let e = parse_str("s 1.000000 W0 AGT 1 dtn 1540 0\ns 1.000000 W0 XYZ 1 dtn 1540 0\n")
            .unwrap_err();
        assert_eq!((e.line, e.column), (2, 15));
        let e = parse_str("s 1.0 W0 AGT 1 dtn 1540 0").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        let e = parse_str("d 1.000000 W0 AGT 1 dtn 1540 0").unwrap_err();
        assert_eq!(e.column, 15);
        let e = parse_str("s 1.000000 Q0 AGT 1 dtn 1540 0").unwrap_err();
        assert_eq!(e.column, 12);
        let e = parse_str("s 1.000000 W0 AGT 1 dtn 1540").unwrap_err();
        assert!(e.message.contains("8 fields"));
        let e = parse_str("s 1.000000 W0  AGT 1 dtn 1540 0").unwrap_err();
        assert_eq!(e.column, 15);
        let e = parse_str("s 1.000000 W0 AGT 01 dtn 1540 0").unwrap_err();
        assert_eq!(e.column, 19);
    }

    #[test]
    fn time_must_not_go_backwards() {
        let e = parse_str("s 2.000000 W0 AGT 1 dtn 1540 0\nr 1.000000 B0 RTR 1 dtn 1540 0\n")
            .unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn partial_marker_is_an_error() {
        let e = parse_str("s 2.000000 W0 AGT 1 dtn 1540 0\n# partial: disk full\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(parse_str("# comment\n").unwrap(), vec![]);
        assert_eq!(parse_str("").unwrap(), vec![]);
    }
}

//! JSON-lines event traces.
//!
//! One record per line: `{"t_cycle":N,"dir":"in"|"out","raw":"0x...","decoded":{...}}`.
//! On read, `raw` is authoritative and `decoded` is ignored.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aer::{decode_input, encode_input, AerError, InputEvent};
use crate::engine::{TimedEvent, TimedOutput};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Decode { line: usize, source: AerError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record<D> {
    t_cycle: u64,
    dir: Direction,
    raw: String,
    #[serde(default)]
    decoded: Option<D>,
}

fn hex(v: u32) -> String {
    format!("{v:#07x}")
}

fn parse_hex(s: &str) -> Option<u32> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u32::from_str_radix(digits, 16).ok()
}

pub fn write_input_trace<W: Write>(mut w: W, events: &[TimedEvent]) -> std::io::Result<()> {
    for e in events {
        let rec = Record {
            t_cycle: e.t_cycle,
            dir: Direction::In,
            raw: hex(encode_input(e.event)),
            decoded: Some(e.event),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_output_trace<W: Write>(mut w: W, events: &[TimedOutput]) -> std::io::Result<()> {
    for e in events {
        let rec = Record {
            t_cycle: e.t_cycle,
            dir: Direction::Out,
            raw: hex(e.event.to_raw()),
            decoded: Some(e.event),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads the `dir: in` records of a trace; other records are skipped.
pub fn read_input_trace<R: BufRead>(r: R) -> Result<Vec<TimedEvent>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record<serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                line: n,
                msg: e.to_string(),
            })?;
        if rec.dir != Direction::In {
            continue;
        }
        let raw = parse_hex(&rec.raw).ok_or_else(|| TraceError::Parse {
            line: n,
            msg: format!("bad raw field `{}`", rec.raw),
        })?;
        let event: InputEvent =
            decode_input(raw).map_err(|source| TraceError::Decode { line: n, source })?;
        out.push(TimedEvent::new(rec.t_cycle, event));
    }
    Ok(out)
}

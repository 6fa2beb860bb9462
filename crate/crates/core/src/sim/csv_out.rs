//! Fixed-schema CSV tables. Times are printed with nanosecond precision, so
//! identical traces give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::sweep::SweepRow;
use super::trace::Trace;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Pools,
    Events,
    Packets,
    Intervals,
}

impl Table {
    pub const ALL: [Table; 4] = [Table::Pools, Table::Events, Table::Packets, Table::Intervals];

    pub fn header(self) -> &'static [&'static str] {
        match self {
            Table::Pools => &["time_s", "pool_id", "level_bits"],
            Table::Events => &["time_s", "pool_id", "level_bits", "event_type", "delta_bits", "peer_pool"],
            Table::Packets => &["time_s", "pool_id", "kind", "seq", "status", "level_bits"],
            Table::Intervals => &["interval", "pool_id", "start_s", "end_s", "open_at_end"],
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Table::Pools => "pools.csv",
            Table::Events => "events.csv",
            Table::Packets => "packets.csv",
            Table::Intervals => "intervals.csv",
        }
    }
}

pub const SWEEP_HEADER: [&str; 4] = ["l_km", "e_mis", "eta_bob", "speed_bps"];

fn io_err(e: impl std::fmt::Display) -> SimError {
    SimError::Io(e.to_string())
}

pub fn write_table<W: Write>(trace: &Trace, which: Table, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(which.header()).map_err(io_err)?;
    match which {
        Table::Pools => {
            for s in &trace.pools {
                w.write_record([s.time.to_string(), s.pool.to_string(), s.level.to_string()])
                    .map_err(io_err)?;
            }
        }
        Table::Events => {
            for e in &trace.events {
                w.write_record([
                    e.time.to_string(),
                    e.pool.to_string(),
                    e.level.to_string(),
                    e.kind.as_str().to_string(),
                    e.delta.to_string(),
                    e.peer.map(|p| p.to_string()).unwrap_or_default(),
                ])
                .map_err(io_err)?;
            }
        }
        Table::Packets => {
            for p in &trace.packets {
                w.write_record([
                    p.time.to_string(),
                    p.pool.to_string(),
                    p.kind.as_str().to_string(),
                    p.seq.to_string(),
                    p.status.as_str().to_string(),
                    p.level.to_string(),
                ])
                .map_err(io_err)?;
            }
        }
        Table::Intervals => {
            let tagged = trace
                .exhaustion
                .iter()
                .map(|i| ("exhaustion", i))
                .chain(trace.compromised.iter().map(|i| ("compromised", i)));
            for (name, i) in tagged {
                w.write_record([
                    name.to_string(),
                    i.pool.to_string(),
                    i.start.to_string(),
                    i.end.to_string(),
                    i.open_at_end.to_string(),
                ])
                .map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

pub fn emit_csv(trace: &Trace, which: Table, path: &Path) -> Result<(), SimError> {
    let file = File::create(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    write_table(trace, which, BufWriter::new(file))
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.l_km.to_string(),
            r.e_mis.to_string(),
            r.eta_bob.to_string(),
            format!("{:.6}", r.speed_bps),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn emit_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), SimError> {
    let file = File::create(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    write_sweep(rows, BufWriter::new(file))
}

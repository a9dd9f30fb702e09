//! Trace and plot-data files.
//!
//! A trace is written as JSON Lines, one object per simulated step:
//! `{"t":..,"agents":[{"id","pos","vel","acc"}],"events":[..],"rob":{..}}`.
//! Line `t` holds the world after step `t` and the events stamped `t`;
//! events raised before the first step are carried by the first line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use litelfuzz_core::geometry::Vector;
use litelfuzz_core::robustness::RobustnessRecord;
use litelfuzz_core::sim::{AgentId, EventKind, Trace};

use crate::campaign::CampaignReport;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentLine {
    pub id: AgentId,
    pub pos: Vector,
    pub vel: Vector,
    pub acc: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub t: u64,
    pub agents: Vec<AgentLine>,
    pub events: Vec<EventKind>,
    pub rob: RobustnessRecord,
}

/// One line per recorded step of `trace`.
pub fn trace_lines(trace: &Trace) -> Vec<TraceLine> {
    let mut lines: Vec<TraceLine> = trace
        .snapshots
        .iter()
        .skip(1)
        .zip(&trace.robustness)
        .map(|(w, rob)| TraceLine {
            t: w.t,
            agents: w
                .agents
                .iter()
                .map(|a| AgentLine {
                    id: a.id,
                    pos: a.position,
                    vel: a.velocity,
                    acc: a.acceleration,
                })
                .collect(),
            events: Vec::new(),
            rob: rob.clone(),
        })
        .collect();
    if let Some(first_t) = lines.first().map(|l| l.t) {
        for (t, e) in &trace.events {
            let t = (*t).max(first_t);
            if let Some(line) = lines.iter_mut().find(|l| l.t == t) {
                line.events.push(e.clone());
            }
        }
    }
    lines
}

pub fn export_trace(trace: &Trace, path: &Path) -> Result<(), ExportError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for line in trace_lines(trace) {
        let json = serde_json::to_string(&line).expect("trace line serializes");
        writeln!(out, "{json}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceLine>, ExportError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str(&line).map_err(|source| ExportError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        lines.push(parsed);
    }
    Ok(lines)
}

/// `iteration,swarm_robustness,min_margin`, one row per step.
pub fn emit_trace_plot_data(lines: &[TraceLine], path: &Path) -> Result<(), ExportError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(out, "iteration,swarm_robustness,min_margin").map_err(io_err(path))?;
    for l in lines {
        writeln!(out, "{},{},{}", l.t, l.rob.swarm, l.rob.min_margin).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// `scheme,executions,failures,rate`, one row per report.
pub fn emit_report_plot_data(reports: &[CampaignReport], path: &Path) -> Result<(), ExportError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(out, "scheme,executions,failures,rate").map_err(io_err(path))?;
    for r in reports {
        writeln!(out, "{},{},{},{}", r.scheme, r.executions, r.failures, r.failure_rate)
            .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

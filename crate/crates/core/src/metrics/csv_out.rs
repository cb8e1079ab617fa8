//! CSV files written for every run.
//!
//! `calls.csv` has one row per call attempt, ordered by `call_id`. Optional
//! fields are empty when they do not apply; times ending in `_step` are step
//! indices, those ending in `_s` are seconds.
//!
//! `utilization.csv` has one row per sampled step per PSAP and responder
//! station, ordered by vertex id, then step. Every step is sampled unless
//! `utilization_sample_steps` asks for a coarser stride.
//!
//! `summary.csv` has `metric,value` rows in a fixed order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{summarize, MetricsError, SimulationResult, UtilizationTrack};
use crate::entities::CallRecord;

pub const CALLS_HEADER: [&str; 18] = [
    "call_id",
    "original_call_id",
    "caller_region",
    "psap",
    "call_type",
    "placed_time_s",
    "arrival_step",
    "answer_step",
    "end_step",
    "wait_s",
    "disposition",
    "redialed",
    "patience_s",
    "service_s",
    "responder",
    "dispatch_step",
    "on_scene_step",
    "response_time_s",
];

pub const UTILIZATION_HEADER: [&str; 6] = ["vertex_id", "kind", "step", "busy", "capacity", "utilization"];

pub const SUMMARY_HEADER: [&str; 2] = ["metric", "value"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn call_row(r: &CallRecord) -> [String; 18] {
    [
        r.call_id.to_string(),
        r.original_call_id.to_string(),
        r.caller_region.0.to_string(),
        opt(r.psap.map(|v| v.0)),
        r.call_type.as_str().to_string(),
        r.placed_time.to_string(),
        opt(r.arrival_step),
        opt(r.answer_step),
        opt(r.end_step),
        opt(r.wait_s),
        r.disposition.as_str().to_string(),
        r.redialed.to_string(),
        r.patience.to_string(),
        r.service_duration.to_string(),
        opt(r.responder.map(|v| v.0)),
        opt(r.dispatch_step),
        opt(r.on_scene_step),
        opt(r.response_time_s),
    ]
}

fn write_track<W: Write>(
    w: &mut csv::Writer<W>,
    t: &UtilizationTrack,
    steps: u64,
    stride: u64,
) -> Result<(), MetricsError> {
    let id = t.vertex.0.to_string();
    let kind = t.kind.code();
    let cap = t.capacity.to_string();
    for (start, end, busy) in t.segments(steps) {
        let first = start.div_ceil(stride) * stride;
        let util = (busy as f64 / t.capacity.max(1) as f64).to_string();
        let busy = busy.to_string();
        for step in (first..end).step_by(stride as usize) {
            w.write_record([id.as_str(), kind, &step.to_string(), &busy, &cap, &util])?;
        }
    }
    Ok(())
}

/// Writes `calls.csv`, `utilization.csv` and `summary.csv` into `dir`,
/// creating it if needed.
pub fn write_csv(result: &SimulationResult, dir: &Path) -> Result<(), MetricsError> {
    std::fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("calls.csv"))?));
    w.write_record(CALLS_HEADER)?;
    for r in &result.records {
        w.write_record(call_row(r))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("utilization.csv"))?));
    w.write_record(UTILIZATION_HEADER)?;
    let mut tracks: Vec<&UtilizationTrack> = result
        .psap_utilization
        .iter()
        .chain(&result.responder_utilization)
        .collect();
    tracks.sort_by_key(|t| t.vertex);
    let stride = result.config.utilization_sample_steps.max(1);
    for t in tracks {
        write_track(&mut w, t, result.steps, stride)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("summary.csv"))?));
    w.write_record(SUMMARY_HEADER)?;
    for (k, v) in summarize(result).rows() {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulationConfig;
    use crate::graph::{VertexId, VertexKind};

    fn result(stride: u64) -> SimulationResult {
        let mut t = UtilizationTrack::new(VertexId(3), VertexKind::Psap, 2);
        t.record(2, 1);
        t.record(5, 2);
        let mut cfg = SimulationConfig::default();
        cfg.utilization_sample_steps = stride;
        SimulationResult {
            config: cfg,
            steps: 7,
            original_calls: 0,
            records: vec![],
            response_logs: vec![],
            psap_utilization: vec![t],
            responder_utilization: vec![UtilizationTrack::new(VertexId(1), VertexKind::Responder, 4)],
            redial_draws: 0,
            redial_attempts: 0,
        }
    }

    #[test]
    fn one_row_per_step_and_track() {
        let dir = tempfile::tempdir().unwrap();
        write_csv(&result(1), dir.path()).unwrap();
        let util = std::fs::read_to_string(dir.path().join("utilization.csv")).unwrap();
        let lines: Vec<&str> = util.lines().collect();
        assert_eq!(lines[0], "vertex_id,kind,step,busy,capacity,utilization");
        assert_eq!(lines.len(), 1 + 7 * 2);
        assert_eq!(lines[1], "1,RESP,0,0,4,0");
        assert_eq!(lines[8], "3,PSAP,0,0,2,0");
        assert_eq!(lines[10], "3,PSAP,2,1,2,0.5");
        assert_eq!(lines[14], "3,PSAP,6,2,2,1");
        let calls = std::fs::read_to_string(dir.path().join("calls.csv")).unwrap();
        assert_eq!(calls.lines().count(), 1);
    }

    #[test]
    fn stride_samples_every_nth_step() {
        let dir = tempfile::tempdir().unwrap();
        write_csv(&result(3), dir.path()).unwrap();
        let util = std::fs::read_to_string(dir.path().join("utilization.csv")).unwrap();
        let psap: Vec<&str> = util.lines().filter(|l| l.starts_with("3,")).collect();
        assert_eq!(psap, vec!["3,PSAP,0,0,2,0", "3,PSAP,3,1,2,0.5", "3,PSAP,6,2,2,1"]);
    }
}

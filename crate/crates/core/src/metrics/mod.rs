//! Run results, summary statistics and CSV output.

mod csv_out;

use std::fmt;

use thiserror::Error;

pub use csv_out::{write_csv, CALLS_HEADER, SUMMARY_HEADER, UTILIZATION_HEADER};

use crate::config::SimulationConfig;
use crate::entities::models::estimate_theta;
use crate::entities::{CallRecord, Disposition, ResponseLog};
use crate::graph::{VertexId, VertexKind};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("conservation violated: {originals} original calls but {accounted} accounted for ({detail})")]
    Conservation {
        originals: usize,
        accounted: usize,
        detail: String,
    },
}

/// Busy count of one PSAP or responder station over time, stored as
/// change points. The count holds from a change point until the next one;
/// before the first it is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationTrack {
    pub vertex: VertexId,
    pub kind: VertexKind,
    pub capacity: u32,
    pub changes: Vec<(u64, u32)>,
}

impl UtilizationTrack {
    pub fn new(vertex: VertexId, kind: VertexKind, capacity: u32) -> Self {
        UtilizationTrack {
            vertex,
            kind,
            capacity,
            changes: Vec::new(),
        }
    }

    /// Busy count during `step`.
    pub fn record(&mut self, step: u64, busy: u32) {
        let last = self.changes.last().map_or(0, |c| c.1);
        if busy != last {
            self.changes.push((step, busy));
        }
    }

    pub fn busy_at(&self, step: u64) -> u32 {
        match self.changes.partition_point(|c| c.0 <= step) {
            0 => 0,
            k => self.changes[k - 1].1,
        }
    }

    /// Maximal runs `(start, end, busy)` covering `[0, steps)`.
    pub fn segments(&self, steps: u64) -> impl Iterator<Item = (u64, u64, u32)> + '_ {
        let mut points = vec![(0, 0)];
        points.extend(self.changes.iter().copied().filter(|c| c.0 < steps));
        if points.len() > 1 && points[1].0 == 0 {
            points.remove(0);
        }
        (0..points.len()).filter_map(move |k| {
            let (start, busy) = points[k];
            let end = points.get(k + 1).map_or(steps, |p| p.0);
            (end > start).then_some((start, end, busy))
        })
    }

    /// 10% utilization bin of a busy count: `[0, 0.1)`, ..., `[0.9, 1.0]`.
    pub fn bin(&self, busy: u32) -> usize {
        ((busy as u64 * 10) / self.capacity.max(1) as u64).min(9) as usize
    }

    /// Steps spent in each 10% bin over `[0, steps)`.
    pub fn histogram(&self, steps: u64) -> [u64; 10] {
        let mut h = [0; 10];
        for (s, e, busy) in self.segments(steps) {
            h[self.bin(busy)] += e - s;
        }
        h
    }

    /// Steps with utilization strictly above 80%.
    pub fn steps_above_80(&self, steps: u64) -> u64 {
        self.segments(steps)
            .filter(|&(_, _, busy)| busy as u64 * 10 > 8 * self.capacity as u64)
            .map(|(s, e, _)| e - s)
            .sum()
    }

    /// Sum over steps of the busy count.
    pub fn busy_steps(&self, steps: u64) -> u64 {
        self.segments(steps).map(|(s, e, b)| (e - s) * b as u64).sum()
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    /// Steps actually simulated.
    pub steps: u64,
    /// First attempts injected from the input stream.
    pub original_calls: usize,
    /// One record per attempt (first attempts and redials), by call id.
    pub records: Vec<CallRecord>,
    pub response_logs: Vec<ResponseLog>,
    pub psap_utilization: Vec<UtilizationTrack>,
    pub responder_utilization: Vec<UtilizationTrack>,
    /// Busy signals (and hang-ups, when they may redial) that drew a redial decision.
    pub redial_draws: u64,
    pub redial_attempts: u64,
}

impl SimulationResult {
    pub fn count(&self, d: Disposition) -> usize {
        self.records.iter().filter(|r| r.disposition == d).count()
    }

    /// Checks that every first attempt ends in exactly one terminal state:
    /// served, abandoned or blocked without a redial, or still in the system.
    pub fn check_conservation(&self) -> Result<(), MetricsError> {
        let c = |d| self.count(d);
        let redialed = |d| {
            self.records
                .iter()
                .filter(|r| r.disposition == d && r.redialed)
                .count()
        };
        let accounted = c(Disposition::Served)
            + (c(Disposition::Abandoned) - redialed(Disposition::Abandoned))
            + (c(Disposition::Blocked) - redialed(Disposition::Blocked))
            + c(Disposition::InSystem);
        let attempts_ok = self.records.len() as u64 == self.original_calls as u64 + self.redial_attempts;
        if accounted == self.original_calls && attempts_ok {
            return Ok(());
        }
        Err(MetricsError::Conservation {
            originals: self.original_calls,
            accounted,
            detail: format!(
                "{} records, {} redial attempts",
                self.records.len(),
                self.redial_attempts
            ),
        })
    }
}

/// Headline statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub steps: u64,
    pub hours: f64,
    pub total_attempts: usize,
    pub original_calls: usize,
    pub served: usize,
    pub abandoned: usize,
    pub blocked: usize,
    pub in_system: usize,
    /// Fractions of terminal attempts (served + abandoned + blocked).
    pub served_fraction: f64,
    pub abandoned_fraction: f64,
    pub blocked_fraction: f64,
    /// Abandoned over attempts that entered a queue (served + abandoned).
    pub abandonment_rate: f64,
    pub redials: u64,
    pub offered_calls_per_hour: f64,
    /// Mean wait of served calls.
    pub mean_wait_s: f64,
    /// Mean wait of served and abandoned calls.
    pub mean_wait_all_s: f64,
    pub wait_p50_s: f64,
    pub wait_p90_s: f64,
    pub wait_p95_s: f64,
    pub wait_p99_s: f64,
    pub max_wait_s: f64,
    /// Served calls answered within 15 s and 20 s.
    pub answered_within_15s: f64,
    pub answered_within_20s: f64,
    pub mean_response_s: f64,
    pub response_p90_s: f64,
    /// Abandonment rate per second of wait, `abandonment_rate / mean_wait_all_s`.
    pub theta_estimate: Option<f64>,
    /// Fraction of PSAP call-taker time in each 10% utilization bin.
    pub utilization_histogram: [f64; 10],
    /// Fraction of time PSAP utilization exceeded 80%.
    pub time_above_80: f64,
    pub mean_psap_utilization: f64,
    pub mean_responder_utilization: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    ratio(xs.iter().sum(), xs.len() as f64)
}

/// Nearest-rank percentile of sorted data; 0 for empty data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize(result: &SimulationResult) -> Summary {
    let steps = result.steps;
    let hours = steps as f64 * result.config.step_duration / 3600.0;
    let recs = &result.records;
    let served = result.count(Disposition::Served);
    let abandoned = result.count(Disposition::Abandoned);
    let blocked = result.count(Disposition::Blocked);
    let terminal = (served + abandoned + blocked) as f64;

    let mut waits: Vec<f64> = recs
        .iter()
        .filter(|r| r.disposition == Disposition::Served)
        .filter_map(|r| r.wait_s)
        .collect();
    waits.sort_by(f64::total_cmp);
    let all_waits: Vec<f64> = recs
        .iter()
        .filter(|r| matches!(r.disposition, Disposition::Served | Disposition::Abandoned))
        .filter_map(|r| r.wait_s)
        .collect();
    let mut responses: Vec<f64> = recs.iter().filter_map(|r| r.response_time_s).collect();
    responses.sort_by(f64::total_cmp);

    let abandonment_rate = ratio(abandoned as f64, (served + abandoned) as f64);
    let mean_wait_all_s = mean(&all_waits);
    let theta_estimate = estimate_theta(abandonment_rate, mean_wait_all_s).ok();

    let mut hist = [0u64; 10];
    let mut above = 0;
    let mut busy = 0;
    let mut capacity_steps = 0;
    for t in &result.psap_utilization {
        for (k, n) in t.histogram(steps).iter().enumerate() {
            hist[k] += n;
        }
        above += t.steps_above_80(steps);
        busy += t.busy_steps(steps);
        capacity_steps += t.capacity as u64 * steps;
    }
    let track_steps: u64 = hist.iter().sum();
    let mut utilization_histogram = [0.0; 10];
    if track_steps == 0 {
        utilization_histogram[0] = 1.0;
    } else {
        for (h, n) in utilization_histogram.iter_mut().zip(hist) {
            *h = n as f64 / track_steps as f64;
        }
    }
    let (r_busy, r_cap) = result.responder_utilization.iter().fold((0, 0), |acc, t| {
        (acc.0 + t.busy_steps(steps), acc.1 + t.capacity as u64 * steps)
    });

    Summary {
        steps,
        hours,
        total_attempts: recs.len(),
        original_calls: result.original_calls,
        served,
        abandoned,
        blocked,
        in_system: result.count(Disposition::InSystem),
        served_fraction: ratio(served as f64, terminal),
        abandoned_fraction: ratio(abandoned as f64, terminal),
        blocked_fraction: ratio(blocked as f64, terminal),
        abandonment_rate,
        redials: result.redial_attempts,
        offered_calls_per_hour: ratio(result.original_calls as f64, hours),
        mean_wait_s: mean(&waits),
        mean_wait_all_s,
        wait_p50_s: percentile(&waits, 50.0),
        wait_p90_s: percentile(&waits, 90.0),
        wait_p95_s: percentile(&waits, 95.0),
        wait_p99_s: percentile(&waits, 99.0),
        max_wait_s: waits.last().copied().unwrap_or(0.0),
        answered_within_15s: ratio(waits.iter().filter(|&&w| w <= 15.0).count() as f64, waits.len() as f64),
        answered_within_20s: ratio(waits.iter().filter(|&&w| w <= 20.0).count() as f64, waits.len() as f64),
        mean_response_s: mean(&responses),
        response_p90_s: percentile(&responses, 90.0),
        theta_estimate,
        utilization_histogram,
        time_above_80: ratio(above as f64, track_steps as f64),
        mean_psap_utilization: ratio(busy as f64, capacity_steps as f64),
        mean_responder_utilization: ratio(r_busy as f64, r_cap as f64),
    }
}

impl Summary {
    /// `(metric, value)` pairs in the order written to `summary.csv`.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = vec![
            ("steps".into(), self.steps.to_string()),
            ("hours".into(), self.hours.to_string()),
            ("total_attempts".into(), self.total_attempts.to_string()),
            ("original_calls".into(), self.original_calls.to_string()),
            ("served".into(), self.served.to_string()),
            ("abandoned".into(), self.abandoned.to_string()),
            ("blocked".into(), self.blocked.to_string()),
            ("in_system".into(), self.in_system.to_string()),
            ("served_fraction".into(), self.served_fraction.to_string()),
            ("abandoned_fraction".into(), self.abandoned_fraction.to_string()),
            ("blocked_fraction".into(), self.blocked_fraction.to_string()),
            ("abandonment_rate".into(), self.abandonment_rate.to_string()),
            ("redials".into(), self.redials.to_string()),
            ("offered_calls_per_hour".into(), self.offered_calls_per_hour.to_string()),
            ("mean_wait_s".into(), self.mean_wait_s.to_string()),
            ("mean_wait_all_s".into(), self.mean_wait_all_s.to_string()),
            ("wait_p50_s".into(), self.wait_p50_s.to_string()),
            ("wait_p90_s".into(), self.wait_p90_s.to_string()),
            ("wait_p95_s".into(), self.wait_p95_s.to_string()),
            ("wait_p99_s".into(), self.wait_p99_s.to_string()),
            ("max_wait_s".into(), self.max_wait_s.to_string()),
            ("answered_within_15s".into(), self.answered_within_15s.to_string()),
            ("answered_within_20s".into(), self.answered_within_20s.to_string()),
            ("mean_response_s".into(), self.mean_response_s.to_string()),
            ("response_p90_s".into(), self.response_p90_s.to_string()),
            (
                "theta_estimate".into(),
                self.theta_estimate.map_or(String::new(), |t| t.to_string()),
            ),
        ];
        for (k, h) in self.utilization_histogram.iter().enumerate() {
            rows.push((format!("util_bin_{}_{}", k * 10, (k + 1) * 10), h.to_string()));
        }
        rows.push(("time_above_80".into(), self.time_above_80.to_string()));
        rows.push(("mean_psap_utilization".into(), self.mean_psap_utilization.to_string()));
        rows.push((
            "mean_responder_utilization".into(),
            self.mean_responder_utilization.to_string(),
        ));
        rows
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "simulated hours          {:>12.1}", self.hours)?;
        writeln!(f, "offered calls/hr         {:>12.2}", self.offered_calls_per_hour)?;
        writeln!(f, "attempts (incl. redials) {:>12}", self.total_attempts)?;
        writeln!(
            f,
            "served / abandoned / blocked / in system  {} / {} / {} / {}",
            self.served, self.abandoned, self.blocked, self.in_system
        )?;
        writeln!(f, "abandonment rate         {:>11.2}%", 100.0 * self.abandonment_rate)?;
        writeln!(f, "blocked fraction         {:>11.2}%", 100.0 * self.blocked_fraction)?;
        writeln!(f, "redials                  {:>12}", self.redials)?;
        writeln!(f, "mean wait (served)       {:>11.2}s", self.mean_wait_s)?;
        writeln!(
            f,
            "wait p50/p90/p99         {:.0}s / {:.0}s / {:.0}s",
            self.wait_p50_s, self.wait_p90_s, self.wait_p99_s
        )?;
        writeln!(f, "answered within 15 s     {:>11.2}%", 100.0 * self.answered_within_15s)?;
        writeln!(f, "answered within 20 s     {:>11.2}%", 100.0 * self.answered_within_20s)?;
        writeln!(f, "mean response time       {:>11.1}s", self.mean_response_s)?;
        writeln!(f, "time above 80% util.     {:>11.2}%", 100.0 * self.time_above_80)?;
        writeln!(f, "mean call-taker util.    {:>11.2}%", 100.0 * self.mean_psap_utilization)?;
        writeln!(f, "mean responder util.     {:>11.2}%", 100.0 * self.mean_responder_utilization)?;
        writeln!(f, "call-taker utilization histogram:")?;
        for (k, h) in self.utilization_histogram.iter().enumerate() {
            let bar = "#".repeat((h * 50.0).round() as usize);
            writeln!(f, "  {:>3}-{:<3}% {:>7.3}% {bar}", k * 10, (k + 1) * 10, 100.0 * h)?;
        }
        Ok(())
    }
}

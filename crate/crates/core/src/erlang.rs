//! Erlang B and C calculators for staffing estimates and as analytic
//! oracles for the simulator.

use std::fmt;

use thiserror::Error;

/// Upper bound of the staffing searches.
pub const SEARCH_LIMIT: u32 = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum ErlangError {
    #[error("offered load must be finite and non-negative, got {0}")]
    InvalidLoad(f64),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("no solution with at most {SEARCH_LIMIT} servers")]
    NoSolution,
}

/// Offered load in Erlangs: arrival rate times mean holding time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct OfferedLoad(f64);

impl OfferedLoad {
    pub fn new(erlangs: f64) -> Result<Self, ErlangError> {
        if erlangs.is_finite() && erlangs >= 0.0 {
            Ok(OfferedLoad(erlangs))
        } else {
            Err(ErlangError::InvalidLoad(erlangs))
        }
    }

    pub fn from_rate(calls_per_hour: f64, holding_s: f64) -> Result<Self, ErlangError> {
        Self::new(calls_per_hour * holding_s / 3600.0)
    }

    pub fn erlangs(&self) -> f64 {
        self.0
    }
}

/// Blocking probability of an M/M/k/k system.
pub fn erlang_b(a: OfferedLoad, k: u32) -> f64 {
    let a = a.0;
    let mut b = 1.0;
    for j in 1..=k {
        b = a * b / (j as f64 + a * b);
    }
    b
}

/// Waiting statistics of an M/M/n queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangC {
    /// Probability an arriving call has to wait.
    pub wait_probability: f64,
    /// Mean wait over all calls, seconds; infinite when saturated.
    pub mean_wait_s: f64,
    /// `a >= n`: the queue grows without bound.
    pub saturated: bool,
    /// Rate at which the conditional wait decays, per second.
    decay: f64,
}

impl ErlangC {
    /// `P(W > t)`.
    pub fn wait_exceeds(&self, t_s: f64) -> f64 {
        if self.saturated {
            1.0
        } else {
            self.wait_probability * (-self.decay * t_s).exp()
        }
    }
}

pub fn erlang_c(a: OfferedLoad, n: u32, mean_service_s: f64) -> ErlangC {
    let load = a.0;
    let n_f = n as f64;
    if load >= n_f {
        return ErlangC {
            wait_probability: 1.0,
            mean_wait_s: f64::INFINITY,
            saturated: true,
            decay: 0.0,
        };
    }
    let b = erlang_b(a, n);
    let c = n_f * b / (n_f - load * (1.0 - b));
    ErlangC {
        wait_probability: c,
        mean_wait_s: c * mean_service_s / (n_f - load),
        saturated: false,
        decay: (n_f - load) / mean_service_s,
    }
}

/// What "enough call-takers" means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentTarget {
    /// Mean wait at most `max_s` seconds.
    MeanWait { max_s: f64 },
    /// At least `fraction` of calls answered within `wait_s` seconds.
    ServiceLevel { wait_s: f64, fraction: f64 },
}

impl AgentTarget {
    fn met(&self, c: &ErlangC) -> bool {
        match *self {
            AgentTarget::MeanWait { max_s } => c.mean_wait_s <= max_s,
            AgentTarget::ServiceLevel { wait_s, fraction } => 1.0 - c.wait_exceeds(wait_s) >= fraction,
        }
    }
}

impl fmt::Display for AgentTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentTarget::MeanWait { max_s } => write!(f, "mean wait <= {max_s} s"),
            AgentTarget::ServiceLevel { wait_s, fraction } => {
                write!(f, "{}% answered within {wait_s} s", fraction * 100.0)
            }
        }
    }
}

/// Smallest number of call-takers meeting `target`; at least 1.
pub fn required_agents(calls_per_hour: f64, mean_service_s: f64, target: AgentTarget) -> Result<u32, ErlangError> {
    if !(mean_service_s > 0.0) {
        return Err(ErlangError::InvalidTarget(format!("mean service {mean_service_s}")));
    }
    match target {
        AgentTarget::MeanWait { max_s } if !(max_s >= 0.0) => {
            return Err(ErlangError::InvalidTarget(target.to_string()))
        }
        AgentTarget::ServiceLevel { wait_s, fraction } if !(wait_s >= 0.0) || !(0.0..=1.0).contains(&fraction) => {
            return Err(ErlangError::InvalidTarget(target.to_string()))
        }
        _ => {}
    }
    let a = OfferedLoad::from_rate(calls_per_hour, mean_service_s)?;
    (1..=SEARCH_LIMIT)
        .find(|&n| target.met(&erlang_c(a, n, mean_service_s)))
        .ok_or(ErlangError::NoSolution)
}

/// Smallest number of trunks with blocking at most `blocking_target`.
/// Returns at least 1 even when zero trunks would satisfy the target.
pub fn required_trunks(calls_per_hour: f64, holding_s: f64, blocking_target: f64) -> Result<u32, ErlangError> {
    if !(0.0..=1.0).contains(&blocking_target) {
        return Err(ErlangError::InvalidTarget(format!("blocking target {blocking_target}")));
    }
    let a = OfferedLoad::from_rate(calls_per_hour, holding_s)?;
    (1..=SEARCH_LIMIT)
        .find(|&k| erlang_b(a, k) <= blocking_target)
        .ok_or(ErlangError::NoSolution)
}

/// Inputs of a staffing study.
#[derive(Debug, Clone, PartialEq)]
pub struct StaffingInputs {
    pub average_rate: f64,
    pub peak_rate: f64,
    pub mean_service_s: f64,
    /// Wrap-up time added to the trunk holding time.
    pub post_processing_s: f64,
    pub agent_target: AgentTarget,
    pub blocking_target: f64,
    /// Staffing to compare against, `(call-takers, trunks)`.
    pub expected: Option<(u32, u32)>,
}

impl Default for StaffingInputs {
    fn default() -> Self {
        StaffingInputs {
            average_rate: 57.25,
            peak_rate: 137.0,
            mean_service_s: 204.0,
            post_processing_s: 10.0,
            agent_target: AgentTarget::MeanWait { max_s: 10.0 },
            blocking_target: 0.01,
            expected: Some((6, 16)),
        }
    }
}

/// Staffing at one arrival rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStaffing {
    pub label: &'static str,
    pub calls_per_hour: f64,
    pub agent_load: f64,
    pub trunk_load: f64,
    pub agents: u32,
    pub trunks: u32,
    /// `(n, P(wait), P(wait > tolerance), mean wait)` around the answer.
    pub agent_table: Vec<(u32, f64, f64, f64)>,
    /// `(k, blocking)` around the answer.
    pub trunk_table: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaffingReport {
    pub inputs: StaffingInputs,
    pub rates: Vec<RateStaffing>,
    /// `(rate used for call-takers, rate used for trunks)` pairs that give
    /// the expected staffing.
    pub matches: Vec<(&'static str, &'static str)>,
}

fn tolerance(target: AgentTarget) -> f64 {
    match target {
        AgentTarget::MeanWait { max_s } => max_s,
        AgentTarget::ServiceLevel { wait_s, .. } => wait_s,
    }
}

pub fn staffing_report(inputs: &StaffingInputs) -> Result<StaffingReport, ErlangError> {
    let holding = inputs.mean_service_s + inputs.post_processing_s;
    let mut rates = Vec::new();
    for (label, rate) in [("average", inputs.average_rate), ("peak", inputs.peak_rate)] {
        let agents = required_agents(rate, inputs.mean_service_s, inputs.agent_target)?;
        let trunks = required_trunks(rate, holding, inputs.blocking_target)?;
        let a = OfferedLoad::from_rate(rate, inputs.mean_service_s)?;
        let at = OfferedLoad::from_rate(rate, holding)?;
        let agent_table = (agents.saturating_sub(2).max(1)..=agents + 1)
            .map(|n| {
                let c = erlang_c(a, n, inputs.mean_service_s);
                (n, c.wait_probability, c.wait_exceeds(tolerance(inputs.agent_target)), c.mean_wait_s)
            })
            .collect();
        let trunk_table = (trunks.saturating_sub(2).max(1)..=trunks + 1)
            .map(|k| (k, erlang_b(at, k)))
            .collect();
        rates.push(RateStaffing {
            label,
            calls_per_hour: rate,
            agent_load: a.erlangs(),
            trunk_load: at.erlangs(),
            agents,
            trunks,
            agent_table,
            trunk_table,
        });
    }
    let mut matches = Vec::new();
    if let Some((n, k)) = inputs.expected {
        for ra in &rates {
            for rt in &rates {
                if ra.agents == n && rt.trunks == k {
                    matches.push((ra.label, rt.label));
                }
            }
        }
    }
    Ok(StaffingReport {
        inputs: inputs.clone(),
        rates,
        matches,
    })
}

impl fmt::Display for StaffingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inp = &self.inputs;
        let tol = tolerance(inp.agent_target);
        writeln!(
            f,
            "call-takers: {}, mean service {} s; trunks: blocking <= {}, holding {} s",
            inp.agent_target,
            inp.mean_service_s,
            inp.blocking_target,
            inp.mean_service_s + inp.post_processing_s
        )?;
        for r in &self.rates {
            writeln!(f)?;
            writeln!(
                f,
                "{} rate {} calls/hr: {} call-takers (a = {:.3} E), {} trunks (a = {:.3} E)",
                r.label, r.calls_per_hour, r.agents, r.agent_load, r.trunks, r.trunk_load
            )?;
            writeln!(f, "  {:>5} {:>10} {:>12} {:>12}", "n", "P(wait)", format!("P(W>{tol}s)"), "E[W] s")?;
            for (n, pw, px, ew) in &r.agent_table {
                writeln!(f, "  {n:>5} {pw:>10.4} {px:>12.4} {ew:>12.2}")?;
            }
            writeln!(f, "  {:>5} {:>10}", "k", "blocking")?;
            for (k, b) in &r.trunk_table {
                writeln!(f, "  {k:>5} {b:>10.4}")?;
            }
        }
        writeln!(f)?;
        match inp.expected {
            Some((n, k)) if self.matches.is_empty() => {
                writeln!(f, "({n}, {k}) is not reproduced by either rate interpretation")
            }
            Some((n, k)) => {
                for (ra, rt) in &self.matches {
                    writeln!(f, "({n}, {k}) reproduced: call-takers from the {ra} rate, trunks from the {rt} rate")?;
                }
                Ok(())
            }
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(a: f64) -> OfferedLoad {
        OfferedLoad::new(a).unwrap()
    }

    #[test]
    fn erlang_b_small_cases() {
        assert_eq!(erlang_b(load(0.0), 3), 0.0);
        assert_eq!(erlang_b(load(1.0), 1), 0.5);
        assert_eq!(erlang_b(load(2.0), 0), 1.0);
        // B(2, 2) = (a^2/2) / (1 + a + a^2/2) = 2/5.
        assert!((erlang_b(load(2.0), 2) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn erlang_b_matches_direct_sum() {
        for &(a, k) in &[(3.244_f64, 6_u32), (8.1439, 16), (0.5, 4), (20.0, 25)] {
            let mut term = 1.0;
            let mut sum = 1.0;
            for j in 1..=k {
                term *= a / j as f64;
                sum += term;
            }
            assert!((erlang_b(load(a), k) - term / sum).abs() < 1e-12);
        }
    }

    #[test]
    fn erlang_c_small_cases() {
        assert_eq!(erlang_c(load(0.0), 2, 100.0).wait_probability, 0.0);
        let c = erlang_c(load(3.0), 3, 100.0);
        assert!(c.saturated && c.mean_wait_s.is_infinite() && c.wait_exceeds(1e9) == 1.0);
        // M/M/1: P(wait) = rho, E[W] = rho / (1 - rho) * s.
        let c = erlang_c(load(0.5), 1, 10.0);
        assert!((c.wait_probability - 0.5).abs() < 1e-15);
        assert!((c.mean_wait_s - 10.0).abs() < 1e-12);
        // M/M/2 with a = 1: C = 1/3.
        assert!((erlang_c(load(1.0), 2, 1.0).wait_probability - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn call_center_values() {
        let a = OfferedLoad::from_rate(57.25, 204.0).unwrap();
        assert!((a.erlangs() - 3.244_166_666).abs() < 1e-6);
        let c = erlang_c(a, 6, 204.0);
        assert!((c.wait_probability - 0.1339).abs() < 1e-4);
        assert!((c.mean_wait_s - 9.91).abs() < 0.01);
        assert!((c.wait_exceeds(10.0) - 0.117).abs() < 1e-3);
        let at = OfferedLoad::from_rate(137.0, 214.0).unwrap();
        let b16 = erlang_b(at, 16);
        assert!(b16 <= 0.01 && b16 > 0.005);
        assert!(erlang_b(at, 15) > 0.01);
    }

    #[test]
    fn staffing_searches() {
        assert_eq!(required_agents(1e-9, 204.0, AgentTarget::MeanWait { max_s: 10.0 }), Ok(1));
        assert_eq!(required_agents(57.25, 204.0, AgentTarget::MeanWait { max_s: 10.0 }), Ok(6));
        assert_eq!(
            required_agents(57.25, 204.0, AgentTarget::ServiceLevel { wait_s: 10.0, fraction: 0.8 }),
            Ok(6)
        );
        assert_eq!(required_trunks(137.0, 214.0, 0.01), Ok(16));
        assert_eq!(required_trunks(57.25, 214.0, 0.01), Ok(9));
        assert_eq!(required_trunks(57.25, 214.0, 1.0), Ok(1));
        assert!(required_trunks(1.0, 1.0, 1.5).is_err());
        assert_eq!(
            required_agents(1e9, 204.0, AgentTarget::MeanWait { max_s: 10.0 }),
            Err(ErlangError::NoSolution)
        );
    }

    #[test]
    fn default_report_names_the_interpretation() {
        let r = staffing_report(&StaffingInputs::default()).unwrap();
        assert_eq!(r.rates[0].agents, 6);
        assert_eq!(r.rates[1].trunks, 16);
        assert_eq!(r.matches, vec![("average", "peak")]);
        let text = r.to_string();
        assert!(text.contains("call-takers from the average rate, trunks from the peak rate"));
    }

    proptest! {
        #[test]
        fn erlang_b_monotone(a in 0.01f64..50.0, k in 1u32..60) {
            let b = erlang_b(load(a), k);
            prop_assert!((0.0..=1.0).contains(&b));
            prop_assert!(erlang_b(load(a), k + 1) <= b);
            prop_assert!(erlang_b(load(a * 1.1), k) >= b);
        }

        #[test]
        fn erlang_c_dominates_b(a in 0.01f64..50.0, extra in 0.01f64..30.0) {
            let n = (a + extra).ceil() as u32;
            let c = erlang_c(load(a), n, 1.0);
            prop_assert!(!c.saturated);
            prop_assert!(c.wait_probability >= erlang_b(load(a), n) - 1e-15);
            prop_assert!(c.wait_probability <= 1.0 + 1e-12);
        }

        #[test]
        fn required_agents_is_minimal(rate in 1.0f64..300.0, max_s in 1.0f64..60.0) {
            let target = AgentTarget::MeanWait { max_s };
            let n = required_agents(rate, 204.0, target).unwrap();
            let a = OfferedLoad::from_rate(rate, 204.0).unwrap();
            prop_assert!(erlang_c(a, n, 204.0).mean_wait_s <= max_s);
            if n > 1 {
                prop_assert!(erlang_c(a, n - 1, 204.0).mean_wait_s > max_s);
            }
        }
    }
}

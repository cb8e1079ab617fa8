//! Synchronous two-phase execution of the vertex state machines.
//!
//! Every step has a communication phase, in which each vertex drains the
//! channels feeding it in edge-id order, followed by a transition phase, in
//! which each vertex runs its handler once. Messages sent during a transition
//! phase are parked on their channel and only become visible in the next
//! step's communication phase, so the result does not depend on the order in
//! which handlers run.
//!
//! Each edge carries two channels: `2e` in the edge direction and `2e + 1`
//! against it (busy signals travel back along CALL edges this way).

mod message;

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

pub use message::{DispatchOrder, Envelope, Inbox, Message, Outgoing, UnitStatus};

use crate::arrivals::CallEvent;
use crate::config::{ConfigError, SimulationConfig};
use crate::entities::{
    caller_region_step, psap_step, responder_step, CallRecord, CallerRegionState, Disposition, PsapState,
    ResponderState, ResponseLog, StepContext,
};
use crate::graph::{EdgeSemantic, EscsGraph, VertexAttrs, VertexId, VertexKind};
use crate::metrics::{SimulationResult, UtilizationTrack};
use crate::rng::{vertex_stream, SimRng};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("call {call_id} originates at unknown vertex {vertex}")]
    UnknownOrigin { call_id: u64, vertex: u32 },
    #[error("call {call_id} originates at vertex {vertex}, which is not a caller region")]
    NotACallerRegion { call_id: u64, vertex: u32 },
    #[error("duplicate call id {0}")]
    DuplicateCallId(u64),
    #[error("vertex {from} has no {semantic:?} channel to vertex {to}")]
    NoRoute { from: u32, to: u32, semantic: EdgeSemantic },
    #[error("transition order is not a permutation of the {0} vertices")]
    BadOrder(usize),
}

/// Discrete simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Clock {
    pub step: u64,
}

impl Clock {
    pub fn seconds(&self, cfg: &SimulationConfig) -> f64 {
        self.step as f64 * cfg.step_duration
    }

    pub fn epoch(&self, cfg: &SimulationConfig) -> u64 {
        self.step / cfg.epoch_length
    }
}

#[derive(Debug, Clone, PartialEq)]
enum VertexState {
    CallerRegion(CallerRegionState),
    Psap(PsapState),
    Responder(ResponderState),
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Channel {
    src: usize,
    /// Messages visible in the next communication phase.
    ready: VecDeque<Message>,
    /// Messages sent during the current transition phase.
    pending: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    graph: EscsGraph,
    cfg: SimulationConfig,
    clock: Clock,
    states: Vec<VertexState>,
    rngs: Vec<SimRng>,
    channels: Vec<Channel>,
    routes: HashMap<(usize, usize, EdgeSemantic, bool), usize>,
    /// Channels holding ready messages, so idle ones are skipped.
    live: Vec<usize>,
    inboxes: Vec<Inbox>,
    /// Per caller region: the full call schedule and the load cursor.
    schedules: Vec<(Vec<CallEvent>, usize)>,
    order: Vec<usize>,
    utilization: Vec<(usize, UtilizationTrack)>,
    original_calls: usize,
}

impl Engine {
    pub fn new(graph: EscsGraph, cfg: SimulationConfig, mut calls: Vec<CallEvent>) -> Result<Self, SimError> {
        cfg.validate()?;
        let n = graph.len();

        let mut seen = HashSet::with_capacity(calls.len());
        for c in &calls {
            let idx = graph.index_of(c.vertex_id).ok_or(SimError::UnknownOrigin {
                call_id: c.call_id,
                vertex: c.vertex_id.0,
            })?;
            if graph.vertices()[idx].kind() != VertexKind::CallerRegion {
                return Err(SimError::NotACallerRegion {
                    call_id: c.call_id,
                    vertex: c.vertex_id.0,
                });
            }
            if !seen.insert(c.call_id) {
                return Err(SimError::DuplicateCallId(c.call_id));
            }
        }
        let id_base = calls.iter().map(|c| c.call_id).max().map_or(0, |m| m + 1);
        calls.sort_by_key(|c| (c.time, c.call_id));

        let cr_count = graph.count_kind(VertexKind::CallerRegion) as u64;
        let mut states = Vec::with_capacity(n);
        let mut schedules = vec![(Vec::new(), 0); n];
        let mut utilization = Vec::new();
        let mut cr_ordinal = 0;
        for (i, v) in graph.vertices().iter().enumerate() {
            let state = match v.attrs {
                VertexAttrs::CallerRegion { .. } => {
                    let psap = graph
                        .outgoing_with(i, EdgeSemantic::Call)
                        .next()
                        .map(|e| graph.index_of(graph.edges()[e].dst).expect("validated edge"))
                        .expect("validated: every caller region has a call edge");
                    cr_ordinal += 1;
                    VertexState::CallerRegion(CallerRegionState::new(v.id, psap, id_base, cr_count, cr_ordinal - 1))
                }
                VertexAttrs::Psap { servers, trunks } => {
                    utilization.push((i, UtilizationTrack::new(v.id, VertexKind::Psap, servers)));
                    VertexState::Psap(PsapState::new(v.id, servers, trunks))
                }
                VertexAttrs::Responder { units, .. } => {
                    utilization.push((i, UtilizationTrack::new(v.id, VertexKind::Responder, units)));
                    VertexState::Responder(ResponderState::new(&graph, i, units))
                }
            };
            states.push(state);
        }
        for c in calls {
            let idx = graph.index_of(c.vertex_id).expect("checked above");
            schedules[idx].0.push(c);
        }
        let original_calls = schedules.iter().map(|s| s.0.len()).sum();

        let mut channels = Vec::with_capacity(graph.edges().len() * 2);
        let mut routes = HashMap::new();
        for (e, edge) in graph.edges().iter().enumerate() {
            let s = graph.index_of(edge.src).expect("validated edge");
            let d = graph.index_of(edge.dst).expect("validated edge");
            channels.push(Channel { src: s, ..Default::default() });
            channels.push(Channel { src: d, ..Default::default() });
            routes.insert((s, d, edge.semantic, false), 2 * e);
            routes.insert((d, s, edge.semantic, true), 2 * e + 1);
        }

        let rngs = graph.vertices().iter().map(|v| vertex_stream(cfg.seed, v.id.0)).collect();
        Ok(Engine {
            graph,
            cfg,
            clock: Clock::default(),
            states,
            rngs,
            channels,
            routes,
            live: Vec::new(),
            inboxes: vec![Inbox::default(); n],
            schedules,
            order: (0..n).collect(),
            utilization,
            original_calls,
        })
    }

    pub fn graph(&self) -> &EscsGraph {
        &self.graph
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn is_finished(&self) -> bool {
        self.clock.step >= self.cfg.duration_steps
    }

    /// Order in which handlers run during the transition phase, as dense
    /// vertex indices. Results never depend on it.
    pub fn set_transition_order(&mut self, order: Vec<usize>) -> Result<(), SimError> {
        let n = self.graph.len();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(SimError::BadOrder(n));
        }
        self.order = order;
        Ok(())
    }

    /// Busy servers (PSAPs) or units (responders) right now, by vertex id.
    pub fn occupancy(&self) -> Vec<(VertexId, u32)> {
        self.utilization
            .iter()
            .map(|(i, t)| (t.vertex, self.busy(*i)))
            .collect()
    }

    fn busy(&self, i: usize) -> u32 {
        match &self.states[i] {
            VertexState::Psap(p) => p.busy_servers(),
            VertexState::Responder(r) => r.busy_units(),
            VertexState::CallerRegion(_) => 0,
        }
    }

    /// Moves the calls of the epoch starting now into their regions' queues.
    fn load_epoch(&mut self) {
        let horizon = (self.clock.step + self.cfg.epoch_length) as f64 * self.cfg.step_duration;
        for (i, (calls, cursor)) in self.schedules.iter_mut().enumerate() {
            let VertexState::CallerRegion(cr) = &mut self.states[i] else { continue };
            while *cursor < calls.len() && (calls[*cursor].time as f64) < horizon {
                cr.queue.push_back(calls[*cursor].clone());
                *cursor += 1;
            }
        }
    }

    fn communication_phase(&mut self) {
        for inbox in &mut self.inboxes {
            inbox.clear();
        }
        // Ascending channel ids give every receiver its messages in edge-id order.
        let mut live = std::mem::take(&mut self.live);
        live.sort_unstable();
        for c in live {
            let dst = self.channel_dst(c);
            let src = self.channels[c].src;
            let capacity = match &self.states[dst] {
                VertexState::Psap(p) => Some(p.trunks as usize),
                _ => None,
            };
            let inbox = &mut self.inboxes[dst];
            for msg in self.channels[c].ready.drain(..) {
                let env = Envelope { src, msg };
                let full = matches!(env.msg, Message::Call(_))
                    && capacity.is_some_and(|cap| {
                        inbox.messages.iter().filter(|m| matches!(m.msg, Message::Call(_))).count() >= cap
                    });
                if full {
                    inbox.overflow.push(env);
                } else {
                    inbox.messages.push(env);
                }
            }
        }
    }

    fn channel_dst(&self, c: usize) -> usize {
        let edge = &self.graph.edges()[c / 2];
        let id = if c % 2 == 0 { edge.dst } else { edge.src };
        self.graph.index_of(id).expect("validated edge")
    }

    fn transition_phase(&mut self) -> Result<(), SimError> {
        let ctx = StepContext {
            graph: &self.graph,
            cfg: &self.cfg,
            step: self.clock.step,
        };
        for &v in &self.order {
            let inbox = &self.inboxes[v];
            let out = match &mut self.states[v] {
                VertexState::CallerRegion(s) => caller_region_step(s, inbox, &ctx, &mut self.rngs[v]),
                VertexState::Psap(s) => psap_step(s, inbox, &ctx),
                VertexState::Responder(s) => responder_step(s, inbox, &ctx),
            };
            for o in out {
                let (semantic, reverse) = o.msg.route();
                let &c = self.routes.get(&(v, o.dst, semantic, reverse)).ok_or(SimError::NoRoute {
                    from: self.graph.vertices()[v].id.0,
                    to: self.graph.vertices()[o.dst].id.0,
                    semantic,
                })?;
                self.channels[c].pending.push(o.msg);
            }
        }
        Ok(())
    }

    /// Pending messages become ready for the next step.
    fn deliver(&mut self) {
        for (c, ch) in self.channels.iter_mut().enumerate() {
            if ch.pending.is_empty() {
                continue;
            }
            if ch.ready.is_empty() {
                self.live.push(c);
            }
            ch.ready.extend(ch.pending.drain(..));
        }
    }

    fn record_utilization(&mut self) {
        let step = self.clock.step;
        for k in 0..self.utilization.len() {
            let busy = self.busy(self.utilization[k].0);
            self.utilization[k].1.record(step, busy);
        }
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.clock.step % self.cfg.epoch_length == 0 {
            self.load_epoch();
        }
        self.communication_phase();
        self.transition_phase()?;
        self.deliver();
        self.record_utilization();
        self.clock.step += 1;
        Ok(())
    }

    /// Runs until `step` (exclusive) or the configured horizon, whichever is first.
    pub fn run_until(&mut self, step: u64) -> Result<(), SimError> {
        let end = step.min(self.cfg.duration_steps);
        while self.clock.step < end {
            self.step()?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<SimulationResult, SimError> {
        self.run_until(self.cfg.duration_steps)?;
        Ok(self.finish())
    }

    /// Collects results; calls not yet resolved are reported `InSystem`.
    pub fn finish(self) -> SimulationResult {
        let step = self.clock.step;
        let dt = self.cfg.step_duration;
        let mut records: Vec<CallRecord> = Vec::new();
        let mut redialed = HashSet::new();
        let mut logs: Vec<ResponseLog> = Vec::new();
        let mut redial_draws = 0;
        let mut redial_attempts = 0;

        for (i, st) in self.states.iter().enumerate() {
            match st {
                VertexState::CallerRegion(cr) => {
                    redialed.extend(cr.redialed.iter().copied());
                    redial_draws += cr.redial_draws;
                    redial_attempts += cr.redialed.len() as u64;
                    let (calls, cursor) = &self.schedules[i];
                    let unplaced = cr.queue.iter().chain(&cr.redials).chain(&calls[*cursor..]);
                    records.extend(unplaced.map(|c| CallRecord::new(c, Disposition::InSystem)));
                }
                VertexState::Psap(p) => {
                    records.extend(p.records.iter().cloned());
                    records.extend(p.in_system_records(step, dt));
                }
                VertexState::Responder(r) => {
                    logs.extend(r.logs.iter().cloned());
                    logs.extend(r.units.iter().flatten().map(|a| ResponseLog {
                        call_id: a.order.call_id,
                        responder: r.id,
                        start_step: a.start_step,
                        on_scene_step: a.on_scene_step,
                        clear_step: a.clear_step,
                        response_time_s: (a.on_scene_step - a.order.call_arrival_step) as f64 * dt,
                    }));
                }
            }
        }
        for ch in &self.channels {
            for msg in ch.ready.iter().chain(&ch.pending) {
                if let Message::Call(c) = msg {
                    records.push(CallRecord::new(c, Disposition::InSystem));
                }
            }
        }

        records.sort_by_key(|r| r.call_id);
        let by_call: HashMap<u64, usize> = logs.iter().enumerate().map(|(k, l)| (l.call_id, k)).collect();
        for r in &mut records {
            r.redialed = redialed.contains(&r.call_id);
            if let Some(&k) = by_call.get(&r.call_id) {
                let l = &logs[k];
                r.on_scene_step = Some(l.on_scene_step);
                r.response_time_s = Some(l.response_time_s);
            }
        }
        logs.sort_by_key(|l| l.call_id);

        let (mut psap_util, mut responder_util): (Vec<_>, Vec<_>) = self
            .utilization
            .into_iter()
            .map(|(_, t)| t)
            .partition(|t| t.kind == VertexKind::Psap);
        psap_util.sort_by_key(|t| t.vertex);
        responder_util.sort_by_key(|t| t.vertex);

        SimulationResult {
            config: self.cfg,
            steps: step,
            original_calls: self.original_calls,
            records,
            response_logs: logs,
            psap_utilization: psap_util,
            responder_utilization: responder_util,
            redial_draws,
            redial_attempts,
        }
    }
}

/// Runs a whole simulation.
pub fn simulate(graph: EscsGraph, cfg: SimulationConfig, calls: Vec<CallEvent>) -> Result<SimulationResult, SimError> {
    Engine::new(graph, cfg, calls)?.run()
}

use std::collections::{BTreeMap, VecDeque};

use super::{CallRecord, Disposition, StepContext};
use crate::arrivals::CallEvent;
use crate::engine::{DispatchOrder, Inbox, Message, Outgoing};
use crate::graph::VertexId;

/// A call waiting for a free call-taker.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuedCall {
    pub call: CallEvent,
    pub arrival_step: u64,
}

/// A call being handled by a call-taker.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveCall {
    pub call: CallEvent,
    pub arrival_step: u64,
    pub answer_step: u64,
    /// Step at which the call-taker becomes free again.
    pub busy_until: u64,
}

/// Multi-server queue with a finite number of trunks: `servers` call-takers
/// and room for `trunks` calls in the system (in service plus waiting).
#[derive(Debug, Clone, PartialEq)]
pub struct PsapState {
    pub id: VertexId,
    pub trunks: u32,
    pub queue: VecDeque<QueuedCall>,
    /// One slot per call-taker.
    pub servers: Vec<Option<ActiveCall>>,
    /// Finished attempts: served, abandoned or blocked.
    pub records: Vec<CallRecord>,
    /// Last reported free units per responder station.
    pub unit_status: BTreeMap<VertexId, u32>,
}

impl PsapState {
    pub fn new(id: VertexId, servers: u32, trunks: u32) -> Self {
        PsapState {
            id,
            trunks,
            queue: VecDeque::new(),
            servers: vec![None; servers as usize],
            records: Vec::new(),
            unit_status: BTreeMap::new(),
        }
    }

    pub fn busy_servers(&self) -> u32 {
        self.servers.iter().filter(|s| s.is_some()).count() as u32
    }

    pub fn in_system(&self) -> u32 {
        self.busy_servers() + self.queue.len() as u32
    }

    /// Records for the calls still queued or in service.
    pub fn in_system_records(&self, step: u64, dt: f64) -> Vec<CallRecord> {
        let queued = self.queue.iter().map(|q| {
            let mut r = CallRecord::new(&q.call, Disposition::InSystem);
            r.psap = Some(self.id);
            r.arrival_step = Some(q.arrival_step);
            r.wait_s = Some((step - q.arrival_step) as f64 * dt);
            r
        });
        let active = self.servers.iter().flatten().map(|a| {
            let mut r = CallRecord::new(&a.call, Disposition::InSystem);
            r.psap = Some(self.id);
            r.arrival_step = Some(a.arrival_step);
            r.answer_step = Some(a.answer_step);
            r.wait_s = Some((a.answer_step - a.arrival_step) as f64 * dt);
            r
        });
        queued.chain(active).collect()
    }
}

pub fn psap_step(state: &mut PsapState, inbox: &Inbox, ctx: &StepContext<'_>) -> Vec<Outgoing> {
    let step = ctx.step;
    let dt = ctx.cfg.step_duration;
    let graph = ctx.graph;
    let mut out = Vec::new();
    let caller_index = |call: &CallEvent| graph.index_of(call.vertex_id).expect("caller region exists");

    // Completions, then dispatch to the nearest capable station.
    for slot in state.servers.iter_mut() {
        if !slot.as_ref().is_some_and(|a| a.busy_until <= step) {
            continue;
        }
        let done = slot.take().unwrap();
        let mut rec = CallRecord::new(&done.call, Disposition::Served);
        rec.psap = Some(state.id);
        rec.arrival_step = Some(done.arrival_step);
        rec.answer_step = Some(done.answer_step);
        rec.end_step = Some(step);
        rec.wait_s = Some((done.answer_step - done.arrival_step) as f64 * dt);
        match graph.nearest_responder(state.id, &done.call.location, done.call.call_type) {
            Ok(resp) => {
                rec.responder = Some(resp);
                rec.dispatch_step = Some(step);
                out.push(Outgoing {
                    dst: graph.index_of(resp).expect("responder exists"),
                    msg: Message::Dispatch(DispatchOrder {
                        call_id: done.call.call_id,
                        psap: state.id,
                        incident: done.call.location,
                        call_type: done.call.call_type,
                        on_scene_duration: done.call.on_scene_duration,
                        dispatch_step: step,
                        call_arrival_step: done.arrival_step,
                    }),
                });
            }
            Err(e) => log::warn!("PSAP {}: call {} not dispatched: {e}", state.id.0, done.call.call_id),
        }
        state.records.push(rec);
    }

    // Admission against the trunk limit.
    let mut in_system = state.in_system();
    for env in inbox.messages.iter().chain(&inbox.overflow) {
        match &env.msg {
            Message::Call(call) => {
                if in_system < state.trunks {
                    state.queue.push_back(QueuedCall {
                        call: call.clone(),
                        arrival_step: step,
                    });
                    in_system += 1;
                } else {
                    let mut rec = CallRecord::new(call, Disposition::Blocked);
                    rec.psap = Some(state.id);
                    rec.arrival_step = Some(step);
                    rec.end_step = Some(step);
                    state.records.push(rec);
                    out.push(Outgoing {
                        dst: caller_index(call),
                        msg: Message::BusySignal(call.clone()),
                    });
                }
            }
            Message::UnitAvailable(status) => {
                state.unit_status.insert(status.responder, status.available_units);
            }
            other => log::warn!("PSAP {}: unexpected message {other:?}", state.id.0),
        }
    }

    // Hang-ups are checked before anyone is answered this step.
    let gives_up = |q: &QueuedCall| (step - q.arrival_step) as f64 * dt >= q.call.patience;
    if ctx.cfg.abandonment && state.queue.iter().any(gives_up) {
        let mut kept = VecDeque::with_capacity(state.queue.len());
        for q in state.queue.drain(..) {
            if !gives_up(&q) {
                kept.push_back(q);
                continue;
            }
            let waited = (step - q.arrival_step) as f64 * dt;
            let mut rec = CallRecord::new(&q.call, Disposition::Abandoned);
            rec.psap = Some(state.id);
            rec.arrival_step = Some(q.arrival_step);
            rec.end_step = Some(step);
            rec.wait_s = Some(waited);
            state.records.push(rec);
            if ctx.cfg.redial_abandoned {
                out.push(Outgoing {
                    dst: caller_index(&q.call),
                    msg: Message::Abandoned(q.call),
                });
            }
        }
        state.queue = kept;
    }

    // FIFO assignment to the lowest-numbered free call-taker.
    for slot in state.servers.iter_mut().filter(|s| s.is_none()) {
        let Some(q) = state.queue.pop_front() else { break };
        let busy_until = step + ctx.busy_steps(q.call.service_duration);
        *slot = Some(ActiveCall {
            call: q.call,
            arrival_step: q.arrival_step,
            answer_step: step,
            busy_until,
        });
    }

    out
}

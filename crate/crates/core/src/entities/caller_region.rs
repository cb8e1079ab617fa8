use std::collections::VecDeque;

use rand::Rng;

use super::StepContext;
use crate::arrivals::CallEvent;
use crate::engine::{Inbox, Message, Outgoing};
use crate::graph::VertexId;
use crate::rng::SimRng;

/// Caller region: releases its scheduled calls toward its PSAP, one per
/// step, and redials calls that got a busy signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CallerRegionState {
    pub id: VertexId,
    /// Dense index of the PSAP at the end of the call path.
    pub psap: usize,
    /// Calls of the current epoch, sorted by time.
    pub queue: VecDeque<CallEvent>,
    /// Redial attempts waiting to be placed, sorted by time.
    pub redials: VecDeque<CallEvent>,
    /// Attempt ids that were followed by a redial.
    pub redialed: Vec<u64>,
    /// Busy signals (and hang-ups, when enabled) received so far.
    pub redial_draws: u64,
    next_seq: u64,
    id_base: u64,
    id_stride: u64,
    id_offset: u64,
}

impl CallerRegionState {
    /// Redial ids are `id_base + seq * id_stride + id_offset`; give each
    /// region a distinct offset below a shared stride so ids never collide.
    pub fn new(id: VertexId, psap: usize, id_base: u64, id_stride: u64, id_offset: u64) -> Self {
        CallerRegionState {
            id,
            psap,
            queue: VecDeque::new(),
            redials: VecDeque::new(),
            redialed: Vec::new(),
            redial_draws: 0,
            next_seq: 0,
            id_base,
            id_stride,
            id_offset,
        }
    }

    fn next_call_id(&mut self) -> u64 {
        let id = self.id_base + self.next_seq * self.id_stride + self.id_offset;
        self.next_seq += 1;
        id
    }

    /// Number of attempts not yet placed.
    pub fn pending(&self) -> usize {
        self.queue.len() + self.redials.len()
    }
}

pub fn caller_region_step(
    state: &mut CallerRegionState,
    inbox: &Inbox,
    ctx: &StepContext<'_>,
    rng: &mut SimRng,
) -> Vec<Outgoing> {
    let cfg = ctx.cfg;
    for env in &inbox.messages {
        let failed = match &env.msg {
            Message::BusySignal(call) => call,
            Message::Abandoned(call) if cfg.redial_abandoned => call,
            _ => continue,
        };
        state.redial_draws += 1;
        if rng.random_bool(cfg.redial_probability) {
            let mut retry = failed.clone();
            retry.call_id = state.next_call_id();
            retry.time = ((ctx.step + 1) as f64 * cfg.step_duration).ceil() as u64;
            state.redialed.push(failed.call_id);
            state.redials.push_back(retry);
        }
    }

    let now = ctx.now_seconds();
    let due = |q: &VecDeque<CallEvent>| q.front().filter(|c| c.time as f64 <= now).map(|c| c.time);
    let next = match (due(&state.redials), due(&state.queue)) {
        (Some(r), Some(q)) if r <= q => state.redials.pop_front(),
        (Some(_), None) => state.redials.pop_front(),
        (_, Some(_)) => state.queue.pop_front(),
        (None, None) => None,
    };
    next.map(|call| Outgoing {
        dst: state.psap,
        msg: Message::Call(call),
    })
    .into_iter()
    .collect()
}

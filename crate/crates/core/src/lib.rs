//! Deterministic simulator for emergency services communication systems.
//!
//! An ESCS is a directed graph of caller regions, PSAPs (call centers) and
//! responder stations. Calls are generated by a cluster point process, flow
//! to PSAPs modeled as multi-server queues with finite trunks, and completed
//! calls are dispatched to the nearest capable responder. Vertices run as
//! communicating state machines in lock-step, so results are reproducible
//! for a given seed regardless of scheduling.

pub mod arrivals;
pub mod config;
pub mod engine;
pub mod entities;
pub mod erlang;
pub mod geo;
pub mod graph;
pub mod metrics;
pub mod rng;

pub use arrivals::{generate_call_stream, ArrivalConfig, CallEvent, IncidentPrototype, TypeMix};
pub use config::SimulationConfig;
pub use engine::{simulate, Engine, SimError};
pub use graph::{synthesize_network, EscsGraph, NetworkSpec};
pub use metrics::{summarize, write_csv, SimulationResult, Summary};

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use escsim::arrivals::{generate_call_stream, ArrivalConfig, CallEvent, IncidentPrototype, TypeMix};
use escsim::entities::models::DurationModel;
use escsim::geo::{GeoPoint, Rect};
use escsim::graph::{Capabilities, CallType, Edge, EdgeSemantic, EscsGraph, Vertex, VertexAttrs, VertexId};
use escsim::SimulationConfig;

/// A valid random ESCS graph with `n` vertices (at least 3): one or two
/// PSAPs, a few caller regions and responders, scattered vertex ids.
pub fn random_graph(seed: u64, n: usize) -> EscsGraph {
    assert!(n >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psaps = if n >= 5 { rng.random_range(1..=2) } else { 1 };
    let crs = rng.random_range(1..=(n - psaps - 1).min(4));

    let mut ids: Vec<u32> = (0..(n as u32 * 5)).collect();
    ids.shuffle(&mut rng);
    let ids = &ids[..n];

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let psap_ids = &ids[..psaps];
    for &id in psap_ids {
        let servers = rng.random_range(1..=3);
        vertices.push(Vertex {
            id: VertexId(id),
            location: GeoPoint::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)),
            attrs: VertexAttrs::Psap {
                servers,
                trunks: servers + rng.random_range(0..=3),
            },
        });
    }
    // Caller regions tile [0, 1000] x [0, 1000] in vertical stripes.
    let width = 1000.0 / crs as f64;
    for (k, &id) in ids[psaps..psaps + crs].iter().enumerate() {
        let region = Rect::new(k as f64 * width, 0.0, (k + 1) as f64 * width, 1000.0);
        vertices.push(Vertex {
            id: VertexId(id),
            location: region.center(),
            attrs: VertexAttrs::CallerRegion { region },
        });
        let p = psap_ids[rng.random_range(0..psaps)];
        edges.push(Edge {
            src: VertexId(id),
            dst: VertexId(p),
            semantic: EdgeSemantic::Call,
        });
    }
    for (k, &id) in ids[psaps + crs..].iter().enumerate() {
        let capabilities = if k == 0 {
            Capabilities::all()
        } else {
            let picked: Vec<CallType> = CallType::ALL.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            if picked.is_empty() {
                Capabilities::new(&[CallType::Law])
            } else {
                Capabilities::new(&picked)
            }
        };
        vertices.push(Vertex {
            id: VertexId(id),
            location: GeoPoint::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)),
            attrs: VertexAttrs::Responder {
                units: rng.random_range(1..=3),
                capabilities,
            },
        });
        for &p in psap_ids {
            edges.push(Edge {
                src: VertexId(p),
                dst: VertexId(id),
                semantic: EdgeSemantic::Dispatch,
            });
            if rng.random_bool(0.7) {
                edges.push(Edge {
                    src: VertexId(id),
                    dst: VertexId(p),
                    semantic: EdgeSemantic::Status,
                });
            }
        }
    }
    vertices.shuffle(&mut rng);
    edges.shuffle(&mut rng);
    EscsGraph::new(vertices, edges).expect("random graph is valid")
}

/// Short durations so that a few thousand steps see queueing, abandonment
/// and blocking.
pub fn busy_durations() -> DurationModel {
    DurationModel {
        service_min: 2.0,
        service_mean: 40.0,
        patience_mean: 15.0,
        on_scene_mean: 60.0,
    }
}

pub fn busy_sim_config(seed: u64, steps: u64) -> SimulationConfig {
    let d = busy_durations();
    SimulationConfig {
        seed,
        duration_steps: steps,
        epoch_length: 500,
        service_min: d.service_min,
        service_mean: d.service_mean,
        patience_mean: d.patience_mean,
        on_scene_mean: d.on_scene_mean,
        responder_speed: 10.0,
        ..SimulationConfig::default()
    }
}

/// Clustered calls at `calls_per_hour` over `duration_s`.
pub fn random_calls(graph: &EscsGraph, seed: u64, calls_per_hour: f64, duration_s: f64) -> Vec<CallEvent> {
    let mut cfg = ArrivalConfig {
        incidents_per_hour: 1.0,
        duration_s,
        bounds: None,
        prototypes: vec![
            IncidentPrototype::single_call("single", 3.0),
            IncidentPrototype {
                name: "cluster".into(),
                mu_r: 40.0,
                sigma_r: 10.0,
                mu_i: 1e-3,
                sigma_i: 2e-4,
                interarrival_rate: 0.2,
                weight: 1.0,
            },
        ],
        mix: TypeMix::default(),
        durations: busy_durations(),
        seed,
    };
    cfg.set_calls_per_hour(calls_per_hour).unwrap();
    generate_call_stream(graph, &cfg).unwrap()
}

/// One caller region covering `[0, 1000]^2`, one PSAP and one responder
/// able to handle every call type.
pub fn single_psap_graph(servers: u32, trunks: u32) -> EscsGraph {
    let vertices = vec![
        Vertex {
            id: VertexId(0),
            location: GeoPoint::new(500.0, 500.0),
            attrs: VertexAttrs::Psap { servers, trunks },
        },
        Vertex {
            id: VertexId(1),
            location: GeoPoint::new(500.0, 500.0),
            attrs: VertexAttrs::CallerRegion {
                region: Rect::new(0.0, 0.0, 1000.0, 1000.0),
            },
        },
        Vertex {
            id: VertexId(2),
            location: GeoPoint::new(0.0, 0.0),
            attrs: VertexAttrs::Responder {
                units: 50,
                capabilities: Capabilities::all(),
            },
        },
    ];
    let edge = |s, d, semantic| Edge {
        src: VertexId(s),
        dst: VertexId(d),
        semantic,
    };
    let edges = vec![
        edge(1, 0, EdgeSemantic::Call),
        edge(0, 2, EdgeSemantic::Dispatch),
        edge(2, 0, EdgeSemantic::Status),
    ];
    EscsGraph::new(vertices, edges).expect("single-PSAP graph is valid")
}

/// Poisson single-call arrivals with the default duration model.
pub fn poisson_calls(graph: &EscsGraph, seed: u64, calls_per_hour: f64, duration_s: f64) -> Vec<CallEvent> {
    let mut cfg = ArrivalConfig {
        incidents_per_hour: calls_per_hour,
        duration_s,
        bounds: None,
        prototypes: vec![IncidentPrototype::single_call("single", 1.0)],
        mix: TypeMix::default(),
        durations: DurationModel::default(),
        seed,
    };
    cfg.set_calls_per_hour(calls_per_hour).unwrap();
    generate_call_stream(graph, &cfg).unwrap()
}

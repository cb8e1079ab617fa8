mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{busy_sim_config, random_calls, random_graph};
use escsim::arrivals::CallEvent;
use escsim::entities::Disposition;
use escsim::geo::{GeoPoint, Rect};
use escsim::graph::{Capabilities, CallType, Edge, EdgeSemantic, EscsGraph, Vertex, VertexAttrs, VertexId};
use escsim::{simulate, summarize, write_csv, Engine, SimError, SimulationConfig};

/// CR 1 -> PSAP 0 -> responder 2 (500 m away from the incidents).
fn line_graph(servers: u32, trunks: u32) -> EscsGraph {
    EscsGraph::new(
        vec![
            Vertex {
                id: VertexId(0),
                location: GeoPoint::new(0.0, 0.0),
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
                location: GeoPoint::new(300.0, 0.0),
                attrs: VertexAttrs::Responder {
                    units: 1,
                    capabilities: Capabilities::all(),
                },
            },
        ],
        vec![
            Edge {
                src: VertexId(1),
                dst: VertexId(0),
                semantic: EdgeSemantic::Call,
            },
            Edge {
                src: VertexId(0),
                dst: VertexId(2),
                semantic: EdgeSemantic::Dispatch,
            },
            Edge {
                src: VertexId(2),
                dst: VertexId(0),
                semantic: EdgeSemantic::Status,
            },
        ],
    )
    .unwrap()
}

fn call(id: u64, time: u64, service: f64, patience: f64) -> CallEvent {
    CallEvent {
        call_id: id,
        original_call_id: id,
        vertex_id: VertexId(1),
        time,
        location: GeoPoint::new(600.0, 400.0),
        call_type: CallType::Ems,
        service_duration: service,
        patience,
        on_scene_duration: 100.0,
    }
}

fn cfg(steps: u64) -> SimulationConfig {
    SimulationConfig {
        duration_steps: steps,
        responder_speed: 10.0,
        ..SimulationConfig::default()
    }
}

#[test]
fn single_call_lifecycle() {
    let result = simulate(line_graph(1, 1), cfg(1000), vec![call(0, 5, 30.0, 100.0)]).unwrap();
    let r = &result.records[0];
    assert_eq!(r.disposition, Disposition::Served);
    // Placed at step 5, visible to the PSAP one step later.
    assert_eq!(r.arrival_step, Some(6));
    assert_eq!(r.answer_step, Some(6));
    assert_eq!(r.wait_s, Some(0.0));
    assert_eq!(r.end_step, Some(36));
    assert_eq!(r.responder, Some(VertexId(2)));
    // Dispatch leaves at 36, reaches the station at 37; 500 m at 10 m/s.
    assert_eq!(r.on_scene_step, Some(87));
    assert_eq!(r.response_time_s, Some(81.0));
    assert_eq!(result.response_logs[0].clear_step, 37 + 150);
    result.check_conservation().unwrap();
}

#[test]
fn empty_stream() {
    let result = simulate(line_graph(2, 3), cfg(100), vec![]).unwrap();
    assert!(result.records.is_empty());
    assert!(result.psap_utilization.iter().all(|t| t.changes.is_empty()));
    let s = summarize(&result);
    assert_eq!(s.utilization_histogram[0], 1.0);
    result.check_conservation().unwrap();
}

#[test]
fn busy_signal_then_redial() {
    let mut c = cfg(200);
    c.redial_probability = 1.0;
    // One trunk: the second call is blocked, redials, and is blocked again
    // until the first call clears at step 51.
    let result = simulate(
        line_graph(1, 1),
        c,
        vec![call(0, 0, 50.0, 1000.0), call(1, 0, 10.0, 1000.0)],
    )
    .unwrap();
    result.check_conservation().unwrap();
    let blocked: Vec<_> = result
        .records
        .iter()
        .filter(|r| r.disposition == Disposition::Blocked)
        .collect();
    assert!(!blocked.is_empty());
    assert!(blocked.iter().all(|r| r.redialed && r.original_call_id == 1));
    let served: Vec<_> = result
        .records
        .iter()
        .filter(|r| r.disposition == Disposition::Served)
        .collect();
    assert_eq!(served.len(), 2);
    let retry = served.iter().find(|r| r.original_call_id == 1).unwrap();
    assert!(retry.call_id >= 2);
    assert!(retry.answer_step.unwrap() >= 51);
}

#[test]
fn calls_at_the_same_second_go_out_one_per_step() {
    let calls: Vec<_> = (0..3).map(|k| call(k, 10, 5.0, 100.0)).collect();
    let result = simulate(line_graph(3, 3), cfg(100), calls).unwrap();
    let arrivals: Vec<_> = result.records.iter().map(|r| r.arrival_step.unwrap()).collect();
    assert_eq!(arrivals, vec![11, 12, 13]);
}

#[test]
fn abandonment_and_in_system_accounting() {
    let calls = vec![call(0, 0, 500.0, 1000.0), call(1, 0, 10.0, 20.0), call(2, 0, 10.0, 1000.0)];
    let result = simulate(line_graph(1, 3), cfg(100), calls).unwrap();
    let d: Vec<_> = result.records.iter().map(|r| r.disposition).collect();
    assert_eq!(d, vec![Disposition::InSystem, Disposition::Abandoned, Disposition::InSystem]);
    assert_eq!(result.records[1].wait_s, Some(20.0));
    result.check_conservation().unwrap();
}

#[test]
fn calls_beyond_horizon_stay_in_system() {
    let result = simulate(line_graph(1, 1), cfg(50), vec![call(0, 10, 5.0, 100.0), call(1, 500, 5.0, 100.0)]).unwrap();
    assert_eq!(result.records[1].disposition, Disposition::InSystem);
    assert_eq!(result.records[1].arrival_step, None);
    result.check_conservation().unwrap();
}

#[test]
fn epochs_do_not_change_results() {
    let g = random_graph(5, 10);
    let calls = random_calls(&g, 5, 600.0, 3000.0);
    let mut a = busy_sim_config(5, 3500);
    a.epoch_length = 1;
    let mut b = a.clone();
    b.epoch_length = 100_000;
    assert_eq!(simulate(g.clone(), a, calls.clone()).unwrap().records, simulate(g, b, calls).unwrap().records);
}

#[test]
fn rejects_bad_inputs() {
    let g = line_graph(1, 1);
    let mut bad = call(0, 0, 1.0, 1.0);
    bad.vertex_id = VertexId(0);
    assert_eq!(
        Engine::new(g.clone(), cfg(10), vec![bad]).unwrap_err(),
        SimError::NotACallerRegion { call_id: 0, vertex: 0 }
    );
    let mut bad = call(0, 0, 1.0, 1.0);
    bad.vertex_id = VertexId(9);
    assert!(matches!(
        Engine::new(g.clone(), cfg(10), vec![bad]),
        Err(SimError::UnknownOrigin { .. })
    ));
    assert_eq!(
        Engine::new(g.clone(), cfg(10), vec![call(3, 0, 1.0, 1.0), call(3, 1, 1.0, 1.0)]).unwrap_err(),
        SimError::DuplicateCallId(3)
    );
    let mut e = Engine::new(g, cfg(10), vec![]).unwrap();
    assert_eq!(e.set_transition_order(vec![0, 0, 1]), Err(SimError::BadOrder(3)));
}

#[test]
fn identical_inputs_give_identical_csv_bytes() {
    let g = random_graph(11, 10);
    let calls = random_calls(&g, 11, 500.0, 2000.0);
    let run = |dir: &std::path::Path| {
        let r = simulate(g.clone(), busy_sim_config(11, 2500), calls.clone()).unwrap();
        write_csv(&r, dir).unwrap();
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    for f in ["calls.csv", "utilization.csv", "summary.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

fn shuffled_run(seed: u64) -> (Engine, Engine) {
    let g = random_graph(seed, 10);
    let calls = random_calls(&g, seed, 400.0, 1500.0);
    let cfg = busy_sim_config(seed, 1800);
    let mut a = Engine::new(g.clone(), cfg.clone(), calls.clone()).unwrap();
    let mut b = Engine::new(g.clone(), cfg, calls).unwrap();
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    b.set_transition_order(order).unwrap();
    a.run_until(u64::MAX).unwrap();
    b.run_until(u64::MAX).unwrap();
    b.set_transition_order((0..g.len()).collect()).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn processing_order_is_irrelevant(seed in any::<u64>()) {
        let (a, b) = shuffled_run(seed);
        prop_assert!(a == b);
        prop_assert_eq!(a.finish(), b.finish());
    }

    #[test]
    fn conservation_holds(seed in any::<u64>(), rate in 50.0f64..1500.0, redial in 0.0f64..=1.0, flags in 0u8..4) {
        let g = random_graph(seed, 10);
        let calls = random_calls(&g, seed, rate, 1500.0);
        let mut cfg = busy_sim_config(seed, 1200 + seed % 600);
        cfg.redial_probability = redial;
        cfg.abandonment = flags & 1 == 0;
        cfg.redial_abandoned = flags & 2 != 0;
        let n = calls.len();
        let r = simulate(g, cfg, calls).unwrap();
        prop_assert_eq!(r.original_calls, n);
        r.check_conservation().unwrap();
        let s = summarize(&r);
        prop_assert!((s.utilization_histogram.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let terminal = s.served + s.abandoned + s.blocked;
        if terminal > 0 {
            prop_assert!((s.served_fraction + s.abandoned_fraction + s.blocked_fraction - 1.0).abs() < 1e-9);
        }
        for t in r.psap_utilization.iter().chain(&r.responder_utilization) {
            prop_assert!(t.changes.iter().all(|c| c.1 <= t.capacity));
        }
    }
}

//! Month-long runs of the Seattle-like network at a few call rates.
//!
//! cargo run --release --example sweep -- [seed] [rate ...] [-- proto ...]
//! where proto = weight:mu_r:sigma_r:mu_i:sigma_i:interarrival_rate

use std::time::Instant;

use escsim::graph::{synthesize_network, NetworkSpec};
use escsim::{generate_call_stream, simulate, summarize, ArrivalConfig, IncidentPrototype, SimulationConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let split = args.iter().position(|a| a == "--").unwrap_or(args.len());
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut rates: Vec<f64> = args[1.min(split)..split].iter().map(|s| s.parse().unwrap()).collect();
    if rates.is_empty() {
        rates = vec![45.6, 84.2];
    }
    let protos: Vec<IncidentPrototype> = args
        .get(split + 1..)
        .unwrap_or(&[])
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let v: Vec<f64> = p.split(':').map(|x| x.parse().unwrap()).collect();
            IncidentPrototype {
                name: format!("p{k}"),
                weight: v[0],
                mu_r: v[1],
                sigma_r: v[2],
                mu_i: v[3],
                sigma_i: v[4],
                interarrival_rate: v[5],
            }
        })
        .collect();

    let graph = synthesize_network(&NetworkSpec::seattle_like(seed)).unwrap();
    let sim = SimulationConfig {
        seed,
        ..SimulationConfig::default()
    };
    for rate in rates {
        let mut arrivals = ArrivalConfig::seattle_like(seed);
        if !protos.is_empty() {
            arrivals.prototypes = protos.clone();
        }
        arrivals.set_calls_per_hour(rate).unwrap();
        let t0 = Instant::now();
        let calls = generate_call_stream(&graph, &arrivals).unwrap();
        let n = calls.len();
        let result = simulate(graph.clone(), sim.clone(), calls).unwrap();
        let s = summarize(&result);
        println!(
            "rate {rate:6.1}  calls {n:6}  above80 {:5.1}%  wait {:5.2}s  wait_all {:5.2}s  aband {:5.1}%  blocked {:4.1}%  theta*49.36 {:.3}  util {:4.1}%  {:.1}s",
            100.0 * s.time_above_80,
            s.mean_wait_s,
            s.mean_wait_all_s,
            100.0 * s.abandonment_rate,
            100.0 * s.blocked_fraction,
            s.theta_estimate.unwrap_or(0.0) * 49.36,
            100.0 * s.mean_psap_utilization,
            t0.elapsed().as_secs_f64()
        );
    }
}

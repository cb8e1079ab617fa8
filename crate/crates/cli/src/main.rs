use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use escsim::arrivals::{read_arrival_config, read_events, write_events, ArrivalConfig};
use escsim::erlang::{staffing_report, AgentTarget, StaffingInputs};
use escsim::graph::{parse_graphml, synthesize_network, write_graphml, NetworkSpec};
use escsim::{generate_call_stream, simulate, summarize, write_csv, EscsGraph, SimulationConfig};

mod manifest;
mod report;

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "escsim", version, about = "Emergency services communication system simulator")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Random seed; overrides the seed in --config.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation configuration (XML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a network and write it as GraphML.
    GenGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        grid_cols: u32,
        #[arg(long, default_value_t = 4)]
        grid_rows: u32,
        #[arg(long, default_value_t = 1)]
        psaps: u32,
        #[arg(long, default_value_t = 34)]
        fire_stations: u32,
        #[arg(long, default_value_t = 5)]
        law_stations: u32,
        #[arg(long, default_value_t = 6)]
        servers: u32,
        #[arg(long, default_value_t = 16)]
        trunks: u32,
    },
    /// Generate a call stream for a network.
    GenCalls {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: PathBuf,
        /// Arrival configuration (XML); defaults to the Seattle-like mix.
        #[arg(long)]
        arrivals: Option<PathBuf>,
        /// Rescale the incident rate to this many calls per hour.
        #[arg(long)]
        calls_per_hour: Option<f64>,
        /// Horizon in seconds; defaults to the simulation horizon.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run a simulation and write calls.csv, utilization.csv and summary.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Write every Nth step to utilization.csv.
        #[arg(long)]
        utilization_stride: Option<u64>,
    },
    /// Erlang staffing estimates at the average and the peak rate.
    Staffing {
        #[arg(long, default_value_t = 57.25)]
        average_rate: f64,
        #[arg(long, default_value_t = 137.0)]
        peak_rate: f64,
        /// Mean service time, seconds.
        #[arg(long, default_value_t = 204.0)]
        service: f64,
        /// Post-processing time added to the trunk holding time, seconds.
        #[arg(long, default_value_t = 10.0)]
        post_processing: f64,
        /// Caller waiting tolerance, seconds.
        #[arg(long, default_value_t = 10.0)]
        wait_tolerance: f64,
        /// Size call-takers for this fraction answered within the tolerance
        /// instead of for the mean wait.
        #[arg(long)]
        service_level: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        blocking: f64,
        /// Also write the report to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the call rate in multiplicative steps, one run per rate.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Network (GraphML); defaults to the synthetic Seattle-like network.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        arrivals: Option<PathBuf>,
        #[arg(long, default_value_t = 45.6)]
        base_rate: f64,
        /// Number of increments after the base rate.
        #[arg(long, default_value_t = 6)]
        steps: u32,
        #[arg(long, default_value_t = 0.1)]
        increment: f64,
        /// Explicit call rates; replaces the multiplicative ladder.
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        /// Write every Nth step to utilization.csv.
        #[arg(long, default_value_t = 60)]
        utilization_stride: u64,
    },
    /// Summarize an experiment directory.
    Report {
        experiment: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<SimulationConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SimulationConfig::from_xml(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SimulationConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_graph(path: &Path) -> Result<EscsGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_graphml(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_arrivals(path: Option<&Path>, cfg: &SimulationConfig) -> Result<ArrivalConfig> {
    let mut arrivals = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            read_arrival_config(&text, cfg.duration_model()).with_context(|| format!("parsing {}", p.display()))?
        }
        None => {
            let mut a = ArrivalConfig::seattle_like(cfg.seed);
            a.durations = cfg.duration_model();
            a.duration_s = cfg.duration_seconds();
            a
        }
    };
    arrivals.seed = cfg.seed;
    Ok(arrivals)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn gen_graph(common: &Common, spec: NetworkSpec) -> Result<()> {
    create_dir(&common.out)?;
    let graph = synthesize_network(&spec)?;
    let path = common.out.join("graph.graphml");
    write(&path, &write_graphml(&graph))?;
    RunManifest::new("gen-graph", &common.out, spec.seed)
        .with_graph(&path)
        .write()?;
    println!("{} vertices, {} edges -> {}", graph.len(), graph.edges().len(), path.display());
    Ok(())
}

fn gen_calls(
    common: &Common,
    graph_path: &Path,
    arrivals_path: Option<&Path>,
    rate: Option<f64>,
    duration: Option<f64>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let graph = load_graph(graph_path)?;
    let mut arrivals = load_arrivals(arrivals_path, &cfg)?;
    if let Some(d) = duration {
        arrivals.duration_s = d;
    }
    if let Some(r) = rate {
        arrivals.set_calls_per_hour(r)?;
    }
    let calls = generate_call_stream(&graph, &arrivals)?;
    create_dir(&common.out)?;
    let path = common.out.join("events.xml");
    write(&path, &write_events(&calls))?;
    let arrivals_out = common.out.join("arrivals.xml");
    write(&arrivals_out, &escsim::arrivals::write_arrival_config(&arrivals))?;
    let config_out = common.out.join("config.xml");
    write(&config_out, &cfg.to_xml())?;
    RunManifest::new("gen-calls", &common.out, cfg.seed)
        .with_graph(graph_path)
        .with_events(&path)
        .with_config(&config_out)
        .with_arrivals(&arrivals_out)
        .write()?;
    println!("{} calls -> {}", calls.len(), path.display());
    Ok(())
}

/// Runs one simulation into `out` and returns its summary.
fn run_one(
    graph: EscsGraph,
    cfg: SimulationConfig,
    calls: Vec<escsim::CallEvent>,
    out: &Path,
) -> Result<escsim::Summary> {
    create_dir(out)?;
    let started = Instant::now();
    let result = simulate(graph, cfg, calls)?;
    info!("simulated {} steps in {:.1?}", result.steps, started.elapsed());
    result.check_conservation()?;
    write_csv(&result, out)?;
    Ok(summarize(&result))
}

fn simulate_cmd(common: &Common, graph_path: &Path, events_path: &Path, stride: Option<u64>) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(s) = stride {
        cfg.utilization_sample_steps = s;
    }
    cfg.validate()?;
    let graph = load_graph(graph_path)?;
    let text = fs::read_to_string(events_path).with_context(|| format!("reading {}", events_path.display()))?;
    let calls = read_events(&text).with_context(|| format!("parsing {}", events_path.display()))?;
    let summary = run_one(graph, cfg.clone(), calls, &common.out)?;
    let config_out = common.out.join("config.xml");
    write(&config_out, &cfg.to_xml())?;
    RunManifest::new("simulate", &common.out, cfg.seed)
        .with_graph(graph_path)
        .with_events(events_path)
        .with_config(&config_out)
        .write()?;
    print!("{summary}");
    Ok(())
}

fn experiment(
    common: &Common,
    graph_path: Option<&Path>,
    arrivals_path: Option<&Path>,
    rates: &[f64],
    stride: u64,
) -> Result<()> {
    if rates.iter().any(|r| !(*r > 0.0)) {
        bail!("call rates must be positive");
    }
    let mut cfg = load_config(common)?;
    cfg.utilization_sample_steps = stride;
    cfg.validate()?;
    create_dir(&common.out)?;
    let (graph, graph_file) = match graph_path {
        Some(p) => (load_graph(p)?, p.to_path_buf()),
        None => {
            let g = synthesize_network(&NetworkSpec::seattle_like(cfg.seed))?;
            let p = common.out.join("graph.graphml");
            write(&p, &write_graphml(&g))?;
            (g, p)
        }
    };
    let config_out = common.out.join("config.xml");
    write(&config_out, &cfg.to_xml())?;
    let base = load_arrivals(arrivals_path, &cfg)?;

    let mut sweep = String::from("rate,calls,mean_wait_s,abandonment_rate,time_above_80,dir\n");
    for &rate in rates {
        let mut arrivals = base.clone();
        arrivals.set_calls_per_hour(rate)?;
        let calls = generate_call_stream(&graph, &arrivals)?;
        let name = format!("rate_{rate:06.2}");
        let dir = common.out.join(&name);
        create_dir(&dir)?;
        let events = dir.join("events.xml");
        write(&events, &write_events(&calls))?;
        let arrivals_out = dir.join("arrivals.xml");
        write(&arrivals_out, &escsim::arrivals::write_arrival_config(&arrivals))?;
        let n = calls.len();
        let s = run_one(graph.clone(), cfg.clone(), calls, &dir)?;
        RunManifest::new("experiment", &dir, cfg.seed)
            .with_graph(&graph_file)
            .with_events(&events)
            .with_config(&config_out)
            .with_arrivals(&arrivals_out)
            .write()?;
        println!(
            "{rate:7.2} calls/hr: {n} calls, mean wait {:.2} s, abandonment {:.2}%, above 80% {:.2}%",
            s.mean_wait_s,
            100.0 * s.abandonment_rate,
            100.0 * s.time_above_80
        );
        sweep.push_str(&format!(
            "{rate},{n},{},{},{},{name}\n",
            s.mean_wait_s, s.abandonment_rate, s.time_above_80
        ));
    }
    write(&common.out.join("sweep.csv"), &sweep)?;
    Ok(())
}

/// `base * (1 + increment)^k` for `k = 0..=steps`.
fn rate_ladder(base: f64, increment: f64, steps: u32) -> Result<Vec<f64>> {
    if !(base > 0.0) || !(increment > -1.0) {
        bail!("base rate must be positive and increment above -1");
    }
    Ok((0..=steps).map(|k| base * (1.0 + increment).powi(k as i32)).collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGraph {
            common,
            grid_cols,
            grid_rows,
            psaps,
            fire_stations,
            law_stations,
            servers,
            trunks,
        } => {
            let seed = load_config(&common)?.seed;
            let spec = NetworkSpec {
                grid_cols,
                grid_rows,
                psaps,
                fire_ems_stations: fire_stations,
                law_stations,
                servers,
                trunks,
                ..NetworkSpec::seattle_like(seed)
            };
            gen_graph(&common, spec)
        }
        Command::GenCalls {
            common,
            graph,
            arrivals,
            calls_per_hour,
            duration,
        } => gen_calls(&common, &graph, arrivals.as_deref(), calls_per_hour, duration),
        Command::Simulate {
            common,
            graph,
            events,
            utilization_stride,
        } => simulate_cmd(&common, &graph, &events, utilization_stride),
        Command::Staffing {
            average_rate,
            peak_rate,
            service,
            post_processing,
            wait_tolerance,
            service_level,
            blocking,
            out,
        } => {
            let agent_target = match service_level {
                Some(fraction) => AgentTarget::ServiceLevel {
                    wait_s: wait_tolerance,
                    fraction,
                },
                None => AgentTarget::MeanWait { max_s: wait_tolerance },
            };
            let report = staffing_report(&StaffingInputs {
                average_rate,
                peak_rate,
                mean_service_s: service,
                post_processing_s: post_processing,
                agent_target,
                blocking_target: blocking,
                ..StaffingInputs::default()
            })?;
            print!("{report}");
            if let Some(dir) = out {
                create_dir(&dir)?;
                write(&dir.join("staffing.txt"), &report.to_string())?;
            }
            Ok(())
        }
        Command::Experiment {
            common,
            graph,
            arrivals,
            base_rate,
            steps,
            increment,
            rates,
            utilization_stride,
        } => {
            let rates = if rates.is_empty() {
                rate_ladder(base_rate, increment, steps)?
            } else {
                rates
            };
            experiment(&common, graph.as_deref(), arrivals.as_deref(), &rates, utilization_stride)
        }
        Command::Report { experiment, out } => report::run(&experiment, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Synthetic call arrivals from a spatiotemporal cluster point process.
//!
//! Incidents (the parent process) occur as a homogeneous Poisson process in
//! time and uniformly in space. Each incident draws a prototype, a cluster
//! radius and an intensity; the cluster holds `round(pi r^2 i)` calls (at
//! least one) scattered uniformly over the disc, separated in time by
//! exponential gaps.

mod xml;

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use thiserror::Error;

use crate::entities::models::{DurationModel, ModelError, SampledDurations};
use crate::geo::{GeoPoint, Rect};
use crate::graph::{CallType, EscsGraph, GraphError, VertexId};
use crate::rng::{substream, DOMAIN_CLUSTER, DOMAIN_INCIDENT};

pub use xml::{read_arrival_config, read_events, write_arrival_config, write_events};

/// Upper bound on normal redraws when truncating radius or intensity.
const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ArrivalError {
    #[error("invalid arrival configuration: {0}")]
    InvalidConfig(String),
    #[error("prototype {name:?}: invalid {field} ({value})")]
    InvalidPrototype {
        name: String,
        field: &'static str,
        value: f64,
    },
    #[error("prototype {name:?}: no positive {what} after {MAX_RESAMPLES} draws")]
    ResampleLimit { name: String, what: &'static str },
    #[error("graph has no caller regions")]
    EmptyGraph,
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("event {index}: missing attribute {key:?}")]
    MissingAttribute { index: usize, key: &'static str },
    #[error("event {index}: invalid {key:?} value {value:?}")]
    InvalidAttribute {
        index: usize,
        key: &'static str,
        value: String,
    },
    #[error("event {index}: negative {key}")]
    NegativeDuration { index: usize, key: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parameters of one incident-magnitude class.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentPrototype {
    pub name: String,
    /// Mean cluster radius, meters.
    pub mu_r: f64,
    pub sigma_r: f64,
    /// Mean intensity, calls per square meter.
    pub mu_i: f64,
    pub sigma_i: f64,
    /// Rate of the exponential gaps between calls of one cluster, per second.
    pub interarrival_rate: f64,
    /// Relative selection probability.
    pub weight: f64,
}

impl IncidentPrototype {
    /// A prototype whose clusters always contain exactly one call.
    pub fn single_call(name: &str, weight: f64) -> Self {
        IncidentPrototype {
            name: name.to_string(),
            mu_r: 1.0,
            sigma_r: 0.0,
            mu_i: 0.1,
            sigma_i: 0.0,
            interarrival_rate: 1.0,
            weight,
        }
    }

    pub fn validate(&self) -> Result<(), ArrivalError> {
        let checks: [(&'static str, f64, bool); 6] = [
            ("mu_r", self.mu_r, self.mu_r > 0.0),
            ("mu_i", self.mu_i, self.mu_i > 0.0),
            ("interarrival_rate", self.interarrival_rate, self.interarrival_rate > 0.0),
            ("sigma_r", self.sigma_r, self.sigma_r >= 0.0),
            ("sigma_i", self.sigma_i, self.sigma_i >= 0.0),
            ("weight", self.weight, self.weight > 0.0 && self.weight.is_finite()),
        ];
        for (field, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(ArrivalError::InvalidPrototype {
                    name: self.name.clone(),
                    field,
                    value,
                });
            }
        }
        Ok(())
    }

    /// Expected number of calls per cluster. Exact for degenerate
    /// prototypes, otherwise a fixed-seed Monte Carlo estimate.
    pub fn expected_cluster_size(&self) -> Result<f64, ArrivalError> {
        self.validate()?;
        if self.sigma_r == 0.0 && self.sigma_i == 0.0 {
            return Ok(cluster_size(self.mu_r, self.mu_i) as f64);
        }
        const DRAWS: u64 = 200_000;
        let mut rng = substream(0, DOMAIN_CLUSTER, u64::MAX);
        let mut total = 0.0;
        for _ in 0..DRAWS {
            let (r, i) = sample_cluster_params(self, &mut rng)?;
            total += cluster_size(r, i) as f64;
        }
        Ok(total / DRAWS as f64)
    }
}

/// Probabilities of the three call types.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeMix {
    pub law: f64,
    pub fire: f64,
    pub ems: f64,
}

impl Default for TypeMix {
    fn default() -> Self {
        TypeMix {
            law: 0.6,
            fire: 0.1,
            ems: 0.3,
        }
    }
}

impl TypeMix {
    fn validate(&self) -> Result<(), ArrivalError> {
        let parts = [self.law, self.fire, self.ems];
        if parts.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(ArrivalError::InvalidConfig("type mix entries must be non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ArrivalError::InvalidConfig(format!("type mix sums to {sum}, expected 1")));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CallType {
        let u: f64 = rng.random();
        if u < self.law {
            CallType::Law
        } else if u < self.law + self.fire {
            CallType::Fire
        } else {
            CallType::Ems
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalConfig {
    /// Primary (incident) rate per hour.
    pub incidents_per_hour: f64,
    /// Horizon in seconds.
    pub duration_s: f64,
    /// Generation box; defaults to the union of the caller regions.
    pub bounds: Option<Rect>,
    pub prototypes: Vec<IncidentPrototype>,
    pub mix: TypeMix,
    pub durations: DurationModel,
    pub seed: u64,
}

impl ArrivalConfig {
    pub fn validate(&self) -> Result<(), ArrivalError> {
        if !(self.incidents_per_hour > 0.0) || !self.incidents_per_hour.is_finite() {
            return Err(ArrivalError::InvalidConfig(format!(
                "incident rate must be positive, got {}",
                self.incidents_per_hour
            )));
        }
        if !(self.duration_s >= 0.0) || !self.duration_s.is_finite() {
            return Err(ArrivalError::InvalidConfig(format!("invalid duration {}", self.duration_s)));
        }
        if self.prototypes.is_empty() {
            return Err(ArrivalError::InvalidConfig("no incident prototypes".into()));
        }
        for p in &self.prototypes {
            p.validate()?;
        }
        if let Some(b) = &self.bounds {
            if b.is_degenerate() {
                return Err(ArrivalError::InvalidConfig("bounding box has zero area".into()));
            }
        }
        self.mix.validate()?;
        self.durations.validate()?;
        Ok(())
    }

    /// Weighted mean number of calls per incident.
    pub fn mean_calls_per_incident(&self) -> Result<f64, ArrivalError> {
        let total_weight: f64 = self.prototypes.iter().map(|p| p.weight).sum();
        let mut mean = 0.0;
        for p in &self.prototypes {
            mean += p.weight / total_weight * p.expected_cluster_size()?;
        }
        Ok(mean)
    }

    /// Expected calls per hour implied by the incident rate.
    pub fn calls_per_hour(&self) -> Result<f64, ArrivalError> {
        Ok(self.incidents_per_hour * self.mean_calls_per_incident()?)
    }

    /// One month of calls from the Seattle-like incident mix at 45.6 calls/hr.
    pub fn seattle_like(seed: u64) -> Self {
        let mut cfg = ArrivalConfig {
            incidents_per_hour: 1.0,
            duration_s: 30.0 * 86_400.0,
            bounds: None,
            prototypes: vec![
                IncidentPrototype::single_call("single", 1.0),
                // Tight bursts of about four calls within a few seconds, e.g.
                // several witnesses of one collision.
                IncidentPrototype {
                    name: "burst".to_string(),
                    mu_r: 112.8,
                    sigma_r: 5.6,
                    mu_i: 1e-4,
                    sigma_i: 5e-6,
                    interarrival_rate: 1.0,
                    weight: 0.35,
                },
            ],
            mix: TypeMix::default(),
            durations: DurationModel::default(),
            seed,
        };
        cfg.set_calls_per_hour(45.6).expect("preset is valid");
        cfg
    }

    /// Set the incident rate so that the expected call rate is `calls_per_hour`.
    pub fn set_calls_per_hour(&mut self, calls_per_hour: f64) -> Result<(), ArrivalError> {
        if !(calls_per_hour > 0.0) {
            return Err(ArrivalError::InvalidConfig(format!(
                "call rate must be positive, got {calls_per_hour}"
            )));
        }
        self.incidents_per_hour = calls_per_hour / self.mean_calls_per_incident()?;
        Ok(())
    }
}

/// One emergency incident of the parent process.
#[derive(Debug, Clone, PartialEq)]
pub struct Incident {
    /// Seconds since simulation start.
    pub time: f64,
    pub location: GeoPoint,
    /// Index into the configured prototype list.
    pub prototype: usize,
    pub call_type: CallType,
}

/// One call attempt as consumed by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct CallEvent {
    pub call_id: u64,
    /// Id of the first attempt of this caller; equals `call_id` for first attempts.
    pub original_call_id: u64,
    /// Caller region the call originates from.
    pub vertex_id: VertexId,
    /// Whole seconds since simulation start.
    pub time: u64,
    pub location: GeoPoint,
    pub call_type: CallType,
    pub service_duration: f64,
    pub patience: f64,
    pub on_scene_duration: f64,
}

/// A call produced by a cluster before it is assigned an id and a region.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCall {
    pub time: f64,
    pub location: GeoPoint,
    pub call_type: CallType,
    pub durations: SampledDurations,
}

/// Parent process: Poisson arrivals on `[0, duration)`, uniform locations.
pub fn sample_incidents<R: Rng + ?Sized>(
    cfg: &ArrivalConfig,
    bounds: &Rect,
    rng: &mut R,
) -> Result<Vec<Incident>, ArrivalError> {
    cfg.validate()?;
    if bounds.is_degenerate() {
        return Err(ArrivalError::InvalidConfig("bounding box has zero area".into()));
    }
    let rate_per_s = cfg.incidents_per_hour / 3600.0;
    let weights = WeightedIndex::new(cfg.prototypes.iter().map(|p| p.weight))
        .map_err(|e| ArrivalError::InvalidConfig(e.to_string()))?;

    let mut incidents = Vec::new();
    let mut t = 0.0;
    loop {
        let gap: f64 = Exp1.sample(rng);
        t += gap / rate_per_s;
        if t >= cfg.duration_s {
            break;
        }
        let location = GeoPoint::new(
            rng.random_range(bounds.xmin..bounds.xmax),
            rng.random_range(bounds.ymin..bounds.ymax),
        );
        let prototype = weights.sample(rng);
        let call_type = cfg.mix.sample(rng);
        incidents.push(Incident {
            time: t,
            location,
            prototype,
            call_type,
        });
    }
    Ok(incidents)
}

fn positive_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    rng: &mut R,
    proto: &IncidentPrototype,
    what: &'static str,
) -> Result<f64, ArrivalError> {
    if sd == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, sd).map_err(|_| ArrivalError::InvalidPrototype {
        name: proto.name.clone(),
        field: what,
        value: sd,
    })?;
    for _ in 0..MAX_RESAMPLES {
        let x = normal.sample(rng);
        if x > 0.0 {
            return Ok(x);
        }
    }
    Err(ArrivalError::ResampleLimit {
        name: proto.name.clone(),
        what,
    })
}

/// Draw `(radius, intensity)` from the prototype's normals, redrawing
/// non-positive values.
pub fn sample_cluster_params<R: Rng + ?Sized>(
    proto: &IncidentPrototype,
    rng: &mut R,
) -> Result<(f64, f64), ArrivalError> {
    let radius = positive_normal(proto.mu_r, proto.sigma_r, rng, proto, "radius")?;
    let intensity = positive_normal(proto.mu_i, proto.sigma_i, rng, proto, "intensity")?;
    Ok((radius, intensity))
}

/// Number of calls in a cluster: `pi r^2 i` rounded to nearest, at least 1.
pub fn cluster_size(radius: f64, intensity: f64) -> u64 {
    let n = (PI * radius * radius * intensity).round();
    // `as` saturates for huge values
    (n as u64).max(1)
}

/// Polar offset `(rho, theta) = (r sqrt(u), 2 pi v)` for unit uniforms `u`, `v`.
pub fn scatter_point(radius: f64, u: f64, v: f64) -> (f64, f64) {
    (radius * u.sqrt(), 2.0 * PI * v)
}

/// Secondary process for one incident.
pub fn generate_cluster_calls<R: Rng + ?Sized>(
    incident: &Incident,
    proto: &IncidentPrototype,
    durations: &DurationModel,
    rng: &mut R,
) -> Result<Vec<ClusterCall>, ArrivalError> {
    let (radius, intensity) = sample_cluster_params(proto, rng)?;
    let n = cluster_size(radius, intensity);
    let mut calls = Vec::with_capacity(n.min(1 << 16) as usize);
    let mut t = incident.time;
    for _ in 0..n {
        let gap: f64 = Exp1.sample(rng);
        t += gap / proto.interarrival_rate;
        let (rho, theta) = scatter_point(radius, rng.random(), rng.random());
        calls.push(ClusterCall {
            time: t,
            location: incident.location.offset_polar(rho, theta),
            call_type: incident.call_type,
            durations: durations.sample(rng)?,
        });
    }
    Ok(calls)
}

/// Full call stream for a graph, sorted by time, with ids assigned in time
/// order starting at 0. Each incident's cluster draws from its own stream,
/// so the result depends only on `(graph, cfg)`.
pub fn generate_call_stream(graph: &EscsGraph, cfg: &ArrivalConfig) -> Result<Vec<CallEvent>, ArrivalError> {
    let region_bounds = graph.region_bounds().ok_or(ArrivalError::EmptyGraph)?;
    let bounds = cfg.bounds.unwrap_or(region_bounds);
    let mut rng = substream(cfg.seed, DOMAIN_INCIDENT, 0);
    let incidents = sample_incidents(cfg, &bounds, &mut rng)?;

    // (time, incident, position) keeps the sort total and reproducible
    let mut pending: Vec<(u64, usize, usize, GeoPoint, ClusterCall)> = Vec::new();
    for (k, incident) in incidents.iter().enumerate() {
        let mut crng = substream(cfg.seed, DOMAIN_CLUSTER, k as u64);
        let proto = &cfg.prototypes[incident.prototype];
        for (pos, call) in generate_cluster_calls(incident, proto, &cfg.durations, &mut crng)?
            .into_iter()
            .enumerate()
        {
            let time = call.time.ceil();
            if time >= cfg.duration_s {
                continue;
            }
            let location = region_bounds.clamp(&bounds.clamp(&call.location));
            pending.push((time as u64, k, pos, location, call));
        }
    }
    pending.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));

    pending
        .into_iter()
        .enumerate()
        .map(|(id, (time, _, _, location, call))| {
            Ok(CallEvent {
                call_id: id as u64,
                original_call_id: id as u64,
                vertex_id: graph.locate_region(&location)?,
                time,
                location,
                call_type: call.call_type,
                service_duration: call.durations.service,
                patience: call.durations.patience,
                on_scene_duration: call.durations.on_scene,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{synthesize_network, NetworkSpec};
    use crate::rng::seeded;

    fn config(rate: f64, duration_s: f64) -> ArrivalConfig {
        ArrivalConfig {
            incidents_per_hour: rate,
            duration_s,
            bounds: Some(Rect::new(0.0, 0.0, 1000.0, 1000.0)),
            prototypes: vec![IncidentPrototype::single_call("single", 1.0)],
            mix: TypeMix::default(),
            durations: DurationModel::default(),
            seed: 3,
        }
    }

    fn incident() -> Incident {
        Incident {
            time: 100.0,
            location: GeoPoint::new(500.0, 500.0),
            prototype: 0,
            call_type: CallType::Fire,
        }
    }

    #[test]
    fn cluster_size_examples() {
        assert_eq!(cluster_size(1.0, 1.0), 3);
        assert_eq!(cluster_size(2.0, 0.5), 6);
        assert_eq!(cluster_size(0.1, 1.0), 1);
    }

    #[test]
    fn scatter_examples() {
        assert_eq!(scatter_point(7.0, 0.0, 0.3).0, 0.0);
        let (rho, theta) = scatter_point(7.0, 1.0, 0.25);
        assert_eq!(rho, 7.0);
        assert!((theta - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_normals_return_means() {
        let proto = IncidentPrototype {
            name: "fixed".into(),
            mu_r: 250.0,
            sigma_r: 0.0,
            mu_i: 2e-5,
            sigma_i: 0.0,
            interarrival_rate: 0.1,
            weight: 1.0,
        };
        let mut rng = seeded(1);
        assert_eq!(sample_cluster_params(&proto, &mut rng).unwrap(), (250.0, 2e-5));
    }

    #[test]
    fn truncation_by_resampling_keeps_radii_positive() {
        let proto = IncidentPrototype {
            name: "wide".into(),
            mu_r: 1.0,
            sigma_r: 100.0,
            mu_i: 1.0,
            sigma_i: 0.0,
            interarrival_rate: 1.0,
            weight: 1.0,
        };
        let mut rng = seeded(2);
        for _ in 0..10_000 {
            let (r, _) = sample_cluster_params(&proto, &mut rng).unwrap();
            assert!(r > 0.0);
        }
    }

    #[test]
    fn pathological_prototype_errors() {
        // a validated prototype has a positive mean, so each draw is positive
        // with probability >= 1/2; only an unvalidated one can hit the limit
        let proto = IncidentPrototype {
            name: "hopeless".into(),
            mu_r: -1000.0,
            sigma_r: 1.0,
            mu_i: 1.0,
            sigma_i: 0.0,
            interarrival_rate: 1.0,
            weight: 1.0,
        };
        let mut rng = seeded(4);
        assert_eq!(
            sample_cluster_params(&proto, &mut rng),
            Err(ArrivalError::ResampleLimit {
                name: "hopeless".into(),
                what: "radius"
            })
        );
        assert!(matches!(proto.validate(), Err(ArrivalError::InvalidPrototype { field: "mu_r", .. })));
    }

    #[test]
    fn tiny_cluster_is_one_call_after_incident() {
        let proto = IncidentPrototype::single_call("one", 1.0);
        let mut rng = seeded(5);
        let calls = generate_cluster_calls(&incident(), &proto, &DurationModel::default(), &mut rng).unwrap();
        assert_eq!(calls.len(), 1);
        assert!(calls[0].time > 100.0);
        assert_eq!(calls[0].call_type, CallType::Fire);
    }

    #[test]
    fn cluster_calls_stay_in_disc() {
        let proto = IncidentPrototype {
            name: "big".into(),
            mu_r: 300.0,
            sigma_r: 0.0,
            mu_i: 1e-4,
            sigma_i: 0.0,
            interarrival_rate: 0.1,
            weight: 1.0,
        };
        let mut rng = seeded(6);
        let inc = incident();
        let calls = generate_cluster_calls(&inc, &proto, &DurationModel::default(), &mut rng).unwrap();
        assert_eq!(calls.len() as u64, cluster_size(300.0, 1e-4));
        for c in &calls {
            assert!(c.location.distance(&inc.location) <= 300.0 + 1e-9);
            assert!(c.durations.service >= 4.0);
        }
        assert!(calls.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn near_zero_rate_gives_no_incidents() {
        let cfg = config(1e-4, 3600.0);
        let mut rng = seeded(7);
        let b = cfg.bounds.unwrap();
        assert!(sample_incidents(&cfg, &b, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn incidents_are_sorted_and_reproducible() {
        let cfg = config(50.0, 10.0 * 3600.0);
        let b = cfg.bounds.unwrap();
        let a = sample_incidents(&cfg, &b, &mut seeded(8)).unwrap();
        let c = sample_incidents(&cfg, &b, &mut seeded(8)).unwrap();
        assert_eq!(a, c);
        assert!(a.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(a.iter().all(|i| b.contains(&i.location)));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = config(10.0, 100.0);
        cfg.mix.law = 0.9;
        assert!(cfg.validate().is_err());
        let mut cfg = config(0.0, 100.0);
        assert!(cfg.validate().is_err());
        cfg.incidents_per_hour = 1.0;
        cfg.prototypes.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stream_is_sorted_and_assigned() {
        let g = synthesize_network(&NetworkSpec::seattle_like(1)).unwrap();
        let mut cfg = config(40.0, 24.0 * 3600.0);
        cfg.bounds = None;
        cfg.prototypes.push(IncidentPrototype {
            name: "multi".into(),
            mu_r: 400.0,
            sigma_r: 100.0,
            mu_i: 2e-5,
            sigma_i: 5e-6,
            interarrival_rate: 0.05,
            weight: 0.2,
        });
        let s = generate_call_stream(&g, &cfg).unwrap();
        assert!(!s.is_empty());
        assert!(s.windows(2).all(|w| w[0].time <= w[1].time));
        for (i, c) in s.iter().enumerate() {
            assert_eq!(c.call_id, i as u64);
            assert_eq!(c.original_call_id, c.call_id);
            assert_eq!(g.locate_region(&c.location).unwrap(), c.vertex_id);
            assert!((c.time as f64) < cfg.duration_s);
        }
        assert_eq!(s, generate_call_stream(&g, &cfg).unwrap());
    }

    #[test]
    fn calibration_hits_target_rate() {
        let mut cfg = config(1.0, 3600.0);
        cfg.prototypes.push(IncidentPrototype {
            name: "five".into(),
            mu_r: 1.0,
            sigma_r: 0.0,
            mu_i: 5.0 / PI,
            sigma_i: 0.0,
            interarrival_rate: 0.1,
            weight: 1.0,
        });
        // (1 + 5) / 2 calls per incident
        assert_eq!(cfg.mean_calls_per_incident().unwrap(), 3.0);
        cfg.set_calls_per_hour(57.25).unwrap();
        assert!((cfg.incidents_per_hour - 57.25 / 3.0).abs() < 1e-12);
    }
}

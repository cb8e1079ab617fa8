//! XML forms of the call stream and of the arrival configuration.
//!
//! Call stream:
//!
//! ```xml
//! <simulation_input>
//!   <event vertex_id="3" time="17" x="120.5" y="88" type="LAW" duration="93.2"
//!          patience="40.1" on_scene="1302.7" call_id="0" original_call_id="0"/>
//! </simulation_input>
//! ```
//!
//! Arrival configuration:
//!
//! ```xml
//! <arrival_config calls_per_hour="57.25" duration="2592000" seed="1">
//!   <bounds xmin="0" ymin="0" xmax="14000" ymax="25000"/>
//!   <mix law="0.6" fire="0.1" ems="0.3"/>
//!   <prototype name="routine" mu_r="1" sigma_r="0" mu_i="0.1" sigma_i="0"
//!              interarrival_rate="1" weight="0.9"/>
//! </arrival_config>
//! ```
//!
//! `incidents_per_hour` may be given instead of `calls_per_hour`.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{ArrivalConfig, ArrivalError, CallEvent, IncidentPrototype, TypeMix};
use crate::entities::models::DurationModel;
use crate::geo::{GeoPoint, Rect};
use crate::graph::{CallType, VertexId};

pub fn write_events(stream: &[CallEvent]) -> String {
    let mut out = String::with_capacity(64 + stream.len() * 200);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<simulation_input>\n");
    for e in stream {
        let _ = writeln!(
            out,
            "  <event vertex_id=\"{}\" time=\"{}\" x=\"{}\" y=\"{}\" type=\"{}\" duration=\"{}\" patience=\"{}\" on_scene=\"{}\" call_id=\"{}\" original_call_id=\"{}\"/>",
            e.vertex_id,
            e.time,
            e.location.x,
            e.location.y,
            e.call_type,
            e.service_duration,
            e.patience,
            e.on_scene_duration,
            e.call_id,
            e.original_call_id,
        );
    }
    out.push_str("</simulation_input>\n");
    out
}

fn attr<T: FromStr>(node: &roxmltree::Node<'_, '_>, index: usize, key: &'static str) -> Result<T, ArrivalError> {
    let raw = node
        .attribute(key)
        .ok_or(ArrivalError::MissingAttribute { index, key })?;
    raw.trim().parse().map_err(|_| ArrivalError::InvalidAttribute {
        index,
        key,
        value: raw.to_string(),
    })
}

fn duration(node: &roxmltree::Node<'_, '_>, index: usize, key: &'static str) -> Result<f64, ArrivalError> {
    let v: f64 = attr(node, index, key)?;
    if v < 0.0 || v.is_nan() {
        return Err(ArrivalError::NegativeDuration { index, key });
    }
    Ok(v)
}

/// Parse a call stream. Element indices in errors count `<event>` elements
/// from zero.
pub fn read_events(text: &str) -> Result<Vec<CallEvent>, ArrivalError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| ArrivalError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "simulation_input" {
        return Err(ArrivalError::Xml(format!(
            "expected <simulation_input> root, found <{}>",
            root.tag_name().name()
        )));
    }
    root.children()
        .filter(|n| n.is_element() && n.tag_name().name() == "event")
        .enumerate()
        .map(|(i, n)| {
            let type_raw: String = attr(&n, i, "type")?;
            let call_type = type_raw.parse::<CallType>().map_err(|_| ArrivalError::InvalidAttribute {
                index: i,
                key: "type",
                value: type_raw.clone(),
            })?;
            Ok(CallEvent {
                call_id: attr(&n, i, "call_id")?,
                original_call_id: attr(&n, i, "original_call_id")?,
                vertex_id: VertexId(attr(&n, i, "vertex_id")?),
                time: attr(&n, i, "time")?,
                location: GeoPoint::new(attr(&n, i, "x")?, attr(&n, i, "y")?),
                call_type,
                service_duration: duration(&n, i, "duration")?,
                patience: duration(&n, i, "patience")?,
                on_scene_duration: duration(&n, i, "on_scene")?,
            })
        })
        .collect()
}

fn cfg_attr<T: FromStr>(node: &roxmltree::Node<'_, '_>, key: &str) -> Result<Option<T>, ArrivalError> {
    match node.attribute(key) {
        None => Ok(None),
        Some(raw) => raw.trim().parse().map(Some).map_err(|_| {
            ArrivalError::InvalidConfig(format!(
                "<{}>: invalid {key} value {raw:?}",
                node.tag_name().name()
            ))
        }),
    }
}

fn cfg_required<T: FromStr>(node: &roxmltree::Node<'_, '_>, key: &str) -> Result<T, ArrivalError> {
    cfg_attr(node, key)?.ok_or_else(|| {
        ArrivalError::InvalidConfig(format!("<{}> is missing {key}", node.tag_name().name()))
    })
}

/// Parse an arrival configuration. Call durations are not part of this
/// document; the returned config carries `durations`.
pub fn read_arrival_config(text: &str, durations: DurationModel) -> Result<ArrivalConfig, ArrivalError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| ArrivalError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "arrival_config" {
        return Err(ArrivalError::Xml(format!(
            "expected <arrival_config> root, found <{}>",
            root.tag_name().name()
        )));
    }

    let mut bounds = None;
    let mut mix = TypeMix::default();
    let mut prototypes = Vec::new();
    for n in root.children().filter(|n| n.is_element()) {
        match n.tag_name().name() {
            "bounds" => {
                bounds = Some(Rect::new(
                    cfg_required(&n, "xmin")?,
                    cfg_required(&n, "ymin")?,
                    cfg_required(&n, "xmax")?,
                    cfg_required(&n, "ymax")?,
                ))
            }
            "mix" => {
                mix = TypeMix {
                    law: cfg_required(&n, "law")?,
                    fire: cfg_required(&n, "fire")?,
                    ems: cfg_required(&n, "ems")?,
                }
            }
            "prototype" => prototypes.push(IncidentPrototype {
                name: n.attribute("name").unwrap_or("").to_string(),
                mu_r: cfg_required(&n, "mu_r")?,
                sigma_r: cfg_required(&n, "sigma_r")?,
                mu_i: cfg_required(&n, "mu_i")?,
                sigma_i: cfg_required(&n, "sigma_i")?,
                interarrival_rate: cfg_required(&n, "interarrival_rate")?,
                weight: cfg_required(&n, "weight")?,
            }),
            other => log::warn!("arrival config: ignoring <{other}>"),
        }
    }

    let mut cfg = ArrivalConfig {
        incidents_per_hour: 1.0,
        duration_s: cfg_required(&root, "duration")?,
        bounds,
        prototypes,
        mix,
        durations,
        seed: cfg_attr(&root, "seed")?.unwrap_or(0),
    };
    match (
        cfg_attr::<f64>(&root, "incidents_per_hour")?,
        cfg_attr::<f64>(&root, "calls_per_hour")?,
    ) {
        (Some(rate), None) => cfg.incidents_per_hour = rate,
        (None, Some(calls)) => {
            cfg.validate()?;
            cfg.set_calls_per_hour(calls)?;
        }
        _ => {
            return Err(ArrivalError::InvalidConfig(
                "exactly one of incidents_per_hour and calls_per_hour is required".into(),
            ))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Serialize an arrival configuration (incident rate form).
pub fn write_arrival_config(cfg: &ArrivalConfig) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<arrival_config incidents_per_hour=\"{}\" duration=\"{}\" seed=\"{}\">",
        cfg.incidents_per_hour, cfg.duration_s, cfg.seed
    );
    if let Some(b) = &cfg.bounds {
        let _ = writeln!(
            out,
            "  <bounds xmin=\"{}\" ymin=\"{}\" xmax=\"{}\" ymax=\"{}\"/>",
            b.xmin, b.ymin, b.xmax, b.ymax
        );
    }
    let _ = writeln!(
        out,
        "  <mix law=\"{}\" fire=\"{}\" ems=\"{}\"/>",
        cfg.mix.law, cfg.mix.fire, cfg.mix.ems
    );
    for p in &cfg.prototypes {
        let _ = writeln!(
            out,
            "  <prototype name=\"{}\" mu_r=\"{}\" sigma_r=\"{}\" mu_i=\"{}\" sigma_i=\"{}\" interarrival_rate=\"{}\" weight=\"{}\"/>",
            escape(&p.name),
            p.mu_r,
            p.sigma_r,
            p.mu_i,
            p.sigma_i,
            p.interarrival_rate,
            p.weight
        );
    }
    out.push_str("</arrival_config>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

//! The ESCS network: caller regions, PSAPs and responders joined by directed
//! communication edges.
//!
//! A graph is validated once at construction and is immutable afterwards.
//! Vertices keep their insertion order; that order defines the dense vertex
//! index used by the simulation engine, while [`VertexId`] is the external,
//! user-facing identifier.

mod graphml;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geo::{GeoPoint, Rect};

pub use graphml::{parse_graphml, write_graphml};
pub use synth::{synthesize_network, NetworkSpec};

/// External vertex identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Response category of an emergency call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CallType {
    Law,
    Fire,
    Ems,
}

impl CallType {
    pub const ALL: [CallType; 3] = [CallType::Law, CallType::Fire, CallType::Ems];

    pub fn as_str(&self) -> &'static str {
        match self {
            CallType::Law => "LAW",
            CallType::Fire => "FIRE",
            CallType::Ems => "EMS",
        }
    }

    fn bit(&self) -> u8 {
        match self {
            CallType::Law => 1,
            CallType::Fire => 2,
            CallType::Ems => 4,
        }
    }
}

impl fmt::Display for CallType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CallType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "LAW" => Ok(CallType::Law),
            "FIRE" => Ok(CallType::Fire),
            "EMS" => Ok(CallType::Ems),
            other => Err(GraphError::UnknownCallType(other.to_string())),
        }
    }
}

/// Set of call types a responder can serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities(u8);

impl Capabilities {
    pub fn new(types: &[CallType]) -> Self {
        Capabilities(types.iter().fold(0, |acc, t| acc | t.bit()))
    }

    pub fn all() -> Self {
        Self::new(&CallType::ALL)
    }

    pub fn contains(&self, t: CallType) -> bool {
        self.0 & t.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = CallType> + '_ {
        CallType::ALL.into_iter().filter(|t| self.contains(*t))
    }
}

impl fmt::Display for Capabilities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(|t| t.as_str()).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for Capabilities {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut caps = Capabilities::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            caps.0 |= part.parse::<CallType>()?.bit();
        }
        Ok(caps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    CallerRegion,
    Psap,
    Responder,
}

impl VertexKind {
    pub fn code(&self) -> &'static str {
        match self {
            VertexKind::CallerRegion => "CALR",
            VertexKind::Psap => "PSAP",
            VertexKind::Responder => "RESP",
        }
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Kind-specific vertex attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexAttrs {
    CallerRegion { region: Rect },
    Psap { servers: u32, trunks: u32 },
    Responder { units: u32, capabilities: Capabilities },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: VertexId,
    pub location: GeoPoint,
    pub attrs: VertexAttrs,
}

impl Vertex {
    pub fn kind(&self) -> VertexKind {
        match self.attrs {
            VertexAttrs::CallerRegion { .. } => VertexKind::CallerRegion,
            VertexAttrs::Psap { .. } => VertexKind::Psap,
            VertexAttrs::Responder { .. } => VertexKind::Responder,
        }
    }

    pub fn region(&self) -> Option<&Rect> {
        match &self.attrs {
            VertexAttrs::CallerRegion { region } => Some(region),
            _ => None,
        }
    }

    pub fn capabilities(&self) -> Option<Capabilities> {
        match self.attrs {
            VertexAttrs::Responder { capabilities, .. } => Some(capabilities),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSemantic {
    /// Caller region to PSAP.
    Call,
    /// PSAP to responder.
    Dispatch,
    /// Responder to PSAP.
    Status,
}

impl EdgeSemantic {
    pub fn code(&self) -> &'static str {
        match self {
            EdgeSemantic::Call => "CALL",
            EdgeSemantic::Dispatch => "DISPATCH",
            EdgeSemantic::Status => "STATUS",
        }
    }

    fn endpoints(&self) -> (VertexKind, VertexKind) {
        match self {
            EdgeSemantic::Call => (VertexKind::CallerRegion, VertexKind::Psap),
            EdgeSemantic::Dispatch => (VertexKind::Psap, VertexKind::Responder),
            EdgeSemantic::Status => (VertexKind::Responder, VertexKind::Psap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub semantic: EdgeSemantic,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unknown vertex kind {0:?}")]
    UnknownVertexKind(String),
    #[error("unknown edge semantic {0:?}")]
    UnknownEdgeSemantic(String),
    #[error("unknown call type {0:?}")]
    UnknownCallType(String),
    #[error("{element} is missing required attribute {key:?}")]
    MissingAttribute { element: String, key: String },
    #[error("{element}: invalid value {value:?} for {key:?}")]
    InvalidAttribute {
        element: String,
        key: String,
        value: String,
    },
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("PSAP {id}: trunks < servers ({trunks} < {servers})")]
    TrunksBelowServers {
        id: VertexId,
        trunks: u32,
        servers: u32,
    },
    #[error("vertex {id}: {what} must be at least 1")]
    ZeroCapacity { id: VertexId, what: &'static str },
    #[error("responder {0} has an empty capability set")]
    EmptyCapabilities(VertexId),
    #[error("vertex {0} has a non-finite location")]
    NonFiniteLocation(VertexId),
    #[error("caller region {0} has a degenerate boundary")]
    DegenerateRegion(VertexId),
    #[error("edge {src} -> {dst} references a missing vertex")]
    DanglingEdge { src: VertexId, dst: VertexId },
    #[error("edge {src} -> {dst}: {semantic:?} does not connect {src_kind} to {dst_kind}")]
    EdgeKindMismatch {
        src: VertexId,
        dst: VertexId,
        semantic: EdgeSemantic,
        src_kind: VertexKind,
        dst_kind: VertexKind,
    },
    #[error("caller region {id} has {count} call paths, expected exactly 1")]
    CallPathCount { id: VertexId, count: usize },
    #[error("PSAP {psap} cannot dispatch {call_type} calls")]
    MissingDispatchCoverage { psap: VertexId, call_type: CallType },
    #[error("caller regions {a} and {b} served by PSAP {psap} overlap")]
    OverlappingRegions {
        psap: VertexId,
        a: VertexId,
        b: VertexId,
    },
    #[error("vertex {0} is not a PSAP")]
    NotAPsap(VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("no responder reachable from PSAP {psap} can handle {call_type} calls")]
    NoCapableResponder { psap: VertexId, call_type: CallType },
    #[error("point {0} lies outside every caller region")]
    OutsideRegions(GeoPoint),
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
}

/// Validated, immutable ESCS network.
#[derive(Debug, Clone, PartialEq)]
pub struct EscsGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    index: HashMap<VertexId, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl EscsGraph {
    /// Build and validate a graph.
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id, i).is_some() {
                return Err(GraphError::DuplicateVertex(v.id));
            }
            validate_vertex(v)?;
        }

        let mut outgoing = vec![Vec::new(); vertices.len()];
        let mut incoming = vec![Vec::new(); vertices.len()];
        for (e, edge) in edges.iter().enumerate() {
            let (Some(&s), Some(&d)) = (index.get(&edge.src), index.get(&edge.dst)) else {
                return Err(GraphError::DanglingEdge {
                    src: edge.src,
                    dst: edge.dst,
                });
            };
            let (want_src, want_dst) = edge.semantic.endpoints();
            let (src_kind, dst_kind) = (vertices[s].kind(), vertices[d].kind());
            if src_kind != want_src || dst_kind != want_dst {
                return Err(GraphError::EdgeKindMismatch {
                    src: edge.src,
                    dst: edge.dst,
                    semantic: edge.semantic,
                    src_kind,
                    dst_kind,
                });
            }
            outgoing[s].push(e);
            incoming[d].push(e);
        }

        let graph = EscsGraph {
            vertices,
            edges,
            index,
            outgoing,
            incoming,
        };
        graph.validate_topology()?;
        Ok(graph)
    }

    fn validate_topology(&self) -> Result<(), GraphError> {
        for (i, v) in self.vertices.iter().enumerate() {
            match v.kind() {
                VertexKind::CallerRegion => {
                    let count = self.outgoing_with(i, EdgeSemantic::Call).count();
                    if count != 1 {
                        return Err(GraphError::CallPathCount { id: v.id, count });
                    }
                }
                VertexKind::Psap => {
                    let callers: Vec<usize> = self
                        .incoming_with(i, EdgeSemantic::Call)
                        .map(|e| self.index[&self.edges[e].src])
                        .collect();
                    if !callers.is_empty() {
                        for call_type in CallType::ALL {
                            let covered = self.outgoing_with(i, EdgeSemantic::Dispatch).any(|e| {
                                let r = &self.vertices[self.index[&self.edges[e].dst]];
                                r.capabilities().is_some_and(|c| c.contains(call_type))
                            });
                            if !covered {
                                return Err(GraphError::MissingDispatchCoverage {
                                    psap: v.id,
                                    call_type,
                                });
                            }
                        }
                    }
                    for (n, &a) in callers.iter().enumerate() {
                        for &b in &callers[n + 1..] {
                            let (ra, rb) = (&self.vertices[a], &self.vertices[b]);
                            if ra.region().unwrap().overlaps(rb.region().unwrap()) {
                                return Err(GraphError::OverlappingRegions {
                                    psap: v.id,
                                    a: ra.id.min(rb.id),
                                    b: ra.id.max(rb.id),
                                });
                            }
                        }
                    }
                }
                VertexKind::Responder => {}
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Dense index of a vertex id.
    pub fn index_of(&self, id: VertexId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.index_of(id).map(|i| &self.vertices[i])
    }

    /// Edge ids leaving vertex index `v`, in edge-id order.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    /// Edge ids entering vertex index `v`, in edge-id order.
    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.incoming[v]
    }

    pub fn outgoing_with(&self, v: usize, semantic: EdgeSemantic) -> impl Iterator<Item = usize> + '_ {
        self.outgoing[v]
            .iter()
            .copied()
            .filter(move |&e| self.edges[e].semantic == semantic)
    }

    pub fn incoming_with(&self, v: usize, semantic: EdgeSemantic) -> impl Iterator<Item = usize> + '_ {
        self.incoming[v]
            .iter()
            .copied()
            .filter(move |&e| self.edges[e].semantic == semantic)
    }

    pub fn count_kind(&self, kind: VertexKind) -> usize {
        self.vertices.iter().filter(|v| v.kind() == kind).count()
    }

    /// Union of all caller-region rectangles.
    pub fn region_bounds(&self) -> Option<Rect> {
        self.vertices
            .iter()
            .filter_map(Vertex::region)
            .copied()
            .reduce(|a, b| a.union(&b))
    }

    /// The capable responder reachable from `psap` over a dispatch path that
    /// is closest to `incident`. Ties go to the lowest vertex id.
    pub fn nearest_responder(
        &self,
        psap: VertexId,
        incident: &GeoPoint,
        call_type: CallType,
    ) -> Result<VertexId, GraphError> {
        let p = self.index_of(psap).ok_or(GraphError::UnknownVertex(psap))?;
        if self.vertices[p].kind() != VertexKind::Psap {
            return Err(GraphError::NotAPsap(psap));
        }
        self.outgoing_with(p, EdgeSemantic::Dispatch)
            .map(|e| &self.vertices[self.index[&self.edges[e].dst]])
            .filter(|r| r.capabilities().is_some_and(|c| c.contains(call_type)))
            .map(|r| (r.location.distance(incident), r.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
            .ok_or(GraphError::NoCapableResponder { psap, call_type })
    }

    /// The caller region containing `p`. Points on shared boundaries belong
    /// to the region with the lowest id.
    pub fn locate_region(&self, p: &GeoPoint) -> Result<VertexId, GraphError> {
        self.vertices
            .iter()
            .filter(|v| v.region().is_some_and(|r| r.contains(p)))
            .map(|v| v.id)
            .min()
            .ok_or(GraphError::OutsideRegions(*p))
    }
}

fn validate_vertex(v: &Vertex) -> Result<(), GraphError> {
    if !v.location.is_finite() {
        return Err(GraphError::NonFiniteLocation(v.id));
    }
    match v.attrs {
        VertexAttrs::CallerRegion { region } => {
            if region.is_degenerate() {
                return Err(GraphError::DegenerateRegion(v.id));
            }
        }
        VertexAttrs::Psap { servers, trunks } => {
            if servers == 0 {
                return Err(GraphError::ZeroCapacity {
                    id: v.id,
                    what: "servers",
                });
            }
            if trunks < servers {
                return Err(GraphError::TrunksBelowServers {
                    id: v.id,
                    trunks,
                    servers,
                });
            }
        }
        VertexAttrs::Responder {
            units,
            capabilities,
        } => {
            if units == 0 {
                return Err(GraphError::ZeroCapacity {
                    id: v.id,
                    what: "units",
                });
            }
            if capabilities.is_empty() {
                return Err(GraphError::EmptyCapabilities(v.id));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn cr(id: u32, region: Rect) -> Vertex {
        Vertex {
            id: VertexId(id),
            location: region.center(),
            attrs: VertexAttrs::CallerRegion { region },
        }
    }

    pub(crate) fn psap(id: u32, servers: u32, trunks: u32) -> Vertex {
        Vertex {
            id: VertexId(id),
            location: GeoPoint::new(0.0, 0.0),
            attrs: VertexAttrs::Psap { servers, trunks },
        }
    }

    pub(crate) fn resp(id: u32, x: f64, y: f64, caps: &[CallType]) -> Vertex {
        Vertex {
            id: VertexId(id),
            location: GeoPoint::new(x, y),
            attrs: VertexAttrs::Responder {
                units: 1,
                capabilities: Capabilities::new(caps),
            },
        }
    }

    pub(crate) fn edge(src: u32, dst: u32, semantic: EdgeSemantic) -> Edge {
        Edge {
            src: VertexId(src),
            dst: VertexId(dst),
            semantic,
        }
    }

    fn dispatch_graph() -> EscsGraph {
        use CallType::*;
        EscsGraph::new(
            vec![
                psap(0, 1, 1),
                cr(1, Rect::new(0.0, 0.0, 10_000.0, 10_000.0)),
                resp(10, 3000.0, 0.0, &[Law]),
                resp(11, 1000.0, 0.0, &[Fire, Ems]),
                resp(12, 0.0, 1000.0, &[Fire, Ems]),
            ],
            vec![
                edge(1, 0, EdgeSemantic::Call),
                edge(0, 10, EdgeSemantic::Dispatch),
                edge(0, 11, EdgeSemantic::Dispatch),
                edge(0, 12, EdgeSemantic::Dispatch),
            ],
        )
        .unwrap()
    }

    #[test]
    fn capability_filter_dominates_distance() {
        let g = dispatch_graph();
        let origin = GeoPoint::new(0.0, 0.0);
        assert_eq!(
            g.nearest_responder(VertexId(0), &origin, CallType::Law).unwrap(),
            VertexId(10)
        );
    }

    #[test]
    fn equidistant_responders_pick_lower_id() {
        let g = dispatch_graph();
        let origin = GeoPoint::new(0.0, 0.0);
        assert_eq!(
            g.nearest_responder(VertexId(0), &origin, CallType::Fire).unwrap(),
            VertexId(11)
        );
    }

    #[test]
    fn collocated_incident_picks_that_responder() {
        let g = dispatch_graph();
        let at = GeoPoint::new(0.0, 1000.0);
        assert_eq!(
            g.nearest_responder(VertexId(0), &at, CallType::Ems).unwrap(),
            VertexId(12)
        );
    }

    #[test]
    fn nearest_responder_errors() {
        let g = dispatch_graph();
        let p = GeoPoint::new(0.0, 0.0);
        assert_eq!(
            g.nearest_responder(VertexId(1), &p, CallType::Law),
            Err(GraphError::NotAPsap(VertexId(1)))
        );
        assert_eq!(
            g.nearest_responder(VertexId(99), &p, CallType::Law),
            Err(GraphError::UnknownVertex(VertexId(99)))
        );
    }

    #[test]
    fn missing_coverage_is_rejected() {
        let err = EscsGraph::new(
            vec![
                psap(0, 1, 1),
                cr(1, Rect::new(0.0, 0.0, 1.0, 1.0)),
                resp(2, 0.0, 0.0, &[CallType::Law]),
            ],
            vec![edge(1, 0, EdgeSemantic::Call), edge(0, 2, EdgeSemantic::Dispatch)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            GraphError::MissingDispatchCoverage {
                psap: VertexId(0),
                call_type: CallType::Fire
            }
        );
    }

    fn two_region_graph() -> EscsGraph {
        EscsGraph::new(
            vec![
                psap(0, 1, 1),
                cr(2, Rect::new(0.0, 0.0, 1.0, 1.0)),
                cr(1, Rect::new(1.0, 0.0, 2.0, 1.0)),
                resp(3, 0.0, 0.0, &CallType::ALL),
            ],
            vec![
                edge(2, 0, EdgeSemantic::Call),
                edge(1, 0, EdgeSemantic::Call),
                edge(0, 3, EdgeSemantic::Dispatch),
            ],
        )
        .unwrap()
    }

    #[test]
    fn locate_region_interior_boundary_outside() {
        let g = two_region_graph();
        assert_eq!(g.locate_region(&GeoPoint::new(0.5, 0.5)).unwrap(), VertexId(2));
        assert_eq!(g.locate_region(&GeoPoint::new(1.5, 0.5)).unwrap(), VertexId(1));
        // shared edge x = 1 goes to the lower id
        assert_eq!(g.locate_region(&GeoPoint::new(1.0, 0.5)).unwrap(), VertexId(1));
        assert!(matches!(
            g.locate_region(&GeoPoint::new(5.0, 0.5)),
            Err(GraphError::OutsideRegions(_))
        ));
    }

    #[test]
    fn overlapping_regions_are_rejected() {
        let err = EscsGraph::new(
            vec![
                psap(0, 1, 1),
                cr(1, Rect::new(0.0, 0.0, 1.0, 1.0)),
                cr(2, Rect::new(0.5, 0.0, 2.0, 1.0)),
                resp(3, 0.0, 0.0, &CallType::ALL),
            ],
            vec![
                edge(1, 0, EdgeSemantic::Call),
                edge(2, 0, EdgeSemantic::Call),
                edge(0, 3, EdgeSemantic::Dispatch),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::OverlappingRegions { .. }));
    }

    #[test]
    fn edge_semantics_must_match_kinds() {
        let err = EscsGraph::new(
            vec![psap(0, 1, 1), resp(1, 0.0, 0.0, &CallType::ALL)],
            vec![edge(0, 1, EdgeSemantic::Call)],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::EdgeKindMismatch { .. }));
    }

    #[test]
    fn dangling_and_duplicate() {
        let err = EscsGraph::new(vec![psap(0, 1, 1)], vec![edge(5, 0, EdgeSemantic::Call)]).unwrap_err();
        assert!(matches!(err, GraphError::DanglingEdge { .. }));
        let err = EscsGraph::new(vec![psap(0, 1, 1), psap(0, 1, 1)], vec![]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateVertex(VertexId(0)));
    }

    #[test]
    fn caller_region_needs_one_call_path() {
        let err = EscsGraph::new(vec![cr(1, Rect::new(0.0, 0.0, 1.0, 1.0))], vec![]).unwrap_err();
        assert_eq!(
            err,
            GraphError::CallPathCount {
                id: VertexId(1),
                count: 0
            }
        );
    }

    #[test]
    fn capabilities_parse_and_display() {
        let c: Capabilities = "FIRE, EMS".parse().unwrap();
        assert!(c.contains(CallType::Fire) && c.contains(CallType::Ems));
        assert!(!c.contains(CallType::Law));
        assert_eq!(c.to_string(), "FIRE,EMS");
        assert!("POLICE".parse::<Capabilities>().is_err());
    }
}

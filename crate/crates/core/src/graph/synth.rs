//! Synthetic network construction.

use rand::Rng;

use super::{Capabilities, CallType, Edge, EdgeSemantic, EscsGraph, GraphError, Vertex, VertexAttrs, VertexId};
use crate::geo::{GeoPoint, Rect};
use crate::rng::{substream, DOMAIN_NETWORK};

/// Parameters of a synthetic ESCS network.
///
/// Caller regions tile `bounds` as a `grid_cols` x `grid_rows` grid and are
/// split between PSAPs in vertical stripes. Responder stations are placed
/// uniformly at random in `bounds`. Every PSAP can dispatch to every
/// responder and receives status from every responder.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub grid_cols: u32,
    pub grid_rows: u32,
    pub psaps: u32,
    /// Fire stations, each serving FIRE and EMS calls.
    pub fire_ems_stations: u32,
    /// Police stations, serving LAW calls.
    pub law_stations: u32,
    pub servers: u32,
    pub trunks: u32,
    pub fire_units: u32,
    pub law_units: u32,
    pub bounds: Rect,
    pub seed: u64,
}

impl NetworkSpec {
    /// A Seattle-sized single-PSAP network: 34 fire/EMS stations, 5 police
    /// stations, 6 call takers and 16 trunks over a 14 km x 25 km box.
    pub fn seattle_like(seed: u64) -> Self {
        NetworkSpec {
            grid_cols: 4,
            grid_rows: 4,
            psaps: 1,
            fire_ems_stations: 34,
            law_stations: 5,
            servers: 6,
            trunks: 16,
            fire_units: 2,
            law_units: 8,
            bounds: Rect::new(0.0, 0.0, 14_000.0, 25_000.0),
            seed,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: &str| Err(GraphError::InvalidSpec(msg.to_string()));
        if self.bounds.is_degenerate() {
            return bad("bounding box has zero area");
        }
        if self.grid_cols == 0 || self.grid_rows == 0 {
            return bad("caller-region grid must be at least 1x1");
        }
        if self.psaps == 0 {
            return bad("at least one PSAP is required");
        }
        if self.fire_ems_stations == 0 || self.law_stations == 0 {
            return bad("at least one fire/EMS and one police station are required");
        }
        if self.fire_units == 0 || self.law_units == 0 {
            return bad("responder stations need at least one unit");
        }
        if self.servers == 0 || self.trunks < self.servers {
            return bad("PSAP staffing needs servers >= 1 and trunks >= servers");
        }
        Ok(())
    }
}

/// Build the network described by `spec`. Identical specs give identical
/// graphs.
///
/// Vertex ids: PSAPs first, then caller regions in row-major order, then
/// fire/EMS stations, then police stations.
pub fn synthesize_network(spec: &NetworkSpec) -> Result<EscsGraph, GraphError> {
    spec.validate()?;
    let b = spec.bounds;
    let cols = spec.grid_cols;
    let rows = spec.grid_rows;
    let mut rng = substream(spec.seed, DOMAIN_NETWORK, 0);

    let grid_x = |c: u32| {
        if c == cols {
            b.xmax
        } else {
            b.xmin + b.width() * f64::from(c) / f64::from(cols)
        }
    };
    let grid_y = |r: u32| {
        if r == rows {
            b.ymax
        } else {
            b.ymin + b.height() * f64::from(r) / f64::from(rows)
        }
    };
    let psap_of_col = |c: u32| (u64::from(c) * u64::from(spec.psaps) / u64::from(cols)) as u32;

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut next_id = 0u32;

    for p in 0..spec.psaps {
        let stripe: Vec<u32> = (0..cols).filter(|&c| psap_of_col(c) == p).collect();
        let location = match (stripe.first(), stripe.last()) {
            (Some(&first), Some(&last)) => {
                Rect::new(grid_x(first), b.ymin, grid_x(last + 1), b.ymax).center()
            }
            _ => b.center(),
        };
        vertices.push(Vertex {
            id: VertexId(next_id),
            location,
            attrs: VertexAttrs::Psap {
                servers: spec.servers,
                trunks: spec.trunks,
            },
        });
        next_id += 1;
    }

    for r in 0..rows {
        for c in 0..cols {
            let region = Rect::new(grid_x(c), grid_y(r), grid_x(c + 1), grid_y(r + 1));
            let id = VertexId(next_id);
            next_id += 1;
            vertices.push(Vertex {
                id,
                location: region.center(),
                attrs: VertexAttrs::CallerRegion { region },
            });
            edges.push(Edge {
                src: id,
                dst: VertexId(psap_of_col(c)),
                semantic: EdgeSemantic::Call,
            });
        }
    }

    let stations = [
        (spec.fire_ems_stations, spec.fire_units, Capabilities::new(&[CallType::Fire, CallType::Ems])),
        (spec.law_stations, spec.law_units, Capabilities::new(&[CallType::Law])),
    ];
    let first_responder = next_id;
    for (count, units, capabilities) in stations {
        for _ in 0..count {
            let location = GeoPoint::new(
                rng.random_range(b.xmin..b.xmax),
                rng.random_range(b.ymin..b.ymax),
            );
            vertices.push(Vertex {
                id: VertexId(next_id),
                location,
                attrs: VertexAttrs::Responder { units, capabilities },
            });
            next_id += 1;
        }
    }

    for p in 0..spec.psaps {
        for r in first_responder..next_id {
            edges.push(Edge {
                src: VertexId(p),
                dst: VertexId(r),
                semantic: EdgeSemantic::Dispatch,
            });
        }
    }
    for r in first_responder..next_id {
        for p in 0..spec.psaps {
            edges.push(Edge {
                src: VertexId(r),
                dst: VertexId(p),
                semantic: EdgeSemantic::Status,
            });
        }
    }

    EscsGraph::new(vertices, edges)
}

//! GraphML reading and writing.
//!
//! Node data keys: `type` (`CALR`, `PSAP`, `RESP`), `x`, `y`, `servers`,
//! `trunks`, `units`, `capability`, `xmin`, `ymin`, `xmax`, `ymax`.
//! Edge data key: `semantic` (`CALL`, `DISPATCH`, `STATUS`).
//! `<data>` elements refer to `<key>` declarations by id; the declared
//! `attr.name` is what gets matched. Undeclared keys are matched by id.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{Capabilities, Edge, EdgeSemantic, EscsGraph, GraphError, Vertex, VertexAttrs, VertexId};
use crate::geo::{GeoPoint, Rect};

const NODE_KEYS: [&str; 11] = [
    "type", "x", "y", "servers", "trunks", "units", "capability", "xmin", "ymin", "xmax", "ymax",
];
const EDGE_KEYS: [&str; 1] = ["semantic"];

pub fn parse_graphml(text: &str) -> Result<EscsGraph, GraphError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| GraphError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(GraphError::Xml(format!(
            "expected <graphml> root, found <{}>",
            root.tag_name().name()
        )));
    }

    // key id -> attr.name
    let mut key_names: HashMap<&str, &str> = HashMap::new();
    for key in root.children().filter(|n| n.has_tag_name_local("key")) {
        if let Some(id) = key.attribute("id") {
            key_names.insert(id, key.attribute("attr.name").unwrap_or(id));
        }
    }

    let graph = root
        .children()
        .find(|n| n.has_tag_name_local("graph"))
        .ok_or_else(|| GraphError::Xml("missing <graph> element".into()))?;

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for node in graph.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "node" => vertices.push(parse_node(node, &key_names)?),
            "edge" => edges.push(parse_edge(node, &key_names)?),
            _ => {}
        }
    }
    EscsGraph::new(vertices, edges)
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for roxmltree::Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}

fn collect_data<'a>(
    node: roxmltree::Node<'a, '_>,
    key_names: &HashMap<&str, &'a str>,
    known: &[&str],
    element: &str,
) -> HashMap<&'a str, String> {
    let mut data = HashMap::new();
    for d in node.children().filter(|n| n.has_tag_name_local("data")) {
        let Some(key) = d.attribute("key") else { continue };
        let name = key_names.get(key).copied().unwrap_or(key);
        if known.contains(&name) {
            data.insert(name, d.text().unwrap_or("").trim().to_string());
        } else {
            log::warn!("{element}: ignoring unknown data key {name:?}");
        }
    }
    data
}

struct Fields<'a> {
    element: String,
    data: HashMap<&'a str, String>,
}

impl Fields<'_> {
    fn required<T: FromStr>(&self, key: &str) -> Result<T, GraphError> {
        let raw = self.data.get(key).ok_or_else(|| GraphError::MissingAttribute {
            element: self.element.clone(),
            key: key.to_string(),
        })?;
        raw.parse().map_err(|_| GraphError::InvalidAttribute {
            element: self.element.clone(),
            key: key.to_string(),
            value: raw.clone(),
        })
    }
}

fn parse_node(node: roxmltree::Node<'_, '_>, key_names: &HashMap<&str, &str>) -> Result<Vertex, GraphError> {
    let raw_id = node.attribute("id").ok_or_else(|| GraphError::MissingAttribute {
        element: "node".into(),
        key: "id".into(),
    })?;
    let element = format!("node {raw_id}");
    let id = raw_id.parse::<u32>().map_err(|_| GraphError::InvalidAttribute {
        element: element.clone(),
        key: "id".into(),
        value: raw_id.into(),
    })?;
    let fields = Fields {
        data: collect_data(node, key_names, &NODE_KEYS, &element),
        element,
    };

    let kind: String = fields.required("type")?;
    let location = GeoPoint::new(fields.required("x")?, fields.required("y")?);
    let attrs = match kind.as_str() {
        "CALR" => VertexAttrs::CallerRegion {
            region: Rect::new(
                fields.required("xmin")?,
                fields.required("ymin")?,
                fields.required("xmax")?,
                fields.required("ymax")?,
            ),
        },
        "PSAP" => VertexAttrs::Psap {
            servers: fields.required("servers")?,
            trunks: fields.required("trunks")?,
        },
        "RESP" => {
            let caps: String = fields.required("capability")?;
            VertexAttrs::Responder {
                units: fields.required("units")?,
                capabilities: caps.parse::<Capabilities>()?,
            }
        }
        other => return Err(GraphError::UnknownVertexKind(other.to_string())),
    };
    Ok(Vertex {
        id: VertexId(id),
        location,
        attrs,
    })
}

fn parse_edge(node: roxmltree::Node<'_, '_>, key_names: &HashMap<&str, &str>) -> Result<Edge, GraphError> {
    let endpoint = |key: &str| -> Result<VertexId, GraphError> {
        let raw = node.attribute(key).ok_or_else(|| GraphError::MissingAttribute {
            element: "edge".into(),
            key: key.into(),
        })?;
        raw.parse::<u32>()
            .map(VertexId)
            .map_err(|_| GraphError::InvalidAttribute {
                element: "edge".into(),
                key: key.into(),
                value: raw.into(),
            })
    };
    let src = endpoint("source")?;
    let dst = endpoint("target")?;
    let fields = Fields {
        data: collect_data(node, key_names, &EDGE_KEYS, &format!("edge {src}->{dst}")),
        element: format!("edge {src}->{dst}"),
    };
    let semantic: String = fields.required("semantic")?;
    let semantic = match semantic.as_str() {
        "CALL" => EdgeSemantic::Call,
        "DISPATCH" => EdgeSemantic::Dispatch,
        "STATUS" => EdgeSemantic::Status,
        other => return Err(GraphError::UnknownEdgeSemantic(other.to_string())),
    };
    Ok(Edge { src, dst, semantic })
}

/// Serialize a graph as GraphML. Output is a pure function of the graph.
pub fn write_graphml(graph: &EscsGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for key in NODE_KEYS {
        let ty = match key {
            "type" | "capability" => "string",
            "servers" | "trunks" | "units" => "int",
            _ => "double",
        };
        let _ = writeln!(out, "  <key id=\"{key}\" for=\"node\" attr.name=\"{key}\" attr.type=\"{ty}\"/>");
    }
    for key in EDGE_KEYS {
        let _ = writeln!(out, "  <key id=\"{key}\" for=\"edge\" attr.name=\"{key}\" attr.type=\"string\"/>");
    }
    out.push_str("  <graph id=\"escs\" edgedefault=\"directed\">\n");
    for v in graph.vertices() {
        let _ = writeln!(out, "    <node id=\"{}\">", v.id);
        data(&mut out, "type", v.kind().code());
        data(&mut out, "x", v.location.x);
        data(&mut out, "y", v.location.y);
        match &v.attrs {
            VertexAttrs::CallerRegion { region } => {
                data(&mut out, "xmin", region.xmin);
                data(&mut out, "ymin", region.ymin);
                data(&mut out, "xmax", region.xmax);
                data(&mut out, "ymax", region.ymax);
            }
            VertexAttrs::Psap { servers, trunks } => {
                data(&mut out, "servers", servers);
                data(&mut out, "trunks", trunks);
            }
            VertexAttrs::Responder {
                units,
                capabilities,
            } => {
                data(&mut out, "units", units);
                data(&mut out, "capability", capabilities);
            }
        }
        out.push_str("    </node>\n");
    }
    for e in graph.edges() {
        let _ = writeln!(out, "    <edge source=\"{}\" target=\"{}\">", e.src, e.dst);
        data(&mut out, "semantic", e.semantic.code());
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn data(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "      <data key=\"{key}\">{value}</data>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CallType;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="node" attr.name="type" attr.type="string"/>
  <key id="d1" for="node" attr.name="x" attr.type="double"/>
  <key id="d2" for="node" attr.name="y" attr.type="double"/>
  <graph edgedefault="directed">
    <node id="0"><data key="d0">PSAP</data><data key="d1">0</data><data key="d2">0</data>
      <data key="servers">2</data><data key="trunks">4</data></node>
    <node id="1"><data key="d0">CALR</data><data key="d1">50</data><data key="d2">50</data>
      <data key="xmin">0</data><data key="ymin">0</data><data key="xmax">100</data><data key="ymax">100</data>
      <data key="colour">red</data></node>
    <node id="2"><data key="d0">RESP</data><data key="d1">10</data><data key="d2">10</data>
      <data key="units">3</data><data key="capability">LAW,FIRE,EMS</data></node>
    <edge source="1" target="0"><data key="semantic">CALL</data></edge>
    <edge source="0" target="2"><data key="semantic">DISPATCH</data></edge>
    <edge source="2" target="0"><data key="semantic">STATUS</data></edge>
  </graph>
</graphml>"#;

    #[test]
    fn minimal_document_parses() {
        let g = parse_graphml(MINIMAL).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edges().len(), 3);
        let p = g.vertex(VertexId(0)).unwrap();
        assert_eq!(p.attrs, VertexAttrs::Psap { servers: 2, trunks: 4 });
        let r = g.vertex(VertexId(2)).unwrap();
        assert!(r.capabilities().unwrap().contains(CallType::Ems));
    }

    #[test]
    fn trunks_below_servers_is_an_error() {
        let doc = MINIMAL.replace(">2</data><data key=\"trunks\">4<", ">6</data><data key=\"trunks\">5<");
        let err = parse_graphml(&doc).unwrap_err();
        assert!(err.to_string().contains("trunks < servers"), "{err}");
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(parse_graphml("<graphml><graph>"), Err(GraphError::Xml(_))));
    }

    #[test]
    fn unknown_kind_and_missing_attribute() {
        let doc = MINIMAL.replace(">RESP<", ">TOWER<");
        assert_eq!(
            parse_graphml(&doc).unwrap_err(),
            GraphError::UnknownVertexKind("TOWER".into())
        );
        let doc = MINIMAL.replace("<data key=\"units\">3</data>", "");
        assert!(matches!(
            parse_graphml(&doc).unwrap_err(),
            GraphError::MissingAttribute { ref key, .. } if key == "units"
        ));
    }

    #[test]
    fn dangling_edge_is_an_error() {
        let doc = MINIMAL.replace("source=\"2\" target=\"0\"", "source=\"7\" target=\"0\"");
        assert!(matches!(parse_graphml(&doc).unwrap_err(), GraphError::DanglingEdge { .. }));
    }

    #[test]
    fn written_document_reparses_identically() {
        let g = parse_graphml(MINIMAL).unwrap();
        let text = write_graphml(&g);
        assert_eq!(parse_graphml(&text).unwrap(), g);
    }
}

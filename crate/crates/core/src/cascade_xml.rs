//! Cascade XML interchange.
//!
//! The accepted document subset, in rough EBNF (attribute order is free,
//! standard XML whitespace/comments apply):
//!
//! ```text
//! document := cascade
//! cascade  := <cascade width=UINT height=UINT> stage+ </cascade>
//! stage    := <stage threshold=REAL> stump+ </stage>
//! stump    := <stump threshold=REAL left=REAL right=REAL> rect{2,3} </stump>
//! rect     := <rect x=UINT y=UINT w=UINT h=UINT weight=REAL/>
//! ```
//!
//! `UINT` is a decimal unsigned integer; `REAL` is a decimal floating-point
//! literal stored as a 32-bit value. Rect coordinates are in base-window
//! units and must stay inside the `width`×`height` window.
//!
//! Only depth-1 stumps are representable. Multi-node trees — a `<tree>`
//! element, or `<stump>`/`<node>` elements nested inside a stump — are
//! recognized and rejected as unsupported rather than misparsed.
//!
//! [`serialize_cascade`] writes this same subset, printing reals with the
//! shortest decimal text that parses back to the identical 32-bit value, so
//! parse → serialize → parse is a fixed point.

use crate::error::Error;
use crate::haar::{Cascade, HaarFeature, Stage, Stump, WeightedRect};
use crate::Result;

fn schema(element: &str, msg: impl Into<String>) -> Error {
    Error::Schema { element: element.to_string(), msg: msg.into() }
}

fn attr<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str> {
    node.attribute(name)
        .ok_or_else(|| schema(node.tag_name().name(), format!("missing attribute '{name}'")))
}

fn attr_u32(node: roxmltree::Node, name: &str) -> Result<u32> {
    let text = attr(node, name)?;
    text.parse::<u32>().map_err(|_| {
        schema(
            node.tag_name().name(),
            format!("attribute '{name}' must be an unsigned integer, got '{text}'"),
        )
    })
}

fn attr_f32(node: roxmltree::Node, name: &str) -> Result<f32> {
    let text = attr(node, name)?;
    let v = text.parse::<f32>().map_err(|_| {
        schema(node.tag_name().name(), format!("attribute '{name}' must be a real number, got '{text}'"))
    })?;
    if !v.is_finite() {
        return Err(schema(
            node.tag_name().name(),
            format!("attribute '{name}' must be finite, got '{text}'"),
        ));
    }
    Ok(v)
}

fn element_children<'a, 'i>(
    node: roxmltree::Node<'a, 'i>,
) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> {
    node.children().filter(|c| c.is_element())
}

const TREE_MSG: &str =
    "multi-node trees (depth > 1) are not supported; only depth-1 stumps are representable";

fn parse_rect(node: roxmltree::Node, window_w: u32, window_h: u32) -> Result<WeightedRect> {
    let r = WeightedRect {
        x: attr_u32(node, "x")?,
        y: attr_u32(node, "y")?,
        w: attr_u32(node, "w")?,
        h: attr_u32(node, "h")?,
        weight: attr_f32(node, "weight")?,
    };
    if r.w == 0 || r.h == 0 {
        return Err(schema("rect", "rect must have positive width and height"));
    }
    if r.x + r.w > window_w || r.y + r.h > window_h {
        return Err(schema(
            "rect",
            format!(
                "rect {}x{}+{}+{} leaves the {window_w}x{window_h} base window",
                r.w, r.h, r.x, r.y
            ),
        ));
    }
    Ok(r)
}

fn parse_stump(node: roxmltree::Node, window_w: u32, window_h: u32) -> Result<Stump> {
    let mut rects = Vec::new();
    for child in element_children(node) {
        match child.tag_name().name() {
            "rect" => rects.push(parse_rect(child, window_w, window_h)?),
            "stump" | "node" | "tree" => return Err(Error::unsupported(TREE_MSG)),
            other => return Err(schema(other, "only <rect> children are allowed in a stump")),
        }
    }
    if !(2..=3).contains(&rects.len()) {
        return Err(schema(
            "stump",
            format!("a feature needs 2 or 3 <rect> children, found {}", rects.len()),
        ));
    }
    Ok(Stump {
        feature: HaarFeature { rects },
        threshold: attr_f32(node, "threshold")?,
        left: attr_f32(node, "left")?,
        right: attr_f32(node, "right")?,
    })
}

fn parse_stage(node: roxmltree::Node, window_w: u32, window_h: u32) -> Result<Stage> {
    let mut stumps = Vec::new();
    for child in element_children(node) {
        match child.tag_name().name() {
            "stump" => stumps.push(parse_stump(child, window_w, window_h)?),
            "tree" => return Err(Error::unsupported(TREE_MSG)),
            other => return Err(schema(other, "only <stump> children are allowed in a stage")),
        }
    }
    if stumps.is_empty() {
        return Err(schema("stage", "a stage needs at least one <stump>"));
    }
    Ok(Stage { threshold: attr_f32(node, "threshold")?, stumps })
}

/// Parses a cascade document. Malformed XML yields a parse error with line
/// and column; well-formed XML that strays from the subset yields a schema
/// error naming the offending element.
pub fn parse_cascade(text: &str) -> Result<Cascade> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::Parse { line: pos.row as usize, col: pos.col as usize, msg: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "cascade" {
        return Err(schema(root.tag_name().name(), "expected root element <cascade>"));
    }
    let window_w = attr_u32(root, "width")?;
    let window_h = attr_u32(root, "height")?;
    if window_w == 0 || window_h == 0 {
        return Err(schema("cascade", "base window must be nonzero"));
    }
    let mut stages = Vec::new();
    for child in element_children(root) {
        match child.tag_name().name() {
            "stage" => stages.push(parse_stage(child, window_w, window_h)?),
            "tree" => return Err(Error::unsupported(TREE_MSG)),
            other => return Err(schema(other, "only <stage> children are allowed in a cascade")),
        }
    }
    if stages.is_empty() {
        return Err(schema("cascade", "a cascade needs at least one <stage>"));
    }
    let cascade = Cascade { window_width: window_w, window_height: window_h, stages };
    cascade.validate()?;
    Ok(cascade)
}

pub fn read_cascade(path: &std::path::Path) -> Result<Cascade> {
    let text = std::fs::read_to_string(path)?;
    parse_cascade(&text)
}

/// Serializes a cascade into the documented subset.
pub fn serialize_cascade(cascade: &Cascade) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<cascade width=\"{}\" height=\"{}\">\n",
        cascade.window_width, cascade.window_height
    ));
    for stage in &cascade.stages {
        out.push_str(&format!("  <stage threshold=\"{}\">\n", stage.threshold));
        for stump in &stage.stumps {
            out.push_str(&format!(
                "    <stump threshold=\"{}\" left=\"{}\" right=\"{}\">\n",
                stump.threshold, stump.left, stump.right
            ));
            for r in &stump.feature.rects {
                out.push_str(&format!(
                    "      <rect x=\"{}\" y=\"{}\" w=\"{}\" h=\"{}\" weight=\"{}\"/>\n",
                    r.x, r.y, r.w, r.h, r.weight
                ));
            }
            out.push_str("    </stump>\n");
        }
        out.push_str("  </stage>\n");
    }
    out.push_str("</cascade>\n");
    out
}

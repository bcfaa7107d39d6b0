use std::path::Path;

use super::{component_labels, PatchGraph};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::util::write_atomic;

/// One `src dst` line per edge.
pub fn write_edge_list<T: Scalar>(g: &PatchGraph<T>, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(g.num_edges() * 8);
    for &(s, d) in g.edges() {
        out.push_str(&format!("{s} {d}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// CSV `node_id,slide_tag,component,x,y` with one row per node.
pub fn write_node_table<T: Scalar>(
    g: &PatchGraph<T>,
    positions: &[[f64; 2]],
    path: &Path,
) -> Result<()> {
    if positions.len() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "{} positions for {} nodes",
            positions.len(),
            g.num_nodes()
        )));
    }
    let labels = component_labels(g);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(["node_id", "slide_tag", "component", "x", "y"]).map_err(csv_err)?;
    for (u, p) in positions.iter().enumerate() {
        w.write_record([
            u.to_string(),
            g.slide_tags()[u].clone(),
            labels[u].to_string(),
            p[0].to_string(),
            p[1].to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    write_atomic(path, &bytes)
}

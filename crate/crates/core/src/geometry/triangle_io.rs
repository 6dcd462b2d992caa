//! Reader for Triangle-style ASCII `.node` / `.ele` files.

use super::{CellKind, Domain, Mesh, MeshError, Point};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn parse<T: std::str::FromStr>(file: &'static str, line: usize, s: &str) -> Result<T, MeshError> {
    s.parse().map_err(|_| MeshError::Parse {
        file,
        line,
        message: format!("cannot parse '{s}'"),
    })
}

/// Parses the two files into a triangle mesh. Node numbering may start at 0
/// or 1; the first node line decides. Periodic identification applies when
/// `domain` has periodic axes.
pub fn load_unstructured_tri_mesh(node_text: &str, ele_text: &str, domain: Domain) -> Result<Mesh, MeshError> {
    let mut nodes = data_lines(node_text);
    let (hline, header) = nodes.next().ok_or(MeshError::Parse {
        file: "node",
        line: 0,
        message: "empty file".into(),
    })?;
    let count: usize = parse("node", hline, header[0])?;
    if header.len() > 1 {
        let dim: usize = parse("node", hline, header[1])?;
        if dim != 2 {
            return Err(MeshError::Parse {
                file: "node",
                line: hline,
                message: format!("expected dimension 2, got {dim}"),
            });
        }
    }
    let mut vertices = Vec::with_capacity(count);
    let mut base = None;
    for (line, f) in nodes.by_ref().take(count) {
        if f.len() < 3 {
            return Err(MeshError::Parse {
                file: "node",
                line,
                message: "expected '<index> <x> <y>'".into(),
            });
        }
        let id: usize = parse("node", line, f[0])?;
        let b = *base.get_or_insert(id);
        if id != b + vertices.len() {
            return Err(MeshError::Parse {
                file: "node",
                line,
                message: format!("node index {id} out of sequence"),
            });
        }
        vertices.push(Point::new(parse("node", line, f[1])?, parse("node", line, f[2])?, 0.0));
    }
    if vertices.len() != count {
        return Err(MeshError::Parse {
            file: "node",
            line: 0,
            message: format!("header announces {count} nodes, found {}", vertices.len()),
        });
    }
    let base = base.unwrap_or(0);

    let mut eles = data_lines(ele_text);
    let (hline, header) = eles.next().ok_or(MeshError::Parse {
        file: "ele",
        line: 0,
        message: "empty file".into(),
    })?;
    let ntri: usize = parse("ele", hline, header[0])?;
    if header.len() > 1 {
        let per: usize = parse("ele", hline, header[1])?;
        if per != 3 {
            return Err(MeshError::Parse {
                file: "ele",
                line: hline,
                message: format!("only 3-node triangles are supported, got {per}"),
            });
        }
    }
    let mut cells = Vec::with_capacity(ntri);
    for (line, f) in eles.take(ntri) {
        if f.len() < 4 {
            return Err(MeshError::Parse {
                file: "ele",
                line,
                message: "expected '<index> <n1> <n2> <n3>'".into(),
            });
        }
        let mut tri = Vec::with_capacity(3);
        for s in &f[1..4] {
            let raw: usize = parse("ele", line, s)?;
            if raw < base || raw - base >= vertices.len() {
                return Err(MeshError::DanglingIndex {
                    cell: cells.len(),
                    index: raw,
                });
            }
            tri.push(raw - base);
        }
        let (a, b, c) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        let signed = (b - a).x * (c - a).y - (b - a).y * (c - a).x;
        if signed <= 0.0 {
            return Err(MeshError::Inverted {
                cell: cells.len(),
                line,
                signed_area: 0.5 * signed,
            });
        }
        cells.push(tri);
    }
    if cells.len() != ntri {
        return Err(MeshError::Parse {
            file: "ele",
            line: 0,
            message: format!("header announces {ntri} triangles, found {}", cells.len()),
        });
    }
    Mesh::from_cells(CellKind::Triangle, &vertices, &cells, domain)
}

/// Serializes triangles back into `.node` / `.ele` text (1-based).
pub fn write_triangle_files(vertices: &[Point], cells: &[[usize; 3]]) -> (String, String) {
    use std::fmt::Write;
    let mut node = format!("{} 2 0 0\n", vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        let _ = writeln!(node, "{} {:.17e} {:.17e}", i + 1, v.x, v.y);
    }
    let mut ele = format!("{} 3 0\n", cells.len());
    for (i, c) in cells.iter().enumerate() {
        let _ = writeln!(ele, "{} {} {} {}", i + 1, c[0] + 1, c[1] + 1, c[2] + 1);
    }
    (node, ele)
}

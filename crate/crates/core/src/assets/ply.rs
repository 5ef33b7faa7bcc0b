//! ASCII PLY reader.

use std::path::Path;

use super::{assemble, AssetError, Mesh, RawFace};
use crate::geometry::{Vec2, Vec3};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> AssetError {
    AssetError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

enum Property {
    Scalar(String),
    List(String),
}

struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

pub(crate) fn parse_ply(bytes: &[u8], path: &Path) -> Result<Mesh, AssetError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| AssetError::UnsupportedFormat("PLY body is not ascii (binary PLY is not supported)".into()))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let Some((lineno, line)) = lines.next() else {
            return Err(parse_err(path, 0, "missing end_header"));
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", fmt, ..] => return Err(AssetError::UnsupportedFormat(format!("PLY format '{fmt}'"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| parse_err(path, lineno, "bad element count"))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            ["property", "list", _, _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(path, lineno, "property before element"))?
                .props
                .push(Property::List(name.to_string())),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(path, lineno, "property before element"))?
                .props
                .push(Property::Scalar(name.to_string())),
            _ => return Err(parse_err(path, lineno, format!("unexpected header line '{line}'"))),
        }
    }

    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut uvs = Vec::new();
    let mut faces = Vec::new();
    let mut has_normals = false;
    let mut has_uvs = false;

    for el in &elements {
        for _ in 0..el.count {
            let (lineno, line) = lines.next().ok_or_else(|| parse_err(path, 0, format!("truncated '{}' data", el.name)))?;
            let mut toks = line.split_whitespace();
            let mut scalars: Vec<(&str, f64)> = Vec::new();
            let mut lists: Vec<(&str, Vec<f64>)> = Vec::new();
            let next_num = |toks: &mut std::str::SplitWhitespace| -> Result<f64, AssetError> {
                let t = toks.next().ok_or_else(|| parse_err(path, lineno, "missing value"))?;
                t.parse::<f64>().map_err(|_| parse_err(path, lineno, format!("bad number '{t}'")))
            };
            for prop in &el.props {
                match prop {
                    Property::Scalar(name) => scalars.push((name, next_num(&mut toks)?)),
                    Property::List(name) => {
                        let n = next_num(&mut toks)?;
                        if n < 0.0 || n.fract() != 0.0 {
                            return Err(parse_err(path, lineno, "bad list length"));
                        }
                        let vals = (0..n as usize).map(|_| next_num(&mut toks)).collect::<Result<Vec<_>, _>>()?;
                        lists.push((name, vals));
                    }
                }
            }
            let get = |key: &str| scalars.iter().find(|(n, _)| *n == key).map(|(_, v)| *v);
            match el.name.as_str() {
                "vertex" => {
                    let (Some(x), Some(y), Some(z)) = (get("x"), get("y"), get("z")) else {
                        return Err(parse_err(path, lineno, "vertex without x/y/z"));
                    };
                    vertices.push(Vec3::new(x, y, z));
                    if let (Some(nx), Some(ny), Some(nz)) = (get("nx"), get("ny"), get("nz")) {
                        has_normals = true;
                        let n = Vec3::new(nx, ny, nz).normalized().ok_or_else(|| parse_err(path, lineno, "zero normal"))?;
                        normals.push(n);
                    }
                    let uv = get("u")
                        .zip(get("v"))
                        .or_else(|| get("s").zip(get("t")))
                        .or_else(|| get("texture_u").zip(get("texture_v")));
                    if let Some((u, v)) = uv {
                        has_uvs = true;
                        uvs.push(Vec2::new(u, v));
                    }
                }
                "face" => {
                    let idx = lists
                        .iter()
                        .find(|(n, _)| *n == "vertex_indices" || *n == "vertex_index")
                        .map(|(_, v)| v)
                        .ok_or_else(|| parse_err(path, lineno, "face without vertex_indices"))?;
                    if idx.len() < 3 {
                        return Err(parse_err(path, lineno, "face needs at least 3 corners"));
                    }
                    let mut ids = Vec::with_capacity(idx.len());
                    for &i in idx {
                        if i < 0.0 || i.fract() != 0.0 || i as usize >= el_count(&elements, "vertex") {
                            return Err(parse_err(path, lineno, format!("vertex index {i} out of range")));
                        }
                        ids.push(i as u32);
                    }
                    for k in 1..ids.len() - 1 {
                        faces.push([ids[0], ids[k], ids[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }

    if vertices.is_empty() || faces.is_empty() {
        return Err(AssetError::InvalidMesh("mesh has no vertices or faces".into()));
    }
    if has_normals && normals.len() != vertices.len() || has_uvs && uvs.len() != vertices.len() {
        return Err(parse_err(path, 0, "per-vertex attributes present on only some vertices"));
    }
    let raw = faces
        .into_iter()
        .map(|v| RawFace { vertices: v, normals: has_normals.then_some(v), uvs: has_uvs.then_some(v) })
        .collect();
    Ok(assemble(vertices, normals, uvs, raw))
}

fn el_count(elements: &[Element], name: &str) -> usize {
    elements.iter().find(|e| e.name == name).map_or(0, |e| e.count)
}

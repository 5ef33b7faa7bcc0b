//! Wavefront OBJ reader (`v`, `vt`, `vn`, `f` records).

use std::path::Path;

use super::{assemble, AssetError, Mesh, RawFace};
use crate::geometry::{Vec2, Vec3};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> AssetError {
    AssetError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn floats<const N: usize>(tokens: &[&str], path: &Path, line: usize) -> Result<[f64; N], AssetError> {
    if tokens.len() < N {
        return Err(parse_err(path, line, format!("expected {N} numbers")));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(tokens) {
        *o = t.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number '{t}'")))?;
        if !o.is_finite() {
            return Err(parse_err(path, line, "non-finite number"));
        }
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index against `count`.
fn resolve(token: &str, count: usize, path: &Path, line: usize) -> Result<u32, AssetError> {
    let raw: i64 = token.parse().map_err(|_| parse_err(path, line, format!("bad index '{token}'")))?;
    let idx = match raw {
        0 => None,
        r if r > 0 => Some(r - 1),
        r => Some(count as i64 + r),
    };
    match idx {
        Some(i) if i >= 0 && (i as usize) < count => Ok(i as u32),
        _ => Err(parse_err(path, line, format!("index {raw} out of range (have {count})"))),
    }
}

pub(crate) fn parse_obj(bytes: &[u8], path: &Path) -> Result<Mesh, AssetError> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(path, 0, "file is not UTF-8"))?;
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut uvs = Vec::new();
    let mut faces = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        let rest: Vec<&str> = tokens.collect();
        match tag {
            "v" => {
                let [x, y, z] = floats::<3>(&rest, path, lineno)?;
                vertices.push(Vec3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = floats::<2>(&rest, path, lineno)?;
                uvs.push(Vec2::new(u, v));
            }
            "vn" => {
                let [x, y, z] = floats::<3>(&rest, path, lineno)?;
                let n = Vec3::new(x, y, z).normalized().ok_or_else(|| parse_err(path, lineno, "zero-length normal"))?;
                normals.push(n);
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(path, lineno, "face needs at least 3 corners"));
                }
                let mut corners = Vec::with_capacity(rest.len());
                for tok in &rest {
                    let mut parts = tok.split('/');
                    let v = resolve(parts.next().unwrap_or(""), vertices.len(), path, lineno)?;
                    let t = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, uvs.len(), path, lineno)?),
                        _ => None,
                    };
                    let n = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, normals.len(), path, lineno)?),
                        _ => None,
                    };
                    corners.push((v, t, n));
                }
                // fan triangulation
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    let all_t = tri.iter().all(|c| c.1.is_some());
                    let all_n = tri.iter().all(|c| c.2.is_some());
                    faces.push(RawFace {
                        vertices: tri.map(|c| c.0),
                        uvs: all_t.then(|| tri.map(|c| c.1.unwrap_or(0))),
                        normals: all_n.then(|| tri.map(|c| c.2.unwrap_or(0))),
                    });
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() || faces.is_empty() {
        return Err(AssetError::InvalidMesh("mesh has no vertices or faces".into()));
    }
    Ok(assemble(vertices, normals, uvs, faces))
}

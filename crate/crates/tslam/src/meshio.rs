//! Wavefront OBJ and OFF meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tslam_core::geometry::Mesh;
use tslam_core::math::Vec3;

use crate::error::{Result, WorkbenchError};

fn parse_f64(tok: Option<&str>, path: &Path, line: usize) -> Result<f64> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .ok_or_else(|| WorkbenchError::format(path, format!("line {line}: expected a number")))
}

/// Reads vertices and polygonal faces; texture and normal indices are
/// ignored, negative indices count from the end.
pub fn parse_obj(text: &str, path: &Path) -> Result<Mesh> {
    let mut verts = Vec::new();
    let mut polys: Vec<Vec<u32>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = parse_f64(it.next(), path, ln + 1)?;
                let y = parse_f64(it.next(), path, ln + 1)?;
                let z = parse_f64(it.next(), path, ln + 1)?;
                verts.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| WorkbenchError::format(path, format!("line {}: bad face index `{tok}`", ln + 1)))?;
                    let idx = if i < 0 { verts.len() as i64 + i } else { i - 1 };
                    if idx < 0 || idx >= verts.len() as i64 {
                        return Err(WorkbenchError::format(path, format!("line {}: face index {i} out of range", ln + 1)));
                    }
                    poly.push(idx as u32);
                }
                if poly.len() < 3 {
                    return Err(WorkbenchError::format(path, format!("line {}: face with fewer than 3 vertices", ln + 1)));
                }
                polys.push(poly);
            }
            _ => {}
        }
    }
    Ok(Mesh::from_polygons(verts, &polys)?)
}

pub fn parse_off(text: &str, path: &Path) -> Result<Mesh> {
    let mut toks = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace());
    let head = toks.next();
    let first = match head {
        Some("OFF") => toks.next(),
        Some(h) if h.starts_with("OFF") => Some(&h[3..]).filter(|s| !s.is_empty()).or_else(|| toks.next()),
        other => other,
    };
    let num = |tok: Option<&str>| -> Result<f64> {
        tok.and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| WorkbenchError::format(path, "truncated or malformed OFF"))
    };
    let nv = num(first)? as usize;
    let nf = num(toks.next())? as usize;
    num(toks.next())?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        verts.push(Vec3::new(num(toks.next())?, num(toks.next())?, num(toks.next())?));
    }
    let mut polys = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = num(toks.next())? as usize;
        let mut p = Vec::with_capacity(k);
        for _ in 0..k {
            let i = num(toks.next())? as usize;
            if i >= nv {
                return Err(WorkbenchError::format(path, format!("face index {i} out of range")));
            }
            p.push(i as u32);
        }
        polys.push(p);
    }
    Ok(Mesh::from_polygons(verts, &polys)?)
}

/// Loads `.obj` or `.off` by extension.
pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(|e| WorkbenchError::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(e) if e == "obj" => parse_obj(&text, path),
        Some(e) if e == "off" => parse_off(&text, path),
        _ => Err(WorkbenchError::format(path, "expected a .obj or .off file")),
    }
}

pub fn obj_string(mesh: &Mesh, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:.9} {:.9} {:.9}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_obj(path: &Path, mesh: &Mesh, comments: &[String]) -> Result<()> {
    fs::write(path, obj_string(mesh, comments)).map_err(|e| WorkbenchError::io(path, e))
}

pub fn write_off(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices().len(), mesh.face_count());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:.9} {:.9} {:.9}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    fs::write(path, s).map_err(|e| WorkbenchError::io(path, e))
}

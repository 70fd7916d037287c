//! Closed, outward-wound primitive meshes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::mesh::Mesh;
use crate::math::{cos, sin, Vec3};

pub fn box_mesh(min: Vec3, max: Vec3) -> Mesh {
    let v = |x: bool, y: bool, z: bool| {
        Vec3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let quads = [
        [0, 3, 2, 1], // -z
        [4, 5, 6, 7], // +z
        [0, 1, 5, 4], // -y
        [2, 3, 7, 6], // +y
        [0, 4, 7, 3], // -x
        [1, 2, 6, 5], // +x
    ];
    let mut faces = Vec::with_capacity(12);
    for q in quads {
        faces.push([q[0], q[1], q[2]]);
        faces.push([q[0], q[2], q[3]]);
    }
    Mesh::from_triangles(vertices, faces).expect("box faces are valid")
}

/// Subdivided icosahedron with all vertices on the sphere.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> Mesh {
    let t = (1.0 + crate::math::sqrt(5.0)) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized().unwrap())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = ((verts[a as usize] + verts[b as usize]) * 0.5)
                    .normalized()
                    .unwrap();
                verts.push(m);
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.into_iter().map(|v| center + v * radius).collect();
    Mesh::from_triangles(vertices, faces).expect("icosphere faces are valid")
}

/// Surface of revolution about the z axis.
///
/// `profile` lists `(r, z)` points. When `closed` is false the polyline must
/// start and end on the axis (`r == 0`); those endpoints become poles. When
/// `closed` is true the profile is a loop that stays off the axis.
/// The result is re-wound outward if needed.
pub fn revolve(center: Vec3, profile: &[(f64, f64)], closed: bool, segments: usize) -> Mesh {
    assert!(profile.len() >= 2 && segments >= 3);
    let mut vertices = Vec::new();
    // ring index per profile point; poles collapse to one vertex
    let mut ring_start = Vec::with_capacity(profile.len());
    for &(r, z) in profile {
        if r <= 0.0 {
            ring_start.push((vertices.len() as u32, true));
            vertices.push(center + Vec3::new(0.0, 0.0, z));
        } else {
            ring_start.push((vertices.len() as u32, false));
            for s in 0..segments {
                let a = core::f64::consts::TAU * s as f64 / segments as f64;
                vertices.push(center + Vec3::new(r * cos(a), r * sin(a), z));
            }
        }
    }
    let idx = |p: usize, s: usize| -> u32 {
        let (start, pole) = ring_start[p];
        if pole {
            start
        } else {
            start + (s % segments) as u32
        }
    };
    let mut faces = Vec::new();
    let count = if closed { profile.len() } else { profile.len() - 1 };
    for p in 0..count {
        let q = (p + 1) % profile.len();
        for s in 0..segments {
            let a = idx(p, s);
            let b = idx(p, s + 1);
            let c = idx(q, s + 1);
            let d = idx(q, s);
            if a != b {
                faces.push([a, b, c]);
            }
            if c != d {
                faces.push([a, c, d]);
            }
        }
    }
    let mesh = Mesh::from_triangles(vertices, faces).expect("revolved faces are valid");
    if mesh.signed_volume() < 0.0 {
        flip(&mesh)
    } else {
        mesh
    }
}

/// Reverses the winding of every face.
pub fn flip(mesh: &Mesh) -> Mesh {
    let faces = mesh.faces().iter().map(|f| [f[0], f[2], f[1]]).collect();
    Mesh::from_triangles(mesh.vertices().to_vec(), faces).expect("flipped mesh is valid")
}

pub fn cylinder(center: Vec3, radius: f64, height: f64, segments: usize) -> Mesh {
    let (z0, z1) = (-height / 2.0, height / 2.0);
    revolve(
        center,
        &[(0.0, z0), (radius, z0), (radius, z1), (0.0, z1)],
        false,
        segments,
    )
}

pub fn torus(center: Vec3, major: f64, minor: f64, segments: usize, tube_segments: usize) -> Mesh {
    let profile: Vec<(f64, f64)> = (0..tube_segments)
        .map(|i| {
            let a = core::f64::consts::TAU * i as f64 / tube_segments as f64;
            (major + minor * cos(a), minor * sin(a))
        })
        .collect();
    revolve(center, &profile, true, segments)
}

/// Open-top cup: outer radius, total height, wall thickness, base thickness.
/// The base sits at `center.z - height / 2`.
pub fn cup(center: Vec3, radius: f64, height: f64, wall: f64, base: f64, segments: usize) -> Mesh {
    let z0 = -height / 2.0;
    let inner = radius - wall;
    revolve(
        center,
        &[
            (0.0, z0),
            (radius, z0),
            (radius, z0 + height),
            (inner, z0 + height),
            (inner, z0 + base),
            (0.0, z0 + base),
        ],
        false,
        segments,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn primitives_are_closed_and_outward() {
        let meshes = [
            icosphere(Vec3::ZERO, 0.3, 2),
            cylinder(Vec3::ZERO, 0.2, 0.4, 32),
            torus(Vec3::ZERO, 0.3, 0.08, 32, 16),
            cup(Vec3::ZERO, 0.2, 0.4, 0.09, 0.09, 32),
        ];
        for m in &meshes {
            assert!(m.is_watertight(), "{:?}", m.diagnostics());
            assert!(m.signed_volume() > 0.0);
        }
    }

    #[test]
    fn torus_volume_close_to_analytic() {
        let m = torus(Vec3::ZERO, 0.3, 0.08, 128, 64);
        let analytic = 2.0 * PI * PI * 0.3 * 0.08 * 0.08;
        assert!((m.signed_volume() - analytic).abs() / analytic < 0.01);
    }
}

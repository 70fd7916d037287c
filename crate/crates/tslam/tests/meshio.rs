use std::path::Path;

use tslam::meshio::*;
use tslam_core::geometry::primitives::{box_mesh, icosphere};
use tslam_core::math::Vec3;

#[test]
fn obj_round_trip_is_exact_to_print_precision() {
    let m = icosphere(Vec3::new(0.1, -0.2, 0.05), 0.3, 2);
    let back = parse_obj(&obj_string(&m, &["hello".into()]), Path::new("m.obj")).unwrap();
    assert_eq!(back.faces(), m.faces());
    for (a, b) in back.vertices().iter().zip(m.vertices()) {
        assert!((*a - *b).norm() < 1e-8);
    }
}

#[test]
fn off_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = icosphere(Vec3::ZERO, 0.4, 1);
    let p = dir.path().join("m.off");
    write_off(&p, &m).unwrap();
    let back = read_mesh(&p).unwrap();
    assert_eq!(back.faces(), m.faces());
    assert_eq!(back.vertices().len(), m.vertices().len());
}

#[test]
fn obj_polygons_slashes_and_negative_indices() {
    let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4/4/1\nf -4 -2 -1\n";
    let m = parse_obj(text, Path::new("q.obj")).unwrap();
    assert_eq!(m.face_count(), 3);
    assert!(m.faces().iter().all(|f| f.iter().all(|&i| i < 4)));
}

#[test]
fn bad_inputs_are_reported_with_lines() {
    let e = parse_obj("v 0 0 0\nf 1 2 3\n", Path::new("b.obj")).unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
    assert!(parse_obj("v 0 0\n", Path::new("b.obj")).is_err());
    assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n", Path::new("b.off")).is_err());
    assert!(read_mesh(Path::new("mesh.stl")).is_err());
}

#[test]
fn off_accepts_comments_and_polygons() {
    let b = box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
    let mut s = format!("OFF # header\n{} 1 0\n", b.vertices().len());
    for v in b.vertices() {
        s += &format!("{} {} {}\n", v.x, v.y, v.z);
    }
    s += "4 0 1 2 3\n";
    let m = parse_off(&s, Path::new("t.off")).unwrap();
    assert_eq!(m.face_count(), 2);
}

use std::collections::BTreeMap;
use std::path::Path;

use proptest::prelude::*;
use tslam::formats::*;
use tslam::WorkbenchError;
use tslam_core::geometry::VoxelGrid;
use tslam_core::math::{Aabb, Vec3};
use tslam_core::nn::{ParamSet, Tensor};

fn grid_from(n: usize, bits: &[bool]) -> VoxelGrid {
    let mut g = VoxelGrid::workspace(n);
    for (i, &b) in bits.iter().enumerate().take(n * n * n) {
        if b {
            g.set(i % n, (i / n) % n, i / (n * n), true);
        }
    }
    g
}

proptest! {
    #[test]
    fn grids_round_trip(n in 1usize..9, bits in prop::collection::vec(any::<bool>(), 512)) {
        let g = grid_from(n, &bits);
        let back = decode_grid(&encode_grid(&g), Path::new("x.tvox")).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn checkpoints_round_trip_through_f32(vals in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let mut p = ParamSet::new();
        p.add("a.w", Tensor::new(&[vals.len()], vals.clone()).unwrap());
        p.add("b", Tensor::new(&[1, 1], vec![0.5]).unwrap());
        let ck = Checkpoint {
            digest: "0123456789abcdef".into(),
            meta: BTreeMap::from([("k".to_string(), "v = w".to_string())]),
            params: p,
        };
        let back = decode_checkpoint(POLICY_MAGIC, &encode_checkpoint(POLICY_MAGIC, &ck), Path::new("x")).unwrap();
        prop_assert_eq!(&back.digest, &ck.digest);
        prop_assert_eq!(&back.meta, &ck.meta);
        prop_assert_eq!(back.params.names(), ck.params.names());
        for (a, b) in back.params.tensors()[0].data.iter().zip(&vals) {
            prop_assert_eq!(*a, *b as f32 as f64);
        }
        // a second trip is lossless
        let again = decode_checkpoint(POLICY_MAGIC, &encode_checkpoint(POLICY_MAGIC, &back), Path::new("x")).unwrap();
        prop_assert_eq!(again, back);
    }
}

#[test]
fn grid_keeps_its_box() {
    let mut g = VoxelGrid::new(4, Aabb::new(Vec3::new(-2.0, 0.0, 1.0), Vec3::new(2.0, 4.0, 5.0))).unwrap();
    g.set(1, 2, 3, true);
    let back = decode_grid(&encode_grid(&g), Path::new("x")).unwrap();
    assert_eq!(back.bbox(), g.bbox());
    assert!(back.get(1, 2, 3));
}

fn sample_checkpoint() -> Checkpoint {
    let mut p = ParamSet::new();
    p.add("w", Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    Checkpoint {
        digest: "d".into(),
        meta: BTreeMap::new(),
        params: p,
    }
}

#[test]
fn corrupt_files_are_format_errors() {
    let bytes = encode_checkpoint(RECON_MAGIC, &sample_checkpoint());
    let p = Path::new("c.trec");
    for cut in [0, 3, 8, 12, bytes.len() - 1] {
        let e = decode_checkpoint(RECON_MAGIC, &bytes[..cut], p).unwrap_err();
        assert!(matches!(e, WorkbenchError::Format { .. }), "cut {cut}: {e}");
        assert_eq!(e.exit_code(), 1);
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(decode_checkpoint(RECON_MAGIC, &extra, p).is_err());
    // a reconstruction checkpoint is not a policy
    assert!(decode_checkpoint(POLICY_MAGIC, &bytes, p).is_err());
    let mut v2 = bytes;
    v2[4] = 2;
    assert!(decode_checkpoint(RECON_MAGIC, &v2, p).unwrap_err().to_string().contains("version"));
    assert!(decode_grid(b"TVOX", p).is_err());
}

#[test]
fn missing_checkpoint_maps_to_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let e = read_checkpoint(&dir.path().join("none.tpol"), POLICY_MAGIC).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    let path = dir.path().join("p.tpol");
    write_checkpoint(&path, POLICY_MAGIC, &sample_checkpoint()).unwrap();
    assert_eq!(read_checkpoint(&path, POLICY_MAGIC).unwrap(), sample_checkpoint());
}

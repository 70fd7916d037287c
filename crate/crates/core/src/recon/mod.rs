//! Shape completion from partial occupancy: a strided 3D conv feature
//! pyramid queried by trilinear interpolation and decoded point-wise.

mod sample;
mod train;

pub use sample::{make_training_sample, make_training_sample_with, shell, touch_mask, TrainingSample};
pub use train::{train_recon, ReconLogRow, ReconShape};

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{marching_cubes, Mesh, ScalarField, VoxelGrid};
use crate::math::{floor, Vec3};
use crate::nn::{sigmoid, ParamSet, Tape, Tensor, TrilinearPlan, Var};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub resolution: usize,
    /// Channels per pyramid stage; stage `k` has resolution `N / 2^k`.
    pub channels: Vec<usize>,
    pub hidden: usize,
    pub hidden_layers: usize,
    /// Query points per training sample.
    pub points: usize,
    /// Std of the near-surface point offsets, in voxel edges.
    pub surface_sigma: f64,
    pub coverage_min: f64,
    pub coverage_max: f64,
    /// Touch masks only reveal cells within this many layers of the
    /// surface; 0 allows every occupied cell.
    pub mask_depth: usize,
    /// Largest touch-patch radius, in voxel edges.
    pub patch_radius: f64,
    pub epochs: usize,
    /// Samples per optimizer step.
    pub batch: usize,
    pub lr: f64,
    pub max_grad_norm: f64,
    /// Held-out samples generated per held-out shape.
    pub heldout_samples: usize,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            resolution: 32,
            channels: vec![8, 16, 32, 32],
            hidden: 128,
            hidden_layers: 3,
            points: 2048,
            surface_sigma: 1.5,
            coverage_min: 0.05,
            coverage_max: 0.60,
            mask_depth: 1,
            patch_radius: 4.0,
            epochs: 40,
            batch: 4,
            lr: 1e-3,
            max_grad_norm: 1.0,
            heldout_samples: 2,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(alloc::format!("reconstruction: {why}")));
        if self.channels.len() < 2 {
            return bad("at least two pyramid stages");
        }
        if self.resolution >> (self.channels.len() - 1) < 2 || self.resolution % (1 << (self.channels.len() - 1)) != 0 {
            return bad("resolution must halve cleanly down to at least 2 per stage");
        }
        if self.channels.contains(&0) || self.hidden == 0 {
            return bad("zero width layer");
        }
        if !(0.0 <= self.coverage_min && self.coverage_min <= self.coverage_max && self.coverage_max <= 1.0) {
            return bad("coverage range must lie in [0, 1]");
        }
        if self.points == 0 || self.batch == 0 || !(self.lr > 0.0) || self.patch_radius < 1.0 {
            return bad("points, batch, lr and patch radius must be positive");
        }
        Ok(())
    }

    pub fn stage_resolution(&self, stage: usize) -> usize {
        self.resolution >> stage
    }

    pub fn feature_dim(&self) -> usize {
        self.channels.iter().sum()
    }
}

/// Per-stage feature lattices `[1, r, r, r, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    pub levels: Vec<Tensor>,
}

/// Lattice coordinate of normalized position `p` on stage `stage`. Node `i`
/// of stage `k` sits at `(i + 2^-(k+1)) / r_k`, the centre of its receptive
/// field in the input grid.
pub fn lattice_coord(p: f64, res: usize, stage: usize) -> f64 {
    let off = 1.0 / (2u64 << stage) as f64;
    (p * res as f64 - off).clamp(0.0, (res - 1) as f64)
}

/// Trilinear plan over a batch of lattices. `points` pairs a sample index
/// with a normalized position; positions outside `[0, 1]³` are clamped.
pub fn trilinear_plan(points: &[(usize, Vec3)], res: usize, stage: usize) -> TrilinearPlan {
    let mut plan = TrilinearPlan {
        corners: Vec::with_capacity(points.len()),
        weights: Vec::with_capacity(points.len()),
    };
    let r3 = res * res * res;
    for &(b, p) in points {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for (a, v) in p.to_array().into_iter().enumerate() {
            let x = lattice_coord(v, res, stage);
            let i0 = (floor(x) as usize).min(res.saturating_sub(2));
            base[a] = i0;
            frac[a] = if res == 1 { 0.0 } else { x - i0 as f64 };
        }
        let mut cs = [0u32; 8];
        let mut ws = [0.0; 8];
        for j in 0..8 {
            let d = [j & 1, (j >> 1) & 1, (j >> 2) & 1];
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                w *= if d[a] == 1 { frac[a] } else { 1.0 - frac[a] };
                idx[a] = (base[a] + d[a]).min(res - 1);
            }
            cs[j] = (b * r3 + (idx[2] * res + idx[1]) * res + idx[0]) as u32;
            ws[j] = w;
        }
        plan.corners.push(cs);
        plan.weights.push(ws);
    }
    plan
}

/// Decoder output on a lattice plus its extracted surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Probabilities at the lattice cell centres, x fastest.
    pub field: Vec<f64>,
    /// Cells whose probability exceeds 0.5.
    pub grid: VoxelGrid,
    pub mesh: Mesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconNet {
    pub cfg: ReconConfig,
    pub params: ParamSet,
}

impl ReconNet {
    pub fn new(cfg: ReconConfig, seed: u64) -> Result<ReconNet> {
        cfg.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut p = ParamSet::new();
        let mut c_in = 1;
        for (k, &c) in cfg.channels.iter().enumerate() {
            p.add_conv(&mut rng, &alloc::format!("enc{k}"), 3, c_in, c);
            c_in = c;
        }
        let mut inp = cfg.feature_dim();
        for l in 0..cfg.hidden_layers {
            p.add_linear(&mut rng, &alloc::format!("dec{l}"), inp, cfg.hidden, 1.0);
            inp = cfg.hidden;
        }
        p.add_linear(&mut rng, &alloc::format!("dec{}", cfg.hidden_layers), inp, 1, 1.0);
        Ok(ReconNet { cfg, params: p })
    }

    pub fn from_params(cfg: ReconConfig, params: ParamSet) -> Result<ReconNet> {
        let fresh = ReconNet::new(cfg, 0)?;
        fresh.params.check_layout(&params)?;
        Ok(ReconNet { cfg: fresh.cfg, params })
    }

    /// Stacks grids into a `[B, N, N, N, 1]` tensor.
    pub fn grid_tensor(&self, grids: &[&VoxelGrid]) -> Result<Tensor> {
        let n = self.cfg.resolution;
        let mut t = Tensor::zeros(&[grids.len(), n, n, n, 1]);
        for (b, g) in grids.iter().enumerate() {
            if g.resolution() != n {
                return Err(Error::ResolutionMismatch {
                    expected: n,
                    found: g.resolution(),
                });
            }
            for idx in g.occupied() {
                t.data[b * n * n * n + idx] = 1.0;
            }
        }
        Ok(t)
    }

    /// Pyramid stages on the tape.
    pub fn stages(&self, tape: &mut Tape, x: Var) -> Vec<Var> {
        let mut out = Vec::with_capacity(self.cfg.channels.len());
        let mut h = x;
        for k in 0..self.cfg.channels.len() {
            let w = tape.param_named(&alloc::format!("enc{k}.w"));
            let b = tape.param_named(&alloc::format!("enc{k}.b"));
            let stride = if k == 0 { 1 } else { 2 };
            h = tape.conv3d(h, w, b, stride, 1);
            h = tape.relu(h);
            out.push(h);
        }
        out
    }

    /// Per-point logits `[P, 1]` from stage features and matching plans.
    pub fn decode(&self, tape: &mut Tape, stages: &[Var], plans: &[Arc<TrilinearPlan>]) -> Var {
        let feats: Vec<Var> = stages
            .iter()
            .zip(plans)
            .map(|(&s, p)| tape.trilinear(s, p.clone()))
            .collect();
        let mut h = tape.concat(&feats);
        self.decoder_tail(tape, &mut h);
        h
    }

    fn decoder_tail(&self, tape: &mut Tape, h: &mut Var) {
        for l in 0..=self.cfg.hidden_layers {
            let w = tape.param_named(&alloc::format!("dec{l}.w"));
            let b = tape.param_named(&alloc::format!("dec{l}.b"));
            *h = tape.linear(*h, w, b);
            if l < self.cfg.hidden_layers {
                *h = tape.relu(*h);
            }
        }
    }

    /// Plans for every stage over a batch of points.
    pub fn plans(&self, points: &[(usize, Vec3)]) -> Vec<Arc<TrilinearPlan>> {
        (0..self.cfg.channels.len())
            .map(|k| Arc::new(trilinear_plan(points, self.cfg.stage_resolution(k), k)))
            .collect()
    }

    pub fn encode(&self, x: &VoxelGrid) -> Result<FeaturePyramid> {
        let t = self.grid_tensor(&[x])?;
        let mut tape = Tape::new(&self.params);
        let xi = tape.input(t);
        let stages = self.stages(&mut tape, xi);
        Ok(FeaturePyramid {
            levels: stages.iter().map(|&s| tape.value(s).clone()).collect(),
        })
    }

    /// Decoded probabilities at normalized positions.
    pub fn query_many(&self, pyr: &FeaturePyramid, points: &[Vec3]) -> Vec<f64> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(4096) {
            let pts: Vec<(usize, Vec3)> = chunk.iter().map(|&p| (0, p)).collect();
            let plans = self.plans(&pts);
            let mut tape = Tape::new(&self.params);
            let lv: Vec<Var> = pyr.levels.iter().map(|l| tape.input(l.clone())).collect();
            let logits = self.decode(&mut tape, &lv, &plans);
            out.extend(tape.value(logits).data.iter().map(|&z| sigmoid(z)));
        }
        out
    }

    pub fn query(&self, pyr: &FeaturePyramid, p: Vec3) -> f64 {
        self.query_many(pyr, &[p])[0]
    }

    /// Decodes an `out_res³` lattice of cell centres and extracts the 0.5
    /// level set. The field is padded with zeros so surfaces close at the
    /// workspace boundary.
    pub fn reconstruct(&self, x: &VoxelGrid, out_res: usize) -> Result<Reconstruction> {
        if out_res == 0 {
            return Err(Error::InvalidArgument("output resolution must be positive".into()));
        }
        let pyr = self.encode(x)?;
        let inv = 1.0 / out_res as f64;
        let mut pts = Vec::with_capacity(out_res * out_res * out_res);
        for k in 0..out_res {
            for j in 0..out_res {
                for i in 0..out_res {
                    pts.push(Vec3::new((i as f64 + 0.5) * inv, (j as f64 + 0.5) * inv, (k as f64 + 0.5) * inv));
                }
            }
        }
        let field = self.query_many(&pyr, &pts);
        if field.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decoded occupancy field".into()));
        }
        let mut grid = VoxelGrid::new(out_res, x.bbox())?;
        for (idx, &v) in field.iter().enumerate() {
            if v > 0.5 {
                grid.set_index(idx, true);
            }
        }
        let bbox = x.bbox();
        let edge = bbox.extent().x * inv;
        let sf = ScalarField::new([out_res; 3], bbox.min + Vec3::splat(0.5 * edge), edge, field.clone())?;
        let mesh = marching_cubes(&sf.padded(0.0), 0.5)?;
        Ok(Reconstruction { field, grid, mesh })
    }
}

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::sample::{make_training_sample, TrainingSample};
use super::{ReconConfig, ReconNet};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, VoxelGrid};
use crate::math::Vec3;
use crate::nn::{clip_grad_norm, sigmoid, Adam, Tape};
use crate::rng::{derive_seed, rng_from_seed};

/// A corpus shape for reconstruction training. When `masks` is non-empty,
/// inputs are drawn from it (e.g. grids observed by an exploration policy)
/// instead of synthetic touch patterns.
#[derive(Debug, Clone)]
pub struct ReconShape {
    pub mesh: Arc<Mesh>,
    pub grid: Arc<VoxelGrid>,
    pub masks: Vec<VoxelGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReconLogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub heldout_loss: f64,
    pub heldout_accuracy: f64,
    /// Accuracy of always predicting the held-out majority label.
    pub heldout_baseline: f64,
}

fn sample_for(shape: &ReconShape, cfg: &ReconConfig, seed: u64) -> Result<TrainingSample> {
    let mut s = make_training_sample(&shape.mesh, &shape.grid, cfg, seed)?;
    if !shape.masks.is_empty() {
        let mut rng = rng_from_seed(derive_seed(seed, "mask-pick", 0));
        s.input = shape.masks[rng.random_range(0..shape.masks.len())].clone();
        s.coverage = f64::NAN;
    }
    Ok(s)
}

/// Mean BCE, accuracy and the number of points over a group of samples,
/// with gradients when `train` is set.
pub(crate) fn run_batch(
    net: &ReconNet,
    batch: &[&TrainingSample],
    train: bool,
) -> Result<(f64, f64, Option<Vec<crate::nn::Tensor>>)> {
    let grids: Vec<&VoxelGrid> = batch.iter().map(|s| &s.input).collect();
    let x = net.grid_tensor(&grids)?;
    let mut pts: Vec<(usize, Vec3)> = Vec::new();
    let mut labels = Vec::new();
    for (b, s) in batch.iter().enumerate() {
        pts.extend(s.points.iter().map(|&p| (b, p)));
        labels.extend_from_slice(&s.labels);
    }
    let plans = net.plans(&pts);
    let mut tape = Tape::new(&net.params);
    let xi = tape.input(x);
    let stages = net.stages(&mut tape, xi);
    let logits = net.decode(&mut tape, &stages, &plans);
    let correct = tape
        .value(logits)
        .data
        .iter()
        .zip(&labels)
        .filter(|(&z, &y)| (sigmoid(z) > 0.5) == (y > 0.5))
        .count();
    let loss = tape.bce_logits(logits, labels.clone());
    let lv = tape.value(loss).item();
    if !lv.is_finite() {
        return Err(Error::NonFinite(alloc::format!("reconstruction loss {lv}")));
    }
    let grads = train.then(|| tape.backward(loss));
    Ok((lv, correct as f64 / labels.len() as f64, grads))
}

/// Trains encoder and decoder with Adam on binary cross-entropy. Every
/// epoch draws a fresh sample per training shape. Held-out accuracy is
/// measured on fixed samples after each epoch and the best checkpoint is
/// returned.
pub fn train_recon(
    train: &[ReconShape],
    heldout: &[ReconShape],
    cfg: &ReconConfig,
    seed: u64,
    on_epoch: &mut dyn FnMut(&ReconLogRow, &ReconNet) -> Result<()>,
) -> Result<(ReconNet, Vec<ReconLogRow>)> {
    if train.is_empty() || heldout.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut net = ReconNet::new(cfg.clone(), derive_seed(seed, "recon-init", 0))?;
    let mut log = Vec::new();
    if cfg.epochs == 0 {
        return Ok((net, log));
    }
    let mut held = Vec::new();
    for (i, s) in heldout.iter().enumerate() {
        for r in 0..cfg.heldout_samples.max(1) {
            held.push(sample_for(s, cfg, derive_seed(seed, "heldout", (i * 64 + r) as u64))?);
        }
    }
    let ones: f64 = held.iter().flat_map(|s| &s.labels).sum();
    let total = held.iter().map(|s| s.labels.len()).sum::<usize>() as f64;
    let baseline = (ones / total).max(1.0 - ones / total);

    let mut opt = Adam::new(&net.params, cfg.lr);
    let mut rng = rng_from_seed(derive_seed(seed, "recon-order", 0));
    let mut best: Option<(f64, crate::nn::ParamSet)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut samples = Vec::with_capacity(train.len());
        for &i in &order {
            let s = derive_seed(seed, "train-sample", (epoch * train.len() + i) as u64);
            samples.push(sample_for(&train[i], cfg, s)?);
        }
        let (mut loss, mut acc, mut nb) = (0.0, 0.0, 0.0);
        for chunk in samples.chunks(cfg.batch) {
            let refs: Vec<&TrainingSample> = chunk.iter().collect();
            let (l, a, g) = run_batch(&net, &refs, true)?;
            let mut g = g.expect("gradients requested");
            clip_grad_norm(&mut g, cfg.max_grad_norm);
            opt.step(&mut net.params, &g);
            loss += l;
            acc += a;
            nb += 1.0;
        }
        let (mut hl, mut ha) = (0.0, 0.0);
        for s in &held {
            let (l, a, _) = run_batch(&net, &[s], false)?;
            hl += l;
            ha += a;
        }
        let row = ReconLogRow {
            epoch,
            train_loss: loss / nb,
            train_accuracy: acc / nb,
            heldout_loss: hl / held.len() as f64,
            heldout_accuracy: ha / held.len() as f64,
            heldout_baseline: baseline,
        };
        log::debug!(
            "recon epoch {epoch}: loss {:.4} acc {:.4} held-out {:.4} (baseline {:.4})",
            row.train_loss,
            row.train_accuracy,
            row.heldout_accuracy,
            baseline
        );
        if best.as_ref().is_none_or(|(b, _)| row.heldout_accuracy > *b) {
            best = Some((row.heldout_accuracy, net.params.clone()));
        }
        on_epoch(&row, &net)?;
        log.push(row);
    }
    if let Some((_, p)) = best {
        net.params = p;
    }
    Ok((net, log))
}

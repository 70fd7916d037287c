//! The workbench commands, shared by the CLI and the integration tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use tslam_core::corpus::Split;
use tslam_core::env::ProbeSpec;
use tslam_core::eval::{evaluate_shape, explore_episodes, canonical_observed, EvalConfig, EvalShape, ShapeEval};
use tslam_core::geometry::{grid_to_blocky_mesh, sample_surface, VoxelGrid};
use tslam_core::policy::{
    train_explore, Actor, ActorCritic, HeuristicPolicy, PolicyActor, RandomPolicy, TrainLogRow, TrainShape,
};
use tslam_core::recon::{train_recon, ReconLogRow, ReconNet, ReconShape};
use tslam_core::reward::RewardVariant;
use tslam_core::rng::derive_seed;

use crate::config::RunConfig;
use crate::error::{Result, WorkbenchError};
use crate::formats::{read_checkpoint, write_checkpoint, Checkpoint, POLICY_MAGIC, RECON_MAGIC};
use crate::manifest::{import_corpus, load_shapes, write_procedural_corpus, CorpusShape, Manifest};
use crate::meshio::write_obj;

/// A configured run: where artifacts live and whether digest checks may be
/// overridden.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub cfg: RunConfig,
    pub force_digest: bool,
}

/// File-name form of a reward variant.
pub fn variant_slug(v: RewardVariant) -> &'static str {
    match v {
        RewardVariant::DiscoveryCoverage => "tslam",
        RewardVariant::NoCoverage => "no-coverage",
        RewardVariant::NoDiscovery => "no-discovery",
        RewardVariant::Knn => "knn",
        RewardVariant::Points => "points",
        RewardVariant::Contact => "contact",
        RewardVariant::Disagreement => "disagreement",
        RewardVariant::Chamfer => "chamfer",
    }
}

/// Which exploration policy to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyChoice {
    Random,
    Heuristic,
    /// Checkpoint trained with this reward variant, found in the policy
    /// directory.
    Learned(RewardVariant),
    /// Checkpoint at an explicit path.
    File(PathBuf),
}

impl FromStr for PolicyChoice {
    type Err = WorkbenchError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => PolicyChoice::Random,
            "heuristic" => PolicyChoice::Heuristic,
            _ if s.ends_with(".tpol") => PolicyChoice::File(PathBuf::from(s)),
            _ => match RewardVariant::from_str(s).or_else(|e| {
                // accept file-name forms too
                RewardVariant::ALL
                    .into_iter()
                    .find(|v| variant_slug(*v) == s)
                    .ok_or(e)
            }) {
                Ok(v) => PolicyChoice::Learned(v),
                Err(_) => {
                    return Err(WorkbenchError::Usage(format!(
                        "unknown policy `{s}` (random, heuristic, a reward variant or a .tpol path)"
                    )))
                }
            },
        })
    }
}

/// A policy ready to act, with the tag written to reports.
pub enum LoadedPolicy {
    Random,
    Heuristic,
    Learned { tag: String, net: ActorCritic },
}

impl LoadedPolicy {
    pub fn tag(&self) -> &str {
        match self {
            LoadedPolicy::Random => "random",
            LoadedPolicy::Heuristic => "heuristic",
            LoadedPolicy::Learned { tag, .. } => tag,
        }
    }

    pub fn actor(&self) -> Box<dyn Actor + '_> {
        match self {
            LoadedPolicy::Random => Box::new(RandomPolicy::new()),
            LoadedPolicy::Heuristic => Box::new(HeuristicPolicy::new()),
            LoadedPolicy::Learned { net, .. } => Box::new(PolicyActor::new(net, false)),
        }
    }
}

/// One CSV row: one held-out shape, one seed, aggregated over the poses.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub shape_id: String,
    pub policy_tag: String,
    pub poses: usize,
    pub iou_grid: f64,
    pub iou_recon: f64,
    /// Squared chamfer scaled by 100.
    pub chamfer_grid: f64,
    pub chamfer_recon: f64,
    pub nc_grid: f64,
    pub nc_recon: f64,
    pub seed: u64,
    pub config_digest: String,
    /// Observed cells in the aggregated grid (not written to the CSV).
    pub observed_cells: usize,
}

pub const EVAL_COLUMNS: [&str; 11] = [
    "shape_id",
    "policy_tag",
    "poses",
    "iou_grid",
    "iou_recon",
    "chamfer_grid",
    "chamfer_recon",
    "nc_grid",
    "nc_recon",
    "seed",
    "config_digest",
];

pub const TRAIN_COLUMNS: [&str; 9] = [
    "iter",
    "env_steps",
    "mean_reward",
    "mean_observed",
    "mean_visited",
    "policy_loss",
    "value_loss",
    "entropy",
    "config_digest",
];

pub const RECON_COLUMNS: [&str; 7] = [
    "epoch",
    "train_loss",
    "train_accuracy",
    "heldout_loss",
    "heldout_accuracy",
    "heldout_baseline",
    "config_digest",
];

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| WorkbenchError::io(dir, e))
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| WorkbenchError::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header)?;
    Ok(w)
}

fn config_meta(cfg: &RunConfig) -> Vec<(String, String)> {
    cfg.entries()
        .into_iter()
        .filter(|(k, _)| !k.starts_with("paths."))
        .map(|(k, v)| (format!("config.{k}"), v.to_string()))
        .collect()
}

/// The run configuration a checkpoint was trained with.
pub fn checkpoint_config(ck: &Checkpoint) -> Result<RunConfig> {
    RunConfig::from_pairs(
        ck.meta
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("config.").map(|k| (k, v.as_str()))),
    )
}

impl Workbench {
    pub fn new(cfg: RunConfig) -> Self {
        Workbench {
            cfg,
            force_digest: false,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.cfg.paths.corpus.clone().unwrap_or_else(|| self.out_dir().join("corpus"))
    }

    pub fn policy_path(&self, v: RewardVariant) -> PathBuf {
        let dir = self.cfg.paths.policy.clone().unwrap_or_else(|| self.out_dir());
        dir.join(format!("policy-{}.tpol", variant_slug(v)))
    }

    pub fn recon_path(&self) -> PathBuf {
        self.cfg.paths.recon.clone().unwrap_or_else(|| self.out_dir().join("recon.trec"))
    }

    fn spec(&self) -> Arc<ProbeSpec> {
        Arc::new(self.cfg.probe_spec())
    }

    fn check_digest(&self, what: &'static str, expected: &str, found: &str) -> Result<()> {
        if expected == found {
            return Ok(());
        }
        if self.force_digest {
            log::warn!("{what} digest {found} differs from {expected}; continuing (forced)");
            return Ok(());
        }
        Err(WorkbenchError::DigestMismatch {
            what,
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }

    /// Writes a procedural corpus, or imports meshes from `from`.
    pub fn make_corpus(&self, from: Option<&Path>) -> Result<Manifest> {
        let dir = self.corpus_dir();
        let seed = derive_seed(self.cfg.seed, "corpus", 0);
        let n = self.cfg.env.resolution;
        match from {
            Some(src) => import_corpus(src, &dir, seed, n),
            None => write_procedural_corpus(&dir, self.cfg.corpus.count, &self.cfg.corpus.mix, seed, n),
        }
    }

    pub fn load_corpus(&self) -> Result<(Manifest, PathBuf)> {
        let dir = self.corpus_dir();
        let m = Manifest::load(&dir)?;
        if m.resolution != self.cfg.env.resolution {
            return Err(WorkbenchError::Config(format!(
                "corpus was voxelized at {} but env.resolution is {}",
                m.resolution, self.cfg.env.resolution
            )));
        }
        Ok((m, dir))
    }

    fn split_shapes(&self, split: Split) -> Result<(Manifest, Vec<CorpusShape>)> {
        let (m, dir) = self.load_corpus()?;
        let shapes = load_shapes(&dir, m.split(split))?;
        if shapes.is_empty() {
            return Err(WorkbenchError::Core(tslam_core::Error::EmptyCorpus));
        }
        Ok((m, shapes))
    }

    /// Trains the exploration policy for the configured reward variant.
    pub fn train_explore(&self, on_row: &mut dyn FnMut(&TrainLogRow)) -> Result<PathBuf> {
        let (m, shapes) = self.split_shapes(Split::Train)?;
        let cfg = &self.cfg;
        let needs_surface = cfg.reward.variant == RewardVariant::Chamfer;
        let mut train = Vec::with_capacity(shapes.len());
        for (i, s) in shapes.iter().enumerate() {
            let surface = if needs_surface {
                let pts = sample_surface(&s.mesh, cfg.reward.samples, derive_seed(cfg.seed, "surface", i as u64))?;
                Some(Arc::new(pts.into_iter().map(|p| p.point).collect()))
            } else {
                None
            };
            train.push(TrainShape {
                grid: s.grid.clone(),
                surface,
            });
        }
        let out = self.out_dir();
        create_dir(&out)?;
        let slug = variant_slug(cfg.reward.variant);
        let digest = cfg.digest();
        let log_path = out.join(format!("train-{slug}.csv"));
        let mut w = csv_writer(&log_path, &TRAIN_COLUMNS)?;
        let t0 = Instant::now();
        let (net, _) = train_explore(
            &cfg.train,
            self.spec(),
            &train,
            derive_seed(cfg.seed, "explore", 0),
            &mut |p| {
                let r = p.row;
                w.write_record([
                    r.iter.to_string(),
                    r.env_steps.to_string(),
                    r.mean_reward.to_string(),
                    r.mean_observed.to_string(),
                    r.mean_visited.to_string(),
                    r.policy_loss.to_string(),
                    r.value_loss.to_string(),
                    r.entropy.to_string(),
                    digest.clone(),
                ])
                .and_then(|_| w.flush().map_err(csv::Error::from))
                .map_err(|e| tslam_core::Error::InvalidArgument(format!("train log: {e}")))?;
                on_row(r);
                Ok(())
            },
        )?;
        let mut meta = config_meta(cfg);
        meta.push(("corpus_digest".into(), m.digest()));
        meta.push(("variant".into(), cfg.reward.variant.tag().into()));
        meta.push(("train_seconds".into(), format!("{:.1}", t0.elapsed().as_secs_f64())));
        let path = self.policy_path(cfg.reward.variant);
        if let Some(p) = path.parent() {
            create_dir(p)?;
        }
        write_checkpoint(
            &path,
            POLICY_MAGIC,
            &Checkpoint {
                digest,
                meta: meta.into_iter().collect(),
                params: net.params,
            },
        )?;
        Ok(path)
    }

    /// Loads an exploration policy, checking its digests against this
    /// configuration (with the checkpoint's own reward variant) and corpus.
    pub fn load_policy(&self, choice: &PolicyChoice, manifest: &Manifest) -> Result<LoadedPolicy> {
        let path = match choice {
            PolicyChoice::Random => return Ok(LoadedPolicy::Random),
            PolicyChoice::Heuristic => return Ok(LoadedPolicy::Heuristic),
            PolicyChoice::Learned(v) => self.policy_path(*v),
            PolicyChoice::File(p) => p.clone(),
        };
        let ck = read_checkpoint(&path, POLICY_MAGIC)?;
        let trained = checkpoint_config(&ck)?;
        let mut expected = self.cfg.clone();
        expected.reward.variant = trained.reward.variant;
        expected.train.reward.variant = trained.reward.variant;
        self.check_digest("policy config", &expected.digest(), &ck.digest)?;
        self.check_digest("policy corpus", &manifest.digest(), ck.meta("corpus_digest", &path)?)?;
        let net = ActorCritic::from_params(trained.train.net.clone(), ck.params)?;
        let tag = match trained.reward.variant {
            RewardVariant::DiscoveryCoverage => "tslam".to_string(),
            v => v.tag().to_string(),
        };
        Ok(LoadedPolicy::Learned { tag, net })
    }

    pub fn load_recon(&self, manifest: &Manifest) -> Result<ReconNet> {
        let path = self.recon_path();
        let ck = read_checkpoint(&path, RECON_MAGIC)?;
        self.check_digest("reconstruction config", &self.cfg.digest(), &ck.digest)?;
        self.check_digest("reconstruction corpus", &manifest.digest(), ck.meta("corpus_digest", &path)?)?;
        let trained = checkpoint_config(&ck)?;
        Ok(ReconNet::from_params(trained.recon.clone(), ck.params)?)
    }

    /// Grids observed by the exploration policy on a training shape: each
    /// episode of an 8-pose sweep, the 4-pose union and the 8-pose union.
    fn policy_masks(&self, policy: &LoadedPolicy, shape: &CorpusShape, seed: u64) -> Result<Vec<VoxelGrid>> {
        let mut ec = self.cfg.eval_config();
        ec.pose_count = 8;
        let es = EvalShape {
            mesh: shape.mesh.clone(),
            grid: shape.grid.clone(),
        };
        let mut actor = policy.actor();
        let eps = explore_episodes(&self.spec(), &ec, &es, actor.as_mut(), seed)?;
        let canon: Vec<VoxelGrid> = eps.iter().map(canonical_observed).collect();
        let mut four = shape.grid.empty_like();
        let mut eight = shape.grid.empty_like();
        for (i, c) in canon.iter().enumerate() {
            if i % 2 == 0 {
                four.union_with(c);
            }
            eight.union_with(c);
        }
        let mut out = canon;
        out.push(four);
        out.push(eight);
        Ok(out)
    }

    /// Trains the reconstruction network on the training split, holding
    /// back `recon.validation` of it for checkpoint selection.
    pub fn train_recon(&self, on_row: &mut dyn FnMut(&ReconLogRow)) -> Result<PathBuf> {
        let (m, shapes) = self.split_shapes(Split::Train)?;
        let cfg = &self.cfg;
        let policy = if cfg.recon_policy_masks {
            Some(self.load_policy(&PolicyChoice::Learned(cfg.reward.variant), &m)?)
        } else {
            None
        };
        let n_val = ((shapes.len() as f64 * cfg.recon_validation).round() as usize).clamp(1, shapes.len().max(2) - 1);
        let val_flags = tslam_core::corpus::split_assignment(shapes.len(), derive_seed(cfg.seed, "recon-validation", 0));
        // split_assignment holds out a fifth; take the first `n_val` of those
        // and top up from the rest in order
        let mut val_idx: Vec<usize> = (0..shapes.len()).filter(|&i| val_flags[i] == Split::HeldOut).collect();
        val_idx.extend((0..shapes.len()).filter(|&i| val_flags[i] == Split::Train));
        val_idx.truncate(n_val);
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, s) in shapes.iter().enumerate() {
            let synthetic = ReconShape {
                mesh: s.mesh.clone(),
                grid: s.grid.clone(),
                masks: Vec::new(),
            };
            let observed = match &policy {
                Some(p) => {
                    let masks = self.policy_masks(p, s, derive_seed(cfg.seed, "recon-masks", i as u64))?;
                    Some(ReconShape {
                        masks,
                        ..synthetic.clone()
                    })
                }
                None => None,
            };
            let dst = if val_idx.contains(&i) { &mut val } else { &mut train };
            dst.push(synthetic);
            dst.extend(observed);
        }
        let out = self.out_dir();
        create_dir(&out)?;
        let digest = cfg.digest();
        let mut w = csv_writer(&out.join("recon-log.csv"), &RECON_COLUMNS)?;
        let t0 = Instant::now();
        let (net, _) = train_recon(&train, &val, &cfg.recon, derive_seed(cfg.seed, "recon", 0), &mut |r, _| {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.train_accuracy.to_string(),
                r.heldout_loss.to_string(),
                r.heldout_accuracy.to_string(),
                r.heldout_baseline.to_string(),
                digest.clone(),
            ])
            .and_then(|_| w.flush().map_err(csv::Error::from))
            .map_err(|e| tslam_core::Error::InvalidArgument(format!("recon log: {e}")))?;
            on_row(r);
            Ok(())
        })?;
        let mut meta = config_meta(cfg);
        meta.push(("corpus_digest".into(), m.digest()));
        meta.push(("train_seconds".into(), format!("{:.1}", t0.elapsed().as_secs_f64())));
        let path = self.recon_path();
        if let Some(p) = path.parent() {
            create_dir(p)?;
        }
        write_checkpoint(
            &path,
            RECON_MAGIC,
            &Checkpoint {
                digest,
                meta: meta.into_iter().collect(),
                params: net.params,
            },
        )?;
        Ok(path)
    }

    fn eval_seed(&self, s: usize) -> u64 {
        derive_seed(self.cfg.seed, "eval", s as u64)
    }

    fn mesh_dir(&self) -> PathBuf {
        self.out_dir().join("meshes")
    }

    fn export_eval_meshes(&self, shape_id: &str, tag: &str, poses: usize, seed_idx: usize, ev: &ShapeEval) -> Result<Vec<PathBuf>> {
        let dir = self.mesh_dir();
        create_dir(&dir)?;
        let digest = self.cfg.digest();
        let tag_slug = tag.trim_start_matches('-');
        let neg = if tag.starts_with('-') { "no-" } else { "" };
        let stem = format!("{shape_id}-{neg}{tag_slug}-{poses}p-s{seed_idx}-{digest}");
        let comments = [format!("config_digest {digest}"), format!("shape {shape_id} policy {tag} poses {poses}")];
        let mut out = Vec::new();
        let grid_path = dir.join(format!("{stem}-grid.obj"));
        write_obj(&grid_path, &grid_to_blocky_mesh(&ev.observed)?, &comments)?;
        out.push(grid_path);
        if let Some(r) = &ev.reconstruction {
            let p = dir.join(format!("{stem}-recon.obj"));
            write_obj(&p, &r.mesh, &comments)?;
            out.push(p);
        }
        Ok(out)
    }

    /// Evaluates one policy on every held-out shape for `eval.seeds` seeds,
    /// writing `eval-<tag>-<poses>p.csv` (and meshes when enabled).
    pub fn eval(&self, choice: &PolicyChoice, grid_only: bool) -> Result<(Vec<EvalRow>, PathBuf)> {
        let (m, shapes) = self.split_shapes(Split::HeldOut)?;
        let policy = self.load_policy(choice, &m)?;
        let recon = if grid_only { None } else { Some(self.load_recon(&m)?) };
        let ec = self.cfg.eval_config();
        let spec = self.spec();
        let digest = self.cfg.digest();
        let tag = policy.tag().to_string();
        let seeds = self.cfg.eval.seeds;
        let jobs: Vec<(usize, usize)> = (0..seeds).flat_map(|s| (0..shapes.len()).map(move |i| (s, i))).collect();
        let results: Mutex<Vec<Option<Result<EvalRow>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let run = |j: usize| -> Result<EvalRow> {
            let (s, i) = jobs[j];
            let shape = &shapes[i];
            let es = EvalShape {
                mesh: shape.mesh.clone(),
                grid: shape.grid.clone(),
            };
            let mut actor = policy.actor();
            let seed = self.eval_seed(s);
            let ev = evaluate_shape(&spec, &ec, &es, actor.as_mut(), recon.as_ref(), seed)?;
            if self.cfg.eval.export_meshes {
                self.export_eval_meshes(&shape.entry.id, &tag, ec.pose_count, s, &ev)?;
            }
            let r = ev.report;
            Ok(EvalRow {
                shape_id: shape.entry.id.clone(),
                policy_tag: tag.clone(),
                poses: ec.pose_count,
                iou_grid: r.grid.iou,
                iou_recon: r.recon.iou,
                chamfer_grid: r.grid.chamfer_l2 * 100.0,
                chamfer_recon: r.recon.chamfer_l2 * 100.0,
                nc_grid: r.grid.normal_consistency,
                nc_recon: r.recon.normal_consistency,
                seed,
                config_digest: digest.clone(),
                observed_cells: ev.observed.count(),
            })
        };
        let workers = match self.cfg.eval.workers {
            0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            w => w,
        }
        .min(jobs.len())
        .max(1);
        let work = || loop {
            let j = next.fetch_add(1, Ordering::Relaxed);
            if j >= jobs.len() {
                break;
            }
            let r = run(j);
            results.lock().expect("no worker panicked")[j] = Some(r);
        };
        if workers == 1 {
            work();
        } else {
            std::thread::scope(|sc| {
                for _ in 0..workers {
                    sc.spawn(&work);
                }
            });
        }
        let rows = results
            .into_inner()
            .expect("no worker panicked")
            .into_iter()
            .map(|r| r.expect("every job ran"))
            .collect::<Result<Vec<_>>>()?;
        let out = self.out_dir();
        create_dir(&out)?;
        let slug = match choice {
            PolicyChoice::Learned(v) => variant_slug(*v).to_string(),
            _ => tag.trim_start_matches('-').to_string(),
        };
        let path = out.join(format!("eval-{slug}-{}p.csv", ec.pose_count));
        write_eval_csv(&path, &rows)?;
        Ok((rows, path))
    }

    /// Explores one corpus shape and writes its blocky grid and
    /// reconstruction meshes (the latter only when a network is available).
    pub fn export_mesh(&self, shape_id: &str, choice: &PolicyChoice, seed_idx: usize, grid_only: bool) -> Result<Vec<PathBuf>> {
        let (m, dir) = self.load_corpus()?;
        let entry = m
            .find(shape_id)
            .ok_or_else(|| WorkbenchError::Usage(format!("no shape `{shape_id}` in the corpus")))?;
        let shape = load_shapes(&dir, [entry])?.remove(0);
        let policy = self.load_policy(choice, &m)?;
        let recon = if grid_only { None } else { Some(self.load_recon(&m)?) };
        let ec: EvalConfig = self.cfg.eval_config();
        let es = EvalShape {
            mesh: shape.mesh.clone(),
            grid: shape.grid.clone(),
        };
        let mut actor = policy.actor();
        let ev = evaluate_shape(&self.spec(), &ec, &es, actor.as_mut(), recon.as_ref(), self.eval_seed(seed_idx))?;
        self.export_eval_meshes(shape_id, policy.tag(), ec.pose_count, seed_idx, &ev)
    }
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut w = csv_writer(path, &EVAL_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.shape_id.clone(),
            r.policy_tag.clone(),
            r.poses.to_string(),
            r.iou_grid.to_string(),
            r.iou_recon.to_string(),
            r.chamfer_grid.to_string(),
            r.chamfer_recon.to_string(),
            r.nc_grid.to_string(),
            r.nc_recon.to_string(),
            r.seed.to_string(),
            r.config_digest.clone(),
        ])?;
    }
    w.flush().map_err(|e| WorkbenchError::io(path, e))
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalRow>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => WorkbenchError::missing(path, "no such report"),
        _ => WorkbenchError::Csv(e),
    })?;
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != EVAL_COLUMNS {
        return Err(WorkbenchError::format(path, "not an evaluation CSV"));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| WorkbenchError::format(path, format!("bad number `{}`", &rec[i])))
        };
        out.push(EvalRow {
            shape_id: rec[0].to_string(),
            policy_tag: rec[1].to_string(),
            poses: f(2)? as usize,
            iou_grid: f(3)?,
            iou_recon: f(4)?,
            chamfer_grid: f(5)?,
            chamfer_recon: f(6)?,
            nc_grid: f(7)?,
            nc_recon: f(8)?,
            seed: rec[9].parse().map_err(|_| WorkbenchError::format(path, "bad seed"))?,
            config_digest: rec[10].to_string(),
            observed_cells: 0,
        });
    }
    Ok(out)
}

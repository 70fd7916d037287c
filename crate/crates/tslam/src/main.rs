use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use tslam::pipeline::{read_eval_csv, PolicyChoice};
use tslam::report::{render, summarize, write_summary_csv};
use tslam::{Result, RunConfig, Workbench, WorkbenchError};

#[derive(Parser)]
#[command(name = "tslam", version, about = "Tactile-only SLAM workbench")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML, flat dotted keys or tables).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory; overrides `paths.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accept checkpoints whose config or corpus digest differs.
    #[arg(long, global = true)]
    force_digest: bool,
    /// Extra `key=value` config overrides (TOML values).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the procedural corpus (or import OBJ/OFF meshes).
    MakeCorpus {
        /// Directory of .obj / .off meshes to import instead.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Train an exploration policy with the reward variant named by --policy.
    TrainExplore {
        #[arg(long, default_value = "tslam", allow_hyphen_values = true)]
        policy: String,
    },
    /// Train the reconstruction network.
    TrainRecon,
    /// Evaluate policies on the held-out shapes and write CSV reports.
    Eval {
        /// random, heuristic, a reward variant tag or a .tpol path.
        #[arg(long, default_values_t = [String::from("tslam")], allow_hyphen_values = true)]
        policy: Vec<String>,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["4", "8"]))]
        poses: Option<String>,
        /// Score the observed grids only (no reconstruction checkpoint).
        #[arg(long)]
        grid_only: bool,
    },
    /// Write grid and reconstruction meshes for one corpus shape.
    ExportMesh {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value = "tslam", allow_hyphen_values = true)]
        policy: String,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["4", "8"]))]
        poses: Option<String>,
        /// Evaluation seed index.
        #[arg(long, default_value_t = 0)]
        seed_index: usize,
        #[arg(long)]
        grid_only: bool,
    },
    /// Summarize evaluation CSVs (default: every eval-*.csv in --out).
    Report { csv: Vec<PathBuf> },
}

fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for s in &c.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| WorkbenchError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        let t: toml::Table = format!("v = {}", v.trim())
            .parse()
            .or_else(|_| format!("v = {:?}", v.trim()).parse())
            .map_err(|_| WorkbenchError::Config(format!("`{k}`: unparsable value `{v}`")))?;
        cfg.set_key(k.trim(), &t["v"])?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.set_key("paths.out", &Value::String(out.display().to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_poses(cfg: &mut RunConfig, poses: &Option<String>) -> Result<()> {
    if let Some(p) = poses {
        cfg.set_key("eval.poses", &Value::Integer(p.parse().expect("validated by clap")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = build_config(&cli.common)?;
    match cli.cmd {
        Command::MakeCorpus { from } => {
            let wb = Workbench::new(cfg);
            let m = wb.make_corpus(from.as_deref())?;
            println!(
                "wrote {} shapes ({} held out) to {} (manifest {})",
                m.entries.len(),
                m.split(tslam_core::corpus::Split::HeldOut).count(),
                wb.corpus_dir().display(),
                m.digest()
            );
        }
        Command::TrainExplore { policy } => {
            let variant = match policy.parse::<PolicyChoice>()? {
                PolicyChoice::Learned(v) => v,
                _ => return Err(WorkbenchError::Usage("train-explore needs a reward variant tag".into())),
            };
            cfg.set_key("reward.variant", &Value::String(variant.tag().into()))?;
            let wb = Workbench {
                cfg,
                force_digest: cli.common.force_digest,
            };
            let path = wb.train_explore(&mut |r| {
                log::info!(
                    "iter {} steps {} reward {:.3} observed {:.1} visited {:.1} entropy {:.2}",
                    r.iter,
                    r.env_steps,
                    r.mean_reward,
                    r.mean_observed,
                    r.mean_visited,
                    r.entropy
                )
            })?;
            println!("wrote {} (config {})", path.display(), wb.cfg.digest());
        }
        Command::TrainRecon => {
            let wb = Workbench {
                cfg,
                force_digest: cli.common.force_digest,
            };
            let path = wb.train_recon(&mut |r| {
                log::info!(
                    "epoch {} loss {:.4} acc {:.4} heldout acc {:.4} (baseline {:.4})",
                    r.epoch,
                    r.train_loss,
                    r.train_accuracy,
                    r.heldout_accuracy,
                    r.heldout_baseline
                )
            })?;
            println!("wrote {} (config {})", path.display(), wb.cfg.digest());
        }
        Command::Eval {
            policy,
            poses,
            grid_only,
        } => {
            set_poses(&mut cfg, &poses)?;
            let wb = Workbench {
                cfg,
                force_digest: cli.common.force_digest,
            };
            let mut all = Vec::new();
            for p in &policy {
                let (rows, path) = wb.eval(&p.parse()?, grid_only)?;
                println!("wrote {} ({} rows)", path.display(), rows.len());
                all.extend(rows);
            }
            print!("{}", render(&summarize(&all)));
        }
        Command::ExportMesh {
            shape,
            policy,
            poses,
            seed_index,
            grid_only,
        } => {
            set_poses(&mut cfg, &poses)?;
            let wb = Workbench {
                cfg,
                force_digest: cli.common.force_digest,
            };
            for p in wb.export_mesh(&shape, &policy.parse()?, seed_index, grid_only)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Report { mut csv } => {
            let wb = Workbench::new(cfg);
            let out = wb.out_dir();
            if csv.is_empty() {
                let rd = std::fs::read_dir(&out).map_err(|e| WorkbenchError::io(&out, e))?;
                csv = rd
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| {
                        p.file_name()
                            .and_then(|n| n.to_str())
                            .is_some_and(|n| n.starts_with("eval-") && n.ends_with(".csv"))
                    })
                    .collect();
                csv.sort();
            }
            if csv.is_empty() {
                return Err(WorkbenchError::missing(&out, "no eval-*.csv reports"));
            }
            let mut rows = Vec::new();
            for p in &csv {
                rows.extend(read_eval_csv(p)?);
            }
            let summaries = summarize(&rows);
            let path = out.join(format!("report-{}.csv", wb.cfg.digest()));
            write_summary_csv(&path, &summaries)?;
            print!("{}", render(&summaries));
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

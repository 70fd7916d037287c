//! Summaries of evaluation CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, WorkbenchError};
use crate::pipeline::EvalRow;

/// Means over every row of one policy at one pose count.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub policy_tag: String,
    pub poses: usize,
    pub rows: usize,
    pub iou_grid: f64,
    pub iou_recon: f64,
    pub chamfer_grid: f64,
    pub chamfer_recon: f64,
    pub nc_grid: f64,
    pub nc_recon: f64,
    pub digests: Vec<String>,
}

pub fn summarize(rows: &[EvalRow]) -> Vec<Summary> {
    let mut groups: BTreeMap<(String, usize), Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.policy_tag.clone(), r.poses)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((policy_tag, poses), g)| {
            let n = g.len() as f64;
            let mean = |f: fn(&EvalRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            let mut digests: Vec<String> = g.iter().map(|r| r.config_digest.clone()).collect();
            digests.sort();
            digests.dedup();
            Summary {
                policy_tag,
                poses,
                rows: g.len(),
                iou_grid: mean(|r| r.iou_grid),
                iou_recon: mean(|r| r.iou_recon),
                chamfer_grid: mean(|r| r.chamfer_grid),
                chamfer_recon: mean(|r| r.chamfer_recon),
                nc_grid: mean(|r| r.nc_grid),
                nc_recon: mean(|r| r.nc_recon),
                digests,
            }
        })
        .collect()
}

/// Plain-text table, one line per policy and pose count.
pub fn render(summaries: &[Summary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>5} {:>5} {:>9} {:>9} {:>9} {:>9} {:>7} {:>7}  digest",
        "policy", "poses", "rows", "iou_grid", "iou_rec", "cd_grid", "cd_rec", "nc_grid", "nc_rec"
    );
    for m in summaries {
        let _ = writeln!(
            s,
            "{:<14} {:>5} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>7.4} {:>7.4}  {}",
            m.policy_tag,
            m.poses,
            m.rows,
            m.iou_grid,
            m.iou_recon,
            m.chamfer_grid,
            m.chamfer_recon,
            m.nc_grid,
            m.nc_recon,
            m.digests.join(",")
        );
    }
    s
}

pub fn write_summary_csv(path: &Path, summaries: &[Summary]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| WorkbenchError::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record([
        "policy_tag",
        "poses",
        "rows",
        "iou_grid",
        "iou_recon",
        "chamfer_grid",
        "chamfer_recon",
        "nc_grid",
        "nc_recon",
        "config_digest",
    ])?;
    for m in summaries {
        w.write_record([
            m.policy_tag.clone(),
            m.poses.to_string(),
            m.rows.to_string(),
            m.iou_grid.to_string(),
            m.iou_recon.to_string(),
            m.chamfer_grid.to_string(),
            m.chamfer_recon.to_string(),
            m.nc_grid.to_string(),
            m.nc_recon.to_string(),
            m.digests.join(";"),
        ])?;
    }
    w.flush().map_err(|e| WorkbenchError::io(path, e))
}

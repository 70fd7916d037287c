//! Corpus directories: `manifest.toml` plus one OBJ and one TVOX per shape.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use tslam_core::corpus::{grid_digest, make_corpus, mesh_digest, split_assignment, Family, FamilyMix, ShapeRecipe, Split};
use tslam_core::geometry::{normalize_to_workspace, voxelize_solid, Mesh, VoxelGrid};
use tslam_core::math::Aabb;

use crate::error::{Result, WorkbenchError};
use crate::formats::{read_grid, write_grid};
use crate::meshio::{read_mesh, write_obj};

pub const MANIFEST: &str = "manifest.toml";
/// Workspace to object bounding-box volume ratio for imported meshes.
pub const IMPORT_WORKSPACE_SCALE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Recipe(ShapeRecipe),
    /// Imported from a user mesh file (original path).
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub source: Source,
    pub split: Split,
    pub mesh_file: String,
    pub grid_file: String,
    pub mesh_digest: String,
    pub grid_digest: String,
}

impl ManifestEntry {
    pub fn family(&self) -> &str {
        match &self.source {
            Source::Recipe(r) => r.family.tag(),
            Source::File(_) => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub seed: u64,
    pub resolution: usize,
    pub entries: Vec<ManifestEntry>,
}

/// A loaded corpus shape.
#[derive(Debug, Clone)]
pub struct CorpusShape {
    pub entry: ManifestEntry,
    pub mesh: Arc<Mesh>,
    pub grid: Arc<VoxelGrid>,
}

impl Manifest {
    /// Digest over the per-shape records, independent of file layout.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("resolution {}\n", self.resolution));
        for e in &self.entries {
            h.update(format!(
                "{} {} {} {} {}\n",
                e.id,
                e.family(),
                e.split.tag(),
                e.mesh_digest,
                e.grid_digest
            ));
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn to_toml_string(&self) -> String {
        let mut root = Table::new();
        root.insert("seed".into(), Value::String(self.seed.to_string()));
        root.insert("resolution".into(), Value::Integer(self.resolution as i64));
        root.insert("digest".into(), Value::String(self.digest()));
        let shapes = self
            .entries
            .iter()
            .map(|e| {
                let mut t = Table::new();
                t.insert("id".into(), Value::String(e.id.clone()));
                t.insert("split".into(), Value::String(e.split.tag().into()));
                t.insert("family".into(), Value::String(e.family().into()));
                match &e.source {
                    Source::Recipe(r) => {
                        t.insert("params".into(), Value::Array(r.params.iter().map(|&p| Value::Float(p)).collect()));
                        t.insert("recipe_seed".into(), Value::String(r.seed.to_string()));
                    }
                    Source::File(p) => {
                        t.insert("source".into(), Value::String(p.clone()));
                    }
                }
                t.insert("mesh".into(), Value::String(e.mesh_file.clone()));
                t.insert("grid".into(), Value::String(e.grid_file.clone()));
                t.insert("mesh_digest".into(), Value::String(e.mesh_digest.clone()));
                t.insert("grid_digest".into(), Value::String(e.grid_digest.clone()));
                Value::Table(t)
            })
            .collect();
        root.insert("shape".into(), Value::Array(shapes));
        toml::to_string(&root).expect("manifest tables serialize")
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Manifest> {
        let bad = |why: String| WorkbenchError::format(path, why);
        let root: Table = text.parse().map_err(|e: toml::de::Error| bad(e.message().to_string()))?;
        let s = |t: &Table, k: &str| -> Result<String> {
            t.get(k)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing string `{k}`")))
        };
        let seed = s(&root, "seed")?.parse().map_err(|_| bad("bad seed".into()))?;
        let resolution = root
            .get("resolution")
            .and_then(Value::as_integer)
            .ok_or_else(|| bad("missing resolution".into()))? as usize;
        let mut entries = Vec::new();
        for v in root.get("shape").and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[]) {
            let t = v.as_table().ok_or_else(|| bad("shape entries must be tables".into()))?;
            let family = s(t, "family")?;
            let source = if family == "external" {
                Source::File(s(t, "source")?)
            } else {
                let fam = Family::from_tag(&family).map_err(|e| bad(e.to_string()))?;
                let params = t
                    .get("params")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing params".into()))?
                    .iter()
                    .map(|p| p.as_float().or_else(|| p.as_integer().map(|i| i as f64)))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| bad("params must be numbers".into()))?;
                let rs = s(t, "recipe_seed")?.parse().map_err(|_| bad("bad recipe_seed".into()))?;
                Source::Recipe(ShapeRecipe {
                    family: fam,
                    params,
                    seed: rs,
                })
            };
            entries.push(ManifestEntry {
                id: s(t, "id")?,
                source,
                split: Split::from_tag(&s(t, "split")?).map_err(|e| bad(e.to_string()))?,
                mesh_file: s(t, "mesh")?,
                grid_file: s(t, "grid")?,
                mesh_digest: s(t, "mesh_digest")?,
                grid_digest: s(t, "grid_digest")?,
            });
        }
        let m = Manifest {
            seed,
            resolution,
            entries,
        };
        let recorded = s(&root, "digest")?;
        if recorded != m.digest() {
            return Err(WorkbenchError::DigestMismatch {
                what: "manifest",
                expected: m.digest(),
                found: recorded,
            });
        }
        Ok(m)
    }

    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                WorkbenchError::missing(&path, "no corpus manifest")
            } else {
                WorkbenchError::io(&path, e)
            }
        })?;
        Manifest::from_toml_str(&text, &path)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn find(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn write_shape(dir: &Path, id: &str, mesh: &Mesh, grid: &VoxelGrid) -> Result<(String, String)> {
    let mesh_file = format!("{id}.obj");
    let grid_file = format!("{id}.tvox");
    write_obj(&dir.join(&mesh_file), mesh, &[format!("shape {id}")])?;
    write_grid(&dir.join(&grid_file), grid)?;
    Ok((mesh_file, grid_file))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| WorkbenchError::io(dir, e))
}

/// Generates a procedural corpus into `dir`.
pub fn write_procedural_corpus(dir: &Path, count: usize, mix: &FamilyMix, seed: u64, n: usize) -> Result<Manifest> {
    create_dir(dir)?;
    let (corpus, shapes) = make_corpus(count, mix, seed, n)?;
    let mut entries = Vec::with_capacity(count);
    for (e, s) in corpus.entries.iter().zip(&shapes) {
        let (mesh_file, grid_file) = write_shape(dir, &e.id, &s.mesh, &s.grid)?;
        entries.push(ManifestEntry {
            id: e.id.clone(),
            source: Source::Recipe(e.recipe.clone()),
            split: e.split,
            mesh_file,
            grid_file,
            mesh_digest: e.mesh_digest.clone(),
            grid_digest: e.grid_digest.clone(),
        });
    }
    let m = Manifest {
        seed,
        resolution: n,
        entries,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, m.to_toml_string()).map_err(|e| WorkbenchError::io(&path, e))?;
    Ok(m)
}

/// Imports every `.obj` / `.off` under `src` (sorted by name), scaled into
/// the workspace, with a seeded fifth held out.
pub fn import_corpus(src: &Path, dir: &Path, seed: u64, n: usize) -> Result<Manifest> {
    let mut files: Vec<PathBuf> = fs::read_dir(src)
        .map_err(|e| WorkbenchError::io(src, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                Some("obj" | "off")
            )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(WorkbenchError::missing(src, "no .obj or .off meshes"));
    }
    create_dir(dir)?;
    let splits = split_assignment(files.len(), seed);
    let mut entries = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let mesh = normalize_to_workspace(&read_mesh(f)?, IMPORT_WORKSPACE_SCALE)?;
        let (grid, stats) = voxelize_solid(&mesh, n, Aabb::unit_workspace());
        if stats.ambiguous > 0 {
            log::warn!("{}: {} ambiguous voxels (mesh may not be watertight)", f.display(), stats.ambiguous);
        }
        if grid.is_empty() {
            return Err(WorkbenchError::format(f, "no occupied cells after voxelization"));
        }
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("shape");
        let id = format!("external-{i:03}-{stem}");
        let (mesh_file, grid_file) = write_shape(dir, &id, &mesh, &grid)?;
        entries.push(ManifestEntry {
            id,
            source: Source::File(f.display().to_string()),
            split: splits[i],
            mesh_file,
            grid_file,
            mesh_digest: mesh_digest(&mesh),
            grid_digest: grid_digest(&grid),
        });
    }
    let m = Manifest {
        seed,
        resolution: n,
        entries,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, m.to_toml_string()).map_err(|e| WorkbenchError::io(&path, e))?;
    Ok(m)
}

/// Loads the shapes of `entries`, checking stored grids against their
/// digests.
pub fn load_shapes<'a>(dir: &Path, entries: impl IntoIterator<Item = &'a ManifestEntry>) -> Result<Vec<CorpusShape>> {
    let mut out = Vec::new();
    for e in entries {
        let mesh = read_mesh(&dir.join(&e.mesh_file)).map_err(|err| match err {
            WorkbenchError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                WorkbenchError::missing(path, "corpus mesh not found")
            }
            other => other,
        })?;
        let grid = read_grid(&dir.join(&e.grid_file))?;
        let d = grid_digest(&grid);
        if d != e.grid_digest {
            return Err(WorkbenchError::DigestMismatch {
                what: "shape grid",
                expected: e.grid_digest.clone(),
                found: d,
            });
        }
        out.push(CorpusShape {
            entry: e.clone(),
            mesh: Arc::new(mesh),
            grid: Arc::new(grid),
        });
    }
    Ok(out)
}

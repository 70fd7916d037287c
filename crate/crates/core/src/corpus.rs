//! Procedural shape families for training and evaluation.
//!
//! Every recipe is expressed directly in workspace coordinates (the unit
//! cube centred at the origin), with the vertical axis along `z`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::Rng as _;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::primitives::{box_mesh, cup, cylinder, icosphere, torus};
use crate::geometry::{marching_cubes, voxelize_solid, Mesh, ScalarField, VoxelGrid};
use crate::math::{sqrt, Aabb, Vec3};
use crate::rng::{derive_seed, rng_from_seed};

/// Workspace margin kept free around every generated shape.
const MARGIN: f64 = 0.02;
/// Lattice nodes per unit for composite (SDF) shapes.
const SDF_RES: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Box,
    Sphere,
    Cylinder,
    Torus,
    Cup,
    CompositeUnion,
    CompositeDifference,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Box,
        Family::Sphere,
        Family::Cylinder,
        Family::Torus,
        Family::Cup,
        Family::CompositeUnion,
        Family::CompositeDifference,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Box => "box",
            Family::Sphere => "sphere",
            Family::Cylinder => "cylinder",
            Family::Torus => "torus",
            Family::Cup => "cup",
            Family::CompositeUnion => "composite-union",
            Family::CompositeDifference => "composite-difference",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.tag() == tag)
            .ok_or_else(|| Error::Shape(alloc::format!("unknown family `{tag}`")))
    }

    /// Parameter names, in recipe order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Box => &["size_x", "size_y", "size_z"],
            Family::Sphere => &["radius"],
            Family::Cylinder => &["radius", "height"],
            Family::Torus => &["major", "minor"],
            Family::Cup => &["radius", "height", "wall", "base"],
            Family::CompositeUnion => &["size_x", "size_y", "size_z", "radius", "offset_x", "offset_y"],
            Family::CompositeDifference => &["size_x", "size_y", "size_z", "hole_radius", "hole_spacing"],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRecipe {
    pub family: Family,
    pub params: Vec<f64>,
    pub seed: u64,
}

/// Cup wall and base default to three voxel edges at N = 32.
pub const CUP_WALL: f64 = 3.0 / 32.0;

impl ShapeRecipe {
    pub fn new(family: Family, params: Vec<f64>) -> ShapeRecipe {
        ShapeRecipe { family, params, seed: 0 }
    }

    pub fn sphere(radius: f64) -> ShapeRecipe {
        ShapeRecipe::new(Family::Sphere, vec![radius])
    }

    pub fn torus(major: f64, minor: f64) -> ShapeRecipe {
        ShapeRecipe::new(Family::Torus, vec![major, minor])
    }

    pub fn cup(radius: f64, height: f64) -> ShapeRecipe {
        ShapeRecipe::new(Family::Cup, vec![radius, height, CUP_WALL, CUP_WALL])
    }

    /// A random recipe of `family` with parameters drawn from its sampling
    /// ranges.
    pub fn random(family: Family, seed: u64) -> ShapeRecipe {
        let mut rng = rng_from_seed(seed);
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..=hi);
        let params = match family {
            Family::Box => vec![u(0.3, 0.7), u(0.3, 0.7), u(0.3, 0.7)],
            Family::Sphere => vec![u(0.2, 0.4)],
            Family::Cylinder => vec![u(0.15, 0.3), u(0.3, 0.7)],
            Family::Torus => vec![u(0.22, 0.32), u(0.06, 0.1)],
            Family::Cup => vec![u(0.25, 0.35), u(0.4, 0.6), CUP_WALL, CUP_WALL],
            Family::CompositeUnion => {
                let (sx, sy) = (u(0.3, 0.5), u(0.3, 0.5));
                vec![sx, sy, u(0.2, 0.35), u(0.15, 0.22), u(-0.5, 0.5) * sx * 0.5, u(-0.5, 0.5) * sy * 0.5]
            }
            Family::CompositeDifference => {
                let sx = u(0.55, 0.75);
                let r = u(0.06, 0.09);
                vec![sx, u(0.25, 0.35), u(0.15, 0.3), r, u(0.45, 0.55) * sx]
            }
        };
        ShapeRecipe { family, params, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let want = self.family.param_names().len();
        if self.params.len() != want {
            return Err(Error::Shape(alloc::format!(
                "{} takes {want} parameters, got {}",
                self.family,
                self.params.len()
            )));
        }
        if self.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        let p = &self.params;
        let lim = 0.5 - MARGIN;
        let bad = |why: &str| Err(Error::Shape(alloc::format!("{}: {why}", self.family)));
        let pos = |v: &[f64]| v.iter().all(|&x| x > 0.0);
        match self.family {
            Family::Box if !pos(p) || p.iter().any(|&s| s / 2.0 > lim) => bad("sizes must be in (0, 0.96]"),
            Family::Sphere if !(p[0] > 0.0 && p[0] <= lim) => bad("radius must be in (0, 0.48]"),
            Family::Cylinder if !pos(p) || p[0] > lim || p[1] / 2.0 > lim => bad("does not fit the workspace"),
            Family::Torus if !pos(p) || p[1] >= p[0] || p[0] + p[1] > lim => {
                bad("need 0 < minor < major and major + minor <= 0.48")
            }
            Family::Cup if !pos(p) || p[0] > lim || p[1] / 2.0 > lim || p[2] >= p[0] || p[3] >= p[1] => {
                bad("need wall < radius, base < height, fitting the workspace")
            }
            Family::CompositeUnion => {
                let (sx, sy, sz, r, ox, oy) = (p[0], p[1], p[2], p[3], p[4], p[5]);
                let top = -0.5 * (sz + r) + sz;
                if !pos(&p[..4]) || sx / 2.0 > lim || sy / 2.0 > lim {
                    bad("box does not fit the workspace")
                } else if ox.abs() > sx / 2.0 || oy.abs() > sy / 2.0 {
                    bad("sphere centre must lie over the box top")
                } else if ox.abs() + r > lim || oy.abs() + r > lim || top + r > lim {
                    bad("sphere leaves the workspace")
                } else {
                    Ok(())
                }
            }
            Family::CompositeDifference => {
                let (sx, sy, sz, r, d) = (p[0], p[1], p[2], p[3], p[4]);
                if !pos(p) || sx / 2.0 > lim || sy / 2.0 > lim || sz / 2.0 > lim {
                    bad("box does not fit the workspace")
                } else if 2.0 * r >= sy || d <= 2.0 * r || d / 2.0 + r >= sx / 2.0 {
                    bad("holes must lie strictly inside the box and apart")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Centre-line description used in ids and logs.
    pub fn describe(&self) -> String {
        let mut s = String::from(self.family.tag());
        for (n, v) in self.family.param_names().iter().zip(&self.params) {
            let _ = write!(s, " {n}={v:.4}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedShape {
    pub recipe: ShapeRecipe,
    pub mesh: Mesh,
    pub grid: VoxelGrid,
}

fn sd_box(p: Vec3, c: Vec3, half: Vec3) -> f64 {
    let q = Vec3::new((p.x - c.x).abs() - half.x, (p.y - c.y).abs() - half.y, (p.z - c.z).abs() - half.z);
    let out = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0));
    out.norm() + q.x.max(q.y).max(q.z).min(0.0)
}

fn sd_sphere(p: Vec3, c: Vec3, r: f64) -> f64 {
    (p - c).norm() - r
}

/// Infinite cylinder along z.
fn sd_column(p: Vec3, cx: f64, cy: f64, r: f64) -> f64 {
    let (dx, dy) = (p.x - cx, p.y - cy);
    sqrt(dx * dx + dy * dy) - r
}

/// Zero level set of a signed distance (negative inside) over the workspace.
fn sdf_mesh(sdf: impl Fn(Vec3) -> f64) -> Result<Mesh> {
    let h = 1.0 / SDF_RES as f64;
    let dims = [SDF_RES + 1; 3];
    let field = ScalarField::from_fn(dims, Vec3::splat(-0.5), h, |p| -sdf(p));
    marching_cubes(&field.padded(-1.0), 0.0)
}

fn recipe_mesh(r: &ShapeRecipe) -> Result<Mesh> {
    let p = &r.params;
    let o = Vec3::ZERO;
    Ok(match r.family {
        Family::Box => {
            let h = Vec3::new(p[0], p[1], p[2]) * 0.5;
            box_mesh(-h, h)
        }
        Family::Sphere => icosphere(o, p[0], 4),
        Family::Cylinder => cylinder(o, p[0], p[1], 64),
        Family::Torus => torus(o, p[0], p[1], 96, 32),
        Family::Cup => cup(o, p[0], p[1], p[2], p[3], 64),
        Family::CompositeUnion => {
            // box resting below a sphere centred on its top face; the pair
            // is centred vertically
            let (sx, sy, sz, rad, ox, oy) = (p[0], p[1], p[2], p[3], p[4], p[5]);
            let z0 = -0.5 * (sz + rad);
            let bc = Vec3::new(0.0, 0.0, z0 + sz / 2.0);
            let half = Vec3::new(sx, sy, sz) * 0.5;
            let sc = Vec3::new(ox, oy, z0 + sz);
            sdf_mesh(|q| sd_box(q, bc, half).min(sd_sphere(q, sc, rad)))?
        }
        Family::CompositeDifference => {
            // a slab with two vertical through-holes
            let (sx, sy, sz, rad, d) = (p[0], p[1], p[2], p[3], p[4]);
            let half = Vec3::new(sx, sy, sz) * 0.5;
            sdf_mesh(|q| {
                let holes = sd_column(q, -d / 2.0, 0.0, rad).min(sd_column(q, d / 2.0, 0.0, rad));
                sd_box(q, o, half).max(-holes)
            })?
        }
    })
}

/// Watertight mesh of the recipe and its solid voxelization at `n`.
pub fn generate_shape(recipe: &ShapeRecipe, n: usize) -> Result<GeneratedShape> {
    recipe.validate()?;
    let mesh = recipe_mesh(recipe)?;
    if !mesh.is_watertight() {
        return Err(Error::DegenerateMesh(alloc::format!(
            "{} is not watertight: {:?}",
            recipe.describe(),
            mesh.diagnostics()
        )));
    }
    let (grid, stats) = voxelize_solid(&mesh, n, Aabb::unit_workspace());
    if stats.ambiguous > 0 {
        log::warn!("{}: {} ambiguous voxels", recipe.describe(), stats.ambiguous);
    }
    if grid.is_empty() {
        return Err(Error::Shape(alloc::format!("{} has no occupied cells at N={n}", recipe.describe())));
    }
    Ok(GeneratedShape {
        recipe: recipe.clone(),
        mesh,
        grid,
    })
}

/// Cells of the four columns around the vertical axis (x = y = 0 lies on
/// their shared corner when N is even, on one column otherwise).
fn axis_columns(grid: &VoxelGrid) -> Vec<(usize, usize)> {
    let n = grid.resolution();
    if n % 2 == 0 {
        vec![(n / 2 - 1, n / 2 - 1), (n / 2, n / 2 - 1), (n / 2 - 1, n / 2), (n / 2, n / 2)]
    } else {
        vec![(n / 2, n / 2)]
    }
}

/// Ray-through-hole oracle: the vertical line through the centre crosses no
/// occupied cell.
pub fn axis_is_clear(grid: &VoxelGrid) -> bool {
    let n = grid.resolution();
    axis_columns(grid).into_iter().all(|(i, j)| (0..n).all(|k| !grid.get(i, j, k)))
}

/// Hole evidence in a partial grid: the vertical axis is clear and occupied
/// cells surround it, appearing in every azimuthal quadrant.
pub fn hole_detected(grid: &VoxelGrid) -> bool {
    if !axis_is_clear(grid) {
        return false;
    }
    let mut quadrants = [false; 4];
    for idx in grid.occupied() {
        let [i, j, k] = grid.coords(idx);
        let c = grid.cell_center(i, j, k);
        let q = (c.x >= 0.0) as usize + 2 * (c.y >= 0.0) as usize;
        quadrants[q] = true;
    }
    quadrants.iter().all(|&q| q)
}

/// Empty cells of a cup's cavity: inside the inner radius, above the base
/// and below the rim. Only meaningful for cup recipes.
pub fn cup_cavity(recipe: &ShapeRecipe, gt: &VoxelGrid) -> Result<VoxelGrid> {
    if recipe.family != Family::Cup {
        return Err(Error::InvalidArgument("cavity is only defined for cups".into()));
    }
    let (radius, height, wall, base) = (recipe.params[0], recipe.params[1], recipe.params[2], recipe.params[3]);
    let inner = radius - wall;
    let (z0, z1) = (-height / 2.0 + base, height / 2.0);
    let mut out = gt.empty_like();
    let n = gt.resolution();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let c = gt.cell_center(i, j, k);
                if sqrt(c.x * c.x + c.y * c.y) < inner && c.z > z0 && c.z < z1 && !gt.get(i, j, k) {
                    out.set(i, j, k, true);
                }
            }
        }
    }
    Ok(out)
}

/// Occupied cells face-adjacent to the cavity: the inner wall and floor.
pub fn cup_inner_surface(recipe: &ShapeRecipe, gt: &VoxelGrid) -> Result<VoxelGrid> {
    let cavity = cup_cavity(recipe, gt)?;
    let mut out = gt.empty_like();
    for idx in gt.occupied() {
        let [i, j, k] = gt.coords(idx).map(|v| v as isize);
        let near = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
            .iter()
            .any(|&(a, b, c)| cavity.get_signed(i + a, j + b, k + c));
        if near {
            out.set_index(idx, true);
        }
    }
    Ok(out)
}

/// Runs of occupied cells met walking outward from the axis along ±x and
/// ±y through the layer at mid-height.
pub fn radial_wall_runs(grid: &VoxelGrid, k: usize) -> Vec<usize> {
    let n = grid.resolution();
    let h = n / 2;
    let mut runs = Vec::new();
    let dirs: [(isize, isize, isize, isize); 4] =
        [(h as isize, h as isize, 1, 0), (h as isize - 1, h as isize, -1, 0), (h as isize, h as isize, 0, 1), (h as isize, h as isize - 1, 0, -1)];
    for (mut i, mut j, di, dj) in dirs {
        let mut run = 0;
        let mut started = false;
        while i >= 0 && j >= 0 && (i as usize) < n && (j as usize) < n {
            let occ = grid.get(i as usize, j as usize, k);
            if occ {
                started = true;
                run += 1;
            } else if started {
                break;
            }
            i += di;
            j += dj;
        }
        runs.push(run);
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    HeldOut,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::HeldOut => "heldout",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Split> {
        match tag {
            "train" => Ok(Split::Train),
            "heldout" => Ok(Split::HeldOut),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown split `{tag}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub id: String,
    pub recipe: ShapeRecipe,
    pub split: Split,
    pub mesh_digest: String,
    pub grid_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub seed: u64,
    pub resolution: usize,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// Relative family weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMix(pub Vec<(Family, f64)>);

impl Default for FamilyMix {
    fn default() -> Self {
        FamilyMix(Family::ALL.iter().map(|&f| (f, 1.0)).collect())
    }
}

impl FamilyMix {
    pub fn only(f: Family) -> FamilyMix {
        FamilyMix(vec![(f, 1.0)])
    }

    /// Shapes per family for `count` shapes, by largest remainder.
    pub fn allocate(&self, count: usize) -> Result<Vec<(Family, usize)>> {
        let total: f64 = self.0.iter().map(|p| p.1).sum();
        if self.0.is_empty() || self.0.iter().any(|p| !(p.1 >= 0.0) || !p.1.is_finite()) || !(total > 0.0) {
            return Err(Error::InvalidArgument("family weights must be non-negative with a positive sum".into()));
        }
        let exact: Vec<f64> = self.0.iter().map(|p| p.1 / total * count as f64).collect();
        let mut n: Vec<usize> = exact.iter().map(|&e| e as usize).collect();
        let mut left = count - n.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..n.len()).collect();
        order.sort_by(|&a, &b| (exact[b] - n[b] as f64).total_cmp(&(exact[a] - n[a] as f64)).then(a.cmp(&b)));
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            n[i] += 1;
            left -= 1;
        }
        Ok(self.0.iter().map(|p| p.0).zip(n).collect())
    }
}

/// Held-out shapes for a corpus of `count`: a fifth, rounded.
pub fn heldout_count(count: usize) -> usize {
    (count + 2) / 5
}

fn hex16(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(16);
    for b in &bytes[..8] {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Short SHA-256 digest of the vertex and face buffers.
pub fn mesh_digest(mesh: &Mesh) -> String {
    let mut h = Sha256::new();
    for v in mesh.vertices() {
        for c in v.to_array() {
            h.update(c.to_le_bytes());
        }
    }
    for f in mesh.faces() {
        for i in f {
            h.update(i.to_le_bytes());
        }
    }
    hex16(&h.finalize())
}

pub fn grid_digest(grid: &VoxelGrid) -> String {
    let mut h = Sha256::new();
    h.update((grid.resolution() as u64).to_le_bytes());
    h.update(grid.to_packed_bytes());
    hex16(&h.finalize())
}

/// Seeded train/held-out assignment of `count` shapes.
pub fn split_assignment(count: usize, seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, "split", 0)));
    let mut split = vec![Split::Train; count];
    for &i in &order[..heldout_count(count)] {
        split[i] = Split::HeldOut;
    }
    split
}

/// Generates `count` shapes with families allocated by `mix`, then splits
/// them: a shuffled fifth goes to the held-out set.
pub fn make_corpus(count: usize, mix: &FamilyMix, seed: u64, n: usize) -> Result<(Corpus, Vec<GeneratedShape>)> {
    if count == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut recipes = Vec::with_capacity(count);
    for (family, k) in mix.allocate(count)? {
        for _ in 0..k {
            let s = derive_seed(seed, "shape", recipes.len() as u64);
            recipes.push(ShapeRecipe::random(family, s));
        }
    }
    let split = split_assignment(count, seed);
    let mut entries = Vec::with_capacity(count);
    let mut shapes = Vec::with_capacity(count);
    for (i, recipe) in recipes.into_iter().enumerate() {
        let shape = generate_shape(&recipe, n)?;
        entries.push(CorpusEntry {
            id: alloc::format!("{}-{i:03}", recipe.family.tag()),
            recipe,
            split: split[i],
            mesh_digest: mesh_digest(&shape.mesh),
            grid_digest: grid_digest(&shape.grid),
        });
        shapes.push(shape);
    }
    Ok((
        Corpus {
            seed,
            resolution: n,
            entries,
        },
        shapes,
    ))
}

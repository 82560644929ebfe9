//! Brute-force visibility reference. Every owned texel is mapped back to its
//! surface point and tested against each eye by projection, facing and a
//! watertight segment cast against all scene triangles.

use std::collections::{BTreeMap, HashSet};

use glam::DVec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyze::{count_image, ExposureCounts};
use crate::error::{Error, Result};
use crate::image::ColorImage;
use crate::meshkit::{bounding_diagonal, LabeledMesh, OwnershipMap};
use crate::palette::{ColorCode, TexelIndex, TEXTURE_SIZE};
use crate::raster;
use crate::scene::{Camera, Eye, Scenario};

pub const MAX_TEXELS: usize = 65_536;
pub const MAX_TRIANGLES: usize = 1_024;
/// Self-intersection offset as a fraction of the subject's extent.
pub const EPSILON_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TexelSurfacePoint {
    pub texel: TexelIndex,
    pub triangle: u32,
    pub barycentric: [f64; 3],
    /// Model-space position and unit geometric normal.
    pub position: DVec3,
    pub normal: DVec3,
}

/// Barycentric coordinates of `p` in a 2D triangle, or `None` if the
/// triangle is degenerate.
pub fn barycentric_2d(tri: [[f64; 2]; 3], p: [f64; 2]) -> Option<[f64; 3]> {
    let [a, b, c] = tri;
    let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let scale = (e1[0].abs() + e1[1].abs()) * (e2[0].abs() + e2[1].abs());
    if det.abs() <= 1e-12 * scale || scale == 0.0 {
        return None;
    }
    let d = [p[0] - a[0], p[1] - a[1]];
    let w1 = (d[0] * e2[1] - d[1] * e2[0]) / det;
    let w2 = (e1[0] * d[1] - e1[1] * d[0]) / det;
    Some([1.0 - w1 - w2, w1, w2])
}

pub fn texel_to_surface(
    mesh: &LabeledMesh,
    ownership: &OwnershipMap,
    texel: TexelIndex,
) -> Result<TexelSurfacePoint> {
    let tri_id = ownership.owner(texel).ok_or(Error::Ownership(texel))?;
    let tri = &mesh.triangles[tri_id as usize];
    let center = [texel.x as f64 + 0.5, texel.y as f64 + 0.5];
    let w =
        barycentric_2d(tri.texel_space(), center).ok_or(Error::SingularMapping(tri_id as usize))?;
    let [a, b, c] = mesh.positions(tri);
    let normal = (b - a).cross(c - a).normalize_or_zero();
    if normal == DVec3::ZERO {
        return Err(Error::SingularMapping(tri_id as usize));
    }
    Ok(TexelSurfacePoint {
        texel,
        triangle: tri_id,
        barycentric: w,
        position: a * w[0] + b * w[1] + c * w[2],
        normal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Visible,
    Occluded,
    OutOfFrustum,
    BackFacing,
}

/// Precomputed shear for the watertight ray/triangle test.
#[derive(Debug, Clone, Copy)]
pub struct WatertightRay {
    origin: DVec3,
    k: [usize; 3],
    shear: [f64; 3],
}

impl WatertightRay {
    pub fn new(origin: DVec3, dir: DVec3) -> Self {
        let d = dir.to_array();
        let a = dir.abs().to_array();
        let kz = if a[0] >= a[1] && a[0] >= a[2] {
            0
        } else if a[1] >= a[2] {
            1
        } else {
            2
        };
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if d[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        WatertightRay {
            origin,
            k: [kx, ky, kz],
            shear: [d[kx] / d[kz], d[ky] / d[kz], 1.0 / d[kz]],
        }
    }

    /// Ray parameter of the hit, counting hits exactly on an edge or vertex.
    pub fn intersect(&self, tri: &[DVec3; 3]) -> Option<f64> {
        let [kx, ky, kz] = self.k;
        let [sx, sy, sz] = self.shear;
        let rel = tri.map(|p| (p - self.origin).to_array());
        let sheared = rel.map(|p| [p[kx] - sx * p[kz], p[ky] - sy * p[kz]]);
        let [a, b, c] = sheared;
        let u = c[0] * b[1] - c[1] * b[0];
        let v = a[0] * c[1] - a[1] * c[0];
        let w = b[0] * a[1] - b[1] * a[0];
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t = u * sz * rel[0][kz] + v * sz * rel[1][kz] + w * sz * rel[2][kz];
        Some(t / det)
    }
}

/// World-space triangles of a scene at one instant; subject triangles keep
/// their mesh index.
#[derive(Debug, Clone)]
pub struct OracleScene {
    pub triangles: Vec<[DVec3; 3]>,
    pub epsilon: f64,
}

impl OracleScene {
    pub fn at(scenario: &Scenario, t: f64) -> Result<Self> {
        let pose = scenario.pose(t)?;
        let mesh = &scenario.subject;
        let placed: Vec<DVec3> = mesh
            .vertices
            .iter()
            .map(|&v| pose.transform_point(v))
            .collect();
        let mut triangles: Vec<[DVec3; 3]> = mesh
            .triangles
            .iter()
            .map(|tri| tri.indices.map(|i| placed[i as usize]))
            .collect();
        let occ = &scenario.occluders;
        triangles.extend(
            occ.triangles
                .iter()
                .map(|t| t.map(|i| occ.vertices[i as usize])),
        );
        Ok(OracleScene {
            triangles,
            epsilon: EPSILON_SCALE * bounding_diagonal(&mesh.vertices),
        })
    }
}

/// Verdict for a world point with unit normal, ignoring its own triangle.
pub fn visible(
    point: DVec3,
    normal: DVec3,
    own: Option<usize>,
    camera: &Camera,
    scene: &OracleScene,
) -> Verdict {
    let view = camera.to_view(point);
    if view.z < camera.near {
        return Verdict::OutOfFrustum;
    }
    let [x, y] = camera.view_to_image(view);
    if !(x >= 0.0 && x < camera.width as f64 && y >= 0.0 && y < camera.height as f64) {
        return Verdict::OutOfFrustum;
    }
    let seg = point - camera.center;
    if normal.dot(seg) >= 0.0 {
        return Verdict::BackFacing;
    }
    let len = seg.length();
    let t_max = 1.0 - scene.epsilon / len;
    let ray = WatertightRay::new(camera.center, seg);
    for (i, tri) in scene.triangles.iter().enumerate() {
        if Some(i) == own {
            continue;
        }
        if let Some(t) = ray.intersect(tri) {
            if t > 0.0 && t < t_max {
                return Verdict::Occluded;
            }
        }
    }
    Verdict::Visible
}

/// Surface points of every owned texel, ready for repeated queries.
pub struct Oracle<'a> {
    scenario: &'a Scenario,
    points: Vec<TexelSurfacePoint>,
}

impl<'a> Oracle<'a> {
    pub fn new(scenario: &'a Scenario, ownership: &OwnershipMap) -> Result<Self> {
        let owned = ownership.owned_count();
        let triangles = scenario.subject.triangles.len() + scenario.occluders.triangles.len();
        if owned > MAX_TEXELS || triangles > MAX_TRIANGLES {
            return Err(Error::ScaleGuard(format!(
                "{owned} owned texels and {triangles} triangles; the oracle accepts at most {MAX_TEXELS} and {MAX_TRIANGLES}"
            )));
        }
        let points = ownership
            .owned()
            .map(|(t, _)| texel_to_surface(&scenario.subject, ownership, t))
            .collect::<Result<_>>()?;
        Ok(Oracle { scenario, points })
    }

    pub fn points(&self) -> &[TexelSurfacePoint] {
        &self.points
    }

    /// Linear indices of texels visible at schedule frame `frame`, ascending.
    pub fn visible_texels(&self, frame: usize, eye: Eye) -> Result<Vec<u32>> {
        let t = *self
            .scenario
            .schedule()
            .times
            .get(frame)
            .ok_or_else(|| Error::Range {
                what: "frame",
                detail: frame.to_string(),
            })?;
        let pose = self.scenario.pose(t)?;
        let camera = self.scenario.camera(t, eye)?;
        let scene = OracleScene::at(self.scenario, t)?;
        Ok(self
            .points
            .iter()
            .filter(|p| {
                let world = pose.transform_point(p.position);
                let n = pose.transform_vector(p.normal);
                visible(world, n, Some(p.triangle as usize), &camera, &scene) == Verdict::Visible
            })
            .map(|p| p.texel.linear() as u32)
            .collect())
    }
}

/// Visible-texel counts over the whole schedule, one image per frame and eye.
pub fn oracle_counts(scenario: &Scenario, ownership: &OwnershipMap) -> Result<ExposureCounts> {
    let oracle = Oracle::new(scenario, ownership)?;
    let jobs: Vec<(usize, Eye)> = (0..scenario.schedule().frames())
        .flat_map(|f| Eye::BOTH.map(|e| (f, e)))
        .collect();
    let hits: Vec<Vec<u32>> = jobs
        .par_iter()
        .map(|&(f, e)| oracle.visible_texels(f, e))
        .collect::<Result<_>>()?;
    let mut counts = ExposureCounts::new();
    for h in &hits {
        for &i in h {
            counts.increment(i as usize);
        }
    }
    counts.images = jobs.len() as u64;
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub texel: TexelIndex,
    pub raster: u32,
    pub oracle: u32,
    /// Some image where presence differed had this texel next to the
    /// rasterized silhouette.
    pub silhouette_adjacent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub owned_texels: u64,
    pub agreeing_texels: u64,
    pub disagreements: Vec<Disagreement>,
    /// Raster colors outside the owned set (should be zero).
    pub foreign_colors: u64,
}

impl OracleReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.owned_texels == 0 {
            1.0
        } else {
            self.agreeing_texels as f64 / self.owned_texels as f64
        }
    }

    pub fn all_silhouette_adjacent(&self) -> bool {
        self.disagreements.iter().all(|d| d.silhouette_adjacent)
    }
}

fn neighbors(i: u32) -> impl Iterator<Item = u32> {
    let size = TEXTURE_SIZE as i64;
    let (x, y) = ((i as i64) % size, (i as i64) / size);
    (-1..=1).flat_map(move |dy| {
        (-1..=1).filter_map(move |dx| {
            let (nx, ny) = (x + dx, y + dy);
            ((dx, dy) != (0, 0) && (0..size).contains(&nx) && (0..size).contains(&ny))
                .then(|| (ny * size + nx) as u32)
        })
    })
}

/// Within Chebyshev distance 1 of an emitted texel that has a non-emitted
/// 8-neighbor.
fn near_silhouette(texel: u32, emitted: &HashSet<u32>) -> bool {
    std::iter::once(texel)
        .chain(neighbors(texel))
        .filter(|e| emitted.contains(e))
        .any(|e| neighbors(e).any(|n| !emitted.contains(&n)))
}

struct ImageComparison {
    tile_hits: ExposureCounts,
    oracle_hits: Vec<u32>,
    differing: Vec<(u32, bool)>,
}

/// Renders and captures every scheduled image the same way the pipeline
/// does and compares per-texel counts with the oracle.
pub fn oracle_check(
    scenario: &Scenario,
    ownership: &OwnershipMap,
    ignore: ColorCode,
) -> Result<OracleReport> {
    let oracle = Oracle::new(scenario, ownership)?;
    let [cols, rows] = scenario.rig.tiles;
    let frames = scenario.schedule().frames();
    let jobs: Vec<(usize, Eye)> = (0..frames)
        .flat_map(|f| Eye::BOTH.map(|e| (f, e)))
        .collect();

    let compare = |&(frame, eye): &(usize, Eye)| -> Result<ImageComparison> {
        let rendered = raster::render_frame(scenario, ownership, ignore, frame, eye)?;
        let mut tile_hits = ExposureCounts::new();
        for tile in raster::split_tiles(&rendered.image, cols, rows)? {
            count_image(&tile.image, ignore, &mut tile_hits);
        }
        let emitted: HashSet<u32> = rendered
            .image
            .pixels()
            .iter()
            .filter(|&&c| c != ignore)
            .map(|c| c.value())
            .collect();
        let oracle_hits = oracle.visible_texels(frame, eye)?;
        let seen: HashSet<u32> = oracle_hits.iter().copied().collect();
        let differing = emitted
            .symmetric_difference(&seen)
            .map(|&t| (t, near_silhouette(t, &emitted)))
            .collect();
        Ok(ImageComparison {
            tile_hits,
            oracle_hits,
            differing,
        })
    };

    // bounded batches keep the per-image count arrays from piling up
    let mut raster_counts = ExposureCounts::new();
    let mut oracle_counts = ExposureCounts::new();
    let mut silhouette: BTreeMap<u32, bool> = BTreeMap::new();
    for batch in jobs.chunks(rayon::current_num_threads().max(1) * 2) {
        let results: Vec<ImageComparison> = batch.par_iter().map(compare).collect::<Result<_>>()?;
        for r in results {
            raster_counts.merge(&r.tile_hits);
            for i in r.oracle_hits {
                oracle_counts.increment(i as usize);
            }
            for (t, adj) in r.differing {
                *silhouette.entry(t).or_insert(false) |= adj;
            }
        }
    }

    let mut report = OracleReport {
        owned_texels: 0,
        agreeing_texels: 0,
        disagreements: Vec::new(),
        foreign_colors: 0,
    };
    for (i, n) in raster_counts.nonzero() {
        if ownership.owner_linear(i).is_none() {
            report.foreign_colors += n as u64;
        }
    }
    for (t, _) in ownership.owned() {
        let i = t.linear();
        report.owned_texels += 1;
        let (r, o) = (raster_counts.get_linear(i), oracle_counts.get_linear(i));
        if r == o {
            report.agreeing_texels += 1;
        } else {
            report.disagreements.push(Disagreement {
                texel: t,
                raster: r,
                oracle: o,
                silhouette_adjacent: silhouette.get(&(i as u32)).copied().unwrap_or(false),
            });
        }
    }
    Ok(report)
}

pub const AGREE_COLOR: ColorCode = ColorCode::from_rgb(64, 64, 64);
pub const SILHOUETTE_COLOR: ColorCode = ColorCode::from_rgb(255, 165, 0);
pub const INTERIOR_COLOR: ColorCode = ColorCode::from_rgb(255, 0, 0);

/// Texture-space map: black unowned, gray agreeing, orange silhouette
/// disagreements, red other disagreements.
pub fn disagreement_image(report: &OracleReport, ownership: &OwnershipMap) -> ColorImage {
    let size = TEXTURE_SIZE as usize;
    let mut img = ColorImage::filled(size, size, ColorCode::from_rgb(0, 0, 0));
    for (t, _) in ownership.owned() {
        img.set(t.x as usize, t.y as usize, AGREE_COLOR);
    }
    for d in &report.disagreements {
        let c = if d.silhouette_adjacent {
            SILHOUETTE_COLOR
        } else {
            INTERIOR_COLOR
        };
        img.set(d.texel.x as usize, d.texel.y as usize, c);
    }
    img
}

//! Part-labeled meshes with pre-unwrapped UVs, texel ownership, the part
//! identification texture (PIdT) and the per-part texel census.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::coverage;
use crate::error::{Error, Result};
use crate::image::ColorImage;
use crate::palette::{ColorCode, ColorSet, TexelIndex, COLOR_COUNT, TEXTURE_SIZE};

pub const OTHERS: &str = "Others";

/// Texel-space position of a UV coordinate. OBJ `v` grows upward while
/// texel rows grow downward.
#[inline]
pub fn uv_to_texel_space(uv: [f64; 2]) -> [f64; 2] {
    let size = TEXTURE_SIZE as f64;
    [uv[0] * size, (1.0 - uv[1]) * size]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartId(pub u16);

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub indices: [u32; 3],
    pub uvs: [[f64; 2]; 3],
    pub part: PartId,
    /// Source polygon; triangles from one polygon share an id.
    pub face: u32,
}

impl Triangle {
    pub fn texel_space(&self) -> [[f64; 2]; 3] {
        self.uvs.map(uv_to_texel_space)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMesh {
    pub vertices: Vec<DVec3>,
    pub triangles: Vec<Triangle>,
    pub parts: Vec<String>,
}

impl LabeledMesh {
    pub fn positions(&self, tri: &Triangle) -> [DVec3; 3] {
        tri.indices.map(|i| self.vertices[i as usize])
    }

    pub fn part_name(&self, id: PartId) -> &str {
        &self.parts[id.0 as usize]
    }

    /// Length of the bounding box diagonal, used to scale tolerances.
    pub fn extent(&self) -> f64 {
        bounding_diagonal(&self.vertices)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.triangles.iter().enumerate() {
            if t.part.0 as usize >= self.parts.len() {
                return Err(Error::Consistency(format!(
                    "triangle {i} has unknown part {}",
                    t.part.0
                )));
            }
            if t.indices.iter().any(|&v| v as usize >= self.vertices.len()) {
                return Err(Error::Consistency(format!(
                    "triangle {i} references a missing vertex"
                )));
            }
            if t.uvs.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::Unwrap(format!(
                    "triangle {i} has UVs outside the unit square"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn bounding_diagonal(points: &[DVec3]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let (lo, hi) = points
        .iter()
        .fold((*first, *first), |(lo, hi), p| (lo.min(*p), hi.max(*p)));
    (hi - lo).length()
}

/// Untextured triangle soup, used for occluders.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Geometry {
    pub vertices: Vec<DVec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl Geometry {
    pub fn append(&mut self, other: &Geometry) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }
}

/// How OBJ group/object names turn into parts.
#[derive(Debug, Clone, Default)]
pub enum PartNaming {
    /// Every distinct group name becomes its own part, in order of appearance.
    #[default]
    GroupNames,
    /// Groups are matched against a part map; unmatched groups go to `Others`.
    Map(PartMap),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartRule {
    pub name: String,
    /// Glob patterns (`*`, `?`, `[...]`) over group names.
    #[serde(default)]
    pub patterns: Vec<String>,
    /// Identification color in the PIdT; assigned automatically if absent.
    #[serde(default)]
    pub color: Option<ColorCode>,
}

/// Editable naming map, stored as TOML with one `[[part]]` table per part.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PartMap {
    #[serde(default, rename = "part")]
    pub parts: Vec<PartRule>,
}

impl PartMap {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let map: PartMap =
            toml::from_str(text).map_err(|e| Error::Config(format!("part map: {e}")))?;
        for rule in &map.parts {
            for p in &rule.patterns {
                glob::Pattern::new(p).map_err(|e| {
                    Error::Config(format!("part {:?} pattern {p:?}: {e}", rule.name))
                })?;
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::format(path, e))
    }

    /// Part names in id order, with `Others` last unless the map defines it.
    pub fn part_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.parts.iter().map(|r| r.name.clone()).collect();
        if !names.iter().any(|n| n == OTHERS) {
            names.push(OTHERS.to_string());
        }
        names
    }

    fn resolve(&self, group: &str) -> &str {
        self.parts
            .iter()
            .find(|r| {
                r.patterns.iter().any(|p| {
                    glob::Pattern::new(p)
                        .map(|p| p.matches(group))
                        .unwrap_or(false)
                })
            })
            .map(|r| r.name.as_str())
            .unwrap_or(OTHERS)
    }
}

fn obj_models(path: &Path) -> Result<Vec<tobj::Model>> {
    let options = tobj::LoadOptions {
        single_index: false,
        triangulate: false,
        ignore_points: true,
        ignore_lines: true,
    };
    let (models, _materials) =
        tobj::load_obj(path, &options).map_err(|e| Error::format(path, e))?;
    Ok(models)
}

fn for_each_polygon(mesh: &tobj::Mesh, mut f: impl FnMut(std::ops::Range<usize>)) {
    if mesh.face_arities.is_empty() {
        for start in (0..mesh.indices.len()).step_by(3) {
            f(start..start + 3);
        }
    } else {
        let mut start = 0;
        for &n in &mesh.face_arities {
            f(start..start + n as usize);
            start += n as usize;
        }
    }
}

fn read_positions(mesh: &tobj::Mesh) -> Vec<DVec3> {
    mesh.positions
        .chunks_exact(3)
        .map(|p| DVec3::new(p[0] as f64, p[1] as f64, p[2] as f64))
        .collect()
}

/// Loads a Wavefront OBJ whose faces carry texture coordinates. Polygons
/// are fan-triangulated.
pub fn load_mesh(path: &Path, naming: &PartNaming) -> Result<LabeledMesh> {
    let models = obj_models(path)?;
    let mut parts: Vec<String> = match naming {
        PartNaming::GroupNames => Vec::new(),
        PartNaming::Map(map) => map.part_names(),
    };
    let mut part_ids: HashMap<String, PartId> = parts
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), PartId(i as u16)))
        .collect();

    let mut mesh = LabeledMesh {
        vertices: Vec::new(),
        triangles: Vec::new(),
        parts: Vec::new(),
    };
    let mut face = 0u32;
    for model in &models {
        let m = &model.mesh;
        if m.indices.is_empty() {
            continue;
        }
        if m.texcoords.is_empty() || m.texcoord_indices.len() != m.indices.len() {
            return Err(Error::Unwrap(format!(
                "{}: group {:?} has faces without texture coordinates",
                path.display(),
                model.name
            )));
        }
        let part_name = match naming {
            PartNaming::GroupNames => model.name.as_str(),
            PartNaming::Map(map) => map.resolve(&model.name),
        };
        let part = match part_ids.get(part_name) {
            Some(&id) => id,
            None => {
                let id = PartId(parts.len() as u16);
                parts.push(part_name.to_string());
                part_ids.insert(part_name.to_string(), id);
                id
            }
        };

        let base = mesh.vertices.len() as u32;
        mesh.vertices.extend(read_positions(m));
        let uv = |k: usize| {
            let t = m.texcoord_indices[k] as usize;
            [m.texcoords[2 * t] as f64, m.texcoords[2 * t + 1] as f64]
        };
        for_each_polygon(m, |range| {
            let corners: Vec<usize> = range.collect();
            for k in 1..corners.len().saturating_sub(1) {
                let c = [corners[0], corners[k], corners[k + 1]];
                mesh.triangles.push(Triangle {
                    indices: c.map(|i| base + m.indices[i]),
                    uvs: c.map(uv),
                    part,
                    face,
                });
            }
            face += 1;
        });
    }
    if mesh.triangles.is_empty() {
        return Err(Error::format(path, "no triangles"));
    }
    if parts.len() > u16::MAX as usize {
        return Err(Error::format(path, "too many parts"));
    }
    mesh.parts = parts;
    mesh.validate().map_err(|e| match e {
        Error::Unwrap(r) => Error::Unwrap(format!("{}: {r}", path.display())),
        other => other,
    })?;
    Ok(mesh)
}

/// Loads an OBJ as plain geometry; texture coordinates are not required.
pub fn load_geometry(path: &Path) -> Result<Geometry> {
    let mut geo = Geometry::default();
    for model in obj_models(path)? {
        let m = &model.mesh;
        let base = geo.vertices.len() as u32;
        geo.vertices.extend(read_positions(m));
        for_each_polygon(m, |range| {
            let corners: Vec<usize> = range.collect();
            for k in 1..corners.len().saturating_sub(1) {
                geo.triangles
                    .push([corners[0], corners[k], corners[k + 1]].map(|i| base + m.indices[i]));
            }
        });
    }
    Ok(geo)
}

pub const UNOWNED: u32 = u32::MAX;

/// Texel → owning triangle, over the full 4096×4096 texture.
#[derive(Clone, PartialEq, Eq)]
pub struct OwnershipMap {
    owner: Vec<u32>,
}

impl std::fmt::Debug for OwnershipMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OwnershipMap({} owned)", self.owned_count())
    }
}

impl OwnershipMap {
    #[inline]
    pub fn owner(&self, t: TexelIndex) -> Option<u32> {
        self.owner_linear(t.linear())
    }

    #[inline]
    pub fn owner_linear(&self, index: usize) -> Option<u32> {
        match self.owner[index] {
            UNOWNED => None,
            tri => Some(tri),
        }
    }

    pub fn owned_count(&self) -> usize {
        self.owner.iter().filter(|&&o| o != UNOWNED).count()
    }

    /// Owned texels in linear order.
    pub fn owned(&self) -> impl Iterator<Item = (TexelIndex, u32)> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, &o)| o != UNOWNED)
            .map(|(i, &o)| (TexelIndex::from_linear(i), o))
    }

    /// Palette colors of all owned texels.
    pub fn covered_colors(&self) -> ColorSet {
        self.owned()
            .map(|(t, _)| ColorCode::from_raw(t.linear() as u32))
            .collect()
    }
}

/// Rasterizes every triangle into texel space and records overlaps.
fn ownership_with_overlaps(mesh: &LabeledMesh) -> (OwnershipMap, Vec<TexelIndex>) {
    let size = TEXTURE_SIZE as usize;
    let mut owner = vec![UNOWNED; COLOR_COUNT];
    let mut overlaps = Vec::new();
    for (i, tri) in mesh.triangles.iter().enumerate() {
        coverage::rasterize(tri.texel_space(), size, size, |x, y, _| {
            let slot = &mut owner[y * size + x];
            if *slot == UNOWNED {
                *slot = i as u32;
            } else {
                overlaps.push(TexelIndex {
                    x: x as u32,
                    y: y as u32,
                });
            }
        });
    }
    overlaps.sort();
    overlaps.dedup();
    (OwnershipMap { owner }, overlaps)
}

/// Ownership of every texel by at most one triangle, using the same
/// coverage rule the renderer samples with.
pub fn texel_ownership(mesh: &LabeledMesh) -> Result<OwnershipMap> {
    let (map, overlaps) = ownership_with_overlaps(mesh);
    if overlaps.is_empty() {
        Ok(map)
    } else {
        Err(Error::Overlap { texels: overlaps })
    }
}

/// Texel gap between distinct faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Margin {
    /// Fewer than two faces own texels.
    Unbounded,
    Exact(u32),
    /// No foreign texel within the search window.
    AtLeast(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UvLayoutReport {
    pub valid: bool,
    pub overlaps: Vec<TexelIndex>,
    pub margin: Margin,
    pub warnings: Vec<String>,
}

/// Margins are searched up to this Chebyshev radius.
pub const MARGIN_SEARCH: u32 = 4;

pub fn validate_uv_layout(mesh: &LabeledMesh) -> UvLayoutReport {
    let (map, overlaps) = ownership_with_overlaps(mesh);
    let size = TEXTURE_SIZE as i64;
    let face_of = |idx: usize| {
        map.owner_linear(idx)
            .map(|o| mesh.triangles[o as usize].face)
    };

    let mut faces_seen = std::collections::BTreeSet::new();
    let mut best: Option<u32> = None;
    let r = MARGIN_SEARCH as i64;
    for (t, tri) in map.owned() {
        let face = mesh.triangles[tri as usize].face;
        faces_seen.insert(face);
        let (x, y) = (t.x as i64, t.y as i64);
        // forward half-window is enough: every pair is seen from one side
        for dy in 0..=r {
            for dx in -r..=r {
                if dy == 0 && dx <= 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || nx >= size || ny >= size {
                    continue;
                }
                if let Some(other) = face_of((ny * size + nx) as usize) {
                    if other != face {
                        let gap = dx.unsigned_abs().max(dy as u64) as u32 - 1;
                        best = Some(best.map_or(gap, |b| b.min(gap)));
                    }
                }
            }
        }
    }
    let margin = match (faces_seen.len(), best) {
        (0 | 1, _) => Margin::Unbounded,
        (_, Some(g)) => Margin::Exact(g),
        (_, None) => Margin::AtLeast(MARGIN_SEARCH),
    };
    let mut warnings = Vec::new();
    if let Margin::Exact(g) = margin {
        if g < 1 {
            warnings.push(format!("faces touch in UV space (margin {g} texels)"));
        }
    }
    if !overlaps.is_empty() {
        warnings.push(format!(
            "{} texels are owned by more than one triangle",
            overlaps.len()
        ));
    }
    UvLayoutReport {
        valid: overlaps.is_empty(),
        overlaps,
        margin,
        warnings,
    }
}

pub const NO_PART: u16 = u16::MAX;

/// Texel → part, the data behind the part identification texture.
#[derive(Clone, PartialEq, Eq)]
pub struct PartIdentificationTexture {
    pub part_names: Vec<String>,
    texel_part: Vec<u16>,
}

impl std::fmt::Debug for PartIdentificationTexture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "PartIdentificationTexture({} parts)",
            self.part_names.len()
        )
    }
}

impl PartIdentificationTexture {
    pub fn from_ownership(mesh: &LabeledMesh, ownership: &OwnershipMap) -> Self {
        let texel_part = ownership
            .owner
            .iter()
            .map(|&o| {
                if o == UNOWNED {
                    NO_PART
                } else {
                    mesh.triangles[o as usize].part.0
                }
            })
            .collect();
        PartIdentificationTexture {
            part_names: mesh.parts.clone(),
            texel_part,
        }
    }

    pub fn build(mesh: &LabeledMesh) -> Result<Self> {
        Ok(Self::from_ownership(mesh, &texel_ownership(mesh)?))
    }

    #[inline]
    pub fn part_at(&self, t: TexelIndex) -> Option<PartId> {
        self.part_at_linear(t.linear())
    }

    #[inline]
    pub fn part_at_linear(&self, index: usize) -> Option<PartId> {
        match self.texel_part[index] {
            NO_PART => None,
            p => Some(PartId(p)),
        }
    }

    /// Reconstructs the texture from a baked image and its part table.
    pub fn from_image(img: &ColorImage, table: &PartTable) -> Result<Self> {
        if img.width() != TEXTURE_SIZE as usize || img.height() != TEXTURE_SIZE as usize {
            return Err(Error::Consistency(format!(
                "PIdT image is {}x{}, expected {TEXTURE_SIZE}x{TEXTURE_SIZE}",
                img.width(),
                img.height()
            )));
        }
        let by_color: HashMap<ColorCode, u16> =
            table.entries.iter().map(|e| (e.color, e.id.0)).collect();
        let mut texel_part = Vec::with_capacity(COLOR_COUNT);
        for (i, &c) in img.pixels().iter().enumerate() {
            if c == table.background {
                texel_part.push(NO_PART);
            } else if let Some(&p) = by_color.get(&c) {
                texel_part.push(p);
            } else {
                return Err(Error::Consistency(format!(
                    "PIdT texel {:?} has color {c} not in the part table",
                    TexelIndex::from_linear(i)
                )));
            }
        }
        let mut part_names = vec![String::new(); table.entries.len()];
        for e in &table.entries {
            let slot = part_names
                .get_mut(e.id.0 as usize)
                .ok_or_else(|| Error::Consistency(format!("part id {} out of sequence", e.id.0)))?;
            *slot = e.name.clone();
        }
        Ok(PartIdentificationTexture {
            part_names,
            texel_part,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TexelCensus {
    pub part_names: Vec<String>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl TexelCensus {
    pub fn count_of(&self, name: &str) -> Option<u64> {
        self.part_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.counts[i])
    }
}

pub fn census(pidt: &PartIdentificationTexture) -> TexelCensus {
    let mut counts = vec![0u64; pidt.part_names.len()];
    for &p in &pidt.texel_part {
        if p != NO_PART {
            counts[p as usize] += 1;
        }
    }
    TexelCensus {
        part_names: pidt.part_names.clone(),
        total: counts.iter().sum(),
        counts,
    }
}

pub const PIDT_BACKGROUND: ColorCode = ColorCode::from_rgb(0, 0, 0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub id: PartId,
    pub name: String,
    pub color: ColorCode,
    pub texels: u64,
}

/// Identification colors per part, plus the background of unowned texels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartTable {
    pub format_version: u32,
    pub background: ColorCode,
    pub entries: Vec<PartEntry>,
}

/// Deterministic, well-spread identification color for part `i`.
fn auto_color(i: usize) -> ColorCode {
    // golden-ratio hue walk, alternating value bands
    let h = (i as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let s = 0.85 - 0.25 * ((i / 7) % 2) as f64;
    let v = 0.95 - 0.3 * ((i / 3) % 2) as f64;
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |f: f64| ((f + m) * 255.0).round() as u8;
    ColorCode::from_rgb(q(r), q(g), q(b))
}

impl PartTable {
    /// Builds the table for `census`, taking explicit colors from `map` where
    /// given and assigning the rest automatically.
    pub fn new(census: &TexelCensus, map: Option<&PartMap>) -> Result<Self> {
        let explicit: HashMap<&str, ColorCode> = map
            .map(|m| {
                m.parts
                    .iter()
                    .filter_map(|r| r.color.map(|c| (r.name.as_str(), c)))
                    .collect()
            })
            .unwrap_or_default();
        let mut used: ColorSet = explicit.values().copied().collect();
        used.insert(PIDT_BACKGROUND);
        let mut next_auto = 0usize;
        let mut entries = Vec::with_capacity(census.part_names.len());
        for (i, name) in census.part_names.iter().enumerate() {
            let color = match explicit.get(name.as_str()) {
                Some(&c) => c,
                None => loop {
                    let c = auto_color(next_auto);
                    next_auto += 1;
                    if used.insert(c) {
                        break c;
                    }
                },
            };
            entries.push(PartEntry {
                id: PartId(i as u16),
                name: name.clone(),
                color,
                texels: census.counts[i],
            });
        }
        let table = PartTable {
            format_version: 1,
            background: PIDT_BACKGROUND,
            entries,
        };
        table.check()?;
        Ok(table)
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = ColorSet::new();
        seen.insert(self.background);
        for e in &self.entries {
            if !seen.insert(e.color) {
                return Err(Error::Config(format!(
                    "identification color {} of part {:?} is not unique",
                    e.color, e.name
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: PartTable = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        table.check()?;
        Ok(table)
    }

    pub fn census(&self) -> TexelCensus {
        TexelCensus {
            part_names: self.entries.iter().map(|e| e.name.clone()).collect(),
            counts: self.entries.iter().map(|e| e.texels).collect(),
            total: self.entries.iter().map(|e| e.texels).sum(),
        }
    }
}

pub fn bake_pidt_image(pidt: &PartIdentificationTexture, table: &PartTable) -> ColorImage {
    let colors: Vec<ColorCode> = table.entries.iter().map(|e| e.color).collect();
    let pixels = pidt
        .texel_part
        .iter()
        .map(|&p| {
            if p == NO_PART {
                table.background
            } else {
                colors[p as usize]
            }
        })
        .collect();
    ColorImage::from_colors(TEXTURE_SIZE as usize, TEXTURE_SIZE as usize, pixels)
        .expect("PIdT dimensions")
}

pub const PIDT_IMAGE: &str = "pidt.png";
pub const PART_TABLE: &str = "parts.json";

/// Builds ownership, census and identification colors for `mesh` and writes
/// `pidt.png` plus the `parts.json` sidecar into `dir`.
pub fn bake_to_dir(mesh: &LabeledMesh, map: Option<&PartMap>, dir: &Path) -> Result<PartTable> {
    let pidt = PartIdentificationTexture::build(mesh)?;
    let table = PartTable::new(&census(&pidt), map)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    bake_pidt_image(&pidt, &table).write_png(&dir.join(PIDT_IMAGE))?;
    table.write(&dir.join(PART_TABLE))?;
    Ok(table)
}

/// Reads a PIdT directory written by [`bake_to_dir`].
pub fn read_pidt_dir(dir: &Path) -> Result<(PartIdentificationTexture, PartTable)> {
    let table = PartTable::read(&dir.join(PART_TABLE))?;
    let img = ColorImage::read_png(&dir.join(PIDT_IMAGE))?;
    let pidt = PartIdentificationTexture::from_image(&img, &table)?;
    let recount = census(&pidt);
    if recount != table.census() {
        return Err(Error::Consistency(
            "PIdT texel counts disagree with the part table".into(),
        ));
    }
    Ok((pidt, table))
}

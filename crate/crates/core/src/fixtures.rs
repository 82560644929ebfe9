//! Synthetic subjects and scenes: texel-aligned boxes and quads, a blocky
//! vehicle, and the small scenarios used for verification.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use glam::DVec3;

use crate::error::{Error, Result};
use crate::meshkit::{Geometry, LabeledMesh, PartId, Triangle};
use crate::palette::TEXTURE_SIZE;
use crate::scene::{cuboid, CameraRig, Keyframe, Scenario, SegmentKind, Trajectory};

/// Accumulates textured quads, packing each into its own rectangular UV
/// island on texel boundaries.
#[derive(Debug)]
pub struct MeshBuilder {
    mesh: LabeledMesh,
    margin: u32,
    cursor: [u32; 2],
    shelf_height: u32,
    next_face: u32,
}

impl MeshBuilder {
    pub fn new(margin: u32) -> Self {
        MeshBuilder {
            mesh: LabeledMesh {
                vertices: Vec::new(),
                triangles: Vec::new(),
                parts: Vec::new(),
            },
            margin,
            cursor: [margin, margin],
            shelf_height: 0,
            next_face: 0,
        }
    }

    pub fn part(&mut self, name: &str) -> PartId {
        match self.mesh.parts.iter().position(|p| p == name) {
            Some(i) => PartId(i as u16),
            None => {
                self.mesh.parts.push(name.to_string());
                PartId(self.mesh.parts.len() as u16 - 1)
            }
        }
    }

    fn allocate(&mut self, w: u32, h: u32) -> Result<[u32; 2]> {
        let size = TEXTURE_SIZE;
        if self.cursor[0] + w + self.margin > size {
            self.cursor = [
                self.margin,
                self.cursor[1] + self.shelf_height + self.margin,
            ];
            self.shelf_height = 0;
        }
        if self.cursor[0] + w + self.margin > size || self.cursor[1] + h + self.margin > size {
            return Err(Error::Unwrap(format!("no room for a {w}x{h} island")));
        }
        let at = self.cursor;
        self.cursor[0] += w + self.margin;
        self.shelf_height = self.shelf_height.max(h);
        Ok(at)
    }

    /// Adds a planar quad given counter-clockwise (seen from the front)
    /// corners, with `texels[0]` texels along `c0→c1` and `texels[1]` along
    /// `c0→c3`.
    pub fn quad(&mut self, corners: [DVec3; 4], texels: [u32; 2], part: PartId) -> Result<()> {
        let [w, h] = texels.map(|n| n.max(1));
        let [ox, oy] = self.allocate(w, h)?;
        let uv = |x: u32, y: u32| {
            let s = TEXTURE_SIZE as f64;
            [x as f64 / s, 1.0 - y as f64 / s]
        };
        let uvs = [
            uv(ox, oy + h),
            uv(ox + w, oy + h),
            uv(ox + w, oy),
            uv(ox, oy),
        ];
        let base = self.mesh.vertices.len() as u32;
        self.mesh.vertices.extend_from_slice(&corners);
        let face = self.next_face;
        self.next_face += 1;
        for [a, b, c] in [[0, 1, 2], [0, 2, 3]] {
            self.mesh.triangles.push(Triangle {
                indices: [base + a, base + b, base + c],
                uvs: [uvs[a as usize], uvs[b as usize], uvs[c as usize]],
                part,
                face,
            });
        }
        Ok(())
    }

    /// Adds the six outward faces of an axis-aligned box. `parts` follows
    /// the order +x, −x, +y, −y, +z, −z.
    pub fn cuboid(
        &mut self,
        center: DVec3,
        size: DVec3,
        texels_per_meter: f64,
        parts: [PartId; 6],
    ) -> Result<()> {
        let half = size / 2.0;
        for (k, (normal, u, v)) in BOX_FACES.iter().enumerate() {
            let (n, u, v) = (*normal * half, *u * half, *v * half);
            let corners = [
                center + n - u - v,
                center + n + u - v,
                center + n + u + v,
                center + n - u + v,
            ];
            let texels = [
                (2.0 * u.length() * texels_per_meter).round() as u32,
                (2.0 * v.length() * texels_per_meter).round() as u32,
            ];
            self.quad(corners, texels, parts[k])?;
        }
        Ok(())
    }

    pub fn finish(self) -> LabeledMesh {
        self.mesh
    }
}

// (outward normal, u axis, v axis) with u × v = normal
const BOX_FACES: [(DVec3, DVec3, DVec3); 6] = [
    (DVec3::X, DVec3::Y, DVec3::Z),
    (DVec3::NEG_X, DVec3::NEG_Y, DVec3::Z),
    (DVec3::Y, DVec3::NEG_X, DVec3::Z),
    (DVec3::NEG_Y, DVec3::X, DVec3::Z),
    (DVec3::Z, DVec3::X, DVec3::Y),
    (DVec3::NEG_Z, DVec3::X, DVec3::NEG_Y),
];

pub const CUBE_FACES: [&str; 6] = ["Front", "Back", "Left", "Right", "Top", "Bottom"];

/// A cube centered on the origin with one part per face, each face an
/// `n × n` texel island.
pub fn textured_cube(size: f64, n: u32, margin: u32) -> LabeledMesh {
    let mut b = MeshBuilder::new(margin);
    let parts = CUBE_FACES.map(|name| b.part(name));
    b.cuboid(DVec3::ZERO, DVec3::splat(size), n as f64 / size, parts)
        .expect("cube islands fit the texture");
    b.finish()
}

/// A single-part upright quad in the model's `x = 0` plane, facing +x.
pub fn textured_quad(width: f64, height: f64, texels: [u32; 2], part: &str) -> LabeledMesh {
    let mut b = MeshBuilder::new(4);
    let p = b.part(part);
    let (w, h) = (width / 2.0, height / 2.0);
    let corners = [
        DVec3::new(0.0, -w, -h),
        DVec3::new(0.0, w, -h),
        DVec3::new(0.0, w, h),
        DVec3::new(0.0, -w, h),
    ];
    b.quad(corners, texels, p)
        .expect("quad island fits the texture");
    b.finish()
}

/// Group names of the blocky vehicle, as written to OBJ.
pub const VEHICLE_PART_MAP: &str = r##"# group-name patterns for the sample vehicle
[[part]]
name = "Hood"
patterns = ["hood*"]

[[part]]
name = "Windshield"
patterns = ["windshield*"]

[[part]]
name = "Grill"
patterns = ["grill*"]

[[part]]
name = "Front Bumper"
patterns = ["bumper_front*"]

[[part]]
name = "Left Headlight"
patterns = ["headlight_l*"]

[[part]]
name = "Right Headlight"
patterns = ["headlight_r*"]

[[part]]
name = "Roof"
patterns = ["roof*"]

[[part]]
name = "Left Doors"
patterns = ["door_l*"]

[[part]]
name = "Right Doors"
patterns = ["door_r*"]

[[part]]
name = "Wheels"
patterns = ["wheel_*"]
"##;

/// A coarse sedan built from boxes and one slanted windshield, forward +x,
/// wheels resting on z = 0. Parts carry raw group names; see
/// [`VEHICLE_PART_MAP`].
pub fn vehicle(texels_per_meter: f64) -> Result<LabeledMesh> {
    let mut b = MeshBuilder::new(2);
    let d = texels_per_meter;
    let block = |b: &mut MeshBuilder, name: &str, c: [f64; 3], s: [f64; 3]| {
        let p = b.part(name);
        b.cuboid(DVec3::from_array(c), DVec3::from_array(s), d, [p; 6])
    };
    block(&mut b, "body", [0.0, 0.0, 0.6], [4.0, 1.8, 0.6])?;
    block(&mut b, "hood_panel", [1.35, 0.0, 0.93], [1.3, 1.7, 0.06])?;
    block(&mut b, "bumper_front", [2.08, 0.0, 0.42], [0.16, 1.8, 0.24])?;
    block(&mut b, "grill_mesh", [2.03, 0.0, 0.7], [0.06, 0.9, 0.25])?;
    block(
        &mut b,
        "headlight_l",
        [2.03, 0.66, 0.74],
        [0.06, 0.34, 0.14],
    )?;
    block(
        &mut b,
        "headlight_r",
        [2.03, -0.66, 0.74],
        [0.06, 0.34, 0.14],
    )?;
    block(&mut b, "cabin", [-0.35, 0.0, 1.15], [1.9, 1.6, 0.5])?;
    block(&mut b, "roof_panel", [-0.35, 0.0, 1.43], [1.8, 1.55, 0.06])?;
    block(
        &mut b,
        "door_l_front",
        [0.25, 0.92, 0.62],
        [0.95, 0.04, 0.5],
    )?;
    block(
        &mut b,
        "door_l_rear",
        [-0.75, 0.92, 0.62],
        [0.95, 0.04, 0.5],
    )?;
    block(
        &mut b,
        "door_r_front",
        [0.25, -0.92, 0.62],
        [0.95, 0.04, 0.5],
    )?;
    block(
        &mut b,
        "door_r_rear",
        [-0.75, -0.92, 0.62],
        [0.95, 0.04, 0.5],
    )?;
    block(&mut b, "trunk_lid", [-1.6, 0.0, 0.93], [0.8, 1.7, 0.06])?;
    for (x, y) in [(1.3, 0.82), (1.3, -0.82), (-1.3, 0.82), (-1.3, -0.82)] {
        block(&mut b, "wheel_tire", [x, y, 0.33], [0.66, 0.24, 0.66])?;
    }
    let p = b.part("windshield_glass");
    let (lo, hi) = ((0.75, 0.9), (0.58, 1.4));
    let corners = [
        DVec3::new(lo.0, -0.78, lo.1),
        DVec3::new(lo.0, 0.78, lo.1),
        DVec3::new(hi.0, 0.78, hi.1),
        DVec3::new(hi.0, -0.78, hi.1),
    ];
    let slant = (corners[3] - corners[0]).length();
    b.quad(
        corners,
        [(1.56 * d).round() as u32, (slant * d).round() as u32],
        p,
    )?;
    Ok(b.finish())
}

/// Writes `mesh` as Wavefront OBJ with one group per part. Quads built by
/// [`MeshBuilder`] are written back as single polygons.
pub fn write_obj(mesh: &LabeledMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    let mut vt = 0usize;
    for (pi, name) in mesh.parts.iter().enumerate() {
        let tris: Vec<&Triangle> = mesh
            .triangles
            .iter()
            .filter(|t| t.part.0 as usize == pi)
            .collect();
        if tris.is_empty() {
            continue;
        }
        writeln!(out, "g {}", name.replace(char::is_whitespace, "_")).unwrap();
        let mut i = 0;
        while i < tris.len() {
            // gather a fan sharing the first corner within one source face
            let mut corners = vec![(tris[i].indices[0], tris[i].uvs[0])];
            corners.push((tris[i].indices[1], tris[i].uvs[1]));
            corners.push((tris[i].indices[2], tris[i].uvs[2]));
            let mut j = i + 1;
            while j < tris.len()
                && tris[j].face == tris[i].face
                && tris[j].indices[0] == tris[i].indices[0]
                && tris[j].indices[1] == corners.last().unwrap().0
            {
                corners.push((tris[j].indices[2], tris[j].uvs[2]));
                j += 1;
            }
            let mut line = String::from("f");
            for (v, uv) in &corners {
                vt += 1;
                writeln!(out, "vt {} {}", uv[0], uv[1]).unwrap();
                write!(line, " {}/{}", v + 1, vt).unwrap();
            }
            out.push_str(&line);
            out.push('\n');
            i = j;
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_geometry_obj(geo: &Geometry, path: &Path) -> Result<()> {
    let mut out = String::new();
    for v in &geo.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for t in &geo.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub const CUBE_SIZE: f64 = 2.0;
pub const CUBE_TEXELS: u32 = 64;

/// A 2 m cube approaching the pedestrian head-on while a wall hides the
/// western half of it. `frames` capture times at 60 per second.
pub fn cube_behind_wall(frames: usize) -> Scenario {
    let rate = 60.0;
    let duration = (frames.max(2) - 1) as f64 / rate;
    let eye = crate::scene::EYE_HEIGHT;
    let yaw = -std::f64::consts::FRAC_PI_2;
    let key = |time, y| Keyframe {
        time,
        position: DVec3::new(0.0, y, eye),
        yaw,
        segment: SegmentKind::Cruise,
    };
    Scenario {
        id: "cube".into(),
        subject: textured_cube(CUBE_SIZE, CUBE_TEXELS, 4),
        part_map: None,
        trajectory: Trajectory::new(vec![key(0.0, 5.5), key(duration, 5.1)])
            .expect("static keyframes"),
        look_offset: DVec3::ZERO,
        occluders: cuboid(DVec3::new(-5.0, 2.0, 1.5), DVec3::new(10.0, 0.2, 5.0), 0.0),
        rig: CameraRig::default(),
        rate,
        duration,
    }
}

pub const QUAD_SIZE: f64 = 1.5;
pub const QUAD_TEXELS: u32 = 64;

/// An unoccluded face-on panel 4 m north of the head for 3 s at 60 per
/// second.
pub fn static_quad() -> Scenario {
    let position = DVec3::new(0.0, 4.0, crate::scene::EYE_HEIGHT);
    Scenario {
        id: "quad".into(),
        subject: textured_quad(QUAD_SIZE, QUAD_SIZE, [QUAD_TEXELS; 2], "Panel"),
        part_map: None,
        trajectory: Trajectory::stationary(position, -std::f64::consts::FRAC_PI_2, 3.0)
            .expect("stationary"),
        look_offset: DVec3::ZERO,
        occluders: Geometry::default(),
        rig: CameraRig::default(),
        rate: 60.0,
        duration: 3.0,
    }
}

/// Writes the cube-behind-wall scenario as `cube.obj` plus `scenario.toml`
/// and returns the scenario path.
pub fn write_cube_scenario(dir: &Path, frames: usize) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = cube_behind_wall(frames);
    write_obj(&s.subject, &dir.join("cube.obj"))?;
    let toml = format!(
        r#"id = "cube"
rate = {rate:?}
duration = {duration:?}

[subject]
mesh = "cube.obj"

[[subject.keyframes]]
time = 0.0
position = [0.0, 5.5, 1.75]
yaw_deg = -90.0
segment = "cruise"

[[subject.keyframes]]
time = {duration:?}
position = [0.0, 5.1, 1.75]
yaw_deg = -90.0

[[occluder]]
kind = "box"
center = [-5.0, 2.0, 1.5]
size = [10.0, 0.2, 5.0]

[rig]
head = [0.0, 0.0]
"#,
        rate = s.rate,
        duration = s.duration
    );
    let path = dir.join("scenario.toml");
    fs::write(&path, toml).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

//! Deterministic software rasterizer: near-plane clipping, back-face
//! culling, a 32-bit float depth buffer and nearest-texel palette lookup.
//! Occluders and background are flat ignore color.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::coverage;
use crate::error::{Error, Result};
use crate::image::ColorImage;
use crate::meshkit::{uv_to_texel_space, Geometry, LabeledMesh, OwnershipMap};
use crate::palette::{ColorCode, TexelIndex, TEXTURE_SIZE};
use crate::scene::{Camera, Eye, Pose, Scenario};

/// Chebyshev radius searched for an owned texel when a sample lands just
/// outside its triangle's island.
pub const SNAP_RADIUS: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipVertex {
    /// Camera space: x right, y up, z forward.
    pub view: DVec3,
    pub uv: [f64; 2],
}

/// Culls back faces (counter-clockwise is front) and clips against the near
/// plane. Returns up to two triangles with the input winding.
pub fn backface_and_clip(
    world: [DVec3; 3],
    uvs: [[f64; 2]; 3],
    camera: &Camera,
) -> Vec<[ClipVertex; 3]> {
    let normal = (world[1] - world[0]).cross(world[2] - world[0]);
    if normal.dot(world[0] - camera.center) >= 0.0 {
        return Vec::new();
    }
    let verts: [ClipVertex; 3] = std::array::from_fn(|i| ClipVertex {
        view: camera.to_view(world[i]),
        uv: uvs[i],
    });
    clip_near(verts, camera.near)
}

fn clip_near(verts: [ClipVertex; 3], near: f64) -> Vec<[ClipVertex; 3]> {
    let inside = |v: &ClipVertex| v.view.z >= near;
    if verts.iter().all(inside) {
        return vec![verts];
    }
    let mut poly: Vec<ClipVertex> = Vec::with_capacity(4);
    for i in 0..3 {
        let (a, b) = (verts[i], verts[(i + 1) % 3]);
        if inside(&a) {
            poly.push(a);
        }
        if inside(&a) != inside(&b) {
            let t = (near - a.view.z) / (b.view.z - a.view.z);
            let mut view = a.view.lerp(b.view, t);
            view.z = near;
            poly.push(ClipVertex {
                view,
                uv: [
                    a.uv[0] + (b.uv[0] - a.uv[0]) * t,
                    a.uv[1] + (b.uv[1] - a.uv[1]) * t,
                ],
            });
        }
    }
    (1..poly.len().saturating_sub(1))
        .map(|k| [poly[0], poly[k], poly[k + 1]])
        .collect()
}

/// What a rasterized triangle writes.
#[derive(Clone, Copy)]
enum Fill {
    Flat,
    Subject(u32),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderStats {
    /// Subject samples moved onto a nearby owned texel.
    pub snapped: u64,
    /// Subject samples with no owned texel in reach, drawn as ignore color.
    pub dropped: u64,
}

/// Everything needed to draw one view.
pub struct ViewInput<'a> {
    pub subject: Option<(&'a LabeledMesh, &'a OwnershipMap, Pose)>,
    pub occluders: &'a Geometry,
    pub ignore: ColorCode,
}

struct Target<'a> {
    camera: &'a Camera,
    image: Vec<u32>,
    depth: Vec<f32>,
    ownership: Option<&'a OwnershipMap>,
    ignore: u32,
    stats: RenderStats,
}

impl Target<'_> {
    fn draw(&mut self, world: [DVec3; 3], uvs: [[f64; 2]; 3], fill: Fill) -> Result<()> {
        if world.iter().any(|p| !p.is_finite()) {
            return Err(Error::Geometry(format!("non-finite vertex {world:?}")));
        }
        let (w, h) = (self.camera.width, self.camera.height);
        let near = self.camera.near;
        for tri in backface_and_clip(world, uvs, self.camera) {
            let screen = tri.map(|v| self.camera.view_to_image(v.view));
            let inv_z = tri.map(|v| 1.0 / v.view.z);
            let depth = tri.map(|v| 1.0 - near / v.view.z);
            let uv_z: [[f64; 2]; 3] =
                std::array::from_fn(|i| [tri[i].uv[0] * inv_z[i], tri[i].uv[1] * inv_z[i]]);
            let ok = coverage::rasterize(screen, w, h, |x, y, b| {
                let d = (b[0] * depth[0] + b[1] * depth[1] + b[2] * depth[2]) as f32;
                let i = y * w + x;
                if d.partial_cmp(&self.depth[i]) != Some(std::cmp::Ordering::Less) {
                    return;
                }
                self.depth[i] = d;
                self.image[i] = match fill {
                    Fill::Flat => self.ignore,
                    Fill::Subject(tri_id) => {
                        let q = b[0] * inv_z[0] + b[1] * inv_z[1] + b[2] * inv_z[2];
                        let u = (b[0] * uv_z[0][0] + b[1] * uv_z[1][0] + b[2] * uv_z[2][0]) / q;
                        let v = (b[0] * uv_z[0][1] + b[1] * uv_z[1][1] + b[2] * uv_z[2][1]) / q;
                        self.sample([u, v], tri_id).unwrap_or(self.ignore)
                    }
                };
            });
            if !ok {
                return Err(Error::Geometry(format!(
                    "unprojectable triangle {screen:?}"
                )));
            }
        }
        Ok(())
    }

    /// Palette color for a UV sample on triangle `tri_id`.
    fn sample(&mut self, uv: [f64; 2], tri_id: u32) -> Option<u32> {
        let own = self.ownership.expect("subject drawn with ownership");
        let [s, t] = uv_to_texel_space(uv);
        let max = TEXTURE_SIZE as i64 - 1;
        let tx = (s.floor() as i64).clamp(0, max);
        let ty = (t.floor() as i64).clamp(0, max);
        let at = |x: i64, y: i64| (y * (max + 1) + x) as usize;
        if own.owner_linear(at(tx, ty)).is_some() {
            return Some(at(tx, ty) as u32);
        }
        let mut best: Option<(f64, usize)> = None;
        for y in (ty - SNAP_RADIUS).max(0)..=(ty + SNAP_RADIUS).min(max) {
            for x in (tx - SNAP_RADIUS).max(0)..=(tx + SNAP_RADIUS).min(max) {
                let idx = at(x, y);
                if own.owner_linear(idx) != Some(tri_id) {
                    continue;
                }
                let d = (x as f64 + 0.5 - s).powi(2) + (y as f64 + 0.5 - t).powi(2);
                if best.is_none_or(|(bd, bi)| d < bd || (d == bd && idx < bi)) {
                    best = Some((d, idx));
                }
            }
        }
        match best {
            Some((_, idx)) => {
                self.stats.snapped += 1;
                Some(idx as u32)
            }
            None => {
                self.stats.dropped += 1;
                None
            }
        }
    }
}

/// Renders one camera view: occluders first, then the subject.
pub fn render_view(
    camera: &Camera,
    input: &ViewInput,
) -> Result<(ColorImage, Vec<f32>, RenderStats)> {
    let n = camera.width * camera.height;
    let mut target = Target {
        camera,
        image: vec![input.ignore.value(); n],
        depth: vec![1.0; n],
        ownership: input.subject.map(|(_, o, _)| o),
        ignore: input.ignore.value(),
        stats: RenderStats::default(),
    };
    for t in &input.occluders.triangles {
        let world = t.map(|i| input.occluders.vertices[i as usize]);
        target.draw(world, [[0.0; 2]; 3], Fill::Flat)?;
    }
    if let Some((mesh, _, pose)) = input.subject {
        let placed: Vec<DVec3> = mesh
            .vertices
            .iter()
            .map(|&v| pose.transform_point(v))
            .collect();
        for (i, t) in mesh.triangles.iter().enumerate() {
            let world = t.indices.map(|k| placed[k as usize]);
            target.draw(world, t.uvs, Fill::Subject(i as u32))?;
        }
    }
    let image = ColorImage::from_pixels(camera.width, camera.height, target.image)?;
    Ok((image, target.depth, target.stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub scenario: String,
    pub frame: usize,
    pub eye: Eye,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub meta: FrameMeta,
    pub image: ColorImage,
    pub depth: Vec<f32>,
    pub stats: RenderStats,
}

pub fn render_frame(
    scenario: &Scenario,
    ownership: &OwnershipMap,
    ignore: ColorCode,
    frame: usize,
    eye: Eye,
) -> Result<Frame> {
    let schedule = scenario.schedule();
    let time = *schedule.times.get(frame).ok_or_else(|| Error::Range {
        what: "frame",
        detail: format!("{frame} of {}", schedule.frames()),
    })?;
    let camera = scenario.camera(time, eye)?;
    let input = ViewInput {
        subject: Some((&scenario.subject, ownership, scenario.pose(time)?)),
        occluders: &scenario.occluders,
        ignore,
    };
    let (image, depth, stats) = render_view(&camera, &input)?;
    Ok(Frame {
        meta: FrameMeta {
            scenario: scenario.id.clone(),
            frame,
            eye,
            time,
        },
        image,
        depth,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub image: ColorImage,
}

/// Splits into `cols × rows` equal tiles in row-major order.
pub fn split_tiles(image: &ColorImage, cols: usize, rows: usize) -> Result<Vec<Tile>> {
    let (w, h) = (image.width(), image.height());
    if cols == 0 || rows == 0 || w % cols != 0 || h % rows != 0 {
        return Err(Error::Tiling {
            width: w,
            height: h,
            cols,
            rows,
        });
    }
    let (tw, th) = (w / cols, h / rows);
    let mut tiles = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let mut px = Vec::with_capacity(tw * th);
            for y in row * th..(row + 1) * th {
                px.extend_from_slice(&image.pixels()[y * w + col * tw..y * w + (col + 1) * tw]);
            }
            tiles.push(Tile {
                row,
                col,
                image: ColorImage::from_colors(tw, th, px)?,
            });
        }
    }
    Ok(tiles)
}

/// Inverse of [`split_tiles`].
pub fn assemble_tiles(tiles: &[Tile], cols: usize, rows: usize) -> Result<ColorImage> {
    let first = tiles
        .first()
        .ok_or_else(|| Error::EmptyData("no tiles".into()))?;
    let (tw, th) = (first.image.width(), first.image.height());
    if tiles.len() != cols * rows {
        return Err(Error::Tiling {
            width: tw * cols,
            height: th * rows,
            cols,
            rows,
        });
    }
    let mut out = ColorImage::filled(tw * cols, th * rows, ColorCode::from_rgb(0, 0, 0));
    for t in tiles {
        if t.image.width() != tw || t.image.height() != th || t.row >= rows || t.col >= cols {
            return Err(Error::Tiling {
                width: tw * cols,
                height: th * rows,
                cols,
                rows,
            });
        }
        for y in 0..th {
            for x in 0..tw {
                out.set(t.col * tw + x, t.row * th + y, t.image.get(x, y));
            }
        }
    }
    Ok(out)
}

/// Texel addressed by a rendered color, if it is not the ignore color.
pub fn texel_of(color: ColorCode, ignore: ColorCode) -> Option<TexelIndex> {
    (color != ignore).then(|| TexelIndex::from_linear(color.value() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::meshkit::texel_ownership;
    use crate::palette::DEFAULT_IGNORE;
    use crate::scene::CameraRig;
    use proptest::prelude::*;

    type TriUvs = [[f64; 2]; 3];

    fn small_camera(target: DVec3) -> Camera {
        let rig = CameraRig::default().scaled(20).unwrap();
        rig.eye_camera(target, Eye::Left).unwrap()
    }

    /// Independent per-pixel ray caster (Möller–Trumbore) returning the
    /// subject texel color or ignore for every pixel.
    fn ray_cast_image(
        camera: &Camera,
        mesh: &LabeledMesh,
        pose: Pose,
        occ: &Geometry,
    ) -> (Vec<u32>, Vec<f64>) {
        let o = camera.orientation;
        let mut out = vec![DEFAULT_IGNORE.value(); camera.width * camera.height];
        let mut margin = vec![f64::INFINITY; camera.width * camera.height];
        let mut tris: Vec<([DVec3; 3], Option<TriUvs>)> = occ
            .triangles
            .iter()
            .map(|t| (t.map(|i| occ.vertices[i as usize]), None))
            .collect();
        for t in &mesh.triangles {
            tris.push((
                t.indices
                    .map(|i| pose.transform_point(mesh.vertices[i as usize])),
                Some(t.uvs),
            ));
        }
        for py in 0..camera.height {
            for px in 0..camera.width {
                let sx = (px as f64 + 0.5 - camera.width as f64 / 2.0) / camera.focal_px;
                let sy = -(py as f64 + 0.5 - camera.height as f64 / 2.0) / camera.focal_px;
                let dir = o.forward + o.right * sx + o.up * sy;
                let mut best = f64::INFINITY;
                for (p, uvs) in &tris {
                    let (e1, e2) = (p[1] - p[0], p[2] - p[0]);
                    let n = e1.cross(e2);
                    if n.dot(p[0] - camera.center) >= 0.0 {
                        continue;
                    }
                    let pv = dir.cross(e2);
                    let det = e1.dot(pv);
                    let tv = camera.center - p[0];
                    let u = tv.dot(pv) / det;
                    let qv = tv.cross(e1);
                    let v = dir.dot(qv) / det;
                    let t = e2.dot(qv) / det;
                    let edge = u.min(v).min(1.0 - u - v);
                    let i = py * camera.width + px;
                    if edge.abs() < margin[i] {
                        margin[i] = edge.abs();
                    }
                    if edge < 0.0 || t <= 0.0 || t >= best {
                        continue;
                    }
                    best = t;
                    out[i] = match uvs {
                        None => DEFAULT_IGNORE.value(),
                        Some(uv) => {
                            let w = [1.0 - u - v, u, v];
                            let uu = w[0] * uv[0][0] + w[1] * uv[1][0] + w[2] * uv[2][0];
                            let vv = w[0] * uv[0][1] + w[1] * uv[1][1] + w[2] * uv[2][1];
                            let [s, tt] = uv_to_texel_space([uu, vv]);
                            let frac = |c: f64| (c - c.round()).abs();
                            // texel-boundary hits are as ambiguous as edge hits
                            margin[i] = margin[i].min(frac(s).min(frac(tt)));
                            (tt.floor() as u32).min(4095) * 4096 + (s.floor() as u32).min(4095)
                        }
                    };
                }
            }
        }
        (out, margin)
    }

    #[test]
    fn empty_scene_is_uniform_ignore() {
        let cam = small_camera(DVec3::new(0.0, 5.0, 1.75));
        let input = ViewInput {
            subject: None,
            occluders: &Geometry::default(),
            ignore: DEFAULT_IGNORE,
        };
        let (img, depth, _) = render_view(&cam, &input).unwrap();
        assert!(img.pixels().iter().all(|&c| c == DEFAULT_IGNORE));
        assert!(depth.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn subject_behind_wall_is_invisible() {
        let cube = fixtures::textured_cube(1.0, 16, 2);
        let own = texel_ownership(&cube).unwrap();
        let target = DVec3::new(0.0, 6.0, 1.75);
        let wall =
            crate::scene::cuboid(DVec3::new(0.0, 2.0, 1.75), DVec3::new(20.0, 0.2, 20.0), 0.0);
        let input = ViewInput {
            subject: Some((
                &cube,
                &own,
                Pose {
                    position: target,
                    yaw: 0.3,
                },
            )),
            occluders: &wall,
            ignore: DEFAULT_IGNORE,
        };
        let (img, _, _) = render_view(&small_camera(target), &input).unwrap();
        assert!(img.pixels().iter().all(|&c| c == DEFAULT_IGNORE));
    }

    #[test]
    fn face_on_quad_matches_ray_cast() {
        let quad = fixtures::textured_quad(1.0, 1.0, [48, 48], "Panel");
        let own = texel_ownership(&quad).unwrap();
        let pose = Pose {
            position: DVec3::new(0.3, 3.0, 1.9),
            yaw: -std::f64::consts::FRAC_PI_2 + 0.2,
        };
        let cam = small_camera(DVec3::new(0.0, 3.0, 1.75));
        let occ = Geometry::default();
        let input = ViewInput {
            subject: Some((&quad, &own, pose)),
            occluders: &occ,
            ignore: DEFAULT_IGNORE,
        };
        let (img, _, _) = render_view(&cam, &input).unwrap();
        let (oracle, margin) = ray_cast_image(&cam, &quad, pose, &occ);
        let mut visible = 0;
        for (i, (&a, &b)) in img.pixels().iter().zip(&oracle).enumerate() {
            visible += usize::from(b != DEFAULT_IGNORE.value());
            if a.value() != b {
                // only pixels whose ray grazes an edge may differ
                assert!(margin[i] < 0.05, "pixel {i}: {a} vs {b:06x}");
            }
        }
        assert!(visible > 1000);
        let owned = own.covered_colors();
        assert!(img
            .pixels()
            .iter()
            .all(|&c| c == DEFAULT_IGNORE || owned.contains(c)));
    }

    #[test]
    fn clipping_examples() {
        let cam = small_camera(DVec3::new(0.0, 5.0, 1.75));
        let uv = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // behind the viewer, facing it
        let behind = [
            DVec3::new(1.0, -2.0, 1.0),
            DVec3::new(-1.0, -2.0, 1.0),
            DVec3::new(0.0, -2.0, 3.0),
        ];
        assert!(backface_and_clip(behind, uv, &cam).is_empty());
        // in front, facing the camera (normal toward -y)
        let front = [
            DVec3::new(-1.0, 3.0, 1.0),
            DVec3::new(1.0, 3.0, 1.0),
            DVec3::new(0.0, 3.0, 3.0),
        ];
        let out = backface_and_clip(front, uv, &cam);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].map(|v| v.uv), uv);
        let back = [front[0], front[2], front[1]];
        assert!(backface_and_clip(back, uv, &cam).is_empty());
        // floor triangle running from behind the camera to the front
        let straddle = [
            DVec3::new(-1.0, -1.0, 0.0),
            DVec3::new(1.0, -1.0, 0.0),
            DVec3::new(0.0, 4.0, 0.0),
        ];
        let out = backface_and_clip(straddle, uv, &cam);
        assert!((1..=2).contains(&out.len()));
        for t in &out {
            assert!(t.iter().all(|v| v.view.z >= cam.near - 1e-12));
        }
    }

    #[test]
    fn straddling_floor_matches_ray_cast() {
        let mut b = fixtures::MeshBuilder::new(2);
        let p = b.part("Floor");
        let corners = [
            DVec3::new(-2.0, -1.0, 0.0),
            DVec3::new(2.0, -1.0, 0.0),
            DVec3::new(2.0, 4.0, 0.0),
            DVec3::new(-2.0, 4.0, 0.0),
        ];
        b.quad(corners, [40, 50], p).unwrap();
        let floor = b.finish();
        let own = texel_ownership(&floor).unwrap();
        let pose = Pose {
            position: DVec3::ZERO,
            yaw: 0.0,
        };
        let cam = small_camera(DVec3::new(0.0, 2.0, 0.0));
        let occ = Geometry::default();
        let input = ViewInput {
            subject: Some((&floor, &own, pose)),
            occluders: &occ,
            ignore: DEFAULT_IGNORE,
        };
        let (img, _, _) = render_view(&cam, &input).unwrap();
        let (oracle, margin) = ray_cast_image(&cam, &floor, pose, &occ);
        let mut differ = 0;
        for (i, (&a, &b)) in img.pixels().iter().zip(&oracle).enumerate() {
            if a.value() != b {
                differ += 1;
                assert!(
                    margin[i] < 0.05,
                    "pixel {i}: {a} vs {b:06x} margin {}",
                    margin[i]
                );
            }
        }
        assert!(differ * 100 < img.pixels().len(), "{differ}");
    }

    #[test]
    fn nearer_surface_wins_on_interpenetration() {
        // two crossing quads: one face-on, one tilted through it
        let mut b = fixtures::MeshBuilder::new(2);
        let a = b.part("A");
        let c = b.part("B");
        b.quad(
            [
                DVec3::new(-1.0, 3.0, 0.75),
                DVec3::new(1.0, 3.0, 0.75),
                DVec3::new(1.0, 3.0, 2.75),
                DVec3::new(-1.0, 3.0, 2.75),
            ],
            [32, 32],
            a,
        )
        .unwrap();
        b.quad(
            [
                DVec3::new(-1.0, 2.5, 0.75),
                DVec3::new(1.0, 3.5, 0.75),
                DVec3::new(1.0, 3.5, 2.75),
                DVec3::new(-1.0, 2.5, 2.75),
            ],
            [32, 32],
            c,
        )
        .unwrap();
        let mesh = b.finish();
        let own = texel_ownership(&mesh).unwrap();
        let pose = Pose {
            position: DVec3::ZERO,
            yaw: 0.0,
        };
        let cam = small_camera(DVec3::new(0.0, 3.0, 1.75));
        let occ = Geometry::default();
        let input = ViewInput {
            subject: Some((&mesh, &own, pose)),
            occluders: &occ,
            ignore: DEFAULT_IGNORE,
        };
        let (img, _, _) = render_view(&cam, &input).unwrap();
        let part_of = |c: ColorCode| {
            let t = texel_of(c, DEFAULT_IGNORE)?;
            let tri = own.owner(t)?;
            Some(mesh.triangles[tri as usize].part.0)
        };
        let near = cam.near;
        let mut checked = 0;
        for py in 0..cam.height {
            for px in 0..cam.width {
                let Some(part) = part_of(img.get(px, py)) else {
                    continue;
                };
                let sx = (px as f64 + 0.5 - cam.width as f64 / 2.0) / cam.focal_px;
                let dir = cam.orientation.forward + cam.orientation.right * sx;
                // depth along the ray of each plane (y = 3 and x = 2(y - 3))
                let za = (3.0 - cam.center.y) / dir.y;
                let zb = (cam.center.x + 6.0 - 2.0 * cam.center.y) / (2.0 * dir.y - dir.x);
                let (da, db) = (1.0 - near / za, 1.0 - near / zb);
                if (da - db).abs() > 1e-5 {
                    let expect = if da < db { 0 } else { 1 };
                    assert_eq!(part, expect, "pixel ({px},{py})");
                    checked += 1;
                }
            }
        }
        assert!(checked > 500, "{checked}");
    }

    #[test]
    fn tiles_partition_the_frame() {
        let mut img = ColorImage::filled(20, 15, DEFAULT_IGNORE);
        for y in 0..15 {
            for x in 0..20 {
                let cell = (y / 3) * 5 + x / 4;
                img.set(x, y, ColorCode::new(cell as u32 * 1000).unwrap());
            }
        }
        let tiles = split_tiles(&img, 5, 5).unwrap();
        assert_eq!(tiles.len(), 25);
        for (k, t) in tiles.iter().enumerate() {
            assert_eq!((t.row, t.col), (k / 5, k % 5));
            assert!(t
                .image
                .pixels()
                .iter()
                .all(|&c| c.value() == k as u32 * 1000));
        }
        assert_eq!(assemble_tiles(&tiles, 5, 5).unwrap(), img);
        assert!(matches!(split_tiles(&img, 3, 5), Err(Error::Tiling { .. })));

        let full = ColorImage::filled(6420, 8100, DEFAULT_IGNORE);
        let tiles = split_tiles(&full, 5, 5).unwrap();
        assert!(tiles
            .iter()
            .all(|t| (t.image.width(), t.image.height()) == (1284, 1620)));
        assert!(tiles
            .iter()
            .all(|t| t.image.pixels().iter().all(|&c| c == DEFAULT_IGNORE)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn cube_renders_are_closed_and_deterministic(yaw in 0.0f64..std::f64::consts::TAU, dist in 2.5f64..8.0, lift in -1.0f64..1.0) {
            let cube = fixtures::textured_cube(1.3, 40, 1);
            let own = texel_ownership(&cube).unwrap();
            let owned = own.covered_colors();
            let target = DVec3::new(0.4, dist, 1.75 + lift);
            let occ = crate::scene::cuboid(DVec3::new(-0.6, dist - 1.2, 1.75), DVec3::new(0.8, 0.1, 3.0), 0.0);
            let input = ViewInput {
                subject: Some((&cube, &own, Pose { position: target, yaw })),
                occluders: &occ,
                ignore: DEFAULT_IGNORE,
            };
            let cam = small_camera(target);
            let (a, _, _) = render_view(&cam, &input).unwrap();
            let (b, _, _) = render_view(&cam, &input).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.pixels().iter().all(|&c| c == DEFAULT_IGNORE || owned.contains(c)));
        }
    }
}

//! Scenarios: the animated subject, static occluders, the binocular
//! pedestrian rig and the capture schedule.
//!
//! World axes: x east, y north, z up, meters. Yaw is counter-clockwise from
//! +x; the subject model's forward axis is model +x.

use std::fs;
use std::path::{Path, PathBuf};

use glam::{DQuat, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meshkit::{self, Geometry, LabeledMesh, PartMap, PartNaming};

pub const EYE_HEIGHT: f64 = 1.75;
pub const INTERPUPILLARY_DISTANCE: f64 = 0.1103594;
pub const HORIZONTAL_FOV_DEG: f64 = 107.0;
pub const IMAGE_WIDTH: usize = 6420;
pub const IMAGE_HEIGHT: usize = 8100;
pub const TILE_GRID: usize = 5;
pub const NEAR_PLANE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    /// Circular arc leaving the keyframe along its heading.
    Turn,
    /// Constant-velocity straight line.
    Cruise,
    /// Straight line with quadratic ease-out to zero velocity.
    Decelerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub time: f64,
    pub position: DVec3,
    pub yaw: f64,
    /// Interpolation toward the next keyframe; ignored on the last one.
    pub segment: SegmentKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: DVec3,
    pub yaw: f64,
}

impl Pose {
    pub fn rotation(&self) -> DQuat {
        DQuat::from_rotation_z(self.yaw)
    }

    pub fn transform_point(&self, p: DVec3) -> DVec3 {
        self.position + self.rotation() * p
    }

    pub fn transform_vector(&self, v: DVec3) -> DVec3 {
        self.rotation() * v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    keyframes: Vec<Keyframe>,
}

impl Trajectory {
    pub fn new(keyframes: Vec<Keyframe>) -> Result<Self> {
        let bad = |m: String| Err(Error::Config(format!("trajectory: {m}")));
        if keyframes.len() < 2 {
            return bad("needs at least two keyframes".into());
        }
        if keyframes[0].time != 0.0 {
            return bad(format!(
                "first keyframe at t={} instead of 0",
                keyframes[0].time
            ));
        }
        for w in keyframes.windows(2) {
            if w[1].time.partial_cmp(&w[0].time) != Some(std::cmp::Ordering::Greater) {
                return bad(format!("times not strictly increasing at t={}", w[1].time));
            }
        }
        if keyframes
            .iter()
            .any(|k| !k.position.is_finite() || !k.yaw.is_finite())
        {
            return bad("non-finite keyframe".into());
        }
        Ok(Trajectory { keyframes })
    }

    /// A subject that does not move for `duration` seconds.
    pub fn stationary(position: DVec3, yaw: f64, duration: f64) -> Result<Self> {
        let k = |time| Keyframe {
            time,
            position,
            yaw,
            segment: SegmentKind::Cruise,
        };
        Trajectory::new(vec![k(0.0), k(duration)])
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn duration(&self) -> f64 {
        self.keyframes.last().unwrap().time
    }

    pub fn evaluate_pose(&self, t: f64) -> Result<Pose> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(Error::Range {
                what: "time",
                detail: format!("{t} outside [0, {duration}]"),
            });
        }
        let i = self
            .keyframes
            .partition_point(|k| k.time <= t)
            .clamp(1, self.keyframes.len() - 1);
        let (a, b) = (&self.keyframes[i - 1], &self.keyframes[i]);
        if t == b.time {
            return Ok(Pose {
                position: b.position,
                yaw: b.yaw,
            });
        }
        let u = (t - a.time) / (b.time - a.time);
        let yaw_at = |s: f64| a.yaw + (b.yaw - a.yaw) * s;
        Ok(match a.segment {
            SegmentKind::Cruise => Pose {
                position: a.position.lerp(b.position, u),
                yaw: yaw_at(u),
            },
            SegmentKind::Decelerate => {
                let s = 1.0 - (1.0 - u) * (1.0 - u);
                Pose {
                    position: a.position.lerp(b.position, s),
                    yaw: yaw_at(s),
                }
            }
            SegmentKind::Turn => Pose {
                position: arc_point(a.position, a.yaw, b.position, u),
                yaw: yaw_at(u),
            },
        })
    }
}

/// Point at fraction `s` along the circular arc that leaves `from` with
/// heading `yaw` and passes through `to`. Height is interpolated linearly.
fn arc_point(from: DVec3, yaw: f64, to: DVec3, s: f64) -> DVec3 {
    let heading = glam::DVec2::new(yaw.cos(), yaw.sin());
    let left = heading.perp();
    let d = (to - from).truncate();
    let side = d.dot(left);
    let z = from.z + (to.z - from.z) * s;
    if side.abs() <= 1e-9 * d.length().max(1.0) {
        let p = from.truncate().lerp(to.truncate(), s);
        return p.extend(z);
    }
    // signed radius: positive turns left
    let radius = d.length_squared() / (2.0 * side);
    let center = from.truncate() + left * radius;
    let r0 = from.truncate() - center;
    let r1 = to.truncate() - center;
    let mut sweep = r0.perp_dot(r1).atan2(r0.dot(r1));
    if radius > 0.0 && sweep < 0.0 {
        sweep += std::f64::consts::TAU;
    } else if radius < 0.0 && sweep > 0.0 {
        sweep -= std::f64::consts::TAU;
    }
    let p = center + glam::DVec2::from_angle(sweep * s).rotate(r0);
    p.extend(z)
}

/// Orthonormal head/camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub forward: DVec3,
    pub right: DVec3,
    pub up: DVec3,
}

/// Full look-at from `head` toward `target`, keeping the up axis in the
/// vertical plane.
pub fn head_orientation(head: DVec3, target: DVec3) -> Result<Orientation> {
    let to = target - head;
    if !to.is_finite() {
        return Err(Error::DegenerateLook("non-finite target".into()));
    }
    let dist = to.length();
    if dist < 1e-12 {
        return Err(Error::DegenerateLook(
            "target coincides with the head".into(),
        ));
    }
    let forward = to / dist;
    if forward.truncate().length() < 1e-9 {
        return Err(Error::DegenerateLook(
            "target is straight above or below".into(),
        ));
    }
    let right = forward.cross(DVec3::Z).normalize();
    let up = right.cross(forward);
    Ok(Orientation { forward, right, up })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub const BOTH: [Eye; 2] = [Eye::Left, Eye::Right];

    pub fn letter(self) -> char {
        match self {
            Eye::Left => 'L',
            Eye::Right => 'R',
        }
    }
}

/// A pinhole camera; image y grows downward and pixel centers sit at
/// half-integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub center: DVec3,
    pub orientation: Orientation,
    pub width: usize,
    pub height: usize,
    pub focal_px: f64,
    pub near: f64,
}

impl Camera {
    pub fn to_view(&self, p: DVec3) -> DVec3 {
        let d = p - self.center;
        let o = &self.orientation;
        DVec3::new(d.dot(o.right), d.dot(o.up), d.dot(o.forward))
    }

    /// Image position of a view-space point with positive depth.
    pub fn view_to_image(&self, v: DVec3) -> [f64; 2] {
        [
            self.width as f64 / 2.0 + self.focal_px * v.x / v.z,
            self.height as f64 / 2.0 - self.focal_px * v.y / v.z,
        ]
    }

    /// `(x, y, depth)` for points in front of the camera.
    pub fn project(&self, p: DVec3) -> Option<[f64; 3]> {
        let v = self.to_view(p);
        if v.z <= 0.0 {
            return None;
        }
        let [x, y] = self.view_to_image(v);
        Some([x, y, v.z])
    }

    pub fn vertical_fov(&self) -> f64 {
        2.0 * (self.height as f64 / 2.0 / self.focal_px).atan()
    }

    pub fn horizontal_fov(&self) -> f64 {
        2.0 * (self.width as f64 / 2.0 / self.focal_px).atan()
    }
}

pub fn focal_length_px(width: usize, hfov_deg: f64) -> f64 {
    width as f64 / 2.0 / (hfov_deg.to_radians() / 2.0).tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    /// Midpoint between the eyes; z is eye height above the world origin.
    pub head: DVec3,
    pub ipd: f64,
    pub hfov_deg: f64,
    pub width: usize,
    pub height: usize,
    /// Tile columns and rows.
    pub tiles: [usize; 2],
}

impl Default for CameraRig {
    fn default() -> Self {
        CameraRig {
            head: DVec3::new(0.0, 0.0, EYE_HEIGHT),
            ipd: INTERPUPILLARY_DISTANCE,
            hfov_deg: HORIZONTAL_FOV_DEG,
            width: IMAGE_WIDTH,
            height: IMAGE_HEIGHT,
            tiles: [TILE_GRID, TILE_GRID],
        }
    }
}

impl CameraRig {
    pub fn validate(&self) -> Result<()> {
        let [cols, rows] = self.tiles;
        if cols == 0
            || rows == 0
            || !self.width.is_multiple_of(cols)
            || !self.height.is_multiple_of(rows)
        {
            return Err(Error::Tiling {
                width: self.width,
                height: self.height,
                cols,
                rows,
            });
        }
        if !(self.ipd >= 0.0
            && self.hfov_deg > 0.0
            && self.hfov_deg < 180.0
            && self.head.is_finite())
        {
            return Err(Error::Config(format!("invalid rig constants {self:?}")));
        }
        Ok(())
    }

    pub fn tile_size(&self) -> [usize; 2] {
        [self.width / self.tiles[0], self.height / self.tiles[1]]
    }

    /// Shrinks each tile by `divisor` (rounding down) and rebuilds the image
    /// from whole tiles. Field of view and tile grid are unchanged.
    pub fn scaled(&self, divisor: usize) -> Result<Self> {
        let [tw, th] = self.tile_size();
        if divisor == 0 || tw / divisor == 0 || th / divisor == 0 {
            return Err(Error::Config(format!(
                "scale divisor {divisor} is out of range"
            )));
        }
        Ok(CameraRig {
            width: tw / divisor * self.tiles[0],
            height: th / divisor * self.tiles[1],
            ..*self
        })
    }

    pub fn focal_px(&self) -> f64 {
        focal_length_px(self.width, self.hfov_deg)
    }

    /// Parallel left/right eye cameras tracking `target`.
    pub fn eye_cameras(&self, target: DVec3) -> Result<(Camera, Camera)> {
        let orientation = head_orientation(self.head, target)?;
        let half = orientation.right * (self.ipd / 2.0);
        let camera = |center| Camera {
            center,
            orientation,
            width: self.width,
            height: self.height,
            focal_px: self.focal_px(),
            near: NEAR_PLANE,
        };
        Ok((camera(self.head - half), camera(self.head + half)))
    }

    pub fn eye_camera(&self, target: DVec3, eye: Eye) -> Result<Camera> {
        let (l, r) = self.eye_cameras(target)?;
        Ok(match eye {
            Eye::Left => l,
            Eye::Right => r,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    pub times: Vec<f64>,
}

impl FrameSchedule {
    pub fn new(rate: f64, duration: f64) -> Result<Self> {
        if !(rate > 0.0 && duration > 0.0 && rate.is_finite() && duration.is_finite()) {
            return Err(Error::Config(format!(
                "rate {rate} and duration {duration} must be positive"
            )));
        }
        let steps = (duration * rate + 1e-9).floor() as usize;
        Ok(FrameSchedule {
            times: (0..=steps).map(|k| k as f64 / rate).collect(),
        })
    }

    pub fn frames(&self) -> usize {
        self.times.len()
    }

    pub fn captures(&self) -> usize {
        self.times.len() * Eye::BOTH.len()
    }

    pub fn tile_files(&self, rig: &CameraRig) -> usize {
        self.captures() * rig.tiles[0] * rig.tiles[1]
    }
}

/// A fully loaded scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub subject: LabeledMesh,
    pub part_map: Option<PartMap>,
    pub trajectory: Trajectory,
    /// Added to the subject position to get the head's look-at target.
    pub look_offset: DVec3,
    pub occluders: Geometry,
    pub rig: CameraRig,
    pub rate: f64,
    pub duration: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.rig.validate()?;
        self.subject.validate()?;
        if (self.trajectory.duration() - self.duration).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "duration {} does not match the trajectory ({})",
                self.duration,
                self.trajectory.duration()
            )));
        }
        FrameSchedule::new(self.rate, self.duration)?;
        if !self
            .id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            || self.id.is_empty()
        {
            return Err(Error::Config(format!(
                "scenario id {:?} must be alphanumeric",
                self.id
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> FrameSchedule {
        FrameSchedule::new(self.rate, self.duration).expect("validated scenario")
    }

    pub fn pose(&self, t: f64) -> Result<Pose> {
        self.trajectory.evaluate_pose(t)
    }

    pub fn look_target(&self, t: f64) -> Result<DVec3> {
        Ok(self.pose(t)?.position + self.look_offset)
    }

    pub fn camera(&self, t: f64, eye: Eye) -> Result<Camera> {
        self.rig.eye_camera(self.look_target(t)?, eye)
    }

    pub fn with_scale(mut self, divisor: usize) -> Result<Self> {
        self.rig = self.rig.scaled(divisor)?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ScenarioFile::load(path)?.resolve(path.parent().unwrap_or(Path::new(".")))
    }
}

/// An axis-aligned box rotated by `yaw` about its vertical axis, with
/// outward-facing counter-clockwise triangles.
pub fn cuboid(center: DVec3, size: DVec3, yaw: f64) -> Geometry {
    let rot = DQuat::from_rotation_z(yaw);
    let h = size / 2.0;
    let corner = |i: usize| {
        let s = DVec3::new(
            if i & 1 != 0 { 1.0 } else { -1.0 },
            if i & 2 != 0 { 1.0 } else { -1.0 },
            if i & 4 != 0 { 1.0 } else { -1.0 },
        );
        center + rot * (s * h)
    };
    let vertices: Vec<DVec3> = (0..8).map(corner).collect();
    // quads as corner bitmasks, counter-clockwise seen from outside
    const QUADS: [[u32; 4]; 6] = [
        [1, 3, 7, 5], // +x
        [0, 4, 6, 2], // -x
        [2, 6, 7, 3], // +y
        [0, 1, 5, 4], // -y
        [4, 5, 7, 6], // +z
        [0, 2, 3, 1], // -z
    ];
    let triangles = QUADS
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    Geometry {
        vertices,
        triangles,
    }
}

// ---- scenario files -------------------------------------------------------

fn default_eye_height() -> f64 {
    EYE_HEIGHT
}
fn default_ipd() -> f64 {
    INTERPUPILLARY_DISTANCE
}
fn default_hfov() -> f64 {
    HORIZONTAL_FOV_DEG
}
fn default_width() -> usize {
    IMAGE_WIDTH
}
fn default_height() -> usize {
    IMAGE_HEIGHT
}
fn default_tiles() -> [usize; 2] {
    [TILE_GRID, TILE_GRID]
}
fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigFile {
    /// Ground position of the head, `[x, y]`.
    #[serde(default)]
    pub head: [f64; 2],
    #[serde(default)]
    pub ground: f64,
    #[serde(default = "default_eye_height")]
    pub eye_height: f64,
    #[serde(default = "default_ipd")]
    pub ipd: f64,
    #[serde(default = "default_hfov")]
    pub hfov_deg: f64,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "default_tiles")]
    pub tiles: [usize; 2],
}

impl Default for RigFile {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeFile {
    pub time: f64,
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default = "default_segment")]
    pub segment: SegmentKind,
}

fn default_segment() -> SegmentKind {
    SegmentKind::Cruise
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectFile {
    pub mesh: PathBuf,
    #[serde(default)]
    pub parts: Option<PathBuf>,
    #[serde(default)]
    pub look_offset: [f64; 3],
    pub keyframes: Vec<KeyframeFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OccluderFile {
    Box {
        center: [f64; 3],
        size: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
    },
    Mesh {
        path: PathBuf,
        #[serde(default)]
        translate: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

/// On-disk scenario description (TOML). Paths are relative to the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    pub rate: f64,
    pub duration: f64,
    pub subject: SubjectFile,
    #[serde(default, rename = "occluder")]
    pub occluders: Vec<OccluderFile>,
    #[serde(default)]
    pub rig: RigFile,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }

    /// Every file this scenario reads, for cache keys.
    pub fn referenced_files(&self, base: &Path) -> Vec<PathBuf> {
        let mut files = vec![base.join(&self.subject.mesh)];
        if let Some(p) = &self.subject.parts {
            files.push(base.join(p));
        }
        for o in &self.occluders {
            if let OccluderFile::Mesh { path, .. } = o {
                files.push(base.join(path));
            }
        }
        files
    }

    pub fn resolve(&self, base: &Path) -> Result<Scenario> {
        let part_map = match &self.subject.parts {
            Some(p) => Some(PartMap::load(&base.join(p))?),
            None => None,
        };
        let naming = part_map.clone().map(PartNaming::Map).unwrap_or_default();
        let subject = meshkit::load_mesh(&base.join(&self.subject.mesh), &naming)?;
        let keyframes = self
            .subject
            .keyframes
            .iter()
            .map(|k| Keyframe {
                time: k.time,
                position: DVec3::from_array(k.position),
                yaw: k.yaw_deg.to_radians(),
                segment: k.segment,
            })
            .collect();
        let mut occluders = Geometry::default();
        for o in &self.occluders {
            match o {
                OccluderFile::Box {
                    center,
                    size,
                    yaw_deg,
                } => occluders.append(&cuboid(
                    DVec3::from_array(*center),
                    DVec3::from_array(*size),
                    yaw_deg.to_radians(),
                )),
                OccluderFile::Mesh {
                    path,
                    translate,
                    yaw_deg,
                    scale,
                } => {
                    let mut g = meshkit::load_geometry(&base.join(path))?;
                    let pose = Pose {
                        position: DVec3::from_array(*translate),
                        yaw: yaw_deg.to_radians(),
                    };
                    for v in &mut g.vertices {
                        *v = pose.transform_point(*v * *scale);
                    }
                    occluders.append(&g);
                }
            }
        }
        let r = &self.rig;
        let scenario = Scenario {
            id: self.id.clone(),
            subject,
            part_map,
            trajectory: Trajectory::new(keyframes)?,
            look_offset: DVec3::from_array(self.subject.look_offset),
            occluders,
            rig: CameraRig {
                head: DVec3::new(r.head[0], r.head[1], r.ground + r.eye_height),
                ipd: r.ipd,
                hfov_deg: r.hfov_deg,
                width: r.width,
                height: r.height,
                tiles: r.tiles,
            },
            rate: self.rate,
            duration: self.duration,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn kf(time: f64, p: [f64; 3], yaw: f64, segment: SegmentKind) -> Keyframe {
        Keyframe {
            time,
            position: DVec3::from_array(p),
            yaw,
            segment,
        }
    }

    /// Turn, cruise, stop: the three-phase structure of every scenario.
    fn three_phase() -> Trajectory {
        Trajectory::new(vec![
            kf(0.0, [-20.0, 30.0, 0.0], -FRAC_PI_2, SegmentKind::Turn),
            kf(1.3, [-10.0, 20.0, 0.0], 0.0, SegmentKind::Cruise),
            kf(2.3, [0.0, 20.0, 0.0], 0.0, SegmentKind::Decelerate),
            kf(3.0, [4.0, 20.0, 0.0], 0.0, SegmentKind::Cruise),
        ])
        .unwrap()
    }

    #[test]
    fn pose_endpoints_and_linear_segment() {
        let traj = three_phase();
        let start = traj.evaluate_pose(0.0).unwrap();
        assert_eq!(start.position, DVec3::new(-20.0, 30.0, 0.0));
        assert_eq!(start.yaw, -FRAC_PI_2);
        let end = traj.evaluate_pose(3.0).unwrap();
        assert_eq!(end.position, DVec3::new(4.0, 20.0, 0.0));

        let line = Trajectory::new(vec![
            kf(0.0, [0.0; 3], 0.0, SegmentKind::Cruise),
            kf(1.0, [10.0, 0.0, 0.0], 0.0, SegmentKind::Cruise),
        ])
        .unwrap();
        let p = line.evaluate_pose(0.25).unwrap().position;
        assert!((p - DVec3::new(2.5, 0.0, 0.0)).length() < 1e-12);
        assert!(line.evaluate_pose(1.5).is_err());
        assert!(line.evaluate_pose(-0.1).is_err());
    }

    #[test]
    fn deceleration_reaches_zero_velocity() {
        let traj = three_phase();
        let h = 1e-6;
        let a = traj.evaluate_pose(3.0 - h).unwrap().position;
        let b = traj.evaluate_pose(3.0).unwrap().position;
        let speed_end = (b - a).length() / h;
        assert!(speed_end < 1e-3, "{speed_end}");
        let c = traj.evaluate_pose(2.3 + h).unwrap().position;
        let d = traj.evaluate_pose(2.3).unwrap().position;
        // starts at twice the average speed of the segment
        let speed_start = (c - d).length() / h;
        assert!(
            (speed_start - 2.0 * 4.0 / 0.7).abs() < 1e-3,
            "{speed_start}"
        );
    }

    #[test]
    fn quarter_turn_follows_a_circle() {
        // heading south from (-20, 30), ending heading east at (-10, 20):
        // a left turn of radius 10 about (-10, 30)
        let traj = three_phase();
        for k in 0..=20 {
            let t = 1.3 * k as f64 / 20.0;
            let p = traj.evaluate_pose(t).unwrap().position;
            let r = (p.truncate() - glam::DVec2::new(-10.0, 30.0)).length();
            assert!((r - 10.0).abs() < 1e-9, "t={t} r={r}");
        }
        let mid = traj.evaluate_pose(0.65).unwrap();
        let expected = glam::DVec2::new(-10.0, 30.0)
            + 10.0 * glam::DVec2::new((-3.0 * FRAC_PI_4).cos(), (-3.0 * FRAC_PI_4).sin());
        assert!((mid.position.truncate() - expected).length() < 1e-9);
        assert!((mid.yaw + FRAC_PI_4).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pose_is_continuous(t in 0.0f64..3.0) {
            let traj = three_phase();
            let eps = 1e-7;
            let a = traj.evaluate_pose(t).unwrap().position;
            let b = traj.evaluate_pose((t + eps).min(3.0)).unwrap().position;
            prop_assert!((a - b).length() < 1e-4);
        }

        #[test]
        fn eye_separation_and_height_hold(x in -50.0f64..50.0, y in 1.0f64..50.0, z in -2.0f64..4.0) {
            let rig = CameraRig::default();
            let (l, r) = rig.eye_cameras(DVec3::new(x, y, z)).unwrap();
            prop_assert!(((l.center - r.center).length() - INTERPUPILLARY_DISTANCE).abs() < 1e-9);
            prop_assert!((l.center.z - EYE_HEIGHT).abs() < 1e-9);
            prop_assert!((r.center.z - EYE_HEIGHT).abs() < 1e-9);
            let o = l.orientation;
            prop_assert!(o.forward.dot(o.right).abs() < 1e-12);
            prop_assert!(o.up.dot(o.right).abs() < 1e-12);
            prop_assert!(o.right.z.abs() < 1e-12);
        }
    }

    #[test]
    fn head_orientation_examples() {
        let head = DVec3::new(0.0, 0.0, EYE_HEIGHT);
        let o = head_orientation(head, head + DVec3::new(0.0, 10.0, 0.0)).unwrap();
        assert!((o.forward - DVec3::Y).length() < 1e-12);
        assert!((o.right - DVec3::X).length() < 1e-12);
        assert!((o.up - DVec3::Z).length() < 1e-12);

        assert!(matches!(
            head_orientation(head, head + DVec3::Z),
            Err(Error::DegenerateLook(_))
        ));
        assert!(head_orientation(head, head).is_err());

        // bearing 45° (north-east): azimuth measured from north toward east
        let o = head_orientation(head, head + DVec3::new(5.0, 5.0, 0.0)).unwrap();
        let azimuth = o.forward.x.atan2(o.forward.y);
        assert!((azimuth - FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn eye_cameras_at_origin() {
        let rig = CameraRig::default();
        let (l, r) = rig.eye_cameras(DVec3::new(0.0, 10.0, EYE_HEIGHT)).unwrap();
        assert!((l.center - DVec3::new(-0.0551797, 0.0, 1.75)).length() < 1e-12);
        assert!((r.center - DVec3::new(0.0551797, 0.0, 1.75)).length() < 1e-12);
        assert_eq!(l.orientation, r.orientation);

        // independent trig: half-width over tangent of half the horizontal FOV
        let focal = 3210.0 / (53.5f64).to_radians().tan();
        assert!((l.focal_px - focal).abs() < 1e-9);
        assert!((focal - 2375.3).abs() < 0.05, "{focal}");
        let vfov = l.vertical_fov().to_degrees();
        assert!((vfov - 2.0 * (4050.0f64 / focal).atan().to_degrees()).abs() < 1e-9);
        assert!((vfov - 119.2).abs() < 0.05, "{vfov}");
        assert!((l.horizontal_fov().to_degrees() - 107.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_counts() {
        let s = FrameSchedule::new(60.0, 3.0).unwrap();
        assert_eq!(s.frames(), 181);
        assert_eq!(s.captures(), 362);
        assert_eq!(s.tile_files(&CameraRig::default()), 9050);
        assert_eq!(s.times[0], 0.0);
        assert_eq!(*s.times.last().unwrap(), 3.0);
        assert_eq!(
            FrameSchedule::new(1.0, 2.0).unwrap().times,
            vec![0.0, 1.0, 2.0]
        );
        assert!(FrameSchedule::new(0.0, 1.0).is_err());
    }

    #[test]
    fn scaled_rig_keeps_fov_and_grid() {
        let rig = CameraRig::default().scaled(10).unwrap();
        assert_eq!((rig.width, rig.height), (640, 810));
        assert_eq!(rig.tile_size(), [128, 162]);
        rig.validate().unwrap();
        let cam = rig
            .eye_camera(DVec3::new(0.0, 5.0, 1.75), Eye::Left)
            .unwrap();
        assert!((cam.horizontal_fov().to_degrees() - 107.0).abs() < 1e-9);
        assert_eq!(
            CameraRig::default().scaled(1).unwrap(),
            CameraRig::default()
        );
        assert!(CameraRig::default().scaled(0).is_err());
        assert!(CameraRig::default().scaled(2000).is_err());
    }

    #[test]
    fn cuboid_faces_point_outward() {
        let center = DVec3::new(1.0, 2.0, 3.0);
        let g = cuboid(center, DVec3::new(2.0, 4.0, 6.0), 0.3);
        assert_eq!(g.triangles.len(), 12);
        for t in &g.triangles {
            let [a, b, c] = t.map(|i| g.vertices[i as usize]);
            let n = (b - a).cross(c - a);
            let centroid = (a + b + c) / 3.0;
            assert!(n.dot(centroid - center) > 0.0);
        }
    }

    #[test]
    fn rig_rejects_bad_tiling() {
        let rig = CameraRig {
            width: 641,
            ..CameraRig::default()
        };
        assert!(matches!(rig.validate(), Err(Error::Tiling { .. })));
    }
}

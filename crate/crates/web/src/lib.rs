//! Browser demo: renders the sample vehicle in full-color-space colors,
//! decodes picked pixels back to texels and parts, and accumulates
//! exposure counts into a heatmap of the texture atlas.

use glam::DVec3;
use wasm_bindgen::prelude::*;

use ufcsr::analyze::{self, count_image, ExposureCounts};
use ufcsr::fixtures;
use ufcsr::image::ColorImage;
use ufcsr::meshkit::{texel_ownership, LabeledMesh, OwnershipMap, PartIdentificationTexture};
use ufcsr::palette::{self, ColorCode};
use ufcsr::raster::{self, ViewInput};
use ufcsr::scene::{CameraRig, Eye, Pose};

const SCALE: usize = 20;
const TEXELS_PER_METER: f64 = 48.0;
/// The atlas is wide and short, so the heatmap shows it in stacked strips.
const STRIP: usize = 1024;

fn js_err(e: ufcsr::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    mesh: LabeledMesh,
    ownership: OwnershipMap,
    pidt: PartIdentificationTexture,
    ignore: ColorCode,
    rig: CameraRig,
    pose: Pose,
    views: [Option<ColorImage>; 2],
    counts: ExposureCounts,
    /// Size of the atlas corner that holds every owned texel.
    atlas: [usize; 2],
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsError> {
        let mesh = fixtures::vehicle(TEXELS_PER_METER).map_err(js_err)?;
        let ownership = texel_ownership(&mesh).map_err(js_err)?;
        let ignore = palette::select_ignore_color(&ownership.covered_colors()).map_err(js_err)?;
        let pidt = PartIdentificationTexture::from_ownership(&mesh, &ownership);
        let mut atlas = [0, 0];
        for (t, _) in ownership.owned() {
            atlas = [
                atlas[0].max(t.x as usize + 1),
                atlas[1].max(t.y as usize + 1),
            ];
        }
        Ok(Demo {
            mesh,
            ownership,
            pidt,
            ignore,
            rig: CameraRig::default().scaled(SCALE).map_err(js_err)?,
            pose: Pose {
                position: DVec3::new(0.0, 8.0, 0.0),
                yaw: 0.0,
            },
            views: [None, None],
            counts: ExposureCounts::new(),
            atlas,
        })
    }

    pub fn width(&self) -> usize {
        self.rig.width
    }

    pub fn height(&self) -> usize {
        self.rig.height
    }

    /// Places the vehicle `distance` meters ahead of the viewer, turned by
    /// `yaw_deg`, renders both eyes and returns the chosen eye as RGBA.
    pub fn render(
        &mut self,
        yaw_deg: f64,
        distance: f64,
        right_eye: bool,
    ) -> Result<Vec<u8>, JsError> {
        self.pose = Pose {
            position: DVec3::new(0.0, distance.max(2.5), 0.0),
            yaw: yaw_deg.to_radians(),
        };
        let target = self.pose.position + DVec3::new(0.0, 0.0, 0.9);
        let empty = Default::default();
        let input = ViewInput {
            subject: Some((&self.mesh, &self.ownership, self.pose)),
            occluders: &empty,
            ignore: self.ignore,
        };
        for (slot, eye) in Eye::BOTH.into_iter().enumerate() {
            let camera = self.rig.eye_camera(target, eye).map_err(js_err)?;
            let (image, _, _) = raster::render_view(&camera, &input).map_err(js_err)?;
            self.views[slot] = Some(image);
        }
        Ok(self.views[right_eye as usize]
            .as_ref()
            .expect("rendered")
            .to_rgba_bytes())
    }

    /// Describes the pixel under (x, y) of the last rendered view.
    pub fn pick(&self, x: usize, y: usize, right_eye: bool) -> String {
        let Some(view) = &self.views[right_eye as usize] else {
            return "nothing rendered yet".into();
        };
        if x >= view.width() || y >= view.height() {
            return String::new();
        }
        let c = view.get(x, y);
        match raster::texel_of(c, self.ignore) {
            None => format!("{c}  background (ignore color)"),
            Some(t) => {
                let part = self
                    .pidt
                    .part_at(t)
                    .map(|p| self.mesh.part_name(p))
                    .unwrap_or("unowned");
                let seen = self.counts.get(c);
                format!(
                    "{c}  texel ({}, {})  part {part}  seen in {seen} tiles",
                    t.x, t.y
                )
            }
        }
    }

    /// Adds both eyes of the current view to the exposure counts, one
    /// observation per color per tile. Returns the number of tiles counted so far.
    pub fn capture(&mut self) -> Result<u32, JsError> {
        let [cols, rows] = self.rig.tiles;
        for view in self.views.iter().flatten() {
            for tile in raster::split_tiles(view, cols, rows).map_err(js_err)? {
                count_image(&tile.image, self.ignore, &mut self.counts);
                self.counts.images += 1;
            }
        }
        Ok(self.counts.images as u32)
    }

    pub fn reset(&mut self) {
        self.counts = ExposureCounts::new();
    }

    fn strips(&self) -> usize {
        self.atlas[0].div_ceil(STRIP)
    }

    pub fn atlas_width(&self) -> usize {
        self.atlas[0].min(STRIP)
    }

    pub fn atlas_height(&self) -> usize {
        self.atlas[1] * self.strips()
    }

    /// Heatmap of the atlas corner as RGBA: plasma(count / max) on owned
    /// texels, black elsewhere.
    pub fn heatmap(&self) -> Result<Vec<u8>, JsError> {
        let [w, h] = self.atlas;
        let (out_w, out_h) = (self.atlas_width(), self.atlas_height());
        let max = self.counts.max().max(1) as f64;
        let mut out = Vec::with_capacity(out_w * out_h * 4);
        for oy in 0..out_h {
            for ox in 0..out_w {
                let (x, y) = ((oy / h) * STRIP + ox, oy % h);
                let i = y * palette::TEXTURE_SIZE as usize + x;
                let rgb = if x < w && self.ownership.owner_linear(i).is_some() {
                    analyze::plasma(self.counts.get_linear(i) as f64 / max)
                        .map_err(js_err)?
                        .rgb()
                } else {
                    [0, 0, 0]
                };
                out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_pick_and_capture() {
        let mut demo = Demo::new().unwrap();
        let rgba = demo.render(30.0, 8.0, false).unwrap();
        assert_eq!(rgba.len(), demo.width() * demo.height() * 4);
        let (cx, cy) = (demo.width() / 2, demo.height() / 2);
        assert!(
            demo.pick(cx, cy, false).contains("part "),
            "{}",
            demo.pick(cx, cy, false)
        );
        assert!(demo.pick(0, 0, true).contains("background"));
        assert_eq!(demo.capture().unwrap(), 50);
        let heat = demo.heatmap().unwrap();
        assert_eq!(heat.len(), demo.atlas_width() * demo.atlas_height() * 4);
        assert!(!demo.pick(cx, cy, false).contains("seen in 0 tiles"));
        demo.reset();
        assert!(demo.pick(cx, cy, false).contains("seen in 0 tiles"));
    }
}

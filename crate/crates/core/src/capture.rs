//! Lossless tile files, their names and manifest, and the byte-length rule
//! that marks a tile as empty.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ColorImage, EncoderSettings, ENCODER};
use crate::meshkit::OwnershipMap;
use crate::palette::ColorCode;
use crate::raster::{self, RenderStats, Tile};
use crate::scene::{CameraRig, Eye, Scenario};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

pub fn encode_tile(tile: &ColorImage) -> Result<Vec<u8>> {
    tile.encode_png()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrimThreshold {
    pub width: usize,
    pub height: usize,
    pub ignore: ColorCode,
    /// Encoded length of a solid ignore-color tile.
    pub bytes: u64,
}

/// Encodes a solid ignore-color tile and returns its length.
///
/// Solid tiles of other colors may encode a few bytes shorter or longer, so
/// this length is only meaningful for the ignore color; capture checks every
/// non-empty tile against it instead.
pub fn compute_threshold(width: usize, height: usize, ignore: ColorCode) -> Result<TrimThreshold> {
    if width == 0 || height == 0 {
        return Err(Error::Range {
            what: "tile size",
            detail: format!("{width}x{height}"),
        });
    }
    let bytes = encode_tile(&ColorImage::filled(width, height, ignore))?.len() as u64;
    Ok(TrimThreshold {
        width,
        height,
        ignore,
        bytes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRecord {
    /// File name inside the capture directory.
    pub file: String,
    pub scenario: String,
    pub frame: usize,
    pub eye: Eye,
    pub row: usize,
    pub col: usize,
    pub bytes: u64,
}

pub fn tile_name(scenario: &str, frame: usize, eye: Eye, row: usize, col: usize) -> String {
    format!("S{scenario}_f{frame:04}_{}_r{row}c{col}.png", eye.letter())
}

/// True when the tile is no larger than a solid ignore-color tile.
pub fn is_empty(bytes: u64, thr: &TrimThreshold) -> bool {
    bytes <= thr.bytes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub scenario: String,
    pub encoder: EncoderSettings,
    pub threshold: TrimThreshold,
    pub rig: CameraRig,
    pub rate: f64,
    pub duration: f64,
    pub frames: usize,
    pub render: RenderStats,
    pub records: Vec<CaptureRecord>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&path, e))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported manifest version {}",
                m.format_version
            )));
        }
        if m.encoder != ENCODER {
            return Err(Error::Manifest(format!(
                "tiles were encoded with {:?}; this build uses {:?}",
                m.encoder, ENCODER
            )));
        }
        Ok(m)
    }

    pub fn captures(&self) -> usize {
        self.frames * Eye::BOTH.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct CaptureOptions {
    /// Also write each full frame as `frames/…png`.
    pub dump_frames: bool,
}

/// Encodes one tile, refusing output that would break trimming.
fn encode_checked(tile: &Tile, thr: &TrimThreshold, name: &str) -> Result<Vec<u8>> {
    let bytes = encode_tile(&tile.image)?;
    let solid = tile.image.pixels().iter().all(|&c| c == thr.ignore);
    let len = bytes.len() as u64;
    if solid && len != thr.bytes {
        return Err(Error::Encoder(format!(
            "{name}: empty tile encoded to {len} bytes, threshold {}",
            thr.bytes
        )));
    }
    if !solid && is_empty(len, thr) {
        return Err(Error::Encoder(format!(
            "{name}: non-empty tile encoded to {len} bytes, not above the threshold {}",
            thr.bytes
        )));
    }
    Ok(bytes)
}

/// Renders every scheduled frame for both eyes, writes the tiles into `dir`
/// and returns the manifest (also written to `dir`). Frames are rendered in
/// parallel on the current rayon pool.
pub fn write_captures(
    scenario: &Scenario,
    ownership: &OwnershipMap,
    ignore: ColorCode,
    dir: &Path,
    options: &CaptureOptions,
) -> Result<Manifest> {
    scenario.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let frames_dir = dir.join("frames");
    if options.dump_frames {
        fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    }
    let [cols, rows] = scenario.rig.tiles;
    let [tw, th] = scenario.rig.tile_size();
    let threshold = compute_threshold(tw, th, ignore)?;
    let schedule = scenario.schedule();

    let jobs: Vec<(usize, Eye)> = (0..schedule.frames())
        .flat_map(|f| Eye::BOTH.map(|e| (f, e)))
        .collect();
    let results: Vec<(Vec<CaptureRecord>, RenderStats)> = jobs
        .par_iter()
        .map(|&(frame, eye)| {
            let rendered = raster::render_frame(scenario, ownership, ignore, frame, eye)?;
            if options.dump_frames {
                let name = format!("S{}_f{frame:04}_{}.png", scenario.id, eye.letter());
                rendered.image.write_png(&frames_dir.join(name))?;
            }
            let mut records = Vec::with_capacity(cols * rows);
            for tile in raster::split_tiles(&rendered.image, cols, rows)? {
                let file = tile_name(&scenario.id, frame, eye, tile.row, tile.col);
                let bytes = encode_checked(&tile, &threshold, &file)?;
                let path = dir.join(&file);
                fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
                records.push(CaptureRecord {
                    file,
                    scenario: scenario.id.clone(),
                    frame,
                    eye,
                    row: tile.row,
                    col: tile.col,
                    bytes: bytes.len() as u64,
                });
            }
            Ok((records, rendered.stats))
        })
        .collect::<Result<_>>()?;

    let mut render = RenderStats::default();
    let mut records = Vec::with_capacity(jobs.len() * cols * rows);
    for (r, s) in results {
        records.extend(r);
        render.snapped += s.snapped;
        render.dropped += s.dropped;
    }
    records.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        scenario: scenario.id.clone(),
        encoder: ENCODER,
        threshold,
        rig: scenario.rig,
        rate: scenario.rate,
        duration: scenario.duration,
        frames: schedule.frames(),
        render,
        records,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

pub fn record_path(dir: &Path, record: &CaptureRecord) -> PathBuf {
    dir.join(&record.file)
}

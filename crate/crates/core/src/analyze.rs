//! Exposure counting over captured tiles, per-part statistics and the
//! plasma heatmap texture.

use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capture::{self, Manifest};
use crate::error::{Error, Result};
use crate::image::{ColorImage, EncoderSettings};
use crate::meshkit::{PartIdentificationTexture, TexelCensus};
use crate::palette::{ColorCode, COLOR_COUNT, TEXTURE_SIZE};
use crate::scene::CameraRig;

/// Number of images each palette color appeared in.
#[derive(Clone, PartialEq, Eq)]
pub struct ExposureCounts {
    counts: Vec<u32>,
    /// Images considered, trimmed or not.
    pub images: u64,
    /// Images classified as empty by the size rule.
    pub images_trimmed: u64,
}

impl std::fmt::Debug for ExposureCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ExposureCounts({} colors, {} images, {} trimmed)",
            self.nonzero().count(),
            self.images,
            self.images_trimmed
        )
    }
}

impl Default for ExposureCounts {
    fn default() -> Self {
        Self::new()
    }
}

impl ExposureCounts {
    pub fn new() -> Self {
        ExposureCounts {
            counts: vec![0; COLOR_COUNT],
            images: 0,
            images_trimmed: 0,
        }
    }

    #[inline]
    pub fn get(&self, c: ColorCode) -> u32 {
        self.counts[c.value() as usize]
    }

    #[inline]
    pub fn get_linear(&self, index: usize) -> u32 {
        self.counts[index]
    }

    #[inline]
    pub fn increment(&mut self, index: usize) {
        self.counts[index] += 1;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }

    /// `(color index, count)` for every color seen at least once.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (i, n))
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn merge(&mut self, other: &ExposureCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.images += other.images;
        self.images_trimmed += other.images_trimmed;
    }
}

/// Adds one to the count of every distinct non-ignore color in `image`.
pub fn count_image(image: &ColorImage, ignore: ColorCode, counts: &mut ExposureCounts) {
    let mut seen: Vec<u32> = image
        .pixels()
        .iter()
        .filter(|&&c| c != ignore)
        .map(|c| c.value())
        .collect();
    seen.sort_unstable();
    seen.dedup();
    for c in seen {
        counts.increment(c as usize);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub trim: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { trim: true }
    }
}

/// Counts every tile listed in the manifest, skipping empty ones when
/// trimming. Work is split across the current rayon pool; the result does
/// not depend on the pool size.
pub fn aggregate(
    manifest: &Manifest,
    dir: &Path,
    options: AnalyzeOptions,
) -> Result<ExposureCounts> {
    let thr = &manifest.threshold;
    let mut pending = Vec::new();
    let mut trimmed = 0u64;
    for rec in &manifest.records {
        let path = capture::record_path(dir, rec);
        let len = fs::metadata(&path)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?
            .len();
        if len != rec.bytes {
            warn!(
                "{}: {len} bytes on disk, manifest says {}",
                rec.file, rec.bytes
            );
        }
        if len < thr.bytes {
            warn!(
                "{}: shorter than an empty tile ({len} < {}); treated as empty",
                rec.file, thr.bytes
            );
        }
        let empty = capture::is_empty(len, thr);
        trimmed += u64::from(empty);
        if !(options.trim && empty) {
            pending.push(path);
        }
    }
    debug!(
        "decoding {} of {} tiles",
        pending.len(),
        manifest.records.len()
    );

    let workers = rayon::current_num_threads().max(1);
    let chunk = pending.len().div_ceil(workers).max(1);
    let ignore = thr.ignore;
    let partials: Vec<ExposureCounts> = pending
        .par_chunks(chunk)
        .map(|paths| {
            let mut counts = ExposureCounts::new();
            for p in paths {
                count_image(&ColorImage::read_png(p)?, ignore, &mut counts);
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = ExposureCounts::new();
    for p in &partials {
        total.merge(p);
    }
    total.images = manifest.records.len() as u64;
    total.images_trimmed = trimmed;
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartStats {
    pub name: String,
    pub texels: u64,
    pub total: u64,
    pub peak: u64,
    pub average: f64,
    pub portion: f64,
}

/// Observations of colors that no subject texel owns. Non-zero values mean
/// the renderer and the ownership map disagree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub unowned_colors: u64,
    pub unowned_observations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartStatsReport {
    /// Sorted by part name.
    pub parts: Vec<PartStats>,
    pub grand_total: u64,
    pub diagnostics: Diagnostics,
}

pub fn part_stats(
    counts: &ExposureCounts,
    pidt: &PartIdentificationTexture,
    census: &TexelCensus,
) -> Result<PartStatsReport> {
    if pidt.part_names != census.part_names || census.counts.len() != census.part_names.len() {
        return Err(Error::Consistency(
            "census and PIdT describe different parts".into(),
        ));
    }
    let n = census.part_names.len();
    let mut totals = vec![0u64; n];
    let mut peaks = vec![0u64; n];
    let mut diagnostics = Diagnostics::default();
    for (i, c) in counts.nonzero() {
        let c = c as u64;
        match pidt.part_at_linear(i) {
            Some(p) => {
                let p = p.0 as usize;
                totals[p] += c;
                peaks[p] = peaks[p].max(c);
            }
            None => {
                diagnostics.unowned_colors += 1;
                diagnostics.unowned_observations += c;
            }
        }
    }
    let grand_total: u64 = totals.iter().sum();
    let mut parts: Vec<PartStats> = (0..n)
        .map(|p| {
            let texels = census.counts[p];
            PartStats {
                name: census.part_names[p].clone(),
                texels,
                total: totals[p],
                peak: peaks[p],
                average: if texels == 0 {
                    0.0
                } else {
                    totals[p] as f64 / texels as f64
                },
                portion: if grand_total == 0 {
                    0.0
                } else {
                    totals[p] as f64 / grand_total as f64
                },
            }
        })
        .collect();
    parts.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(PartStatsReport {
        parts,
        grand_total,
        diagnostics,
    })
}

pub const STATS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub ignore: ColorCode,
    pub encoder: EncoderSettings,
    pub threshold_bytes: u64,
    pub rig: CameraRig,
    pub rate: f64,
    pub duration: f64,
    pub frames: usize,
    pub captures: usize,
    pub tiles: usize,
}

impl Provenance {
    pub fn from_manifest(m: &Manifest) -> Self {
        Provenance {
            scenario: m.scenario.clone(),
            ignore: m.threshold.ignore,
            encoder: m.encoder.clone(),
            threshold_bytes: m.threshold.bytes,
            rig: m.rig,
            rate: m.rate,
            duration: m.duration,
            frames: m.frames,
            captures: m.captures(),
            tiles: m.records.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDocument {
    pub format_version: u32,
    pub images: u64,
    pub images_trimmed: u64,
    pub grand_total: u64,
    pub parts: Vec<PartStats>,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

impl StatsDocument {
    pub fn new(report: PartStatsReport, counts: &ExposureCounts, provenance: Provenance) -> Self {
        StatsDocument {
            format_version: STATS_VERSION,
            images: counts.images,
            images_trimmed: counts.images_trimmed,
            grand_total: report.grand_total,
            parts: report.parts,
            diagnostics: report.diagnostics,
            provenance,
        }
    }

    pub fn part(&self, name: &str) -> Option<&PartStats> {
        self.parts.iter().find(|p| p.name == name)
    }
}

pub fn write_stats(doc: &StatsDocument, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_stats(path: &Path) -> Result<StatsDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: StatsDocument = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
    if doc.format_version != STATS_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported stats version {}", doc.format_version),
        ));
    }
    Ok(doc)
}

/// Sparse on-disk form of [`ExposureCounts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsDocument {
    pub format_version: u32,
    pub images: u64,
    pub images_trimmed: u64,
    /// `[color index, count]`, ascending by index.
    pub counts: Vec<[u32; 2]>,
}

pub fn write_counts(counts: &ExposureCounts, path: &Path) -> Result<()> {
    let doc = CountsDocument {
        format_version: STATS_VERSION,
        images: counts.images,
        images_trimmed: counts.images_trimmed,
        counts: counts.nonzero().map(|(i, n)| [i as u32, n]).collect(),
    };
    let text = serde_json::to_string(&doc)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_counts(path: &Path) -> Result<ExposureCounts> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: CountsDocument = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
    let mut counts = ExposureCounts::new();
    for [i, n] in doc.counts {
        let slot = counts
            .counts
            .get_mut(i as usize)
            .ok_or_else(|| Error::format(path, format!("color index {i} out of range")))?;
        *slot = n;
    }
    counts.images = doc.images;
    counts.images_trimmed = doc.images_trimmed;
    Ok(counts)
}

static PLASMA: LazyLock<[[u8; 3]; 256]> = LazyLock::new(|| {
    let mut lut = [[0u8; 3]; 256];
    let mut n = 0;
    for line in include_str!("../assets/plasma.txt").lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        lut[n] = ColorCode::parse_hex(line).expect("plasma asset").rgb();
        n += 1;
    }
    assert_eq!(n, 256, "plasma asset has 256 entries");
    lut
});

pub fn plasma_lut() -> &'static [[u8; 3]; 256] {
    &PLASMA
}

/// Linear interpolation into the 256-entry plasma table.
pub fn plasma(u: f64) -> Result<ColorCode> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Range {
            what: "plasma fraction",
            detail: u.to_string(),
        });
    }
    let lut = plasma_lut();
    let x = u * 255.0;
    let i = (x.floor() as usize).min(254);
    let f = x - i as f64;
    let (a, b) = (lut[i], lut[i + 1]);
    let ch = |k: usize| (a[k] as f64 + (b[k] as f64 - a[k] as f64) * f).round() as u8;
    Ok(ColorCode::from_rgb(ch(0), ch(1), ch(2)))
}

/// Fraction whose plasma color is closest to `c`.
pub fn plasma_inverse(c: ColorCode) -> f64 {
    let lut = plasma_lut();
    let p = c.rgb().map(|v| v as f64);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..255 {
        let a = lut[i].map(|v| v as f64);
        let b = lut[i + 1].map(|v| v as f64);
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let f = if len2 == 0.0 {
            0.0
        } else {
            (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]) / len2)
                .clamp(0.0, 1.0)
        };
        let q = [
            a[0] + d[0] * f - p[0],
            a[1] + d[1] * f - p[1],
            a[2] + d[2] * f - p[2],
        ];
        let dist = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
        if dist < best.0 {
            best = (dist, (i as f64 + f) / 255.0);
        }
    }
    best.1
}

#[derive(Debug, Clone)]
pub struct Heatmap {
    pub image: ColorImage,
    pub max: u32,
}

/// Colors every texel by `plasma(count / max)`.
pub fn emit_heatmap(counts: &ExposureCounts) -> Result<Heatmap> {
    let max = counts.max();
    if max == 0 {
        return Err(Error::EmptyData(
            "no color was observed; nothing to normalize".into(),
        ));
    }
    let zero = plasma(0.0)?;
    let pixels: Vec<ColorCode> = counts
        .counts
        .par_iter()
        .map(|&n| {
            if n == 0 {
                zero
            } else {
                plasma(n as f64 / max as f64).expect("fraction in range")
            }
        })
        .collect();
    let size = TEXTURE_SIZE as usize;
    Ok(Heatmap {
        image: ColorImage::from_colors(size, size, pixels)?,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::meshkit::census;
    use crate::palette::DEFAULT_IGNORE;
    use proptest::prelude::*;

    #[test]
    fn counts_once_per_image() {
        let mut counts = ExposureCounts::new();
        let (a, b) = (ColorCode::from_raw(5), ColorCode::from_raw(77));
        let mut img = ColorImage::filled(30, 30, DEFAULT_IGNORE);
        for i in 0..500 {
            img.pixels_mut()[i] = a;
        }
        img.pixels_mut()[600] = b;
        count_image(&img, DEFAULT_IGNORE, &mut counts);
        assert_eq!((counts.get(a), counts.get(b)), (1, 1));
        count_image(&img, DEFAULT_IGNORE, &mut counts);
        assert_eq!((counts.get(a), counts.get(b)), (2, 2));
        assert_eq!(counts.get(DEFAULT_IGNORE), 0);
        count_image(
            &ColorImage::filled(4, 4, DEFAULT_IGNORE),
            DEFAULT_IGNORE,
            &mut counts,
        );
        assert_eq!(counts.nonzero().count(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn merge_order_does_not_matter(seed in any::<u64>(), split in 1usize..9) {
            let mut s = seed;
            let images: Vec<ColorImage> = (0..10)
                .map(|_| {
                    let mut img = ColorImage::filled(8, 8, DEFAULT_IGNORE);
                    for p in img.pixels_mut() {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                        if s >> 62 == 0 {
                            *p = ColorCode::from_raw(((s >> 20) & 0xFF) as u32);
                        }
                    }
                    img
                })
                .collect();
            let mut whole = ExposureCounts::new();
            for img in &images {
                count_image(img, DEFAULT_IGNORE, &mut whole);
            }
            let mut a = ExposureCounts::new();
            let mut b = ExposureCounts::new();
            for img in images[..split].iter().rev() {
                count_image(img, DEFAULT_IGNORE, &mut a);
            }
            for img in &images[split..] {
                count_image(img, DEFAULT_IGNORE, &mut b);
            }
            b.merge(&a);
            prop_assert!(b == whole);
        }
    }

    #[test]
    fn cube_face_report() {
        let cube = fixtures::textured_cube(1.0, 100, 4);
        let pidt = PartIdentificationTexture::build(&cube).unwrap();
        let cen = census(&pidt);
        let mut counts = ExposureCounts::new();
        let front = pidt.part_names.iter().position(|n| n == "Front").unwrap() as u16;
        for i in 0..COLOR_COUNT {
            if pidt.part_at_linear(i).map(|p| p.0) == Some(front) {
                counts.counts[i] = 362;
            }
        }
        let report = part_stats(&counts, &pidt, &cen).unwrap();
        let f = report.parts.iter().find(|p| p.name == "Front").unwrap();
        assert_eq!((f.total, f.peak), (3_620_000, 362));
        assert_eq!(f.average, 362.0);
        assert_eq!(f.portion, 1.0);
        let back = report.parts.iter().find(|p| p.name == "Back").unwrap();
        assert_eq!(
            (back.total, back.peak, back.average, back.portion),
            (0, 0, 0.0, 0.0)
        );
        let names: Vec<&str> = report.parts.iter().map(|p| p.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(report.grand_total, 3_620_000);

        counts.counts[4095 * 4096 + 4095] = 3;
        let report = part_stats(&counts, &pidt, &cen).unwrap();
        assert_eq!(report.diagnostics.unowned_colors, 1);
        assert_eq!(report.diagnostics.unowned_observations, 3);
        assert_eq!(report.grand_total, 3_620_000);

        let mut other = cen.clone();
        other.part_names[0] = "X".into();
        assert!(matches!(
            part_stats(&counts, &pidt, &other),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn stats_and_counts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut counts = ExposureCounts::new();
        counts.counts[12] = 4;
        counts.counts[99999] = 1;
        counts.images = 50;
        counts.images_trimmed = 45;
        let report = PartStatsReport {
            parts: vec![PartStats {
                name: "Hood".into(),
                texels: 3,
                total: 10,
                peak: 7,
                average: 10.0 / 3.0,
                portion: 0.1,
            }],
            grand_total: 100,
            diagnostics: Diagnostics::default(),
        };
        let prov = Provenance {
            scenario: "T".into(),
            ignore: DEFAULT_IGNORE,
            encoder: crate::image::ENCODER,
            threshold_bytes: 123,
            rig: CameraRig::default(),
            rate: 60.0,
            duration: 3.0,
            frames: 181,
            captures: 362,
            tiles: 9050,
        };
        let doc = StatsDocument::new(report, &counts, prov);
        let p = dir.path().join("stats.json");
        write_stats(&doc, &p).unwrap();
        assert_eq!(read_stats(&p).unwrap(), doc);
        let c = dir.path().join("counts.json");
        write_counts(&counts, &c).unwrap();
        assert!(read_counts(&c).unwrap() == counts);

        let empty = StatsDocument::new(
            PartStatsReport {
                parts: vec![],
                grand_total: 0,
                diagnostics: Diagnostics::default(),
            },
            &ExposureCounts::new(),
            doc.provenance.clone(),
        );
        write_stats(&empty, &p).unwrap();
        assert_eq!(read_stats(&p).unwrap(), empty);
    }

    #[test]
    fn plasma_endpoints_and_midpoint() {
        let lut = plasma_lut();
        assert_eq!(lut[0], [13, 8, 135]);
        assert_eq!(lut[255], [240, 249, 33]);
        assert_eq!(plasma(0.0).unwrap().rgb(), lut[0]);
        assert_eq!(plasma(1.0).unwrap().rgb(), lut[255]);
        let mid = plasma(0.5).unwrap().rgb();
        for k in 0..3 {
            let want = ((lut[127][k] as f64 + lut[128][k] as f64) / 2.0).round() as u8;
            assert_eq!(mid[k], want);
        }
        assert!(plasma(-0.01).is_err());
        assert!(plasma(1.01).is_err());
        assert!(plasma(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn plasma_inverts_within_one_level(u in 0.0f64..=1.0) {
            let back = plasma_inverse(plasma(u).unwrap());
            prop_assert!((back - u).abs() <= 1.0 / 255.0, "{} -> {}", u, back);
        }
    }

    #[test]
    fn heatmap_normalization() {
        let mut counts = ExposureCounts::new();
        assert!(matches!(emit_heatmap(&counts), Err(Error::EmptyData(_))));
        counts.counts[1234] = 5;
        let h = emit_heatmap(&counts).unwrap();
        assert_eq!(h.max, 5);
        assert_eq!(h.image.pixels()[1234], plasma(1.0).unwrap());
        assert_eq!(h.image.pixels()[0], plasma(0.0).unwrap());
        assert_eq!(h.image.width(), 4096);
    }
}

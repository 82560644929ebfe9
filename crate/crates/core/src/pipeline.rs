//! Stage orchestration for the command-line tool: palette, PIdT, capture,
//! analysis and heatmap, with content-hash caching of completed stages.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::analyze::{self, AnalyzeOptions, ExposureCounts, PartStats, Provenance, StatsDocument};
use crate::capture::{self, CaptureOptions, Manifest};
use crate::error::{Error, Result};
use crate::image::ENCODER;
use crate::meshkit::{
    self, OwnershipMap, PartIdentificationTexture, PartMap, PartNaming, PartTable,
};
use crate::oracle::{self, OracleReport};
use crate::palette::{self, ColorCode};
use crate::scene::{Scenario, ScenarioFile};

pub const PALETTE_DIR: &str = "palette";
pub const PALETTE_FILE: &str = "fcsp.png";
pub const PIDT_DIR: &str = "pidt";
pub const CAPTURES_DIR: &str = "captures";
pub const ANALYSIS_DIR: &str = "analysis";
pub const STATS_FILE: &str = "stats.json";
pub const COUNTS_FILE: &str = "counts.json";
pub const HEATMAP_FILE: &str = "heatmap.png";
const STAMP: &str = ".stage-key";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Palette,
    Pidt,
    Capture,
    Analyze,
    Heatmap,
    Oracle,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Palette => "palette",
            Stage::Pidt => "pidt",
            Stage::Capture => "capture",
            Stage::Analyze => "analyze",
            Stage::Heatmap => "heatmap",
            Stage::Oracle => "oracle",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Error,
    },
    #[error("strict colors: {colors} unowned colors observed {observations} times")]
    StrictColors { colors: u64, observations: u64 },
}

pub type RunResult<T> = std::result::Result<T, RunError>;

trait Tag<T> {
    fn tag(self, stage: Stage) -> RunResult<T>;
}

impl<T> Tag<T> for Result<T> {
    fn tag(self, stage: Stage) -> RunResult<T> {
        self.map_err(|source| RunError::Stage { stage, source })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub scale: usize,
    pub trim: bool,
    pub strict: bool,
    pub dump_frames: bool,
    /// Worker threads; `None` uses the current pool.
    pub workers: Option<usize>,
    pub force: bool,
}

impl RunConfig {
    pub fn new(scenario: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            scenario: scenario.into(),
            out: out.into(),
            scale: 1,
            trim: true,
            strict: false,
            dump_frames: false,
            workers: None,
            force: false,
        }
    }
}

/// Runs `f` on a dedicated pool of `workers` threads, or inline.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("worker count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct KeyHasher(Sha256);

impl KeyHasher {
    fn new(stage: Stage) -> Self {
        let mut h = Sha256::new();
        h.update(b"ufcsr-stage-1\0");
        h.update(stage.to_string().as_bytes());
        KeyHasher(h)
    }

    fn field(&mut self, bytes: &[u8]) -> &mut Self {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    fn file(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(self.field(&bytes))
    }

    fn finish(self) -> String {
        self.0
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn cached(dir: &Path, key: &str, outputs: &[&str], force: bool) -> bool {
    !force
        && fs::read_to_string(dir.join(STAMP)).is_ok_and(|s| s.trim() == key)
        && outputs.iter().all(|o| dir.join(o).exists())
}

fn stamp(dir: &Path, key: &str) -> Result<()> {
    let path = dir.join(STAMP);
    fs::write(&path, format!("{key}\n")).map_err(|e| Error::io(&path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn gen_palette(out: &Path) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    palette::write_fcsp(out)
}

pub fn bake_pidt(mesh: &Path, parts: Option<&Path>, out: &Path) -> Result<PartTable> {
    let map = parts.map(PartMap::load).transpose()?;
    let naming = map.clone().map(PartNaming::Map).unwrap_or_default();
    let mesh = meshkit::load_mesh(mesh, &naming)?;
    meshkit::bake_to_dir(&mesh, map.as_ref(), out)
}

/// Loads a scenario file and applies a resolution divisor.
pub fn load_scenario(path: &Path, scale: usize) -> Result<Scenario> {
    let s = Scenario::load(path)?.with_scale(scale)?;
    s.validate()?;
    Ok(s)
}

/// Ownership map and ignore color for a scenario's subject.
pub fn prepare_subject(scenario: &Scenario) -> Result<(OwnershipMap, ColorCode)> {
    let ownership = meshkit::texel_ownership(&scenario.subject)?;
    let ignore = palette::select_ignore_color(&ownership.covered_colors())?;
    Ok((ownership, ignore))
}

pub fn render(scenario: &Scenario, out: &Path, dump_frames: bool) -> Result<Manifest> {
    let (ownership, ignore) = prepare_subject(scenario)?;
    capture::write_captures(
        scenario,
        &ownership,
        ignore,
        out,
        &CaptureOptions { dump_frames },
    )
}

/// Counts a capture directory against a PIdT directory and writes
/// `stats.json` and `counts.json` into `out`.
pub fn analyze_dir(
    captures: &Path,
    pidt_dir: &Path,
    out: &Path,
    trim: bool,
) -> Result<(StatsDocument, ExposureCounts)> {
    let manifest = Manifest::read(captures)?;
    let (pidt, table) = meshkit::read_pidt_dir(pidt_dir)?;
    let counts = analyze::aggregate(&manifest, captures, AnalyzeOptions { trim })?;
    let doc = stats_for(&manifest, &counts, &pidt, &table)?;
    create_dir(out)?;
    analyze::write_stats(&doc, &out.join(STATS_FILE))?;
    analyze::write_counts(&counts, &out.join(COUNTS_FILE))?;
    Ok((doc, counts))
}

fn stats_for(
    manifest: &Manifest,
    counts: &ExposureCounts,
    pidt: &PartIdentificationTexture,
    table: &PartTable,
) -> Result<StatsDocument> {
    let report = analyze::part_stats(counts, pidt, &table.census())?;
    Ok(StatsDocument::new(
        report,
        counts,
        Provenance::from_manifest(manifest),
    ))
}

pub fn write_heatmap(counts: &ExposureCounts, out: &Path) -> Result<u32> {
    let heat = analyze::emit_heatmap(counts)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    heat.image.write_png(out)?;
    Ok(heat.max)
}

pub fn heatmap_from_file(counts: &Path, out: &Path) -> Result<u32> {
    write_heatmap(&analyze::read_counts(counts)?, out)
}

pub const DISAGREEMENT_FILE: &str = "disagreement.png";

/// Runs raster and oracle on the scenario; writes the disagreement raster
/// into `out` when given.
pub fn oracle_check(scenario: &Scenario, out: Option<&Path>) -> Result<OracleReport> {
    let (ownership, ignore) = prepare_subject(scenario)?;
    let report = oracle::oracle_check(scenario, &ownership, ignore)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        oracle::disagreement_image(&report, &ownership).write_png(&dir.join(DISAGREEMENT_FILE))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: String,
    pub frames: usize,
    pub captures: usize,
    pub tiles: usize,
    pub trimmed: u64,
    pub grand_total: u64,
    pub top: Vec<PartStats>,
    /// Stages skipped because their cached outputs matched.
    pub reused: Vec<Stage>,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        writeln!(f, "frames per eye: {}", self.frames)?;
        writeln!(f, "captures: {}", self.captures)?;
        writeln!(f, "tiles: {}", self.tiles)?;
        writeln!(f, "trimmed tiles: {}", self.trimmed)?;
        writeln!(f, "grand total: {}", self.grand_total)?;
        if !self.reused.is_empty() {
            let names: Vec<String> = self.reused.iter().map(|s| s.to_string()).collect();
            writeln!(f, "cached stages: {}", names.join(", "))?;
        }
        f.write_str(&render_table(&self.top))
    }
}

/// Runs every stage for one scenario under `config.out`.
pub fn run(config: &RunConfig) -> RunResult<RunSummary> {
    with_workers(config.workers, || run_inner(config)).tag(Stage::Config)?
}

fn run_inner(config: &RunConfig) -> RunResult<RunSummary> {
    let out = &config.out;
    let mut reused = Vec::new();

    let file = ScenarioFile::load(&config.scenario).tag(Stage::Load)?;
    let base = config
        .scenario
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();

    let palette_dir = out.join(PALETTE_DIR);
    let key = KeyHasher::new(Stage::Palette).finish();
    if cached(&palette_dir, &key, &[PALETTE_FILE], config.force) {
        reused.push(Stage::Palette);
    } else {
        create_dir(&palette_dir)
            .and_then(|_| gen_palette(&palette_dir.join(PALETTE_FILE)))
            .and_then(|_| stamp(&palette_dir, &key))
            .tag(Stage::Palette)?;
    }

    let scenario = Scenario::load(&config.scenario)
        .and_then(|s| s.with_scale(config.scale))
        .and_then(|s| s.validate().map(|_| s))
        .tag(Stage::Load)?;

    let pidt_dir = out.join(PIDT_DIR);
    let pidt_key = {
        let mut h = KeyHasher::new(Stage::Pidt);
        let inputs = (|| {
            h.file(&base.join(&file.subject.mesh))?;
            if let Some(p) = &file.subject.parts {
                h.file(&base.join(p))?;
            }
            Ok(())
        })();
        inputs.tag(Stage::Pidt)?;
        h.finish()
    };
    if cached(
        &pidt_dir,
        &pidt_key,
        &[meshkit::PIDT_IMAGE, meshkit::PART_TABLE],
        config.force,
    ) {
        reused.push(Stage::Pidt);
    } else {
        meshkit::bake_to_dir(&scenario.subject, scenario.part_map.as_ref(), &pidt_dir)
            .and_then(|_| stamp(&pidt_dir, &pidt_key))
            .tag(Stage::Pidt)?;
    }

    let capture_dir = out.join(CAPTURES_DIR).join(format!("S{}", scenario.id));
    let capture_key = {
        let mut h = KeyHasher::new(Stage::Capture);
        h.field(pidt_key.as_bytes());
        let inputs = (|| {
            h.file(&config.scenario)?;
            for f in file.referenced_files(&base) {
                h.file(&f)?;
            }
            Ok(())
        })();
        inputs.tag(Stage::Capture)?;
        h.field(&(config.scale as u64).to_le_bytes())
            .field(&[config.dump_frames as u8])
            .field(
                serde_json::to_string(&ENCODER)
                    .unwrap_or_default()
                    .as_bytes(),
            );
        h.finish()
    };
    let manifest = if cached(
        &capture_dir,
        &capture_key,
        &[capture::MANIFEST],
        config.force,
    ) {
        reused.push(Stage::Capture);
        Manifest::read(&capture_dir).tag(Stage::Capture)?
    } else {
        let fresh = (|| {
            if capture_dir.exists() {
                fs::remove_dir_all(&capture_dir).map_err(|e| Error::io(&capture_dir, e))?;
            }
            let m = render(&scenario, &capture_dir, config.dump_frames)?;
            stamp(&capture_dir, &capture_key)?;
            Ok(m)
        })();
        fresh.tag(Stage::Capture)?
    };

    let analysis_dir = out.join(ANALYSIS_DIR);
    let analyze_key = {
        let mut h = KeyHasher::new(Stage::Analyze);
        h.field(capture_key.as_bytes()).field(&[config.trim as u8]);
        h.finish()
    };
    let (doc, counts) = if cached(
        &analysis_dir,
        &analyze_key,
        &[STATS_FILE, COUNTS_FILE, HEATMAP_FILE],
        config.force,
    ) {
        reused.push(Stage::Analyze);
        reused.push(Stage::Heatmap);
        let doc = analyze::read_stats(&analysis_dir.join(STATS_FILE)).tag(Stage::Analyze)?;
        (doc, None)
    } else {
        let (doc, counts) =
            analyze_dir(&capture_dir, &pidt_dir, &analysis_dir, config.trim).tag(Stage::Analyze)?;
        (doc, Some(counts))
    };
    if let Some(counts) = counts {
        write_heatmap(&counts, &analysis_dir.join(HEATMAP_FILE))
            .and_then(|_| stamp(&analysis_dir, &analyze_key))
            .tag(Stage::Heatmap)?;
    }

    if config.strict {
        check_strict(&doc)?;
    }

    Ok(RunSummary {
        scenario: scenario.id.clone(),
        frames: manifest.frames,
        captures: manifest.captures(),
        tiles: manifest.records.len(),
        trimmed: doc.images_trimmed,
        grand_total: doc.grand_total,
        top: report_top5(&doc),
        reused,
    })
}

/// Strict-mode check on a finished stats document.
pub fn check_strict(doc: &StatsDocument) -> RunResult<()> {
    let d = &doc.diagnostics;
    if d.unowned_colors > 0 {
        return Err(RunError::StrictColors {
            colors: d.unowned_colors,
            observations: d.unowned_observations,
        });
    }
    Ok(())
}

fn top_by(
    parts: &[PartStats],
    key: impl Fn(&PartStats, &PartStats) -> Ordering,
) -> Vec<&PartStats> {
    let mut sorted: Vec<&PartStats> = parts.iter().collect();
    sorted.sort_by(|a, b| key(b, a).then_with(|| a.name.cmp(&b.name)));
    sorted.truncate(5);
    sorted
}

/// Union of the five highest parts by total, average and peak, ordered by
/// total descending then name.
pub fn report_top5(doc: &StatsDocument) -> Vec<PartStats> {
    let parts = &doc.parts;
    let mut names: Vec<&str> = Vec::new();
    for list in [
        top_by(parts, |a, b| a.total.cmp(&b.total)),
        top_by(parts, |a, b| a.average.total_cmp(&b.average)),
        top_by(parts, |a, b| a.peak.cmp(&b.peak)),
    ] {
        for p in list {
            if !names.contains(&p.name.as_str()) {
                names.push(&p.name);
            }
        }
    }
    let mut rows: Vec<PartStats> = parts
        .iter()
        .filter(|p| names.contains(&p.name.as_str()))
        .cloned()
        .collect();
    rows.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.name.cmp(&b.name)));
    rows
}

pub fn render_table(rows: &[PartStats]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>12}  {:>8}  {:>12}  {:>8}",
        "part", "total", "peak", "average", "portion"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>12}  {:>8}  {:>12.3}  {:>7.2}%",
            r.name,
            r.total,
            r.peak,
            r.average,
            r.portion * 100.0
        );
    }
    s
}

pub fn report(stats: &Path) -> Result<String> {
    let doc = analyze::read_stats(stats)?;
    Ok(format!(
        "scenario {}\ngrand total: {}\n{}",
        doc.provenance.scenario,
        doc.grand_total,
        render_table(&report_top5(&doc))
    ))
}

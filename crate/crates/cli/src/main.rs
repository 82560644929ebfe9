use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ufcsr::pipeline::{self, RunConfig, RunError, Stage};

#[derive(Parser)]
#[command(
    name = "ufcsr",
    version,
    about = "Texel exposure measurement by full-color-space rendering"
)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RenderFlags {
    /// Divide the output resolution by this factor.
    #[arg(long, default_value_t = 1)]
    scale: usize,
    /// Also write full frames under `frames/`.
    #[arg(long)]
    dump_frames: bool,
}

#[derive(Args)]
struct AnalyzeFlags {
    /// Read every tile, including ones the byte-length rule marks empty.
    #[arg(long)]
    no_trim: bool,
    /// Fail with status 3 if any unowned color is observed.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the full color space palette texture.
    GenPalette {
        #[arg(long)]
        out: PathBuf,
    },
    /// Bake the part identification texture and part table.
    BakePidt {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        parts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render and capture every frame of a scenario.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: RenderFlags,
    },
    /// Count captured tiles and write part statistics.
    Analyze {
        #[arg(long)]
        captures: PathBuf,
        #[arg(long)]
        pidt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: AnalyzeFlags,
    },
    /// Turn a counts file into a heatmap texture.
    Heatmap {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare rasterized counts with the ray-cast reference.
    OracleCheck {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 10)]
        scale: usize,
        /// Directory for the disagreement raster.
        #[arg(long, default_value = "oracle-check")]
        out: PathBuf,
    },
    /// Run every stage for one scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        render: RenderFlags,
        #[command(flatten)]
        analyze: AnalyzeFlags,
        /// Ignore cached stage outputs.
        #[arg(long)]
        force: bool,
    },
    /// Print the top parts by total, average and peak.
    Report {
        #[arg(long)]
        stats: PathBuf,
    },
}

fn stage<T>(stage: Stage, r: ufcsr::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Stage { stage, source })
}

fn pooled<T: Send>(
    workers: Option<usize>,
    s: Stage,
    f: impl FnOnce() -> ufcsr::Result<T> + Send,
) -> Result<T, RunError> {
    stage(s, pipeline::with_workers(workers, f).and_then(|r| r))
}

fn execute(command: Command, workers: Option<usize>) -> Result<(), RunError> {
    match command {
        Command::GenPalette { out } => {
            pooled(workers, Stage::Palette, || pipeline::gen_palette(&out))?;
            println!("wrote {}", out.display());
        }
        Command::BakePidt { mesh, parts, out } => {
            let table = stage(
                Stage::Pidt,
                pipeline::bake_pidt(&mesh, parts.as_deref(), &out),
            )?;
            for e in &table.entries {
                println!("{:>3}  {}  {:>9}  {}", e.id.0, e.color, e.texels, e.name);
            }
        }
        Command::Render {
            scenario,
            out,
            flags,
        } => {
            let s = stage(Stage::Load, pipeline::load_scenario(&scenario, flags.scale))?;
            let schedule = s.schedule();
            pooled(workers, Stage::Capture, || {
                pipeline::render(&s, &out, flags.dump_frames).map(|_| ())
            })?;
            println!("frames per eye: {}", schedule.frames());
            println!("captures: {}", schedule.captures());
            println!("tiles: {}", schedule.tile_files(&s.rig));
        }
        Command::Analyze {
            captures,
            pidt,
            out,
            flags,
        } => {
            let (doc, _) = pooled(workers, Stage::Analyze, || {
                pipeline::analyze_dir(&captures, &pidt, &out, !flags.no_trim)
            })?;
            println!("tiles: {}  trimmed: {}", doc.images, doc.images_trimmed);
            println!("grand total: {}", doc.grand_total);
            if flags.strict {
                pipeline::check_strict(&doc)?;
            }
        }
        Command::Heatmap { counts, out } => {
            pooled(workers, Stage::Heatmap, || {
                pipeline::heatmap_from_file(&counts, &out).map(|_| ())
            })?;
            println!("wrote {}", out.display());
        }
        Command::OracleCheck {
            scenario,
            scale,
            out,
        } => {
            let s = stage(Stage::Load, pipeline::load_scenario(&scenario, scale))?;
            let report = pooled(workers, Stage::Oracle, || {
                pipeline::oracle_check(&s, Some(&out))
            })?;
            println!(
                "agreement: {:.4}% ({} of {} owned texels)",
                report.agreement_rate() * 100.0,
                report.agreeing_texels,
                report.owned_texels
            );
            let silhouette = report
                .disagreements
                .iter()
                .filter(|d| d.silhouette_adjacent)
                .count();
            println!(
                "disagreements: {} ({} silhouette-adjacent)",
                report.disagreements.len(),
                silhouette
            );
            println!("foreign colors: {}", report.foreign_colors);
            println!(
                "raster: {}",
                out.join(pipeline::DISAGREEMENT_FILE).display()
            );
        }
        Command::Run {
            scenario,
            out,
            render,
            analyze,
            force,
        } => {
            let config = RunConfig {
                scenario,
                out,
                scale: render.scale,
                trim: !analyze.no_trim,
                strict: analyze.strict,
                dump_frames: render.dump_frames,
                workers,
                force,
            };
            let summary = pipeline::run(&config)?;
            print!("{summary}");
        }
        Command::Report { stats } => {
            print!("{}", stage(Stage::Report, pipeline::report(&stats))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command, cli.workers) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::StrictColors { .. } => ExitCode::from(3),
                RunError::Stage { .. } => ExitCode::from(2),
            }
        }
    }
}

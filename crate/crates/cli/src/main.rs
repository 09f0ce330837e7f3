//! rastervec: bundle management, single-image vectorization, distributed
//! runs, worker mode, and the scalability benchmark behind one binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure. Diagnostics
//! go to stderr; data goes to stdout when an output path is `-`.

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rastervec_core::bundle::{bundle_create, bundle_open, cull, CullPredicate};
use rastervec_core::engine::{self, run_job, serve_worker, Execution, JobSpec};
use rastervec_core::geojson::to_geojson;
use rastervec_core::pipeline::{render_png, vectorize_image};
use rastervec_core::raster::decode_image;
use rastervec_core::{Connectivity, ImageFormat, PipelineConfig};
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rastervec",
    version,
    about = "Raster-to-vector pipeline over packed image bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_connectivity(s: &str) -> Result<u8, String> {
    match s {
        "4" | "8" => Ok(s.parse().unwrap()),
        _ => Err("connectivity must be 4 or 8".into()),
    }
}

fn parse_se_size(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v % 2 == 1 {
        Ok(v)
    } else {
        Err("structuring element size must be odd".into())
    }
}

fn parse_format(s: &str) -> Result<ImageFormat, String> {
    s.parse()
}

#[derive(Args)]
struct PipelineArgs {
    /// Drop components below this many pixels before morphology.
    #[arg(long, default_value_t = 300)]
    min_area_pre: usize,
    /// Drop components below this many pixels after hole filling.
    #[arg(long, default_value_t = 10000)]
    min_area_post: usize,
    /// Structuring element edge length (odd).
    #[arg(long, default_value_t = 3, value_parser = parse_se_size)]
    se_size: usize,
    /// Component connectivity: 4 or 8.
    #[arg(long, default_value_t = 8, value_parser = parse_connectivity)]
    connectivity: u8,
    /// Rescale both area thresholds by image_area / 7000^2; the defaults
    /// assume imagery near 7000x7000, so small inputs want this on.
    #[arg(long)]
    auto_scale_areas: bool,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            min_area_pre: self.min_area_pre,
            min_area_post: self.min_area_post,
            se_size: self.se_size,
            connectivity: match self.connectivity {
                4 => Connectivity::Four,
                _ => Connectivity::Eight,
            },
        }
    }
}

#[derive(Args)]
struct CullArgs {
    /// Keep entries at least this wide.
    #[arg(long)]
    min_width: Option<u32>,
    /// Keep entries at least this tall.
    #[arg(long)]
    min_height: Option<u32>,
    /// Keep entries with at least this many pixels.
    #[arg(long)]
    min_pixels: Option<u64>,
    /// Keep entries with at most this many pixels.
    #[arg(long)]
    max_pixels: Option<u64>,
    /// Keep only these formats (comma-separated: png,jpeg,ppm,pgm).
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    formats: Option<Vec<ImageFormat>>,
}

impl CullArgs {
    fn predicate(&self) -> CullPredicate {
        CullPredicate {
            min_width: self.min_width,
            min_height: self.min_height,
            min_pixel_count: self.min_pixels,
            max_pixel_count: self.max_pixels,
            allowed_formats: self
                .formats
                .as_ref()
                .map(|f| f.iter().copied().collect::<BTreeSet<_>>()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pack image files into a bundle.
    #[command(name = "bundle-create")]
    BundleCreate {
        /// Bundle file to write.
        #[arg(short, long)]
        out: PathBuf,
        /// Input images (png, jpeg, ppm, pgm).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print one line per entry: index, name, WxH, format.
    #[command(name = "bundle-list")]
    BundleList {
        /// Bundle file to inspect.
        file: PathBuf,
    },
    /// Print the indices of entries passing the filters, one per line.
    Cull {
        /// Bundle file to filter.
        file: PathBuf,
        #[command(flatten)]
        cull: CullArgs,
    },
    /// Vectorize a single image to GeoJSON.
    Vectorize {
        /// Input image file.
        #[arg(short, long)]
        input: PathBuf,
        /// Output GeoJSON path, or - for stdout.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the filled-polygon mask as a PNG.
        #[arg(long)]
        render: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Vectorize every culled entry of a bundle.
    #[command(group(clap::ArgGroup::new("exec").required(true).args(["workers", "endpoints"])))]
    Run {
        /// Bundle file to process.
        #[arg(long)]
        bundle: PathBuf,
        /// Directory for entry_<i>.geojson outputs.
        #[arg(long)]
        out: PathBuf,
        /// Local worker thread count.
        #[arg(long)]
        workers: Option<usize>,
        /// Remote worker endpoints (comma-separated host:port).
        #[arg(long, value_delimiter = ',')]
        endpoints: Option<Vec<String>>,
        /// Also write entry_<i>.png mask renders.
        #[arg(long)]
        emit_render: bool,
        #[command(flatten)]
        cull: CullArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Serve vectorization tasks over TCP until terminated.
    Worker {
        /// Address to listen on (host:port).
        #[arg(long)]
        listen: String,
    },
    /// Measure job wall time across worker counts; emit CSV.
    Bench {
        /// Image counts to test (comma-separated).
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        /// Synthetic image edge length in pixels.
        #[arg(long)]
        size: u32,
        /// Worker counts to test (comma-separated).
        #[arg(long, value_delimiter = ',', required = true)]
        workers: Vec<usize>,
        /// Repetitions per cell.
        #[arg(long)]
        reps: usize,
        /// CSV output path, or - for stdout.
        #[arg(long)]
        csv: PathBuf,
        /// RNG seed for the synthetic imagery.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Write to a file, or to stdout when the path is `-`.
fn emit(path: &Path, bytes: &[u8]) -> Result<()> {
    if path == Path::new("-") {
        std::io::stdout().write_all(bytes).context("writing to stdout")?;
    } else {
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn open_bundle(path: &Path) -> Result<rastervec_core::ImageBundle> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading bundle {}", path.display()))?;
    bundle_open(bytes).with_context(|| format!("opening bundle {}", path.display()))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::BundleCreate { out, inputs } => {
            let mut named = Vec::with_capacity(inputs.len());
            for path in &inputs {
                let bytes = std::fs::read(path)
                    .with_context(|| format!("reading input {}", path.display()))?;
                named.push((path.to_string_lossy().into_owned(), bytes));
            }
            let bundle = bundle_create(&named)?;
            emit(&out, &bundle)?;
            eprintln!("bundled {} entries into {}", inputs.len(), out.display());
        }
        Command::BundleList { file } => {
            let bundle = open_bundle(&file)?;
            let mut stdout = std::io::stdout().lock();
            for (i, h) in bundle.headers().iter().enumerate() {
                writeln!(stdout, "{i}\t{}\t{}x{}\t{}", h.name, h.width, h.height, h.format)?;
            }
        }
        Command::Cull { file, cull: cull_args } => {
            let bundle = open_bundle(&file)?;
            let kept = cull(&bundle, &cull_args.predicate());
            let mut stdout = std::io::stdout().lock();
            for i in kept {
                writeln!(stdout, "{i}")?;
            }
        }
        Command::Vectorize { input, out, render, pipeline } => {
            let bytes = std::fs::read(&input)
                .with_context(|| format!("reading image {}", input.display()))?;
            let img = decode_image(&bytes, None)
                .with_context(|| format!("decoding {}", input.display()))?;
            let cfg = if pipeline.auto_scale_areas {
                pipeline.config().scaled_for(img.width(), img.height())
            } else {
                pipeline.config()
            };
            let mut scene = vectorize_image(&img, &cfg);
            // Named like a one-entry bundle run, so `vectorize` and `run`
            // agree byte-for-byte on the same image.
            scene.source_name = "entry_0".into();
            emit(&out, to_geojson(&scene).as_bytes())?;
            if let Some(render_path) = render {
                emit(&render_path, &render_png(&scene))?;
            }
        }
        Command::Run {
            bundle,
            out,
            workers,
            endpoints,
            emit_render,
            cull: cull_args,
            pipeline,
        } => {
            let execution = match (workers, endpoints) {
                (Some(w), None) => Execution::Local { workers: w },
                (None, Some(e)) => Execution::Remote { endpoints: e },
                _ => unreachable!("clap enforces exactly one of --workers/--endpoints"),
            };
            let spec = JobSpec {
                bundle_path: bundle,
                output_dir: out,
                cfg: pipeline.config(),
                execution,
                cull: cull_args.predicate(),
                emit_render,
                auto_scale_areas: pipeline.auto_scale_areas,
            };
            let report = run_job(&spec)?;
            eprintln!(
                "processed {} entries ({} failed) in {:.3}s",
                report.entries_processed, report.entries_failed, report.total_wall_seconds
            );
            for failure in &report.failures {
                eprintln!("entry {} failed: {}", failure.entry_index, failure.reason);
            }
        }
        Command::Worker { listen } => {
            serve_worker(&listen)?;
        }
        Command::Bench { counts, size, workers, reps, csv, seed } => {
            let text = engine::bench(&counts, size, &workers, reps, seed)?;
            emit(&csv, text.as_bytes())?;
        }
    }
    Ok(())
}

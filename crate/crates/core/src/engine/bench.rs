//! Scalability measurement: how wall time moves with worker count.
//!
//! For each image count a bundle of seeded synthetic island scenes is
//! built once, then timed jobs run per worker count and repetition.
//! Bundle construction happens outside the timed window; wall_seconds
//! is run_job's own span (bundle open through last output write).

use crate::bundle::{bundle_create, CullPredicate};
use crate::engine::{run_job, Execution, JobError, JobSpec};
use crate::pipeline::PipelineConfig;
use crate::raster::encode_png_rgb;
use crate::synth::synthetic_islands;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

pub const CSV_HEADER: &str = "n_images,image_size,workers,repetition,wall_seconds";

/// Decorrelates per-image seeds drawn from (seed, count, index).
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn scratch_dir() -> PathBuf {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).expect("clock").as_nanos();
    std::env::temp_dir().join(format!("rastervec-bench-{}-{nanos}", std::process::id()))
}

/// Run the measurement matrix and return the CSV text: one header line,
/// then len(counts) * len(worker_counts) * repetitions data rows in
/// that nesting order. The same seed always regenerates the same
/// imagery, so rows are comparable across machines and runs.
pub fn bench(
    counts: &[usize],
    size: u32,
    worker_counts: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<String, JobError> {
    assert!(!counts.is_empty(), "counts must be non-empty");
    assert!(!worker_counts.is_empty(), "worker_counts must be non-empty");
    assert!(repetitions >= 1, "need at least one repetition");

    let base = scratch_dir();
    std::fs::create_dir_all(&base)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');

    for &n in counts {
        let inputs: Vec<(String, Vec<u8>)> = (0..n)
            .map(|k| {
                let img_seed = splitmix64(seed ^ ((n as u64) << 32) ^ k as u64);
                let img = synthetic_islands(size, size, img_seed);
                (format!("synthetic_{n}_{k}.png"), encode_png_rgb(&img))
            })
            .collect();
        let bundle = bundle_create(&inputs).expect("synthetic inputs always encode");
        let bundle_path = base.join(format!("bench_{n}.svb"));
        std::fs::write(&bundle_path, bundle)?;

        for &workers in worker_counts {
            for rep in 0..repetitions {
                let output_dir = base.join(format!("out_{n}_{workers}_{rep}"));
                let spec = JobSpec {
                    bundle_path: bundle_path.clone(),
                    output_dir: output_dir.clone(),
                    cfg: PipelineConfig::default(),
                    execution: Execution::Local { workers },
                    cull: CullPredicate::default(),
                    emit_render: false,
                    auto_scale_areas: true,
                };
                let report = run_job(&spec)?;
                csv.push_str(&format!(
                    "{n},{size},{workers},{rep},{:.6}\n",
                    report.total_wall_seconds
                ));
                std::fs::remove_dir_all(&output_dir).ok();
            }
        }
    }
    std::fs::remove_dir_all(&base).ok();
    Ok(csv)
}

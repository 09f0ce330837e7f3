//! Map-only job engine.
//!
//! A single coordinator fans culled bundle entries out to workers (an
//! in-process thread pool, or remote TCP workers) and is the only thing
//! that touches the output directory. Each entry produces exactly one
//! GeoJSON file, written once; there is no reduce stage and outputs are
//! never merged. Entry files are a pure function of (payload, config),
//! so worker count and scheduling cannot change the output bytes.

pub mod bench;
pub mod protocol;
pub mod scheduler;
pub mod worker;

pub use bench::bench;
pub use scheduler::{ScheduleMode, Scheduler};
pub use worker::{handle_connection, process_entry, serve_listener, serve_worker};

use crate::bundle::{
    bundle_open, bundle_read_entry, cull, BundleEntryHeader, CullPredicate, ImageBundle,
};
use crate::geojson::{from_geojson, to_geojson};
use crate::pipeline::{render_png, PipelineConfig};
use protocol::{
    parse_message, read_frame, write_message, Message, ResultMessage, ResultStatus, TaskMessage,
};
use std::collections::HashSet;
use std::net::TcpStream;
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Execution {
    /// In-process pool of `workers` threads.
    Local { workers: usize },
    /// One dispatcher per endpoint; all endpoints must accept before
    /// any task ships.
    Remote { endpoints: Vec<String> },
}

#[derive(Debug, Clone)]
pub struct JobSpec {
    pub bundle_path: PathBuf,
    pub output_dir: PathBuf,
    pub cfg: PipelineConfig,
    pub execution: Execution,
    pub cull: CullPredicate,
    /// Also write output_dir/entry_<i>.png, the filled-polygon mask.
    pub emit_render: bool,
    /// Rescale the area thresholds in `cfg` per entry from its header
    /// dimensions, so one config serves mixed-resolution bundles.
    pub auto_scale_areas: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryRecord {
    pub entry_index: usize,
    pub worker_id: String,
    pub decode_seconds: f64,
    pub pipeline_seconds: f64,
    pub polygon_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureRecord {
    pub entry_index: usize,
    pub reason: String,
}

/// Always satisfies entries_processed + entries_failed == culled count,
/// and per_entry covers each processed entry exactly once.
#[derive(Debug, Clone)]
pub struct JobReport {
    pub total_wall_seconds: f64,
    pub per_entry: Vec<EntryRecord>,
    pub failures: Vec<FailureRecord>,
    pub entries_processed: usize,
    pub entries_failed: usize,
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("cannot read bundle {}: {detail}", .path.display())]
    BundleUnreadable { path: PathBuf, detail: String },
    #[error("worker endpoint {endpoint} unreachable: {detail}")]
    WorkerUnreachable { endpoint: String, detail: String },
    #[error("every worker connection was lost with {remaining} entries unfinished")]
    WorkersLost { remaining: usize },
    #[error("invalid job spec: {0}")]
    InvalidSpec(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Run a whole job: open the bundle, cull, process every selected entry
/// exactly once, write per-entry files, and report timings.
pub fn run_job(spec: &JobSpec) -> Result<JobReport, JobError> {
    let started = Instant::now();
    let unreadable = |detail: String| JobError::BundleUnreadable {
        path: spec.bundle_path.clone(),
        detail,
    };
    let bytes = std::fs::read(&spec.bundle_path).map_err(|e| unreadable(e.to_string()))?;
    let bundle = bundle_open(bytes).map_err(|e| unreadable(e.to_string()))?;
    std::fs::create_dir_all(&spec.output_dir)?;
    let selected = cull(&bundle, &spec.cull);
    let (per_entry, failures) = match &spec.execution {
        Execution::Local { workers } => run_local(spec, &bundle, &selected, *workers)?,
        Execution::Remote { endpoints } => run_remote(spec, &bundle, &selected, endpoints)?,
    };
    Ok(JobReport {
        total_wall_seconds: started.elapsed().as_secs_f64(),
        entries_processed: per_entry.len(),
        entries_failed: failures.len(),
        per_entry,
        failures,
    })
}

struct Success {
    geojson: Vec<u8>,
    render_png: Option<Vec<u8>>,
    polygon_count: usize,
    decode_seconds: f64,
    pipeline_seconds: f64,
}

struct Delivery {
    entry_index: usize,
    worker_id: String,
    outcome: Result<Success, String>,
}

fn effective_cfg(spec: &JobSpec, header: &BundleEntryHeader) -> PipelineConfig {
    if spec.auto_scale_areas {
        spec.cfg.scaled_for(header.width, header.height)
    } else {
        spec.cfg.clone()
    }
}

fn run_local(
    spec: &JobSpec,
    bundle: &ImageBundle,
    selected: &[usize],
    workers: usize,
) -> Result<(Vec<EntryRecord>, Vec<FailureRecord>), JobError> {
    if workers == 0 {
        return Err(JobError::InvalidSpec("local execution needs workers >= 1".into()));
    }
    let sched = Scheduler::dynamic(selected);
    let (tx, rx) = mpsc::channel::<Delivery>();
    std::thread::scope(|scope| {
        for w in 0..workers {
            let tx = tx.clone();
            let sched = &sched;
            scope.spawn(move || {
                while let Some(entry_index) = sched.claim(w) {
                    let delivery = local_entry(spec, bundle, entry_index, w);
                    if tx.send(delivery).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        collect(spec, rx)
    })
}

fn local_entry(spec: &JobSpec, bundle: &ImageBundle, entry_index: usize, w: usize) -> Delivery {
    let (header, payload) = bundle_read_entry(bundle, entry_index).expect("culled index in range");
    let cfg = effective_cfg(spec, header);
    let outcome = process_entry(payload, header.format, &cfg, format!("entry_{entry_index}")).map(
        |(scene, decode_seconds, pipeline_seconds)| Success {
            geojson: to_geojson(&scene).into_bytes(),
            render_png: spec.emit_render.then(|| render_png(&scene)),
            polygon_count: scene.polygons.len(),
            decode_seconds,
            pipeline_seconds,
        },
    );
    Delivery { entry_index, worker_id: format!("local_{w}"), outcome }
}

fn run_remote(
    spec: &JobSpec,
    bundle: &ImageBundle,
    selected: &[usize],
    endpoints: &[String],
) -> Result<(Vec<EntryRecord>, Vec<FailureRecord>), JobError> {
    if endpoints.is_empty() {
        return Err(JobError::InvalidSpec("remote execution needs at least one endpoint".into()));
    }
    // Connect everything up front: a dead endpoint aborts the job
    // before any task ships, rather than surfacing mid-run.
    let mut conns = Vec::with_capacity(endpoints.len());
    for endpoint in endpoints {
        match TcpStream::connect(endpoint) {
            Ok(stream) => {
                stream.set_nodelay(true).ok();
                conns.push(stream);
            }
            Err(e) => {
                for mut open in conns {
                    let _ = write_message(&mut open, &Message::Shutdown);
                }
                return Err(JobError::WorkerUnreachable {
                    endpoint: endpoint.clone(),
                    detail: e.to_string(),
                });
            }
        }
    }
    let sched = Scheduler::dynamic(selected);
    let (tx, rx) = mpsc::channel::<Delivery>();
    let (per_entry, failures) = std::thread::scope(|scope| {
        for (w, (endpoint, conn)) in endpoints.iter().zip(conns).enumerate() {
            let tx = tx.clone();
            let sched = &sched;
            scope.spawn(move || dispatch(spec, bundle, sched, w, endpoint, conn, tx));
        }
        drop(tx);
        collect(spec, rx)
    })?;
    let settled = per_entry.len() + failures.len();
    if settled < selected.len() {
        return Err(JobError::WorkersLost { remaining: selected.len() - settled });
    }
    Ok((per_entry, failures))
}

/// Feed one remote worker sequentially: ship a task, wait for its
/// result, repeat. Any connection or protocol failure puts the in-flight
/// entry back at the head of the queue and retires this dispatcher; the
/// surviving dispatchers absorb the remaining work.
fn dispatch(
    spec: &JobSpec,
    bundle: &ImageBundle,
    sched: &Scheduler,
    w: usize,
    endpoint: &str,
    mut conn: TcpStream,
    tx: mpsc::Sender<Delivery>,
) {
    while let Some(entry_index) = sched.claim(w) {
        let (header, payload) =
            bundle_read_entry(bundle, entry_index).expect("culled index in range");
        let task = Message::Task(TaskMessage {
            entry_index: entry_index as u32,
            format: header.format,
            cfg: effective_cfg(spec, header),
            image: payload.to_vec(),
        });
        if write_message(&mut conn, &task).is_err() {
            sched.requeue(w, entry_index);
            return;
        }
        let res = match read_frame(&mut conn) {
            Ok(Some(frame)) => match parse_message(&frame) {
                Ok(Message::Result(res)) if res.entry_index as usize == entry_index => res,
                _ => {
                    sched.requeue(w, entry_index);
                    return;
                }
            },
            _ => {
                sched.requeue(w, entry_index);
                return;
            }
        };
        let outcome = match res.status {
            ResultStatus::Ok => remote_success(spec, &res),
            ResultStatus::Error => Err(String::from_utf8_lossy(&res.body).into_owned()),
        };
        let delivery = Delivery { entry_index, worker_id: endpoint.to_string(), outcome };
        if tx.send(delivery).is_err() {
            return;
        }
    }
    let _ = write_message(&mut conn, &Message::Shutdown);
}

fn remote_success(spec: &JobSpec, res: &ResultMessage) -> Result<Success, String> {
    // Re-parse the scene so polygon_count and the render come from the
    // same bytes that land on disk; a worker shipping junk is a
    // recorded failure, not a trusted write.
    let text = std::str::from_utf8(&res.body)
        .map_err(|e| format!("worker returned non-UTF-8 body: {e}"))?;
    let scene =
        from_geojson(text).map_err(|e| format!("worker returned invalid GeoJSON: {e}"))?;
    Ok(Success {
        geojson: res.body.clone(),
        render_png: spec.emit_render.then(|| render_png(&scene)),
        polygon_count: scene.polygons.len(),
        decode_seconds: 0.0,
        pipeline_seconds: res.pipeline_seconds,
    })
}

/// Single-writer sink. The first delivery for an entry settles it; a
/// duplicate (a result that raced a retry) is dropped, which is what
/// makes output exactly-once under requeues.
fn collect(
    spec: &JobSpec,
    rx: mpsc::Receiver<Delivery>,
) -> Result<(Vec<EntryRecord>, Vec<FailureRecord>), JobError> {
    let mut settled = HashSet::new();
    let mut per_entry = Vec::new();
    let mut failures = Vec::new();
    for d in rx {
        if !settled.insert(d.entry_index) {
            continue;
        }
        match d.outcome {
            Ok(s) => {
                let stem = spec.output_dir.join(format!("entry_{}", d.entry_index));
                std::fs::write(stem.with_extension("geojson"), &s.geojson)?;
                if let Some(png) = &s.render_png {
                    std::fs::write(stem.with_extension("png"), png)?;
                }
                per_entry.push(EntryRecord {
                    entry_index: d.entry_index,
                    worker_id: d.worker_id,
                    decode_seconds: s.decode_seconds,
                    pipeline_seconds: s.pipeline_seconds,
                    polygon_count: s.polygon_count,
                });
            }
            Err(reason) => failures.push(FailureRecord { entry_index: d.entry_index, reason }),
        }
    }
    per_entry.sort_by_key(|r| r.entry_index);
    failures.sort_by_key(|f| f.entry_index);
    Ok((per_entry, failures))
}

//! Remote worker process: accepts coordinator connections and answers
//! TASK frames with RESULT frames, one at a time, in order.

use crate::engine::protocol::{
    parse_message, read_frame, write_message, Message, ResultMessage, ResultStatus,
};
use crate::geojson::to_geojson;
use crate::pipeline::{vectorize_image, PipelineConfig, VectorScene};
use crate::raster::{decode_image, ImageFormat};
use std::io;
use std::net::{TcpListener, TcpStream};
use std::time::Instant;

/// Decode an encoded image and vectorize it. Shared by local worker
/// threads and remote workers so both paths run byte-identical logic.
/// Timings are wall seconds for the decode and pipeline stages.
pub fn process_entry(
    image: &[u8],
    format: ImageFormat,
    cfg: &PipelineConfig,
    source_name: String,
) -> Result<(VectorScene, f64, f64), String> {
    let decode_start = Instant::now();
    let rgb = decode_image(image, Some(format)).map_err(|e| e.to_string())?;
    let decode_seconds = decode_start.elapsed().as_secs_f64();
    let pipeline_start = Instant::now();
    let mut scene = vectorize_image(&rgb, cfg);
    let pipeline_seconds = pipeline_start.elapsed().as_secs_f64();
    scene.source_name = source_name;
    Ok((scene, decode_seconds, pipeline_seconds))
}

/// Bind `listen_addr` and serve coordinator connections until the
/// process is terminated. Errors on a single connection are logged to
/// stderr and do not stop the listener.
pub fn serve_worker(listen_addr: &str) -> io::Result<()> {
    let listener = TcpListener::bind(listen_addr)?;
    eprintln!("worker listening on {}", listener.local_addr()?);
    serve_listener(&listener)
}

/// Accept loop over an already-bound listener. Split out so tests can
/// bind port 0 and learn the chosen port before serving.
pub fn serve_listener(listener: &TcpListener) -> io::Result<()> {
    loop {
        let (stream, peer) = listener.accept()?;
        if let Err(e) = handle_connection(stream) {
            eprintln!("connection from {peer} failed: {e}");
        }
    }
}

/// Serve one coordinator connection: TASK frames get RESULT replies in
/// order; SHUTDOWN or clean EOF ends the loop. A task that fails to
/// decode yields an error RESULT, not a dropped connection; a frame too
/// broken to name its entry closes the connection.
pub fn handle_connection(mut stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true).ok();
    loop {
        let Some(frame) = read_frame(&mut stream)? else {
            return Ok(());
        };
        let reply = match parse_message(&frame) {
            Ok(Message::Task(task)) => {
                let name = format!("entry_{}", task.entry_index);
                match process_entry(&task.image, task.format, &task.cfg, name) {
                    Ok((scene, _decode, pipeline_seconds)) => ResultMessage {
                        entry_index: task.entry_index,
                        status: ResultStatus::Ok,
                        pipeline_seconds,
                        body: to_geojson(&scene).into_bytes(),
                    },
                    Err(reason) => ResultMessage {
                        entry_index: task.entry_index,
                        status: ResultStatus::Error,
                        pipeline_seconds: 0.0,
                        body: reason.into_bytes(),
                    },
                }
            }
            Ok(Message::Shutdown) => return Ok(()),
            Ok(Message::Result(res)) => ResultMessage {
                entry_index: res.entry_index,
                status: ResultStatus::Error,
                pipeline_seconds: 0.0,
                body: b"unexpected RESULT frame on worker".to_vec(),
            },
            Err(e) => match e.entry_hint {
                Some(entry_index) => ResultMessage {
                    entry_index,
                    status: ResultStatus::Error,
                    pipeline_seconds: 0.0,
                    body: e.detail.into_bytes(),
                },
                None => {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, e.detail));
                }
            },
        };
        write_message(&mut stream, &Message::Result(reply))?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::protocol::TaskMessage;
    use crate::geojson::from_geojson;
    use crate::raster::encode_png_rgb;
    use crate::synth::synthetic_islands;
    use std::net::TcpStream;

    fn spawn_worker() -> std::net::SocketAddr {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let _ = serve_listener(&listener);
        });
        addr
    }

    #[test]
    fn worker_answers_tasks_in_order_and_honors_shutdown() {
        let addr = spawn_worker();
        let mut conn = TcpStream::connect(addr).unwrap();
        let cfg = PipelineConfig { min_area_pre: 2, min_area_post: 8, ..PipelineConfig::default() };
        for entry in [4u32, 9, 2] {
            let img = synthetic_islands(48, 48, 1000 + entry as u64);
            write_message(
                &mut conn,
                &Message::Task(TaskMessage {
                    entry_index: entry,
                    format: ImageFormat::Png,
                    cfg: cfg.clone(),
                    image: encode_png_rgb(&img),
                }),
            )
            .unwrap();
            let msg = read_frame(&mut conn).unwrap().expect("reply");
            let Message::Result(res) = parse_message(&msg).unwrap() else {
                panic!("expected RESULT");
            };
            assert_eq!(res.entry_index, entry);
            assert_eq!(res.status, ResultStatus::Ok);
            assert!(res.pipeline_seconds > 0.0);
            let text = std::str::from_utf8(&res.body).unwrap();
            let scene = from_geojson(text).expect("worker ships valid GeoJSON");
            assert_eq!(scene.source_name, format!("entry_{entry}"));
            assert_eq!(scene.width, 48);
        }
        write_message(&mut conn, &Message::Shutdown).unwrap();
        assert!(read_frame(&mut conn).unwrap().is_none(), "worker closes after shutdown");
    }

    #[test]
    fn corrupt_image_yields_error_result_and_connection_survives() {
        let addr = spawn_worker();
        let mut conn = TcpStream::connect(addr).unwrap();
        write_message(
            &mut conn,
            &Message::Task(TaskMessage {
                entry_index: 6,
                format: ImageFormat::Png,
                cfg: PipelineConfig::default(),
                image: vec![1, 2, 3, 4],
            }),
        )
        .unwrap();
        let frame = read_frame(&mut conn).unwrap().expect("reply");
        let Message::Result(res) = parse_message(&frame).unwrap() else {
            panic!("expected RESULT");
        };
        assert_eq!(res.entry_index, 6);
        assert_eq!(res.status, ResultStatus::Error);
        assert!(!res.body.is_empty(), "error body names the cause");

        // Same connection still works afterwards.
        let img = synthetic_islands(32, 32, 5);
        write_message(
            &mut conn,
            &Message::Task(TaskMessage {
                entry_index: 7,
                format: ImageFormat::Png,
                cfg: PipelineConfig { min_area_pre: 1, min_area_post: 1, ..Default::default() },
                image: encode_png_rgb(&img),
            }),
        )
        .unwrap();
        let frame = read_frame(&mut conn).unwrap().expect("reply");
        let Message::Result(res) = parse_message(&frame).unwrap() else {
            panic!("expected RESULT");
        };
        assert_eq!((res.entry_index, res.status), (7, ResultStatus::Ok));
    }

    #[test]
    fn unnameable_frame_drops_connection() {
        let addr = spawn_worker();
        let mut conn = TcpStream::connect(addr).unwrap();
        // Type byte 99 is no known message; worker cannot echo an entry.
        conn_write_raw(&mut conn, &[99, 1, 2]);
        assert!(read_frame(&mut conn).unwrap().is_none(), "worker hangs up");
    }

    fn conn_write_raw(conn: &mut TcpStream, body: &[u8]) {
        use std::io::Write;
        let mut buf = (body.len() as u32).to_le_bytes().to_vec();
        buf.extend_from_slice(body);
        conn.write_all(&buf).unwrap();
    }
}

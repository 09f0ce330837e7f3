//! Length-prefixed TCP protocol between coordinator and workers.
//!
//! Every frame is a little-endian u32 length followed by exactly that
//! many bytes. The length counts the message type byte plus the payload,
//! never the length field itself. Message types:
//!
//!   1 TASK      u32 entry_index, u16 format_code, u32 cfg_len,
//!               cfg_len bytes of canonical config JSON, u64 image_len,
//!               image_len bytes of encoded image
//!   2 RESULT    u32 entry_index, u8 status (0 ok, 1 error),
//!               f64 pipeline_seconds (LE bit pattern), u64 body_len,
//!               body_len bytes (GeoJSON on ok, error text on error)
//!   3 SHUTDOWN  empty payload
//!
//! All integers little-endian. A worker answers each TASK with exactly
//! one RESULT for the same entry_index, in order, and exits its
//! connection loop on SHUTDOWN or EOF.

use crate::pipeline::PipelineConfig;
use crate::raster::ImageFormat;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{self, Read, Write};

pub const MSG_TASK: u8 = 1;
pub const MSG_RESULT: u8 = 2;
pub const MSG_SHUTDOWN: u8 = 3;

/// Frames above this are rejected before allocation; no legitimate
/// task ships a gigabyte image.
const MAX_FRAME_LEN: u32 = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskMessage {
    pub entry_index: u32,
    pub format: ImageFormat,
    pub cfg: PipelineConfig,
    pub image: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultMessage {
    pub entry_index: u32,
    pub status: ResultStatus,
    pub pipeline_seconds: f64,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Task(TaskMessage),
    Result(ResultMessage),
    Shutdown,
}

/// Parse failure for one frame. `entry_hint` is recovered from the
/// first bytes of a broken TASK when possible, so the peer can still be
/// told which entry died.
#[derive(Debug)]
pub struct ProtocolError {
    pub detail: String,
    pub entry_hint: Option<u32>,
}

impl std::fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "malformed frame: {}", self.detail)
    }
}

impl std::error::Error for ProtocolError {}

/// Read one raw frame. Ok(None) means the peer closed cleanly between
/// frames; EOF inside a frame is an error.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len_buf = [0u8; 4];
    match r.read(&mut len_buf[..1])? {
        0 => return Ok(None),
        _ => r.read_exact(&mut len_buf[1..])?,
    }
    let len = u32::from_le_bytes(len_buf);
    if len == 0 || len > MAX_FRAME_LEN {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame length {len} out of range"),
        ));
    }
    let mut frame = vec![0u8; len as usize];
    r.read_exact(&mut frame)?;
    Ok(Some(frame))
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    let mut body = Vec::new();
    match msg {
        Message::Task(t) => {
            body.push(MSG_TASK);
            body.write_u32::<LittleEndian>(t.entry_index)?;
            body.write_u16::<LittleEndian>(t.format.code())?;
            let cfg_json = serde_json::to_vec(&t.cfg).expect("config serializes");
            body.write_u32::<LittleEndian>(cfg_json.len() as u32)?;
            body.extend_from_slice(&cfg_json);
            body.write_u64::<LittleEndian>(t.image.len() as u64)?;
            body.extend_from_slice(&t.image);
        }
        Message::Result(res) => {
            body.push(MSG_RESULT);
            body.write_u32::<LittleEndian>(res.entry_index)?;
            body.push(match res.status {
                ResultStatus::Ok => 0,
                ResultStatus::Error => 1,
            });
            body.write_f64::<LittleEndian>(res.pipeline_seconds)?;
            body.write_u64::<LittleEndian>(res.body.len() as u64)?;
            body.extend_from_slice(&res.body);
        }
        Message::Shutdown => body.push(MSG_SHUTDOWN),
    }
    w.write_u32::<LittleEndian>(body.len() as u32)?;
    w.write_all(&body)?;
    w.flush()
}

pub fn parse_message(frame: &[u8]) -> Result<Message, ProtocolError> {
    let fail = |detail: String, hint: Option<u32>| ProtocolError { detail, entry_hint: hint };
    let Some((&msg_type, rest)) = frame.split_first() else {
        return Err(fail("empty frame".into(), None));
    };
    match msg_type {
        MSG_TASK => {
            // Pull the entry index first so later failures can echo it.
            let mut cur = rest;
            let entry_index = cur
                .read_u32::<LittleEndian>()
                .map_err(|_| fail("task frame shorter than entry index".into(), None))?;
            let hint = Some(entry_index);
            let code = cur
                .read_u16::<LittleEndian>()
                .map_err(|_| fail("task frame truncated at format code".into(), hint))?;
            let format = ImageFormat::from_code(code)
                .ok_or_else(|| fail(format!("unknown format code {code}"), hint))?;
            let cfg_len = cur
                .read_u32::<LittleEndian>()
                .map_err(|_| fail("task frame truncated at config length".into(), hint))?
                as usize;
            if cur.len() < cfg_len {
                return Err(fail("config bytes truncated".into(), hint));
            }
            let (cfg_bytes, mut cur) = cur.split_at(cfg_len);
            let cfg: PipelineConfig = serde_json::from_slice(cfg_bytes)
                .map_err(|e| fail(format!("bad config json: {e}"), hint))?;
            let image_len = cur
                .read_u64::<LittleEndian>()
                .map_err(|_| fail("task frame truncated at image length".into(), hint))?;
            if cur.len() as u64 != image_len {
                return Err(fail(
                    format!("image declares {image_len} bytes, frame carries {}", cur.len()),
                    hint,
                ));
            }
            Ok(Message::Task(TaskMessage { entry_index, format, cfg, image: cur.to_vec() }))
        }
        MSG_RESULT => {
            let mut cur = rest;
            let entry_index = cur
                .read_u32::<LittleEndian>()
                .map_err(|_| fail("result frame shorter than entry index".into(), None))?;
            let status = match cur.read_u8() {
                Ok(0) => ResultStatus::Ok,
                Ok(1) => ResultStatus::Error,
                Ok(other) => return Err(fail(format!("unknown result status {other}"), None)),
                Err(_) => return Err(fail("result frame truncated at status".into(), None)),
            };
            let pipeline_seconds = cur
                .read_f64::<LittleEndian>()
                .map_err(|_| fail("result frame truncated at seconds".into(), None))?;
            let body_len = cur
                .read_u64::<LittleEndian>()
                .map_err(|_| fail("result frame truncated at body length".into(), None))?;
            if cur.len() as u64 != body_len {
                return Err(fail(
                    format!("body declares {body_len} bytes, frame carries {}", cur.len()),
                    None,
                ));
            }
            Ok(Message::Result(ResultMessage {
                entry_index,
                status,
                pipeline_seconds,
                body: cur.to_vec(),
            }))
        }
        MSG_SHUTDOWN => {
            if rest.is_empty() {
                Ok(Message::Shutdown)
            } else {
                Err(fail("shutdown frame carries payload".into(), None))
            }
        }
        other => Err(fail(format!("unknown message type {other}"), None)),
    }
}

/// Convenience wrapper: one frame in, one parsed message out.
pub fn read_message<R: Read>(r: &mut R) -> io::Result<Option<Result<Message, ProtocolError>>> {
    Ok(read_frame(r)?.map(|frame| parse_message(&frame)))
}

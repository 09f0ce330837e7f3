//! Packed multi-image container ("SVB1").
//!
//! One file holds many encoded images plus a fixed-size index, so entries
//! can be assigned to workers by offset without decoding anything, and
//! culling can filter on header fields alone. Payload bytes are stored
//! verbatim; width and height are decoded once at create time and frozen
//! into the entry header.
//!
//! File layout, all integers little-endian:
//!   bytes 0..4   magic "SVB1"
//!   bytes 4..8   u32 entry_count
//!   bytes 8..    index: entry_count x (u64 offset_from_file_start, u64 record_length)
//!   each record  u16 format_code, u32 width, u32 height,
//!                u16 name_len, name bytes (UTF-8),
//!                u64 payload_len, payload bytes
//! The file ends exactly at the last record; trailing bytes are rejected,
//! so concatenating two bundles is not a valid bundle.

use std::collections::BTreeSet;
use std::io::Read;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::raster::{decode_image, sniff_format, ImageFormat, RasterError};

pub const MAGIC: &[u8; 4] = b"SVB1";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bad magic bytes (not a bundle file)")]
    BadMagic,
    #[error("bundle file truncated: {0}")]
    TruncatedFile(String),
    #[error("bundle has {extra} trailing bytes after the last record")]
    TrailingBytes { extra: u64 },
    #[error("entry index {index} out of range (bundle has {count} entries)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("input '{name}' rejected: {source}")]
    BadInput { name: String, source: RasterError },
    #[error("malformed bundle: {0}")]
    Malformed(String),
}

/// Per-entry metadata, decoded once at create time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleEntryHeader {
    pub format: ImageFormat,
    pub width: u32,
    pub height: u32,
    pub name: String,
    pub payload_len: u64,
}

impl BundleEntryHeader {
    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// An opened bundle: the raw file plus its parsed index and headers.
#[derive(Debug, Clone)]
pub struct ImageBundle {
    bytes: Vec<u8>,
    index: Vec<(u64, u64)>,
    headers: Vec<BundleEntryHeader>,
    payload_ranges: Vec<(usize, usize)>,
}

impl ImageBundle {
    pub fn entry_count(&self) -> usize {
        self.headers.len()
    }

    /// (offset, record_length) pairs as stored in the file.
    pub fn index(&self) -> &[(u64, u64)] {
        &self.index
    }

    pub fn headers(&self) -> &[BundleEntryHeader] {
        &self.headers
    }
}

/// Filter over entry headers; absent fields pass everything, present
/// fields must all hold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CullPredicate {
    pub min_width: Option<u32>,
    pub min_height: Option<u32>,
    pub min_pixel_count: Option<u64>,
    pub max_pixel_count: Option<u64>,
    pub allowed_formats: Option<BTreeSet<ImageFormat>>,
}

impl CullPredicate {
    pub fn matches(&self, header: &BundleEntryHeader) -> bool {
        if let Some(w) = self.min_width {
            if header.width < w {
                return false;
            }
        }
        if let Some(h) = self.min_height {
            if header.height < h {
                return false;
            }
        }
        if let Some(n) = self.min_pixel_count {
            if header.pixel_count() < n {
                return false;
            }
        }
        if let Some(n) = self.max_pixel_count {
            if header.pixel_count() > n {
                return false;
            }
        }
        if let Some(formats) = &self.allowed_formats {
            if !formats.contains(&header.format) {
                return false;
            }
        }
        true
    }

    /// Conjunction: the result matches exactly the headers both inputs
    /// match.
    pub fn and(&self, other: &CullPredicate) -> CullPredicate {
        fn max_opt<T: Ord + Copy>(a: Option<T>, b: Option<T>) -> Option<T> {
            match (a, b) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (x, None) | (None, x) => x,
            }
        }
        fn min_opt<T: Ord + Copy>(a: Option<T>, b: Option<T>) -> Option<T> {
            match (a, b) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (x, None) | (None, x) => x,
            }
        }
        let allowed_formats = match (&self.allowed_formats, &other.allowed_formats) {
            (Some(a), Some(b)) => Some(a.intersection(b).copied().collect()),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        CullPredicate {
            min_width: max_opt(self.min_width, other.min_width),
            min_height: max_opt(self.min_height, other.min_height),
            min_pixel_count: max_opt(self.min_pixel_count, other.min_pixel_count),
            max_pixel_count: min_opt(self.max_pixel_count, other.max_pixel_count),
            allowed_formats,
        }
    }
}

/// Pack named image streams into a bundle, in input order. Every input is
/// sniffed and fully decoded so the stored width/height are trustworthy;
/// a bad input is reported with its name.
pub fn bundle_create(inputs: &[(String, Vec<u8>)]) -> Result<Vec<u8>, BundleError> {
    let mut records: Vec<Vec<u8>> = Vec::with_capacity(inputs.len());
    for (name, bytes) in inputs {
        let bad = |source: RasterError| BundleError::BadInput { name: name.clone(), source };
        let format = sniff_format(bytes).ok_or_else(|| bad(RasterError::UnsupportedFormat))?;
        let decoded = decode_image(bytes, Some(format)).map_err(bad)?;
        let name_bytes = name.as_bytes();
        if name_bytes.len() > u16::MAX as usize {
            return Err(BundleError::Malformed(format!(
                "entry name '{}...' exceeds {} bytes",
                &name[..32.min(name.len())],
                u16::MAX
            )));
        }
        let mut record = Vec::with_capacity(20 + name_bytes.len() + bytes.len());
        record.write_u16::<LittleEndian>(format.code()).unwrap();
        record.write_u32::<LittleEndian>(decoded.width()).unwrap();
        record.write_u32::<LittleEndian>(decoded.height()).unwrap();
        record.write_u16::<LittleEndian>(name_bytes.len() as u16).unwrap();
        record.extend_from_slice(name_bytes);
        record.write_u64::<LittleEndian>(bytes.len() as u64).unwrap();
        record.extend_from_slice(bytes);
        records.push(record);
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(records.len() as u32).unwrap();
    let mut offset = 8u64 + 16 * records.len() as u64;
    for record in &records {
        out.write_u64::<LittleEndian>(offset).unwrap();
        out.write_u64::<LittleEndian>(record.len() as u64).unwrap();
        offset += record.len() as u64;
    }
    for record in &records {
        out.extend_from_slice(record);
    }
    Ok(out)
}

/// Parse and validate a bundle file. All headers are decoded eagerly so
/// culling never touches payloads.
pub fn bundle_open(bytes: Vec<u8>) -> Result<ImageBundle, BundleError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(BundleError::BadMagic);
    }
    let mut cursor = &bytes[4..];
    let entry_count = cursor
        .read_u32::<LittleEndian>()
        .map_err(|_| BundleError::TruncatedFile("missing entry count".into()))? as usize;
    let mut index = Vec::with_capacity(entry_count);
    for i in 0..entry_count {
        let offset = cursor
            .read_u64::<LittleEndian>()
            .map_err(|_| BundleError::TruncatedFile(format!("index entry {i}")))?;
        let length = cursor
            .read_u64::<LittleEndian>()
            .map_err(|_| BundleError::TruncatedFile(format!("index entry {i}")))?;
        index.push((offset, length));
    }

    let header_size = 8 + 16 * entry_count as u64;
    let file_len = bytes.len() as u64;
    let mut expected_end = header_size;
    for (i, &(offset, length)) in index.iter().enumerate() {
        if i == 0 && offset < header_size {
            return Err(BundleError::Malformed(format!(
                "record 0 offset {offset} overlaps the index"
            )));
        }
        if i > 0 && offset <= index[i - 1].0 {
            return Err(BundleError::Malformed(format!(
                "index offsets not strictly increasing at entry {i}"
            )));
        }
        let end = offset
            .checked_add(length)
            .ok_or_else(|| BundleError::Malformed(format!("entry {i} region overflows")))?;
        if end > file_len {
            return Err(BundleError::TruncatedFile(format!(
                "entry {i} region ends at {end} but file has {file_len} bytes"
            )));
        }
        expected_end = expected_end.max(end);
    }
    if file_len > expected_end {
        return Err(BundleError::TrailingBytes { extra: file_len - expected_end });
    }

    let mut headers = Vec::with_capacity(entry_count);
    let mut payload_ranges = Vec::with_capacity(entry_count);
    for (i, &(offset, length)) in index.iter().enumerate() {
        let record = &bytes[offset as usize..(offset + length) as usize];
        let (header, payload_start) = parse_record(record, i)?;
        let start = offset as usize + payload_start;
        payload_ranges.push((start, start + header.payload_len as usize));
        headers.push(header);
    }
    Ok(ImageBundle { bytes, index, headers, payload_ranges })
}

fn parse_record(record: &[u8], i: usize) -> Result<(BundleEntryHeader, usize), BundleError> {
    let mut cursor = record;
    let truncated = |what: &str| BundleError::TruncatedFile(format!("entry {i} {what}"));
    let code = cursor.read_u16::<LittleEndian>().map_err(|_| truncated("format code"))?;
    let format = ImageFormat::from_code(code)
        .ok_or_else(|| BundleError::Malformed(format!("entry {i} has unknown format code {code}")))?;
    let width = cursor.read_u32::<LittleEndian>().map_err(|_| truncated("width"))?;
    let height = cursor.read_u32::<LittleEndian>().map_err(|_| truncated("height"))?;
    let name_len = cursor.read_u16::<LittleEndian>().map_err(|_| truncated("name length"))? as usize;
    let mut name_bytes = vec![0u8; name_len];
    cursor.read_exact(&mut name_bytes).map_err(|_| truncated("name"))?;
    let name = String::from_utf8(name_bytes)
        .map_err(|_| BundleError::Malformed(format!("entry {i} name is not UTF-8")))?;
    let payload_len = cursor.read_u64::<LittleEndian>().map_err(|_| truncated("payload length"))?;
    if cursor.len() as u64 != payload_len {
        return Err(BundleError::Malformed(format!(
            "entry {i} record length disagrees with payload length ({} vs {payload_len})",
            cursor.len()
        )));
    }
    let payload_start = record.len() - cursor.len();
    Ok((BundleEntryHeader { format, width, height, name, payload_len }, payload_start))
}

/// Header and verbatim payload bytes of entry `i`.
pub fn bundle_read_entry(
    bundle: &ImageBundle,
    i: usize,
) -> Result<(&BundleEntryHeader, &[u8]), BundleError> {
    if i >= bundle.entry_count() {
        return Err(BundleError::IndexOutOfRange { index: i, count: bundle.entry_count() });
    }
    let (start, end) = bundle.payload_ranges[i];
    Ok((&bundle.headers[i], &bundle.bytes[start..end]))
}

/// Ascending indices of the entries the predicate accepts.
pub fn cull(bundle: &ImageBundle, predicate: &CullPredicate) -> Vec<usize> {
    bundle
        .headers
        .iter()
        .enumerate()
        .filter(|(_, h)| predicate.matches(h))
        .map(|(i, _)| i)
        .collect()
}

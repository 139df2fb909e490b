//! NRRD reader (attached header, raw or gzip encoding).

use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use neuroseg_core::{Affine, DataType, Volume3D};

use crate::error::{Error, Result};
use crate::nifti::gunzip;

/// Parsed header: fields (`key: value`) and key/value pairs (`key:=value`)
/// in file order, plus the byte offset where data starts.
#[derive(Debug, Clone, PartialEq)]
pub struct NrrdHeader {
    pub version: String,
    pub entries: Vec<(String, String)>,
    pub data_start: usize,
}

impl NrrdHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(b"NRRD000") {
            return Err(Error::format("missing NRRD000x magic"));
        }
        let mut pos = 0;
        let mut lines = Vec::new();
        loop {
            let Some(len) = bytes[pos..].iter().position(|&b| b == b'\n') else {
                return Err(Error::format("NRRD header is not terminated by a blank line"));
            };
            let line = std::str::from_utf8(&bytes[pos..pos + len])
                .map_err(|_| Error::format("NRRD header is not valid UTF-8"))?
                .trim_end_matches('\r')
                .to_string();
            pos += len + 1;
            if line.is_empty() {
                break;
            }
            lines.push(line);
        }
        let version = lines.remove(0);
        let mut entries = Vec::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            let (key, value) = if let Some((k, v)) = line.split_once(":=") {
                (k, v)
            } else if let Some((k, v)) = line.split_once(": ") {
                (k, v)
            } else {
                return Err(Error::format(format!("malformed NRRD header line {line:?}")));
            };
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(NrrdHeader {
            version,
            entries,
            data_start: pos,
        })
    }

    /// Field lookup; NRRD field names are case-insensitive.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::format(format!("NRRD header lacks required field \"{key}\"")))
    }
}

/// NRRD sample type, its byte width, and the dtype tag that holds it exactly.
fn sample_type(name: &str) -> Result<(&'static str, usize, DataType)> {
    Ok(match name {
        "uchar" | "unsigned char" | "uint8" | "uint8_t" => ("u8", 1, DataType::UInt8),
        "signed char" | "int8" | "int8_t" => ("i8", 1, DataType::Int16),
        "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => ("i16", 2, DataType::Int16),
        "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => ("u16", 2, DataType::UInt16),
        "int" | "signed int" | "int32" | "int32_t" => ("i32", 4, DataType::Int32),
        "uint" | "unsigned int" | "uint32" | "uint32_t" => ("u32", 4, DataType::Float64),
        "float" => ("f32", 4, DataType::Float32),
        "double" => ("f64", 8, DataType::Float64),
        other => return Err(Error::format(format!("unsupported NRRD type {other:?}"))),
    })
}

fn decode_samples<E: ByteOrder>(raw: &[u8], kind: &str, width: usize) -> Vec<f64> {
    raw.chunks_exact(width)
        .map(|c| match kind {
            "u8" => c[0] as f64,
            "i8" => c[0] as i8 as f64,
            "i16" => E::read_i16(c) as f64,
            "u16" => E::read_u16(c) as f64,
            "i32" => E::read_i32(c) as f64,
            "u32" => E::read_u32(c) as f64,
            "f32" => E::read_f32(c) as f64,
            _ => E::read_f64(c),
        })
        .collect()
}

fn parse_vector(s: &str) -> Result<Vec<f64>> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::format(format!("expected a (x,y,z) vector, got {s:?}")))?;
    inner
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::format(format!("bad number in vector {s:?}"))))
        .collect()
}

/// Splits `space directions` into per-axis entries (`none` or a vector).
fn split_vectors(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Sign flips taking the declared world space to RAS.
fn to_ras(space: Option<&str>) -> [f64; 3] {
    match space.map(|s| s.to_ascii_lowercase()) {
        Some(s) if s == "left-posterior-superior" || s == "lps" => [-1.0, -1.0, 1.0],
        Some(s) if s == "left-anterior-superior" || s == "las" => [-1.0, 1.0, 1.0],
        _ => [1.0, 1.0, 1.0],
    }
}

pub fn decode(bytes: &[u8]) -> Result<Volume3D> {
    let h = NrrdHeader::parse(bytes)?;
    let (kind, width, dtype) = sample_type(h.require("type")?)?;
    let dimension: usize = h
        .require("dimension")?
        .parse()
        .map_err(|_| Error::format("NRRD dimension is not an integer"))?;
    let sizes: Vec<usize> = h
        .require("sizes")?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::format(format!("bad NRRD size {t:?}"))))
        .collect::<Result<_>>()?;
    let encoding = h.require("encoding")?.to_ascii_lowercase();
    if sizes.len() != dimension || !(1..=4).contains(&dimension) || sizes.contains(&0) {
        return Err(Error::format(format!("NRRD dimension {dimension} with sizes {sizes:?} is not a 1–4D grid")));
    }
    if h.get("data file").or(h.get("datafile")).is_some() {
        return Err(Error::format("detached NRRD data files are not supported"));
    }

    // A 4D image may carry its non-spatial axis first (e.g. "list domain
    // domain domain"); it is moved last so frames are contiguous.
    let kinds: Vec<String> = h
        .get("kinds")
        .map(|k| k.split_whitespace().map(str::to_ascii_lowercase).collect())
        .unwrap_or_default();
    let spatial = |k: &str| k == "domain" || k == "space";
    let frame_first = dimension == 4 && kinds.len() == 4 && !spatial(&kinds[0]) && kinds[1..].iter().all(|k| spatial(k));
    let spatial_axes: Vec<usize> = if frame_first { vec![1, 2, 3] } else { (0..dimension.min(3)).collect() };
    let mut dims = [1usize; 3];
    for (a, &ax) in spatial_axes.iter().enumerate() {
        dims[a] = sizes[ax];
    }
    let nt = (dimension == 4).then(|| sizes[if frame_first { 0 } else { 3 }]);

    let payload = &bytes[h.data_start..];
    let payload = match encoding.as_str() {
        "raw" => {
            let skip: i64 = h.get("byte skip").map_or(Ok(0), |s| s.parse()).map_err(|_| Error::format("bad byte skip"))?;
            let count = sizes.iter().product::<usize>() * width;
            if skip == -1 {
                &payload[payload.len().saturating_sub(count)..]
            } else {
                &payload[(skip.max(0) as usize).min(payload.len())..]
            }
        }
        _ => payload,
    };
    let owned;
    let raw: &[u8] = match encoding.as_str() {
        "raw" => payload,
        "gzip" | "gz" => {
            owned = gunzip(payload)?;
            &owned
        }
        other => return Err(Error::UnsupportedEncoding(other.to_string())),
    };
    let count: usize = sizes.iter().product();
    if raw.len() < count * width {
        return Err(Error::Truncated {
            expected: count * width,
            actual: raw.len(),
        });
    }
    let raw = &raw[..count * width];
    let big = match h.get("endian") {
        Some(e) if e.eq_ignore_ascii_case("big") => true,
        Some(e) if e.eq_ignore_ascii_case("little") => false,
        Some(e) => return Err(Error::format(format!("bad endian value {e:?}"))),
        None if width > 1 => return Err(Error::format("NRRD header lacks required field \"endian\"")),
        None => false,
    };
    let mut data = if big {
        decode_samples::<BigEndian>(raw, kind, width)
    } else {
        decode_samples::<LittleEndian>(raw, kind, width)
    };
    if frame_first {
        let (frames, per) = (sizes[0], count / sizes[0]);
        let mut moved = vec![0.0; count];
        for (i, v) in data.iter().enumerate() {
            moved[(i % frames) * per + i / frames] = *v;
        }
        data = moved;
    }

    let (spacing, affine) = geometry(&h, dimension, &spatial_axes)?;
    let vol = Volume3D::with_frames(dims, nt, spacing, affine, data)?
        .with_dtype(dtype)
        .with_metadata(h.entries.clone());
    Ok(vol)
}

fn geometry(h: &NrrdHeader, dimension: usize, spatial_axes: &[usize]) -> Result<([f64; 3], Affine)> {
    if let Some(dirs) = h.get("space directions") {
        let entries = split_vectors(dirs);
        if entries.len() != dimension {
            return Err(Error::format(format!(
                "space directions lists {} axes for dimension {dimension}",
                entries.len()
            )));
        }
        let flip = to_ras(h.get("space"));
        let mut rows = [[0.0f64; 4]; 3];
        let mut spacing = [1.0f64; 3];
        for (a, &ax) in spatial_axes.iter().enumerate() {
            let v = parse_vector(&entries[ax])?;
            if v.len() != 3 {
                return Err(Error::format("only 3D world spaces are supported"));
            }
            for r in 0..3 {
                rows[r][a] = v[r] * flip[r];
            }
            spacing[a] = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        }
        for a in spatial_axes.len()..3 {
            rows[a][a] = 1.0;
        }
        if let Some(origin) = h.get("space origin") {
            let o = parse_vector(origin)?;
            if o.len() != 3 {
                return Err(Error::format("space origin must have 3 components"));
            }
            for r in 0..3 {
                rows[r][3] = o[r] * flip[r];
            }
        }
        return Ok((spacing, Affine::from_rows(rows)));
    }
    if let Some(sp) = h.get("spacings") {
        let values: Vec<f64> = sp
            .split_whitespace()
            .map(|t| if t.eq_ignore_ascii_case("nan") { Ok(1.0) } else { t.parse::<f64>() })
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(format!("bad spacings {sp:?}")))?;
        let mut spacing = [1.0; 3];
        for (a, &ax) in spatial_axes.iter().enumerate() {
            if let Some(&s) = values.get(ax) {
                spacing[a] = s.abs();
            }
        }
        return Ok((spacing, Affine::from_spacing(spacing)));
    }
    Ok(([1.0; 3], Affine::identity()))
}

pub fn read_nrrd(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

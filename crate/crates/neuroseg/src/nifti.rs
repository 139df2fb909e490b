//! NIfTI-1 single-file codec (`.nii`, `.nii.gz`).

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::MultiGzDecoder;
use flate2::{Compression, GzBuilder};
use neuroseg_core::{Affine, DataType, Volume3D};

use crate::error::{Error, Result};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DATA_OFFSET: usize = 352;
pub const MAGIC_SINGLE: [u8; 4] = *b"n+1\0";
pub const MAGIC_PAIR: [u8; 4] = *b"ni1\0";

#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub sizeof_hdr: i32,
    pub data_type: [u8; 10],
    pub db_name: [u8; 18],
    pub extents: i32,
    pub session_error: i16,
    pub regular: u8,
    pub dim_info: u8,
    pub dim: [i16; 8],
    pub intent_p1: f32,
    pub intent_p2: f32,
    pub intent_p3: f32,
    pub intent_code: i16,
    pub datatype: i16,
    pub bitpix: i16,
    pub slice_start: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub slice_end: i16,
    pub slice_code: u8,
    pub xyzt_units: u8,
    pub cal_max: f32,
    pub cal_min: f32,
    pub slice_duration: f32,
    pub toffset: f32,
    pub glmax: i32,
    pub glmin: i32,
    pub descrip: [u8; 80],
    pub aux_file: [u8; 24],
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern_b: f32,
    pub quatern_c: f32,
    pub quatern_d: f32,
    pub qoffset_x: f32,
    pub qoffset_y: f32,
    pub qoffset_z: f32,
    pub srow_x: [f32; 4],
    pub srow_y: [f32; 4],
    pub srow_z: [f32; 4],
    pub intent_name: [u8; 16],
    pub magic: [u8; 4],
}

fn text(bytes: &[u8]) -> String {
    let end = bytes.iter().position(|&b| b == 0).unwrap_or(bytes.len());
    String::from_utf8_lossy(&bytes[..end]).into_owned()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

struct Cursor<'a, E> {
    bytes: &'a [u8],
    pos: usize,
    _order: std::marker::PhantomData<E>,
}

impl<'a, E: ByteOrder> Cursor<'a, E> {
    fn take(&mut self, n: usize) -> &'a [u8] {
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        out
    }
    fn u8(&mut self) -> u8 {
        self.take(1)[0]
    }
    fn i16(&mut self) -> i16 {
        E::read_i16(self.take(2))
    }
    fn i32(&mut self) -> i32 {
        E::read_i32(self.take(4))
    }
    fn f32(&mut self) -> f32 {
        E::read_f32(self.take(4))
    }
    fn arr<const N: usize>(&mut self) -> [u8; N] {
        self.take(N).try_into().unwrap()
    }
    fn i16s<const N: usize>(&mut self) -> [i16; N] {
        std::array::from_fn(|_| self.i16())
    }
    fn f32s<const N: usize>(&mut self) -> [f32; N] {
        std::array::from_fn(|_| self.f32())
    }
}

impl NiftiHeader {
    /// Parses the first 348 bytes, detecting byte order from `sizeof_hdr`.
    /// Returns the header and whether the file is big-endian.
    pub fn parse(bytes: &[u8]) -> Result<(Self, bool)> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::Truncated {
                expected: HEADER_SIZE,
                actual: bytes.len(),
            });
        }
        if LittleEndian::read_i32(bytes) == HEADER_SIZE as i32 {
            Ok((Self::parse_with::<LittleEndian>(bytes), false))
        } else if BigEndian::read_i32(bytes) == HEADER_SIZE as i32 {
            Ok((Self::parse_with::<BigEndian>(bytes), true))
        } else {
            Err(Error::format("sizeof_hdr is not 348 in either byte order; not a NIfTI-1 file"))
        }
    }

    fn parse_with<E: ByteOrder>(bytes: &[u8]) -> Self {
        let mut c = Cursor::<E> {
            bytes,
            pos: 0,
            _order: std::marker::PhantomData,
        };
        NiftiHeader {
            sizeof_hdr: c.i32(),
            data_type: c.arr(),
            db_name: c.arr(),
            extents: c.i32(),
            session_error: c.i16(),
            regular: c.u8(),
            dim_info: c.u8(),
            dim: c.i16s(),
            intent_p1: c.f32(),
            intent_p2: c.f32(),
            intent_p3: c.f32(),
            intent_code: c.i16(),
            datatype: c.i16(),
            bitpix: c.i16(),
            slice_start: c.i16(),
            pixdim: c.f32s(),
            vox_offset: c.f32(),
            scl_slope: c.f32(),
            scl_inter: c.f32(),
            slice_end: c.i16(),
            slice_code: c.u8(),
            xyzt_units: c.u8(),
            cal_max: c.f32(),
            cal_min: c.f32(),
            slice_duration: c.f32(),
            toffset: c.f32(),
            glmax: c.i32(),
            glmin: c.i32(),
            descrip: c.arr(),
            aux_file: c.arr(),
            qform_code: c.i16(),
            sform_code: c.i16(),
            quatern_b: c.f32(),
            quatern_c: c.f32(),
            quatern_d: c.f32(),
            qoffset_x: c.f32(),
            qoffset_y: c.f32(),
            qoffset_z: c.f32(),
            srow_x: c.f32s(),
            srow_y: c.f32s(),
            srow_z: c.f32s(),
            intent_name: c.arr(),
            magic: c.arr(),
        }
    }

    /// Little-endian serialization.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_bytes_with::<LittleEndian>()
    }

    pub fn to_bytes_with<E: ByteOrder>(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_SIZE);
        let i16s = |b: &mut Vec<u8>, v: &[i16]| {
            for &x in v {
                let mut w = [0; 2];
                E::write_i16(&mut w, x);
                b.extend_from_slice(&w);
            }
        };
        let i32s = |b: &mut Vec<u8>, v: &[i32]| {
            for &x in v {
                let mut w = [0; 4];
                E::write_i32(&mut w, x);
                b.extend_from_slice(&w);
            }
        };
        let f32s = |b: &mut Vec<u8>, v: &[f32]| {
            for &x in v {
                let mut w = [0; 4];
                E::write_f32(&mut w, x);
                b.extend_from_slice(&w);
            }
        };
        i32s(&mut b, &[self.sizeof_hdr]);
        b.extend_from_slice(&self.data_type);
        b.extend_from_slice(&self.db_name);
        i32s(&mut b, &[self.extents]);
        i16s(&mut b, &[self.session_error]);
        b.push(self.regular);
        b.push(self.dim_info);
        i16s(&mut b, &self.dim);
        f32s(&mut b, &[self.intent_p1, self.intent_p2, self.intent_p3]);
        i16s(&mut b, &[self.intent_code, self.datatype, self.bitpix, self.slice_start]);
        f32s(&mut b, &self.pixdim);
        f32s(&mut b, &[self.vox_offset, self.scl_slope, self.scl_inter]);
        i16s(&mut b, &[self.slice_end]);
        b.push(self.slice_code);
        b.push(self.xyzt_units);
        f32s(&mut b, &[self.cal_max, self.cal_min, self.slice_duration, self.toffset]);
        i32s(&mut b, &[self.glmax, self.glmin]);
        b.extend_from_slice(&self.descrip);
        b.extend_from_slice(&self.aux_file);
        i16s(&mut b, &[self.qform_code, self.sform_code]);
        f32s(
            &mut b,
            &[
                self.quatern_b,
                self.quatern_c,
                self.quatern_d,
                self.qoffset_x,
                self.qoffset_y,
                self.qoffset_z,
            ],
        );
        f32s(&mut b, &self.srow_x);
        f32s(&mut b, &self.srow_y);
        f32s(&mut b, &self.srow_z);
        b.extend_from_slice(&self.intent_name);
        b.extend_from_slice(&self.magic);
        debug_assert_eq!(b.len(), HEADER_SIZE);
        b
    }

    /// Canonical header for writing `vol`: sform from the affine, zeroed
    /// qform, unit scaling, data at offset 352.
    pub fn for_volume(vol: &Volume3D) -> Self {
        let dims = vol.dims();
        let mut dim = [1i16; 8];
        dim[0] = if vol.nt().is_some() { 4 } else { 3 };
        for a in 0..3 {
            dim[a + 1] = dims[a] as i16;
        }
        dim[4] = vol.frames() as i16;
        let sp = vol.spacing();
        let mut pixdim = [0f32; 8];
        pixdim[0] = 1.0;
        for a in 0..3 {
            pixdim[a + 1] = sp[a] as f32;
        }
        pixdim[4] = 1.0;
        let mut descrip = [0u8; 80];
        if let Some(d) = vol.meta("descrip") {
            let n = d.len().min(79);
            descrip[..n].copy_from_slice(&d.as_bytes()[..n]);
        }
        let rows = vol.affine().rows();
        let row = |r: usize| rows[r].map(|v| v as f32);
        let dtype = vol.dtype();
        NiftiHeader {
            sizeof_hdr: HEADER_SIZE as i32,
            data_type: [0; 10],
            db_name: [0; 18],
            extents: 0,
            session_error: 0,
            regular: 0,
            dim_info: 0,
            dim,
            intent_p1: 0.0,
            intent_p2: 0.0,
            intent_p3: 0.0,
            intent_code: 0,
            datatype: dtype.nifti_code(),
            bitpix: dtype.bitpix(),
            slice_start: 0,
            pixdim,
            vox_offset: DATA_OFFSET as f32,
            scl_slope: 1.0,
            scl_inter: 0.0,
            slice_end: 0,
            slice_code: 0,
            xyzt_units: 2,
            cal_max: 0.0,
            cal_min: 0.0,
            slice_duration: 0.0,
            toffset: 0.0,
            glmax: 0,
            glmin: 0,
            descrip,
            aux_file: [0; 24],
            qform_code: 0,
            sform_code: 1,
            quatern_b: 0.0,
            quatern_c: 0.0,
            quatern_d: 0.0,
            qoffset_x: 0.0,
            qoffset_y: 0.0,
            qoffset_z: 0.0,
            srow_x: row(0),
            srow_y: row(1),
            srow_z: row(2),
            intent_name: [0; 16],
            magic: MAGIC_SINGLE,
        }
    }

    pub fn descrip(&self) -> String {
        text(&self.descrip)
    }

    /// Voxel spacing from pixdim; zero or invalid entries fall back to 1.
    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|a| {
            let s = (self.pixdim[a + 1] as f64).abs();
            if s.is_finite() && s > 0.0 {
                s
            } else {
                1.0
            }
        })
    }

    /// sform if set, else qform, else a diagonal from pixdim.
    pub fn affine(&self) -> Affine {
        if self.sform_code > 0 {
            let r = |row: [f32; 4]| row.map(|v| v as f64);
            return Affine::from_rows([r(self.srow_x), r(self.srow_y), r(self.srow_z)]);
        }
        let sp = self.spacing();
        if self.qform_code > 0 {
            let (b, c, d) = (self.quatern_b as f64, self.quatern_c as f64, self.quatern_d as f64);
            let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
            let rot = [
                [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
                [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
                [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
            ];
            let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
            let scale = [sp[0], sp[1], sp[2] * qfac];
            let offset = [self.qoffset_x, self.qoffset_y, self.qoffset_z].map(|v| v as f64);
            let rows: [[f64; 4]; 3] =
                std::array::from_fn(|r| [rot[r][0] * scale[0], rot[r][1] * scale[1], rot[r][2] * scale[2], offset[r]]);
            return Affine::from_rows(rows);
        }
        Affine::from_spacing(sp)
    }

    /// Every header field as text, in on-disk order.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| m.push((k.to_string(), v));
        put("sizeof_hdr", self.sizeof_hdr.to_string());
        put("data_type", text(&self.data_type));
        put("db_name", text(&self.db_name));
        put("extents", self.extents.to_string());
        put("session_error", self.session_error.to_string());
        put("regular", self.regular.to_string());
        put("dim_info", self.dim_info.to_string());
        put("dim", join(&self.dim));
        put("intent_p1", self.intent_p1.to_string());
        put("intent_p2", self.intent_p2.to_string());
        put("intent_p3", self.intent_p3.to_string());
        put("intent_code", self.intent_code.to_string());
        put("datatype", self.datatype.to_string());
        put("bitpix", self.bitpix.to_string());
        put("slice_start", self.slice_start.to_string());
        put("pixdim", join(&self.pixdim));
        put("vox_offset", self.vox_offset.to_string());
        put("scl_slope", self.scl_slope.to_string());
        put("scl_inter", self.scl_inter.to_string());
        put("slice_end", self.slice_end.to_string());
        put("slice_code", self.slice_code.to_string());
        put("xyzt_units", self.xyzt_units.to_string());
        put("cal_max", self.cal_max.to_string());
        put("cal_min", self.cal_min.to_string());
        put("slice_duration", self.slice_duration.to_string());
        put("toffset", self.toffset.to_string());
        put("glmax", self.glmax.to_string());
        put("glmin", self.glmin.to_string());
        put("descrip", self.descrip());
        put("aux_file", text(&self.aux_file));
        put("qform_code", self.qform_code.to_string());
        put("sform_code", self.sform_code.to_string());
        put("quatern_b", self.quatern_b.to_string());
        put("quatern_c", self.quatern_c.to_string());
        put("quatern_d", self.quatern_d.to_string());
        put("qoffset_x", self.qoffset_x.to_string());
        put("qoffset_y", self.qoffset_y.to_string());
        put("qoffset_z", self.qoffset_z.to_string());
        put("srow_x", join(&self.srow_x));
        put("srow_y", join(&self.srow_y));
        put("srow_z", join(&self.srow_z));
        put("intent_name", text(&self.intent_name));
        put("magic", text(&self.magic));
        m
    }

    fn check_magic(&self) -> Result<()> {
        match self.magic {
            MAGIC_SINGLE => Ok(()),
            MAGIC_PAIR => Err(Error::format(
                "detached NIfTI (.hdr/.img pair) is not supported; convert to a single .nii file",
            )),
            other => Err(Error::format(format!("bad NIfTI magic {:?}", String::from_utf8_lossy(&other)))),
        }
    }

    /// `(dims, nt)` from `dim[]`.
    pub fn shape(&self) -> Result<([usize; 3], Option<usize>)> {
        let nd = self.dim[0];
        if !(1..=7).contains(&nd) {
            return Err(Error::format(format!("dim[0] = {nd} outside [1, 7]")));
        }
        let nd = nd as usize;
        let get = |i: usize| -> Result<usize> {
            if i > nd {
                return Ok(1);
            }
            match self.dim[i] {
                d if d >= 1 => Ok(d as usize),
                d => Err(Error::format(format!("dim[{i}] = {d} must be positive"))),
            }
        };
        let dims = [get(1)?, get(2)?, get(3)?];
        for i in 5..=nd {
            if get(i)? != 1 {
                return Err(Error::format(format!("{nd}-dimensional NIfTI with dim[{i}] > 1 is not supported")));
            }
        }
        let nt = if nd >= 4 { Some(get(4)?) } else { None };
        Ok((dims, nt))
    }
}

pub fn is_gzip(bytes: &[u8]) -> bool {
    bytes.starts_with(&[0x1f, 0x8b])
}

pub fn gunzip(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    MultiGzDecoder::new(bytes)
        .read_to_end(&mut out)
        .map_err(|e| Error::format(format!("gzip stream: {e}")))?;
    Ok(out)
}

/// Deterministic gzip (no name, zero mtime).
pub fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut enc = GzBuilder::new().write(Vec::new(), Compression::default());
    enc.write_all(bytes).expect("writing to memory");
    enc.finish().expect("writing to memory")
}

fn decode_samples<E: ByteOrder>(raw: &[u8], dtype: DataType) -> Vec<f64> {
    let n = dtype.byte_size();
    let chunks = raw.chunks_exact(n);
    match dtype {
        DataType::UInt8 => raw.iter().map(|&v| v as f64).collect(),
        DataType::Int16 => chunks.map(|c| E::read_i16(c) as f64).collect(),
        DataType::UInt16 => chunks.map(|c| E::read_u16(c) as f64).collect(),
        DataType::Int32 => chunks.map(|c| E::read_i32(c) as f64).collect(),
        DataType::Float32 => chunks.map(|c| E::read_f32(c) as f64).collect(),
        DataType::Float64 => chunks.map(E::read_f64).collect(),
    }
}

/// Rounds to nearest and saturates for integer types; non-finite values
/// become 0 there.
pub(crate) fn encode_samples(data: &[f64], dtype: DataType, out: &mut Vec<u8>) {
    fn int(v: f64, lo: f64, hi: f64) -> f64 {
        if v.is_finite() {
            v.round().clamp(lo, hi)
        } else {
            0.0
        }
    }
    out.reserve(data.len() * dtype.byte_size());
    match dtype {
        DataType::UInt8 => out.extend(data.iter().map(|&v| int(v, 0.0, 255.0) as u8)),
        DataType::Int16 => data
            .iter()
            .for_each(|&v| out.extend_from_slice(&(int(v, i16::MIN as f64, i16::MAX as f64) as i16).to_le_bytes())),
        DataType::UInt16 => data
            .iter()
            .for_each(|&v| out.extend_from_slice(&(int(v, 0.0, u16::MAX as f64) as u16).to_le_bytes())),
        DataType::Int32 => data
            .iter()
            .for_each(|&v| out.extend_from_slice(&(int(v, i32::MIN as f64, i32::MAX as f64) as i32).to_le_bytes())),
        DataType::Float32 => data.iter().for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        DataType::Float64 => data.iter().for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
}

/// Decodes a `.nii` or gzipped `.nii.gz` byte stream.
pub fn decode(bytes: &[u8]) -> Result<Volume3D> {
    if is_gzip(bytes) {
        return decode(&gunzip(bytes)?);
    }
    let (h, big_endian) = NiftiHeader::parse(bytes)?;
    h.check_magic()?;
    let dtype = DataType::from_nifti_code(h.datatype).ok_or(Error::UnsupportedDtype(h.datatype))?;
    if h.bitpix != dtype.bitpix() {
        return Err(Error::format(format!(
            "bitpix {} inconsistent with datatype {} ({} bits)",
            h.bitpix,
            dtype.name(),
            dtype.bitpix()
        )));
    }
    let (dims, nt) = h.shape()?;
    let offset = h.vox_offset;
    if !(offset.is_finite() && offset >= HEADER_SIZE as f32) {
        return Err(Error::format(format!("vox_offset {offset} lies inside the header")));
    }
    let offset = offset as usize;
    let count = dims.iter().product::<usize>() * nt.unwrap_or(1);
    let expected = offset + count * dtype.byte_size();
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let raw = &bytes[offset..expected];
    let mut data = if big_endian {
        decode_samples::<BigEndian>(raw, dtype)
    } else {
        decode_samples::<LittleEndian>(raw, dtype)
    };
    let (slope, inter) = (h.scl_slope as f64, h.scl_inter as f64);
    let scaled = slope != 0.0 && slope.is_finite() && inter.is_finite() && (slope != 1.0 || inter != 0.0);
    if scaled {
        data.iter_mut().for_each(|v| *v = *v * slope + inter);
    }
    let vol = Volume3D::with_frames(dims, nt, h.spacing(), h.affine(), data)?
        .with_dtype(if scaled { DataType::Float64 } else { dtype })
        .with_metadata(h.metadata());
    Ok(vol)
}

/// Serializes `vol` as a single-file NIfTI-1 image in its dtype.
pub fn encode(vol: &Volume3D, gz: bool) -> Vec<u8> {
    let mut out = NiftiHeader::for_volume(vol).to_bytes();
    out.extend_from_slice(&[0; DATA_OFFSET - HEADER_SIZE]);
    encode_samples(vol.data(), vol.dtype(), &mut out);
    if gz {
        gzip(&out)
    } else {
        out
    }
}

pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Header of a `.nii`/`.nii.gz` file without decoding its data.
pub fn read_header(path: impl AsRef<Path>) -> Result<NiftiHeader> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if is_gzip(&bytes) { gunzip(&bytes)? } else { bytes };
    Ok(NiftiHeader::parse(&bytes)?.0)
}

pub fn write_nifti(vol: &Volume3D, path: impl AsRef<Path>, gz: bool) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(vol, gz)).map_err(|e| Error::io(path, e))
}

/// Gzip when the file name ends in `.gz`.
pub fn wants_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

//! Format-agnostic volume loading by content sniffing.

use std::path::Path;

use neuroseg_core::Volume3D;

use crate::error::{Error, Result};
use crate::{nifti, nrrd};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Nifti,
    Nrrd,
}

pub fn sniff(bytes: &[u8]) -> Result<Format> {
    if bytes.starts_with(b"NRRD000") {
        return Ok(Format::Nrrd);
    }
    if bytes.len() >= 4 {
        let le = i32::from_le_bytes(bytes[..4].try_into().unwrap());
        let be = i32::from_be_bytes(bytes[..4].try_into().unwrap());
        if le == nifti::HEADER_SIZE as i32 || be == nifti::HEADER_SIZE as i32 {
            return Ok(Format::Nifti);
        }
    }
    Err(Error::format("unrecognized volume format (expected NIfTI-1 or NRRD)"))
}

/// Decodes NIfTI or NRRD bytes, gzipped or not.
pub fn decode_volume(bytes: &[u8]) -> Result<Volume3D> {
    if nifti::is_gzip(bytes) {
        return decode_volume(&nifti::gunzip(bytes)?);
    }
    match sniff(bytes)? {
        Format::Nifti => nifti::decode(bytes),
        Format::Nrrd => nrrd::decode(bytes),
    }
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume3D> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(&bytes)
}

/// Header fields of a NIfTI file, or all key/value pairs of an NRRD file.
pub fn get_metadata(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if nifti::is_gzip(&bytes) { nifti::gunzip(&bytes)? } else { bytes };
    match sniff(&bytes)? {
        Format::Nifti => Ok(nifti::NiftiHeader::parse(&bytes)?.0.metadata()),
        Format::Nrrd => Ok(nrrd::NrrdHeader::parse(&bytes)?.entries),
    }
}

/// Writes NIfTI; gzip follows a `.gz` suffix. Other targets are refused.
pub fn write_volume(vol: &Volume3D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let name = path.file_name().map(|n| n.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
    if !(name.ends_with(".nii") || name.ends_with(".nii.gz")) {
        return Err(Error::format(format!(
            "cannot write {}: output must be .nii or .nii.gz",
            path.display()
        )));
    }
    nifti::write_nifti(vol, path, nifti::wants_gzip(path))
}

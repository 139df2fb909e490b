//! Project archives: a zip holding a JSON manifest, one gzip NIfTI label
//! map per slot and, optionally, the slot volumes themselves.
//!
//! Layout:
//!
//! ```text
//! manifest.json
//! slots/<k>/labels.nii.gz
//! slots/<k>/volume.nii.gz     (embedded volumes only)
//! ```
//!
//! The manifest lists the sha256 of every other member. Volumes that are
//! not embedded are referenced by the sha256 and path of their source file.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use neuroseg_core::enhance::WindowLevel;
use neuroseg_core::measure::MeasurementRecord;
use neuroseg_core::{ColorScheme, LabelMap, Volume3D};
use serde::{Deserialize, Serialize};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::error::{Error, Result};
use crate::nifti;
use crate::session::{sha256_hex, SessionState, SourceRef, ToolSettings, VolumeSlot};
use crate::volume_io;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SaveOptions {
    /// Embed every volume, not only those without a source file.
    pub embed_volumes: bool,
    /// Manifest `saved_at` in Unix seconds; `None` uses the current time.
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotManifest {
    pub dims: [usize; 3],
    pub source: Option<SourceRef>,
    pub embedded: bool,
    pub window: WindowLevel,
    pub color_scheme: ColorScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub saved_at: i64,
    pub settings: ToolSettings,
    pub next_measurement_id: u64,
    pub measurements: Vec<MeasurementRecord>,
    pub slots: Vec<SlotManifest>,
    /// Member name → sha256 of its bytes.
    pub members: BTreeMap<String, String>,
}

pub fn labels_member(k: usize) -> String {
    format!("slots/{k}/labels.nii.gz")
}

pub fn volume_member(k: usize) -> String {
    format!("slots/{k}/volume.nii.gz")
}

fn unix_now() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

/// Serializes a session to archive bytes.
pub fn project_bytes(session: &SessionState, opts: SaveOptions) -> Result<Vec<u8>> {
    let mut members: Vec<(String, Vec<u8>)> = Vec::new();
    let mut slots = Vec::new();
    for (k, slot) in session.slots.iter().enumerate() {
        let labels = slot.labels.to_volume(slot.volume.affine().clone())?;
        members.push((labels_member(k), nifti::encode(&labels, true)));
        let embedded = opts.embed_volumes || slot.source.is_none();
        if embedded {
            members.push((volume_member(k), nifti::encode(&slot.volume, true)));
        }
        slots.push(SlotManifest {
            dims: slot.volume.dims(),
            source: slot.source.clone(),
            embedded,
            window: slot.window,
            color_scheme: slot.scheme.clone(),
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        saved_at: opts.timestamp.unwrap_or_else(unix_now),
        settings: session.settings.clone(),
        next_measurement_id: session.next_measurement_id(),
        measurements: session.measurements.clone(),
        slots,
        members: members.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect(),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::format(e.to_string()))?;

    // fixed entry timestamps keep archives reproducible
    let base = SimpleFileOptions::default()
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let zip_err = |e: zip::result::ZipError| Error::format(format!("writing archive: {e}"));
    zip.start_file(MANIFEST, base.compression_method(CompressionMethod::Deflated))
        .map_err(zip_err)?;
    zip.write_all(&json).expect("writing to memory");
    for (name, bytes) in &members {
        // already gzip-compressed
        zip.start_file(name.as_str(), base.compression_method(CompressionMethod::Stored))
            .map_err(zip_err)?;
        zip.write_all(bytes).expect("writing to memory");
    }
    Ok(zip.finish().map_err(zip_err)?.into_inner())
}

/// Writes the archive atomically: a temp file in the target directory is
/// renamed over `path` only once fully written.
pub fn save_project(session: &SessionState, path: impl AsRef<Path>, opts: SaveOptions) -> Result<()> {
    let path = path.as_ref();
    let bytes = project_bytes(session, opts)?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(&bytes).map_err(|e| Error::io(tmp.path().to_path_buf(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path().to_path_buf(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_project(path: impl AsRef<Path>) -> Result<SessionState> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    project_from_bytes(&bytes)
}

fn read_member(zip: &mut ZipArchive<Cursor<&[u8]>>, name: &str) -> Result<Option<Vec<u8>>> {
    let mut f = match zip.by_name(name) {
        Ok(f) => f,
        Err(zip::result::ZipError::FileNotFound) => return Ok(None),
        Err(e) => return Err(Error::CorruptArchive(format!("{name}: {e}"))),
    };
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::CorruptArchive(format!("{name}: {e}")))?;
    Ok(Some(buf))
}

fn verified_member(zip: &mut ZipArchive<Cursor<&[u8]>>, manifest: &Manifest, name: &str) -> Result<Vec<u8>> {
    let expected = manifest
        .members
        .get(name)
        .ok_or_else(|| Error::CorruptArchive(format!("{name} is not listed in the manifest")))?;
    let bytes = read_member(zip, name)?.ok_or_else(|| Error::CorruptArchive(format!("missing member {name}")))?;
    if &sha256_hex(&bytes) != expected {
        return Err(Error::Integrity(name.to_string()));
    }
    Ok(bytes)
}

/// Loads a source volume by hash, refusing a file whose content changed.
fn load_source(src: &SourceRef) -> Result<Volume3D> {
    let missing = || Error::MissingVolume {
        sha256: src.sha256.clone(),
        path: Some(src.path.clone()),
    };
    let bytes = std::fs::read(&src.path).map_err(|_| missing())?;
    if sha256_hex(&bytes) != src.sha256 {
        return Err(missing());
    }
    volume_io::decode_volume(&bytes)
}

pub fn project_from_bytes(bytes: &[u8]) -> Result<SessionState> {
    let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(|e| Error::CorruptArchive(e.to_string()))?;
    let raw = read_member(&mut zip, MANIFEST)?.ok_or_else(|| Error::CorruptArchive(format!("missing {MANIFEST}")))?;
    let value: serde_json::Value =
        serde_json::from_slice(&raw).map_err(|e| Error::CorruptArchive(format!("{MANIFEST}: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptArchive("manifest has no format_version".into()))?;
    if version > FORMAT_VERSION as u64 {
        return Err(Error::Version {
            found: version.min(u32::MAX as u64) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let manifest: Manifest =
        serde_json::from_value(value).map_err(|e| Error::CorruptArchive(format!("{MANIFEST}: {e}")))?;

    let names: Vec<String> = zip.file_names().map(String::from).collect();
    if let Some(extra) = names.iter().find(|n| *n != MANIFEST && !manifest.members.contains_key(*n)) {
        return Err(Error::Integrity(extra.clone()));
    }

    let mut session = SessionState::new();
    session.settings = manifest.settings.clone();
    session.measurements = manifest.measurements.clone();
    session.set_next_measurement_id(manifest.next_measurement_id);
    for (k, sm) in manifest.slots.iter().enumerate() {
        let volume = if sm.embedded {
            nifti::decode(&verified_member(&mut zip, &manifest, &volume_member(k))?)?
        } else {
            let src = sm
                .source
                .as_ref()
                .ok_or_else(|| Error::CorruptArchive(format!("slot {k} has neither a source nor an embedded volume")))?;
            load_source(src)?
        };
        if volume.dims() != sm.dims {
            return Err(Error::CorruptArchive(format!(
                "slot {k} volume has dims {:?}, manifest says {:?}",
                volume.dims(),
                sm.dims
            )));
        }
        let labels = LabelMap::from_volume(&nifti::decode(&verified_member(&mut zip, &manifest, &labels_member(k))?)?)?;
        if labels.dims() != volume.dims() {
            return Err(Error::CorruptArchive(format!(
                "slot {k} label map {:?} does not match volume {:?}",
                labels.dims(),
                volume.dims()
            )));
        }
        let mut slot = VolumeSlot::new(volume);
        slot.labels = labels;
        slot.window = sm.window;
        slot.scheme = sm.color_scheme.clone();
        slot.source = sm.source.clone();
        session.add_slot(slot)?;
    }
    Ok(session)
}

/// Default archive path next to the first slot's source, or `project.nsp`.
pub fn default_path(session: &SessionState) -> PathBuf {
    session
        .slots
        .first()
        .and_then(|s| s.source.as_ref())
        .map(|s| s.path.with_extension("nsp"))
        .unwrap_or_else(|| PathBuf::from("project.nsp"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use neuroseg_core::PlaneId;

    use crate::session::ToolRequest;

    const FIXED: SaveOptions = SaveOptions { embed_volumes: false, timestamp: Some(1_700_000_000) };

    fn session() -> SessionState {
        let vol = Volume3D::from_data([6, 5, 4], (0..120).map(f64::from).collect()).unwrap();
        let mut s = SessionState::with_volumes(vec![vol]).unwrap();
        s.apply_tool(
            0,
            &ToolRequest::PolygonFill {
                plane: PlaneId::Axial,
                index: 2,
                points: vec![[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]],
                label: 3,
            },
        )
        .unwrap();
        s
    }

    #[test]
    fn empty_session_round_trips() {
        let bytes = project_bytes(&SessionState::new(), FIXED).unwrap();
        let back = project_from_bytes(&bytes).unwrap();
        assert!(back.slots.is_empty());
        assert_eq!(project_bytes(&back, FIXED).unwrap(), bytes);
    }

    #[test]
    fn in_memory_volumes_are_embedded() {
        let s = session();
        let bytes = project_bytes(&s, FIXED).unwrap();
        let back = project_from_bytes(&bytes).unwrap();
        assert_eq!(back.slots[0].labels, s.slots[0].labels);
        let (a, b) = (&back.slots[0].volume, &s.slots[0].volume);
        assert_eq!((a.data(), a.affine(), a.dtype()), (b.data(), b.affine(), b.dtype()));
        assert_eq!(back.slots[0].history.undo_depth(), 0);
        assert_eq!(project_bytes(&back, FIXED).unwrap(), bytes);
    }

    #[test]
    fn rejects_bad_archives() {
        assert!(matches!(project_from_bytes(b"not a zip"), Err(Error::CorruptArchive(_))));
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        zip.start_file("slots/0/labels.nii.gz", SimpleFileOptions::default()).unwrap();
        let bytes = zip.finish().unwrap().into_inner();
        assert!(matches!(project_from_bytes(&bytes), Err(Error::CorruptArchive(m)) if m.contains("manifest")));
    }
}

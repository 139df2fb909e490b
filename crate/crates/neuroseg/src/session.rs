//! In-memory editing session: up to two volume slots with label maps,
//! undo histories, a measurement catalog and tool settings.

use std::path::{Path, PathBuf};

use neuroseg_core::enhance::WindowLevel;
use neuroseg_core::extract::{self, ExtractParams};
use neuroseg_core::history::UndoHistory;
use neuroseg_core::measure::{self, MeasurementKind, MeasurementRecord};
use neuroseg_core::segment::{self as seg, CombineOp, PolygonSelection, Region, RegionGrowParams};
use neuroseg_core::{ColorScheme, Label, LabelMap, PlaneId, Volume3D};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::volume_io;

pub const MAX_SLOTS: usize = 2;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Where a slot's volume came from on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct VolumeSlot {
    pub volume: Volume3D,
    pub labels: LabelMap,
    pub scheme: ColorScheme,
    pub window: WindowLevel,
    pub history: UndoHistory,
    pub source: Option<SourceRef>,
}

impl VolumeSlot {
    pub fn new(volume: Volume3D) -> Self {
        VolumeSlot {
            labels: LabelMap::for_volume(&volume),
            scheme: ColorScheme::standard(),
            window: WindowLevel::auto(&volume),
            history: UndoHistory::default(),
            source: None,
            volume,
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let volume = volume_io::decode_volume(&bytes)?;
        let mut slot = Self::new(volume);
        slot.source = Some(SourceRef {
            path: std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf()),
            sha256: sha256_hex(&bytes),
        });
        Ok(slot)
    }

    /// Runs `f` against the label map and records its net change for undo.
    /// A failing edit is rolled back and leaves the history untouched.
    pub fn edit(&mut self, f: impl FnOnce(&Volume3D, &mut LabelMap) -> Result<usize>) -> Result<usize> {
        self.labels.start_recording();
        let outcome = f(&self.volume, &mut self.labels);
        let patch = self.labels.finish_recording();
        match outcome {
            Ok(n) => {
                self.history.push(patch);
                Ok(n)
            }
            Err(e) => {
                patch.revert(&mut self.labels);
                Err(e)
            }
        }
    }
}

/// Persisted tool and enhancement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolSettings {
    pub active_label: Label,
    pub grow_radius: f64,
    pub bandpass: Option<[f64; 2]>,
    pub hamming_cutoff: Option<f64>,
    pub sobel: bool,
    pub extract: ExtractParams,
}

impl Default for ToolSettings {
    fn default() -> Self {
        ToolSettings {
            active_label: 1,
            grow_radius: 5.0,
            bandpass: None,
            hamming_cutoff: None,
            sobel: false,
            extract: ExtractParams::default(),
        }
    }
}

fn default_count() -> usize {
    1
}

fn default_label() -> Label {
    1
}

fn default_morph_radius() -> f64 {
    ExtractParams::default().morph_radius_mm
}

/// One label-map edit. The JSON form carries the tool name under `"tool"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tool", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToolRequest {
    PolygonFill {
        plane: PlaneId,
        index: usize,
        points: Vec<[f64; 2]>,
        label: Label,
    },
    /// Exactly one of `radius` (in-plane pixels) or `radius_mm` must be given.
    RegionGrow {
        plane: PlaneId,
        index: usize,
        seed: [i64; 2],
        #[serde(default)]
        radius: Option<f64>,
        #[serde(default)]
        radius_mm: Option<f64>,
        label: Label,
        #[serde(default)]
        connectivity_only: bool,
    },
    Erase {
        region: Region,
        #[serde(default)]
        target: Option<Label>,
    },
    CopyToAdjacent {
        plane: PlaneId,
        index: usize,
        direction: i32,
        #[serde(default = "default_count")]
        count: usize,
    },
    InterpolateBetween {
        plane: PlaneId,
        a: usize,
        b: usize,
        label: Label,
    },
    OverwriteLabel {
        region: Region,
        label: Label,
    },
    MaskCombine {
        other_slot: usize,
        label: Label,
        op: CombineOp,
    },
    ExtractBrain {
        #[serde(default)]
        threshold_offset: f64,
        #[serde(default = "default_morph_radius")]
        morph_radius_mm: f64,
        #[serde(default = "default_label")]
        label: Label,
    },
}

impl ToolRequest {
    pub const NAMES: [&'static str; 8] = [
        "polygon_fill",
        "region_grow",
        "erase",
        "copy_to_adjacent",
        "interpolate_between",
        "overwrite_label",
        "mask_combine",
        "extract_brain",
    ];
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Core(neuroseg_core::Error::Validation(msg.into()))
}

/// Converts a grow request's radius to in-plane pixels. A millimetre radius
/// is divided by the finer in-plane spacing so the disk spans at least that
/// distance along both axes.
pub fn grow_radius_pixels(spacing: [f64; 3], plane: PlaneId, radius: Option<f64>, radius_mm: Option<f64>) -> Result<f64> {
    match (radius, radius_mm) {
        (Some(r), None) => Ok(r),
        (None, Some(mm)) => {
            let [su, sv] = plane.in_plane_spacing(spacing);
            Ok(mm / su.min(sv))
        }
        _ => Err(invalid("region_grow needs exactly one of radius or radius_mm")),
    }
}

/// A measurement to compute and catalog. Coordinates are voxel indices of
/// the chosen slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureRequest {
    Distance {
        #[serde(default)]
        slot: usize,
        p: [f64; 3],
        q: [f64; 3],
    },
    Angle {
        #[serde(default)]
        slot: usize,
        plane: PlaneId,
        index: usize,
        p: [f64; 2],
        q: [f64; 2],
    },
    AreaPerimeter {
        #[serde(default)]
        slot: usize,
        plane: PlaneId,
        index: usize,
        label: Label,
    },
    Volume {
        #[serde(default)]
        slot: usize,
        label: Label,
    },
}

#[derive(Debug, Clone, Default)]
pub struct SessionState {
    pub slots: Vec<VolumeSlot>,
    pub measurements: Vec<MeasurementRecord>,
    pub settings: ToolSettings,
    next_measurement_id: u64,
}

impl SessionState {
    pub fn new() -> Self {
        SessionState {
            next_measurement_id: 1,
            ..Default::default()
        }
    }

    pub fn open(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let mut s = Self::new();
        if paths.is_empty() {
            return Err(invalid("a session needs at least one volume"));
        }
        for p in paths {
            s.add_slot(VolumeSlot::open(p)?)?;
        }
        Ok(s)
    }

    pub fn with_volumes(volumes: Vec<Volume3D>) -> Result<Self> {
        let mut s = Self::new();
        for v in volumes {
            s.add_slot(VolumeSlot::new(v))?;
        }
        Ok(s)
    }

    pub fn add_slot(&mut self, slot: VolumeSlot) -> Result<usize> {
        if self.slots.len() >= MAX_SLOTS {
            return Err(invalid(format!("a session holds at most {MAX_SLOTS} volumes")));
        }
        self.slots.push(slot);
        Ok(self.slots.len() - 1)
    }

    pub fn slot(&self, k: usize) -> Result<&VolumeSlot> {
        let slots = self.slots.len();
        self.slots.get(k).ok_or(Error::NoSlot { slot: k, slots })
    }

    pub fn slot_mut(&mut self, k: usize) -> Result<&mut VolumeSlot> {
        let slots = self.slots.len();
        self.slots.get_mut(k).ok_or(Error::NoSlot { slot: k, slots })
    }

    pub fn next_measurement_id(&self) -> u64 {
        self.next_measurement_id
    }

    pub(crate) fn set_next_measurement_id(&mut self, id: u64) {
        self.next_measurement_id = id;
    }

    /// Applies one tool to slot `k`; returns the number of voxels changed.
    pub fn apply_tool(&mut self, k: usize, req: &ToolRequest) -> Result<usize> {
        let other = match req {
            ToolRequest::MaskCombine { other_slot, .. } => Some(self.slot(*other_slot)?.labels.clone()),
            _ => None,
        };
        let slot = self.slot_mut(k)?;
        slot.edit(|vol, map| run_tool(vol, map, req, other.as_ref()))
    }

    pub fn undo(&mut self, k: usize) -> Result<usize> {
        let slot = self.slot_mut(k)?;
        Ok(slot.history.undo(&mut slot.labels)?)
    }

    pub fn redo(&mut self, k: usize) -> Result<usize> {
        let slot = self.slot_mut(k)?;
        Ok(slot.history.redo(&mut slot.labels)?)
    }

    /// Computes a measurement, catalogs it and returns the stored record.
    pub fn measure(&mut self, req: &MeasureRequest, timestamp: i64) -> Result<MeasurementRecord> {
        let id = self.next_measurement_id;
        let record = compute_measurement(self, req, id, timestamp)?;
        self.next_measurement_id += 1;
        self.measurements.push(record.clone());
        Ok(record)
    }

    pub fn delete_measurement(&mut self, id: u64) -> bool {
        let before = self.measurements.len();
        self.measurements.retain(|m| m.id != id);
        self.measurements.len() != before
    }
}

fn run_tool(vol: &Volume3D, map: &mut LabelMap, req: &ToolRequest, other: Option<&LabelMap>) -> Result<usize> {
    let n = match req {
        ToolRequest::PolygonFill { plane, index, points, label } => {
            seg::polygon_fill(map, &PolygonSelection::new(*plane, *index, points.clone()), *label)?
        }
        ToolRequest::RegionGrow { plane, index, seed, radius, radius_mm, label, connectivity_only } => {
            let radius = grow_radius_pixels(vol.spacing(), *plane, *radius, *radius_mm)?;
            let p = RegionGrowParams {
                plane: *plane,
                index: *index,
                seed: *seed,
                radius,
                connectivity_only: *connectivity_only,
            };
            seg::region_grow(vol, map, &p, *label)?
        }
        ToolRequest::Erase { region, target } => seg::erase(map, region, *target)?,
        ToolRequest::CopyToAdjacent { plane, index, direction, count } => {
            seg::copy_to_adjacent(map, *plane, *index, *direction, *count)?
        }
        ToolRequest::InterpolateBetween { plane, a, b, label } => seg::interpolate_between(map, *plane, *a, *b, *label)?,
        ToolRequest::OverwriteLabel { region, label } => seg::overwrite_label(map, region, *label)?,
        ToolRequest::MaskCombine { label, op, .. } => {
            seg::mask_combine(map, other.expect("other slot resolved by caller"), *label, *op)?
        }
        ToolRequest::ExtractBrain { threshold_offset, morph_radius_mm, label } => {
            if *label == 0 {
                return Err(invalid("extract_brain needs a nonzero label"));
            }
            let params = ExtractParams {
                threshold_offset: *threshold_offset,
                morph_radius_mm: *morph_radius_mm,
            };
            let mask = extract::extract_brain(vol, params)?;
            let mut changed = 0;
            for (i, &m) in mask.data().iter().enumerate() {
                if m != 0 && map.set(i, *label) {
                    changed += 1;
                }
            }
            changed
        }
    };
    Ok(n)
}

fn in_plane_bounds(dims: [usize; 3], plane: PlaneId, index: usize, p: [f64; 2]) -> Result<()> {
    plane.check_index(dims, index)?;
    let (w, h, _) = plane.extent(dims);
    let ok = |c: f64, n: usize| c >= 0.0 && c <= (n - 1) as f64;
    if !(ok(p[0], w) && ok(p[1], h)) {
        return Err(invalid(format!("point {p:?} outside the {w}x{h} {} slice", plane.name())));
    }
    Ok(())
}

fn compute_measurement(s: &SessionState, req: &MeasureRequest, id: u64, ts: i64) -> Result<MeasurementRecord> {
    let record = match *req {
        MeasureRequest::Distance { slot, p, q } => {
            let v = &s.slot(slot)?.volume;
            let d = measure::distance(v.dims(), v.spacing(), p, q)?;
            MeasurementRecord::new(id, MeasurementKind::Distance, d, None, ts).with_points(vec![p.to_vec(), q.to_vec()])
        }
        MeasureRequest::Angle { slot, plane, index, p, q } => {
            let v = &s.slot(slot)?.volume;
            in_plane_bounds(v.dims(), plane, index, p)?;
            in_plane_bounds(v.dims(), plane, index, q)?;
            let a = measure::angle(p, q, plane.in_plane_spacing(v.spacing()))?;
            MeasurementRecord::new(id, MeasurementKind::Angle, a, None, ts)
                .on_slice(plane, index)
                .with_points(vec![p.to_vec(), q.to_vec()])
        }
        MeasureRequest::AreaPerimeter { slot, plane, index, label } => {
            let sl = s.slot(slot)?;
            let (area, perim) = measure::area_perimeter(&sl.labels, plane, index, label, sl.volume.spacing())?;
            MeasurementRecord::new(id, MeasurementKind::AreaPerimeter, area, Some(perim), ts)
                .on_slice(plane, index)
                .with_label(label)
        }
        MeasureRequest::Volume { slot, label } => {
            let sl = s.slot(slot)?;
            let v = measure::region_volume(&sl.labels, label, sl.volume.spacing());
            MeasurementRecord::new(id, MeasurementKind::Volume, v, None, ts).with_label(label)
        }
    };
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> SessionState {
        let vol = Volume3D::from_data([8, 8, 4], (0..256).map(|i| (i % 7) as f64).collect()).unwrap();
        SessionState::with_volumes(vec![vol.clone(), vol]).unwrap()
    }

    fn square(label: Label) -> ToolRequest {
        ToolRequest::PolygonFill {
            plane: PlaneId::Axial,
            index: 1,
            points: vec![[1.0, 1.0], [4.0, 1.0], [4.0, 4.0], [1.0, 4.0]],
            label,
        }
    }

    #[test]
    fn tool_json_form() {
        let req: ToolRequest = serde_json::from_str(
            r#"{"tool":"erase","region":{"shape":"disk","plane":"axial","index":0,"center":[2,2],"radius":1.5}}"#,
        )
        .unwrap();
        assert!(matches!(req, ToolRequest::Erase { target: None, .. }));
        let back: ToolRequest = serde_json::from_str(&serde_json::to_string(&square(3)).unwrap()).unwrap();
        assert_eq!(back, square(3));
        assert!(serde_json::from_str::<ToolRequest>(r#"{"tool":"paint"}"#).is_err());
    }

    #[test]
    fn tools_record_undo() {
        let mut s = session();
        assert_eq!(s.apply_tool(0, &square(2)).unwrap(), 9);
        assert_eq!(s.slot(0).unwrap().labels.count(2), 9);
        // repainting the same pixels changes nothing and records nothing
        assert_eq!(s.apply_tool(0, &square(2)).unwrap(), 0);
        assert_eq!(s.undo(0).unwrap(), 9);
        assert_eq!(s.slot(0).unwrap().labels.count(2), 0);
        assert!(s.undo(0).is_err());
        assert_eq!(s.redo(0).unwrap(), 9);
        assert!(matches!(s.apply_tool(5, &square(1)), Err(Error::NoSlot { slot: 5, slots: 2 })));
    }

    #[test]
    fn failed_tool_leaves_map_alone() {
        let mut s = session();
        s.apply_tool(0, &square(1)).unwrap();
        let before = s.slot(0).unwrap().labels.clone();
        let bad = ToolRequest::InterpolateBetween { plane: PlaneId::Axial, a: 1, b: 3, label: 4 };
        assert!(s.apply_tool(0, &bad).is_err());
        assert_eq!(s.slot(0).unwrap().labels, before);
        assert_eq!(s.slot(0).unwrap().history.undo_depth(), 1);
    }

    #[test]
    fn mask_combine_across_slots() {
        let mut s = session();
        s.apply_tool(1, &square(4)).unwrap();
        let add = ToolRequest::MaskCombine { other_slot: 1, label: 4, op: CombineOp::Add };
        assert_eq!(s.apply_tool(0, &add).unwrap(), 9);
        assert_eq!(s.slot(0).unwrap().labels, s.slot(1).unwrap().labels);
    }

    #[test]
    fn grow_radius_units() {
        let sp = [0.5, 2.0, 1.0];
        assert_eq!(grow_radius_pixels(sp, PlaneId::Axial, Some(3.0), None).unwrap(), 3.0);
        assert_eq!(grow_radius_pixels(sp, PlaneId::Axial, None, Some(3.0)).unwrap(), 6.0);
        assert!(grow_radius_pixels(sp, PlaneId::Axial, None, None).is_err());
        assert!(grow_radius_pixels(sp, PlaneId::Axial, Some(1.0), Some(1.0)).is_err());
    }

    #[test]
    fn measurements_are_cataloged() {
        let mut s = session();
        let r = s.measure(&MeasureRequest::Distance { slot: 0, p: [0.0; 3], q: [3.0, 4.0, 0.0] }, 100).unwrap();
        assert_eq!((r.id, r.value1, r.timestamp), (1, 5.0, 100));
        let bad = MeasureRequest::Angle { slot: 0, plane: PlaneId::Axial, index: 0, p: [0.0, 0.0], q: [9.0, 0.0] };
        assert!(s.measure(&bad, 0).is_err());
        s.apply_tool(0, &square(1)).unwrap();
        let a = s
            .measure(&MeasureRequest::AreaPerimeter { slot: 0, plane: PlaneId::Axial, index: 1, label: 1 }, 0)
            .unwrap();
        assert_eq!((a.id, a.value1, a.value2), (2, 9.0, Some(12.0)));
        assert_eq!(s.measurements.len(), 2);
        assert!(s.delete_measurement(1));
        assert!(!s.delete_measurement(1));
        assert_eq!(s.measurements.len(), 1);
    }

    #[test]
    fn slot_limit() {
        let mut s = session();
        let v = Volume3D::from_data([2, 2, 2], vec![0.0; 8]).unwrap();
        assert!(s.add_slot(VolumeSlot::new(v)).is_err());
    }
}

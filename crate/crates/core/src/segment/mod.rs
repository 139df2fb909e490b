//! Label-map editing kernels behind the segmentation toolbar.
//!
//! Every mutating operation returns the number of voxels whose value
//! actually changed. Mutations go through [`LabelMap::set`], which also
//! feeds an optional change journal used to build undo patches.

mod grow;
mod interp;
mod ops;
mod polygon;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use grow::{region_grow, select_region, RegionGrowParams};
pub use interp::interpolate_between;
pub use ops::{apply_mask, copy_to_adjacent, erase, mask_combine, overwrite_label, CombineOp, MaskMode};
pub use polygon::{polygon_fill, PolygonSelection};

use crate::affine::Affine;
use crate::error::{Error, Result};
use crate::history::Patch;
use crate::plane::PlaneId;
use crate::volume::{DataType, Volume3D};

pub type Label = u16;

/// Integer label grid congruent with a volume; 0 is background.
#[derive(Debug, Clone)]
pub struct LabelMap {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<Label>,
    journal: Option<Vec<(u32, Label, Label)>>,
}

impl PartialEq for LabelMap {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.data == other.data
    }
}

impl LabelMap {
    pub fn new(dims: [usize; 3]) -> Self {
        LabelMap {
            dims,
            spacing: [1.0; 3],
            data: vec![0; dims.iter().product()],
            journal: None,
        }
    }

    /// Empty map on the grid of `vol`, carrying its spacing.
    pub fn for_volume(vol: &Volume3D) -> Self {
        Self::new(vol.dims()).with_spacing(vol.spacing())
    }

    pub fn from_data(dims: [usize; 3], data: Vec<Label>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::DimMismatch(format!(
                "{} labels for dims {dims:?}",
                data.len()
            )));
        }
        Ok(LabelMap {
            dims,
            spacing: [1.0; 3],
            data,
            journal: None,
        })
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    /// Reads labels from an integer-valued volume (first frame).
    pub fn from_volume(vol: &Volume3D) -> Result<Self> {
        let data = vol
            .frame_data(0)
            .iter()
            .map(|&v| {
                if v.is_finite() && v >= 0.0 && v <= Label::MAX as f64 && v == libm::floor(v) {
                    Ok(v as Label)
                } else {
                    Err(Error::invalid(format!("{v} is not a valid label value")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_data(vol.dims(), data)?.with_spacing(vol.spacing()))
    }

    /// The labels as a uint16-tagged volume with the given geometry.
    pub fn to_volume(&self, affine: Affine) -> Result<Volume3D> {
        let data = self.data.iter().map(|&l| l as f64).collect();
        Ok(Volume3D::new(self.dims, self.spacing, affine, data)?.with_dtype(DataType::UInt16))
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[Label] {
        &self.data
    }

    #[inline]
    pub fn index(&self, p: [usize; 3]) -> usize {
        p[0] + self.dims[0] * (p[1] + self.dims[1] * p[2])
    }

    #[inline]
    pub fn get(&self, p: [usize; 3]) -> Label {
        self.data[self.index(p)]
    }

    /// Sets one voxel; returns whether its value changed.
    #[inline]
    pub fn set(&mut self, idx: usize, label: Label) -> bool {
        let old = self.data[idx];
        if old == label {
            return false;
        }
        self.data[idx] = label;
        if let Some(j) = self.journal.as_mut() {
            j.push((idx as u32, old, label));
        }
        true
    }

    #[inline]
    pub fn set_at(&mut self, p: [usize; 3], label: Label) -> bool {
        let idx = self.index(p);
        self.set(idx, label)
    }

    pub fn count(&self, label: Label) -> usize {
        self.data.iter().filter(|&&l| l == label).count()
    }

    /// Distinct nonzero labels present, ascending.
    pub fn labels(&self) -> Vec<Label> {
        let mut seen = vec![false; Label::MAX as usize + 1];
        for &l in &self.data {
            seen[l as usize] = true;
        }
        (1..=Label::MAX).filter(|&l| seen[l as usize]).collect()
    }

    pub(crate) fn check_congruent(&self, dims: [usize; 3]) -> Result<()> {
        if self.dims != dims {
            return Err(Error::DimMismatch(format!("label map {:?} vs {:?}", self.dims, dims)));
        }
        Ok(())
    }

    /// Starts journaling changes; see [`LabelMap::finish_recording`].
    pub fn start_recording(&mut self) {
        self.journal = Some(Vec::new());
    }

    /// Stops journaling and returns the net change as a patch.
    pub fn finish_recording(&mut self) -> Patch {
        Patch::from_journal(self.journal.take().unwrap_or_default())
    }

    pub(crate) fn data_mut_unjournaled(&mut self) -> &mut [Label] {
        &mut self.data
    }
}

/// Voxel region on one slice: a polygon or a disk.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "lowercase"))]
pub enum Region {
    Polygon(PolygonSelection),
    Disk(DiskSelection),
}

/// Pixels whose centers lie within `radius` of `center` on one slice.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiskSelection {
    pub plane: PlaneId,
    pub index: usize,
    pub center: [i64; 2],
    pub radius: f64,
}

impl DiskSelection {
    pub fn pixels(&self, dims: [usize; 3]) -> Result<Vec<[usize; 3]>> {
        self.plane.check_index(dims, self.index)?;
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(Error::invalid(format!("disk radius must be >= 0, got {}", self.radius)));
        }
        let (w, h, _) = self.plane.extent(dims);
        let [cu, cv] = self.center;
        if cu < 0 || cu as usize >= w || cv < 0 || cv as usize >= h {
            return Err(Error::invalid(format!("disk center {:?} outside the {w}x{h} slice", self.center)));
        }
        let r = self.radius;
        let reach = libm::floor(r) as i64;
        let r2 = r * r;
        let mut out = Vec::new();
        for v in (cv - reach).max(0)..=(cv + reach).min(h as i64 - 1) {
            for u in (cu - reach).max(0)..=(cu + reach).min(w as i64 - 1) {
                let (du, dv) = ((u - cu) as f64, (v - cv) as f64);
                if du * du + dv * dv <= r2 {
                    out.push(self.plane.voxel(self.index, u as usize, v as usize));
                }
            }
        }
        Ok(out)
    }
}

impl Region {
    pub fn plane(&self) -> PlaneId {
        match self {
            Region::Polygon(p) => p.plane,
            Region::Disk(d) => d.plane,
        }
    }

    pub fn pixels(&self, dims: [usize; 3]) -> Result<Vec<[usize; 3]>> {
        match self {
            Region::Polygon(p) => p.pixels(dims),
            Region::Disk(d) => d.pixels(dims),
        }
    }
}

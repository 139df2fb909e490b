//! The scalar voxel grid every other module operates on.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affine::Affine;
use crate::error::{Error, Result};

/// On-disk storage type of a volume. In memory every intensity is `f64`;
/// the tag only decides how the volume is written back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DataType {
    UInt8,
    Int16,
    Int32,
    UInt16,
    #[default]
    Float32,
    Float64,
}

impl DataType {
    pub const ALL: [DataType; 6] = [
        DataType::UInt8,
        DataType::Int16,
        DataType::Int32,
        DataType::UInt16,
        DataType::Float32,
        DataType::Float64,
    ];

    pub fn nifti_code(self) -> i16 {
        match self {
            DataType::UInt8 => 2,
            DataType::Int16 => 4,
            DataType::Int32 => 8,
            DataType::Float32 => 16,
            DataType::Float64 => 64,
            DataType::UInt16 => 512,
        }
    }

    pub fn from_nifti_code(code: i16) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.nifti_code() == code)
    }

    pub fn byte_size(self) -> usize {
        match self {
            DataType::UInt8 => 1,
            DataType::Int16 | DataType::UInt16 => 2,
            DataType::Int32 | DataType::Float32 => 4,
            DataType::Float64 => 8,
        }
    }

    pub fn bitpix(self) -> i16 {
        (self.byte_size() * 8) as i16
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, DataType::Float32 | DataType::Float64)
    }

    pub fn name(self) -> &'static str {
        match self {
            DataType::UInt8 => "uint8",
            DataType::Int16 => "int16",
            DataType::Int32 => "int32",
            DataType::UInt16 => "uint16",
            DataType::Float32 => "float32",
            DataType::Float64 => "float64",
        }
    }
}

/// A 3D (or stacked 4D) scalar image with physical geometry.
///
/// Data is x-fastest: `idx = x + nx*(y + ny*(z + nz*t))`. Immutable once
/// built; derived volumes are new values.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    dims: [usize; 3],
    nt: Option<usize>,
    spacing: [f64; 3],
    affine: Affine,
    inverse: Affine,
    data: Vec<f64>,
    dtype: DataType,
    metadata: Vec<(String, String)>,
}

impl Volume3D {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], affine: Affine, data: Vec<f64>) -> Result<Self> {
        Self::with_frames(dims, None, spacing, affine, data)
    }

    /// Volume with unit spacing and identity affine.
    pub fn from_data(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        Self::new(dims, [1.0; 3], Affine::identity(), data)
    }

    pub fn with_frames(
        dims: [usize; 3],
        nt: Option<usize>,
        spacing: [f64; 3],
        affine: Affine,
        data: Vec<f64>,
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(format!("dims must be positive, got {dims:?}")));
        }
        if nt == Some(0) {
            return Err(Error::invalid("frame count must be positive"));
        }
        if !spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid(format!("spacing must be positive, got {spacing:?}")));
        }
        let inverse = affine.inverse()?;
        let expected = dims[0] * dims[1] * dims[2] * nt.unwrap_or(1);
        if data.len() != expected {
            return Err(Error::DimMismatch(format!(
                "data length {} does not match {expected} voxels",
                data.len()
            )));
        }
        Ok(Volume3D {
            dims,
            nt,
            spacing,
            affine,
            inverse,
            data,
            dtype: DataType::Float32,
            metadata: Vec::new(),
        })
    }

    pub fn with_dtype(mut self, dtype: DataType) -> Self {
        self.dtype = dtype;
        self
    }

    pub fn with_metadata(mut self, metadata: Vec<(String, String)>) -> Self {
        self.metadata = metadata;
        self
    }

    /// New volume on the same grid with different intensities.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::DimMismatch(format!(
                "data length {} does not match {} voxels",
                data.len(),
                self.data.len()
            )));
        }
        Ok(Volume3D {
            data,
            ..self.clone_geometry()
        })
    }

    /// New volume on the same grid with a replaced affine (spacing kept).
    pub fn with_affine(&self, affine: Affine) -> Result<Self> {
        let inverse = affine.inverse()?;
        let mut out = self.clone();
        out.affine = affine;
        out.inverse = inverse;
        Ok(out)
    }

    fn clone_geometry(&self) -> Self {
        Volume3D {
            dims: self.dims,
            nt: self.nt,
            spacing: self.spacing,
            affine: self.affine,
            inverse: self.inverse,
            data: Vec::new(),
            dtype: self.dtype,
            metadata: self.metadata.clone(),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nt(&self) -> Option<usize> {
        self.nt
    }

    pub fn frames(&self) -> usize {
        self.nt.unwrap_or(1)
    }

    pub fn voxels_per_frame(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn dtype(&self) -> DataType {
        self.dtype
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Intensities of frame `t`.
    pub fn frame_data(&self, t: usize) -> &[f64] {
        let n = self.voxels_per_frame();
        &self.data[t * n..(t + 1) * n]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// Intensity at `(x, y, z)` of the first frame.
    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)]
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        p.iter().zip(self.dims).all(|(&c, n)| c >= 0 && (c as usize) < n)
    }

    /// Frame `t` as a standalone 3D volume sharing geometry.
    pub fn extract_frame(&self, t: usize) -> Result<Volume3D> {
        if t >= self.frames() {
            return Err(Error::range("frame", t as i64, self.frames()));
        }
        if self.nt.is_none() {
            return Ok(self.clone());
        }
        let mut out = self.clone_geometry();
        out.nt = None;
        out.data = self.frame_data(t).to_vec();
        Ok(out)
    }

    pub fn voxel_to_world(&self, p: [f64; 3]) -> [f64; 3] {
        self.affine.apply(p)
    }

    pub fn world_to_voxel(&self, p: [f64; 3]) -> [f64; 3] {
        self.inverse.apply(p)
    }

    /// Minimum and maximum over finite intensities, `None` if there are none.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        min_max(&self.data)
    }
}

pub(crate) fn min_max(data: &[f64]) -> Option<(f64, f64)> {
    data.iter().filter(|v| v.is_finite()).fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_geometry() {
        assert!(Volume3D::from_data([0, 1, 1], vec![]).is_err());
        assert!(Volume3D::new([1, 1, 1], [1.0, 0.0, 1.0], Affine::identity(), vec![0.0]).is_err());
        assert!(matches!(
            Volume3D::from_data([2, 2, 2], vec![0.0; 7]),
            Err(Error::DimMismatch(_))
        ));
        let flat = Affine::from_rows([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0; 4]]);
        assert_eq!(
            Volume3D::new([1, 1, 1], [1.0; 3], flat, vec![0.0]),
            Err(Error::DegenerateAffine)
        );
    }

    #[test]
    fn world_mapping() {
        let v = Volume3D::from_data([4, 4, 4], vec![0.0; 64]).unwrap();
        assert_eq!(v.voxel_to_world([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0]);
        let s = Volume3D::new([4, 4, 4], [2.0; 3], Affine::from_spacing([2.0; 3]), vec![0.0; 64]).unwrap();
        assert_eq!(s.voxel_to_world([1.0, 1.0, 1.0]), [2.0, 2.0, 2.0]);
        assert_eq!(s.world_to_voxel([2.0, 2.0, 2.0]), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn frames() {
        let data: Vec<f64> = (0..4).flat_map(|t| vec![t as f64; 8]).collect();
        let v = Volume3D::with_frames([2, 2, 2], Some(4), [1.0; 3], Affine::identity(), data).unwrap();
        let f2 = v.extract_frame(2).unwrap();
        assert_eq!(f2.nt(), None);
        assert!(f2.data().iter().all(|&x| x == 2.0));
        assert!(matches!(v.extract_frame(4), Err(Error::Range { .. })));

        let three = Volume3D::from_data([2, 2, 2], vec![1.0; 8]).unwrap();
        assert_eq!(three.extract_frame(0).unwrap(), three);
        assert!(three.extract_frame(1).is_err());
    }
}

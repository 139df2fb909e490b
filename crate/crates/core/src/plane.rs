//! Orthogonal planes, slice extraction and the linked cursor.
//!
//! Planes are defined against the voxel axes of the in-memory grid
//! (canonically RAS): axial holds z fixed with in-plane `(u, v) = (x, y)`,
//! coronal holds y fixed with `(u, v) = (x, z)`, sagittal holds x fixed
//! with `(u, v) = (y, z)`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::volume::Volume3D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PlaneId {
    Axial,
    Coronal,
    Sagittal,
}

impl PlaneId {
    pub const ALL: [PlaneId; 3] = [PlaneId::Axial, PlaneId::Coronal, PlaneId::Sagittal];

    /// `(u axis, v axis, fixed axis)` as voxel-axis numbers.
    pub const fn axes(self) -> (usize, usize, usize) {
        match self {
            PlaneId::Axial => (0, 1, 2),
            PlaneId::Coronal => (0, 2, 1),
            PlaneId::Sagittal => (1, 2, 0),
        }
    }

    pub const fn fixed_axis(self) -> usize {
        self.axes().2
    }

    /// `(width, height, depth)`: in-plane extents and the number of slices.
    pub fn extent(self, dims: [usize; 3]) -> (usize, usize, usize) {
        let (u, v, f) = self.axes();
        (dims[u], dims[v], dims[f])
    }

    pub fn in_plane_spacing(self, spacing: [f64; 3]) -> [f64; 2] {
        let (u, v, _) = self.axes();
        [spacing[u], spacing[v]]
    }

    /// Voxel coordinate of in-plane `(u, v)` on slice `index`. No bounds check.
    #[inline]
    pub fn voxel(self, index: usize, u: usize, v: usize) -> [usize; 3] {
        let (ua, va, fa) = self.axes();
        let mut p = [0; 3];
        p[ua] = u;
        p[va] = v;
        p[fa] = index;
        p
    }

    /// Inverse of [`PlaneId::voxel`]: `(index, u, v)`.
    pub fn project(self, p: [usize; 3]) -> (usize, usize, usize) {
        let (ua, va, fa) = self.axes();
        (p[fa], p[ua], p[va])
    }

    pub fn name(self) -> &'static str {
        match self {
            PlaneId::Axial => "axial",
            PlaneId::Coronal => "coronal",
            PlaneId::Sagittal => "sagittal",
        }
    }

    pub fn check_index(self, dims: [usize; 3], index: usize) -> Result<()> {
        let depth = self.extent(dims).2;
        if index >= depth {
            return Err(Error::range(self.name(), index as i64, depth));
        }
        Ok(())
    }
}

impl fmt::Display for PlaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlaneId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "axial" => Ok(PlaneId::Axial),
            "coronal" => Ok(PlaneId::Coronal),
            "sagittal" => Ok(PlaneId::Sagittal),
            _ => Err(Error::Validation(alloc::format!("unknown plane '{s}'"))),
        }
    }
}

/// A copied 2D slice, row-major in `v` with `u` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2D {
    pub width: usize,
    pub height: usize,
    pub spacing: [f64; 2],
    pub data: Vec<f64>,
}

impl Slice2D {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::DimMismatch(alloc::format!(
                "{} values for a {width}x{height} slice",
                data.len()
            )));
        }
        Ok(Slice2D {
            width,
            height,
            spacing: [1.0, 1.0],
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..height)
            .flat_map(|v| (0..width).map(move |u| (u, v)))
            .map(|(u, v)| f(u, v))
            .collect();
        Slice2D {
            width,
            height,
            spacing: [1.0, 1.0],
            data,
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u + self.width * v]
    }
}

/// Copies the in-plane values of slice `index` out of any x-fastest grid.
pub fn extract_plane<T: Copy>(dims: [usize; 3], data: &[T], plane: PlaneId, index: usize) -> Result<Vec<T>> {
    plane.check_index(dims, index)?;
    let (w, h, _) = plane.extent(dims);
    let mut out = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let [x, y, z] = plane.voxel(index, u, v);
            out.push(data[x + dims[0] * (y + dims[1] * z)]);
        }
    }
    Ok(out)
}

/// Writes `values` (same layout as [`extract_plane`]) into slice `index`.
pub fn write_plane<T: Copy>(dims: [usize; 3], data: &mut [T], plane: PlaneId, index: usize, values: &[T]) -> Result<()> {
    plane.check_index(dims, index)?;
    let (w, h, _) = plane.extent(dims);
    if values.len() != w * h {
        return Err(Error::DimMismatch(alloc::format!("{} values for a {w}x{h} plane", values.len())));
    }
    for v in 0..h {
        for u in 0..w {
            let [x, y, z] = plane.voxel(index, u, v);
            data[x + dims[0] * (y + dims[1] * z)] = values[u + w * v];
        }
    }
    Ok(())
}

/// Slice `index` of the first frame of `vol` on `plane`.
pub fn slice_extract(vol: &Volume3D, plane: PlaneId, index: usize) -> Result<Slice2D> {
    slice_extract_frame(vol, 0, plane, index)
}

pub fn slice_extract_frame(vol: &Volume3D, t: usize, plane: PlaneId, index: usize) -> Result<Slice2D> {
    if t >= vol.frames() {
        return Err(Error::range("frame", t as i64, vol.frames()));
    }
    let dims = vol.dims();
    let data = extract_plane(dims, vol.frame_data(t), plane, index)?;
    let (width, height, _) = plane.extent(dims);
    Ok(Slice2D {
        width,
        height,
        spacing: plane.in_plane_spacing(vol.spacing()),
        data,
    })
}

/// Maps a pointer position on one plane to the shared voxel coordinate that
/// the other two planes display.
pub fn linked_cursor(dims: [usize; 3], plane: PlaneId, index: usize, u: i64, v: i64) -> Result<[usize; 3]> {
    plane.check_index(dims, index)?;
    let (w, h, _) = plane.extent(dims);
    if u < 0 || u as usize >= w {
        return Err(Error::range("u", u, w));
    }
    if v < 0 || v as usize >= h {
        return Err(Error::range("v", v, h));
    }
    Ok(plane.voxel(index, u as usize, v as usize))
}

/// Slice indices the three planes should show for a cursor at `p`.
pub fn cursor_indices(p: [usize; 3]) -> [(PlaneId, usize); 3] {
    PlaneId::ALL.map(|plane| (plane, p[plane.fixed_axis()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn z_ramp() -> Volume3D {
        let data = (0..27).map(|i| (i / 9) as f64).collect();
        Volume3D::from_data([3, 3, 3], data).unwrap()
    }

    #[test]
    fn axial_slice_of_z_ramp_is_constant() {
        let s = slice_extract(&z_ramp(), PlaneId::Axial, 2).unwrap();
        assert_eq!((s.width, s.height), (3, 3));
        assert!(s.data.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn sagittal_slice_varies_with_z_along_v() {
        let s = slice_extract(&z_ramp(), PlaneId::Sagittal, 0).unwrap();
        for v in 0..3 {
            for u in 0..3 {
                assert_eq!(s.get(u, v), v as f64);
            }
        }
    }

    #[test]
    fn out_of_range_slice() {
        let err = slice_extract(&z_ramp(), PlaneId::Axial, 3).unwrap_err();
        assert_eq!(err, Error::range("axial", 3, 3));
    }

    #[test]
    fn cursor_conventions() {
        let dims = [10, 10, 10];
        assert_eq!(linked_cursor(dims, PlaneId::Axial, 5, 2, 3).unwrap(), [2, 3, 5]);
        assert_eq!(linked_cursor(dims, PlaneId::Coronal, 4, 1, 7).unwrap(), [1, 4, 7]);
        assert_eq!(linked_cursor(dims, PlaneId::Sagittal, 6, 1, 7).unwrap(), [6, 1, 7]);
        assert!(linked_cursor(dims, PlaneId::Axial, 5, 10, 0).is_err());
        assert!(linked_cursor(dims, PlaneId::Axial, 5, 0, -1).is_err());
        let idx = cursor_indices([2, 3, 5]);
        assert_eq!(idx, [(PlaneId::Axial, 5), (PlaneId::Coronal, 3), (PlaneId::Sagittal, 2)]);
    }

    #[test]
    fn write_plane_round_trip() {
        let dims = [2, 3, 4];
        let mut data = vec![0u16; 24];
        let vals: Vec<u16> = (1..=8).collect();
        write_plane(dims, &mut data, PlaneId::Coronal, 1, &vals).unwrap();
        assert_eq!(extract_plane(dims, &data, PlaneId::Coronal, 1).unwrap(), vals);
    }
}

//! Distance, angle, area/perimeter and volume measurements.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{atan2, sqrt};
use crate::plane::PlaneId;
use crate::segment::{Label, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MeasurementKind {
    Distance,
    Angle,
    AreaPerimeter,
    Volume,
}

impl MeasurementKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasurementKind::Distance => "distance",
            MeasurementKind::Angle => "angle",
            MeasurementKind::AreaPerimeter => "area_perimeter",
            MeasurementKind::Volume => "volume",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::Distance, Self::Angle, Self::AreaPerimeter, Self::Volume]
            .into_iter()
            .find(|k| k.name() == s)
    }

    pub fn units(self) -> &'static str {
        match self {
            MeasurementKind::Distance => "mm",
            MeasurementKind::Angle => "degrees",
            MeasurementKind::AreaPerimeter => "mm²;mm",
            MeasurementKind::Volume => "mm³",
        }
    }
}

/// One cataloged measurement.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurementRecord {
    pub id: u64,
    pub kind: MeasurementKind,
    pub value1: f64,
    pub value2: Option<f64>,
    pub units: String,
    pub plane: Option<PlaneId>,
    pub slice: Option<usize>,
    pub label: Option<Label>,
    pub points: Vec<Vec<f64>>,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

impl MeasurementRecord {
    pub fn new(id: u64, kind: MeasurementKind, value1: f64, value2: Option<f64>, timestamp: i64) -> Self {
        MeasurementRecord {
            id,
            kind,
            value1,
            value2,
            units: String::from(kind.units()),
            plane: None,
            slice: None,
            label: None,
            points: Vec::new(),
            timestamp,
        }
    }

    pub fn on_slice(mut self, plane: PlaneId, slice: usize) -> Self {
        self.plane = Some(plane);
        self.slice = Some(slice);
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.points = points;
        self
    }
}

fn check_point(dims: [usize; 3], p: [f64; 3]) -> Result<()> {
    for (axis, (&c, &n)) in p.iter().zip(dims.iter()).enumerate() {
        if !(c >= 0.0 && c <= (n - 1) as f64) {
            const AXES: [&str; 3] = ["x", "y", "z"];
            return Err(Error::range(AXES[axis], libm::floor(c) as i64, n));
        }
    }
    Ok(())
}

/// Physical distance in mm between two voxel coordinates.
pub fn distance(dims: [usize; 3], spacing: [f64; 3], p: [f64; 3], q: [f64; 3]) -> Result<f64> {
    check_point(dims, p)?;
    check_point(dims, q)?;
    Ok(distance_mm(spacing, p, q))
}

/// Same as [`distance`] without the bounds check.
pub fn distance_mm(spacing: [f64; 3], p: [f64; 3], q: [f64; 3]) -> f64 {
    sqrt((0..3).map(|i| ((p[i] - q[i]) * spacing[i]) * ((p[i] - q[i]) * spacing[i])).sum())
}

/// Angle in degrees, in `[0, 180)`, of segment `pq` against the plane's
/// horizontal axis, measured in physical space.
pub fn angle(p: [f64; 2], q: [f64; 2], spacing: [f64; 2]) -> Result<f64> {
    if p == q {
        return Err(Error::DegenerateSegment);
    }
    let du = (q[0] - p[0]) * spacing[0];
    let dv = (q[1] - p[1]) * spacing[1];
    let mut deg = atan2(dv, du).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if deg >= 180.0 {
        deg -= 180.0;
    }
    Ok(deg)
}

/// Area (mm²) and exposed-edge perimeter (mm) of `label` on one slice.
pub fn area_perimeter(map: &LabelMap, plane: PlaneId, index: usize, label: Label, spacing: [f64; 3]) -> Result<(f64, f64)> {
    let dims = map.dims();
    let slice = crate::plane::extract_plane(dims, map.data(), plane, index)?;
    let (w, h, _) = plane.extent(dims);
    let [su, sv] = plane.in_plane_spacing(spacing);
    let at = |u: isize, v: isize| -> bool {
        u >= 0 && v >= 0 && (u as usize) < w && (v as usize) < h && slice[u as usize + w * v as usize] == label
    };
    let mut pixels = 0u64;
    // exposed edges crossed moving along u have length sv, along v length su
    let mut u_edges = 0u64;
    let mut v_edges = 0u64;
    for v in 0..h as isize {
        for u in 0..w as isize {
            if !at(u, v) {
                continue;
            }
            pixels += 1;
            u_edges += (!at(u - 1, v)) as u64 + (!at(u + 1, v)) as u64;
            v_edges += (!at(u, v - 1)) as u64 + (!at(u, v + 1)) as u64;
        }
    }
    let area = pixels as f64 * (su * sv);
    let perimeter = u_edges as f64 * sv + v_edges as f64 * su;
    Ok((area, perimeter))
}

/// Volume in mm³ of all voxels holding `label`.
pub fn region_volume(map: &LabelMap, label: Label, spacing: [f64; 3]) -> f64 {
    map.count(label) as f64 * (spacing[0] * spacing[1] * spacing[2])
}

use alloc::format;
use alloc::vec::Vec;

use super::{Label, LabelMap};
use crate::error::{Error, Result};
use crate::math::{ceil, floor};
use crate::plane::PlaneId;

/// A closed polygon drawn on one slice, in continuous in-plane pixel
/// coordinates where pixel `(u, v)` has its center at `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolygonSelection {
    pub plane: PlaneId,
    pub index: usize,
    pub points: Vec<[f64; 2]>,
}

impl PolygonSelection {
    pub fn new(plane: PlaneId, index: usize, points: Vec<[f64; 2]>) -> Self {
        PolygonSelection { plane, index, points }
    }

    pub fn validate(&self, dims: [usize; 3]) -> Result<()> {
        if self.points.len() < 3 {
            return Err(Error::invalid(format!(
                "polygon needs at least 3 points, got {}",
                self.points.len()
            )));
        }
        self.plane.check_index(dims, self.index)?;
        let (w, h, _) = self.plane.extent(dims);
        for p in &self.points {
            let inside = p[0] >= -0.5 && p[0] <= w as f64 - 0.5 && p[1] >= -0.5 && p[1] <= h as f64 - 0.5;
            if !inside {
                return Err(Error::invalid(format!("polygon point {p:?} outside the {w}x{h} slice")));
            }
        }
        Ok(())
    }

    /// `(min, max)` corners of the vertices.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// In-plane pixels whose centers fall inside under the even-odd rule.
    /// Ties on edges follow a half-open rule: left/top edges in, right/bottom out.
    pub fn raster(&self, width: usize, height: usize) -> Vec<[usize; 2]> {
        let (lo, hi) = self.bounding_box();
        let v0 = ceil(lo[1]).max(0.0) as usize;
        let v1 = floor(hi[1]).min(height as f64 - 1.0);
        if v1 < 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        for v in v0..=v1 as usize {
            let y = v as f64;
            xs.clear();
            xs.extend(self.edges().filter_map(|(a, b)| edge_crossing(a, b, y)));
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let start = ceil(pair[0]).max(0.0);
                let end = (ceil(pair[1]) - 1.0).min(width as f64 - 1.0);
                if end < start {
                    continue;
                }
                for u in start as usize..=end as usize {
                    out.push([u, v]);
                }
            }
        }
        out
    }

    pub fn pixels(&self, dims: [usize; 3]) -> Result<Vec<[usize; 3]>> {
        self.validate(dims)?;
        let (w, h, _) = self.plane.extent(dims);
        Ok(self
            .raster(w, h)
            .into_iter()
            .map(|[u, v]| self.plane.voxel(self.index, u, v))
            .collect())
    }
}

/// x where edge `a→b` crosses the horizontal line `y`, using the half-open
/// rule: an edge counts when exactly one endpoint lies strictly above `y`.
#[inline]
pub(crate) fn edge_crossing(a: [f64; 2], b: [f64; 2], y: f64) -> Option<f64> {
    if (a[1] > y) != (b[1] > y) {
        Some(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]))
    } else {
        None
    }
}

/// Fills the polygon interior on its slice with `label`, overwriting.
pub fn polygon_fill(map: &mut LabelMap, sel: &PolygonSelection, label: Label) -> Result<usize> {
    if label == 0 {
        return Err(Error::invalid("fill label must be nonzero; use erase to clear"));
    }
    let pixels = sel.pixels(map.dims())?;
    Ok(pixels.into_iter().filter(|&p| map.set_at(p, label)).count())
}

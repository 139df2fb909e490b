use alloc::vec::Vec;

use super::{Label, LabelMap};
use crate::distance::signed_distance_2d;
use crate::error::{Error, Result};
use crate::plane::{extract_plane, PlaneId};

/// Shape-based interpolation of `label` across the slices strictly between
/// `a` and `b` on `plane`.
///
/// Each endpoint mask becomes a signed exact distance field (in-plane
/// physical units). Slice `k` receives the label wherever the linear blend
/// `(1−α)·D_a + α·D_b`, `α = (k−a)/(b−a)`, is non-negative. Endpoint slices
/// are not touched.
pub fn interpolate_between(map: &mut LabelMap, plane: PlaneId, a: usize, b: usize, label: Label) -> Result<usize> {
    let dims = map.dims();
    plane.check_index(dims, a)?;
    plane.check_index(dims, b)?;
    if b <= a + 1 {
        return Err(Error::NothingToFill { a, b });
    }
    let (w, h, _) = plane.extent(dims);
    let spacing = plane.in_plane_spacing(map.spacing());
    let field = |index: usize| -> Result<Vec<f64>> {
        let mask: Vec<bool> = extract_plane(dims, map.data(), plane, index)?
            .into_iter()
            .map(|l| l == label)
            .collect();
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyEndpoint { label, index });
        }
        Ok(signed_distance_2d(&mask, w, h, spacing))
    };
    let da = field(a)?;
    let db = field(b)?;

    let mut changed = 0;
    for k in a + 1..b {
        let alpha = (k - a) as f64 / (b - a) as f64;
        for v in 0..h {
            for u in 0..w {
                let i = u + w * v;
                let d = (1.0 - alpha) * da[i] + alpha * db[i];
                if d >= 0.0 && map.set_at(plane.voxel(k, u, v), label) {
                    changed += 1;
                }
            }
        }
    }
    Ok(changed)
}

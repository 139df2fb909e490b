//! Trilinear sampling and in-canvas rotation about the anatomical axes.

use alloc::format;
use alloc::vec::Vec;

use crate::affine::Affine;
use crate::error::{Error, Result};
use crate::math::{cos_sin_deg, floor};
use crate::plane::PlaneId;
use crate::volume::Volume3D;

/// Rotation about the normal of `axis`'s plane, around the grid center
/// `(n−1)/2`. Positive angles turn content from the plane's u axis toward
/// its v axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationSpec {
    pub axis: PlaneId,
    pub degrees: f64,
}

/// Trilinear interpolation of the first frame at continuous voxel `p`.
pub fn trilinear_sample(vol: &Volume3D, p: [f64; 3]) -> Result<f64> {
    if p.iter().any(|c| c.is_nan()) {
        return Err(Error::invalid("sample point has NaN coordinates"));
    }
    let dims = vol.dims();
    for a in 0..3 {
        if !(p[a] >= 0.0 && p[a] <= (dims[a] - 1) as f64) {
            return Err(Error::range("sample coordinate", floor(p[a]) as i64, dims[a]));
        }
    }
    Ok(sample(vol.frame_data(0), dims, p).unwrap_or(0.0))
}

/// `None` outside `[0, n−1]` on any axis.
fn sample(frame: &[f64], dims: [usize; 3], p: [f64; 3]) -> Option<f64> {
    let mut i0 = [0usize; 3];
    let mut i1 = [0usize; 3];
    let mut f = [0f64; 3];
    for a in 0..3 {
        let c = p[a];
        if !(c >= 0.0 && c <= (dims[a] - 1) as f64) {
            return None;
        }
        let base = floor(c);
        i0[a] = base as usize;
        i1[a] = (i0[a] + 1).min(dims[a] - 1);
        f[a] = c - base;
    }
    let at = |x: usize, y: usize, z: usize| frame[x + dims[0] * (y + dims[1] * z)] as f64;
    if f == [0.0; 3] {
        return Some(at(i0[0], i0[1], i0[2]));
    }
    let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;
    let c00 = lerp(at(i0[0], i0[1], i0[2]), at(i1[0], i0[1], i0[2]), f[0]);
    let c10 = lerp(at(i0[0], i1[1], i0[2]), at(i1[0], i1[1], i0[2]), f[0]);
    let c01 = lerp(at(i0[0], i0[1], i1[2]), at(i1[0], i0[1], i1[2]), f[0]);
    let c11 = lerp(at(i0[0], i1[1], i1[2]), at(i1[0], i1[1], i1[2]), f[0]);
    let c0 = lerp(c00, c10, f[1]);
    let c1 = lerp(c01, c11, f[1]);
    Some(lerp(c0, c1, f[2]))
}

/// Output-voxel → input-voxel map of a rotation on grid `dims`.
pub fn rotation_source_map(dims: [usize; 3], rot: RotationSpec) -> Result<Affine> {
    if !rot.degrees.is_finite() {
        return Err(Error::invalid(format!("rotation angle must be finite, got {}", rot.degrees)));
    }
    let (ua, va, _) = rot.axis.axes();
    let (c, s) = cos_sin_deg(rot.degrees);
    let center: [f64; 3] = core::array::from_fn(|a| (dims[a] as f64 - 1.0) / 2.0);
    // src = R(−θ)·(o − center) + center, acting on the (u, v) axes only
    let mut m = Affine::identity();
    m.0[ua][ua] = c;
    m.0[ua][va] = s;
    m.0[va][ua] = -s;
    m.0[va][va] = c;
    for r in [ua, va] {
        m.0[r][3] = center[r] - (m.0[r][ua] * center[ua] + m.0[r][va] * center[va]);
    }
    Ok(m)
}

/// Resamples the volume rotated within the same grid (fill 0 outside the
/// field of view). The affine is composed with the resampling map so each
/// output voxel keeps the world position of the point it was sampled from.
pub fn rotate_volume(vol: &Volume3D, rot: RotationSpec) -> Result<Volume3D> {
    let dims = vol.dims();
    let to_source = rotation_source_map(dims, rot)?;
    if to_source == Affine::identity() {
        return Ok(vol.clone());
    }
    let per = vol.voxels_per_frame();
    let mut data = Vec::with_capacity(vol.data().len());
    for t in 0..vol.frames() {
        let frame = vol.frame_data(t);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let src = to_source.apply([x as f64, y as f64, z as f64]);
                    data.push(sample(frame, dims, src).unwrap_or(0.0) as f64);
                }
            }
        }
    }
    debug_assert_eq!(data.len(), per * vol.frames());
    vol.with_data(data)?.with_affine(vol.affine().compose(&to_source))
}

use alloc::format;
use alloc::vec::Vec;

use super::{Label, LabelMap, Region};
use crate::error::{Error, Result};
use crate::plane::{extract_plane, PlaneId};
use crate::volume::Volume3D;

/// Clears pixels in `region` holding `target` (or any label when `None`).
pub fn erase(map: &mut LabelMap, region: &Region, target: Option<Label>) -> Result<usize> {
    let pixels = region.pixels(map.dims())?;
    let mut changed = 0;
    for p in pixels {
        let cur = map.get(p);
        let hit = match target {
            Some(t) => cur == t && t != 0,
            None => cur != 0,
        };
        if hit && map.set_at(p, 0) {
            changed += 1;
        }
    }
    Ok(changed)
}

/// Brush-style overwrite: every pixel in `region` becomes `new_label`.
pub fn overwrite_label(map: &mut LabelMap, region: &Region, new_label: Label) -> Result<usize> {
    let pixels = region.pixels(map.dims())?;
    Ok(pixels.into_iter().filter(|&p| map.set_at(p, new_label)).count())
}

/// Copies slice `index` onto the next `count` slices in `direction` (±1).
/// Validates all targets before writing anything.
pub fn copy_to_adjacent(map: &mut LabelMap, plane: PlaneId, index: usize, direction: i32, count: usize) -> Result<usize> {
    if direction != 1 && direction != -1 {
        return Err(Error::invalid(format!("direction must be +1 or -1, got {direction}")));
    }
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let dims = map.dims();
    plane.check_index(dims, index)?;
    let depth = plane.extent(dims).2;
    let last = index as i64 + direction as i64 * count as i64;
    if last < 0 || last >= depth as i64 {
        return Err(Error::range(plane.name(), last, depth));
    }
    let source = extract_plane(dims, map.data(), plane, index)?;
    let (w, h, _) = plane.extent(dims);
    let mut changed = 0;
    for step in 1..=count as i64 {
        let target = (index as i64 + direction as i64 * step) as usize;
        for v in 0..h {
            for u in 0..w {
                if map.set_at(plane.voxel(target, u, v), source[u + w * v]) {
                    changed += 1;
                }
            }
        }
    }
    Ok(changed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CombineOp {
    Add,
    Subtract,
}

/// Adds `label` from `other` into `target`, or subtracts it where both hold it.
pub fn mask_combine(target: &mut LabelMap, other: &LabelMap, label: Label, op: CombineOp) -> Result<usize> {
    target.check_congruent(other.dims())?;
    if label == 0 {
        return Err(Error::invalid("mask arithmetic needs a nonzero label"));
    }
    let mut changed = 0;
    for (i, &b) in other.data().iter().enumerate() {
        if b != label {
            continue;
        }
        let hit = match op {
            CombineOp::Add => target.set(i, label),
            CombineOp::Subtract => target.data()[i] == label && target.set(i, 0),
        };
        if hit {
            changed += 1;
        }
    }
    Ok(changed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MaskMode {
    Keep,
    Remove,
}

/// New volume with voxels outside (`Keep`) or inside (`Remove`) `label` set to `fill`.
pub fn apply_mask(vol: &Volume3D, map: &LabelMap, label: Label, mode: MaskMode, fill: f64) -> Result<Volume3D> {
    map.check_congruent(vol.dims())?;
    let per = vol.voxels_per_frame();
    let labels = map.data();
    let data: Vec<f64> = vol
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let inside = labels[i % per] == label;
            let keep = match mode {
                MaskMode::Keep => inside,
                MaskMode::Remove => !inside,
            };
            if keep { v } else { fill }
        })
        .collect();
    vol.with_data(data)
}

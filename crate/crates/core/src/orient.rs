//! Axis-code reorientation (RAS, LPS, ...).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affine::Affine;
use crate::error::{Error, Result};
use crate::volume::Volume3D;

/// Direction of one voxel axis in RAS world space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisDir {
    pub world_axis: usize,
    pub positive: bool,
}

impl AxisDir {
    fn from_letter(c: char) -> Option<Self> {
        let (world_axis, positive) = match c.to_ascii_uppercase() {
            'R' => (0, true),
            'L' => (0, false),
            'A' => (1, true),
            'P' => (1, false),
            'S' => (2, true),
            'I' => (2, false),
            _ => return None,
        };
        Some(AxisDir { world_axis, positive })
    }

    pub fn letter(self) -> char {
        const LETTERS: [[char; 2]; 3] = [['L', 'R'], ['P', 'A'], ['I', 'S']];
        LETTERS[self.world_axis][self.positive as usize]
    }
}

pub type Orientation = [AxisDir; 3];

pub fn parse_orientation(code: &str) -> Result<Orientation> {
    let letters: Vec<char> = code.chars().collect();
    if letters.len() != 3 {
        return Err(Error::invalid(format!("orientation code '{code}' must have 3 letters")));
    }
    let mut out = [AxisDir { world_axis: 0, positive: true }; 3];
    let mut seen = [false; 3];
    for (slot, &c) in out.iter_mut().zip(&letters) {
        let dir = AxisDir::from_letter(c)
            .ok_or_else(|| Error::invalid(format!("invalid orientation letter '{c}' in '{code}'")))?;
        if seen[dir.world_axis] {
            return Err(Error::invalid(format!("orientation code '{code}' repeats an axis")));
        }
        seen[dir.world_axis] = true;
        *slot = dir;
    }
    Ok(out)
}

pub fn orientation_code(o: &Orientation) -> String {
    o.iter().map(|d| d.letter()).collect()
}

/// Dominant world direction of each voxel axis of `affine`.
pub fn orientation_of(affine: &Affine) -> Result<Orientation> {
    let mut out = [AxisDir { world_axis: 0, positive: true }; 3];
    let mut seen = [false; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        let col = affine.axis(i);
        let norm = crate::math::sqrt(col.iter().map(|c| c * c).sum());
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| col[b].abs().total_cmp(&col[a].abs()));
        let (first, second) = (order[0], order[1]);
        if col[first].abs() - col[second].abs() <= 1e-6 * norm {
            return Err(Error::DegenerateOrientation(format!(
                "voxel axis {i} projects equally on two world axes"
            )));
        }
        if seen[first] {
            return Err(Error::DegenerateOrientation(format!(
                "two voxel axes point along world axis {first}"
            )));
        }
        seen[first] = true;
        *slot = AxisDir {
            world_axis: first,
            positive: col[first] > 0.0,
        };
    }
    Ok(out)
}

/// Permutes and flips the voxel grid so its axes follow `target`, keeping
/// every voxel's world position.
pub fn reorient(vol: &Volume3D, target: &str) -> Result<Volume3D> {
    let want = parse_orientation(target)?;
    let have = orientation_of(vol.affine())?;
    if want == have {
        return Ok(vol.clone());
    }
    // For output axis j: the source axis carrying the same world axis, and
    // whether it runs the opposite way.
    let mut src_axis = [0usize; 3];
    let mut flip = [false; 3];
    for (j, w) in want.iter().enumerate() {
        let i = have.iter().position(|h| h.world_axis == w.world_axis).unwrap();
        src_axis[j] = i;
        flip[j] = have[i].positive != w.positive;
    }
    let sd = vol.dims();
    let od = [sd[src_axis[0]], sd[src_axis[1]], sd[src_axis[2]]];

    // Output voxel o maps to source voxel s with s[src_axis[j]] = flip ? n-1-o[j] : o[j].
    let mut to_source = [[0.0; 4]; 4];
    to_source[3][3] = 1.0;
    for j in 0..3 {
        let i = src_axis[j];
        if flip[j] {
            to_source[i][j] = -1.0;
            to_source[i][3] = (sd[i] - 1) as f64;
        } else {
            to_source[i][j] = 1.0;
        }
    }
    let affine = vol.affine().compose(&Affine(to_source));
    let spacing = [
        vol.spacing()[src_axis[0]],
        vol.spacing()[src_axis[1]],
        vol.spacing()[src_axis[2]],
    ];

    let per_frame = vol.voxels_per_frame();
    let mut data = Vec::with_capacity(vol.data().len());
    for t in 0..vol.frames() {
        let frame = vol.frame_data(t);
        for z in 0..od[2] {
            for y in 0..od[1] {
                for x in 0..od[0] {
                    let o = [x, y, z];
                    let mut s = [0usize; 3];
                    for j in 0..3 {
                        let i = src_axis[j];
                        s[i] = if flip[j] { sd[i] - 1 - o[j] } else { o[j] };
                    }
                    data.push(frame[s[0] + sd[0] * (s[1] + sd[1] * s[2])]);
                }
            }
        }
    }
    debug_assert_eq!(data.len(), per_frame * vol.frames());
    Ok(Volume3D::with_frames(od, vol.nt(), spacing, affine, data)?
        .with_dtype(vol.dtype())
        .with_metadata(vol.metadata().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ramp(dims: [usize; 3], affine: Affine) -> Volume3D {
        let n = dims.iter().product::<usize>();
        Volume3D::new(dims, [1.0; 3], affine, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn identity_reorientation_is_bit_identical() {
        let v = ramp([3, 4, 5], Affine::identity());
        assert_eq!(reorient(&v, "RAS").unwrap(), v);
    }

    #[test]
    fn ras_to_las_flips_first_axis() {
        let v = ramp([3, 4, 5], Affine::identity());
        let out = reorient(&v, "LAS").unwrap();
        assert_eq!(out.affine().axis(0), [-1.0, 0.0, 0.0]);
        assert_eq!(out.affine().translation(), [2.0, 0.0, 0.0]);
        for z in 0..5 {
            for y in 0..4 {
                for x in 0..3 {
                    assert_eq!(out.get(x, y, z), v.get(2 - x, y, z));
                    let w_out = out.voxel_to_world([x as f64, y as f64, z as f64]);
                    let w_in = v.voxel_to_world([(2 - x) as f64, y as f64, z as f64]);
                    assert_eq!(w_out, w_in);
                }
            }
        }
    }

    #[test]
    fn permutation_preserves_world_positions() {
        let v = ramp([3, 4, 5], Affine::from_rows([[0.0, 0.0, -2.0, 5.0], [1.5, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, -3.0]]));
        assert_eq!(orientation_code(&orientation_of(v.affine()).unwrap()), "ASL");
        let out = reorient(&v, "RAS").unwrap();
        assert_eq!(out.dims(), [5, 3, 4]);
        assert_eq!(out.spacing(), [1.0; 3]); // spacing field travels with its axis
        for z in 0..4 {
            for y in 0..3 {
                for x in 0..5 {
                    let w = out.voxel_to_world([x as f64, y as f64, z as f64]);
                    let s = v.world_to_voxel(w).map(|c| libm::round(c) as usize);
                    assert_eq!(out.get(x, y, z), v.get(s[0], s[1], s[2]));
                }
            }
        }
        let back = reorient(&out, "ASL").unwrap();
        assert_eq!(back.data(), v.data());
        for (a, b) in back.affine().0.iter().flatten().zip(v.affine().0.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_codes() {
        let v = ramp([2, 2, 2], Affine::identity());
        assert!(matches!(reorient(&v, "RAX"), Err(Error::Validation(_))));
        assert!(matches!(reorient(&v, "RRS"), Err(Error::Validation(_))));
        assert!(matches!(reorient(&v, "RA"), Err(Error::Validation(_))));
    }

    #[test]
    fn ambiguous_affine() {
        let a = Affine::from_rows([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0], [0.0, -1.0, 1.0, 0.0]]);
        let v = Volume3D::new([2, 2, 2], [1.0; 3], a, vec![0.0; 8]).unwrap();
        assert!(matches!(reorient(&v, "LPS"), Err(Error::DegenerateOrientation(_))));
    }
}

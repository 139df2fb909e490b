//! Homogeneous voxel→world transforms.

use crate::error::{Error, Result};

/// Row-major 4×4 voxel→world(mm) matrix. The last row is always `[0, 0, 0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Affine(pub [[f64; 4]; 4]);

impl Default for Affine {
    fn default() -> Self {
        Self::identity()
    }
}

impl Affine {
    pub const fn identity() -> Self {
        Affine([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    pub fn from_spacing(spacing: [f64; 3]) -> Self {
        let mut m = Self::identity();
        for (i, s) in spacing.iter().enumerate() {
            m.0[i][i] = *s;
        }
        m
    }

    /// Builds from the three affine rows (`srow_x`, `srow_y`, `srow_z` in NIfTI terms).
    pub fn from_rows(rows: [[f64; 4]; 3]) -> Self {
        Affine([rows[0], rows[1], rows[2], [0.0, 0.0, 0.0, 1.0]])
    }

    pub fn rows(&self) -> [[f64; 4]; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    /// Column `i` of the linear part: the world direction of voxel axis `i`.
    pub fn axis(&self, i: usize) -> [f64; 3] {
        [self.0[0][i], self.0[1][i], self.0[2][i]]
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.0[0][3], self.0[1][3], self.0[2][3]]
    }

    pub fn determinant3(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Checks that all entries are finite and the linear part is invertible.
    pub fn validate(&self) -> Result<()> {
        let finite = self.0.iter().flatten().all(|v| v.is_finite());
        let det = self.determinant3();
        if !finite || det == 0.0 || !det.is_finite() {
            return Err(Error::DegenerateAffine);
        }
        Ok(())
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
        }
        out
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Affine) -> Affine {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.0[r][k] * other.0[k][c]).sum();
            }
        }
        Affine(out)
    }

    pub fn inverse(&self) -> Result<Affine> {
        self.validate()?;
        let m = &self.0;
        let det = self.determinant3();
        let inv_det = 1.0 / det;
        let mut lin = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                // adjugate: cofactor of (c, r)
                let (r1, r2) = others(c);
                let (c1, c2) = others(r);
                let minor = m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                lin[r][c] = sign * minor * inv_det;
            }
        }
        let t = self.translation();
        let mut out = Affine::identity();
        for r in 0..3 {
            out.0[r][..3].copy_from_slice(&lin[r]);
            out.0[r][3] = -(lin[r][0] * t[0] + lin[r][1] * t[1] + lin[r][2] * t[2]);
        }
        Ok(out)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

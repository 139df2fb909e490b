#![allow(dead_code)]

use neuroseg_core::{Affine, DataType, Volume3D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random values exactly representable in `dtype`.
pub fn random_values(dtype: DataType, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| match dtype {
            DataType::UInt8 => rng.random::<u8>() as f64,
            DataType::Int16 => rng.random::<i16>() as f64,
            DataType::UInt16 => rng.random::<u16>() as f64,
            DataType::Int32 => rng.random::<i32>() as f64,
            DataType::Float32 => ((rng.random::<f32>() - 0.5) * 1e4) as f64,
            DataType::Float64 => (rng.random::<f64>() - 0.5) * 1e6,
        })
        .collect()
}

pub fn random_volume(dims: [usize; 3], dtype: DataType, seed: u64) -> Volume3D {
    // NIfTI stores geometry as float32, so keep it exactly representable
    let affine = Affine::from_rows([[0.75, 0.0, 0.0, -30.0], [0.0, 1.25, 0.0, 12.5], [0.0, 0.0, 2.0, 4.0]]);
    Volume3D::new(dims, [0.75, 1.25, 2.0], affine, random_values(dtype, dims.iter().product(), seed))
        .unwrap()
        .with_dtype(dtype)
}

/// Bright ball of radius `r` centred at `c` on an `n³` grid.
pub fn ball(n: usize, c: f64, r: f64) -> Vec<bool> {
    let mut out = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                out.push(d2 <= r * r);
            }
        }
    }
    out
}

/// Minimal uchar NRRD with LPS space directions.
pub fn nrrd_bytes(dims: [usize; 3], data: &[u8], gzip: bool) -> Vec<u8> {
    let mut b = format!(
        "NRRD0004\ntype: uchar\ndimension: 3\nsizes: {} {} {}\nspace: left-posterior-superior\n\
         space directions: (1.5,0,0) (0,1.5,0) (0,0,3)\nspace origin: (4,5,6)\nencoding: {}\n\n",
        dims[0],
        dims[1],
        dims[2],
        if gzip { "gzip" } else { "raw" }
    )
    .into_bytes();
    if gzip {
        b.extend(neuroseg::nifti::gzip(data));
    } else {
        b.extend_from_slice(data);
    }
    b
}

pub fn decode_png(bytes: &[u8]) -> (png::OutputInfo, Vec<u8>) {
    let mut r = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().unwrap();
    let mut buf = vec![0; r.output_buffer_size().unwrap()];
    let info = r.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info, buf)
}

//! Discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 transform; other lengths go
//! through Bluestein's chirp-z reduction onto a power-of-two convolution.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::math::{cos, sin};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    pub fn scale(self, s: f64) -> Self {
        Complex::new(self.re * s, self.im * s)
    }

    pub fn norm(self) -> f64 {
        crate::math::hypot(self.re, self.im)
    }

    fn cis(theta: f64) -> Self {
        Complex::new(cos(theta), sin(theta))
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Precomputed transform for one length.
pub struct Fft {
    len: usize,
    kind: Kind,
}

enum Kind {
    Radix2 { twiddles: Vec<Complex> },
    Bluestein { chirp: Vec<Complex>, kernel_hat: Vec<Complex>, inner: alloc::boxed::Box<Fft> },
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        if len.is_power_of_two() {
            let twiddles = (0..len / 2)
                .map(|k| Complex::cis(-2.0 * PI * k as f64 / len as f64))
                .collect();
            return Fft { len, kind: Kind::Radix2 { twiddles } };
        }
        let m = (2 * len - 1).next_power_of_two();
        // chirp[k] = exp(-iπk²/n); k² taken mod 2n to keep the angle small.
        let chirp: Vec<Complex> = (0..len)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                Complex::cis(-PI * k2 / len as f64)
            })
            .collect();
        let mut kernel = vec![Complex::ZERO; m];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        let inner = Fft::new(m);
        inner.forward(&mut kernel);
        Fft {
            len,
            kind: Kind::Bluestein { chirp, kernel_hat: kernel, inner: alloc::boxed::Box::new(inner) },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform `X[k] = Σ x[n]·e^{-2πikn/N}`.
    pub fn forward(&self, buf: &mut [Complex]) {
        assert_eq!(buf.len(), self.len);
        match &self.kind {
            Kind::Radix2 { twiddles } => radix2(buf, twiddles),
            Kind::Bluestein { chirp, kernel_hat, inner } => {
                let m = kernel_hat.len();
                let mut a = vec![Complex::ZERO; m];
                for (k, x) in buf.iter().enumerate() {
                    a[k] = *x * chirp[k];
                }
                inner.forward(&mut a);
                for (x, h) in a.iter_mut().zip(kernel_hat) {
                    *x = *x * *h;
                }
                inner.inverse(&mut a);
                for (k, x) in buf.iter_mut().enumerate() {
                    *x = a[k] * chirp[k];
                }
            }
        }
    }

    /// Normalized inverse: `inverse(forward(x)) == x`.
    pub fn inverse(&self, buf: &mut [Complex]) {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf);
        let s = 1.0 / self.len as f64;
        for x in buf.iter_mut() {
            *x = x.conj().scale(s);
        }
    }
}

fn radix2(buf: &mut [Complex], twiddles: &[Complex]) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let step = n / size;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let t = buf[start + k + half] * twiddles[k * step];
                let u = buf[start + k];
                buf[start + k] = u + t;
                buf[start + k + half] = u - t;
            }
        }
        size *= 2;
    }
}

/// 2D transform of a `width × height` row-major grid, in place.
pub fn fft2(buf: &mut [Complex], width: usize, height: usize, inverse: bool) {
    assert_eq!(buf.len(), width * height);
    let row_plan = Fft::new(width);
    for row in buf.chunks_mut(width) {
        if inverse {
            row_plan.inverse(row);
        } else {
            row_plan.forward(row);
        }
    }
    let col_plan = Fft::new(height);
    let mut col = vec![Complex::ZERO; height];
    for u in 0..width {
        for v in 0..height {
            col[v] = buf[u + width * v];
        }
        if inverse {
            col_plan.inverse(&mut col);
        } else {
            col_plan.forward(&mut col);
        }
        for v in 0..height {
            buf[u + width * v] = col[v];
        }
    }
}

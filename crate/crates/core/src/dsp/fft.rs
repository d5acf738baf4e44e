//! Mixed-radix Cooley-Tukey FFT for arbitrary lengths.
//!
//! Each level splits by the smallest prime factor of the current length;
//! prime lengths fall back to direct evaluation. 320 = 2^6 * 5, so the
//! engine's transform is six radix-2 passes and one radix-5 pass.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
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
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    /// `exp(-2*pi*i*j/len)` for `j in 0..len`.
    twiddles: Vec<Complex>,
}

fn smallest_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut p = 3;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 2;
    }
    n
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let twiddles = (0..len)
            .map(|j| {
                let a = -2.0 * PI * j as f64 / len as f64;
                Complex::new(math::cos(a), math::sin(a))
            })
            .collect();
        Self { len, twiddles }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Forward transform, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
    pub fn forward(&self, input: &[Complex]) -> Vec<Complex> {
        assert_eq!(input.len(), self.len);
        let mut out = vec![Complex::ZERO; self.len];
        let mut scratch = Vec::new();
        self.transform(input, 0, 1, self.len, &mut out, &mut scratch);
        out
    }

    /// Unnormalised inverse scaled by `1/N`.
    pub fn inverse(&self, input: &[Complex]) -> Vec<Complex> {
        let conj: Vec<Complex> = input.iter().map(|c| c.conj()).collect();
        let scale = 1.0 / self.len as f64;
        self.forward(&conj)
            .into_iter()
            .map(|c| Complex::new(c.re * scale, -c.im * scale))
            .collect()
    }

    /// Real input, returns bins `0..=N/2`.
    pub fn forward_real(&self, input: &[f64]) -> Vec<Complex> {
        let x: Vec<Complex> = input.iter().map(|&r| Complex::new(r, 0.0)).collect();
        let mut full = self.forward(&x);
        full.truncate(self.len / 2 + 1);
        full
    }

    /// Inverse of [`forward_real`](Self::forward_real): Hermitian extension of
    /// the half spectrum, real part of the inverse transform.
    pub fn inverse_real(&self, half: &[Complex]) -> Vec<f64> {
        let n = self.len;
        assert_eq!(half.len(), n / 2 + 1);
        let mut full = vec![Complex::ZERO; n];
        full[..half.len()].copy_from_slice(half);
        for k in half.len()..n {
            full[k] = half[n - k].conj();
        }
        full[0].im = 0.0;
        if n.is_multiple_of(2) {
            full[n / 2].im = 0.0;
        }
        self.inverse(&full).into_iter().map(|c| c.re).collect()
    }

    fn transform(
        &self,
        input: &[Complex],
        start: usize,
        stride: usize,
        n: usize,
        out: &mut [Complex],
        scratch: &mut Vec<Complex>,
    ) {
        if n == 1 {
            out[0] = input[start];
            return;
        }
        let p = smallest_factor(n);
        let m = n / p;
        for r in 0..p {
            self.transform(
                input,
                start + r * stride,
                stride * p,
                m,
                &mut out[r * m..(r + 1) * m],
                scratch,
            );
        }
        // Butterfly: X[k0 + q m] = sum_r W_n^{r (k0 + q m)} Y_r[k0].
        let step = self.len / n;
        scratch.resize(p, Complex::ZERO);
        for k0 in 0..m {
            for r in 0..p {
                scratch[r] = out[r * m + k0];
            }
            for q in 0..p {
                let k = k0 + q * m;
                let mut acc = scratch[0];
                for (r, &y) in scratch.iter().enumerate().skip(1) {
                    let tw = self.twiddles[(r * k * step) % self.len];
                    acc = acc + tw * y;
                }
                out[k] = acc;
            }
        }
    }
}

//! Fourier-space operators on the uniform periodic grid.
//!
//! Coefficients are normalized so that `f(x) = sum_k c_k exp(i k x)`, i.e.
//! `c_k = (1/N) sum_j f_j exp(-i k x_j)`. With this convention
//! `int_0^{2 pi} |f|^2 = 2 pi sum_k |c_k|^2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::fft::Fft;
use crate::math;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct SpectralWorkspace {
    n: usize,
    fft: Fft,
    /// Integer wavenumbers in FFT storage order; the Nyquist slot holds `+N/2`.
    wavenumbers: Vec<f64>,
    dealias_cut: usize,
}

impl SpectralWorkspace {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::BadGridSize(n));
        }
        let wavenumbers = (0..n)
            .map(|j| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 })
            .collect();
        Ok(Self { n, fft: Fft::new(n), wavenumbers, dealias_cut: n / 3 })
    }

    pub fn n_grid(&self) -> usize {
        self.n
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest `|k|` kept by the 2/3 rule.
    pub fn dealias_cut(&self) -> usize {
        self.dealias_cut
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: len });
        }
        Ok(())
    }

    /// Normalized Fourier coefficients of a real field.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n);
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.forward(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }

    /// Real part of the synthesis `sum_k c_k exp(i k x_j)`.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.synthesize(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    fn synthesize(&self, buf: &mut [Complex64]) {
        // fft.inverse divides by n; coefficients already carry that factor.
        self.fft.inverse(buf);
        let n = self.n as f64;
        buf.iter_mut().for_each(|z| *z *= n);
    }

    /// Transforms two real fields with a single complex FFT.
    pub fn forward_pair(&self, a: &[f64], b: &[f64], out_a: &mut [Complex64], out_b: &mut [Complex64]) {
        let n = self.n;
        assert!(a.len() == n && b.len() == n && out_a.len() == n && out_b.len() == n);
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fft.forward(&mut z);
        let scale = 0.5 / n as f64;
        for k in 0..n {
            let zk = z[k];
            let zm = z[(n - k) % n].conj();
            out_a[k] = (zk + zm) * scale;
            // (zk - zm) / (2i)
            let d = (zk - zm) * scale;
            out_b[k] = Complex64::new(d.im, -d.re);
        }
    }

    /// Synthesizes two real fields from Hermitian coefficient arrays with a
    /// single complex FFT.
    pub fn inverse_pair(&self, ca: &[Complex64], cb: &[Complex64], a: &mut [f64], b: &mut [f64]) {
        let n = self.n;
        let mut z: Vec<Complex64> = ca
            .iter()
            .zip(cb)
            .map(|(&x, &y)| x + Complex64::new(-y.im, y.re))
            .collect();
        self.synthesize(&mut z);
        for j in 0..n {
            a[j] = z[j].re;
            b[j] = z[j].im;
        }
    }

    /// `(i k)^order` for the mode stored at `index`. The Nyquist mode has no
    /// real odd derivative and is mapped to zero.
    pub fn derivative_factor(&self, index: usize, order: u32) -> Complex64 {
        let k = self.wavenumbers[index];
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if index == self.n / 2 && order % 2 == 1 {
            return ZERO;
        }
        let mag = (0..order).fold(1.0, |acc, _| acc * k);
        match order % 4 {
            0 => Complex64::new(mag, 0.0),
            1 => Complex64::new(0.0, mag),
            2 => Complex64::new(-mag, 0.0),
            _ => Complex64::new(0.0, -mag),
        }
    }

    /// Multiplies coefficients by `(i k)^order` in place.
    pub fn differentiate_coeffs(&self, coeffs: &mut [Complex64], order: u32) {
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c *= self.derivative_factor(idx, order);
        }
    }

    /// Spectral `order`-th derivative of a real field.
    pub fn derivative(&self, f: &[f64], order: u32) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let mut c = self.forward(f);
        self.differentiate_coeffs(&mut c, order);
        Ok(self.inverse(&c))
    }

    /// Zeroes every mode with `|k|` above the 2/3-rule cut.
    pub fn dealias(&self, coeffs: &mut [Complex64]) {
        let cut = self.dealias_cut as f64;
        for (c, &k) in coeffs.iter_mut().zip(&self.wavenumbers) {
            if k.abs() > cut {
                *c = ZERO;
            }
        }
    }

    /// `H_k[f] = || d^k f ||^2_{L^2(0, 2 pi)}`.
    pub fn sobolev_hk(&self, f: &[f64], order: u32) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self.sobolev_hk_coeffs(&self.forward(f), order))
    }

    pub fn sobolev_hk_coeffs(&self, coeffs: &[Complex64], order: u32) -> f64 {
        2.0 * PI
            * coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (c * self.derivative_factor(i, order)).norm_sqr())
                .sum::<f64>()
    }

    /// `(d^p f, d^q g)_{L^2}` from coefficients.
    pub fn inner_product_coeffs(&self, f: &[Complex64], p: u32, g: &[Complex64], q: u32) -> f64 {
        2.0 * PI
            * f.iter()
                .zip(g)
                .enumerate()
                .map(|(i, (a, b))| {
                    let da = a * self.derivative_factor(i, p);
                    let db = b * self.derivative_factor(i, q);
                    (da * db.conj()).re
                })
                .sum::<f64>()
    }

    /// Solves `t^(-2 alpha) phi'' = -src` for a zero-mean source, in the
    /// zero-mean gauge.
    pub fn poisson_solve(&self, src: &[f64], t: f64, alpha: f64) -> Result<Vec<f64>> {
        self.check_len(src.len())?;
        let m = mean(src);
        let scale = src.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        if m.abs() > 1e-12 * scale {
            return Err(Error::NonZeroMean(m));
        }
        let mut c = self.forward(src);
        self.poisson_coeffs(&mut c, t, alpha);
        Ok(self.inverse(&c))
    }

    /// In-place `c_k <- t^(2 alpha) c_k / k^2`, `c_0 <- 0`.
    pub fn poisson_coeffs(&self, coeffs: &mut [Complex64], t: f64, alpha: f64) {
        let t2a = math::powf(t, 2.0 * alpha);
        coeffs[0] = ZERO;
        for (c, &k) in coeffs.iter_mut().zip(&self.wavenumbers).skip(1) {
            *c *= t2a / (k * k);
        }
    }

    /// Evaluates the trigonometric interpolant at an arbitrary `x`.
    pub fn interpolate(&self, coeffs: &[Complex64], x: f64) -> f64 {
        let n = self.n;
        let half = n / 2;
        let e1 = Complex64::new(math::cos(x), math::sin(x));
        let mut acc = coeffs[0].re;
        let mut ek = Complex64::new(1.0, 0.0);
        for k in 1..half {
            ek *= e1;
            // c_{-k} = conj(c_k) for real fields
            acc += 2.0 * (coeffs[k] * ek).re;
        }
        let xn = half as f64 * x;
        acc + coeffs[half].re * math::cos(xn)
    }
}

/// Grid mean `(1/N) sum f_j`.
pub fn mean(f: &[f64]) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    f.iter().sum::<f64>() / f.len() as f64
}

pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Hermitian-symmetric zero array of length `n`.
pub(crate) fn zeros(n: usize) -> Vec<Complex64> {
    vec![ZERO; n]
}

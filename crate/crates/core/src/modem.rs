//! Square M-QAM with Gray labelling, maximal ratio combining, and the
//! conditional bit error probability of square M-QAM under MRC.
//!
//! Bits per symbol is called `c` throughout (the same quantity is sometimes
//! written `k` for M-QAM; this crate uses `c` only). The first `c/2` bits of
//! a symbol select the in-phase level and the last `c/2` the quadrature
//! level, each through a Gray code.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Quadrature;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct QamParams {
    order: u32,
}

impl QamParams {
    /// `order` must be a power of four, at least 4.
    pub fn new(order: u32) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("{order}-QAM is not a square constellation")));
        }
        Ok(Self { order })
    }

    pub fn qpsk() -> Self {
        Self { order: 4 }
    }

    /// Constellation size `M`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Bits per symbol `c = log2 M`.
    pub fn bits(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// Levels per axis, `sqrt(M)`.
    pub fn side(&self) -> usize {
        1 << (self.bits() / 2)
    }

    /// `g = 3 / (2 (M - 1))`.
    pub fn g(&self) -> f64 {
        3.0 / (2.0 * (self.order as f64 - 1.0))
    }

    /// Average symbol energy (the constellation is normalized).
    pub fn es(&self) -> f64 {
        1.0
    }

    /// Squared minimum distance, `6 E_s / (M - 1)`.
    pub fn d_min_sq(&self) -> f64 {
        6.0 * self.es() / (self.order as f64 - 1.0)
    }

    fn scale(&self) -> f64 {
        (3.0 / (2.0 * (self.order as f64 - 1.0))).sqrt()
    }

    /// Amplitude of per-axis level index `idx`.
    fn level(&self, idx: usize) -> f64 {
        (2.0 * idx as f64 - (self.side() as f64 - 1.0)) * self.scale()
    }

    /// All points, indexed by the integer label (MSB first).
    pub fn constellation(&self) -> Vec<C64> {
        let c = self.bits();
        (0..self.order as usize)
            .map(|label| {
                let bits: Vec<u8> = (0..c).map(|i| ((label >> (c - 1 - i)) & 1) as u8).collect();
                self.map_symbol(&bits)
            })
            .collect()
    }

    fn map_symbol(&self, bits: &[u8]) -> C64 {
        let h = self.bits() / 2;
        C64::new(self.level(gray_to_index(&bits[..h])), self.level(gray_to_index(&bits[h..])))
    }
}

impl TryFrom<u32> for QamParams {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QamParams> for u32 {
    fn from(q: QamParams) -> u32 {
        q.order
    }
}

fn gray_to_index(bits: &[u8]) -> usize {
    let mut acc = 0usize;
    let mut prev = 0u8;
    for &b in bits {
        prev ^= b & 1;
        acc = (acc << 1) | prev as usize;
    }
    acc
}

fn index_to_gray(idx: usize, width: usize, out: &mut Vec<u8>) {
    let g = idx ^ (idx >> 1);
    out.extend((0..width).map(|i| ((g >> (width - 1 - i)) & 1) as u8));
}

pub fn modulate(params: &QamParams, bits: &[u8]) -> Result<Vec<C64>> {
    let c = params.bits();
    if !bits.len().is_multiple_of(c) {
        return Err(Error::LengthNotMultiple { len: bits.len(), multiple: c });
    }
    Ok(bits.chunks(c).map(|b| params.map_symbol(b)).collect())
}

fn nearest_index(params: &QamParams, x: f64) -> usize {
    let side = params.side() as f64;
    let idx = ((x / params.scale() + side - 1.0) / 2.0).round();
    idx.clamp(0.0, side - 1.0) as usize
}

/// Nearest constellation point.
pub fn slice(params: &QamParams, y: C64) -> C64 {
    C64::new(params.level(nearest_index(params, y.re)), params.level(nearest_index(params, y.im)))
}

pub fn demodulate_hard(params: &QamParams, symbols: &[C64]) -> Vec<u8> {
    let h = params.bits() / 2;
    let mut out = Vec::with_capacity(symbols.len() * params.bits());
    for s in symbols {
        index_to_gray(nearest_index(params, s.re), h, &mut out);
        index_to_gray(nearest_index(params, s.im), h, &mut out);
    }
    out
}

/// Max-log per-bit metrics for an unbiased soft symbol with complex noise
/// variance `noise_var`; positive favours bit 0.
pub fn demodulate_soft(params: &QamParams, y: C64, noise_var: f64, out: &mut Vec<f64>) {
    let h = params.bits() / 2;
    let side = params.side();
    for x in [y.re, y.im] {
        for bit in 0..h {
            let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
            for idx in 0..side {
                let g = idx ^ (idx >> 1);
                let d = (x - params.level(idx)).powi(2);
                if (g >> (h - 1 - bit)) & 1 == 0 {
                    d0 = d0.min(d);
                } else {
                    d1 = d1.min(d);
                }
            }
            out.push((d1 - d0) / noise_var);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrcOutput {
    /// `sum_l conj(h_l) r_l / sum_l |h_l|^2`, an unbiased estimate of the symbol.
    pub statistic: C64,
    /// `sum_l |h_l|^2`.
    pub gain: f64,
}

/// Maximal ratio combining of `branches` received through `gains`.
pub fn mrc_combine(branches: &[C64], gains: &[C64]) -> Result<MrcOutput> {
    if branches.len() != gains.len() || branches.is_empty() {
        return Err(Error::LengthMismatch { expected: gains.len(), got: branches.len() });
    }
    if gains.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let gain: f64 = gains.iter().map(|h| h.norm_sqr()).sum();
    let acc: C64 = branches.iter().zip(gains).map(|(r, h)| h.conj() * r).sum();
    let statistic = if gain > 0.0 { acc / gain } else { C64::new(0.0, 0.0) };
    Ok(MrcOutput { statistic, gain })
}

/// Output SNR of a linear combiner with weights `conj(h_l)` for symbol
/// energy `es` and per-branch complex noise variance `n0`.
pub fn mrc_output_snr(gains: &[C64], es: f64, n0: f64) -> f64 {
    let signal: C64 = gains.iter().map(|h| h.conj() * h).sum();
    let noise: f64 = gains.iter().map(|h| h.norm_sqr()).sum::<f64>() * n0;
    if noise == 0.0 {
        return 0.0;
    }
    signal.norm_sqr() * es / noise
}

/// Gaussian tail `Q(x)` for `x >= 0` from the finite-range form
/// `(1/pi) int_0^{pi/2} exp(-x^2 / (2 sin^2 t)) dt`.
pub fn q_function(x: f64, quad: &Quadrature) -> Result<f64> {
    craig_integral(x, PI / 2.0, quad)
}

/// `Q(x)^2` for `x >= 0` from `(1/pi) int_0^{pi/4} exp(-x^2 / (2 sin^2 t)) dt`.
pub fn q_squared(x: f64, quad: &Quadrature) -> Result<f64> {
    craig_integral(x, PI / 4.0, quad)
}

fn craig_integral(x: f64, upper: f64, quad: &Quadrature) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::InvalidParameter(format!("Q-function argument {x} must be non-negative")));
    }
    let a = x * x / 2.0;
    let v = quad.integrate(
        |t| {
            let s = t.sin();
            if s == 0.0 { 0.0 } else { (-a / (s * s)).exp() }
        },
        0.0,
        upper,
    )?;
    Ok(v / PI)
}

/// Leading coefficient `(4/c)(1 - 1/sqrt M)`.
pub fn ber_coefficient(params: &QamParams) -> f64 {
    4.0 / params.bits() as f64 * (1.0 - 1.0 / (params.order() as f64).sqrt())
}

/// Conditional bit error probability of square M-QAM at post-processing SNR
/// `gamma`:
/// `(4/c)(1 - 1/sqrt M) Q(sqrt(2 g gamma)) - (4/c)(1 - 1/sqrt M)^2 Q^2(sqrt(2 g gamma))`.
pub fn conditional_ber(params: &QamParams, gamma: f64, quad: &Quadrature) -> Result<f64> {
    if gamma < 0.0 || gamma.is_nan() {
        return Err(Error::InvalidParameter(format!("SNR {gamma} must be non-negative")));
    }
    let x = (2.0 * params.g() * gamma).sqrt();
    let a = ber_coefficient(params);
    let b = a * (1.0 - 1.0 / (params.order() as f64).sqrt());
    let v = a * q_function(x, quad)? - b * q_squared(x, quad)?;
    Ok(v.clamp(0.0, 1.0))
}

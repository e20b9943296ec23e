//! Nakagami-m fading samples and the flat MIMO channel `y = H s + n`.
//!
//! Envelopes are drawn as the square root of a gamma variate with shape `m`
//! and mean one, which is exactly the squared-envelope law of the Nakagami-m
//! density with unit mean-square value.
//!
//! Channel-matrix recipe for Monte Carlo: every entry of `H` is an
//! independent Nakagami-m envelope times a uniform phase, so `E|h_ij|^2 = 1`
//! and `m = 1` gives i.i.d. circular complex Gaussian entries. The correlated
//! model (`rho`) is evaluated analytically only; no correlated sampler
//! exists.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    /// Nakagami shape, at least 0.5.
    pub m: f64,
    /// Branch correlation in `[0, 1]`, analytic use only.
    #[serde(default)]
    pub rho: f64,
}

impl FadingParams {
    pub fn new(m: f64, rho: f64) -> Result<Self> {
        let p = Self { m, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn rayleigh() -> Self {
        Self { m: 1.0, rho: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.5) || !self.m.is_finite() {
            return Err(Error::InvalidParameter(format!("Nakagami m = {} must be >= 0.5", self.m)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("correlation {} outside [0, 1]", self.rho)));
        }
        Ok(())
    }
}

/// Sampler for unit mean-square Nakagami-m envelopes.
#[derive(Debug, Clone, Copy)]
pub struct Nakagami {
    power: Gamma<f64>,
}

impl Nakagami {
    pub fn new(m: f64) -> Result<Self> {
        FadingParams::new(m, 0.0)?;
        let power = Gamma::new(m, 1.0 / m).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self { power })
    }

    pub fn envelope<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng).sqrt()
    }

    /// Envelope times a uniform phase.
    pub fn gain<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let a = self.envelope(rng);
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        C64::from_polar(a, phi)
    }
}

/// `count` i.i.d. envelopes; deterministic for a given seed.
pub fn sample_nakagami(params: &FadingParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let sampler = Nakagami::new(params.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.envelope(&mut rng)).collect())
}

/// `rx x tx` matrix with independent Nakagami-m entries and uniform phases.
pub fn random_channel<R: Rng + ?Sized>(rx: usize, tx: usize, fading: &Nakagami, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rx, tx, |_, _| fading.gain(rng))
}

/// Circular complex Gaussian sample with variance `var` (`var/2` per dimension).
pub fn complex_gaussian<R: Rng + ?Sized>(var: f64, rng: &mut R) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// `y = H s + n` with circular Gaussian noise of variance `noise_var` per entry.
pub fn apply_channel_with<R: Rng + ?Sized>(
    h: &DMatrix<C64>,
    s: &[C64],
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if s.len() != h.ncols() {
        return Err(Error::Dimension(format!("{} symbols for {} transmit antennas", s.len(), h.ncols())));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance {noise_var} must be >= 0")));
    }
    Ok((0..h.nrows())
        .map(|r| {
            let clean: C64 = (0..h.ncols()).map(|c| h[(r, c)] * s[c]).sum();
            if noise_var > 0.0 { clean + complex_gaussian(noise_var, rng) } else { clean }
        })
        .collect())
}

/// Seeded form of [`apply_channel_with`].
pub fn apply_channel(h: &DMatrix<C64>, s: &[C64], noise_var: f64, seed: u64) -> Result<Vec<C64>> {
    apply_channel_with(h, s, noise_var, &mut ChaCha8Rng::seed_from_u64(seed))
}

//! Average BER of square M-QAM with MRC over Nakagami-m fading, pairwise
//! error probabilities of coded paths, the RCPC union bound, and the full
//! coded V-BLAST system curve.
//!
//! All finite-range integrals use the Craig forms of `Q` and `Q^2`, so the
//! fading average reduces to an integral of moment generating functions
//! over `theta`.
//!
//! SNR conventions: the conditional BER takes the symbol SNR
//! `gamma = c * E_b/N_0`; the pairwise error probability takes the mean
//! per-symbol SNR `c * R_c * E_b/N_0`.

use std::f64::consts::PI;

use libm::{erfc, lgamma};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{random_channel, FadingParams, Nakagami};
use crate::convcode::DistanceSpectrum;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mimo::{eta_mmse, ChannelRealization, Criterion, EtaMode};
use crate::modem::{ber_coefficient, QamParams};
use crate::quad::Quadrature;
use crate::rcpc::CodeRate;
use crate::C64;

fn check_snr(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mean SNR {x} must be finite and >= 0")))
    }
}

/// `(A, B)` with `P = A Q - B Q^2`.
fn qam_coefficients(qam: &QamParams) -> (f64, f64) {
    let a = ber_coefficient(qam);
    (a, a * (1.0 - 1.0 / (qam.order() as f64).sqrt()))
}

/// Craig-form average: `(A/pi) int_0^{pi/2} mgf - (B/pi) int_0^{pi/4} mgf`.
fn craig_average<F: Fn(f64) -> f64>(qam: &QamParams, mgf: F, quad: &Quadrature) -> Result<f64> {
    let (a, b) = qam_coefficients(qam);
    let kernel = |t: f64| {
        let s = t.sin();
        if s == 0.0 { 0.0 } else { mgf(s * s) }
    };
    let first = quad.integrate(kernel, 0.0, PI / 2.0)?;
    let second = quad.integrate(kernel, 0.0, PI / 4.0)?;
    Ok(((a * first - b * second) / PI).clamp(0.0, 1.0))
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Nakagami m = {m} must be positive")))
    }
}

/// Average BER with independent branches of mean symbol SNRs `gammas`.
pub fn avg_ber_branches(qam: &QamParams, m: f64, gammas: &[f64], quad: &Quadrature) -> Result<f64> {
    check_m(m)?;
    if gammas.is_empty() {
        return Err(Error::InvalidParameter("at least one branch is required".into()));
    }
    for &g in gammas {
        check_snr(g)?;
    }
    let g = qam.g();
    craig_average(qam, |s2| gammas.iter().map(|gb| (1.0 + g * gb / (m * s2)).powf(-m)).product(), quad)
}

/// `r = L + 2 sqrt(rho) / (1 - sqrt(rho)) (L - (1 - sqrt(rho)^L) / (1 - sqrt(rho)))`.
pub fn corr_factor_r(l: usize, rho: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter("branch count must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "correlation {rho} outside [0, 1); r tends to L^2 as rho -> 1"
        )));
    }
    let s = rho.sqrt();
    // expanded as L + 2 s sum_j (L - 1 - j) s^j, stable as s -> 1
    let tail: f64 = (0..l.saturating_sub(1)).map(|j| (l - 1 - j) as f64 * s.powi(j as i32)).sum();
    Ok(l as f64 + 2.0 * s * tail)
}

/// Average BER over `L` equally correlated branches, each of mean symbol SNR `gamma`.
pub fn avg_ber_correlated(qam: &QamParams, m: f64, l: usize, gamma: f64, rho: f64, quad: &Quadrature) -> Result<f64> {
    check_m(m)?;
    check_snr(gamma)?;
    let r = corr_factor_r(l, rho)?;
    let lf = l as f64;
    let g = qam.g();
    craig_average(qam, |s2| (1.0 + gamma * g * r / (m * lf * s2)).powf(-m * lf * lf / r), quad)
}

/// Independent (`rho` ignored) or correlated average over `l` equal branches.
pub fn avg_ber(
    qam: &QamParams,
    fading: &FadingParams,
    l: usize,
    gamma: f64,
    correlated: bool,
    quad: &Quadrature,
) -> Result<f64> {
    if correlated {
        avg_ber_correlated(qam, fading.m, l, gamma, fading.rho, quad)
    } else {
        if l == 0 {
            return Err(Error::InvalidParameter("branch count must be >= 1".into()));
        }
        avg_ber_branches(qam, fading.m, &vec![gamma; l], quad)
    }
}

/// Pairwise error probability of a weight-`d` path: the average of
/// `Q(sqrt(2 g alpha))` with `alpha` gamma distributed (shape `m d`, mean
/// `d * theta`), where `theta` is the mean symbol SNR.
pub fn p_d(d: u32, qam: &QamParams, m: f64, theta: f64, quad: &Quadrature) -> Result<f64> {
    check_m(m)?;
    check_snr(theta)?;
    if d == 0 {
        return Err(Error::InvalidParameter("path weight must be >= 1".into()));
    }
    let (g, md) = (qam.g(), m * d as f64);
    let v = quad.integrate(
        |t| {
            let s = t.sin();
            if s == 0.0 { 0.0 } else { (1.0 + g * theta / (m * s * s)).powf(-md) }
        },
        0.0,
        PI / 2.0,
    )?;
    Ok(v / PI)
}

/// [`p_d`] computed directly on the SNR axis: with `alpha = (theta / m) t`
/// and `t = s^(1 / (m d))` the gamma density becomes `exp(-t) / Gamma(m d + 1)`
/// on `s in [0, inf)`, and `Q` is taken from `erfc`.
pub fn p_d_direct(d: u32, qam: &QamParams, m: f64, theta: f64, quad: &Quadrature) -> Result<f64> {
    check_m(m)?;
    check_snr(theta)?;
    if d == 0 {
        return Err(Error::InvalidParameter("path weight must be >= 1".into()));
    }
    let (g, md) = (qam.g(), m * d as f64);
    let scale = theta / m;
    let q = |t: f64| 0.5 * erfc((g * scale * t).sqrt());
    if md >= 1.0 {
        let ln_norm = -lgamma(md);
        return quad.integrate_to_infinity(|t| q(t) * ((md - 1.0) * t.ln() - t + ln_norm).exp(), 0.0);
    }
    // s = t^md removes the density singularity at the origin
    let norm = (-lgamma(md + 1.0)).exp();
    quad.integrate_to_infinity(|s| q(s.powf(1.0 / md)) * (-s.powf(1.0 / md)).exp() * norm, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionBound {
    /// Truncated sum, unclipped.
    pub raw: f64,
    /// `min(raw, 1)`.
    pub clipped: f64,
    /// Last included term over the sum.
    pub tail_ratio: f64,
    /// `(d, c_d P_d / P_c)` per included weight.
    pub terms: Vec<(u32, f64)>,
}

/// `(1/P_c) sum_d c_d P_d` over the spectrum entries.
pub fn union_bound<F>(spectrum: &DistanceSpectrum, period: usize, mut p_d: F) -> Result<UnionBound>
where
    F: FnMut(u32) -> Result<f64>,
{
    if spectrum.is_empty() {
        return Err(Error::InvalidParameter("empty distance spectrum".into()));
    }
    if period == 0 {
        return Err(Error::InvalidParameter("puncturing period must be >= 1".into()));
    }
    let mut terms = Vec::new();
    for (d, c) in spectrum.terms() {
        terms.push((d, c as f64 * p_d(d)? / period as f64));
    }
    let raw: f64 = terms.iter().map(|t| t.1).sum();
    let tail_ratio = match terms.last() {
        Some(&(_, last)) if raw > 0.0 => last / raw,
        _ => 0.0,
    };
    Ok(UnionBound { raw, clipped: raw.min(1.0), tail_ratio, terms })
}

/// Shape family of the V-BLAST envelope factor `2 a^(2a) / Gamma(a)^2 x^(4a-1) exp(-a x^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VblastFactor {
    /// `a = (|M_r - M_t| + 1) / 4`, as printed in the final BER expressions.
    #[default]
    Literal,
    /// `a = (M_r + M_t - 1) / 4`, the diversity-derived shape.
    Derived,
    /// Factor left out (plain MRC system).
    Omitted,
}

impl VblastFactor {
    pub fn shape(self, rx: usize, tx: usize) -> Option<f64> {
        match self {
            VblastFactor::Literal => Some((rx.abs_diff(tx) as f64 + 1.0) / 4.0),
            VblastFactor::Derived => Some((rx + tx) as f64 / 4.0 - 0.25),
            VblastFactor::Omitted => None,
        }
    }

    /// Natural log of the factor at `x`; zero when omitted.
    pub fn ln_value(self, rx: usize, tx: usize, x: f64) -> f64 {
        match self.shape(rx, tx) {
            None => 0.0,
            Some(a) => {
                std::f64::consts::LN_2 + 2.0 * a * a.ln() - 2.0 * lgamma(a) + (4.0 * a - 1.0) * x.ln() - a * x * x
            }
        }
    }
}

/// Number of MRC branches in the average-BER factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchCount {
    /// `M_r M_t`, as in the total-SNR sum.
    #[default]
    Product,
    /// `min(M_r, M_t)` SVD subchannels.
    Subchannels,
}

impl BranchCount {
    pub fn count(self, rx: usize, tx: usize) -> usize {
        match self {
            BranchCount::Product => rx * tx,
            BranchCount::Subchannels => rx.min(tx),
        }
    }
}

/// Channel ensemble used to average the post-processing SNR gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub realizations: usize,
    pub seed: u64,
}

impl Default for Ensemble {
    fn default() -> Self {
        Self { realizations: 2000, seed: 0x0a11_ce55 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    pub qam: QamParams,
    pub fading: FadingParams,
    pub rx: usize,
    pub tx: usize,
    pub criterion: Criterion,
    pub correlated: bool,
    pub rate: CodeRate,
    pub period: usize,
    pub spectrum: DistanceSpectrum,
    pub grid_db: Vec<f64>,
    pub factor: VblastFactor,
    pub branches: BranchCount,
    pub ensemble: Ensemble,
    pub eta: EtaMode,
    #[serde(skip, default)]
    pub quad: Quadrature,
}

impl AnalyticConfig {
    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        if self.rx == 0 || self.tx == 0 {
            return Err(Error::InvalidParameter("antenna counts must be >= 1".into()));
        }
        if self.tx > self.rx {
            return Err(Error::RankDeficient);
        }
        if self.correlated && self.fading.rho >= 1.0 {
            return Err(Error::InvalidParameter("correlated mode needs rho < 1".into()));
        }
        if self.grid_db.is_empty() {
            return Err(Error::InvalidParameter("empty E_b/N_0 grid".into()));
        }
        if self.grid_db.iter().any(|x| !x.is_finite()) || self.grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("E_b/N_0 grid must be finite and strictly increasing".into()));
        }
        if self.spectrum.is_empty() {
            return Err(Error::InvalidParameter("empty distance spectrum".into()));
        }
        if self.period == 0 || self.rate.info == 0 || self.rate.info > self.rate.coded {
            return Err(Error::InvalidParameter(format!("invalid code rate {} / period {}", self.rate, self.period)));
        }
        if self.ensemble.realizations == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one realization".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebn0_db: f64,
    /// Ensemble-mean post-processing `E_b/N_0` (linear).
    pub post_ebn0: f64,
    pub p_b_qam: f64,
    /// Natural log of the V-BLAST envelope factor.
    pub ln_factor: f64,
    pub union_bound: f64,
    pub tail_ratio: f64,
    /// `log10` of the product, finite even where `raw` underflows.
    pub log10_raw: f64,
    pub raw: f64,
    pub clipped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub criterion: Criterion,
    pub rx: usize,
    pub tx: usize,
    pub m: f64,
    pub rho: f64,
    pub correlated: bool,
    pub rate: CodeRate,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// `E_b/N_0` (dB) where `log10_raw` first falls to `log10(level)`,
    /// linearly interpolated in `(dB, log10 BER)`.
    pub fn crossing_db(&self, level: f64) -> Option<f64> {
        let target = level.log10();
        self.points.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.log10_raw >= target && b.log10_raw <= target && a.log10_raw != b.log10_raw {
                let t = (a.log10_raw - target) / (a.log10_raw - b.log10_raw);
                Some(a.ebn0_db + t * (b.ebn0_db - a.ebn0_db))
            } else if a.log10_raw == target {
                Some(a.ebn0_db)
            } else {
                None
            }
        })
    }
}

/// Channel draws shared by every grid point of a curve.
#[derive(Debug, Clone)]
pub struct PostSnrEnsemble {
    channels: Vec<DMatrix<C64>>,
    zf_gain: f64,
}

impl PostSnrEnsemble {
    /// Draws `realizations` `rx x tx` channels with Nakagami-`m` entries;
    /// rank-deficient draws are redrawn.
    pub fn new(rx: usize, tx: usize, m: f64, ensemble: &Ensemble) -> Result<Self> {
        if tx > rx {
            return Err(Error::RankDeficient);
        }
        let fading = Nakagami::new(m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed);
        let mut channels = Vec::with_capacity(ensemble.realizations);
        let mut sum = 0.0;
        while channels.len() < ensemble.realizations {
            let h = random_channel(rx, tx, &fading, &mut rng);
            let real = ChannelRealization::new(h, 0.0)?;
            if real.is_rank_deficient() {
                continue;
            }
            sum += real.r_diag().iter().map(|r| r * r).sum::<f64>();
            channels.push(real.h().clone());
        }
        Ok(Self { channels, zf_gain: sum / (ensemble.realizations * tx) as f64 })
    }

    /// Mean of `R_ii^2` over streams and realizations.
    pub fn zf_gain(&self) -> f64 {
        self.zf_gain
    }

    /// Mean post-processing `E_b/N_0` at input `ebn0` (linear). The MMSE
    /// increment is evaluated with noise variance `1 / (c ebn0)`.
    pub fn post_ebn0(&self, criterion: Criterion, ebn0: f64, qam: &QamParams, eta: EtaMode) -> Result<f64> {
        let zf = self.zf_gain * ebn0;
        match criterion {
            Criterion::Zf => Ok(zf),
            Criterion::Mmse => {
                let c = qam.bits() as f64;
                let noise_var = 1.0 / (c * ebn0);
                let mut total = 0.0;
                let mut count = 0usize;
                for (i, h) in self.channels.iter().enumerate() {
                    let real = ChannelRealization::new(h.clone(), noise_var)?;
                    let mode = match eta {
                        EtaMode::Sampled { draws, seed } => {
                            EtaMode::Sampled { draws, seed: seed.wrapping_add(i as u64) }
                        }
                        e => e,
                    };
                    let eta = eta_mmse(&real, mode)?;
                    total += eta.iter().sum::<f64>();
                    count += eta.len();
                }
                Ok(zf + total / count as f64 / c)
            }
        }
    }
}

/// Evaluates the coded V-BLAST BER product
/// `P_b,QAM(post) * factor(post) * (1/P_c) sum c_d P_d(post)` on the grid.
pub fn system_ber(config: &AnalyticConfig, exec: Execution) -> Result<BerCurve> {
    config.validate()?;
    let ensemble = PostSnrEnsemble::new(config.rx, config.tx, config.fading.m, &config.ensemble)?;
    system_ber_with(config, &ensemble, exec)
}

/// [`system_ber`] with a precomputed channel ensemble.
pub fn system_ber_with(config: &AnalyticConfig, ensemble: &PostSnrEnsemble, exec: Execution) -> Result<BerCurve> {
    config.validate()?;
    let c = config.qam.bits() as f64;
    let l = config.branches.count(config.rx, config.tx);
    let points = exec.try_map_indexed(config.grid_db.len(), |i| {
        let ebn0_db = config.grid_db[i];
        let x = 10f64.powf(ebn0_db / 10.0);
        let post = ensemble.post_ebn0(config.criterion, x, &config.qam, config.eta)?;
        let p_b_qam = avg_ber(&config.qam, &config.fading, l, c * post, config.correlated, &config.quad)?;
        let theta = c * config.rate.value() * post;
        let ub = union_bound(&config.spectrum, config.period, |d| {
            p_d(d, &config.qam, config.fading.m, theta, &config.quad)
        })?;
        let ln_factor = config.factor.ln_value(config.rx, config.tx, post);
        let ln_total = p_b_qam.ln() + ln_factor + ub.raw.ln();
        if ln_total.is_nan() {
            return Err(Error::NonFinite);
        }
        let raw = ln_total.exp();
        Ok(BerPoint {
            ebn0_db,
            post_ebn0: post,
            p_b_qam,
            ln_factor,
            union_bound: ub.raw,
            tail_ratio: ub.tail_ratio,
            log10_raw: ln_total / std::f64::consts::LN_10,
            raw,
            clipped: raw.min(1.0),
        })
    })?;
    Ok(BerCurve {
        criterion: config.criterion,
        rx: config.rx,
        tx: config.tx,
        m: config.fading.m,
        rho: config.fading.rho,
        correlated: config.correlated,
        rate: config.rate,
        points,
    })
}

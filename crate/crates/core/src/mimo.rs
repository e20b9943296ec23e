//! Flat MIMO channel algebra and V-BLAST nulling/cancellation.
//!
//! Conventions: `H` is `M_r x M_t`, streams are columns. The QR factors are
//! normalised so that every `R_ii` is real and non-negative. Post-processing
//! gains follow the QR ordering, where stream `i` sees streams `1..i-1` as
//! residual interference; [`zf_detection_gains`] gives the gains of the
//! sequence actually used by [`vblast_detect`].

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::modem::{slice, QamParams};
use crate::rcpc::{CodeRate, RcpcFamily};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Zf,
    Mmse,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::Zf => "ZF",
            Criterion::Mmse => "MMSE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Streams `1, 2, .., M_t`.
    #[default]
    Natural,
    /// Extension: at each step the undetected stream with the smallest
    /// estimation error variance goes first (ties to the lower index).
    BestFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub criterion: Criterion,
    #[serde(default)]
    pub ordering: Ordering,
}

impl DetectionConfig {
    pub fn new(criterion: Criterion) -> Self {
        Self { criterion, ordering: Ordering::Natural }
    }
}

/// SVD `H = U D V*` with `D` as a plain list of descending singular values.
#[derive(Debug, Clone)]
pub struct Subchannels {
    pub u: DMatrix<C64>,
    pub singular: Vec<f64>,
    pub v: DMatrix<C64>,
}

impl Subchannels {
    /// Eigenvalues of `H H*` for the `min(M_r, M_t)` subchannels.
    pub fn lambda(&self) -> Vec<f64> {
        self.singular.iter().map(|s| s * s).collect()
    }

    /// `M_r x M_t` diagonal matrix of singular values.
    pub fn d_matrix(&self) -> DMatrix<C64> {
        let mut d = DMatrix::zeros(self.u.ncols(), self.v.ncols());
        for (i, &s) in self.singular.iter().enumerate() {
            d[(i, i)] = C64::new(s, 0.0);
        }
        d
    }
}

fn check_finite(h: &DMatrix<C64>) -> Result<()> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(Error::Dimension("empty channel matrix".into()));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Full SVD with unitary `U` (`M_r x M_r`) and `V` (`M_t x M_t`).
pub fn svd_subchannels(h: &DMatrix<C64>) -> Result<Subchannels> {
    check_finite(h)?;
    let (rows, cols) = h.shape();
    let l = rows.min(cols);
    let svd = h.clone().svd(true, true);
    let (u_thin, v_t) = (svd.u.ok_or(Error::NonFinite)?, svd.v_t.ok_or(Error::NonFinite)?);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_cols: Vec<DVector<C64>> = order.iter().map(|&i| u_thin.column(i).into_owned()).collect();
    let v_cols: Vec<DVector<C64>> = order.iter().map(|&i| v_t.row(i).adjoint()).collect();
    Ok(Subchannels {
        u: complete_unitary(&u_cols, rows),
        singular,
        v: complete_unitary(&v_cols, cols),
    })
}

/// Extends orthonormal columns to a square unitary matrix by Gram-Schmidt
/// against the standard basis.
fn complete_unitary(cols: &[DVector<C64>], dim: usize) -> DMatrix<C64> {
    let mut basis: Vec<DVector<C64>> = cols.to_vec();
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = DVector::from_fn(dim, |i, _| if i == e { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        for _ in 0..2 {
            for b in &basis {
                let p = b.dotc(&v);
                v -= b * p;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    DMatrix::from_columns(&basis)
}

/// One channel draw with its cached decompositions and noise power.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h: DMatrix<C64>,
    noise_var: f64,
    svd: Subchannels,
    q: DMatrix<C64>,
    r: DMatrix<C64>,
}

impl ChannelRealization {
    pub fn new(h: DMatrix<C64>, noise_var: f64) -> Result<Self> {
        check_finite(&h)?;
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidParameter(format!("noise variance {noise_var} must be finite and >= 0")));
        }
        let svd = svd_subchannels(&h)?;
        let qr = h.clone().qr();
        let (mut q, mut r) = (qr.q(), qr.r());
        for i in 0..r.nrows() {
            let d = r[(i, i)];
            let mag = d.norm();
            if mag > 0.0 {
                let phase = d / mag;
                for row in 0..q.nrows() {
                    q[(row, i)] *= phase;
                }
                for col in 0..r.ncols() {
                    r[(i, col)] *= phase.conj();
                }
            }
        }
        Ok(Self { h, noise_var, svd, q, r })
    }

    pub fn h(&self) -> &DMatrix<C64> {
        &self.h
    }

    pub fn rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn tx(&self) -> usize {
        self.h.ncols()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn subchannels(&self) -> &Subchannels {
        &self.svd
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.svd.lambda()
    }

    pub fn q(&self) -> &DMatrix<C64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<C64> {
        &self.r
    }

    /// `R_ii`, real and non-negative.
    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.r.nrows().min(self.r.ncols())).map(|i| self.r[(i, i)].re).collect()
    }

    pub fn is_rank_deficient(&self) -> bool {
        rank_deficient(&self.h, &self.svd.singular)
    }
}

fn rank_deficient(h: &DMatrix<C64>, singular: &[f64]) -> bool {
    if h.ncols() > h.nrows() {
        return true;
    }
    let max = singular.first().copied().unwrap_or(0.0);
    let min = singular.last().copied().unwrap_or(0.0);
    min <= max * 1e-12 * h.nrows().max(h.ncols()) as f64 || max == 0.0
}

fn hermitian_inverse(a: DMatrix<C64>) -> Result<DMatrix<C64>> {
    a.cholesky().map(|c| c.inverse()).ok_or(Error::RankDeficient)
}

/// ZF: `(H* H)^-1 H*`; MMSE: `(H* H + s2 I)^-1 H*`.
pub fn nulling_matrix(h: &DMatrix<C64>, noise_var: f64, criterion: Criterion) -> Result<DMatrix<C64>> {
    check_finite(h)?;
    let gram = h.adjoint() * h;
    let kernel = match criterion {
        Criterion::Zf => {
            let sv = h.singular_values();
            let mut s: Vec<f64> = sv.iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            if rank_deficient(h, &s) {
                return Err(Error::RankDeficient);
            }
            gram
        }
        Criterion::Mmse => {
            if !(noise_var >= 0.0) {
                return Err(Error::InvalidParameter(format!("noise variance {noise_var} must be >= 0")));
            }
            let n = gram.nrows();
            gram + DMatrix::<C64>::identity(n, n) * C64::new(noise_var, 0.0)
        }
    };
    Ok(hermitian_inverse(kernel)? * h.adjoint())
}

/// Per-stream soft output of the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamEstimate {
    /// Bias-compensated decision statistic.
    pub statistic: C64,
    /// Residual noise-plus-interference variance of `statistic` for unit-energy symbols.
    pub noise_var: f64,
    /// Hard decision used for cancellation.
    pub hard: C64,
}

/// Detection order for `config` without running the detector.
pub fn detection_order(h: &DMatrix<C64>, noise_var: f64, config: &DetectionConfig) -> Result<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..h.ncols()).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let k = pick(h, &remaining, noise_var, config)?;
        order.push(remaining.remove(k));
    }
    Ok(order)
}

fn sub_columns(h: &DMatrix<C64>, cols: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(h.nrows(), cols.len(), |r, c| h[(r, cols[c])])
}

fn error_covariance(a: &DMatrix<C64>, noise_var: f64, criterion: Criterion) -> Result<DMatrix<C64>> {
    let n = a.ncols();
    let reg = if criterion == Criterion::Mmse { noise_var } else { 0.0 };
    hermitian_inverse(a.adjoint() * a + DMatrix::<C64>::identity(n, n) * C64::new(reg, 0.0))
}

fn pick(h: &DMatrix<C64>, remaining: &[usize], noise_var: f64, config: &DetectionConfig) -> Result<usize> {
    match config.ordering {
        Ordering::Natural => Ok(0),
        Ordering::BestFirst => {
            let p = error_covariance(&sub_columns(h, remaining), noise_var, config.criterion)?;
            let mut best = 0;
            for k in 1..remaining.len() {
                if p[(k, k)].re < p[(best, best)].re {
                    best = k;
                }
            }
            Ok(best)
        }
    }
}

/// Iterative nulling and cancellation with hard slicing. Returns one
/// estimate per stream in stream order.
pub fn vblast_detect_soft(
    h: &DMatrix<C64>,
    y: &[C64],
    noise_var: f64,
    config: &DetectionConfig,
    params: &QamParams,
) -> Result<Vec<StreamEstimate>> {
    check_finite(h)?;
    if y.len() != h.nrows() {
        return Err(Error::Dimension(format!("{} received samples for {} antennas", y.len(), h.nrows())));
    }
    if config.criterion == Criterion::Zf && h.ncols() > h.nrows() {
        return Err(Error::RankDeficient);
    }
    let mut residual = DVector::from_column_slice(y);
    let mut remaining: Vec<usize> = (0..h.ncols()).collect();
    let mut out = vec![None; h.ncols()];
    while !remaining.is_empty() {
        let a = sub_columns(h, &remaining);
        let k = pick(h, &remaining, noise_var, config)?;
        let w = nulling_matrix(&a, noise_var, config.criterion)?;
        let wk = w.row(k);
        let z = (wk * &residual)[(0, 0)];
        let (statistic, var) = match config.criterion {
            Criterion::Zf => (z, noise_var * wk.norm_squared()),
            Criterion::Mmse => {
                let mu = (wk * a.column(k))[(0, 0)].re;
                if mu <= 0.0 {
                    return Err(Error::NonFinite);
                }
                (z / mu, ((1.0 - mu) / mu).max(0.0))
            }
        };
        let hard = slice(params, statistic);
        let stream = remaining.remove(k);
        residual -= h.column(stream) * hard;
        out[stream] = Some(StreamEstimate { statistic, noise_var: var, hard });
    }
    Ok(out.into_iter().map(|e| e.expect("every stream detected")).collect())
}

/// Hard symbol estimates in stream order.
pub fn vblast_detect(
    h: &DMatrix<C64>,
    y: &[C64],
    noise_var: f64,
    config: &DetectionConfig,
    params: &QamParams,
) -> Result<Vec<C64>> {
    Ok(vblast_detect_soft(h, y, noise_var, config, params)?.into_iter().map(|e| e.hard).collect())
}

/// Post-nulling ZF SNR gains (`1 / [(A* A)^-1]_kk`) of each stream for the
/// detection sequence of `config`, in stream order.
pub fn zf_detection_gains(h: &DMatrix<C64>, noise_var: f64, config: &DetectionConfig) -> Result<Vec<f64>> {
    let order = detection_order(h, noise_var, config)?;
    let mut gains = vec![0.0; h.ncols()];
    for (step, &stream) in order.iter().enumerate() {
        let mut cols = vec![stream];
        cols.extend(order[step + 1..].iter().copied());
        let p = error_covariance(&sub_columns(h, &cols), 0.0, Criterion::Zf)?;
        gains[stream] = 1.0 / p[(0, 0)].re;
    }
    Ok(gains)
}

/// How the MMSE increment `beta* (A* A + s2 I)^-1 beta` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    /// Expectation over `beta ~ CN(0, I)`: the trace of the kernel.
    Expected,
    /// Mean of `draws` sampled quadratic forms.
    Sampled { draws: usize, seed: u64 },
}

/// Increment for every stream `i`, with `A` the first `i - 1` columns of `H`.
pub fn eta_mmse(real: &ChannelRealization, mode: EtaMode) -> Result<Vec<f64>> {
    if real.noise_var() <= 0.0 {
        return Err(Error::InvalidParameter("MMSE increment needs noise variance > 0".into()));
    }
    let h = real.h();
    let mut rng = match mode {
        EtaMode::Sampled { draws: 0, .. } => {
            return Err(Error::InvalidParameter("eta sampling needs at least one draw".into()))
        }
        EtaMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        EtaMode::Expected => None,
    };
    (0..real.tx())
        .map(|i| {
            if i == 0 {
                return Ok(0.0);
            }
            let a = h.columns(0, i).into_owned();
            let kernel = error_covariance(&a, real.noise_var(), Criterion::Mmse)?;
            match (&mut rng, mode) {
                (Some(rng), EtaMode::Sampled { draws, .. }) => {
                    let mut acc = 0.0;
                    for _ in 0..draws {
                        let beta = DVector::from_fn(i, |_, _| complex_gaussian(1.0, rng));
                        acc += beta.dotc(&(&kernel * &beta)).re;
                    }
                    Ok(acc / draws as f64)
                }
                _ => Ok(kernel.trace().re),
            }
        })
        .collect()
}

/// Per-stream post-processing `E_b/N_0`: `R_ii^2 x` under ZF, plus the MMSE
/// increment divided by the bits per symbol under MMSE.
pub fn post_snr(
    real: &ChannelRealization,
    criterion: Criterion,
    ebn0_in: f64,
    params: &QamParams,
    eta: EtaMode,
) -> Result<Vec<f64>> {
    if real.tx() > real.rx() {
        return Err(Error::RankDeficient);
    }
    let zf = post_snr_zf(&real.r_diag(), ebn0_in);
    match criterion {
        Criterion::Zf => {
            if real.is_rank_deficient() {
                return Err(Error::RankDeficient);
            }
            Ok(zf)
        }
        Criterion::Mmse => {
            let c = params.bits() as f64;
            let eta = eta_mmse(real, eta)?;
            Ok(zf.iter().zip(eta).map(|(z, e)| z + e / c).collect())
        }
    }
}

/// ZF post-processing values from the diagonal of `R`.
pub fn post_snr_zf(r_diag: &[f64], ebn0_in: f64) -> Vec<f64> {
    r_diag.iter().map(|r| r * r * ebn0_in).collect()
}

/// Rate assignment per stream, as member indices of an RCPC family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAllocation {
    pub member: Vec<usize>,
    pub rate: Vec<CodeRate>,
}

/// The strongest half of the streams (by `quality`, ties to the lower index)
/// gets the lowest family rate, the rest the next higher rate. Note that the
/// strong subchannels receive the strong code.
pub fn allocate_rates(quality: &[f64], family: &RcpcFamily) -> Result<RateAllocation> {
    if quality.is_empty() {
        return Err(Error::InvalidParameter("rate allocation needs at least one stream".into()));
    }
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty RCPC family".into()));
    }
    let strong = (0..family.len())
        .min_by(|&a, &b| family.rate(a).value().total_cmp(&family.rate(b).value()))
        .expect("non-empty family");
    let low = family.rate(strong).value();
    let weak = (0..family.len())
        .filter(|&i| family.rate(i).value() > low)
        .min_by(|&a, &b| family.rate(a).value().total_cmp(&family.rate(b).value()));
    let mut order: Vec<usize> = (0..quality.len()).collect();
    order.sort_by(|&a, &b| quality[b].total_cmp(&quality[a]).then(a.cmp(&b)));
    let top = quality.len().div_ceil(2);
    let mut member = vec![strong; quality.len()];
    for &stream in &order[top..] {
        member[stream] = weak.ok_or_else(|| {
            Error::InvalidParameter("family needs two distinct rates for more than one stream".into())
        })?;
    }
    let rate = member.iter().map(|&m| family.rate(m)).collect();
    Ok(RateAllocation { member, rate })
}

/// Nakagami shape `(M_r + M_t - 1) / 4` of the combined V-BLAST branch.
pub fn effective_m(rx: usize, tx: usize) -> f64 {
    (rx + tx) as f64 / 4.0 - 0.25
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_svd() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let s = svd_subchannels(&h).unwrap();
        assert_eq!(s.lambda().iter().map(|x| x.round()).collect::<Vec<_>>(), vec![9.0, 1.0]);
        let back = &s.u * s.d_matrix() * s.v.adjoint();
        assert!((back - h).norm() < 1e-12);
    }

    #[test]
    fn nulling_examples() {
        let h = DMatrix::<C64>::identity(2, 2) * c(2.0, 0.0);
        let w = nulling_matrix(&h, 0.0, Criterion::Zf).unwrap();
        assert!((w - DMatrix::<C64>::identity(2, 2) * c(0.5, 0.0)).norm() < 1e-15);
        let w = nulling_matrix(&DMatrix::identity(3, 3), 1.0, Criterion::Mmse).unwrap();
        assert!((w - DMatrix::<C64>::identity(3, 3) * c(0.5, 0.0)).norm() < 1e-15);
        let singular = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(nulling_matrix(&singular, 0.0, Criterion::Zf), Err(Error::RankDeficient));
        assert_eq!(nulling_matrix(&DMatrix::identity(2, 3), 0.0, Criterion::Zf), Err(Error::RankDeficient));
    }

    #[test]
    fn post_snr_examples() {
        assert_eq!(post_snr_zf(&[1.0, 1.0, 1.0], 2.5), vec![2.5; 3]);
        assert_eq!(post_snr_zf(&[2.0, 1.0], 1.0), vec![4.0, 1.0]);
        let real = ChannelRealization::new(DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]), 0.5).unwrap();
        assert_eq!(post_snr(&real, Criterion::Zf, 1.0, &QamParams::qpsk(), EtaMode::Expected).unwrap(), vec![4.0, 1.0]);
        // orthogonal columns: eta of stream 2 is 1 / (4 + 0.5)
        let mmse = post_snr(&real, Criterion::Mmse, 1.0, &QamParams::qpsk(), EtaMode::Expected).unwrap();
        assert!((mmse[1] - (1.0 + 1.0 / 4.5 / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn r_diagonal_is_nonnegative_real() {
        let h = DMatrix::from_row_slice(2, 2, &[c(-1.0, 2.0), c(0.3, 0.1), c(0.5, -0.5), c(-2.0, 0.0)]);
        let real = ChannelRealization::new(h.clone(), 0.1).unwrap();
        for i in 0..2 {
            assert!(real.r()[(i, i)].re >= 0.0 && real.r()[(i, i)].im.abs() < 1e-15);
        }
        assert!((real.q() * real.r() - h).norm() < 1e-12);
    }

    #[test]
    fn effective_m_values() {
        assert_eq!(effective_m(2, 2), 0.75);
        assert_eq!(effective_m(4, 2), 1.25);
        assert_eq!(effective_m(1, 1), 0.25);
    }
}

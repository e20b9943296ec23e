//! Adaptive Gauss–Legendre quadrature on finite intervals.
//!
//! Each panel is integrated with an `order`-point rule and again on its two
//! halves; the panel is accepted when the two agree to the requested
//! tolerance (the finer value is kept). Semi-infinite ranges are handled by
//! mapping `[0, inf)` onto `[0, 1)` with `x = t / (1 - t)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub order: usize,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-300, order: 10, max_panels: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of accepted panel discrepancies.
    pub error: f64,
    /// Accepted panel boundaries, ascending.
    pub breakpoints: Vec<f64>,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn cached_rule(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static R10: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R20: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match order {
        10 => R10.get_or_init(|| gauss_legendre(10)),
        20 => R20.get_or_init(|| gauss_legendre(20)),
        _ => panic!("unsupported rule order {order}; use 10 or 20"),
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    rule.0.iter().zip(&rule.1).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>() * half
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_detailed(f, a, b).map(|r| r.value)
    }

    pub fn integrate_detailed<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        let rule = cached_rule(self.order);
        // rough magnitude for the relative criterion
        let coarse = panel(&f, a, b, rule).abs();
        let mut scale = coarse;
        let mut stack = vec![(a, b, coarse)];
        let mut accepted: Vec<(f64, f64, f64, f64)> = Vec::new();
        let mut panels = 0usize;
        while let Some((lo, hi, whole)) = stack.pop() {
            panels += 1;
            let mid = 0.5 * (lo + hi);
            let left = panel(&f, lo, mid, rule);
            let right = panel(&f, mid, hi, rule);
            let fine = left + right;
            let err = (fine - whole).abs();
            let allowed = (self.rel_tol * scale).max(self.abs_tol) * (hi - lo) / (b - a);
            if err <= allowed || panels >= self.max_panels || (hi - lo) <= (b - a) * 1e-15 {
                if panels >= self.max_panels && err > allowed {
                    let achieved = accepted.iter().map(|p| p.3).sum::<f64>() + err;
                    let total: f64 = accepted.iter().map(|p| p.2).sum::<f64>() + fine;
                    return Err(Error::QuadratureDiverged {
                        achieved: achieved / total.abs().max(f64::MIN_POSITIVE),
                        tolerance: self.rel_tol,
                    });
                }
                accepted.push((lo, hi, fine, err));
            } else {
                scale = scale.max(fine.abs());
                stack.push((mid, hi, right));
                stack.push((lo, mid, left));
            }
        }
        accepted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let value = accepted.iter().map(|p| p.2).sum();
        let error = accepted.iter().map(|p| p.3).sum();
        let mut breakpoints: Vec<f64> = accepted.iter().map(|p| p.0).collect();
        breakpoints.push(b);
        Ok(Integral { value, error, breakpoints })
    }

    /// Integral over `[a, inf)` via `x = a + t / (1 - t)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> Result<f64> {
        self.integrate(
            |t| {
                if t >= 1.0 {
                    return 0.0;
                }
                let s = 1.0 - t;
                let v = f(a + t / s) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            },
            0.0,
            1.0,
        )
    }

    /// Relative change of the integral when every accepted panel is split in
    /// two and evaluated with a 20-point rule.
    pub fn self_convergence<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        let base = self.integrate_detailed(&f, a, b)?;
        let rule = cached_rule(20);
        let refined: f64 = base
            .breakpoints
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                panel(&f, w[0], mid, rule) + panel(&f, mid, w[1], rule)
            })
            .sum();
        Ok((refined - base.value).abs() / base.value.abs().max(f64::MIN_POSITIVE))
    }
}

//! Laguerre polynomials, normalized Laguerre functions, their oscillatory
//! asymptotic and the radial projection kernel `varsigma_k`.

use crate::error::{Error, Result};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

pub const DEFAULT_K_MAX: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaguerreIndex {
    pub k: usize,
    pub alpha: f64,
}

impl LaguerreIndex {
    pub fn new(k: usize, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::domain(format!("Laguerre type {alpha} must be >= 0")));
        }
        if k > DEFAULT_K_MAX {
            return Err(Error::domain(format!("k = {k} exceeds k_max = {DEFAULT_K_MAX}")));
        }
        Ok(LaguerreIndex { k, alpha })
    }
}

/// Dimension, Laguerre index and eigenvalue `mu = 2k + d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpectralIndex {
    pub d: u32,
    pub k: usize,
    pub mu: u64,
}

impl SpectralIndex {
    pub fn new(d: u32, k: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("dimension d must be at least 1"));
        }
        Ok(SpectralIndex {
            d,
            k,
            mu: 2 * k as u64 + d as u64,
        })
    }

    pub fn from_mu(d: u32, mu: u64) -> Result<Self> {
        if d == 0 || mu < d as u64 || (mu - d as u64) % 2 != 0 {
            return Err(Error::domain(format!("{mu} is not of the form 2k + {d}")));
        }
        Self::new(d, ((mu - d as u64) / 2) as usize)
    }
}

/// `L_k^alpha(t)` by the three-term recurrence.
pub fn laguerre_poly(idx: LaguerreIndex, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("Laguerre argument {t} must be >= 0")));
    }
    let a = idx.alpha;
    let (mut l0, mut l1) = (1.0, 1.0 + a - t);
    if idx.k == 0 {
        return Ok(l0);
    }
    for j in 1..idx.k {
        let jf = j as f64;
        let l2 = ((2.0 * jf + 1.0 + a - t) * l1 - (jf + a) * l0) / (jf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    if l1.is_finite() {
        Ok(l1)
    } else {
        Err(Error::Budget(format!(
            "L_{}^{}({t}) is out of floating-point range",
            idx.k, idx.alpha
        )))
    }
}

/// `ℒ_0..=ℒ_kmax` of type `alpha` at `t`, by the normalized recurrence.
pub fn normalized_laguerre_all(kmax: usize, alpha: f64, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("Laguerre argument {t} must be >= 0")));
    }
    let mut out = vec![0.0; kmax + 1];
    if t == 0.0 && alpha > 0.0 {
        return Ok(out);
    }
    let mut log_scale = if alpha > 0.0 { 0.5 * alpha * t.ln() } else { 0.0 } - 0.5 * t
        - 0.5 * ln_gamma(alpha + 1.0);
    let emit = |p: f64, ls: f64| {
        if p == 0.0 {
            0.0
        } else {
            p.signum() * (p.abs().ln() + ls).exp()
        }
    };
    let mut p0 = 1.0;
    out[0] = emit(p0, log_scale);
    if kmax == 0 {
        return Ok(out);
    }
    let mut p1 = (alpha + 1.0 - t) / (alpha + 1.0).sqrt();
    out[1] = emit(p1, log_scale);
    for k in 1..kmax {
        let kf = k as f64;
        let p2 = ((2.0 * kf + alpha + 1.0 - t) * p1 - (kf * (kf + alpha)).sqrt() * p0)
            / ((kf + 1.0) * (kf + 1.0 + alpha)).sqrt();
        p0 = p1;
        p1 = p2;
        let m = p1.abs().max(p0.abs());
        if m > 1e150 {
            p0 /= m;
            p1 /= m;
            log_scale += m.ln();
        }
        out[k + 1] = emit(p1, log_scale);
    }
    Ok(out)
}

pub fn normalized_laguerre(idx: LaguerreIndex, t: f64) -> Result<f64> {
    Ok(normalized_laguerre_all(idx.k, idx.alpha, t)?[idx.k])
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticEval {
    pub main: f64,
    pub error_envelope: f64,
    pub nu: f64,
    pub theta: f64,
    /// False when `t` lies outside the validated window `[nu/64, nu/2]`.
    pub in_window: bool,
}

pub fn laguerre_asymptotic(idx: LaguerreIndex, t: f64) -> Result<AsymptoticEval> {
    if idx.k == 0 {
        return Err(Error::domain("the oscillatory asymptotic needs k >= 1"));
    }
    let nu = 4.0 * idx.k as f64 + 2.0 * idx.alpha + 2.0;
    if !(t > 0.0 && t < nu) {
        return Err(Error::domain(format!("t = {t} must lie in (0, {nu})")));
    }
    let theta = (t / nu).sqrt().acos();
    let sign = if idx.k % 2 == 0 { 1.0 } else { -1.0 };
    let main = (2.0 / PI).sqrt() * sign * (t * (nu - t)).powf(-0.25)
        * ((nu * (2.0 * theta - (2.0 * theta).sin()) - PI) / 4.0).cos();
    let error_envelope = nu.powf(0.25) * (nu - t).powf(-1.75) + (nu * t).powf(-0.75);
    Ok(AsymptoticEval {
        main,
        error_envelope,
        nu,
        theta,
        in_window: t >= nu / 64.0 && t <= nu / 2.0,
    })
}

/// `varsigma_k(r) = L_k^{d-1}(r^2/2) exp(-r^2/4)` through the polynomial.
pub fn varsigma_poly(s: SpectralIndex, r: f64) -> Result<f64> {
    let idx = LaguerreIndex::new(s.k, s.d as f64 - 1.0)?;
    let t = 0.5 * r * r;
    Ok(laguerre_poly(idx, t)? * (-0.5 * t).exp())
}

/// `varsigma_k` through the normalized Laguerre function.
pub fn varsigma_normalized(s: SpectralIndex, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(varsigma_at_origin(s));
    }
    let alpha = s.d as f64 - 1.0;
    let l = normalized_laguerre_all(s.k, alpha, 0.5 * r * r)?[s.k];
    let log_c = 0.5 * (ln_gamma(s.k as f64 + alpha + 1.0) - ln_gamma(s.k as f64 + 1.0))
        + 0.5 * alpha * 2f64.ln()
        - alpha * r.ln();
    Ok(l * log_c.exp())
}

/// `varsigma_k(0) = binom(k + d - 1, k)`.
pub fn varsigma_at_origin(s: SpectralIndex) -> f64 {
    let a = s.d as f64 - 1.0;
    (ln_gamma(s.k as f64 + a + 1.0) - ln_gamma(s.k as f64 + 1.0) - ln_gamma(a + 1.0))
        .exp()
        .round()
}

/// The projection kernel as a radial function; stable for all `k <= k_max`.
pub fn kernel_varsigma(s: SpectralIndex, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius {r} must be >= 0")));
    }
    varsigma_normalized(s, r)
}

/// `varsigma_0..=varsigma_kmax` at radius `r`.
pub fn varsigma_all(d: u32, kmax: usize, r: f64) -> Result<Vec<f64>> {
    let alpha = d as f64 - 1.0;
    if r == 0.0 {
        return (0..=kmax)
            .map(|k| SpectralIndex::new(d, k).map(varsigma_at_origin))
            .collect();
    }
    let l = normalized_laguerre_all(kmax, alpha, 0.5 * r * r)?;
    let base = 0.5 * alpha * 2f64.ln() - alpha * r.ln();
    Ok(l
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let kf = k as f64;
            v * (0.5 * (ln_gamma(kf + alpha + 1.0) - ln_gamma(kf + 1.0)) + base).exp()
        })
        .collect())
}

/// Area of the unit sphere in `R^{2d}`.
pub fn sphere_area(d: u32) -> f64 {
    2.0 * PI.powi(d as i32) / ln_gamma(d as f64).exp()
}

/// Closed-form `||varsigma_k||_{L^2(C^d)}`.
pub fn kernel_l2_norm(s: SpectralIndex) -> f64 {
    let d = s.d as f64;
    let k = s.k as f64;
    let log = sphere_area(s.d).ln() + (d - 1.0) * 2f64.ln() + ln_gamma(k + d) - ln_gamma(k + 1.0);
    (0.5 * log).exp()
}

//! The time phase of the propagator kernel, the dyadic partitions of
//! `[-pi/2, pi/2]`, and oscillatory integrals over them.

use crate::error::{Error, Result};
use crate::quad::{GAUSS7_W, KRONROD15_W, KRONROD15_X};
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseParams {
    /// `|z - z'|`
    pub separation: f64,
    /// `Im(z . conj z') / 2`
    pub cross_term: f64,
    pub mu: f64,
}

impl PhaseParams {
    pub fn new(separation: f64, cross_term: f64, mu: f64) -> Result<Self> {
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(Error::domain(format!("separation {separation} must be >= 0")));
        }
        if !(mu > 1.0) {
            return Err(Error::domain(format!("mu = {mu} must exceed 1")));
        }
        if !cross_term.is_finite() {
            return Err(Error::domain("cross term must be finite"));
        }
        Ok(PhaseParams {
            separation,
            cross_term,
            mu,
        })
    }
}

fn check_time(t: f64) -> Result<f64> {
    let s = t.sin();
    if !t.is_finite() || t.rem_euclid(PI) == 0.0 || s == 0.0 {
        return Err(Error::domain(format!("t = {t} lies on the singular set pi Z")));
    }
    Ok(s)
}

pub fn phase(p: &PhaseParams, t: f64) -> Result<f64> {
    let s = check_time(t)?;
    Ok(t + 0.25 * p.separation.powi(2) * t.cos() / s + p.cross_term)
}

pub fn phase_d1(p: &PhaseParams, t: f64) -> Result<f64> {
    let s = check_time(t)?;
    Ok(1.0 - p.separation.powi(2) / (4.0 * s * s))
}

/// `phi''(t) = (|z - z'|^2 / 2) cos t / sin^3 t`.
pub fn phase_d2(p: &PhaseParams, t: f64) -> Result<f64> {
    let s = check_time(t)?;
    Ok(0.5 * p.separation.powi(2) * t.cos() / (s * s * s))
}

/// Smooth bump supported in `[1/4, 1]`.
pub fn bump(t: f64) -> f64 {
    if t <= 0.25 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / ((t - 0.25) * (1.0 - t))).exp()
    }
}

/// `psi = b / sum_j b(2^j .)`, so that `sum_j psi(2^j t) = 1` for `t > 0`.
pub fn psi(t: f64) -> f64 {
    let num = bump(t);
    if num == 0.0 {
        return 0.0;
    }
    // 2^j t in (1/4, 1) for at most two consecutive j, all within -2..=2 here
    let den: f64 = (-2..=2).map(|j| bump(t * 2f64.powi(j))).sum();
    num / den
}

pub fn psi_tilde(t: f64) -> f64 {
    psi(t.abs())
}

/// `sum_{j in [lo, hi]} psi(2^j |t|)` restricted to the terms that can be nonzero.
fn dyadic_sum(t: f64, lo: i32, hi: i32) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 0.0;
    }
    // psi(2^j a) != 0 needs 2^j a in (1/4, 1)
    let jmin = ((0.25 / a).log2().floor() as i32).max(lo);
    let jmax = ((1.0 / a).log2().ceil() as i32).min(hi);
    (jmin..=jmax).map(|j| psi(a * 2f64.powi(j))).sum()
}

fn reduce_period(t: f64) -> f64 {
    // representative in [-pi/2, pi/2)
    (t + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// `psi0 = 1 - sum_{j >= 3} (psi(2^j t) + psi(-2^j t))`, extended with period pi.
pub fn psi0(t: f64) -> f64 {
    let r = reduce_period(t);
    if r == 0.0 {
        return 1.0;
    }
    dyadic_sum(r, i32::MIN / 2, 2)
}

pub fn psi_j_plus(j: i32, t: f64) -> f64 {
    psi(2f64.powi(j) * t)
}

pub fn psi_j_minus(j: i32, t: f64) -> f64 {
    psi(-2f64.powi(j) * t)
}

/// Offset from pi/2 of the representative of `t` in `(0, pi]`.
fn offset_from_half_pi(t: f64) -> f64 {
    let r = t.rem_euclid(PI);
    r - FRAC_PI_2
}

/// `phi_k(t) = psi0(t) psi~(2^k (t - pi/2))`, period pi.
pub fn phi_k(k: i32, t: f64) -> f64 {
    psi0(t) * psi_tilde(2f64.powi(k) * offset_from_half_pi(t))
}

/// `phi0(t) = psi0(t) (1 - sum_{k >= 5} psi~(2^k (t - pi/2)))`, period pi.
pub fn phi0(t: f64) -> f64 {
    let s = offset_from_half_pi(t);
    let tail = if s == 0.0 { 0.0 } else { 1.0 - dyadic_sum(s, i32::MIN / 2, 4) };
    psi0(t) * (1.0 - tail)
}

/// The concrete dyadic decomposition of `[-pi/2, pi/2]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct DyadicPartition;

pub fn build_partition() -> DyadicPartition {
    DyadicPartition
}

impl DyadicPartition {
    pub fn psi0(&self, t: f64) -> f64 {
        psi0(t)
    }

    pub fn psi_j(&self, j: i32, plus: bool, t: f64) -> f64 {
        if plus {
            psi_j_plus(j, t)
        } else {
            psi_j_minus(j, t)
        }
    }

    pub fn phi_k(&self, k: i32, t: f64) -> f64 {
        phi_k(k, t)
    }

    pub fn phi0(&self, t: f64) -> f64 {
        phi0(t)
    }

    /// `sum_{j >= 3} psi_j^± + sum_{k >= 5} phi_k + phi0`, which is identically 1.
    pub fn reconstruct(&self, t: f64) -> f64 {
        let r = reduce_period(t);
        let psis = if r > 0.0 {
            dyadic_sum(r, 3, i32::MAX / 2)
        } else if r < 0.0 {
            dyadic_sum(-r, 3, i32::MAX / 2)
        } else {
            0.0
        };
        let s = offset_from_half_pi(t);
        let phis = if s == 0.0 {
            0.0
        } else {
            psi0(t) * dyadic_sum(s, 5, i32::MAX / 2)
        };
        psis + phis + phi0(t)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscOptions {
    /// Stop refining once the Gauss/Kronrod difference is below `tol * int|amp|`.
    pub tol: f64,
    pub max_panels: usize,
    /// Largest change of `mu * phi` across one panel.
    pub phase_per_panel: f64,
}

impl Default for OscOptions {
    fn default() -> Self {
        OscOptions {
            tol: 1e-10,
            max_panels: 40_000_000,
            phase_per_panel: PI,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscValue {
    pub value: C64,
    pub error_estimate: f64,
    pub panels: usize,
}

struct Integrand<'a> {
    amp: &'a (dyn Fn(f64) -> f64 + Sync),
    /// phase without the constant cross term
    phase: &'a (dyn Fn(f64) -> f64 + Sync),
    dphase: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// One sweep of panels over `[a, b]` at refinement level `level`.
/// Sums of one panel sweep: value, Gauss/Kronrod difference, `int |amp|`,
/// largest `|mu phi|` seen, and the panel count.
type Sweep = (C64, f64, f64, f64, usize);

fn panel_sweep(f: &Integrand, a: f64, b: f64, mu: f64, width: f64, level: u32, opts: &OscOptions) -> Result<Sweep> {
    let shrink = 0.5f64.powi(level as i32);
    let amp_step = width / 32.0 * shrink;
    let mut t = a;
    let (mut kron, mut err, mut mass, mut top, mut panels) = (C64::new(0.0, 0.0), 0.0, 0.0, 0.0f64, 0usize);
    while t < b {
        let osc_step = |x: f64| opts.phase_per_panel * shrink / (mu * (f.dphase)(x).abs()).max(1e-300);
        let mut step = amp_step.min(osc_step(t)).min(b - t);
        step = step.min(osc_step((t + step).min(b)));
        step = step.max((b - a) * 1e-15);
        let (lo, hi) = (t, (t + step).min(b));
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut k = C64::new(0.0, 0.0);
        let mut g = C64::new(0.0, 0.0);
        let mut m = 0.0;
        for i in 0..8 {
            let xs: &[f64] = if i == 7 { &[0.0] } else { &[-KRONROD15_X[i], KRONROD15_X[i]] };
            for dx in xs {
                let x = c + h * dx;
                let a = (f.amp)(x);
                if a == 0.0 {
                    continue;
                }
                let ph = mu * (f.phase)(x);
                top = top.max(ph.abs());
                let v = C64::from_polar(a, ph);
                k += v * KRONROD15_W[i];
                m += a.abs() * KRONROD15_W[i];
                if i % 2 == 1 {
                    g += v * GAUSS7_W[i / 2];
                }
            }
        }
        kron += k * h;
        err += ((k - g) * h).norm();
        mass += m * h;
        panels += 1;
        if panels > opts.max_panels {
            return Err(Error::Convergence(format!(
                "panel budget {} exhausted on [{a}, {b}] at level {level}",
                opts.max_panels
            )));
        }
        t = hi;
    }
    Ok((kron, err, mass, top, panels))
}

fn integrate(f: &Integrand, a: f64, b: f64, mu: f64, opts: &OscOptions) -> Result<OscValue> {
    let width = b - a;
    let mut last_err = f64::INFINITY;
    for level in 0..12 {
        let (v, err, mass, top, panels) = panel_sweep(f, a, b, mu, width, level, opts)?;
        // phases of size `top` carry absolute rounding error `eps * top`
        let floor = 16.0 * f64::EPSILON * top * mass;
        if err <= (opts.tol * mass).max(floor) || mass == 0.0 {
            return Ok(OscValue {
                value: v,
                error_estimate: err,
                panels,
            });
        }
        last_err = err;
    }
    Err(Error::Convergence(format!(
        "oscillatory quadrature on [{a}, {b}] stalled with error estimate {last_err:.3e}"
    )))
}

/// A profile `eta` supported in `[-1, -1/4] ∪ [1/4, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Profile {
    /// `psi(|t|)`, even
    PsiTilde,
    /// `psi(t)`, positive side only
    PsiPlus,
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::PsiTilde => psi_tilde(t),
            Profile::PsiPlus => psi(t),
        }
    }

    fn even(&self) -> bool {
        matches!(self, Profile::PsiTilde)
    }

    fn has_negative_side(&self) -> bool {
        matches!(self, Profile::PsiTilde)
    }
}

fn phase_parts(p: &PhaseParams) -> (impl Fn(f64) -> f64 + Sync, impl Fn(f64) -> f64 + Sync) {
    let q = 0.25 * p.separation.powi(2);
    (
        move |t: f64| t + q * t.cos() / t.sin(),
        move |t: f64| 1.0 - q / t.sin().powi(2),
    )
}

/// `int eta(2^j t) e^{i mu phi(t)} dt`.
pub fn integral_ij(p: &PhaseParams, j: i32, eta: Profile, opts: &OscOptions) -> Result<OscValue> {
    if j < 1 {
        return Err(Error::domain(format!("scale j = {j} must be >= 1")));
    }
    let sc = 2f64.powi(j);
    let (ph, dph) = phase_parts(p);
    let amp = move |t: f64| eta.eval(sc * t);
    let f = Integrand {
        amp: &amp,
        phase: &ph,
        dphase: &dph,
    };
    let pos = integrate(&f, 0.25 / sc, 1.0 / sc, p.mu, opts)?;
    let rot = C64::from_polar(1.0, p.mu * p.cross_term);
    if !eta.has_negative_side() {
        return Ok(OscValue {
            value: pos.value * rot,
            ..pos
        });
    }
    // phi(-t) - c = -(phi(t) - c), so an even profile gives twice the real part
    let (value, error_estimate, panels) = if eta.even() {
        (C64::new(2.0 * pos.value.re, 0.0), 2.0 * pos.error_estimate, pos.panels)
    } else {
        let neg = integrate(&f, -1.0 / sc, -0.25 / sc, p.mu, opts)?;
        (pos.value + neg.value, pos.error_estimate + neg.error_estimate, pos.panels + neg.panels)
    };
    Ok(OscValue {
        value: value * rot,
        error_estimate,
        panels,
    })
}

/// `int psi0(t) eta(2^k (t - pi/2)) e^{i mu phi(t)} dt`.
pub fn integral_jk(p: &PhaseParams, k: i32, eta: Profile, opts: &OscOptions) -> Result<OscValue> {
    if k < 1 {
        return Err(Error::domain(format!("scale k = {k} must be >= 1")));
    }
    let sc = 2f64.powi(k);
    let (ph, dph) = phase_parts(p);
    let amp = move |t: f64| psi0(t) * eta.eval(sc * (t - FRAC_PI_2));
    let f = Integrand {
        amp: &amp,
        phase: &ph,
        dphase: &dph,
    };
    let rot = C64::from_polar(1.0, p.mu * p.cross_term);
    let right = integrate(&f, FRAC_PI_2 + 0.25 / sc, FRAC_PI_2 + 1.0 / sc, p.mu, opts)?;
    let (value, err, panels) = if eta.has_negative_side() {
        let left = integrate(&f, FRAC_PI_2 - 1.0 / sc, FRAC_PI_2 - 0.25 / sc, p.mu, opts)?;
        (right.value + left.value, right.error_estimate + left.error_estimate, right.panels + left.panels)
    } else {
        (right.value, right.error_estimate, right.panels)
    };
    Ok(OscValue {
        value: value * rot,
        error_estimate: err,
        panels,
    })
}

/// `int_0^pi phi0(t) e^{i mu phi(t)} dt`.
pub fn integral_j0(p: &PhaseParams, opts: &OscOptions) -> Result<OscValue> {
    let (ph, dph) = phase_parts(p);
    let f = Integrand {
        amp: &phi0,
        phase: &ph,
        dphase: &dph,
    };
    let rot = C64::from_polar(1.0, p.mu * p.cross_term);
    // phi0 vanishes within 1/16 of 0 and pi and within 1/64 of pi/2
    let (a, b) = (1.0 / 16.0, FRAC_PI_2 - 1.0 / 64.0);
    let left = integrate(&f, a, b, p.mu, opts)?;
    let right = integrate(&f, PI - b, PI - a, p.mu, opts)?;
    Ok(OscValue {
        value: (left.value + right.value) * rot,
        error_estimate: left.error_estimate + right.error_estimate,
        panels: left.panels + right.panels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntegralCase {
    I,
    J,
    J0,
}

impl IntegralCase {
    pub fn tag(&self) -> &'static str {
        match self {
            IntegralCase::I => "I_j",
            IntegralCase::J => "J_k",
            IntegralCase::J0 => "J0",
        }
    }

    /// Normalization turning the claimed bound into a constant.
    pub fn normalized(&self, abs_value: f64, mu: f64, scale: i32) -> f64 {
        let s = 2f64.powi(scale);
        match self {
            IntegralCase::I => abs_value * mu.sqrt() * s.sqrt(),
            IntegralCase::J => abs_value * mu.sqrt() / s.sqrt(),
            IntegralCase::J0 => abs_value * mu.sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub case: IntegralCase,
    pub mu: f64,
    pub scale: i32,
    pub separation: f64,
    pub abs_value: f64,
    pub normalized_value: f64,
    pub error_estimate: f64,
}

/// The separation regime grid `{0, 2^{-s-4}, 2^{-s}, 1/2, 3/2, 2, 5/2}`.
pub fn separation_grid(scale: i32) -> Vec<f64> {
    vec![0.0, 2f64.powi(-scale - 4), 2f64.powi(-scale), 0.5, 1.5, 2.0, 2.5]
}

pub fn evaluate(case: IntegralCase, mu: f64, scale: i32, separation: f64, opts: &OscOptions) -> Result<SweepRow> {
    let p = PhaseParams::new(separation, 0.0, mu)?;
    let v = match case {
        IntegralCase::I => integral_ij(&p, scale, Profile::PsiTilde, opts)?,
        IntegralCase::J => integral_jk(&p, scale, Profile::PsiTilde, opts)?,
        IntegralCase::J0 => integral_j0(&p, opts)?,
    };
    let abs_value = v.value.norm();
    Ok(SweepRow {
        case,
        mu,
        scale,
        separation,
        abs_value,
        normalized_value: case.normalized(abs_value, mu, scale),
        error_estimate: v.error_estimate,
    })
}

/// All cells of the sweep over `mus x scales x separation_grid`, in a fixed order.
pub fn sweep(mus: &[f64], scales: &[i32], opts: &OscOptions) -> Result<Vec<SweepRow>> {
    let mut cells = Vec::new();
    for &mu in mus {
        for case in [IntegralCase::I, IntegralCase::J] {
            for &s in scales {
                for sep in separation_grid(s) {
                    cells.push((case, mu, s, sep));
                }
            }
        }
        for sep in separation_grid(0) {
            cells.push((IntegralCase::J0, mu, 0, sep));
        }
    }
    cells
        .par_iter()
        .map(|&(case, mu, s, sep)| evaluate(case, mu, s, sep, opts))
        .collect()
}

/// Per `(case, mu, scale)` the sup over separations of the normalized value.
pub fn sup_over_separations(rows: &[SweepRow]) -> Vec<(IntegralCase, f64, i32, f64)> {
    let mut out: Vec<(IntegralCase, f64, i32, f64)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(c, m, s, _)| *c == r.case && *m == r.mu && *s == r.scale)
        {
            Some(e) => e.3 = e.3.max(r.normalized_value),
            None => out.push((r.case, r.mu, r.scale, r.normalized_value)),
        }
    }
    out
}

//! The spectral projection `P_mu` by eigen-expansion and by twisted
//! convolution with `varsigma_k`, windowed projections, the propagator and
//! the Heisenberg-scaled projection.

use crate::error::{Error, Result};
use crate::field::{Field, Grid, DEFAULT_PAIR_BUDGET};
use crate::hermite::{plane_column, HermiteBasisTruncation};
use crate::laguerre::{kernel_l2_norm, kernel_varsigma, SpectralIndex};
use crate::oscillatory::{phi0, phi_k, psi0, psi_j_minus, psi_j_plus};
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Eigen,
    Kernel,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Eigen => "eigen",
            Method::Kernel => "kernel",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub field: Field,
    pub method: Method,
    pub truncation: Option<HermiteBasisTruncation>,
    pub residual_estimate: f64,
}

/// Tail mass above which an eigen-route result is refused.
pub const MAX_TRUNCATION_RESIDUAL: f64 = 1e-4;

fn check_resolved(grid: &Grid, mu: f64) -> Result<()> {
    if grid.resolves(mu) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "grid step {} does not resolve eigenvalue {mu}",
            grid.step()
        )))
    }
}

pub fn project(
    f: &Field,
    s: SpectralIndex,
    method: Method,
    trunc: Option<HermiteBasisTruncation>,
) -> Result<ProjectionResult> {
    if s.d != f.grid().d {
        return Err(Error::domain("spectral index and field dimensions disagree"));
    }
    check_resolved(f.grid(), s.mu as f64)?;
    match method {
        Method::Kernel => Ok(ProjectionResult {
            field: project_kernel(f, s)?,
            method,
            truncation: None,
            residual_estimate: 0.0,
        }),
        Method::Eigen => {
            let t = trunc.ok_or_else(|| Error::domain("the eigen route needs a truncation"))?;
            let (field, residual) = eigen_part(f, s.k, t.alpha_max)?;
            if residual > MAX_TRUNCATION_RESIDUAL {
                return Err(Error::Convergence(format!(
                    "truncation residual {residual:.3e} at alpha_max = {}",
                    t.alpha_max
                )));
            }
            Ok(ProjectionResult {
                field,
                method,
                truncation: Some(t),
                residual_estimate: residual,
            })
        }
    }
}

/// `c h^{2d} sum_u f(u) kappa(|z - u|) e^{-(i/2) m Im z.conj(u)}` at the
/// requested output samples.
fn kernel_apply_at<K>(f: &Field, kappa: K, m: f64, prefactor: C64, outputs: &[usize]) -> Result<Vec<C64>>
where
    K: Fn(f64) -> C64 + Sync,
{
    let grid = *f.grid();
    let pairs = outputs.len() as f64 * grid.len() as f64;
    if pairs > DEFAULT_PAIR_BUDGET {
        return Err(Error::Budget(format!("kernel route needs {pairs:.3e} pairs")));
    }
    let n = grid.n;
    let np = grid.plane_len();
    let h = grid.step();
    let axis = grid.axis();
    // kernel by integer squared index distance
    let smax = grid.d as usize * 2 * (n - 1) * (n - 1);
    let table: Vec<C64> = (0..=smax).into_par_iter().map(|s| kappa(h * (s as f64).sqrt())).collect();
    // e^{-(i/2) m y u} [iy][ju] and e^{(i/2) m x v} [ix][jv]
    let mut a_tab = Vec::with_capacity(n * n);
    let mut b_tab = Vec::with_capacity(n * n);
    for p in &axis {
        for q in &axis {
            a_tab.push(C64::from_polar(1.0, -0.5 * m * p * q));
            b_tab.push(C64::from_polar(1.0, 0.5 * m * p * q));
        }
    }
    let samples = f.samples();
    let sq = |i: usize, j: usize| (i as isize - j as isize).pow(2) as usize;
    let plane = |ix: usize, iy: usize, off: usize, s_base: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ju in 0..n {
            let du = sq(ix, ju) + s_base;
            let mut row = C64::new(0.0, 0.0);
            let base = off + ju * n;
            for jv in 0..n {
                row += samples[base + jv] * table[du + sq(iy, jv)] * b_tab[ix * n + jv];
            }
            acc += row * a_tab[iy * n + ju];
        }
        acc
    };
    let vol = grid.cell_volume();
    Ok(outputs
        .par_iter()
        .map(|&idx| {
            let v = match grid.d {
                1 => plane(idx / n, idx % n, 0, 0),
                _ => {
                    let (p1, p2) = (idx / np, idx % np);
                    let (ix1, iy1) = (p1 / n, p1 % n);
                    let (ix2, iy2) = (p2 / n, p2 % n);
                    let mut acc = C64::new(0.0, 0.0);
                    for ju in 0..n {
                        for jv in 0..n {
                            let s1 = sq(ix1, ju) + sq(iy1, jv);
                            let ph = a_tab[iy1 * n + ju] * b_tab[ix1 * n + jv];
                            acc += ph * plane(ix2, iy2, (ju * n + jv) * np, s1);
                        }
                    }
                    acc
                }
            };
            v * vol * prefactor
        })
        .collect())
}

fn kernel_apply<K>(f: &Field, kappa: K, m: f64, prefactor: C64) -> Result<Field>
where
    K: Fn(f64) -> C64 + Sync,
{
    let all: Vec<usize> = (0..f.grid().len()).collect();
    let v = kernel_apply_at(f, kappa, m, prefactor, &all)?;
    Field::new(*f.grid(), v)
}

/// `P_mu f = (2 pi)^{-d} f x varsigma_k`, with the kernel evaluated at exact
/// differences so nothing is truncated at the cube boundary.
pub fn project_kernel(f: &Field, s: SpectralIndex) -> Result<Field> {
    if s.d != f.grid().d {
        return Err(Error::domain("spectral index and field dimensions disagree"));
    }
    kernel_varsigma(s, 0.0)?;
    let c = (2.0 * PI).powi(-(s.d as i32));
    kernel_apply(
        f,
        |r| C64::new(kernel_varsigma(s, r).expect("r >= 0"), 0.0),
        1.0,
        C64::new(c, 0.0),
    )
}

/// The kernel route evaluated only at the listed sample indices.
pub fn project_kernel_at(f: &Field, s: SpectralIndex, outputs: &[usize]) -> Result<Vec<C64>> {
    if s.d != f.grid().d {
        return Err(Error::domain("spectral index and field dimensions disagree"));
    }
    let c = (2.0 * PI).powi(-(s.d as i32));
    kernel_apply_at(
        f,
        |r| C64::new(kernel_varsigma(s, r).expect("r >= 0"), 0.0),
        1.0,
        C64::new(c, 0.0),
        outputs,
    )
}

/// `P_{2k+d} f` for every `k <= kmax` by eigen-expansion.
#[derive(Clone, Debug)]
pub struct SpectralParts {
    pub d: u32,
    pub parts: Vec<Field>,
    /// Tail coefficient mass relative to `||f||_2`.
    pub residual: f64,
}

impl SpectralParts {
    pub fn kmax(&self) -> usize {
        self.parts.len() - 1
    }

    /// `sum_k m(2k + d) P_{2k+d} f`.
    pub fn combine<M: Fn(f64) -> C64>(&self, m: M) -> Field {
        let grid = *self.parts[0].grid();
        let mut out = vec![C64::new(0.0, 0.0); grid.len()];
        for (k, p) in self.parts.iter().enumerate() {
            let c = m((2 * k) as f64 + self.d as f64);
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, v) in out.iter_mut().zip(p.samples()) {
                *o += c * v;
            }
        }
        Field::new(grid, out).expect("same grid")
    }

    pub fn part(&self, k: usize) -> Option<&Field> {
        self.parts.get(k)
    }
}

fn tail_start(alpha_max: usize) -> usize {
    alpha_max.saturating_sub(3)
}

/// Coefficients `<f, Phi_{a,b}>` for `a <= a_max` and the rebuilt part, for d = 1.
fn plane_part(f: &Field, column: &[Vec<C64>]) -> (Vec<C64>, Vec<C64>) {
    let vol = f.grid().cell_volume();
    let coeffs: Vec<C64> = column
        .par_iter()
        .map(|phi| {
            f.samples()
                .iter()
                .zip(phi)
                .map(|(v, p)| v * p.conj())
                .sum::<C64>()
                * vol
        })
        .collect();
    let n = f.grid().len();
    let rebuilt = (0..n)
        .into_par_iter()
        .map(|i| column.iter().zip(&coeffs).map(|(phi, c)| c * phi[i]).sum())
        .collect();
    (coeffs, rebuilt)
}

/// Parts for d = 2 through separable contractions over the two planes.
fn four_dim_part(f: &Field, col1: &[Vec<C64>], col2: &[Vec<C64>]) -> (Vec<C64>, Vec<C64>) {
    let grid = f.grid();
    let np = grid.plane_len();
    let na = col1.len();
    let vol = grid.cell_volume();
    let s = f.samples();
    // g[p1][a2] = sum_p2 f[p1, p2] conj(col2[a2][p2])
    let g: Vec<Vec<C64>> = (0..np)
        .into_par_iter()
        .map(|p1| {
            col2.iter()
                .map(|phi| (0..np).map(|p2| s[p1 * np + p2] * phi[p2].conj()).sum())
                .collect()
        })
        .collect();
    // c[a1][a2]
    let coeffs: Vec<C64> = (0..na * na)
        .into_par_iter()
        .map(|idx| {
            let (a1, a2) = (idx / na, idx % na);
            (0..np).map(|p1| col1[a1][p1].conj() * g[p1][a2]).sum::<C64>() * vol
        })
        .collect();
    // h[p1][a2] = sum_a1 c[a1][a2] col1[a1][p1]
    let hmat: Vec<Vec<C64>> = (0..np)
        .into_par_iter()
        .map(|p1| {
            (0..na)
                .map(|a2| (0..na).map(|a1| coeffs[a1 * na + a2] * col1[a1][p1]).sum())
                .collect()
        })
        .collect();
    let rebuilt = (0..np * np)
        .into_par_iter()
        .map(|idx| {
            let (p1, p2) = (idx / np, idx % np);
            (0..na).map(|a2| hmat[p1][a2] * col2[a2][p2]).sum()
        })
        .collect();
    (coeffs, rebuilt)
}

/// Tail mass of a coefficient block: entries with any component above the tail start.
fn tail_mass(coeffs: &[C64], na: usize, d: u32, alpha_max: usize) -> f64 {
    let t0 = tail_start(alpha_max);
    coeffs
        .iter()
        .enumerate()
        .filter(|(i, _)| match d {
            1 => *i >= t0,
            _ => i / na >= t0 || i % na >= t0,
        })
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

pub fn spectral_parts(f: &Field, kmax: usize, alpha_max: usize) -> Result<SpectralParts> {
    let grid = *f.grid();
    let d = grid.d;
    let columns: Vec<Vec<Vec<C64>>> = (0..=kmax).map(|b| plane_column(&grid, b, alpha_max)).collect();
    let norm2 = f.l2().powi(2);
    let mut parts = Vec::with_capacity(kmax + 1);
    let mut tail = 0.0;
    let na = alpha_max + 1;
    for k in 0..=kmax {
        let mut acc = vec![C64::new(0.0, 0.0); grid.len()];
        let betas: Vec<(usize, usize)> = match d {
            1 => vec![(k, 0)],
            _ => (0..=k).map(|b1| (b1, k - b1)).collect(),
        };
        for (b1, b2) in betas {
            let (coeffs, rebuilt) = match d {
                1 => plane_part(f, &columns[b1]),
                _ => four_dim_part(f, &columns[b1], &columns[b2]),
            };
            tail += tail_mass(&coeffs, na, d, alpha_max);
            for (a, v) in acc.iter_mut().zip(rebuilt) {
                *a += v;
            }
        }
        parts.push(Field::new(grid, acc)?);
    }
    let residual = if norm2 > 0.0 { (tail / norm2).sqrt() } else { 0.0 };
    Ok(SpectralParts { d, parts, residual })
}

fn eigen_part(f: &Field, k: usize, alpha_max: usize) -> Result<(Field, f64)> {
    let grid = *f.grid();
    let d = grid.d;
    let na = alpha_max + 1;
    let norm2 = f.l2().powi(2);
    let mut acc = vec![C64::new(0.0, 0.0); grid.len()];
    let mut tail = 0.0;
    let betas: Vec<(usize, usize)> = match d {
        1 => vec![(k, 0)],
        _ => (0..=k).map(|b1| (b1, k - b1)).collect(),
    };
    let mut cache: Vec<Option<Vec<Vec<C64>>>> = vec![None; k + 1];
    for (b1, b2) in betas {
        for b in [b1, b2] {
            if cache[b].is_none() && (d == 2 || b == b1) {
                cache[b] = Some(plane_column(&grid, b, alpha_max));
            }
        }
        let (coeffs, rebuilt) = match d {
            1 => plane_part(f, cache[b1].as_ref().expect("cached")),
            _ => four_dim_part(
                f,
                cache[b1].as_ref().expect("cached"),
                cache[b2].as_ref().expect("cached"),
            ),
        };
        tail += tail_mass(&coeffs, na, d, alpha_max);
        for (a, v) in acc.iter_mut().zip(rebuilt) {
            *a += v;
        }
    }
    let residual = if norm2 > 0.0 { (tail / norm2).sqrt() } else { 0.0 };
    Ok((Field::new(grid, acc)?, residual))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WindowKind {
    DyadicPsiJPlus,
    DyadicPsiJMinus,
    PhiK,
    Phi0,
    Psi0,
    Custom,
}

impl WindowKind {
    pub fn tag(&self) -> &'static str {
        match self {
            WindowKind::DyadicPsiJPlus => "dyadic_psi_j_plus",
            WindowKind::DyadicPsiJMinus => "dyadic_psi_j_minus",
            WindowKind::PhiK => "phi_k",
            WindowKind::Phi0 => "phi_0",
            WindowKind::Psi0 => "psi0",
            WindowKind::Custom => "custom",
        }
    }
}

/// Number of trapezoid intervals used for the window transform.
pub const ETA_POINTS: usize = 4096;
/// Relative cutoff below which window coefficients are dropped.
pub const ETA_CUTOFF: f64 = 1e-12;

/// A time cutoff on `[-pi/2, pi/2]`, extended with period pi.
#[derive(Clone, Debug)]
pub struct Window {
    pub kind: WindowKind,
    pub scale: i32,
    samples: Option<Vec<f64>>,
}

impl Window {
    pub fn dyadic(j: i32, plus: bool) -> Self {
        Window {
            kind: if plus {
                WindowKind::DyadicPsiJPlus
            } else {
                WindowKind::DyadicPsiJMinus
            },
            scale: j,
            samples: None,
        }
    }

    pub fn phi_k(k: i32) -> Self {
        Window {
            kind: WindowKind::PhiK,
            scale: k,
            samples: None,
        }
    }

    pub fn phi0() -> Self {
        Window {
            kind: WindowKind::Phi0,
            scale: 0,
            samples: None,
        }
    }

    pub fn psi0() -> Self {
        Window {
            kind: WindowKind::Psi0,
            scale: 0,
            samples: None,
        }
    }

    /// Samples at `-pi/2 + i pi / (len - 1)`; the two endpoint values must
    /// agree so the periodic extension is continuous.
    pub fn custom(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("custom window needs at least two finite samples"));
        }
        let (a, b) = (samples[0], samples[samples.len() - 1]);
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::domain(format!(
                "window support violation: endpoint values {a} and {b} differ"
            )));
        }
        Ok(Window {
            kind: WindowKind::Custom,
            scale: 0,
            samples: Some(samples),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            WindowKind::DyadicPsiJPlus => psi_j_plus(self.scale, t),
            WindowKind::DyadicPsiJMinus => psi_j_minus(self.scale, t),
            WindowKind::PhiK => phi_k(self.scale, t),
            WindowKind::Phi0 => phi0(t),
            WindowKind::Psi0 => psi0(t),
            WindowKind::Custom => {
                let s = self.samples.as_ref().expect("custom samples");
                let r = (t + FRAC_PI_2).rem_euclid(PI) / PI * (s.len() - 1) as f64;
                let i = (r.floor() as usize).min(s.len() - 2);
                let w = r - i as f64;
                s[i] * (1.0 - w) + s[i + 1] * w
            }
        }
    }

    /// `int_{-pi/2}^{pi/2} eta(t) e^{-i m t} dt` by the periodic trapezoid rule.
    pub fn hat(&self, m: f64) -> C64 {
        let h = PI / ETA_POINTS as f64;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..ETA_POINTS {
            let t = -FRAC_PI_2 + i as f64 * h;
            let e = self.eval(t);
            if e != 0.0 {
                acc += C64::from_polar(e, -m * t);
            }
        }
        acc * h
    }

    /// `(k', eta^(mu' - mu) / pi)` for `mu' = 2k' + d <= 2 kmax + d`, dropping
    /// coefficients below the relative cutoff.
    pub fn coefficients(&self, mu: u64, d: u32, kmax: usize) -> Vec<(usize, C64)> {
        let all: Vec<(usize, C64)> = (0..=kmax)
            .into_par_iter()
            .map(|k| {
                let mp = (2 * k) as f64 + d as f64;
                (k, self.hat(mp - mu as f64) / PI)
            })
            .collect();
        let top = all.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        all.into_iter().filter(|(_, c)| c.norm() >= ETA_CUTOFF * top).collect()
    }
}

/// Spectral weights of `g = e^{-lambda |z|^2 / 4}`: `g = sum_k a_k varsigma_k`
/// with `a_k = (1 - w)^d w^k`, `w = (lambda - 1) / (lambda + 1)`.
pub fn gaussian_kernel_coefficient(d: u32, lambda: f64, k: usize) -> f64 {
    let w = (lambda - 1.0) / (lambda + 1.0);
    (1.0 - w).powi(d as i32) * w.powi(k as i32)
}

/// `||P_mu[eta] f||_2 / ||f||_1` for the Gaussian `f = e^{-lambda |z|^2 / 4}`,
/// or for the unit point mass when `lambda` is `None`; the point mass gives
/// `||P_mu[eta]||_{1 -> 2}` exactly.
pub fn windowed_l1_l2_gain(w: &Window, mu: u64, d: u32, lambda: Option<f64>, kmax: usize) -> Result<f64> {
    if d == 0 || mu < d as u64 || (mu - d as u64) % 2 != 0 {
        return Err(Error::domain(format!("{mu} is not an eigenvalue for d = {d}")));
    }
    if let Some(l) = lambda {
        if !(l > 0.0) {
            return Err(Error::domain(format!("Gaussian width lambda = {l} must be > 0")));
        }
    }
    let mut sq = 0.0;
    for (k, c) in w.coefficients(mu, d, kmax) {
        let s = SpectralIndex::new(d, k)?;
        let a = match lambda {
            Some(l) => gaussian_kernel_coefficient(d, l, k) / (4.0 * PI / l).powi(d as i32),
            None => (2.0 * PI).powi(-(d as i32)),
        };
        sq += (c.norm() * a * kernel_l2_norm(s)).powi(2);
    }
    Ok(sq.sqrt())
}

/// `P_mu[eta] f = (1/pi) sum_{mu'} eta^(mu' - mu) P_{mu'} f` on the span of `parts`.
pub fn windowed_projection(parts: &SpectralParts, mu: u64, w: &Window) -> Result<Field> {
    if mu < parts.d as u64 || (mu - parts.d as u64) % 2 != 0 {
        return Err(Error::domain(format!("{mu} is not an eigenvalue for d = {}", parts.d)));
    }
    let coeffs = w.coefficients(mu, parts.d, parts.kmax());
    let mut table = vec![C64::new(0.0, 0.0); parts.kmax() + 1];
    for (k, c) in coeffs {
        table[k] = c;
    }
    let d = parts.d as f64;
    Ok(parts.combine(|m| table[((m - d) / 2.0).round() as usize]))
}

/// `e^{-itL} f = sum_mu e^{-it mu} P_mu f` on the span of `parts`.
pub fn propagator(parts: &SpectralParts, t: f64) -> Field {
    parts.combine(|mu| C64::from_polar(1.0, -t * mu))
}

/// The constant the propagator kernel carries when derived from the Laguerre
/// generating function: `(4 pi i)^{-d}`.
pub fn propagator_constant_closed_form(d: u32) -> C64 {
    (C64::new(0.0, 4.0 * PI)).powi(-(d as i32))
}

/// `C (sin t)^{-d} int e^{i(|z-u|^2 cot t / 4 - Im z.conj(u) / 2)} f(u) du` at
/// the listed samples.
pub fn propagator_kernel_at(f: &Field, t: f64, c_d: C64, outputs: &[usize]) -> Result<Vec<C64>> {
    let s = t.sin();
    if t.rem_euclid(PI) == 0.0 || s == 0.0 {
        return Err(Error::domain(format!("t = {t} lies on the singular set pi Z")));
    }
    let cot = t.cos() / s;
    let pref = c_d * s.powi(-(f.grid().d as i32));
    kernel_apply_at(f, |r| C64::from_polar(1.0, 0.25 * r * r * cot), 1.0, pref, outputs)
}

/// Least-squares constant matching the kernel route to the series route on
/// `outputs`.
pub fn calibrate_propagator_constant(f: &Field, t: f64, series: &Field, outputs: &[usize]) -> Result<C64> {
    let raw = propagator_kernel_at(f, t, C64::new(1.0, 0.0), outputs)?;
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    for (r, &i) in raw.iter().zip(outputs) {
        num += series.samples()[i] * r.conj();
        den += r.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::domain("calibration samples carry no signal"));
    }
    Ok(num / den)
}

/// Conjugation of `P_mu` by the dilation `(x, y) -> (|m|^{1/2} x, sgn(m) |m|^{1/2} y)`.
pub fn scaled_projection(f: &Field, m: i64, s: SpectralIndex) -> Result<Field> {
    if m == 0 {
        return Err(Error::domain("the scaling parameter m must be nonzero"));
    }
    if s.d != f.grid().d {
        return Err(Error::domain("spectral index and field dimensions disagree"));
    }
    let am = m.unsigned_abs() as f64;
    check_resolved(f.grid(), s.mu as f64 * am)?;
    let c = am.powi(s.d as i32) * (2.0 * PI).powi(-(s.d as i32));
    let root = am.sqrt();
    kernel_apply(
        f,
        |r| C64::new(kernel_varsigma(s, root * r).expect("r >= 0"), 0.0),
        m as f64,
        C64::new(c, 0.0),
    )
}

//! Lower bounds for `||P_mu||_{p->q}`: the ring construction, exact corner
//! norms, eigenspace ascent and log-log scaling fits.

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::hermite::{special_hermite_plane, FwRule};
use crate::laguerre::{kernel_l2_norm, kernel_varsigma, varsigma_at_origin, SpectralIndex};
use crate::quad::composite_legendre;
use crate::radial::RadialRule;
use crate::region::ExponentPoint;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Roots `t_j` of `sin g = 0` in `(sqrt(mu)/8, sqrt(mu)/3)` and the rings
/// `D_j = [t_j, t_j + width]`.
#[derive(Clone, Debug, Serialize)]
pub struct RingSystem {
    pub mu: u64,
    pub d: u32,
    pub k: usize,
    pub roots: Vec<f64>,
    pub width: f64,
}

impl RingSystem {
    pub fn count(&self) -> usize {
        self.roots.len()
    }

    pub fn index(&self) -> SpectralIndex {
        SpectralIndex {
            d: self.d,
            k: self.k,
            mu: self.mu,
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        let j = self.roots.partition_point(|t| *t <= r);
        j > 0 && r <= self.roots[j - 1] + self.width
    }
}

/// `g(s) = (mu/2)(2 theta - sin 2 theta) - pi/4` with `theta = acos(s / (2 sqrt(mu)))`.
pub fn ring_phase(mu: f64, s: f64) -> f64 {
    let th = (s / (2.0 * mu.sqrt())).acos();
    0.5 * mu * (2.0 * th - (2.0 * th).sin()) - 0.25 * PI
}

pub fn build_rings(s: SpectralIndex) -> Result<RingSystem> {
    let mu = s.mu as f64;
    let lo = mu.sqrt() / 8.0;
    let hi = mu.sqrt() / 3.0;
    let (g_lo, g_hi) = (ring_phase(mu, lo), ring_phase(mu, hi));
    let m_first = (g_hi / PI).floor() as i64 + 1;
    let m_last = (g_lo / PI).ceil() as i64 - 1;
    if m_last < m_first {
        return Err(Error::domain(format!("no ring roots in (sqrt(mu)/8, sqrt(mu)/3) for mu = {mu}")));
    }
    let mut roots = Vec::with_capacity((m_last - m_first + 1) as usize);
    for m in (m_first..=m_last).rev() {
        let target = m as f64 * PI;
        let (mut a, mut b) = (lo, hi);
        while b - a > 0.0 {
            let c = 0.5 * (a + b);
            if c <= a || c >= b {
                break;
            }
            if ring_phase(mu, c) > target {
                a = c;
            } else {
                b = c;
            }
        }
        let t = if (ring_phase(mu, a) - target).abs() <= (ring_phase(mu, b) - target).abs() {
            a
        } else {
            b
        };
        if ring_phase(mu, t).sin().abs() > 1e-10 {
            return Err(Error::Convergence(format!("ring root near {t} failed to bracket")));
        }
        roots.push(t);
    }
    Ok(RingSystem {
        mu: s.mu,
        d: s.d,
        k: s.k,
        roots,
        width: PI / (8.0 * mu.sqrt()),
    })
}

/// `f = sum_j chi_{D_j}(|z|) varsigma_k(z)` sampled on `grid`.
pub fn ring_extremizer(s: SpectralIndex, grid: Grid) -> Result<Field> {
    if grid.d != s.d {
        return Err(Error::domain("grid and spectral index dimensions disagree"));
    }
    if !grid.resolves(s.mu as f64) {
        return Err(Error::domain(format!("grid step {} does not resolve mu = {}", grid.step(), s.mu)));
    }
    let sys = build_rings(s)?;
    if grid.half_width < (s.mu as f64).sqrt() / 2.0 {
        return Err(Error::domain("grid does not contain the ring annulus"));
    }
    Ok(Field::radial(grid, |r| {
        if sys.contains(r) {
            kernel_varsigma(s, r).expect("r >= 0")
        } else {
            0.0
        }
    }))
}

/// Radial quadrature over the union of the rings.
pub fn ring_rule(sys: &RingSystem) -> Result<RadialRule> {
    let parts: Result<Vec<RadialRule>> = sys
        .roots
        .iter()
        .map(|t| RadialRule::on_interval(sys.d, *t, t + sys.width, 2, 10))
        .collect();
    RadialRule::concat(&parts?)
}

/// Radial data of the ring extremizer: `||f||_p` and `P_mu f = a varsigma_k`.
#[derive(Clone, Debug)]
pub struct RingProfile {
    pub system: RingSystem,
    rule: RadialRule,
    values: Vec<f64>,
    /// `<f, varsigma_k> / ||varsigma_k||_2^2`.
    pub coefficient: f64,
}

impl RingProfile {
    pub fn new(s: SpectralIndex) -> Result<Self> {
        let system = build_rings(s)?;
        let rule = ring_rule(&system)?;
        let values = rule.sample(|r| kernel_varsigma(s, r).expect("r >= 0"));
        let n = kernel_l2_norm(s);
        let coefficient = rule.inner(&values, &values) / (n * n);
        Ok(RingProfile {
            system,
            rule,
            values,
            coefficient,
        })
    }

    /// `||f||_p^p`.
    pub fn norm_pp(&self, p: f64) -> f64 {
        self.rule.lp_norm(&self.values, p).powf(p)
    }

    pub fn norm(&self, p: f64) -> f64 {
        self.rule.lp_norm(&self.values, p)
    }

    /// `min |P_mu f(z)|` over `|z| <= pi / (32 sqrt(mu))`.
    pub fn near_origin_min(&self) -> f64 {
        let s = self.system.index();
        let rmax = PI / (32.0 * (s.mu as f64).sqrt());
        (0..=64)
            .map(|i| (self.coefficient * kernel_varsigma(s, rmax * i as f64 / 64.0).expect("r >= 0")).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `||P_mu f||_q / ||f||_p` with both norms exact in the radial variable.
    pub fn ratio(&self, pr: f64, qr: f64) -> Result<f64> {
        let s = self.system.index();
        let num = self.coefficient.abs() * kernel_lq_norm(s, inv(qr))?;
        Ok(num / self.norm(inv(pr)))
    }
}

fn inv(r: f64) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else {
        1.0 / r
    }
}

/// `sup_r |varsigma_k(r)|` and its argmax, by a scan refined with golden sections.
pub fn kernel_sup(s: SpectralIndex) -> Result<(f64, f64)> {
    let mu = s.mu as f64;
    let step = PI / (16.0 * mu.sqrt());
    let rmax = 2.0 * mu.sqrt() + 8.0;
    let n = (rmax / step).ceil() as usize;
    let vals: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| kernel_varsigma(s, i as f64 * step).map(f64::abs))
        .collect::<Result<_>>()?;
    let (mut ib, mut best) = (0, vals[0]);
    for (i, v) in vals.iter().enumerate() {
        if *v > best {
            ib = i;
            best = *v;
        }
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = (ib as f64 - 1.0).max(0.0) * step;
    let mut b = (ib as f64 + 1.0) * step;
    let f = |r: f64| kernel_varsigma(s, r).map(f64::abs);
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c)? >= f(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let r = 0.5 * (a + b);
    let v = f(r)?;
    Ok(if v > best { (v, r) } else { (best, ib as f64 * step) })
}

/// `||varsigma_k||_{L^q(C^d)}`, closed form for `q = 2`.
pub fn kernel_lq_norm(s: SpectralIndex, q: f64) -> Result<f64> {
    if q.is_infinite() {
        return Ok(kernel_sup(s)?.0);
    }
    if q == 2.0 {
        return Ok(kernel_l2_norm(s));
    }
    let mu = s.mu as f64;
    let rule = RadialRule::new(s.d, 2.0 * mu.sqrt() + 14.0, 2 * s.k + 48, 12)?;
    let v = rule.sample(|r| kernel_varsigma(s, r).expect("r >= 0"));
    Ok(rule.lp_norm(&v, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    CornerExact,
    RingExtremizer,
    EigenspaceAscent,
    SingleEigenfunction,
}

impl NormMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            NormMethod::CornerExact => "corner_exact",
            NormMethod::RingExtremizer => "ring_extremizer",
            NormMethod::EigenspaceAscent => "eigenspace_ascent",
            NormMethod::SingleEigenfunction => "single_eigenfunction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            NormMethod::CornerExact,
            NormMethod::RingExtremizer,
            NormMethod::EigenspaceAscent,
            NormMethod::SingleEigenfunction,
        ]
        .into_iter()
        .find(|m| m.tag() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Exact,
    LowerBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub d: u32,
    pub k: usize,
    pub mu: u64,
    pub pr: f64,
    pub qr: f64,
    pub value: f64,
    pub method: NormMethod,
    pub certification: Certification,
    pub seed: Option<u64>,
}

fn report(s: SpectralIndex, pr: f64, qr: f64, value: f64, method: NormMethod, seed: Option<u64>) -> NormReport {
    NormReport {
        d: s.d,
        k: s.k,
        mu: s.mu,
        pr,
        qr,
        value,
        method,
        certification: if method == NormMethod::CornerExact {
            Certification::Exact
        } else {
            Certification::LowerBound
        },
        seed,
    }
}

/// Exact norms at `(1/2, 1/2)`, `(1, 0)`, `(1, 1/2)` and `(1/2, 0)`.
pub fn corner_norms(s: SpectralIndex) -> Result<Vec<NormReport>> {
    let c = (2.0 * PI).powi(-(s.d as i32));
    let l2 = c * kernel_l2_norm(s);
    let sup = if s.d == 1 {
        varsigma_at_origin(s)
    } else {
        kernel_sup(s)?.0
    };
    let m = NormMethod::CornerExact;
    Ok(vec![
        report(s, 0.5, 0.5, 1.0, m, None),
        report(s, 1.0, 0.0, c * sup, m, None),
        report(s, 1.0, 0.5, l2, m, None),
        report(s, 0.5, 0.0, l2, m, None),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    RingExtremizer,
    EigenspaceAscent,
    SingleEigenfunction,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ring_extremizer" => Some(Strategy::RingExtremizer),
            "eigenspace_ascent" => Some(Strategy::EigenspaceAscent),
            "single_eigenfunction" => Some(Strategy::SingleEigenfunction),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub alpha_max: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub window: usize,
    pub gain_tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            alpha_max: 8,
            restarts: 8,
            max_iter: 600,
            window: 50,
            gain_tol: 1e-6,
        }
    }
}

/// `ln |Phi_{0,n}(z)|` in one complex variable at radius `r`.
fn ln_phi0n(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    -0.5 * (2.0 * PI).ln() - 0.5 * (nf * 2f64.ln() + ln_gamma(nf + 1.0)) + nf * r.ln() - 0.25 * r * r
}

fn phi0n_norm(n: usize, p: f64) -> Result<f64> {
    if p.is_infinite() {
        let r = (2.0 * n as f64).sqrt();
        return Ok(if n == 0 { ln_phi0n(0, 1.0) + 0.25 } else { ln_phi0n(n, r) }.exp());
    }
    let rule = RadialRule::new(1, (2.0 * n as f64).sqrt() + 24.0, 96, 16)?;
    let v = rule.sample(|r| if r == 0.0 && n > 0 { 0.0 } else { ln_phi0n(n, r).exp() });
    Ok(rule.lp_norm(&v, p))
}

/// `||Phi_{0,beta}||_p` for `beta = (k, 0, ..., 0)`; the modulus factors over the planes.
pub fn single_eigenfunction_norm(d: u32, k: usize, p: f64) -> Result<f64> {
    Ok(phi0n_norm(k, p)? * phi0n_norm(0, p)?.powi(d as i32 - 1))
}

pub fn norm_lower_bound(s: SpectralIndex, x: &ExponentPoint<f64>, strategy: Strategy, seed: u64) -> Result<NormReport> {
    norm_lower_bound_with(s, x, strategy, seed, AscentOptions::default())
}

pub fn norm_lower_bound_with(
    s: SpectralIndex,
    x: &ExponentPoint<f64>,
    strategy: Strategy,
    seed: u64,
    opts: AscentOptions,
) -> Result<NormReport> {
    let (pr, qr) = (x.pr, x.qr);
    match strategy {
        Strategy::SingleEigenfunction => {
            let v = single_eigenfunction_norm(s.d, s.k, inv(qr))? / single_eigenfunction_norm(s.d, s.k, inv(pr))?;
            Ok(report(s, pr, qr, v, NormMethod::SingleEigenfunction, None))
        }
        Strategy::RingExtremizer => {
            let prof = RingProfile::new(s)?;
            let dual = x.dual();
            let v = prof.ratio(pr, qr)?.max(prof.ratio(dual.pr, dual.qr)?);
            Ok(report(s, pr, qr, v, NormMethod::RingExtremizer, None))
        }
        Strategy::EigenspaceAscent => {
            if (pr - 0.5).abs() > 1e-12 {
                return Err(Error::domain("eigenspace_ascent requires pr = 1/2"));
            }
            if s.d != 1 {
                return Err(Error::domain("eigenspace_ascent is implemented for d = 1"));
            }
            let v = eigenspace_ascent(s, inv(qr), seed, opts)?;
            Ok(report(s, pr, qr, v, NormMethod::EigenspaceAscent, Some(seed)))
        }
    }
}

const CHUNK: usize = 8192;
const SUP_SURROGATE: f64 = 40.0;

/// `Phi_{a,k}` for `a <= alpha_max` on a polar rule: Gauss-Legendre in `r`
/// times a uniform angle grid, using `Phi_{a,b}(R_t z) = e^{-i(a-b)t} Phi_{a,b}(z)`.
pub struct PolarBasis {
    pub values: Vec<Vec<C64>>,
    pub weights: Vec<f64>,
}

impl PolarBasis {
    pub fn new(s: SpectralIndex, alpha_max: usize, angles: usize) -> Result<Self> {
        if s.d != 1 {
            return Err(Error::domain("the polar eigenspace basis is implemented for d = 1"));
        }
        // H = -Delta + |z|^2/4 has eigenvalue a + k + 1 on Phi_{a,k}
        let r_max = 2.0 * ((s.k + alpha_max + 1) as f64).sqrt() + 8.0;
        let (r, w) = composite_legendre(0.0, r_max, 3 * r_max.ceil() as usize, 12);
        let rule = FwRule::for_order(2 * s.k.max(alpha_max), r_max);
        let radial: Vec<Vec<C64>> = (0..=alpha_max)
            .into_par_iter()
            .map(|a| r.iter().map(|x| special_hermite_plane(&rule, a, s.k, *x, 0.0)).collect())
            .collect();
        let dt = 2.0 * PI / angles as f64;
        let mut weights = Vec::with_capacity(r.len() * angles);
        for (x, wx) in r.iter().zip(&w) {
            for _ in 0..angles {
                weights.push(wx * x * dt);
            }
        }
        let values = radial
            .iter()
            .enumerate()
            .map(|(a, ra)| {
                let mut v = Vec::with_capacity(weights.len());
                for rv in ra {
                    for j in 0..angles {
                        v.push(rv * C64::from_polar(1.0, -(a as f64) * j as f64 * dt));
                    }
                }
                v
            })
            .collect();
        Ok(PolarBasis { values, weights })
    }

    /// `||sum_a c_a Phi_{a,k}||_q / ||sum_a c_a Phi_{a,k}||_2` on the rule.
    pub fn ratio(&self, c: &[C64], q: f64) -> f64 {
        let qs = if q.is_infinite() { SUP_SURROGATE } else { q };
        ratio_of(&evaluate(&self.values, &self.weights, c, qs), q)
    }
}

struct Eval {
    obj: f64,
    l2sq: f64,
    sup: f64,
    grad: Vec<C64>,
}

fn evaluate(basis: &[Vec<C64>], weights: &[f64], c: &[C64], q: f64) -> Eval {
    let n = weights.len();
    let na = basis.len();
    let half = 0.5 * q - 1.0;
    let even = half.fract() == 0.0 && half >= 0.0;
    let chunks: Vec<Eval> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| {
            let mut e = Eval {
                obj: 0.0,
                l2sq: 0.0,
                sup: 0.0,
                grad: vec![C64::new(0.0, 0.0); na],
            };
            for i in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
                let f: C64 = (0..na).map(|a| c[a] * basis[a][i]).sum();
                let m = f.norm();
                if m == 0.0 {
                    continue;
                }
                let w = weights[i];
                let mq2 = if even { (m * m).powi(half as i32) } else { m.powf(q - 2.0) } * w;
                e.obj += mq2 * m * m;
                e.l2sq += w * m * m;
                e.sup = e.sup.max(m);
                for a in 0..na {
                    e.grad[a] += f * basis[a][i].conj() * mq2;
                }
            }
            e
        })
        .collect();
    let mut out = Eval {
        obj: 0.0,
        l2sq: 0.0,
        sup: 0.0,
        grad: vec![C64::new(0.0, 0.0); na],
    };
    for e in chunks {
        out.obj += e.obj;
        out.l2sq += e.l2sq;
        out.sup = out.sup.max(e.sup);
        for (g, v) in out.grad.iter_mut().zip(&e.grad) {
            *g += v;
        }
    }
    for g in out.grad.iter_mut() {
        *g *= 0.5 * q;
    }
    out
}

fn normalize(c: &mut [C64]) {
    let n = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in c.iter_mut() {
        *v /= n;
    }
}

fn ratio_of(e: &Eval, q: f64) -> f64 {
    let num = if q.is_infinite() { e.sup } else { e.obj.powf(1.0 / q) };
    num / e.l2sq.sqrt()
}

/// Angle count that integrates `|f|^q` exactly when `q` is an even integer.
fn angle_count(q: f64, alpha_max: usize) -> usize {
    if q.is_infinite() {
        return 256;
    }
    let deg = (0.5 * q * alpha_max as f64).ceil() as usize;
    (deg + 8).next_multiple_of(8).max(32)
}

/// Projected gradient ascent of `||sum_a c_a Phi_{a,k}||_q` on the unit sphere
/// of coefficients, restarted from `Phi_{0,k}` and from random directions.
pub fn eigenspace_ascent(s: SpectralIndex, q: f64, seed: u64, opts: AscentOptions) -> Result<f64> {
    if !(q >= 2.0) {
        return Err(Error::domain(format!("eigenspace ascent needs q >= 2, got {q}")));
    }
    let basis = PolarBasis::new(s, opts.alpha_max, angle_count(q, opts.alpha_max))?;
    let qs = if q.is_infinite() { SUP_SURROGATE } else { q };
    let na = basis.values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for restart in 0..=opts.restarts {
        let mut c: Vec<C64> = if restart == 0 {
            let mut e = vec![C64::new(0.0, 0.0); na];
            e[0] = C64::new(1.0, 0.0);
            e
        } else {
            (0..na)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        };
        normalize(&mut c);
        let mut history: Vec<f64> = Vec::new();
        let mut run_best = 0.0f64;
        for it in 1..=opts.max_iter {
            let e = evaluate(&basis.values, &basis.weights, &c, qs);
            run_best = run_best.max(ratio_of(&e, q));
            history.push(run_best);
            if history.len() > opts.window {
                let old = history[history.len() - 1 - opts.window];
                if run_best - old <= opts.gain_tol * old {
                    break;
                }
            }
            // tangential part of the gradient
            let along: C64 = e.grad.iter().zip(&c).map(|(g, v)| g * v.conj()).sum();
            let tangent: Vec<C64> = e.grad.iter().zip(&c).map(|(g, v)| g - v * along.re).collect();
            let tn = tangent.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if tn == 0.0 {
                break;
            }
            let step = 0.1 / (it as f64).sqrt();
            for (v, t) in c.iter_mut().zip(&tangent) {
                *v += t * (step / tn);
            }
            normalize(&mut c);
        }
        best = best.max(run_best);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<Fit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("a fit needs at least two paired points"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::domain("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("a fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if lx.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Fit {
        slope,
        intercept,
        stderr,
    })
}

/// Slope of `log value` against `log mu`.
pub fn scaling_fit(reports: &[NormReport]) -> Result<Fit> {
    let first = reports.first().ok_or_else(|| Error::domain("no reports to fit"))?;
    if reports
        .iter()
        .any(|r| r.method != first.method || r.pr != first.pr || r.qr != first.qr)
    {
        return Err(Error::domain("reports must share (pr, qr, method)"));
    }
    let mut mus: Vec<u64> = reports.iter().map(|r| r.mu).collect();
    mus.sort_unstable();
    mus.dedup();
    if mus.len() < 4 {
        return Err(Error::domain(format!("need at least 4 distinct mu, got {}", mus.len())));
    }
    let x: Vec<f64> = reports.iter().map(|r| r.mu as f64).collect();
    let y: Vec<f64> = reports.iter().map(|r| r.value).collect();
    loglog_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lp_norm;
    use crate::hermite::{special_hermite_field, MultiIndex};
    use crate::projector::project_kernel_at;

    fn si(d: u32, k: usize) -> SpectralIndex {
        SpectralIndex::new(d, k).unwrap()
    }

    fn d1(mu: u64) -> SpectralIndex {
        SpectralIndex::from_mu(1, mu).unwrap()
    }

    #[test]
    fn ring_roots_and_spacing() {
        let mu = 401.0f64;
        assert!(ring_phase(mu, mu.sqrt() / 8.0) > ring_phase(mu, mu.sqrt() / 3.0));
        let mut ratios = Vec::new();
        for m in [101, 201, 401, 801] {
            let sys = build_rings(d1(m)).unwrap();
            let sq = (m as f64).sqrt();
            assert!(sys.roots[0] > sq / 8.0 && *sys.roots.last().unwrap() < sq / 3.0);
            for t in &sys.roots {
                assert!(ring_phase(m as f64, *t).sin().abs() <= 1e-10);
            }
            let gaps: Vec<f64> = sys.roots.windows(2).map(|w| (w[1] - w[0]) * sq).collect();
            let (lo, hi) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
            assert!(hi / lo <= 3.0);
            // the rings are disjoint
            assert!(lo / sq > sys.width);
            ratios.push(sys.count() as f64 / m as f64);
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
        assert!(hi / lo <= 2.0);
    }

    #[test]
    fn extremizer_field_support() {
        let s = d1(101);
        let grid = Grid::for_mu(1, 101.0).unwrap();
        let f = ring_extremizer(s, grid).unwrap();
        let sq = 101f64.sqrt();
        for (i, v) in f.samples().iter().enumerate() {
            if v.norm() > 0.0 {
                let c = grid.coords(i);
                let r = c[0].hypot(c[1]);
                assert!(r >= sq / 8.0 && r <= sq / 2.0);
            }
        }
        assert!(f.max_abs() > 0.0);
        assert!(ring_extremizer(s, Grid::new(1, 24.0, 40).unwrap()).is_err());
    }

    #[test]
    fn radial_route_matches_grid_convolution_near_origin() {
        let s = d1(101);
        let sq = 101f64.sqrt();
        let grid = Grid::new(1, sq / 2.0 + 0.5, 1200).unwrap();
        let f = ring_extremizer(s, grid).unwrap();
        let prof = RingProfile::new(s).unwrap();
        let n = grid.n;
        let centre = n / 2 * n + n / 2;
        let got = project_kernel_at(&f, s, &[centre]).unwrap()[0];
        let want = prof.coefficient * kernel_varsigma(s, 0.0).unwrap();
        assert!((got.re - want).abs() < 0.03 * want.abs(), "{got} vs {want}");
        assert!(got.im.abs() < 1e-6 * want.abs());
        let l1 = lp_norm(&f, 1.0).unwrap();
        assert!((l1 - prof.norm(1.0)).abs() < 0.03 * l1);
    }

    #[test]
    fn ring_at_the_one_infinity_corner() {
        // ratio / corner equals int_rings varsigma^2 / int_rings |varsigma| for d = 1
        for mu in [101u64, 201] {
            let s = d1(mu);
            let sys = build_rings(s).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for t in &sys.roots {
                let m = 4000;
                let h = sys.width / m as f64;
                for i in 0..m {
                    let r = t + (i as f64 + 0.5) * h;
                    let v = kernel_varsigma(s, r).unwrap();
                    num += v * v * 2.0 * PI * r * h;
                    den += v.abs() * 2.0 * PI * r * h;
                }
            }
            let x = ExponentPoint::new(1.0, 0.0).unwrap();
            let lb = norm_lower_bound(s, &x, Strategy::RingExtremizer, 0).unwrap().value;
            let corner = 1.0 / (2.0 * PI);
            assert!((lb / corner - num / den).abs() < 1e-6 * (num / den));
            assert!(lb <= corner);
        }
    }

    #[test]
    fn corner_values() {
        for k in [0, 3, 40] {
            let r = corner_norms(si(1, k)).unwrap();
            assert_eq!(r[0].value, 1.0);
            assert!((r[1].value - 1.0 / (2.0 * PI)).abs() < 1e-15);
            assert!((r[2].value - (2.0 * PI).powf(-0.5)).abs() < 1e-14);
            assert_eq!(r[2].value, r[3].value);
        }
        let ks: Vec<usize> = vec![10, 20, 40, 80, 120, 200];
        let mus: Vec<f64> = ks.iter().map(|k| (2 * k + 2) as f64).collect();
        let two_inf: Vec<f64> = ks.iter().map(|k| corner_norms(si(2, *k)).unwrap()[3].value).collect();
        let one_inf: Vec<f64> = ks.iter().map(|k| corner_norms(si(2, *k)).unwrap()[1].value).collect();
        assert!((loglog_fit(&mus, &two_inf).unwrap().slope - 0.5).abs() < 0.02);
        assert!((loglog_fit(&mus, &one_inf).unwrap().slope - 1.0).abs() < 0.05);
    }

    #[test]
    fn kernel_sup_is_at_the_origin() {
        for (d, k) in [(1, 5), (2, 7), (3, 4)] {
            let s = si(d, k);
            let (v, r) = kernel_sup(s).unwrap();
            let v0 = varsigma_at_origin(s);
            assert!(r < 1e-6, "argmax {r}");
            assert!((v - v0).abs() < 1e-12 * v0);
        }
    }

    #[test]
    fn single_eigenfunction_norms_match_the_grid() {
        let k = 5;
        let grid = Grid::new(1, 12.0, 128).unwrap();
        let f = special_hermite_field(&grid, &MultiIndex::new(vec![0]).unwrap(), &MultiIndex::new(vec![k]).unwrap())
            .unwrap();
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            let a = single_eigenfunction_norm(1, k, p).unwrap();
            let b = lp_norm(&f, p).unwrap();
            assert!((a - b).abs() < 2e-3 * a, "p={p}: {a} vs {b}");
        }
        assert!((single_eigenfunction_norm(2, 3, 2.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lower_bounds_stay_below_corners() {
        let s = d1(41);
        let corners = corner_norms(s).unwrap();
        for c in &corners {
            let x = ExponentPoint::new(c.pr, c.qr).unwrap();
            for strat in [Strategy::RingExtremizer, Strategy::SingleEigenfunction] {
                let lb = norm_lower_bound(s, &x, strat, 0).unwrap();
                assert!(lb.value <= c.value * (1.0 + 1e-9), "{strat:?} at {x}: {} > {}", lb.value, c.value);
                assert_eq!(lb.certification, Certification::LowerBound);
            }
        }
        let x = ExponentPoint::new(0.5, 0.0).unwrap();
        let opts = AscentOptions {
            restarts: 2,
            max_iter: 120,
            ..AscentOptions::default()
        };
        let lb = norm_lower_bound_with(s, &x, Strategy::EigenspaceAscent, 3, opts).unwrap();
        assert!(lb.value <= corners[3].value * 1.01);
    }

    #[test]
    fn ascent_beats_its_start_and_is_reproducible() {
        let s = d1(33);
        let x = ExponentPoint::new(0.5, 1.0 / 6.0).unwrap();
        let opts = AscentOptions {
            restarts: 2,
            max_iter: 150,
            ..AscentOptions::default()
        };
        let a = norm_lower_bound_with(s, &x, Strategy::EigenspaceAscent, 7, opts).unwrap();
        let b = norm_lower_bound_with(s, &x, Strategy::EigenspaceAscent, 7, opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let single = norm_lower_bound(s, &x, Strategy::SingleEigenfunction, 0).unwrap();
        assert!(a.value >= single.value * (1.0 - 1e-3));
        let bad = ExponentPoint::new(0.75, 0.25).unwrap();
        assert!(norm_lower_bound(s, &bad, Strategy::EigenspaceAscent, 0).is_err());
    }

    #[test]
    fn polar_rule_matches_the_grid() {
        let s = d1(21);
        let c: Vec<C64> = (0..=4).map(|a| C64::new(1.0 / (1.0 + a as f64), 0.3 * a as f64)).collect();
        let polar = PolarBasis::new(s, 4, 64).unwrap();
        let grid = Grid::for_mu(1, 21.0).unwrap();
        let cols = crate::hermite::plane_column(&grid, s.k, 4);
        let samples: Vec<C64> = (0..grid.len()).map(|i| (0..=4).map(|a| c[a] * cols[a][i]).sum()).collect();
        let f = Field::new(grid, samples).unwrap();
        for q in [4.0, 6.0] {
            let want = lp_norm(&f, q).unwrap() / f.l2();
            let got = polar.ratio(&c, q);
            assert!((got - want).abs() < 1e-3 * want, "q={q}: {got} vs {want}");
        }
    }

    #[test]
    fn fits() {
        let reports: Vec<NormReport> = [11u64, 21, 41, 81]
            .iter()
            .map(|m| corner_norms(d1(*m)).unwrap()[0].clone())
            .collect();
        let f = scaling_fit(&reports).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(scaling_fit(&reports[..3]).is_err());
        let g = loglog_fit(&[1.0, 2.0, 4.0], &[3.0, 12.0, 48.0]).unwrap();
        assert!((g.slope - 2.0).abs() < 1e-12 && g.stderr < 1e-12);
    }
}

//! The resolvent `(L - z)^{-1}`, its splitting around the nearest eigenvalue,
//! fractional powers `L^{-s}` and uniform-bound sweeps over `z`.

use crate::error::{Error, Result};
use crate::extremal::{kernel_lq_norm, single_eigenfunction_norm};
use crate::field::Field;
use crate::laguerre::SpectralIndex;
use crate::projector::SpectralParts;
use crate::radial::{complex_lp_norm, RadialExpansion, RadialRule};
use crate::region::{in_resolvent_pentagon, ExponentPoint, PentagonVerdict};
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Even smooth cutoff, `1` on `[-1/2, 1/2]`, supported in `(-1, 1)`.
pub fn zeta(x: f64) -> f64 {
    let a = x.abs();
    let up = h(1.0 - a);
    let down = h(a - 0.5);
    if up == 0.0 {
        0.0
    } else {
        up / (up + down)
    }
}

/// `z = 2n + d - 2(a + ib)` with `-1/2 <= a < 1/2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Anchor {
    pub n: u64,
    pub a: f64,
    pub b: f64,
}

impl Anchor {
    pub fn c(&self) -> C64 {
        C64::new(self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralParameterZ {
    pub z: C64,
    pub d: u32,
    pub gap: f64,
    pub anchor: Option<Anchor>,
}

impl SpectralParameterZ {
    pub fn new(z: C64, d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("d must be >= 1"));
        }
        let gap = spectral_gap(z, d);
        if gap == 0.0 {
            return Err(Error::domain(format!("z = {z} lies on the spectrum")));
        }
        let df = d as f64;
        let anchor = if z.re > df - 0.5 {
            let n = ((z.re - df) / 2.0 - 0.5).ceil().max(0.0);
            Some(Anchor {
                n: n as u64,
                a: n + (df - z.re) / 2.0,
                b: -z.im / 2.0,
            })
        } else {
            None
        };
        Ok(SpectralParameterZ { z, d, gap, anchor })
    }

    pub fn mu_nearest(&self) -> u64 {
        let j = ((self.z.re - self.d as f64) / 2.0).round().max(0.0);
        2 * j as u64 + self.d as u64
    }
}

/// `dist(z, 2N_0 + d)`.
pub fn spectral_gap(z: C64, d: u32) -> f64 {
    let j = ((z.re - d as f64) / 2.0).round().max(0.0);
    (z - C64::new(2.0 * j + d as f64, 0.0)).norm()
}

pub fn resolvent_symbol(z: C64) -> impl Fn(f64) -> C64 {
    move |mu| (C64::new(mu, 0.0) - z).inv()
}

#[derive(Clone, Debug)]
pub struct ResolventResult {
    pub field: Field,
    /// `|mu - z|^{-1}` times the mass the truncation misses.
    pub tail_bound: f64,
}

/// `sum_{mu <= mu_max} (mu - z)^{-1} P_mu f` with a bound for the omitted part.
pub fn resolvent_apply(f: &Field, parts: &SpectralParts, z: &SpectralParameterZ) -> Result<ResolventResult> {
    if parts.d != z.d || f.grid().d != z.d {
        return Err(Error::domain("dimensions of z, f and the spectral parts disagree"));
    }
    let field = parts.combine(resolvent_symbol(z.z));
    let captured = parts.combine(|_| C64::new(1.0, 0.0));
    let missing = f.sub(&captured)?.l2() + parts.residual * f.l2();
    let next = (2 * (parts.kmax() + 1)) as f64 + z.d as f64;
    let dist = (C64::new(next, 0.0) - z.z).norm().min(z.gap);
    Ok(ResolventResult {
        field,
        tail_bound: missing / dist,
    })
}

/// Coefficients of the four pieces on `P_{2k+d}`, `k <= kmax`.
#[derive(Clone, Debug)]
pub struct PieceCoefficients {
    pub i1: Vec<C64>,
    pub i2: Vec<C64>,
    pub i3: Vec<C64>,
    pub e: Vec<C64>,
}

fn zeta_ratio(k: i64, n: u64) -> f64 {
    if n == 0 {
        if k == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        zeta(k as f64 / n as f64)
    }
}

pub fn piece_coefficients(z: &SpectralParameterZ, kmax: usize) -> Result<PieceCoefficients> {
    let an = z
        .anchor
        .ok_or_else(|| Error::domain(format!("anchor needs Re z > d - 1/2, got z = {}", z.z)))?;
    let c = an.c();
    let n = an.n as i64;
    let zero = C64::new(0.0, 0.0);
    let mut out = PieceCoefficients {
        i1: vec![zero; kmax + 1],
        i2: vec![zero; kmax + 1],
        i3: vec![zero; kmax + 1],
        e: vec![zero; kmax + 1],
    };
    if (n as usize) <= kmax {
        out.i1[n as usize] = (2.0 * c).inv();
    }
    for j in 1..=n {
        let zt = zeta_ratio(j, an.n);
        if zt == 0.0 {
            continue;
        }
        let jf = j as f64;
        let below = (n - j) as usize;
        let w3 = zt / (2.0 * (jf + c));
        if below <= kmax {
            out.i2[below] += c * zt / ((jf + c) * (c - jf));
            out.i3[below] -= w3;
        }
        let above = (n + j) as usize;
        if above <= kmax {
            out.i3[above] += w3;
        }
    }
    for (k, e) in out.e.iter_mut().enumerate() {
        let mu = (2 * k) as f64 + z.d as f64;
        *e = (1.0 - zeta_ratio(k as i64 - n, an.n)) / (mu - z.z);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub i1: Field,
    pub i2: Field,
    pub i3: Field,
    pub e: Field,
}

impl Decomposition {
    pub fn sum(&self) -> Field {
        let one = C64::new(1.0, 0.0);
        self.i1
            .axpy(one, &self.i2)
            .and_then(|s| s.axpy(one, &self.i3))
            .and_then(|s| s.axpy(one, &self.e))
            .expect("same grid")
    }
}

fn by_table(parts: &SpectralParts, table: &[C64]) -> Field {
    let d = parts.d as f64;
    parts.combine(|mu| table[((mu - d) / 2.0).round() as usize])
}

pub fn decompose(z: &SpectralParameterZ, parts: &SpectralParts) -> Result<Decomposition> {
    if parts.d != z.d {
        return Err(Error::domain("dimensions of z and the spectral parts disagree"));
    }
    let c = piece_coefficients(z, parts.kmax())?;
    Ok(Decomposition {
        i1: by_table(parts, &c.i1),
        i2: by_table(parts, &c.i2),
        i3: by_table(parts, &c.i3),
        e: by_table(parts, &c.e),
    })
}

/// `m_n(t) = t (1 - zeta((t - 2n - d) / 2n)) / (t - z)`, so that the remainder
/// piece is `m_n(L) L^{-1}`.
pub fn symbol_mn(t: f64, z: &SpectralParameterZ) -> Result<C64> {
    let an = z.anchor.ok_or_else(|| Error::domain("m_n needs an anchored z"))?;
    let off = t - (2 * an.n) as f64 - z.d as f64;
    let cut = if an.n == 0 {
        if off == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        zeta(off / (2 * an.n) as f64)
    };
    Ok(t * (1.0 - cut) / (t - z.z))
}

/// The remainder piece through `m_n(L) L^{-1}`.
pub fn remainder_via_symbol(z: &SpectralParameterZ, parts: &SpectralParts) -> Result<Field> {
    symbol_mn(z.d as f64, z)?;
    Ok(parts.combine(|mu| symbol_mn(mu, z).expect("anchored") / mu))
}

/// `sup_t (1 + t)^l |m_n^{(l)}(t)|` for `l = 0, 1, 2` over `t in (0, t_max]`.
pub fn symbol_derivative_constants(z: &SpectralParameterZ, t_max: f64, samples: usize) -> Result<[f64; 3]> {
    symbol_mn(1.0, z)?;
    let m = |t: f64| symbol_mn(t, z).expect("anchored");
    let mut out = [0.0f64; 3];
    for i in 1..=samples {
        let t = t_max * i as f64 / samples as f64;
        let hstep = 1e-3 * (1.0 + t).min(10.0);
        let (lo, mid, hi) = (m(t - hstep), m(t), m(t + hstep));
        let d1 = (hi - lo) / (2.0 * hstep);
        let d2 = (hi - 2.0 * mid + lo) / (hstep * hstep);
        out[0] = out[0].max(mid.norm());
        out[1] = out[1].max((1.0 + t) * d1.norm());
        out[2] = out[2].max((1.0 + t).powi(2) * d2.norm());
    }
    Ok(out)
}

/// `sum_{k=1}^n zeta(k/n) sin(2kt) / (k + c)`.
pub fn partial_sum(n: u64, c: C64, t: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..=n {
        let zt = zeta(k as f64 / n as f64);
        if zt == 0.0 {
            break;
        }
        acc += zt * (2.0 * k as f64 * t).sin() / (k as f64 + c);
    }
    acc
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PartialSumSup {
    pub n: u64,
    pub a: f64,
    pub b: f64,
    pub sup: f64,
    pub argmax: f64,
}

/// Sup over `t in [-pi/2, pi/2]` (the sum is odd in `t`) on a grid of
/// `16 n + 64` points in `[0, pi/2]`.
pub fn partial_sum_sup(n: u64, c: C64) -> PartialSumSup {
    let m = 16 * n as usize + 64;
    let (mut best, mut arg) = (0.0, 0.0);
    for i in 0..=m {
        let t = FRAC_PI_2 * i as f64 / m as f64;
        let v = partial_sum(n, c, t).norm();
        if v > best {
            best = v;
            arg = t;
        }
    }
    PartialSumSup {
        n,
        a: c.re,
        b: c.im,
        sup: best,
        argmax: arg,
    }
}

/// The sup table over `n` and the anchor offsets `(a, b)`.
pub fn partial_sum_scan(ns: &[u64], offsets: &[(f64, f64)]) -> Vec<PartialSumSup> {
    let cells: Vec<(u64, f64, f64)> = ns
        .iter()
        .flat_map(|n| offsets.iter().map(move |(a, b)| (*n, *a, *b)))
        .collect();
    cells
        .par_iter()
        .map(|(n, a, b)| partial_sum_sup(*n, C64::new(*a, *b)))
        .collect()
}

/// `L^{-s} f = sum mu^{-s} P_mu f` on the span of `parts`.
pub fn fractional_power(parts: &SpectralParts, s: f64) -> Result<Field> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("fractional order s = {s} must be > 0")));
    }
    Ok(parts.combine(|mu| C64::new(mu.powf(-s), 0.0)))
}

/// Radial rule with a `varsigma` table, shared by the radial probes.
pub struct RadialContext {
    pub d: u32,
    pub rule: RadialRule,
    pub table: Vec<Vec<f64>>,
    pub kmax: usize,
}

impl RadialContext {
    pub fn new(d: u32, kmax: usize, r_max: f64) -> Result<Self> {
        let rule = RadialRule::new(d, r_max, (8.0 * r_max).ceil() as usize, 12)?;
        let table = rule.varsigma_table(kmax)?;
        Ok(RadialContext { d, rule, table, kmax })
    }

    pub fn for_kmax(d: u32, kmax: usize) -> Result<Self> {
        Self::new(d, kmax, 2.0 * ((2 * kmax + d as usize) as f64).sqrt() + 16.0)
    }

    pub fn gaussian(&self, lambda: f64) -> Result<(Vec<f64>, RadialExpansion)> {
        let v = self.rule.sample(|r| (-lambda * r * r / 4.0).exp());
        let a = self.rule.coefficients(&v, self.kmax)?;
        Ok((v, RadialExpansion::from_real(self.d, &a)))
    }

    pub fn norm(&self, e: &RadialExpansion, p: f64) -> f64 {
        complex_lp_norm(&self.rule, &e.values_with(&self.table), p)
    }
}

/// `||L^{-s} f_lambda||_q / ||f_lambda||_p` for the Gaussians
/// `f_lambda = e^{-lambda |z|^2 / 4}`, through their radial expansions.
pub fn fractional_probe(ctx: &RadialContext, s: f64, x: &ExponentPoint<f64>, lambdas: &[f64]) -> Result<Vec<f64>> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("fractional order s = {s} must be > 0")));
    }
    lambdas
        .iter()
        .map(|l| {
            let (v, e) = ctx.gaussian(*l)?;
            let g = e.apply(|mu| C64::new(mu.powf(-s), 0.0));
            Ok(ctx.norm(&g, inv(x.qr)) / ctx.rule.lp_norm(&v, inv(x.pr)))
        })
        .collect()
}

fn inv(r: f64) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else {
        1.0 / r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TestFunction {
    Gaussian(f64),
    /// `varsigma_{n + offset}` for the anchor `n` of `z`.
    Varsigma(usize),
    /// `Phi_{0, (n + offset, 0, ..)}`.
    Eigen(usize),
}

impl TestFunction {
    pub fn id(&self) -> String {
        match self {
            TestFunction::Gaussian(l) => format!("gauss_{l}"),
            TestFunction::Varsigma(o) => format!("varsigma_n+{o}"),
            TestFunction::Eigen(o) => format!("phi_n+{o}"),
        }
    }
}

pub fn default_family() -> Vec<TestFunction> {
    vec![
        TestFunction::Gaussian(0.5),
        TestFunction::Gaussian(1.0),
        TestFunction::Gaussian(2.0),
        TestFunction::Varsigma(0),
        TestFunction::Varsigma(1),
        TestFunction::Eigen(0),
        TestFunction::Eigen(1),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub z_re: f64,
    pub z_im: f64,
    pub gap: f64,
    pub test_id: String,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub d: u32,
    pub pr: f64,
    pub qr: f64,
    pub rows: Vec<SweepRow>,
    /// Max over the family, per `z` in sweep order.
    pub per_z: Vec<f64>,
    /// `max / min` of `per_z`.
    pub diagnostic: f64,
}

/// The sweep points `2n + d + 1` and `2n + d + ci` for `n <= n_max`.
pub fn sweep_points(d: u32, c: f64, n_max: u64) -> Vec<C64> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        let mu = (2 * n) as f64 + d as f64;
        out.push(C64::new(mu + 1.0, 0.0));
        out.push(C64::new(mu, c));
    }
    out
}

fn eigen_ratio(z: &SpectralParameterZ, k: usize, member: &TestFunction, pr: f64, qr: f64) -> Result<f64> {
    let s = SpectralIndex::new(z.d, k)?;
    let dist = (C64::new(s.mu as f64, 0.0) - z.z).norm();
    let (p, q) = (inv(pr), inv(qr));
    let r = match member {
        TestFunction::Varsigma(_) => kernel_lq_norm(s, q)? / kernel_lq_norm(s, p)?,
        _ => single_eigenfunction_norm(z.d, k, q)? / single_eigenfunction_norm(z.d, k, p)?,
    };
    Ok(r / dist)
}

/// `max_f ||(L - z)^{-1} f||_q / ||f||_p` over the family at every sweep point.
pub fn uniform_sweep(
    x: &ExponentPoint<f64>,
    d: u32,
    c: f64,
    n_max: u64,
    family: &[TestFunction],
) -> Result<SweepReport> {
    let verdict = in_resolvent_pentagon(x, d)?;
    if verdict != PentagonVerdict::InteriorOrEdge {
        return Err(Error::domain(format!(
            "({}, {}) is not in the uniform resolvent range: {}",
            x.pr,
            x.qr,
            verdict.tag()
        )));
    }
    if !(c > 0.0) {
        return Err(Error::domain("the gap constant c must be > 0"));
    }
    let kmax = 2 * n_max as usize + 80;
    let ctx = RadialContext::for_kmax(d, kmax)?;
    let gaussians: Vec<(f64, Vec<f64>, RadialExpansion)> = family
        .iter()
        .filter_map(|m| match m {
            TestFunction::Gaussian(l) => Some(*l),
            _ => None,
        })
        .map(|l| ctx.gaussian(l).map(|(v, e)| (l, v, e)))
        .collect::<Result<_>>()?;
    let zs = sweep_points(d, c, n_max);
    let (pr, qr) = (x.pr, x.qr);
    let cells: Vec<Vec<SweepRow>> = zs
        .par_iter()
        .map(|z| {
            let sz = SpectralParameterZ::new(*z, d)?;
            let n = sz.anchor.map(|a| a.n as usize).unwrap_or(0);
            family
                .iter()
                .map(|m| {
                    let ratio = match m {
                        TestFunction::Gaussian(l) => {
                            let (_, v, e) = gaussians.iter().find(|g| g.0 == *l).expect("expanded");
                            let g = e.apply(resolvent_symbol(*z));
                            ctx.norm(&g, inv(qr)) / ctx.rule.lp_norm(v, inv(pr))
                        }
                        TestFunction::Varsigma(o) | TestFunction::Eigen(o) => eigen_ratio(&sz, n + o, m, pr, qr)?,
                    };
                    Ok(SweepRow {
                        z_re: z.re,
                        z_im: z.im,
                        gap: sz.gap,
                        test_id: m.id(),
                        ratio,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_z: Vec<f64> = cells
        .iter()
        .map(|rows| rows.iter().map(|r| r.ratio).fold(0.0, f64::max))
        .collect();
    let hi = per_z.iter().copied().fold(0.0, f64::max);
    let lo = per_z.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SweepReport {
        d,
        pr,
        qr,
        rows: cells.into_iter().flatten().collect(),
        per_z,
        diagnostic: hi / lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::hermite::{special_hermite_field, MultiIndex};
    use crate::projector::spectral_parts;
    use crate::region::canonical_points;
    use proptest::prelude::*;

    fn gaussian_parts() -> (Field, SpectralParts) {
        let grid = Grid::new(1, 9.0, 72).unwrap();
        let f = Field::from_fn(grid, |c| {
            C64::new((-((c[0] - 1.0).powi(2) + (c[1] + 0.5).powi(2)) / 4.0).exp(), 0.2 * c[0])
                * (-(c[0] * c[0] + c[1] * c[1]) / 16.0).exp()
        });
        let parts = spectral_parts(&f, 12, 40).unwrap();
        (f, parts)
    }

    #[test]
    fn zeta_shape() {
        assert_eq!(zeta(0.0), 1.0);
        assert_eq!(zeta(0.5), 1.0);
        assert_eq!(zeta(-0.3), 1.0);
        assert_eq!(zeta(1.0), 0.0);
        assert_eq!(zeta(-1.5), 0.0);
        for x in [0.6, 0.75, 0.9] {
            assert!(zeta(x) > 0.0 && zeta(x) < 1.0);
            assert_eq!(zeta(x), zeta(-x));
        }
        assert!(zeta(0.6) > zeta(0.75) && zeta(0.75) > zeta(0.9));
    }

    #[test]
    fn anchors() {
        let z = SpectralParameterZ::new(C64::new(9.3, 0.4), 1).unwrap();
        let a = z.anchor.unwrap();
        assert_eq!(a.n, 4);
        let back = C64::new((2 * a.n) as f64 + 1.0, 0.0) - 2.0 * a.c();
        assert!((back - z.z).norm() < 1e-14);
        assert!(a.a.abs() <= 0.5);
        let mid = SpectralParameterZ::new(C64::new(7.0, 0.0), 2).unwrap();
        assert_eq!(mid.anchor.unwrap().n, 2);
        assert_eq!(mid.anchor.unwrap().a, -0.5);
        assert!((mid.gap - 1.0).abs() < 1e-15);
        assert!(SpectralParameterZ::new(C64::new(5.0, 0.0), 1).is_err());
        assert!(SpectralParameterZ::new(C64::new(0.2, 1.0), 1).unwrap().anchor.is_none());
        assert!((spectral_gap(C64::new(-3.0, 4.0), 1) - 32f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn eigenvector_blow_up() {
        let grid = Grid::new(1, 12.0, 240).unwrap();
        let k = 3;
        let f = special_hermite_field(&grid, &MultiIndex::new(vec![0]).unwrap(), &MultiIndex::new(vec![k]).unwrap())
            .unwrap();
        let parts = spectral_parts(&f, 6, 30).unwrap();
        let mu = 7.0;
        for eps in [1.0, 1e-2, 1e-4, 1e-6] {
            let z = SpectralParameterZ::new(C64::new(mu - eps, 0.0), 1).unwrap();
            let r = resolvent_apply(&f, &parts, &z).unwrap();
            let dist = mu - z.z.re;
            let ratio = r.field.l2() / f.l2();
            assert!((ratio * dist - 1.0).abs() < 1e-10, "eps={eps}: {}", ratio * dist);
            let want = f.scale(C64::new(1.0 / dist, 0.0));
            assert!(r.field.rel_l2_error(&want).unwrap() < 1e-10);
        }
    }

    #[test]
    fn inverse_and_identity() {
        let (_, parts) = gaussian_parts();
        let span = parts.combine(|_| C64::new(1.0, 0.0));
        let z = C64::new(6.1, 0.7);
        let w = C64::new(2.5, -1.3);
        let rz = parts.combine(resolvent_symbol(z));
        // (L - z) applied back
        let back = parts.combine(|mu| (C64::new(mu, 0.0) - z) * (C64::new(mu, 0.0) - z).inv());
        assert!(back.rel_l2_error(&span).unwrap() < 1e-10);
        let rw = parts.combine(resolvent_symbol(w));
        let lhs = rz.sub(&rw).unwrap();
        let rhs = parts.combine(|mu| (z - w) * (C64::new(mu, 0.0) - z).inv() * (C64::new(mu, 0.0) - w).inv());
        assert!(lhs.rel_l2_error(&rhs).unwrap() < 1e-8);
        let s1 = fractional_power(&parts, 1.0).unwrap();
        let again = parts.combine(|mu| C64::new(mu * mu.powf(-1.0), 0.0));
        assert!(again.rel_l2_error(&span).unwrap() < 1e-12);
        assert!(s1.l2() < span.l2());
        assert!(fractional_power(&parts, 0.0).is_err());
    }

    #[test]
    fn decomposition_telescopes() {
        let (_, parts) = gaussian_parts();
        for z in [C64::new(13.4, 0.3), C64::new(9.0, -2.0), C64::new(1.2, 0.5), C64::new(20.0, 0.0)] {
            let sz = SpectralParameterZ::new(z, 1).unwrap();
            let dec = decompose(&sz, &parts).unwrap();
            let direct = parts.combine(resolvent_symbol(z));
            assert!(dec.sum().rel_l2_error(&direct).unwrap() < 1e-10);
            let via = remainder_via_symbol(&sz, &parts).unwrap();
            assert!(via.sub(&dec.e).unwrap().l2() <= 1e-10 * direct.l2());
        }
    }

    #[test]
    fn first_piece_on_the_anchor_eigenspace() {
        let grid = Grid::new(1, 10.0, 120).unwrap();
        let k = 4;
        let f = special_hermite_field(&grid, &MultiIndex::new(vec![1]).unwrap(), &MultiIndex::new(vec![k]).unwrap())
            .unwrap();
        let parts = spectral_parts(&f, 8, 30).unwrap();
        let sz = SpectralParameterZ::new(C64::new(9.0 - 0.6, 0.8), 1).unwrap();
        let an = sz.anchor.unwrap();
        assert_eq!(an.n as usize, k);
        let dec = decompose(&sz, &parts).unwrap();
        let want = f.scale((2.0 * an.c()).inv());
        assert!(dec.i1.rel_l2_error(&want).unwrap() < 1e-8);
    }

    #[test]
    fn partial_sums_stay_bounded() {
        let ns: Vec<u64> = vec![1, 2, 5, 10, 50, 200, 1000];
        let offsets = [(0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.3, -2.0)];
        let scan = partial_sum_scan(&ns, &offsets);
        let top = scan.iter().map(|s| s.sup).fold(0.0, f64::max);
        assert!(top < 4.0, "{top}");
        // no growth in n
        let small = scan.iter().filter(|s| s.n <= 50).map(|s| s.sup).fold(0.0, f64::max);
        let large = scan.iter().filter(|s| s.n > 50).map(|s| s.sup).fold(0.0, f64::max);
        assert!(large <= 1.05 * small.max(1.0));
    }

    #[test]
    fn symbol_derivatives_are_bounded() {
        let consts: Vec<[f64; 3]> = [4u64, 16, 64, 256]
            .iter()
            .map(|n| {
                let z = SpectralParameterZ::new(C64::new((2 * n) as f64 + 2.0 - 0.4, 0.6), 2).unwrap();
                symbol_derivative_constants(&z, (8 * n) as f64, 4000).unwrap()
            })
            .collect();
        for l in 0..3 {
            let first = consts[0][l];
            for c in &consts {
                assert!(c[l].is_finite() && c[l] <= 1.01 * first, "l={l}: {consts:?}");
            }
        }
    }

    /// `||(-Delta)^{-1} f||_4 / ||f||_{4/3}` in R^4 for a Gaussian, through the
    /// radial Green's function `u(r) = (r^{-2} int_0^r f s^3 ds + int_r^inf f s ds) / 2`.
    fn riesz_ratio() -> f64 {
        let m = 200_000;
        let rmax = 60.0;
        let h = rmax / m as f64;
        let f = |r: f64| (-r * r / 4.0).exp();
        let r: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
        let mut inner = vec![0.0; m + 1];
        for i in 1..=m {
            let (a, b) = (r[i - 1], r[i]);
            inner[i] = inner[i - 1] + 0.5 * h * (f(a) * a.powi(3) + f(b) * b.powi(3));
        }
        let mut outer = vec![0.0; m + 1];
        for i in (0..m).rev() {
            let (a, b) = (r[i], r[i + 1]);
            outer[i] = outer[i + 1] + 0.5 * h * (f(a) * a + f(b) * b);
        }
        let area = 2.0 * std::f64::consts::PI.powi(2);
        let (mut u4, mut f43) = (0.0, 0.0);
        for i in 1..=m {
            let u = 0.5 * (inner[i] / (r[i] * r[i]) + outer[i]);
            let w = if i == m { 0.5 * h } else { h } * area * r[i].powi(3);
            u4 += w * u.powi(4);
            f43 += w * f(r[i]).powf(4.0 / 3.0);
        }
        u4.powf(0.25) / f43.powf(0.75)
    }

    #[test]
    fn fractional_probe_is_bounded_by_the_riesz_limit() {
        let ctx = RadialContext::for_kmax(2, 1200).unwrap();
        let x = ExponentPoint::new(0.75, 0.25).unwrap();
        let lambdas = [0.25, 1.0, 4.0, 16.0, 64.0];
        let r = fractional_probe(&ctx, 1.0, &x, &lambdas).unwrap();
        let limit = riesz_ratio();
        for w in r.windows(2) {
            assert!(w[0] < w[1], "{r:?}");
        }
        assert!(r.iter().all(|v| *v <= 1.01 * limit), "{r:?} vs {limit}");
        assert!((r[4] - limit).abs() < 0.05 * limit, "{r:?} vs {limit}");
        assert!(r[4] / r[3] <= r[3] / r[2]);
    }

    #[test]
    fn gaussian_expansion_tracks_the_grid_route() {
        // the radial resolvent of a centred Gaussian against the eigen route on a grid, d = 1
        let grid = Grid::new(1, 10.0, 100).unwrap();
        let f = Field::radial(grid, |r| (-r * r / 4.0 * 0.7).exp());
        let parts = spectral_parts(&f, 20, 60).unwrap();
        let z = C64::new(4.0, 0.5);
        let g = parts.combine(resolvent_symbol(z));
        let ctx = RadialContext::for_kmax(1, 60).unwrap();
        let (_, e) = ctx.gaussian(0.7).unwrap();
        let r = e.apply(resolvent_symbol(z));
        let a = ctx.norm(&r, 2.0);
        assert!((a - g.l2()).abs() < 1e-4 * a, "{a} vs {}", g.l2());
    }

    #[test]
    fn sweep_examples() {
        let d = 2;
        let half = ExponentPoint::new(0.5, 0.5).unwrap();
        let rep = uniform_sweep(&half, d, 1.0, 20, &default_family()).unwrap();
        assert!(rep.diagnostic <= 3.0);
        for r in &rep.rows {
            assert!(r.ratio <= 1.0 / r.gap * (1.0 + 1e-9));
        }
        let cp = canonical_points::<f64>(d).unwrap();
        let rep = uniform_sweep(&cp.d_dual, d, 1.0, 20, &default_family()).unwrap();
        assert!(rep.diagnostic <= 3.0, "{}", rep.diagnostic);
        let outside = ExponentPoint::new(1.0, 0.0).unwrap();
        assert!(uniform_sweep(&outside, d, 1.0, 5, &default_family()).is_err());
        // violating the gap
        let sz = SpectralParameterZ::new(C64::new(10.01, 0.0), d).unwrap();
        let blow = eigen_ratio(&sz, 4, &TestFunction::Eigen(0), 0.5, 0.5).unwrap();
        assert!(blow >= 100.0 * rep.per_z.iter().copied().fold(0.0, f64::max).min(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn pieces_sum_to_the_resolvent(re in 0.6f64..80.0, im in -3.0f64..3.0, d in 1u32..4) {
            let z = C64::new(re, im);
            prop_assume!(spectral_gap(z, d) > 1e-3);
            prop_assume!(re > d as f64 - 0.5);
            let sz = SpectralParameterZ::new(z, d).unwrap();
            let kmax = 60;
            let c = piece_coefficients(&sz, kmax).unwrap();
            for k in 0..=kmax {
                let an = sz.anchor.unwrap();
                if k + (an.n as usize) > kmax { continue; }
                let mu = (2 * k) as f64 + d as f64;
                let want = (C64::new(mu, 0.0) - z).inv();
                let got = c.i1[k] + c.i2[k] + c.i3[k] + c.e[k];
                prop_assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }
}

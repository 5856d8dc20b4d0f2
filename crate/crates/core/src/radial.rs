//! Radial functions on C^d: quadrature in `|z|`, norms, and expansions in the
//! kernels `varsigma_k`. A radial `f` satisfies `P_mu f = a_k varsigma_k` with
//! `a_k = <f, varsigma_k> / ||varsigma_k||^2`.

use crate::error::{Error, Result};
use crate::laguerre::{kernel_l2_norm, sphere_area, varsigma_all, SpectralIndex};
use crate::quad::composite_legendre;
use crate::C64;
use rayon::prelude::*;

/// Composite Gauss-Legendre rule in `r` carrying the measure `|S^{2d-1}| r^{2d-1} dr`.
#[derive(Clone, Debug)]
pub struct RadialRule {
    pub d: u32,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

impl RadialRule {
    pub fn new(d: u32, r_max: f64, panels: usize, order: usize) -> Result<Self> {
        if d == 0 || !(r_max > 0.0) || panels == 0 || order == 0 {
            return Err(Error::domain("radial rule needs d >= 1, r_max > 0 and a nonempty rule"));
        }
        let (r, w) = composite_legendre(0.0, r_max, panels, order);
        let area = sphere_area(d);
        let w = r
            .iter()
            .zip(&w)
            .map(|(r, w)| w * area * r.powi(2 * d as i32 - 1))
            .collect();
        Ok(RadialRule { d, r, w })
    }

    /// Rule on `[a, b]` only, for functions supported there.
    pub fn on_interval(d: u32, a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        if !(b > a && a >= 0.0) {
            return Err(Error::domain(format!("bad radial interval [{a}, {b}]")));
        }
        let (r, w) = composite_legendre(a, b, panels, order);
        let area = sphere_area(d);
        let w = r
            .iter()
            .zip(&w)
            .map(|(r, w)| w * area * r.powi(2 * d as i32 - 1))
            .collect();
        Ok(RadialRule { d, r, w })
    }

    /// Union of several rules, as for functions on disjoint rings.
    pub fn concat(parts: &[RadialRule]) -> Result<Self> {
        let d = parts.first().map(|p| p.d).ok_or_else(|| Error::domain("no parts"))?;
        let mut r = Vec::new();
        let mut w = Vec::new();
        for p in parts {
            r.extend_from_slice(&p.r);
            w.extend_from_slice(&p.w);
        }
        Ok(RadialRule { d, r, w })
    }

    pub fn sample<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        self.r.par_iter().map(|r| f(*r)).collect()
    }

    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let s: f64 = values.iter().zip(&self.w).map(|(v, w)| w * v.abs().powf(p)).sum();
        s.powf(1.0 / p)
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.w).map(|((a, b), w)| a * b * w).sum()
    }

    /// `varsigma_0..=varsigma_kmax` at every node, indexed `[node][k]`.
    pub fn varsigma_table(&self, kmax: usize) -> Result<Vec<Vec<f64>>> {
        self.r.par_iter().map(|r| varsigma_all(self.d, kmax, *r)).collect()
    }

    /// Expansion coefficients `a_k` of the radial profile sampled at the nodes.
    pub fn coefficients(&self, values: &[f64], kmax: usize) -> Result<Vec<f64>> {
        let table = self.varsigma_table(kmax)?;
        Ok(coefficients_from_table(self.d, &table, &self.w, values, kmax))
    }
}

fn coefficients_from_table(d: u32, table: &[Vec<f64>], w: &[f64], values: &[f64], kmax: usize) -> Vec<f64> {
    let mut a = vec![0.0; kmax + 1];
    for ((row, w), v) in table.iter().zip(w).zip(values) {
        for (k, s) in row.iter().enumerate() {
            a[k] += w * v * s;
        }
    }
    for (k, ak) in a.iter_mut().enumerate() {
        let n = kernel_l2_norm(SpectralIndex { d, k, mu: 2 * k as u64 + d as u64 });
        *ak /= n * n;
    }
    a
}

/// A radial function through its `varsigma_k` coefficients (complex, so
/// that spectral multipliers can act on it).
#[derive(Clone, Debug)]
pub struct RadialExpansion {
    pub d: u32,
    pub coeffs: Vec<C64>,
}

impl RadialExpansion {
    pub fn from_real(d: u32, coeffs: &[f64]) -> Self {
        RadialExpansion {
            d,
            coeffs: coeffs.iter().map(|c| C64::new(*c, 0.0)).collect(),
        }
    }

    pub fn kmax(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `sum_k m(2k + d) a_k varsigma_k`.
    pub fn apply<M: Fn(f64) -> C64>(&self, m: M) -> RadialExpansion {
        let d = self.d as f64;
        RadialExpansion {
            d: self.d,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * m(2.0 * k as f64 + d))
                .collect(),
        }
    }

    /// `||P_{2k+d} f||_2 = |a_k| ||varsigma_k||_2`.
    pub fn part_l2(&self, k: usize) -> f64 {
        self.coeffs[k].norm()
            * kernel_l2_norm(SpectralIndex {
                d: self.d,
                k,
                mu: 2 * k as u64 + self.d as u64,
            })
    }

    pub fn l2(&self) -> f64 {
        (0..self.coeffs.len()).map(|k| self.part_l2(k).powi(2)).sum::<f64>().sqrt()
    }

    /// Values at the nodes of `rule`, from a precomputed `varsigma` table.
    pub fn values_with(&self, table: &[Vec<f64>]) -> Vec<C64> {
        table
            .iter()
            .map(|row| row.iter().zip(&self.coeffs).map(|(s, a)| a * s).sum())
            .collect()
    }

    pub fn values(&self, rule: &RadialRule) -> Result<Vec<C64>> {
        Ok(self.values_with(&rule.varsigma_table(self.kmax())?))
    }
}

pub fn complex_lp_norm(rule: &RadialRule, values: &[C64], p: f64) -> f64 {
    let m: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    rule.lp_norm(&m, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laguerre::kernel_varsigma;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_norms_in_two_and_four_dimensions() {
        let rule = RadialRule::new(1, 14.0, 40, 16).unwrap();
        let g = rule.sample(|r| (-r * r / 4.0).exp());
        assert!((rule.lp_norm(&g, 1.0) - 4.0 * PI).abs() < 1e-12);
        let rule2 = RadialRule::new(2, 14.0, 40, 16).unwrap();
        let g2 = rule2.sample(|r| (-r * r / 4.0).exp());
        assert!((rule2.lp_norm(&g2, 2.0) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn kernel_coefficients_are_unit_vectors() {
        for d in [1, 2] {
            let rule = RadialRule::new(d, 30.0, 120, 16).unwrap();
            let s = SpectralIndex::new(d, 7).unwrap();
            let v = rule.sample(|r| kernel_varsigma(s, r).unwrap());
            let a = rule.coefficients(&v, 12).unwrap();
            for (k, ak) in a.iter().enumerate() {
                let want = if k == 7 { 1.0 } else { 0.0 };
                assert!((ak - want).abs() < 1e-10, "d={d} k={k}: {ak}");
            }
        }
    }

    #[test]
    fn gaussian_expansion_is_complete() {
        // e^{-lambda r^2/4} = sum_k a_k varsigma_k, Parseval in L^2
        let rule = RadialRule::new(2, 40.0, 160, 16).unwrap();
        let g = rule.sample(|r| (-0.5 * r * r / 4.0).exp());
        let a = rule.coefficients(&g, 120).unwrap();
        let e = RadialExpansion::from_real(2, &a);
        let direct = rule.lp_norm(&g, 2.0);
        assert!((e.l2() - direct).abs() < 1e-9 * direct);
        let back = e.values(&rule).unwrap();
        let err: f64 = back.iter().zip(&g).map(|(b, g)| (b - g).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn multipliers_act_diagonally() {
        let e = RadialExpansion::from_real(1, &[1.0, 2.0, 3.0]);
        let m = e.apply(|mu| C64::new(1.0 / mu, 0.0));
        assert!((m.coeffs[2] - C64::new(3.0 / 5.0, 0.0)).norm() < 1e-15);
    }
}

//! Hermite functions on R and special Hermite functions on C^d through the
//! Fourier-Wigner integral, plus a finite-difference eigenrelation check.

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::quad::{gauss_hermite_modified, hermite_functions};
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("multi-index needs at least one component"));
        }
        Ok(MultiIndex(components))
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HermiteBasisTruncation {
    pub alpha_max: usize,
    pub d: u32,
}

impl HermiteBasisTruncation {
    /// Default cap `4k + 40` per component for eigenvalue index `k`.
    pub fn for_k(d: u32, k: usize) -> Self {
        HermiteBasisTruncation {
            alpha_max: 4 * k + 40,
            d,
        }
    }
}

pub fn hermite_fn(n: usize, x: f64) -> f64 {
    hermite_functions(n, x)[n]
}

/// Gauss-Hermite node count for a Fourier-Wigner integral of total order
/// `order` evaluated at frequencies `|x| <= x_max`.
pub fn fw_node_count(order: usize, x_max: f64) -> usize {
    let base = 40usize.max(2 * order + 20);
    let oscillation = (0.4 * x_max * x_max).ceil() as usize + 40;
    base.max(oscillation)
}

/// A Gauss-Hermite rule for the Fourier-Wigner integral.
#[derive(Clone, Debug)]
pub struct FwRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl FwRule {
    pub fn new(nodes: usize) -> Self {
        let (nodes, weights) = gauss_hermite_modified(nodes);
        FwRule { nodes, weights }
    }

    pub fn for_order(order: usize, x_max: f64) -> Self {
        Self::new(fw_node_count(order, x_max))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, order: usize, x_max: f64) -> Result<()> {
        let need = fw_node_count(order, x_max);
        if self.len() < need {
            return Err(Error::domain(format!(
                "{} Gauss-Hermite nodes, order {order} at |x| <= {x_max} needs {need}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Plane special Hermite function `Phi_{a,b}(x + iy)`.
pub fn special_hermite_plane(rule: &FwRule, a: usize, b: usize, x: f64, y: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
        let pa = hermite_fn(a, xi + 0.5 * y);
        let pb = hermite_fn(b, xi - 0.5 * y);
        acc += C64::from_polar(w * pa * pb, x * xi);
    }
    acc / (2.0 * PI).sqrt()
}

/// `Phi_{alpha,beta}(z)` with `z = (x1, y1, ..., xd, yd)`.
pub fn special_hermite(alpha: &MultiIndex, beta: &MultiIndex, z: &[f64]) -> Result<C64> {
    if alpha.d() != beta.d() || z.len() != 2 * alpha.d() {
        return Err(Error::domain("multi-index and point dimensions disagree"));
    }
    let x_max = z.iter().step_by(2).fold(0.0f64, |m, v| m.max(v.abs()));
    let order = alpha.0.iter().chain(&beta.0).copied().max().unwrap_or(0);
    let rule = FwRule::for_order(2 * order, x_max);
    special_hermite_with(&rule, alpha, beta, z)
}

pub fn special_hermite_with(
    rule: &FwRule,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    z: &[f64],
) -> Result<C64> {
    if alpha.d() != beta.d() || z.len() != 2 * alpha.d() {
        return Err(Error::domain("multi-index and point dimensions disagree"));
    }
    let mut v = C64::new(1.0, 0.0);
    for j in 0..alpha.d() {
        let (a, b) = (alpha.0[j], beta.0[j]);
        rule.check(a + b, z[2 * j].abs())?;
        v *= special_hermite_plane(rule, a, b, z[2 * j], z[2 * j + 1]);
    }
    Ok(v)
}

/// `Phi_{a,b}` for all `a <= a_max` and one `b` on the plane grid of `grid`,
/// indexed `[a][ix * n + iy]`.
pub fn plane_column(grid: &Grid, b: usize, a_max: usize) -> Vec<Vec<C64>> {
    let axis = grid.axis();
    let n = grid.n;
    let rule = FwRule::for_order(a_max + b, grid.half_width);
    let nq = rule.len();
    // e^{i x_j xi_i} for every (x, node)
    let osc: Vec<C64> = axis
        .iter()
        .flat_map(|x| rule.nodes.iter().map(move |xi| C64::from_polar(1.0, x * xi)))
        .collect();
    let norm = 1.0 / (2.0 * PI).sqrt();
    let rows: Vec<Vec<Vec<C64>>> = axis
        .par_iter()
        .map(|&y| {
            let mut left = vec![0.0; (a_max + 1) * nq];
            let mut right = vec![0.0; nq];
            for i in 0..nq {
                let xi = rule.nodes[i];
                let hp = hermite_functions(a_max, xi + 0.5 * y);
                for a in 0..=a_max {
                    left[a * nq + i] = hp[a];
                }
                right[i] = norm * rule.weights[i] * hermite_functions(b, xi - 0.5 * y)[b];
            }
            // out[a][ix]
            let mut out = vec![vec![C64::new(0.0, 0.0); n]; a_max + 1];
            let mut c = vec![C64::new(0.0, 0.0); nq];
            for ix in 0..n {
                for i in 0..nq {
                    c[i] = osc[ix * nq + i] * right[i];
                }
                for a in 0..=a_max {
                    let l = &left[a * nq..(a + 1) * nq];
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..nq {
                        s += c[i] * l[i];
                    }
                    out[a][ix] = s;
                }
            }
            out
        })
        .collect();
    let mut table = vec![vec![C64::new(0.0, 0.0); n * n]; a_max + 1];
    for (iy, row) in rows.into_iter().enumerate() {
        for (a, vals) in row.into_iter().enumerate() {
            for (ix, v) in vals.into_iter().enumerate() {
                table[a][ix * n + iy] = v;
            }
        }
    }
    table
}

/// `Phi_{alpha,beta}` sampled on `grid`.
pub fn special_hermite_field(grid: &Grid, alpha: &MultiIndex, beta: &MultiIndex) -> Result<Field> {
    if alpha.d() != grid.d as usize || beta.d() != grid.d as usize {
        return Err(Error::domain("multi-index and grid dimensions disagree"));
    }
    let planes: Vec<Vec<C64>> = (0..alpha.d())
        .map(|j| plane_column(grid, beta.0[j], alpha.0[j]).swap_remove(alpha.0[j]))
        .collect();
    let np = grid.plane_len();
    let samples = (0..grid.len())
        .map(|idx| match grid.d {
            1 => planes[0][idx],
            _ => planes[0][idx / np] * planes[1][idx % np],
        })
        .collect();
    Field::new(*grid, samples)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenResidual {
    /// `||L Phi - (2|beta| + d) Phi|| / ||Phi||` on the stencil interior.
    pub twisted: f64,
    /// Same for `-Delta + |z|^2/4` with eigenvalue `|alpha| + |beta| + d`.
    pub hermite: f64,
    pub eigenvalue: f64,
    pub hermite_eigenvalue: f64,
}

/// Five-point fourth-order first and second differences along `axis`.
fn stencil(f: &Field, idx: usize, axis: usize) -> Option<(C64, C64)> {
    let g = f.grid();
    let n = g.n;
    let np = g.plane_len();
    let plane = axis / 2;
    let planes = g.d as usize;
    let plane_stride = np.pow((planes - 1 - plane) as u32);
    let within = if axis % 2 == 0 { n } else { 1 };
    let stride = plane_stride * within;
    let pos = (idx / stride) % n;
    if pos < 2 || pos + 2 >= n {
        return None;
    }
    let s = f.samples();
    let (m2, m1, c, p1, p2) = (
        s[idx - 2 * stride],
        s[idx - stride],
        s[idx],
        s[idx + stride],
        s[idx + 2 * stride],
    );
    let h = g.step();
    let d1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
    let d2 = (-m2 - p2 + (m1 + p1) * 16.0 - c * 30.0) / (12.0 * h * h);
    Some((d1, d2))
}

/// Apply `L` and `-Delta + |z|^2/4` by fourth-order centered differences;
/// samples within two cells of the boundary come back as `None`.
pub fn apply_operators_fd(f: &Field) -> Vec<Option<(C64, C64)>> {
    let g = *f.grid();
    (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let c = g.coords(idx);
            let v = f.samples()[idx];
            let r2: f64 = c.iter().map(|t| t * t).sum();
            let mut lap = C64::new(0.0, 0.0);
            let mut rot = C64::new(0.0, 0.0);
            for p in 0..g.d as usize {
                let (dx, dxx) = stencil(f, idx, 2 * p)?;
                let (dy, dyy) = stencil(f, idx, 2 * p + 1)?;
                lap += dxx + dyy;
                rot += dx * c[2 * p + 1] - dy * c[2 * p];
            }
            let herm = -lap + v * (0.25 * r2);
            Some((herm + C64::i() * rot, herm))
        })
        .collect()
}

pub fn verify_eigenrelation(alpha: &MultiIndex, beta: &MultiIndex, grid: &Grid) -> Result<EigenResidual> {
    let d = grid.d as usize;
    if alpha.d() != d || beta.d() != d {
        return Err(Error::domain("multi-index and grid dimensions disagree"));
    }
    let reach = (2 * alpha.order().max(beta.order()) + d) as f64;
    if !grid.resolves(reach) {
        return Err(Error::domain(format!(
            "grid step {} does not resolve eigenvalue {reach}",
            grid.step()
        )));
    }
    let f = special_hermite_field(grid, alpha, beta)?;
    let ops = apply_operators_fd(&f);
    let eigenvalue = (2 * beta.order() + d) as f64;
    let hermite_eigenvalue = (alpha.order() + beta.order() + d) as f64;
    let (mut rt, mut rh, mut norm) = (0.0, 0.0, 0.0);
    for (v, op) in f.samples().iter().zip(&ops) {
        if let Some((lt, lh)) = op {
            rt += (lt - v * eigenvalue).norm_sqr();
            rh += (lh - v * hermite_eigenvalue).norm_sqr();
            norm += v.norm_sqr();
        }
    }
    Ok(EigenResidual {
        twisted: (rt / norm).sqrt(),
        hermite: (rh / norm).sqrt(),
        eigenvalue,
        hermite_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rotation_covariance() {
        for (a, b, r, th) in [(3, 1, 1.7, 0.6), (0, 4, 2.5, -1.1), (5, 5, 0.9, 2.0), (2, 7, 3.3, 0.25)] {
            let v0 = special_hermite(&mi(&[a]), &mi(&[b]), &[r, 0.0]).unwrap();
            let v1 = special_hermite(&mi(&[a]), &mi(&[b]), &[r * f64::cos(th), r * f64::sin(th)]).unwrap();
            let want = v0 * C64::from_polar(1.0, -(a as f64 - b as f64) * th);
            assert!((v1 - want).norm() < 1e-12, "{a} {b}: {v1} vs {want}");
        }
    }

    #[test]
    fn hermite_fn_examples() {
        assert!((hermite_fn(0, 0.0) - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(hermite_fn(1, 0.0), 0.0);
        let rule = FwRule::new(60);
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * hermite_fn(2, *x) * hermite_fn(5, *x))
            .sum();
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn special_hermite_at_origin() {
        let v = special_hermite(&mi(&[0]), &mi(&[0]), &[0.0, 0.0]).unwrap();
        assert!((v - C64::new((2.0 * PI).powf(-0.5), 0.0)).norm() < 1e-14);
        // the ground state is (2 pi)^{-1/2} e^{-|z|^2/4}
        let v = special_hermite(&mi(&[0]), &mi(&[0]), &[1.3, -0.7]).unwrap();
        let want = (2.0 * PI).powf(-0.5) * (-(1.3f64.powi(2) + 0.49) / 4.0).exp();
        assert!((v - C64::new(want, 0.0)).norm() < 1e-14);
        assert!(special_hermite(&mi(&[0]), &mi(&[0, 1]), &[0.0, 0.0]).is_err());
        assert!(special_hermite_with(&FwRule::new(10), &mi(&[3]), &mi(&[3]), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        let grid = Grid::new(1, 11.0, 110).unwrap();
        let amax = 5;
        let cols: Vec<Vec<Vec<C64>>> = (0..=amax).map(|b| plane_column(&grid, b, amax)).collect();
        let h2 = grid.cell_volume();
        for b1 in 0..=amax {
            for a1 in 0..=amax {
                for b2 in 0..=amax {
                    for a2 in 0..=amax {
                        let s: C64 = cols[b1][a1]
                            .iter()
                            .zip(&cols[b2][a2])
                            .map(|(u, v)| u * v.conj())
                            .sum::<C64>()
                            * h2;
                        let want = if (a1, b1) == (a2, b2) { 1.0 } else { 0.0 };
                        assert!((s - C64::new(want, 0.0)).norm() < 1e-6, "{a1}{b1} {a2}{b2}: {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn node_rule_is_converged_at_the_grid_edge() {
        // doubling the nodes changes nothing at the largest frequency used
        for (a, b, x, y) in [(40, 8, 15.8, -3.0), (72, 8, 15.8, 10.0), (10, 3, 30.0, 1.0)] {
            let r1 = FwRule::for_order(a + b, x);
            let r2 = FwRule::new(2 * r1.len());
            let v1 = special_hermite_plane(&r1, a, b, x, y);
            let v2 = special_hermite_plane(&r2, a, b, x, y);
            assert!((v1 - v2).norm() < 1e-10, "{a} {b} {x}: {v1} {v2}");
        }
    }

    #[test]
    fn table_matches_pointwise_evaluation() {
        let grid = Grid::new(1, 6.0, 24).unwrap();
        let t = plane_column(&grid, 3, 4);
        for idx in [0, 17, 300, 575] {
            let c = grid.coords(idx);
            let v = special_hermite(&mi(&[2]), &mi(&[3]), &c).unwrap();
            assert!((t[2][idx] - v).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_norm_of_phi_2_3() {
        let grid = Grid::new(1, 10.0, 128).unwrap();
        let f = special_hermite_field(&grid, &mi(&[2]), &mi(&[3])).unwrap();
        assert!((f.l2() - 1.0).abs() < 1e-6);
        let f00 = special_hermite_field(&grid, &mi(&[0]), &mi(&[0])).unwrap();
        let f01 = special_hermite_field(&grid, &mi(&[0]), &mi(&[1])).unwrap();
        assert!(f00.inner(&f01).unwrap().norm() < 1e-10);
    }

    #[test]
    fn eigenrelations() {
        let grid = Grid::new(1, 9.0, 144).unwrap();
        let r = verify_eigenrelation(&mi(&[0]), &mi(&[0]), &grid).unwrap();
        assert_eq!(r.eigenvalue, 1.0);
        assert!(r.twisted < 1e-3 && r.hermite < 1e-3, "{r:?}");
        let r = verify_eigenrelation(&mi(&[1]), &mi(&[2]), &grid).unwrap();
        assert_eq!((r.eigenvalue, r.hermite_eigenvalue), (5.0, 4.0));
        assert!(r.twisted < 1e-3 && r.hermite < 1e-3, "{r:?}");
        let coarse = Grid::new(1, 9.0, 20).unwrap();
        assert!(verify_eigenrelation(&mi(&[1]), &mi(&[2]), &coarse).is_err());
    }

    #[test]
    fn eigenrelation_in_four_dimensions() {
        let grid = Grid::new(2, 7.0, 36).unwrap();
        let r = verify_eigenrelation(&mi(&[1, 0]), &mi(&[0, 1]), &grid).unwrap();
        assert_eq!(r.eigenvalue, 4.0);
        assert!(r.twisted < 5e-3, "{r:?}");
    }

    #[test]
    fn residual_converges_at_least_second_order() {
        let res = |n: usize| {
            let g = Grid::new(1, 9.0, n).unwrap();
            verify_eigenrelation(&mi(&[1]), &mi(&[2]), &g).unwrap().twisted
        };
        let (e1, e2) = (res(60), res(120));
        let order = (e1 / e2).log2();
        assert!(order >= 2.0, "observed order {order}: {e1} {e2}");
    }

    #[test]
    fn conjugate_symmetry() {
        // Phi_{b,a}(-conj z) = (-1)^{a+b} Phi_{a,b}(z) and conj Phi_{a,b} = (-1)^{a+b} Phi_{b,a}
        for (a, b) in [(0, 1), (2, 3), (4, 1)] {
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            for (x, y) in [(0.3, -1.1), (2.0, 0.5)] {
                let v = special_hermite(&mi(&[a]), &mi(&[b]), &[x, y]).unwrap();
                let swapped = special_hermite(&mi(&[b]), &mi(&[a]), &[-x, y]).unwrap();
                assert!((swapped - v * sign).norm() < 1e-12, "{a} {b}: {swapped} {v}");
                let same_z = special_hermite(&mi(&[b]), &mi(&[a]), &[x, y]).unwrap();
                assert!((v.conj() - same_z * sign).norm() < 1e-12);
            }
        }
    }
}

//! Complex fields sampled on uniform cube grids in R^{2d}, their Lebesgue and
//! Lorentz norms, twisted convolution and the `.twf` envelope.

use crate::error::{Error, Result};
use crate::C64;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Largest number of samples a grid may hold.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 24;
/// Largest number of (output, input) pairs a direct twisted convolution may visit.
pub const DEFAULT_PAIR_BUDGET: f64 = 2e10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: u32,
    pub half_width: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(d: u32, half_width: f64, n: usize) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::domain(format!("grids support d = 1 or 2, got {d}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::domain(format!("half width {half_width} must be positive")));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::domain(format!("points per axis {n} must be even and >= 2")));
        }
        let total = (n as f64).powi(2 * d as i32);
        if total > DEFAULT_POINT_BUDGET as f64 {
            return Err(Error::Budget(format!(
                "{total} samples exceed the budget of {DEFAULT_POINT_BUDGET}"
            )));
        }
        Ok(Grid { d, half_width, n })
    }

    /// Default grid resolving eigenvalue `mu`, widened by `extra` in radius.
    pub fn for_mu_with_margin(d: u32, mu: f64, extra: f64) -> Result<Self> {
        let r = 2.0 * mu.sqrt() + 4.0 + extra;
        let h_max = (PI / (4.0 * mu.sqrt())).min(r / 64.0);
        let mut n = (2.0 * r / h_max).ceil() as usize;
        n += n % 2;
        Grid::new(d, r, n)
    }

    pub fn for_mu(d: u32, mu: f64) -> Result<Self> {
        Self::for_mu_with_margin(d, mu, 0.0)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|i| -self.half_width + i as f64 * h).collect()
    }

    pub fn plane_len(&self) -> usize {
        self.n * self.n
    }

    pub fn len(&self) -> usize {
        self.plane_len().pow(self.d)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.step().powi(2 * self.d as i32)
    }

    /// Coordinates `(x1, y1, x2, y2, ...)` of sample `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let h = self.step();
        let np = self.plane_len();
        let mut out = vec![0.0; 2 * self.d as usize];
        let mut rest = idx;
        for p in (0..self.d as usize).rev() {
            let plane = rest % np;
            rest /= np;
            out[2 * p] = -self.half_width + (plane / self.n) as f64 * h;
            out[2 * p + 1] = -self.half_width + (plane % self.n) as f64 * h;
        }
        out
    }

    /// Whether the step resolves oscillation at eigenvalue `mu`.
    pub fn resolves(&self, mu: f64) -> bool {
        self.step() <= PI / (4.0 * mu.sqrt()) * (1.0 + 1e-12)
    }

    pub fn same(&self, other: &Grid) -> bool {
        self.d == other.d && self.n == other.n && self.half_width == other.half_width
    }
}

#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    samples: Vec<C64>,
}

impl Field {
    pub fn new(grid: Grid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            samples: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.coords(i)))
            .collect();
        Field { grid, samples }
    }

    /// Field of a radial profile `f(|z|)`.
    pub fn radial<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        Field::from_fn(grid, |c| {
            C64::new(f(c.iter().map(|v| v * v).sum::<f64>().sqrt()), 0.0)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn scale(&self, c: C64) -> Field {
        Field {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }

    fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same(&other.grid) {
            Ok(())
        } else {
            Err(Error::domain("fields live on different grids"))
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: C64, other: &Field) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `int f conj(g)` by the Riemann sum.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.check_grid(other)?;
        let s: C64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn l2(&self) -> f64 {
        lp_norm(self, 2.0).expect("p = 2 is valid")
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Relative L^2 distance `||self - other|| / ||other||`.
    pub fn rel_l2_error(&self, reference: &Field) -> Result<f64> {
        Ok(self.sub(reference)?.l2() / reference.l2())
    }
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("L^p exponent {p} must be >= 1")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let s: f64 = f.samples.iter().map(|v| v.norm().powf(p)).sum();
    Ok((s * f.grid.cell_volume()).powf(1.0 / p))
}

fn sorted_moduli(f: &Field) -> Vec<f64> {
    let mut a: Vec<f64> = f.samples.iter().map(|v| v.norm()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

/// Sample-distribution version of `sup_l l |{|f| > l}|^{1/q}`.
pub fn lorentz_weak_norm(f: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::domain(format!("Lorentz exponent {q} must be >= 1")));
    }
    let v = f.grid.cell_volume();
    Ok(sorted_moduli(f)
        .iter()
        .enumerate()
        .map(|(i, a)| a * ((i + 1) as f64 * v).powf(1.0 / q))
        .fold(0.0, f64::max))
}

/// Sample-distribution version of `int_0^inf |{|f| > l}|^{1/p} dl`.
pub fn lorentz_p1_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("Lorentz exponent {p} must be >= 1")));
    }
    let v = f.grid.cell_volume();
    let a = sorted_moduli(f);
    let mut s = 0.0;
    for i in 0..a.len() {
        let next = a.get(i + 1).copied().unwrap_or(0.0);
        s += (a[i] - next) * ((i + 1) as f64 * v).powf(1.0 / p);
    }
    Ok(s)
}

/// Phase tables `e^{(i/2) y u}` indexed `[iy][ju]` and `e^{-(i/2) x v}` indexed
/// `[ix][jv]`; both reduce to one table because the axes coincide.
pub(crate) fn half_phase_table(axis: &[f64], sign: f64) -> Vec<C64> {
    let n = axis.len();
    let mut t = Vec::with_capacity(n * n);
    for a in axis {
        for b in axis {
            t.push(C64::from_polar(1.0, sign * 0.5 * a * b));
        }
    }
    t
}

/// `(f x g)(z) = int f(z - w) g(w) e^{(i/2) Im z.conj(w)} dw` by direct
/// quadrature, with values outside the cube taken as zero.
pub fn twisted_convolution(f: &Field, g: &Field) -> Result<Field> {
    twisted_convolution_with_budget(f, g, DEFAULT_PAIR_BUDGET)
}

pub fn twisted_convolution_with_budget(f: &Field, g: &Field, budget: f64) -> Result<Field> {
    f.check_grid(g)?;
    let grid = f.grid;
    let pairs = (grid.len() as f64).powi(2);
    if pairs > budget {
        return Err(Error::Budget(format!(
            "twisted convolution needs {pairs:.3e} pairs, budget {budget:.3e}"
        )));
    }
    let n = grid.n;
    let np = grid.plane_len();
    let axis = grid.axis();
    let plus = half_phase_table(&axis, 1.0);
    let minus = half_phase_table(&axis, -1.0);
    let h = grid.cell_volume();
    // Diff index along one axis: i - j + n/2 when it lands in the cube.
    let diff = |i: usize, j: usize| -> Option<usize> {
        let m = i as isize - j as isize + (n / 2) as isize;
        (0..n as isize).contains(&m).then_some(m as usize)
    };
    let plane_sum = |ix: usize, iy: usize, fplane: &dyn Fn(usize) -> C64, gplane: &dyn Fn(usize) -> C64| {
        let mut acc = C64::new(0.0, 0.0);
        for ju in 0..n {
            let Some(mx) = diff(ix, ju) else { continue };
            let py = plus[iy * n + ju];
            for jv in 0..n {
                let Some(my) = diff(iy, jv) else { continue };
                let ph = py * minus[ix * n + jv];
                acc += fplane(mx * n + my) * gplane(ju * n + jv) * ph;
            }
        }
        acc
    };
    let samples: Vec<C64> = match grid.d {
        1 => (0..np)
            .into_par_iter()
            .map(|p| {
                let (ix, iy) = (p / n, p % n);
                plane_sum(ix, iy, &|i| f.samples[i], &|j| g.samples[j]) * h
            })
            .collect(),
        _ => (0..np * np)
            .into_par_iter()
            .map(|idx| {
                let (p1, p2) = (idx / np, idx % np);
                let (ix1, iy1) = (p1 / n, p1 % n);
                let (ix2, iy2) = (p2 / n, p2 % n);
                let mut acc = C64::new(0.0, 0.0);
                for ju in 0..n {
                    let Some(mx) = diff(ix1, ju) else { continue };
                    for jv in 0..n {
                        let Some(my) = diff(iy1, jv) else { continue };
                        let ph = plus[iy1 * n + ju] * minus[ix1 * n + jv];
                        let fo = (mx * n + my) * np;
                        let go = (ju * n + jv) * np;
                        acc += ph
                            * plane_sum(ix2, iy2, &|i| f.samples[fo + i], &|j| g.samples[go + j]);
                    }
                }
                acc * h
            })
            .collect(),
    };
    Field::new(grid, samples)
}

#[derive(Serialize, Deserialize)]
struct TwfEnvelope {
    magic: String,
    d: u32,
    #[serde(rename = "R")]
    half_width: f64,
    n: usize,
    encoding: String,
    data: String,
}

pub const TWF_MAGIC: &str = "TWF1";
pub const TWF_ENCODING: &str = "le-f64-interleaved";

pub fn to_twf(f: &Field) -> String {
    let mut bytes = Vec::with_capacity(16 * f.samples.len());
    for v in &f.samples {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    let env = TwfEnvelope {
        magic: TWF_MAGIC.into(),
        d: f.grid.d,
        half_width: f.grid.half_width,
        n: f.grid.n,
        encoding: TWF_ENCODING.into(),
        data: B64.encode(bytes),
    };
    serde_json::to_string(&env).expect("envelope serializes")
}

pub fn from_twf(text: &str) -> Result<Field> {
    let env: TwfEnvelope =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("twf envelope: {e}")))?;
    if env.magic != TWF_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", env.magic)));
    }
    if env.encoding != TWF_ENCODING {
        return Err(Error::Format(format!("unsupported encoding {:?}", env.encoding)));
    }
    let grid = Grid::new(env.d, env.half_width, env.n)
        .map_err(|e| Error::Format(format!("twf grid: {e}")))?;
    let bytes = B64
        .decode(env.data.as_bytes())
        .map_err(|e| Error::Format(format!("twf data: {e}")))?;
    if bytes.len() != 16 * grid.len() {
        return Err(Error::Format(format!(
            "twf data holds {} bytes, grid needs {}",
            bytes.len(),
            16 * grid.len()
        )));
    }
    let word = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    let samples = bytes
        .chunks_exact(16)
        .map(|c| C64::new(word(&c[..8]), word(&c[8..])))
        .collect();
    Field::new(grid, samples)
}

pub fn read_twf(path: &Path) -> Result<Field> {
    from_twf(&std::fs::read_to_string(path)?)
}

pub fn write_twf(path: &Path, f: &Field) -> Result<()> {
    std::fs::write(path, to_twf(f))?;
    Ok(())
}

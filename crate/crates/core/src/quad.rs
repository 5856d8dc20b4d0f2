//! Quadrature rules: Gauss-Legendre, Gauss-Hermite with Gaussian-free
//! weights, and the 7/15 Gauss-Kronrod pair.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * order);
    let mut w = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(c + 0.5 * h * xi);
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}

/// Orthonormal Hermite functions `Phi_0..=Phi_nmax` at `x`, scaled to avoid
/// underflow of the Gaussian factor.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    // Run the recurrence on the polynomial part and fold exp(-x^2/2) back in
    // through a running log scale.
    let scaled = |p: f64, log_scale: f64| {
        if p == 0.0 {
            0.0
        } else {
            p.signum() * (p.abs().ln() + log_scale).exp()
        }
    };
    let mut log_scale = -0.5 * x * x;
    let mut p0 = PI.powf(-0.25);
    out[0] = scaled(p0, log_scale);
    if nmax == 0 {
        return out;
    }
    let mut p1 = 2f64.sqrt() * x * p0;
    out[1] = scaled(p1, log_scale);
    for n in 1..nmax {
        let nf = n as f64;
        let p2 = (2.0 / (nf + 1.0)).sqrt() * x * p1 - (nf / (nf + 1.0)).sqrt() * p0;
        p0 = p1;
        p1 = p2;
        let m = p1.abs();
        if m > 1e150 {
            p0 /= m;
            p1 /= m;
            log_scale += m.ln();
        }
        out[n + 1] = scaled(p1, log_scale);
    }
    out
}

/// Gauss-Hermite nodes with weights `w_i exp(x_i^2)`, so that
/// `sum_i W_i g(x_i)` approximates `int g` for Gaussian-decaying `g`.
pub fn gauss_hermite_modified(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0].abs(),
            3 => 1.91 * z - 0.91 * x[1].abs(),
            _ => 2.0 * z - x[i - 2].abs(),
        };
        for _ in 0..200 {
            let h = hermite_functions(n, z);
            // Phi_n' = sqrt(2n) Phi_{n-1} - x Phi_n
            let d = (2.0 * nf).sqrt() * h[n - 1] - z * h[n];
            let dz = h[n] / d;
            z -= dz;
            if dz.abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        let h = hermite_functions(n - 1, z);
        let s: f64 = h.iter().map(|v| v * v).sum();
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 1.0 / s;
        w[n - 1 - i] = 1.0 / s;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| w[i]).collect())
}

pub const KRONROD15_X: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub const KRONROD15_W: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `KRONROD15_X[1], [3], [5], [7]`.
pub const GAUSS7_W: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
    }

    #[test]
    fn hermite_function_values() {
        let h = hermite_functions(5, 0.0);
        assert!((h[0] - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(h[1], 0.0);
        // no underflow far out
        let far = hermite_functions(600, 40.0);
        assert!(far[600].is_finite() && far[600] != 0.0);
    }

    #[test]
    fn hermite_rule_is_exact_on_gaussians() {
        let (x, w) = gauss_hermite_modified(40);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp() * x * x).sum();
        assert!((s - PI.sqrt() / 2.0).abs() < 1e-13);
        let orth: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let h = hermite_functions(5, *x);
                w * h[2] * h[5]
            })
            .sum();
        assert!(orth.abs() < 1e-12);
    }

    #[test]
    fn kronrod_weights_sum_to_two() {
        let k: f64 = 2.0 * KRONROD15_W[..7].iter().sum::<f64>() + KRONROD15_W[7];
        let g: f64 = 2.0 * GAUSS7_W[..3].iter().sum::<f64>() + GAUSS7_W[3];
        assert!((k - 2.0).abs() < 1e-14 && (g - 2.0).abs() < 1e-14);
    }
}

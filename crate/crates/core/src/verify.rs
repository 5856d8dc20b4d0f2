//! Self-check suites. Each suite evaluates a fixed list of checks and reports
//! them as deterministic CSV rows.

use crate::config::RunConfig;
use crate::error::Result;
use crate::extremal::{corner_norms, loglog_fit, RingProfile};
use crate::field::{twisted_convolution_with_budget, Field, Grid};
use crate::hermite::{special_hermite_field, verify_eigenrelation, HermiteBasisTruncation, MultiIndex};
use crate::laguerre::{kernel_varsigma, laguerre_asymptotic, normalized_laguerre_all, LaguerreIndex, SpectralIndex};
use crate::oscillatory::{evaluate, IntegralCase};
use crate::projector::{project, spectral_parts, Method};
use crate::region::{canonical_points, dual_point, rho, rho_piecewise, ExponentPoint};
use crate::resolvent::{decompose, partial_sum_scan, resolvent_apply, resolvent_symbol, SpectralParameterZ};
use crate::C64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Region,
    Laguerre,
    Kernel,
    Projector,
    Oscillatory,
    Extremal,
    Resolvent,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Region,
        Suite::Laguerre,
        Suite::Kernel,
        Suite::Projector,
        Suite::Oscillatory,
        Suite::Extremal,
        Suite::Resolvent,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "region" => Suite::Region,
            "laguerre" => Suite::Laguerre,
            "kernel" => Suite::Kernel,
            "projector" => Suite::Projector,
            "oscillatory" => Suite::Oscillatory,
            "extremal" => Suite::Extremal,
            "resolvent" => Suite::Resolvent,
            "all" => Suite::All,
            _ => return None,
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Suite::Region => "region",
            Suite::Laguerre => "laguerre",
            Suite::Kernel => "kernel",
            Suite::Projector => "projector",
            Suite::Oscillatory => "oscillatory",
            Suite::Extremal => "extremal",
            Suite::Resolvent => "resolvent",
            Suite::All => "all",
        }
    }
}

/// `value <= bound` (or `>=` when `at_least`) decides `pass`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub at_least: bool,
    pub pass: bool,
}

fn at_most(suite: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        suite,
        name: name.into(),
        value,
        bound,
        at_least: false,
        pass: value <= bound,
    }
}

fn at_least(suite: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        suite,
        name: name.into(),
        value,
        bound,
        at_least: true,
        pass: value >= bound,
    }
}

pub const CSV_HEADER: &str = "suite,check,value,relation,bound,status";

pub fn to_csv(checks: &[Check]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in checks {
        out.push_str(&format!(
            "{},{},{:e},{},{:e},{}\n",
            c.suite,
            c.name,
            c.value,
            if c.at_least { ">=" } else { "<=" },
            c.bound,
            if c.pass { "pass" } else { "fail" }
        ));
    }
    out
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<Vec<Check>> {
    match suite {
        Suite::Region => region(cfg),
        Suite::Laguerre => laguerre(),
        Suite::Kernel => kernel(cfg),
        Suite::Projector => projector(),
        Suite::Oscillatory => oscillatory(cfg),
        Suite::Extremal => extremal(),
        Suite::Resolvent => resolvent(),
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::EACH {
                out.extend(run_suite(s, cfg)?);
            }
            Ok(out)
        }
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational64 {
    let den = rng.gen_range(1..=60i64);
    Rational64::new(rng.gen_range(0..=den), den)
}

fn region(cfg: &RunConfig) -> Result<Vec<Check>> {
    const S: &str = "region";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for d in 1..=5u32 {
        let (mut piece_miss, mut dual_miss) = (0usize, 0usize);
        for _ in 0..2000 {
            let (a, b) = (random_rational(&mut rng), random_rational(&mut rng));
            let half = Rational64::new(1, 2);
            let x = ExponentPoint::new(half + a * half, b * half)?;
            let r = rho(&x, d)?;
            if rho_piecewise(&x, d)? != r {
                piece_miss += 1;
            }
            if rho(&dual_point(&x)?, d)? != r {
                dual_miss += 1;
            }
        }
        out.push(at_most(S, format!("max_form_vs_piecewise_d{d}"), piece_miss as f64, 0.0));
        out.push(at_most(S, format!("dual_symmetry_d{d}"), dual_miss as f64, 0.0));
    }
    let p = canonical_points::<Rational64>(1)?;
    let a_ok = p.a.pr == Rational64::new(5, 6) && p.a.qr == Rational64::new(1, 2);
    out.push(at_most(S, "canonical_a_d1", if a_ok { 0.0 } else { 1.0 }, 0.0));
    Ok(out)
}

fn laguerre() -> Result<Vec<Check>> {
    const S: &str = "laguerre";
    let mut out = Vec::new();
    for k in [50usize, 100] {
        for alpha in [0.0, 1.0] {
            let nu = 4.0 * k as f64 + 2.0 * alpha + 2.0;
            let mut worst = 0.0f64;
            for i in 0..20 {
                let t = nu / 64.0 * 16f64.powf(i as f64 / 19.0);
                let exact = normalized_laguerre_all(k, alpha, t)?[k];
                let a = laguerre_asymptotic(LaguerreIndex::new(k, alpha)?, t)?;
                worst = worst.max((exact - a.main).abs() / a.error_envelope);
            }
            out.push(at_most(S, format!("asymptotic_k{k}_alpha{alpha}"), worst, 10.0));
        }
    }
    // normalized recurrence against the closed form at the origin side
    let s = SpectralIndex::new(2, 30)?;
    let mut worst = 0.0f64;
    for r in [0.5, 2.0, 6.0, 11.0] {
        let a = kernel_varsigma(s, r)?;
        let b = crate::laguerre::varsigma_poly(s, r)?;
        worst = worst.max((a - b).abs() / b.abs().max(1e-300));
    }
    out.push(at_most(S, "varsigma_routes_d2_k30", worst, 1e-8));
    Ok(out)
}

fn kernel(cfg: &RunConfig) -> Result<Vec<Check>> {
    const S: &str = "kernel";
    let mut out = Vec::new();
    let grid = cfg.grid_for_mu(1, 9.0)?;
    let field = |k: usize| -> Result<Field> {
        let s = SpectralIndex::new(1, k)?;
        Ok(Field::radial(grid, move |r| kernel_varsigma(s, r).expect("valid index")))
    };
    let s4 = field(4)?;
    let sq = twisted_convolution_with_budget(&s4, &s4, cfg.pair_budget)?.scale(C64::new(1.0 / (2.0 * PI), 0.0));
    out.push(at_most(S, "idempotence_d1_k4", sq.rel_l2_error(&s4)?, 0.02));
    let s2 = field(2)?;
    let cross = twisted_convolution_with_budget(&s2, &s4, cfg.pair_budget)?;
    out.push(at_most(S, "annihilation_d1_k2_k4", cross.l2() / (s2.l2() * s4.l2()), 0.02));
    let res = verify_eigenrelation(
        &MultiIndex::new(vec![2])?,
        &MultiIndex::new(vec![3])?,
        &Grid::new(1, 8.0, 160)?,
    )?;
    out.push(at_most(S, "eigenrelation_d1_a2_b3", res.twisted, 1e-3));
    Ok(out)
}

fn shifted_gaussian(grid: Grid, x0: f64, y0: f64) -> Field {
    Field::from_fn(grid, |c| {
        C64::new((-((c[0] - x0).powi(2) + (c[1] - y0).powi(2)) / 4.0).exp(), 0.0)
    })
}

fn projector() -> Result<Vec<Check>> {
    const S: &str = "projector";
    let mut out = Vec::new();
    let k = 3;
    let s = SpectralIndex::new(1, k)?;
    let grid = Grid::for_mu_with_margin(1, 7.0, 13f64.sqrt())?;
    let f = shifted_gaussian(grid, 3.0, -2.0);
    let e = project(&f, s, Method::Eigen, Some(HermiteBasisTruncation::for_k(1, k)))?;
    let kr = project(&f, s, Method::Kernel, None)?;
    out.push(at_most(S, "route_agreement_d1_k3", kr.field.rel_l2_error(&e.field)?, 0.01));
    let twice = project(&e.field, s, Method::Eigen, Some(HermiteBasisTruncation::for_k(1, k)))?;
    out.push(at_most(S, "idempotence_eigen_d1_k3", twice.field.rel_l2_error(&e.field)?, 0.02));
    let g = shifted_gaussian(grid, -1.0, 1.5);
    let pg = project(&g, s, Method::Eigen, Some(HermiteBasisTruncation::for_k(1, k)))?;
    let asym = (e.field.inner(&g)? - f.inner(&pg.field)?).norm() / (f.l2() * g.l2());
    out.push(at_most(S, "self_adjoint_d1_k3", asym, 0.02));
    Ok(out)
}

fn oscillatory(cfg: &RunConfig) -> Result<Vec<Check>> {
    const S: &str = "oscillatory";
    let opts = cfg.osc_options();
    let mut out = Vec::new();
    for j in 1..=3 {
        let r = evaluate(IntegralCase::I, 100.0, j, 0.0, &opts)?;
        out.push(at_most(S, format!("modulus_bound_I_j{j}"), r.abs_value, 2f64.powi(-j)));
    }
    for (case, scale) in [(IntegralCase::I, 2), (IntegralCase::J, 5), (IntegralCase::J0, 0)] {
        let r = evaluate(case, 100.0, scale, 0.5, &opts)?;
        out.push(at_most(S, format!("normalized_{}_{scale}_mu100", case.tag()), r.normalized_value, 5.0));
    }
    Ok(out)
}

fn extremal() -> Result<Vec<Check>> {
    const S: &str = "extremal";
    let mut out = Vec::new();
    let c = corner_norms(SpectralIndex::new(1, 50)?)?;
    out.push(at_most(S, "corner_1_inf_d1", (c[1].value - 1.0 / (2.0 * PI)).abs(), 1e-12));
    out.push(at_most(S, "corner_2_inf_d1", (c[3].value - (2.0 * PI).powf(-0.5)).abs(), 1e-12));
    let mut mus = Vec::new();
    let (mut l1, mut min, mut ratio) = (Vec::new(), Vec::new(), Vec::new());
    for mu in [101u64, 201, 401, 801] {
        let p = RingProfile::new(SpectralIndex::from_mu(1, mu)?)?;
        mus.push(mu as f64);
        l1.push(p.norm_pp(1.0));
        min.push(p.near_origin_min());
        ratio.push(p.ratio(1.0, 0.25)?.max(p.ratio(0.75, 0.0)?));
    }
    out.push(at_most(S, "ring_l1_slope", loglog_fit(&mus, &l1)?.slope, 0.6));
    out.push(at_least(S, "ring_origin_min_slope", loglog_fit(&mus, &min)?.slope, -0.1));
    out.push(at_least(S, "ring_ratio_slope_c", loglog_fit(&mus, &ratio)?.slope, -0.4));
    Ok(out)
}

fn resolvent() -> Result<Vec<Check>> {
    const S: &str = "resolvent";
    let mut out = Vec::new();
    let grid = Grid::new(1, 9.0, 72)?;
    let f = Field::from_fn(grid, |c| {
        C64::new((-((c[0] - 1.0).powi(2) + (c[1] + 0.5).powi(2)) / 4.0).exp(), 0.2 * c[0])
            * (-(c[0] * c[0] + c[1] * c[1]) / 16.0).exp()
    });
    let parts = spectral_parts(&f, 12, 40)?;
    let mut worst = 0.0f64;
    for z in [C64::new(13.4, 0.3), C64::new(9.0, -2.0), C64::new(20.0, 0.0)] {
        let sz = SpectralParameterZ::new(z, 1)?;
        let dec = decompose(&sz, &parts)?;
        worst = worst.max(dec.sum().rel_l2_error(&parts.combine(resolvent_symbol(z)))?);
    }
    out.push(at_most(S, "telescoping_d1", worst, 1e-10));
    let e = special_hermite_field(&Grid::new(1, 12.0, 240)?, &MultiIndex::new(vec![0])?, &MultiIndex::new(vec![3])?)?;
    let only = spectral_parts(&e, 6, 30)?;
    let mut worst = 0.0f64;
    for eps in [1e-2, 1e-4, 1e-6] {
        let z = SpectralParameterZ::new(C64::new(7.0 - eps, 0.0), 1)?;
        let r = resolvent_apply(&e, &only, &z)?;
        worst = worst.max((r.field.l2() / e.l2() * (7.0 - z.z.re) - 1.0).abs());
    }
    out.push(at_most(S, "eigenvector_blow_up_d1", worst, 1e-10));
    let scan = partial_sum_scan(&[10, 100, 1000], &[(0.5, 0.0), (-0.5, 0.0), (0.0, 0.5)]);
    let top = scan.iter().map(|s| s.sup).fold(0.0, f64::max);
    out.push(at_most(S, "partial_sum_sup", top, 4.0));
    Ok(out)
}

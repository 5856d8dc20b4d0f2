//! Acceptance run: one PASS/FAIL line per criterion. Criteria listed in
//! `KNOWN_RED` are reported but do not fail the process.

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};
use twistlab::extremal::{corner_norms, loglog_fit, RingProfile};
use twistlab::field::{twisted_convolution, Field, Grid};
use twistlab::hermite::{special_hermite_field, HermiteBasisTruncation, MultiIndex};
use twistlab::laguerre::{kernel_varsigma, laguerre_asymptotic, normalized_laguerre_all, LaguerreIndex, SpectralIndex};
use twistlab::oscillatory::{sup_over_separations, sweep, IntegralCase, OscOptions};
use twistlab::projector::{project, spectral_parts, windowed_l1_l2_gain, Method, Window};
use twistlab::region::{canonical_points, classify_estimate, rho, rho_piecewise, EstimateTag, ExponentPoint};
use twistlab::resolvent::{
    decompose, default_family, partial_sum_scan, resolvent_apply, resolvent_symbol, uniform_sweep, SpectralParameterZ,
};
use twistlab::{Result, C64};

const KNOWN_RED: &[u32] = &[9];

type Outcome = Result<(bool, String)>;

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn pt(pr: Rational64, qr: Rational64) -> ExponentPoint<Rational64> {
    ExponentPoint::new(pr, qr).expect("probe inside the square")
}

fn c1_exponent_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let half = q(1, 2);
    let mut misses = 0;
    for d in 1..=5 {
        for _ in 0..10_000 {
            let den = rng.gen_range(1..=240i64);
            let a = q(rng.gen_range(0..=den), den);
            let b = q(rng.gen_range(0..=den), den);
            let x = pt(half + a * half, b * half);
            if rho(&x, d)? != rho_piecewise(&x, d)? {
                misses += 1;
            }
        }
    }
    let table: [(u32, [(i64, i64, i64, i64); 5]); 2] = [
        (1, [(5, 6, 1, 2), (11, 12, 1, 4), (1, 1, 1, 4), (1, 1, 1, 2), (1, 1, 0, 1)]),
        (2, [(7, 10, 1, 2), (31, 40, 3, 8), (1, 1, 3, 8), (3, 4, 1, 2), (5, 6, 1, 3)]),
    ];
    let mut table_miss = 0;
    for (d, rows) in table {
        let cp = canonical_points::<Rational64>(d)?;
        for ((a, b, c, e), x) in rows.iter().zip([&cp.a, &cp.b, &cp.c, &cp.d, &cp.f]) {
            if x.pr != q(*a, *b) || x.qr != q(*c, *e) {
                table_miss += 1;
            }
        }
    }
    Ok((
        misses == 0 && table_miss == 0,
        format!("max-form mismatches {misses}/50000, table mismatches {table_miss}/10"),
    ))
}

fn c2_classifier() -> Outcome {
    use EstimateTag::*;
    let mut probes: Vec<(u32, ExponentPoint<Rational64>, EstimateTag)> = Vec::new();
    for d in [1u32, 2] {
        let cp = canonical_points::<Rational64>(d)?;
        let mid = |a: &ExponentPoint<Rational64>, b: &ExponentPoint<Rational64>| {
            pt((a.pr + b.pr) * q(1, 2), (a.qr + b.qr) * q(1, 2))
        };
        probes.extend([
            (d, pt(q(1, 2), q(1, 2)), Strong),
            (d, cp.a.clone(), Strong),
            (d, cp.a_dual.clone(), Strong),
            (d, cp.b.clone(), RestrictedWeak),
            (d, cp.b_dual.clone(), RestrictedWeak),
            (d, mid(&cp.b, &cp.c), Weak),
            (d, cp.c.clone(), Weak),
            (d, mid(&cp.b_dual, &cp.c_dual), StrongFailsNoLorentzClaim),
            (d, cp.c_dual.clone(), StrongFailsNoLorentzClaim),
            (d, cp.f.clone(), Strong),
        ]);
    }
    let mut wrong = Vec::new();
    for (d, x, want) in &probes {
        let got = classify_estimate(x, *d)?.tag;
        if got != *want {
            wrong.push(format!("d={d} ({}, {}): {} != {}", x.pr, x.qr, got.tag(), want.tag()));
        }
    }
    Ok((wrong.is_empty(), format!("{} probes, wrong: {wrong:?}", probes.len())))
}

fn c3_laguerre() -> Outcome {
    let mut worst = 0.0f64;
    for k in [50usize, 100, 200] {
        for alpha in [0.0, 1.0] {
            let nu = 4.0 * k as f64 + 2.0 * alpha + 2.0;
            for i in 0..40 {
                let t = nu / 64.0 * 16f64.powf(i as f64 / 39.0);
                let exact = normalized_laguerre_all(k, alpha, t)?[k];
                let a = laguerre_asymptotic(LaguerreIndex::new(k, alpha)?, t)?;
                worst = worst.max((exact - a.main).abs() / a.error_envelope);
            }
        }
    }
    Ok((worst <= 10.0, format!("max |L - main| / envelope = {worst:.3}")))
}

fn varsigma_field(grid: Grid, k: usize) -> Result<Field> {
    let s = SpectralIndex::new(grid.d, k)?;
    Ok(Field::radial(grid, move |r| kernel_varsigma(s, r).expect("valid index")))
}

fn c4_kernel_idempotence() -> Outcome {
    let (mut idem, mut cross) = (0.0f64, 0.0f64);
    for (k, other) in [(2usize, 3usize), (4, 6), (8, 9)] {
        let grid = Grid::for_mu(1, (2 * other + 1) as f64)?;
        let s = varsigma_field(grid, k)?;
        let sq = twisted_convolution(&s, &s)?.scale(C64::new(1.0 / (2.0 * PI), 0.0));
        idem = idem.max(sq.rel_l2_error(&s)?);
        let o = varsigma_field(grid, other)?;
        let c = twisted_convolution(&s, &o)?.scale(C64::new(1.0 / (2.0 * PI), 0.0));
        cross = cross.max(c.l2() / s.l2());
    }
    Ok((
        idem <= 0.02 && cross <= 0.02,
        format!("idempotence {idem:.2e}, cross-eigenvalue {cross:.2e}"),
    ))
}

fn c5_corners() -> Outcome {
    let mut d1_err = 0.0f64;
    let (mut mus, mut sup1, mut sup2) = (Vec::new(), Vec::new(), Vec::new());
    for k in [10usize, 20, 50, 100, 200] {
        let c1 = corner_norms(SpectralIndex::new(1, k)?)?;
        d1_err = d1_err
            .max((c1[1].value - 1.0 / (2.0 * PI)).abs())
            .max((c1[3].value - (2.0 * PI).powf(-0.5)).abs());
        mus.push(c1[0].mu as f64);
        sup1.push(c1[1].value);
        sup2.push(c1[3].value);
    }
    let f1 = loglog_fit(&mus, &sup1)?.slope;
    let f2 = loglog_fit(&mus, &sup2)?.slope;
    let (mut mus2, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for k in [10usize, 20, 40, 80, 120, 160, 200] {
        let c = corner_norms(SpectralIndex::new(2, k)?)?;
        mus2.push(c[0].mu as f64);
        a.push(c[3].value);
        b.push(c[1].value);
    }
    let s2 = loglog_fit(&mus2, &a)?.slope;
    let s1 = loglog_fit(&mus2, &b)?.slope;
    let ok = d1_err < 1e-12 && f1.abs() <= 1e-6 && f2.abs() <= 1e-6 && (s2 - 0.5).abs() <= 0.02 && (s1 - 1.0).abs() <= 0.05;
    Ok((
        ok,
        format!("d=1 slopes {f1:.1e}, {f2:.1e} (max abs err {d1_err:.1e}); d=2 slopes 2->inf {s2:.4}, 1->inf {s1:.4}"),
    ))
}

fn c6_ring() -> Outcome {
    let (mut mus, mut l1, mut l2, mut min, mut ratio) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for mu in [101u64, 201, 401, 801] {
        let p = RingProfile::new(SpectralIndex::from_mu(1, mu)?)?;
        mus.push(mu as f64);
        l1.push(p.norm_pp(1.0));
        l2.push(p.norm_pp(2.0));
        min.push(p.near_origin_min());
        ratio.push(p.ratio(1.0, 0.25)?.max(p.ratio(0.75, 0.0)?));
    }
    let s1 = loglog_fit(&mus, &l1)?.slope;
    let s2 = loglog_fit(&mus, &l2)?.slope;
    let sm = loglog_fit(&mus, &min)?.slope;
    let sr = loglog_fit(&mus, &ratio)?.slope;
    let ok = s1 <= 0.5 + 0.1 && s2 <= 0.0 + 0.1 && sm >= -0.1 && sr >= -0.40;
    Ok((
        ok,
        format!("||f||_1 slope {s1:.3}, ||f||_2^2 slope {s2:.3}, origin min slope {sm:.3}, ratio slope at C {sr:.3}"),
    ))
}

fn shifted_gaussian(grid: Grid, x0: f64, y0: f64) -> Field {
    Field::from_fn(grid, |c| {
        C64::new((-((c[0] - x0).powi(2) + (c[1] - y0).powi(2)) / 4.0).exp(), 0.0)
    })
}

fn c7_routes() -> Outcome {
    let (mut route, mut idem, mut adj) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=8 {
        let s = SpectralIndex::new(1, k)?;
        let grid = Grid::for_mu_with_margin(1, s.mu as f64, 13f64.sqrt())?;
        let f = shifted_gaussian(grid, 3.0, -2.0);
        let g = shifted_gaussian(grid, -1.0, 1.5);
        let tr = Some(HermiteBasisTruncation::for_k(1, k));
        let e = project(&f, s, Method::Eigen, tr)?.field;
        let kr = project(&f, s, Method::Kernel, None)?.field;
        route = route.max(kr.rel_l2_error(&e)?);
        let twice = project(&kr, s, Method::Kernel, None)?.field;
        idem = idem.max(twice.rel_l2_error(&kr)?);
        let pg = project(&g, s, Method::Kernel, None)?.field;
        let a = (kr.inner(&g)? - f.inner(&pg)?).norm() / (kr.l2() * g.l2());
        adj = adj.max(a);
    }
    Ok((
        route <= 0.01 && idem <= 0.02 && adj <= 0.02,
        format!("route {route:.2e}, idempotence {idem:.2e}, self-adjointness {adj:.2e}"),
    ))
}

fn c8_window() -> Outcome {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for k in 2..=6 {
        let w = Window::dyadic(k, true);
        let mut best = 0.0f64;
        for lambda in [1024.0, 4096.0, 16384.0, 65536.0] {
            best = best.max(windowed_l1_l2_gain(&w, 201, 1, Some(lambda), 3000)?);
        }
        x.push(2f64.powi(-k));
        y.push(best);
    }
    let s = loglog_fit(&x, &y)?.slope;
    Ok(((s - 0.5).abs() <= 0.1, format!("slope in 2^-k = {s:.4}")))
}

fn c9_oscillatory() -> Outcome {
    let rows = sweep(&[1e2, 1e3, 1e4], &(1..=8).collect::<Vec<_>>(), &OscOptions::default())?;
    let sups = sup_over_separations(&rows);
    let mut ok = true;
    let mut parts = Vec::new();
    for case in [IntegralCase::I, IntegralCase::J, IntegralCase::J0] {
        let v: Vec<f64> = sups.iter().filter(|s| s.0 == case).map(|s| s.3).collect();
        let hi = v.iter().cloned().fold(0.0, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= hi / lo < 5.0;
        parts.push(format!("{} max/min {:.3e}", case.tag(), hi / lo));
    }
    Ok((ok, parts.join(", ")))
}

fn c10_resolvent() -> Outcome {
    let grid = Grid::new(1, 12.0, 240)?;
    let e = special_hermite_field(&grid, &MultiIndex::new(vec![0])?, &MultiIndex::new(vec![3])?)?;
    let parts = spectral_parts(&e, 6, 30)?;
    let mut blow = 0.0f64;
    for eps in [1.0, 1e-2, 1e-4, 1e-6, 1e-8] {
        let z = SpectralParameterZ::new(C64::new(7.0 - eps, 0.0), 1)?;
        let r = resolvent_apply(&e, &parts, &z)?;
        blow = blow.max((r.field.l2() / e.l2() * (7.0 - z.z.re) - 1.0).abs());
    }
    let g = Field::from_fn(Grid::new(1, 9.0, 72)?, |c| {
        C64::new((-((c[0] - 1.0).powi(2) + (c[1] + 0.5).powi(2)) / 4.0).exp(), 0.2 * c[0])
            * (-(c[0] * c[0] + c[1] * c[1]) / 16.0).exp()
    });
    let gp = spectral_parts(&g, 12, 40)?;
    let mut tele = 0.0f64;
    for z in [C64::new(13.4, 0.3), C64::new(9.0, -2.0), C64::new(1.2, 0.5), C64::new(20.0, 0.0), C64::new(8.0, 0.0)] {
        let sz = SpectralParameterZ::new(z, 1)?;
        tele = tele.max(decompose(&sz, &gp)?.sum().rel_l2_error(&gp.combine(resolvent_symbol(z)))?);
    }
    let ns: Vec<u64> = vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];
    let offsets = [(0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.25, 0.25), (0.3, -2.0), (-0.5, 1.0)];
    let scan = partial_sum_scan(&ns, &offsets);
    let constant = 4.0;
    let top = scan.iter().map(|s| s.sup).fold(0.0, f64::max);
    let cp = canonical_points::<f64>(2)?;
    let mut diags = Vec::new();
    for x in [ExponentPoint::new(0.5, 0.5)?, cp.d_dual.clone()] {
        diags.push(uniform_sweep(&x, 2, 1.0, 50, &default_family())?.diagnostic);
    }
    let ok = blow <= 1e-10 && tele <= 1e-10 && top <= constant && diags.iter().all(|d| *d <= 3.0);
    Ok((
        ok,
        format!(
            "blow-up {blow:.1e}, telescoping {tele:.1e}, partial sums sup {top:.3} <= {constant}, sweep max/min {:.3} (1/2,1/2) {:.3} (D')",
            diags[0], diags[1]
        ),
    ))
}

fn c11_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_twistlab");
    let run = || {
        Command::new(bin)
            .args(["verify", "--suite", "all", "--seed", "7"])
            .env("TWISTLAB_THREADS", "1")
            .output()
    };
    let (a, b) = (run()?, run()?);
    let same = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    Ok((same, format!("{} bytes, identical: {}", a.stdout.len(), a.stdout == b.stdout)))
}

fn main() {
    let criteria: Vec<(u32, &str, Duration, fn() -> Outcome)> = vec![
        (1, "exponent calculus", Duration::from_secs(1), c1_exponent_calculus),
        (2, "estimate classifier", Duration::from_secs(1), c2_classifier),
        (3, "Laguerre asymptotics", Duration::from_secs(5), c3_laguerre),
        (4, "kernel idempotence", Duration::from_secs(300), c4_kernel_idempotence),
        (5, "corner scaling laws", Duration::from_secs(10), c5_corners),
        (6, "ring extremizer", Duration::from_secs(600), c6_ring),
        (7, "projector routes", Duration::from_secs(300), c7_routes),
        (8, "windowed projector", Duration::from_secs(120), c8_window),
        (9, "oscillatory bounds", Duration::from_secs(60), c9_oscillatory),
        (10, "resolvent", Duration::from_secs(600), c10_resolvent),
        (11, "determinism", Duration::from_secs(600), c11_determinism),
    ];
    let mut unexpected = 0;
    for (n, name, limit, f) in criteria {
        let t = Instant::now();
        let res = f();
        let el = t.elapsed();
        let (pass, detail) = match res {
            Ok((p, d)) => (p && el <= limit, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let status = if pass {
            "PASS"
        } else if KNOWN_RED.contains(&n) {
            "FAIL (known red)"
        } else {
            unexpected += 1;
            "FAIL"
        };
        println!(
            "criterion {n:>2} {status}: {name}: {detail} [{:.2}s of {}s]",
            el.as_secs_f64(),
            limit.as_secs()
        );
    }
    if unexpected > 0 {
        eprintln!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}

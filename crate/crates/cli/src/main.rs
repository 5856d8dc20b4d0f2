use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use twistlab::config::RunConfig;
use twistlab::extremal::{corner_norms, norm_lower_bound_with, AscentOptions, Certification, NormReport, Strategy};
use twistlab::field::{read_twf, write_twf};
use twistlab::hermite::HermiteBasisTruncation;
use twistlab::laguerre::{kernel_varsigma, laguerre_asymptotic, normalized_laguerre, LaguerreIndex, SpectralIndex};
use twistlab::oscillatory::sweep;
use twistlab::projector::{project, spectral_parts, windowed_projection, Method, Window};
use twistlab::region::{
    canonical_points, classify_estimate, classify_region, in_resolvent_pentagon, parse_rational, Coord, ExponentPoint,
};
use twistlab::resolvent::{default_family, uniform_sweep};
use twistlab::verify::{run_suite, to_csv, Suite};
use twistlab::{Error, Result};

#[derive(Parser)]
#[command(name = "twistlab", version, about = "Spectral projections of the twisted Laplacian")]
struct Cli {
    /// JSON object overriding configuration defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides TWISTLAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    d: u32,
    /// `1/p`, as `a/b` or a decimal.
    #[arg(long, allow_hyphen_values = true)]
    pr: String,
    /// `1/q`, as `a/b` or a decimal.
    #[arg(long, allow_hyphen_values = true)]
    qr: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sharp exponent at a point.
    Rho(PointArgs),
    /// The canonical points for dimension `d`.
    Points {
        #[arg(long)]
        d: u32,
    },
    /// Region, estimate type and resolvent-pentagon membership.
    Classify(PointArgs),
    /// Kernel profile `varsigma_k` with its Laguerre asymptotics.
    Kernel {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Apply `P_mu` (or a windowed projector) to a `.twf` field.
    Project {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "kernel")]
        method: String,
        /// `psi_plus:J`, `psi_minus:J`, `phi:K`, `phi0` or `psi0`.
        #[arg(long)]
        window: Option<String>,
        /// Largest spectral index kept by the windowed route.
        #[arg(long)]
        span: Option<usize>,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Norm values or lower bounds over a list of `k`.
    Normscan {
        #[arg(long)]
        d: u32,
        /// Comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// corner_exact, ring_extremizer, eigenspace_ascent or single_eigenfunction.
        #[arg(long, default_value = "corner_exact")]
        method: String,
        #[arg(long)]
        pr: Option<String>,
        #[arg(long)]
        qr: Option<String>,
    },
    /// Normalized oscillatory integrals over the separation grid.
    Oscillatory {
        #[arg(long, value_delimiter = ',', default_value = "100")]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        scales: Vec<i32>,
    },
    /// Resolvent ratios over the sweep points.
    Resolvent {
        #[arg(long)]
        d: u32,
        #[arg(long, allow_hyphen_values = true)]
        pr: String,
        #[arg(long, allow_hyphen_values = true)]
        qr: String,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 20)]
        n_max: u64,
    },
    /// Built-in check suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

enum Num {
    Exact(Rational64),
    Float(f64),
}

fn parse_num(s: &str) -> Result<Num> {
    if let Some(r) = parse_rational(s) {
        return Ok(Num::Exact(r));
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Num::Float)
        .ok_or_else(|| Error::domain(format!("{s:?} is neither a rational a/b nor a decimal")))
}

fn parse_f64(s: &str) -> Result<f64> {
    Ok(match parse_num(s)? {
        Num::Exact(r) => r.to_f64(),
        Num::Float(v) => v,
    })
}

struct Ctx {
    cfg: RunConfig,
    argv: Vec<String>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.cfg.to_json().as_bytes());
        for a in &self.argv {
            h.update(b"\0");
            h.update(a.as_bytes());
        }
        format!("{:x}", h.finalize())
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn emit_csv(&self, body: String) -> Result<()> {
        let mut text = body;
        if !text.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(&format!("# config={}\n", self.cfg.to_json()));
        text.push_str(&format!("# config-sha256={}\n", self.hash()));
        self.emit(&text)
    }

    fn emit_json(&self, mut v: Value) -> Result<()> {
        if let Value::Object(m) = &mut v {
            m.insert("config".into(), serde_json::from_str(&self.cfg.to_json()).expect("valid json"));
            m.insert("config_sha256".into(), Value::String(self.hash()));
        }
        let mut text = serde_json::to_string_pretty(&v).expect("json serializes");
        text.push('\n');
        self.emit(&text)
    }
}

fn coord_json<T: Coord>(v: &T, exact: bool) -> Value {
    if exact {
        Value::String(v.to_string())
    } else {
        json!(v.to_f64())
    }
}

fn point_record<T: Coord>(x: &ExponentPoint<T>, d: u32, exact: bool) -> Result<Value> {
    let region = classify_region(x, d)?;
    let est = classify_estimate(x, d)?;
    Ok(json!({
        "d": d,
        "pr": coord_json(&x.pr, exact),
        "qr": coord_json(&x.qr, exact),
        "region": region.tag(),
        "estimate_class": est.tag.tag(),
        "rho": coord_json(&est.exponent, exact),
    }))
}

fn with_point<F, G>(a: &PointArgs, exact: F, float: G) -> Result<Value>
where
    F: FnOnce(&ExponentPoint<Rational64>) -> Result<Value>,
    G: FnOnce(&ExponentPoint<f64>) -> Result<Value>,
{
    match (parse_num(&a.pr)?, parse_num(&a.qr)?) {
        (Num::Exact(p), Num::Exact(q)) => exact(&ExponentPoint::new(p, q)?),
        (p, q) => {
            let f = |n: Num| match n {
                Num::Exact(r) => r.to_f64(),
                Num::Float(v) => v,
            };
            float(&ExponentPoint::new(f(p), f(q))?)
        }
    }
}

fn pentagon_json<T: Coord>(x: &ExponentPoint<T>, d: u32, rec: &mut Value) -> Result<()> {
    if d >= 2 {
        rec["resolvent_pentagon"] = Value::String(in_resolvent_pentagon(x, d)?.tag().into());
    }
    Ok(())
}

fn parse_window(s: &str) -> Result<Window> {
    let (name, scale) = match s.split_once(':') {
        Some((n, v)) => (
            n,
            Some(v.parse::<i32>().map_err(|_| Error::domain(format!("bad window scale in {s:?}")))?),
        ),
        None => (s, None),
    };
    let need = |v: Option<i32>| v.ok_or_else(|| Error::domain(format!("window {name} needs a scale, as {name}:J")));
    Ok(match name {
        "psi_plus" => Window::dyadic(need(scale)?, true),
        "psi_minus" => Window::dyadic(need(scale)?, false),
        "phi" => Window::phi_k(need(scale)?),
        "phi0" => Window::phi0(),
        "psi0" => Window::psi0(),
        _ => return Err(Error::domain(format!("unknown window {name:?}"))),
    })
}

fn norm_rows(reports: &[NormReport]) -> String {
    let mut s = String::from("d,k,mu,pr,qr,method,value,certified,seed\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:e},{},{}\n",
            r.d,
            r.k,
            r.mu,
            r.pr,
            r.qr,
            r.method.tag(),
            r.value,
            match r.certification {
                Certification::Exact => "exact",
                Certification::LowerBound => "lower_bound",
            },
            r.seed.map(|v| v.to_string()).unwrap_or_default()
        ));
    }
    s
}

fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let mut cfg = RunConfig::from_env()?;
    if let Some(p) = &cli.config {
        cfg = cfg.merge_json(&std::fs::read_to_string(p)?)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(k) = cli.k_max {
        cfg.k_max = k;
    }
    cfg.validate()?;
    cfg.init_threads();
    let ctx = Ctx {
        cfg,
        argv,
        out: cli.out.clone(),
    };
    match cli.cmd {
        Cmd::Rho(a) => {
            let v = with_point(&a, |x| point_record(x, a.d, true), |x| point_record(x, a.d, false))?;
            ctx.emit_json(v)
        }
        Cmd::Classify(a) => {
            let v = with_point(
                &a,
                |x| {
                    let mut r = point_record(x, a.d, true)?;
                    pentagon_json(x, a.d, &mut r)?;
                    Ok(r)
                },
                |x| {
                    let mut r = point_record(x, a.d, false)?;
                    pentagon_json(x, a.d, &mut r)?;
                    Ok(r)
                },
            )?;
            ctx.emit_json(v)
        }
        Cmd::Points { d } => {
            let cp = canonical_points::<Rational64>(d)?;
            let mut pts = Vec::new();
            for (name, x) in cp.named() {
                let mut rec = point_record(x, d, true)?;
                rec["name"] = Value::String(name.into());
                pts.push(rec);
            }
            ctx.emit_json(json!({ "d": d, "points": pts }))
        }
        Cmd::Kernel { d, k, r_max, samples } => {
            ctx.cfg.check_k(k)?;
            let s = SpectralIndex::new(d, k)?;
            let r_max = r_max.unwrap_or(2.0 * (s.mu as f64).sqrt() + 6.0);
            if !(r_max > 0.0) || samples < 2 {
                return Err(Error::domain("kernel scan needs r_max > 0 and at least two samples"));
            }
            let idx = LaguerreIndex::new(k, d as f64 - 1.0)?;
            let mut body = String::from("r,varsigma,normalized_laguerre,asymptotic_main,error_envelope\n");
            for i in 0..samples {
                let r = r_max * i as f64 / (samples - 1) as f64;
                let t = r * r / 2.0;
                let (main, env) = match laguerre_asymptotic(idx, t) {
                    Ok(a) => (format!("{:e}", a.main), format!("{:e}", a.error_envelope)),
                    Err(_) => (String::new(), String::new()),
                };
                body.push_str(&format!(
                    "{:e},{:e},{:e},{},{}\n",
                    r,
                    kernel_varsigma(s, r)?,
                    normalized_laguerre(idx, t)?,
                    main,
                    env
                ));
            }
            ctx.emit_csv(body)
        }
        Cmd::Project {
            d,
            k,
            method,
            window,
            span,
            input,
        } => {
            ctx.cfg.check_k(k)?;
            let out = ctx
                .out
                .clone()
                .ok_or_else(|| Error::domain("project needs --out for the resulting field"))?;
            let f = read_twf(&input)?;
            if f.grid().d != d {
                return Err(Error::domain(format!("--d {d} does not match the field's d = {}", f.grid().d)));
            }
            let s = SpectralIndex::new(d, k)?;
            let (g, tag, residual) = match window {
                Some(w) => {
                    let w = parse_window(&w)?;
                    let kmax = span.unwrap_or(2 * k + 8);
                    ctx.cfg.check_k(kmax)?;
                    let parts = spectral_parts(&f, kmax, HermiteBasisTruncation::for_k(d, kmax).alpha_max)?;
                    (windowed_projection(&parts, s.mu, &w)?, format!("window:{}", w.kind.tag()), parts.residual)
                }
                None => {
                    let m = match method.as_str() {
                        "eigen" => Method::Eigen,
                        "kernel" => Method::Kernel,
                        _ => return Err(Error::domain(format!("unknown method {method:?}"))),
                    };
                    let trunc = (m == Method::Eigen).then(|| HermiteBasisTruncation::for_k(d, k));
                    let r = project(&f, s, m, trunc)?;
                    (r.field, m.tag().to_string(), r.residual_estimate)
                }
            };
            write_twf(&out, &g)?;
            let summary = json!({
                "d": d, "k": k, "mu": s.mu, "method": tag,
                "residual_estimate": residual, "output": out.display().to_string(),
            });
            let mut text = serde_json::to_string_pretty(&json!({
                "summary": summary,
                "config": serde_json::from_str::<Value>(&ctx.cfg.to_json()).expect("valid json"),
                "config_sha256": ctx.hash(),
            }))
            .expect("json serializes");
            text.push('\n');
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
        Cmd::Normscan { d, k, method, pr, qr } => {
            let mut reports = Vec::new();
            for &k in &k {
                ctx.cfg.check_k(k)?;
                let s = SpectralIndex::new(d, k)?;
                if method == "corner_exact" {
                    reports.extend(corner_norms(s)?);
                    continue;
                }
                let strategy = Strategy::parse(&method).ok_or_else(|| Error::domain(format!("unknown method {method:?}")))?;
                let (Some(pr), Some(qr)) = (&pr, &qr) else {
                    return Err(Error::domain(format!("method {method} needs --pr and --qr")));
                };
                let x = ExponentPoint::new(parse_f64(pr)?, parse_f64(qr)?)?;
                let opts = AscentOptions {
                    restarts: ctx.cfg.ascent_restarts,
                    max_iter: ctx.cfg.ascent_max_iter,
                    ..Default::default()
                };
                reports.push(norm_lower_bound_with(s, &x, strategy, ctx.cfg.seed, opts)?);
            }
            ctx.emit_csv(norm_rows(&reports))
        }
        Cmd::Oscillatory { mu, scales } => {
            let rows = sweep(&mu, &scales, &ctx.cfg.osc_options())?;
            let mut body = String::from("case,mu,scale,separation,abs_value,normalized_value\n");
            for r in rows {
                body.push_str(&format!(
                    "{},{},{},{:e},{:e},{:e}\n",
                    r.case.tag(),
                    r.mu,
                    r.scale,
                    r.separation,
                    r.abs_value,
                    r.normalized_value
                ));
            }
            ctx.emit_csv(body)
        }
        Cmd::Resolvent { d, pr, qr, c, n_max } => {
            let x = ExponentPoint::new(parse_f64(&pr)?, parse_f64(&qr)?)?;
            ctx.cfg.check_k(2 * n_max as usize + 80)?;
            let rep = uniform_sweep(&x, d, c, n_max, &default_family())?;
            let mut body = String::from("d,pr,qr,z_re,z_im,gap,test_id,ratio\n");
            for r in &rep.rows {
                body.push_str(&format!(
                    "{},{},{},{},{},{:e},{},{:e}\n",
                    rep.d, rep.pr, rep.qr, r.z_re, r.z_im, r.gap, r.test_id, r.ratio
                ));
            }
            body.push_str(&format!("# diagnostic_max_over_min={:e}\n", rep.diagnostic));
            ctx.emit_csv(body)
        }
        Cmd::Verify { suite } => {
            let s = Suite::parse(&suite).ok_or_else(|| Error::domain(format!("unknown suite {suite:?}")))?;
            let checks = run_suite(s, &ctx.cfg)?;
            ctx.emit_csv(to_csv(&checks))
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, argv[1..].to_vec()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

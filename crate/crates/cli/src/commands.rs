use std::fmt::Write as _;
use std::path::Path;

use gridcert::cert::{auto_multiplier, gamma_star, AutoSearch, CertOptions, Method, Multiplier};
use gridcert::converse::build_counterexample;
use gridcert::models::{
    agc_gamma_star, agc_sweep, droop_delay_bounds, droop_delay_check, log_range, DroopDelayParams, MultiplierChoice,
    AGC_TABLE,
};
use gridcert::network::{
    certify_network, closed_loop_oracle, closed_loop_oracle_with, simulate, ClosedLoop, Disturbance, MultiplierSpec,
    SimulationOptions,
};
use gridcert::tf::{FrequencyGrid, FrequencyResponse, RationalFunction};
use gridcert::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::args::{parse_coeffs, BusSource, Cli, Command, GlobalOpts, MethodArg, MultiplierOpts};
use crate::output::{fmt_f64, to_json_string, write_out};
use crate::spec_io::{descending, emit_spec, parse_spec, poly_from_descending};
use crate::CliError;

/// Outcome of a successful run: `Negative` maps to exit code 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Positive
        } else {
            Verdict::Negative
        }
    }
}

enum Choice {
    Auto(AutoSearch),
    Fixed(Multiplier),
}

fn cert_options(g: &GlobalOpts) -> Result<CertOptions, CliError> {
    let mut o = CertOptions::default();
    if let Some((lo, hi, n)) = g.grid {
        o.grid = FrequencyGrid::log_spaced(lo, hi, n)?;
    }
    if let Some(x) = g.tol_rel {
        o.tol_rel = x;
    }
    if let Some(x) = g.tol_espr {
        o.espr.tol_espr = x;
    }
    if let Some(x) = g.tol_dc {
        o.tol_dc = x;
    }
    if let Some(x) = g.gamma_cap {
        o.gamma_cap = x;
    }
    if let Some(m) = g.method {
        o.method = match m {
            MethodArg::Grid => Method::Grid,
            MethodArg::StateSpace => Method::StateSpace,
        };
    }
    Ok(o)
}

fn multiplier_choice(m: &MultiplierOpts) -> Result<Choice, CliError> {
    if let Some(t) = m.t {
        return Ok(Choice::Fixed(Multiplier::first_order(t)?));
    }
    let text = m.multiplier.trim();
    if text == "auto" {
        return Ok(Choice::Auto(AutoSearch::default()));
    }
    let body = if text.starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| CliError::Io(format!("{text}: {e}")))?
    };
    let h: Multiplier = serde_json::from_str(&body).map_err(|e| CliError::Parse(format!("multiplier: {e}")))?;
    Ok(Choice::Fixed(h))
}

fn fixed_for(choice: Choice, g: &ClosedLoop, opts: &CertOptions) -> Result<Multiplier, CliError> {
    Ok(match choice {
        Choice::Fixed(h) => h,
        Choice::Auto(search) => auto_multiplier(&[(g.clone(), 1.0)], &search, opts)?.multiplier,
    })
}

fn tf_from_flags(num: &str, den: &str) -> Result<RationalFunction, CliError> {
    let num = parse_coeffs(num).map_err(CliError::Usage)?;
    let den = parse_coeffs(den).map_err(CliError::Usage)?;
    Ok(RationalFunction::new(poly_from_descending(&num), poly_from_descending(&den))?)
}

fn bus_loop(src: &BusSource) -> Result<ClosedLoop, CliError> {
    match (&src.p_num, &src.p_den, &src.spec) {
        (Some(n), Some(d), _) => Ok(ClosedLoop::Rational(tf_from_flags(n, d)?)),
        (_, _, Some(path)) => {
            let spec = parse_spec(path)?;
            let b = spec.buses.get(src.bus).ok_or_else(|| CliError::Index {
                pointer: format!("/buses/{}", src.bus),
                reason: format!("spec has {} buses", spec.n()),
            })?;
            Ok(b.closed_loop().map_err(|e| e.at_bus(src.bus))?)
        }
        _ => Err(CliError::Usage("give --p-num and --p-den, or --spec with --bus".into())),
    }
}

fn json_out(g: &GlobalOpts, v: &Value) -> Result<(), CliError> {
    write_out(g.out.as_deref(), &to_json_string(v))
}

pub fn run(cli: &Cli) -> Result<Verdict, CliError> {
    let g = &cli.global;
    if let Some(jobs) = g.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let opts = cert_options(g)?;
    match &cli.command {
        Command::Certify { spec, multiplier, oracle } => certify(g, &opts, spec, multiplier, *oracle),
        Command::GammaStar { source, multiplier } => {
            let p = bus_loop(source)?;
            let h = fixed_for(multiplier_choice(multiplier)?, &p, &opts)?;
            let gs = gamma_star(&p, &h, &opts)?;
            json_out(
                g,
                &json!({
                    "gamma_star": gs.value,
                    "capped": gs.capped,
                    "bracket": [gs.bracket.0, gs.bracket.1],
                    "multiplier": serde_json::to_value(&h).expect("multiplier serializes"),
                }),
            )?;
            Ok(Verdict::from_bool(gs.value > 0.0))
        }
        Command::SweepAgc {
            row,
            r,
            beta,
            k,
            multiplier,
            summary,
        } => sweep(g, &opts, *row, *r, *beta, *k, multiplier, summary.as_deref()),
        Command::DroopDelay {
            m,
            d,
            gamma,
            r,
            tau,
            alpha,
        } => droop(g, &opts, *m, *d, *gamma, *r, *tau, *alpha),
        Command::Counterexample {
            p1_num,
            p1_den,
            gamma,
            n,
            multiplier,
        } => counterexample(g, &opts, p1_num, p1_den, *gamma, *n, multiplier),
        Command::Simulate {
            spec,
            bus,
            magnitude,
            start,
            end,
            dt,
            t_end,
            sample_every,
            flows,
        } => {
            let spec = parse_spec(spec)?;
            let bus = match bus {
                Some(b) => *b,
                None => rand_chacha::ChaCha8Rng::seed_from_u64(g.seed).gen_range(0..spec.n()),
            };
            let dist = Disturbance::pulse(bus, *magnitude, *start, end.unwrap_or(f64::INFINITY));
            let so = SimulationOptions {
                dt: *dt,
                t_end: *t_end,
                sample_every: (*sample_every).max(1),
            };
            let tr = simulate(&spec, &dist, &so)?;
            let mut s = String::from("t,bus,theta_dot,p_n\n");
            for (k, t) in tr.times.iter().enumerate() {
                for (i, (w, p)) in tr.theta_dot[k].iter().zip(&tr.p_n[k]).enumerate() {
                    let _ = writeln!(s, "{},{i},{},{}", fmt_f64(*t), fmt_f64(*w), fmt_f64(*p));
                }
            }
            write_out(g.out.as_deref(), &s)?;
            if let Some(path) = flows {
                let mut f = String::from("t,i,j,flow\n");
                for (k, t) in tr.times.iter().enumerate() {
                    for (&(i, j), x) in tr.lines.iter().zip(&tr.line_flows[k]) {
                        let _ = writeln!(f, "{},{i},{j},{}", fmt_f64(*t), fmt_f64(*x));
                    }
                }
                write_out(Some(path), &f)?;
            }
            if tr.diverged {
                log::error!("trajectory diverged");
            }
            Ok(Verdict::from_bool(!tr.diverged))
        }
        Command::NyquistExport { source, gamma } => {
            let p = bus_loop(source)?;
            let mut s = String::from("omega,re,im\n");
            for &w in opts.grid.points() {
                let jw = Complex64::new(0.0, w);
                let v = *gamma * p.eval(jw)? / jw;
                let _ = writeln!(s, "{},{},{}", fmt_f64(w), fmt_f64(v.re), fmt_f64(v.im));
            }
            write_out(g.out.as_deref(), &s)?;
            Ok(Verdict::Positive)
        }
    }
}

fn certify(
    g: &GlobalOpts,
    opts: &CertOptions,
    path: &Path,
    multiplier: &MultiplierOpts,
    oracle: bool,
) -> Result<Verdict, CliError> {
    let spec = parse_spec(path)?;
    let h = match multiplier_choice(multiplier)? {
        Choice::Auto(s) => MultiplierSpec::Auto(s),
        Choice::Fixed(h) => MultiplierSpec::Fixed(h),
    };
    let report = certify_network(&spec, &h, opts)?;
    let mut v = serde_json::to_value(&report).expect("report serializes");
    if oracle {
        v["oracle"] = match closed_loop_oracle(&spec) {
            Ok(verdict) => serde_json::to_value(&verdict).expect("verdict serializes"),
            Err(Error::DelayModelPresent(bus)) => json!({"skipped": format!("bus {bus} has a delay model")}),
            Err(e) => return Err(e.into()),
        };
    }
    json_out(g, &v)?;
    Ok(Verdict::from_bool(report.certified))
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    g: &GlobalOpts,
    opts: &CertOptions,
    row: usize,
    r: Option<f64>,
    beta: (f64, f64, usize),
    k: (f64, f64, usize),
    multiplier: &MultiplierOpts,
    summary: Option<&Path>,
) -> Result<Verdict, CliError> {
    let mut p = *AGC_TABLE
        .get(row.wrapping_sub(1))
        .ok_or_else(|| CliError::Usage(format!("--row must be 1..={}", AGC_TABLE.len())))?;
    if let Some(r) = r {
        p.r = r;
    }
    let choice = match multiplier_choice(multiplier)? {
        Choice::Auto(s) => MultiplierChoice::Auto(s),
        Choice::Fixed(h) => MultiplierChoice::Fixed(h),
    };
    let betas = log_range(beta.0, beta.1, beta.2)?;
    let ks = log_range(k.0, k.1, k.2)?;
    let sw = agc_sweep(&p, &betas, &ks, &choice, opts)?;
    let mut csv = String::from("beta,k,gamma_star\n");
    for (i, b) in betas.iter().enumerate() {
        for (j, kk) in ks.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", fmt_f64(*b), fmt_f64(*kk), fmt_f64(sw.gamma[i][j]));
        }
    }
    write_out(g.out.as_deref(), &csv)?;
    let cell = |b: f64, k: f64, v: f64| json!({"beta": b, "k": k, "gamma_star": v});
    let nominal = agc_gamma_star(&p, &choice, opts)?;
    let argmax = sw.argmax().map(|(i, j, v)| cell(betas[i], ks[j], v));
    let doc = json!({
        "row": row,
        "r": p.r,
        "argmax": argmax,
        "nominal": cell(p.beta, p.k, nominal),
    });
    let text = to_json_string(&doc);
    match summary {
        Some(path) => write_out(Some(path), &text)?,
        None => eprint!("{text}"),
    }
    Ok(Verdict::Positive)
}

#[allow(clippy::too_many_arguments)]
fn droop(
    g: &GlobalOpts,
    opts: &CertOptions,
    m: f64,
    d: f64,
    gamma: f64,
    r: Option<f64>,
    tau: f64,
    alpha: f64,
) -> Result<Verdict, CliError> {
    let r_max = droop_delay_bounds(m, gamma, None, alpha)?.r_max;
    let r = r.unwrap_or(r_max);
    let tau_max = alpha * m * r;
    let p = DroopDelayParams::new(m, d, r, tau)?;
    let mut doc = json!({"r_max": r_max, "tau_max": tau_max, "r": r, "tau": tau});
    let ok = match droop_delay_check(&p, gamma, alpha, &opts.grid) {
        Ok(c) => {
            doc["check"] = json!(c.check);
            doc["worst_omega"] = json!(c.worst_omega);
            doc["margin"] = json!(c.margin);
            c.check
        }
        Err(e @ Error::UnstableLocalLoop(_)) => {
            doc["check"] = json!(false);
            doc["reason"] = json!(e.to_string());
            false
        }
        Err(e) => return Err(e.into()),
    };
    json_out(g, &doc)?;
    Ok(Verdict::from_bool(ok))
}

fn counterexample(
    g: &GlobalOpts,
    opts: &CertOptions,
    num: &str,
    den: &str,
    gamma: f64,
    n: usize,
    multiplier: &MultiplierOpts,
) -> Result<Verdict, CliError> {
    let p1 = tf_from_flags(num, den)?;
    let h = fixed_for(multiplier_choice(multiplier)?, &ClosedLoop::Rational(p1.clone()), opts)?;
    let ce = match build_counterexample(&p1, &h, gamma, n, opts) {
        Ok(ce) => ce,
        Err(Error::NoViolation) => {
            json_out(g, &json!({"violation": false, "multiplier": serde_json::to_value(&h).expect("serializes")}))?;
            return Ok(Verdict::Positive);
        }
        Err(e) => return Err(e.into()),
    };
    let l: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| ce.l[(i, j)]).collect()).collect();
    let verdict = closed_loop_oracle_with(&ce.bus_functions(&p1), &ce.l)?;
    let mut doc = json!({
        "violation": true,
        "omega0": ce.omega0,
        "gamma1": ce.gamma1,
        "n": n,
        "L": l,
        "partner_num": descending(ce.p_partners.num()),
        "partner_den": descending(ce.p_partners.den()),
        "det_abs": ce.det_at_omega0(&p1)?.norm(),
        "multiplier": serde_json::to_value(&h).expect("serializes"),
        "witness": serde_json::to_value(ce.witness).expect("serializes"),
        "oracle": serde_json::to_value(&verdict).expect("serializes"),
    });
    if n == 2 {
        doc["spec"] = emit_spec(&ce.to_network(&p1)?);
    }
    json_out(g, &doc)?;
    Ok(Verdict::Negative)
}

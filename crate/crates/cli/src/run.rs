use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use vortexforge::mountain_pass::write_path_csv;
use vortexforge::{
    classify_triviality, make_grid, minimize, mp_solve, read_pair_csv, refine, verify_all,
    write_pair_csv, FunctionalReport, PhysicsParams, Profile, RadialGrid, SolveReport,
    TentIntegrals, TentParams, Triviality, VerifyReport, VortexPair,
};

use crate::config::{Init, Mode, RunConfig, SweepParam};

/// How a run ended when no error was raised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
}

impl Status {
    fn from_flag(ok: bool) -> Self {
        if ok {
            Status::Success
        } else {
            Status::NotConverged
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Status> {
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    match cfg.mode {
        Mode::Minimize => run_minimize(cfg),
        Mode::Mpass => run_mpass(cfg, &cfg.output_dir),
        Mode::Refine => run_refine(cfg),
        Mode::Verify => run_verify(cfg),
        Mode::Sweep => run_sweep(cfg),
        Mode::Quadcheck => run_quadcheck(cfg),
    }
}

fn grid(cfg: &RunConfig) -> Result<RadialGrid> {
    Ok(make_grid(cfg.radius, cfg.n)?)
}

fn read_seed(cfg: &RunConfig, params: PhysicsParams) -> Result<VortexPair> {
    let path = cfg.seed_file.as_ref().context("no seed_file given")?;
    let file = File::open(path).with_context(|| format!("cannot read seed file {}", path.display()))?;
    read_pair_csv(BufReader::new(file), params)
        .with_context(|| format!("bad seed file {}", path.display()))
}

fn write_profile(dir: &Path, pair: &VortexPair) -> Result<()> {
    let mut out = BufWriter::new(File::create(dir.join("profile.csv"))?);
    write_pair_csv(pair, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json(dir: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(())
}

/// Flattens the solver and verifier reports into one object.
fn report(
    solve: Option<&SolveReport>,
    verify: Option<&VerifyReport>,
    pair: Option<&VortexPair>,
) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    if let Some(s) = solve {
        let Value::Object(mut obj) = serde_json::to_value(s)? else {
            unreachable!()
        };
        // per-round records go to path_history.csv
        if let Some(Value::Object(path)) = obj.get_mut("path") {
            path.remove("rounds");
        }
        map.extend(obj);
    }
    if let Some(v) = verify {
        let Value::Object(obj) = serde_json::to_value(v)? else {
            unreachable!()
        };
        map.extend(obj);
    }
    if let Some(p) = pair {
        map.insert("l".into(), json!(p.params.l));
        map.insert("R".into(), json!(p.params.radius));
        map.insert("n".into(), json!(p.grid().n()));
        map.insert("functionals".into(), serde_json::to_value(FunctionalReport::evaluate(p))?);
    }
    Ok(map)
}

fn newton_summary(rep: &SolveReport) -> Value {
    json!({
        "converged": rep.converged,
        "iters": rep.iters,
        "residual_max": rep.residual_max,
        "trivial": rep.trivial,
    })
}

fn random_seed(g: &RadialGrid, params: PhysicsParams, seed: u64) -> Result<VortexPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = g.radius();
    let mut bump = || {
        let center = rng.gen_range(0.2..0.8) * radius;
        let width = rng.gen_range(0.05..0.2) * radius;
        Profile::from_fn(g, |r| r * (radius - r) * (-((r - center) / width).powi(2)).exp())
    };
    let (a1, a2) = (bump()?, bump()?);
    Ok(VortexPair::new(a1, a2, params)?)
}

fn run_minimize(cfg: &RunConfig) -> Result<Status> {
    let g = grid(cfg)?;
    let targets = cfg.targets.expect("checked by config");
    let params = PhysicsParams::new(0.0, 0.0, cfg.l, cfg.radius)?;
    let seed = match (&cfg.seed_file, cfg.init) {
        (Some(_), _) => Some(read_seed(cfg, params)?),
        (None, Init::Random) => Some(random_seed(&g, params, cfg.rng_seed)?),
        (None, Init::Tent) => None,
    };
    let (pair, rep) = minimize(&g, cfg.l, &targets, &cfg.minimize, seed.as_ref())?;
    let (polished, nrep) = refine(&pair, &cfg.newton)?;
    let moved = pair
        .a1
        .values()
        .iter()
        .zip(polished.a1.values())
        .chain(pair.a2.values().iter().zip(polished.a2.values()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let verify = verify_all(&pair, &pair.params, Some(&targets));
    let mut map = report(Some(&rep), Some(&verify), Some(&pair))?;
    let mut polish = newton_summary(&nrep);
    polish["max_move"] = json!(moved);
    map.insert("polish".into(), polish);
    write_profile(&cfg.output_dir, &pair)?;
    write_json(&cfg.output_dir, &Value::Object(map))?;
    println!(
        "minimize: converged={} iters={} I={:.10} kappa={:.10} beta={:.10} in_range={} all_pass={}",
        rep.converged, rep.iters, rep.final_i, rep.kappa, rep.beta, rep.in_existence_range, verify.all_pass
    );
    Ok(Status::from_flag(rep.converged))
}

/// Mountain pass followed by Newton polish; returns the polished pair.
fn solve_mpass(cfg: &RunConfig, params: &PhysicsParams, dir: &Path) -> Result<(VortexPair, Map<String, Value>, bool)> {
    let g = grid(cfg)?;
    let (saddle, mrep) = mp_solve(params, &g, &cfg.mpass)?;
    if let Some(path) = &mrep.path {
        let mut out = BufWriter::new(File::create(dir.join("path_history.csv"))?);
        write_path_csv(&path.rounds, &mut out)?;
        out.flush()?;
    }
    let (pair, nrep) = refine(&saddle, &cfg.newton)?;
    let verify = verify_all(&pair, params, cfg.targets.as_ref());
    let mut map = report(Some(&mrep), Some(&verify), Some(&pair))?;
    map.insert("refine".into(), newton_summary(&nrep));
    let ok = mrep.converged && nrep.converged && !nrep.trivial;
    Ok((pair, map, ok))
}

fn run_mpass(cfg: &RunConfig, dir: &Path) -> Result<Status> {
    let params = cfg.params()?;
    let (pair, map, ok) = solve_mpass(cfg, &params, dir)?;
    write_profile(dir, &pair)?;
    println!(
        "mpass: converged={ok} J={:.10} residual={:.3e} all_pass={}",
        map["functionals"]["J"].as_f64().unwrap_or(f64::NAN),
        map["residual_max"].as_f64().unwrap_or(f64::NAN),
        map["all_pass"]
    );
    write_json(dir, &Value::Object(map))?;
    Ok(Status::from_flag(ok))
}

fn run_refine(cfg: &RunConfig) -> Result<Status> {
    let params = cfg.params()?;
    let seed = read_seed(cfg, params)?;
    let (pair, rep) = refine(&seed, &cfg.newton)?;
    let verify = verify_all(&pair, &params, cfg.targets.as_ref());
    let map = report(Some(&rep), Some(&verify), Some(&pair))?;
    write_profile(&cfg.output_dir, &pair)?;
    write_json(&cfg.output_dir, &Value::Object(map))?;
    println!(
        "refine: converged={} iters={} residual={:.3e} trivial={} all_pass={}",
        rep.converged, rep.iters, rep.residual_max, rep.trivial, verify.all_pass
    );
    Ok(Status::from_flag(rep.converged))
}

fn verdict(applicable: bool, pass: bool) -> &'static str {
    match (applicable, pass) {
        (false, _) => "n/a",
        (true, true) => "pass",
        (true, false) => "FAIL",
    }
}

fn print_table(v: &VerifyReport) {
    let rate = |r: Option<f64>| r.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    println!("{:<28} {:<8} detail", "check", "verdict");
    println!(
        "{:<28} {:<8} min A2 > 0: {}",
        "A2 positivity",
        verdict(v.positivity_applicable, v.positive_a2),
        v.positive_a2
    );
    println!(
        "{:<28} {:<8} {:?}",
        "non-semi-triviality",
        verdict(true, v.semi_trivial == Triviality::FullyNontrivial),
        v.semi_trivial
    );
    println!(
        "{:<28} {:<8} {:.6} < M2 = {:.6} < {:.6}",
        "amplitude sandwich",
        verdict(v.bounds_applicable, v.sandwich_pass),
        v.sandwich_lo,
        v.m2,
        v.sandwich_hi
    );
    println!(
        "{:<28} {:<8} rate {} vs bound {:.4}",
        "A1^2 decay",
        verdict(v.bounds_applicable, v.decay_a1_pass),
        rate(v.decay_rate_a1),
        v.decay_bounds.a1
    );
    println!(
        "{:<28} {:<8} rate {} vs bound {:.4}",
        "A2^2 decay",
        verdict(v.bounds_applicable, v.decay_a2_pass),
        rate(v.decay_rate_a2),
        v.decay_bounds.a2
    );
    println!(
        "{:<28} {:<8} rate {} vs bound {:.4}",
        "A2^2 decay (strong bound)",
        if v.decay_a2_strong_pass { "consistent" } else { "inconsistent" },
        rate(v.decay_rate_a2),
        v.decay_bounds.a2_strong
    );
    if let Some(ok) = v.flux_pass {
        println!(
            "{:<28} {:<8} Q1 = {:.12}, Q2 = {:.12}",
            "flux targets",
            verdict(true, ok),
            v.flux_q1,
            v.flux_q2
        );
    }
    println!("all_pass = {}", v.all_pass);
}

fn run_verify(cfg: &RunConfig) -> Result<Status> {
    let params = cfg.params()?;
    let pair = read_seed(cfg, params)?;
    let verify = verify_all(&pair, &params, cfg.targets.as_ref());
    print_table(&verify);
    let map = report(None, Some(&verify), Some(&pair))?;
    write_profile(&cfg.output_dir, &pair)?;
    write_json(&cfg.output_dir, &Value::Object(map))?;
    Ok(Status::Success)
}

fn run_quadcheck(cfg: &RunConfig) -> Result<Status> {
    let g = grid(cfg)?;
    let t = TentParams::for_radius(cfg.radius, 1.0)?;
    let q = TentIntegrals::quadrature(&g, &t)?;
    let c = TentIntegrals::closed_form(&t);
    let rows = [
        ("int r A0^2 dr", q.mass, c.mass),
        ("int r A0_r^2 dr", q.dirichlet, c.dirichlet),
        ("int A0^2 / r dr", q.inverse, c.inverse),
        ("int r A0^3 dr", q.cubic, c.cubic),
    ];
    println!("{:<18} {:>22} {:>22} {:>10}", "integral", "quadrature", "closed form", "rel err");
    let mut entries = Vec::new();
    let mut ok = true;
    for (name, num, exact) in rows {
        let err = (num - exact).abs() / exact.abs();
        ok &= err <= 1e-4;
        println!("{name:<18} {num:>22.15e} {exact:>22.15e} {err:>10.2e}");
        entries.push(json!({ "integral": name, "quadrature": num, "closed_form": exact, "rel_err": err }));
    }
    write_json(
        &cfg.output_dir,
        &json!({ "R": cfg.radius, "n": cfg.n, "a": t.a, "b": t.b, "integrals": entries, "all_pass": ok }),
    )?;
    Ok(Status::from_flag(ok))
}

fn step_params(cfg: &RunConfig, param: SweepParam, value: f64) -> Result<PhysicsParams> {
    let (mut kappa, mut beta, mut l) = (cfg.kappa.unwrap_or(0.0), cfg.beta.unwrap_or(0.0), cfg.l);
    match param {
        SweepParam::Kappa => kappa = value,
        SweepParam::Beta => beta = value,
        SweepParam::L => l = value as i32,
    }
    Ok(PhysicsParams::new(kappa, beta, l, cfg.radius)?)
}

fn run_sweep(cfg: &RunConfig) -> Result<Status> {
    let sweep = cfg.sweep.as_ref().expect("checked by config");
    let mut summary = String::from(
        "step,value,J,kappa,beta,l,M1,M2,decay_rate_a1,decay_rate_a2,all_pass,start\n",
    );
    let mut prev: Option<VortexPair> = None;
    let mut all_ok = true;
    for (k, &value) in sweep.values.iter().enumerate() {
        let dir = cfg.output_dir.join(format!("step_{k:03}"));
        fs::create_dir_all(&dir)?;
        let params = step_params(cfg, sweep.param, value)?;
        let warm = prev.as_ref().and_then(|p| {
            let start = VortexPair::new(p.a1.clone(), p.a2.clone(), params).ok()?;
            let (pair, rep) = refine(&start, &cfg.newton).ok()?;
            let good = rep.converged
                && !rep.trivial
                && classify_triviality(&pair, 1e-6) == Triviality::FullyNontrivial;
            good.then_some((pair, rep))
        });
        let solved = match warm {
            Some((pair, rep)) => {
                let verify = verify_all(&pair, &params, None);
                let mut map = report(None, Some(&verify), Some(&pair))?;
                map.insert("refine".into(), newton_summary(&rep));
                Ok((pair, map, true, "warm"))
            }
            None => solve_mpass(cfg, &params, &dir).map(|(p, m, ok)| (p, m, ok, "cold")),
        };
        match solved {
            Ok((pair, mut map, ok, start)) => {
                map.insert("sweep_value".into(), json!(value));
                map.insert("start".into(), json!(start));
                write_profile(&dir, &pair)?;
                summary.push_str(&format!(
                    "{k},{value},{:.16e},{},{},{},{:.16e},{:.16e},{},{},{},{start}\n",
                    map["functionals"]["J"].as_f64().unwrap_or(f64::NAN),
                    params.kappa,
                    params.beta,
                    params.l,
                    map["m1"].as_f64().unwrap_or(f64::NAN),
                    map["m2"].as_f64().unwrap_or(f64::NAN),
                    map["decay_rate_a1"].as_f64().map_or("nan".into(), |x| format!("{x:.16e}")),
                    map["decay_rate_a2"].as_f64().map_or("nan".into(), |x| format!("{x:.16e}")),
                    map["all_pass"].as_bool().unwrap_or(false),
                ));
                println!(
                    "sweep step {k}: value={value} {start} start, converged={ok}, all_pass={}",
                    map["all_pass"]
                );
                write_json(&dir, &Value::Object(map))?;
                all_ok &= ok;
                prev = ok.then_some(pair);
            }
            Err(e) => {
                eprintln!("sweep step {k}: value={value} failed: {e:#}");
                summary.push_str(&format!(
                    "{k},{value},nan,{},{},{},nan,nan,nan,nan,false,failed\n",
                    params.kappa, params.beta, params.l
                ));
                write_json(&dir, &json!({ "sweep_value": value, "error": format!("{e:#}") }))?;
                all_ok = false;
                prev = None;
            }
        }
    }
    fs::write(cfg.output_dir.join("sweep_summary.csv"), summary)?;
    Ok(Status::from_flag(all_ok))
}

//! Flat `key = value` run configuration, one key per line, `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use vortexforge::{
    FluxTargets, MinimizeOptions, MpOptions, NewtonOptions, PhysicsParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Minimize,
    Mpass,
    Refine,
    Verify,
    Sweep,
    Quadcheck,
}

impl FromStr for Mode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "minimize" => Mode::Minimize,
            "mpass" => Mode::Mpass,
            "refine" => Mode::Refine,
            "verify" => Mode::Verify,
            "sweep" => Mode::Sweep,
            "quadcheck" => Mode::Quadcheck,
            other => bail!("unknown mode `{other}`"),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Minimize => "minimize",
            Mode::Mpass => "mpass",
            Mode::Refine => "refine",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
            Mode::Quadcheck => "quadcheck",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Kappa,
    Beta,
    L,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Tent,
    Random,
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub kappa: Option<f64>,
    pub beta: Option<f64>,
    pub l: i32,
    pub radius: f64,
    pub n: usize,
    pub targets: Option<FluxTargets>,
    pub output_dir: PathBuf,
    pub seed_file: Option<PathBuf>,
    pub init: Init,
    pub rng_seed: u64,
    pub minimize: MinimizeOptions,
    pub mpass: MpOptions,
    pub newton: NewtonOptions,
    pub sweep: Option<Sweep>,
}

const KEYS: &[&str] = &[
    "mode", "kappa", "beta", "l", "R", "n", "q1", "q2", "output_dir", "seed_file", "init",
    "rng_seed", "step", "max_iters", "grad_tol", "enforce_nonneg", "precond_shift",
    "path_points", "deform_iters", "max_rounds", "descent_step", "crit_tol", "newton_tol",
    "newton_max_iters", "newton_damping", "sweep_param", "sweep_start", "sweep_stop",
    "sweep_step", "sweep_values",
];

/// Parses `key = value` lines into a map, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            bail!("line {}: unknown key `{key}`", i + 1);
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            bail!("line {}: key `{key}` given twice", i + 1);
        }
    }
    Ok(map)
}

/// A real number, optionally written as a multiple of `pi` (`pi`, `2pi`, `0.5*pi`).
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Some(coef) = t.strip_suffix("pi") {
        let coef = coef.trim().trim_end_matches('*').trim();
        let c = if coef.is_empty() {
            1.0
        } else {
            coef.parse::<f64>().with_context(|| format!("bad number `{s}`"))?
        };
        return Ok(c * std::f64::consts::PI);
    }
    let v = t.parse::<f64>().with_context(|| format!("bad number `{s}`"))?;
    if !v.is_finite() {
        bail!("`{s}` is not finite");
    }
    Ok(v)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.0
            .get(key)
            .map(|v| parse_real(v).with_context(|| format!("key `{key}`")))
            .transpose()
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("key `{key}`: {e}")))
            .transpose()
    }
}

impl RunConfig {
    /// Builds a validated config; `mode_override` replaces the `mode` key.
    pub fn from_text(text: &str, mode_override: Option<Mode>) -> Result<Self> {
        let f = Fields(parse_pairs(text)?);
        let mode = match mode_override {
            Some(m) => m,
            None => f
                .0
                .get("mode")
                .context("missing `mode`")?
                .parse()?,
        };
        let radius = f.real("R")?.unwrap_or(if mode == Mode::Quadcheck { 2.0 } else { 10.0 });
        let n = f.parsed::<usize>("n")?.unwrap_or(if mode == Mode::Quadcheck { 8192 } else { 512 });
        let l = f.parsed::<i32>("l")?.unwrap_or(1);
        if l == 0 {
            bail!("vortex number l must be nonzero");
        }
        let targets = match (f.real("q1")?, f.real("q2")?) {
            (Some(q1), Some(q2)) => Some(FluxTargets::new(q1, q2)?),
            (None, None) => None,
            _ => bail!("q1 and q2 must be given together"),
        };
        let init = match f.0.get("init").map(String::as_str) {
            None | Some("tent") => Init::Tent,
            Some("random") => Init::Random,
            Some(other) => bail!("unknown init `{other}`"),
        };

        let mut minimize = MinimizeOptions::default();
        if let Some(v) = f.real("step")? {
            minimize.step = v;
        }
        if let Some(v) = f.parsed("max_iters")? {
            minimize.max_iters = v;
        }
        if let Some(v) = f.real("grad_tol")? {
            minimize.grad_tol = v;
        }
        if let Some(v) = f.parsed("enforce_nonneg")? {
            minimize.enforce_nonneg = v;
        }
        if let Some(v) = f.real("precond_shift")? {
            minimize.precond_shift = v;
        }
        let mut mpass = MpOptions::default();
        if let Some(v) = f.parsed("path_points")? {
            mpass.path_points = v;
        }
        if let Some(v) = f.parsed("deform_iters")? {
            mpass.deform_iters = v;
        }
        if let Some(v) = f.parsed("max_rounds")? {
            mpass.max_rounds = v;
        }
        if let Some(v) = f.real("descent_step")? {
            mpass.descent_step = v;
        }
        if let Some(v) = f.real("crit_tol")? {
            mpass.crit_tol = v;
        }
        let mut newton = NewtonOptions::default();
        if let Some(v) = f.real("newton_tol")? {
            newton.tol = v;
        }
        if let Some(v) = f.parsed("newton_max_iters")? {
            newton.max_iters = v;
        }
        if let Some(v) = f.real("newton_damping")? {
            newton.damping = v;
        }
        if !(newton.tol > 0.0 && newton.damping > 0.0) {
            bail!("newton_tol and newton_damping must be positive");
        }

        let sweep = if mode == Mode::Sweep {
            Some(parse_sweep(&f)?)
        } else {
            None
        };

        let cfg = RunConfig {
            mode,
            kappa: f.real("kappa")?,
            beta: f.real("beta")?,
            l,
            radius,
            n,
            targets,
            output_dir: f.0.get("output_dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
            seed_file: f.0.get("seed_file").map(PathBuf::from),
            init,
            rng_seed: f.parsed("rng_seed")?.unwrap_or(0),
            minimize,
            mpass,
            newton,
            sweep,
        };
        cfg.check_required()?;
        Ok(cfg)
    }

    fn check_required(&self) -> Result<()> {
        let needs_multipliers = || -> Result<()> {
            if self.kappa.is_none() || self.beta.is_none() {
                bail!("mode {} needs kappa and beta", self.mode);
            }
            Ok(())
        };
        match self.mode {
            Mode::Minimize => {
                if self.targets.is_none() {
                    bail!("mode minimize needs q1 and q2");
                }
            }
            Mode::Mpass => needs_multipliers()?,
            Mode::Refine | Mode::Verify => {
                needs_multipliers()?;
                if self.seed_file.is_none() {
                    bail!("mode {} needs seed_file", self.mode);
                }
            }
            Mode::Sweep => {
                let sweep = self.sweep.as_ref().unwrap();
                for (key, swept, value) in [
                    ("kappa", SweepParam::Kappa, self.kappa),
                    ("beta", SweepParam::Beta, self.beta),
                ] {
                    if sweep.param != swept && value.is_none() {
                        bail!("sweep needs `{key}`");
                    }
                }
            }
            Mode::Quadcheck => {}
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicsParams> {
        Ok(PhysicsParams::new(
            self.kappa.unwrap_or(0.0),
            self.beta.unwrap_or(0.0),
            self.l,
            self.radius,
        )?)
    }
}

fn parse_sweep(f: &Fields) -> Result<Sweep> {
    let param = match f.0.get("sweep_param").map(String::as_str) {
        Some("kappa") => SweepParam::Kappa,
        Some("beta") => SweepParam::Beta,
        Some("l") => SweepParam::L,
        Some(other) => bail!("cannot sweep over `{other}`"),
        None => bail!("sweep needs `sweep_param`"),
    };
    let values = if let Some(list) = f.0.get("sweep_values") {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_real)
            .collect::<Result<Vec<f64>>>()?
    } else {
        let (start, stop, step) = match (f.real("sweep_start")?, f.real("sweep_stop")?, f.real("sweep_step")?) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => bail!("sweep needs sweep_values or sweep_start, sweep_stop and sweep_step"),
        };
        if step == 0.0 || (stop - start) * step < 0.0 {
            bail!("sweep range is empty");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| start + k as f64 * step).collect()
    };
    if values.len() < 2 {
        bail!("sweep range needs at least two steps, got {}", values.len());
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        bail!("sweep values must be monotone");
    }
    if param == SweepParam::L && values.iter().any(|v| v.fract() != 0.0 || *v == 0.0) {
        bail!("sweep over l needs nonzero integers");
    }
    Ok(Sweep { param, values })
}

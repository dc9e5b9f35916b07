//! Flat `key = value` configuration files.
//!
//! Lines starting with `#` are comments. Problem keys:
//!
//! ```text
//! horizon = 1
//! mode = marcus                 # or forward
//! scheme = young                # or flow
//! p = 3
//! q = 1.2
//! xi = brownian-linear:1,0.05   # constant:v | brownian-linear:a,b | brownian-sin:a,amp,freq
//! f = affine:0,-0.5,0.2         # zero | linear:k | affine:a,b,c
//! g = linear:1                  # zero | constant:c | linear:b | smooth:amp,omega,phase
//! g.modulation = 0.1,3          # optional amplitude,frequency
//! driver.file = w.csv           # or an inline driver spec:
//! driver.kind = step            # step | zigzag | fbm | compound-poisson | levy-truncated | sum
//! driver.jumps = 0.5:0.693      # step: time:size pairs, driver.x0
//! steps = 200
//! tol = 1e-8
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::drivers::{generate, DriverKind, DriverSpec};
use crate::error::{Error, Result};
use crate::field::{GeneratorSpec, Modulation, TerminalSpec, VectorFieldSpec};
use crate::pathcore::GridPath;
use crate::rbsde::{ContinuousScheme, JumpMode, Problem, SolverConfig};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
    /// Directory that relative file references resolve against.
    base: Option<std::path::PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config { entries, base: None })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = Self::parse(&std::fs::read_to_string(path)?)?;
        c.base = path.parent().map(|p| p.to_path_buf());
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn resolve(&self, file: &str) -> std::path::PathBuf {
        match &self.base {
            Some(b) if Path::new(file).is_relative() => b.join(file),
            _ => file.into(),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key)
            .map_or(Ok(default), |v| v.parse().map_err(|_| Error::Parse(format!("{key}: expected an integer, got '{v}'"))))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.get(key)
            .map_or(Ok(default), |v| v.parse().map_err(|_| Error::Parse(format!("{key}: expected an integer, got '{v}'"))))
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(key, v),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let v = v.trim();
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => v.parse().map_err(|_| Error::Parse(format!("{key}: expected a number, got '{v}'"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(key, s)).collect()
}

/// Splits `family:args` into the family name and its numeric arguments.
fn family<'a>(key: &str, v: &'a str) -> Result<(&'a str, Vec<f64>)> {
    match v.split_once(':') {
        None => Ok((v.trim(), Vec::new())),
        Some((name, args)) => Ok((name.trim(), parse_list(key, args)?)),
    }
}

fn arity(key: &str, name: &str, args: &[f64], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::Parse(format!("{key} = {name} takes {n} arguments, got {}", args.len())));
    }
    Ok(())
}

pub fn terminal_from(cfg: &Config) -> Result<TerminalSpec> {
    let (name, a) = family("xi", cfg.str_or("xi", "constant:1"))?;
    match name {
        "constant" => {
            if a.is_empty() {
                return Err(Error::Parse("xi = constant needs a value".into()));
            }
            Ok(TerminalSpec::Constant(a))
        }
        "brownian-linear" => {
            arity("xi", name, &a, 2)?;
            Ok(TerminalSpec::BrownianLinear { h: 1, a: a[0], b: a[1] })
        }
        "brownian-sin" => {
            arity("xi", name, &a, 3)?;
            Ok(TerminalSpec::BrownianSin { h: 1, a: a[0], amplitude: a[1], frequency: a[2] })
        }
        other => Err(Error::Parse(format!("unknown terminal family '{other}'"))),
    }
}

pub fn generator_from(cfg: &Config) -> Result<GeneratorSpec> {
    let (name, a) = family("f", cfg.str_or("f", "zero"))?;
    match name {
        "zero" => Ok(GeneratorSpec::Zero),
        "linear" => {
            arity("f", name, &a, 1)?;
            Ok(GeneratorSpec::LinearInY(a[0]))
        }
        "affine" => {
            arity("f", name, &a, 3)?;
            Ok(GeneratorSpec::Affine { a: a[0], b: a[1], c: a[2] })
        }
        other => Err(Error::Parse(format!("unknown generator family '{other}'"))),
    }
}

pub fn field_from(cfg: &Config) -> Result<VectorFieldSpec> {
    let (name, a) = family("g", cfg.str_or("g", "zero"))?;
    let g = match name {
        "zero" => VectorFieldSpec::zero(1, 1),
        "constant" => {
            arity("g", name, &a, 1)?;
            VectorFieldSpec::scalar_constant(a[0])
        }
        "linear" => {
            arity("g", name, &a, 1)?;
            VectorFieldSpec::scalar_linear(a[0])
        }
        "smooth" => {
            arity("g", name, &a, 3)?;
            VectorFieldSpec::smooth_bounded(1, 1, a[0], a[1], a[2])
        }
        other => return Err(Error::Parse(format!("unknown field family '{other}'"))),
    };
    match cfg.get("g.modulation") {
        None => Ok(g),
        Some(v) => {
            let m = parse_list("g.modulation", v)?;
            arity("g.modulation", "modulation", &m, 2)?;
            Ok(g.with_modulation(Modulation { amplitude: m[0], frequency: m[1] }))
        }
    }
}

fn driver_kind(cfg: &Config, kind: &str) -> Result<DriverKind> {
    let k = |key: &str, d: f64| cfg.f64_or(&format!("driver.{key}"), d);
    Ok(match kind {
        "step" => {
            let mut jumps = Vec::new();
            if let Some(v) = cfg.get("driver.jumps") {
                for pair in v.split(',').filter(|s| !s.trim().is_empty()) {
                    let (t, a) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("driver.jumps: expected time:size, got '{pair}'")))?;
                    jumps.push((parse_f64("driver.jumps", t)?, parse_f64("driver.jumps", a)?));
                }
            }
            DriverKind::Step { x0: k("x0", 0.0)?, jumps }
        }
        "zigzag" => DriverKind::Zigzag { amplitude: k("amplitude", 1.0)?, teeth: cfg.usize_or("driver.teeth", 2)? },
        "fbm" => DriverKind::Fbm { hurst: k("hurst", 0.75)? },
        "compound-poisson" => DriverKind::CompoundPoisson {
            rate: k("rate", 2.0)?,
            jump_mean: k("jump_mean", 0.0)?,
            jump_std: k("jump_std", 0.3)?,
        },
        "levy-truncated" => DriverKind::LevyTruncated {
            beta: k("beta", 1.0)?,
            truncation: k("truncation", 0.1)?,
            scale: k("scale", 0.1)?,
        },
        "sum" => {
            let parts = cfg.str_or("driver.parts", "");
            let kinds = parts
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|p| {
                    if p.trim() == "sum" {
                        Err(Error::Parse("nested sum drivers are not supported".into()))
                    } else {
                        driver_kind(cfg, p.trim())
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            DriverKind::Sum(kinds)
        }
        other => return Err(Error::Parse(format!("unknown driver kind '{other}'"))),
    })
}

/// Inline driver spec from the `driver.*` keys.
pub fn driver_spec_from(cfg: &Config) -> Result<DriverSpec> {
    let kind = driver_kind(cfg, cfg.str_or("driver.kind", "step"))?;
    let horizon = cfg.f64_or("horizon", 1.0)?;
    let spec = DriverSpec::new(
        kind,
        horizon,
        cfg.usize_or("driver.n", 64)?,
        cfg.u64_or("driver.seed", cfg.u64_or("seed", 0)?)?,
        cfg.f64_or("driver.q", cfg.f64_or("q", 1.2)?)?,
    );
    spec.validate()?;
    Ok(spec)
}

/// The driver path: `driver.file` if present, otherwise the inline spec.
pub fn driver_from(cfg: &Config) -> Result<GridPath> {
    match cfg.get("driver.file") {
        Some(f) => GridPath::read_csv(std::io::BufReader::new(std::fs::File::open(cfg.resolve(f))?)),
        None => generate(&driver_spec_from(cfg)?),
    }
}

pub fn problem_from(cfg: &Config) -> Result<Problem> {
    let horizon = cfg.f64_or("horizon", 1.0)?;
    let mode = JumpMode::parse(cfg.str_or("mode", "marcus"))?;
    let mut p = Problem::new(horizon, terminal_from(cfg)?, generator_from(cfg)?, field_from(cfg)?, driver_from(cfg)?, mode)?;
    p.p = cfg.f64_or("p", p.p)?;
    p.q = cfg.f64_or("q", p.q)?;
    p.scheme = match cfg.str_or("scheme", "young") {
        "young" => ContinuousScheme::Young,
        "flow" => ContinuousScheme::Flow,
        other => return Err(Error::Parse(format!("unknown scheme '{other}'"))),
    };
    p.validate()?;
    Ok(p)
}

pub fn solver_from(cfg: &Config) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    Ok(SolverConfig {
        n_steps: cfg.usize_or("steps", d.n_steps)?,
        tol: cfg.f64_or("tol", d.tol)?,
        max_iter: cfg.usize_or("max_iter", d.max_iter)?,
        eps_bar: match cfg.get("eps_bar") {
            Some(v) => Some(parse_f64("eps_bar", v)?),
            None => None,
        },
        max_shrinks: cfg.usize_or("max_shrinks", d.max_shrinks)?,
        norms: cfg.str_or("norms", "true") == "true",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_problem() {
        let cfg = Config::parse(
            "# demo\nhorizon = 1\nmode = forward\nxi = brownian-linear:1,0.5\nf = affine:0,-0.5,0.2\ng = linear:1\n\
             driver.kind = step\ndriver.jumps = 0.5:0.7\nsteps = 40\n",
        )
        .unwrap();
        let p = problem_from(&cfg).unwrap();
        assert_eq!(p.mode, JumpMode::Forward);
        assert_eq!(p.w.value_at(0.6), vec![0.7]);
        assert_eq!(solver_from(&cfg).unwrap().n_steps, 40);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(Config::parse("novalue\n").is_err());
        let cfg = Config::parse("g = linear:1,2\n").unwrap();
        assert!(field_from(&cfg).is_err());
    }

    #[test]
    fn sum_driver() {
        let cfg = Config::parse("driver.kind = sum\ndriver.parts = fbm,compound-poisson\ndriver.q = 1.5\ndriver.n = 32\n").unwrap();
        let spec = driver_spec_from(&cfg).unwrap();
        assert_eq!(spec.kind.name(), "sum");
    }
}

//! Scan configuration: flat `key = value` files merged under command-line flags.
//!
//! Every setting has one key, used both as the long flag name (`--x-range`)
//! and in config files (`x-range = 0:1.5:301`). Flags override the file,
//! which overrides the built-in defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use happer_core::geometry::{Convention, MeshScheme};
use happer_core::model::{normalize3, FieldDirection};
use happer_core::spin::SpinQuantumNumber;

/// Keys accepted in config files and as flags.
pub const KEYS: &[&str] = &[
    "l",
    "x",
    "x-range",
    "y",
    "axis",
    "axis-sweep",
    "field",
    "theta0",
    "mesh",
    "method",
    "convention",
    "format",
    "out",
    "seed",
    "checks",
    "levels",
    "cluster",
    "omega",
    "omega-factor",
    "periods",
    "k",
    "stride",
];

pub const MIN_RINGS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Chern,
    Phase,
    Dynamics,
    WeylCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Chern => "chern",
            Command::Phase => "phase",
            Command::Dynamics => "dynamics",
            Command::WeylCompare => "weyl-compare",
        }
    }

    fn default_x(self) -> &'static str {
        match self {
            Command::Spectrum => "0:1.5:301",
            _ => "1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Which Chern-number scheme `chern` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Link,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    pub rings: usize,
    pub scheme: MeshScheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub command: Command,
    pub nuclear_spin: SpinQuantumNumber,
    pub y: f64,
    pub axis: [f64; 3],
    /// Polar angles of `â` in the xz-plane for spectrum sweeps.
    pub axis_sweep: Option<Vec<f64>>,
    pub field: FieldDirection,
    pub x_grid: Vec<f64>,
    pub theta0: f64,
    pub mesh: MeshSpec,
    pub method: Method,
    pub convention: Convention,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Randomized invariant checks to run before the command.
    pub checks: usize,
    /// 0-based level indices; `None` means all.
    pub levels: Option<Vec<usize>>,
    pub cluster: bool,
    pub omega: Option<f64>,
    pub omega_factor: f64,
    pub periods: usize,
    pub k_grid: Vec<f64>,
    /// Keep every `stride`-th trajectory sample; `None` picks one.
    pub stride: Option<usize>,
    /// Resolved settings, for echoing into output headers.
    pub settings: BTreeMap<String, String>,
}

/// Parse a config file body.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", n + 1))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", n + 1);
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("in config file {}", path.display()))
}

impl ScanConfig {
    /// Resolve `file` settings overridden by `flags`, on top of the defaults.
    pub fn resolve(command: Command, file: &BTreeMap<String, String>, flags: &BTreeMap<String, String>) -> Result<Self> {
        let mut s: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in [
            ("l", "1"),
            ("y", "0"),
            ("axis", "z"),
            ("field", "0,0"),
            ("theta0", "pi/6"),
            ("mesh", "200"),
            ("method", "link"),
            ("convention", "primary"),
            ("format", "csv"),
            ("seed", "0"),
            ("checks", "0"),
            ("cluster", "false"),
            ("omega-factor", "1e-3"),
            ("periods", "1"),
            ("k", "0.5,1,1.4,1.6,2,3"),
        ] {
            s.insert(k.into(), v.into());
        }
        for layer in [file, flags] {
            for (k, v) in layer {
                if !KEYS.contains(&k.as_str()) {
                    bail!("unknown setting {k:?}");
                }
                // x and x-range are alternatives; the later layer wins
                if k == "x" {
                    s.remove("x-range");
                }
                if k == "x-range" {
                    s.remove("x");
                }
                s.insert(k.clone(), v.clone());
            }
        }
        if !s.contains_key("x") && !s.contains_key("x-range") {
            let d = command.default_x();
            s.insert(if d.contains(':') { "x-range" } else { "x" }.into(), d.into());
        }
        let get = |k: &str| s.get(k).map(String::as_str);
        let nuclear_spin: SpinQuantumNumber = get("l").unwrap().parse().with_context(|| format!("invalid l = {:?}", get("l").unwrap()))?;
        let num = |k: &str| -> Result<f64> {
            let v = get(k).unwrap();
            v.parse::<f64>().with_context(|| format!("invalid {k} = {v:?}"))
        };
        let y = num("y")?;
        let axis = parse_axis(get("axis").unwrap()).with_context(|| format!("invalid axis = {:?}", get("axis").unwrap()))?;
        let axis_sweep = get("axis-sweep").map(|v| parse_grid(v).with_context(|| format!("invalid axis-sweep = {v:?}"))).transpose()?;
        let field = {
            let v = get("field").unwrap();
            let parts: Vec<&str> = v.split(',').collect();
            if parts.len() != 2 {
                bail!("invalid field = {v:?}: expected theta,phi");
            }
            FieldDirection::new(parse_angle(parts[0])?, parse_angle(parts[1])?)
        };
        let x_grid = match (get("x"), get("x-range")) {
            (Some(v), _) => parse_list(v).with_context(|| format!("invalid x = {v:?}"))?,
            (None, Some(v)) => parse_grid(v).with_context(|| format!("invalid x-range = {v:?}"))?,
            (None, None) => unreachable!("a default grid is always present"),
        };
        check_monotone(&x_grid).context("x grid")?;
        let theta0 = parse_angle(get("theta0").unwrap()).context("invalid theta0")?;
        let mesh = parse_mesh(get("mesh").unwrap()).with_context(|| format!("invalid mesh = {:?}", get("mesh").unwrap()))?;
        let method = match get("method").unwrap() {
            "link" => Method::Link,
            "finite-difference" | "fd" => Method::FiniteDifference,
            other => bail!("invalid method = {other:?}: expected link or finite-difference"),
        };
        let convention: Convention = get("convention").unwrap().parse().with_context(|| "invalid convention")?;
        let format = match get("format").unwrap() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => bail!("invalid format = {other:?}: expected csv or json"),
        };
        let int = |k: &str| -> Result<u64> {
            let v = get(k).unwrap();
            v.parse::<u64>().with_context(|| format!("invalid {k} = {v:?}"))
        };
        let levels = get("levels")
            .map(|v| -> Result<Vec<usize>> {
                v.split(',')
                    .map(|t| match t.trim().parse::<usize>() {
                        Ok(n) if n >= 1 => Ok(n - 1),
                        _ => Err(anyhow!("invalid levels = {v:?}: expected 1-based level numbers")),
                    })
                    .collect()
            })
            .transpose()?;
        let cluster = match get("cluster").unwrap() {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => bail!("invalid cluster = {other:?}"),
        };
        let omega = get("omega").map(|_| num("omega")).transpose()?;
        if omega.is_some_and(|w| !(w > 0.0)) {
            bail!("omega must be positive");
        }
        let omega_factor = num("omega-factor")?;
        if !(omega_factor > 0.0) {
            bail!("omega-factor must be positive");
        }
        let periods = int("periods")? as usize;
        if periods == 0 {
            bail!("periods must be at least 1");
        }
        let k_grid = parse_list(get("k").unwrap()).with_context(|| format!("invalid k = {:?}", get("k").unwrap()))?;
        if k_grid.iter().any(|&k| !(k > 0.0)) {
            bail!("k values must be positive");
        }
        check_monotone(&k_grid).context("k grid")?;
        let stride = get("stride").map(|_| int("stride").map(|n| n.max(1) as usize)).transpose()?;

        let mut settings = s.clone();
        settings.remove("out");
        Ok(Self {
            command,
            nuclear_spin,
            y,
            axis,
            axis_sweep,
            field,
            x_grid,
            theta0,
            mesh,
            method,
            convention,
            format,
            out: get("out").map(PathBuf::from),
            seed: int("seed")?,
            checks: int("checks")? as usize,
            levels,
            cluster,
            omega,
            omega_factor,
            periods,
            k_grid,
            stride,
            settings,
        })
    }
}

/// `lo:hi:n` with `n ≥ 1` points, endpoints included.
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        bail!("expected lo:hi:n");
    }
    let lo: f64 = parts[0].trim().parse()?;
    let hi: f64 = parts[1].trim().parse()?;
    let n: usize = parts[2].trim().parse()?;
    match n {
        0 => bail!("grid needs at least one point"),
        1 => Ok(vec![lo]),
        _ => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
    }
}

pub fn parse_list(v: &str) -> Result<Vec<f64>> {
    let out = v.split(',').map(|t| t.trim().parse::<f64>().map_err(Into::into)).collect::<Result<Vec<f64>>>()?;
    if out.is_empty() || out.iter().any(|x| !x.is_finite()) {
        bail!("expected a comma-separated list of finite numbers");
    }
    Ok(out)
}

pub fn check_monotone(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        bail!("grid is empty");
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        bail!("grid must be strictly monotone");
    }
    Ok(())
}

/// Radians, also accepting `pi`, `pi/6`, `2pi/3` and `2*pi/3`.
pub fn parse_angle(v: &str) -> Result<f64> {
    let t = v.trim().replace(' ', "");
    if let Some(i) = t.find("pi") {
        let coef = t[..i].trim_end_matches('*');
        let c = if coef.is_empty() {
            1.0
        } else if coef == "-" {
            -1.0
        } else {
            coef.parse::<f64>().with_context(|| format!("invalid angle {v:?}"))?
        };
        let rest = &t[i + 2..];
        let d = match rest.strip_prefix('/') {
            Some(d) => d.parse::<f64>().with_context(|| format!("invalid angle {v:?}"))?,
            None if rest.is_empty() => 1.0,
            None => bail!("invalid angle {v:?}"),
        };
        return Ok(c * PI / d);
    }
    t.parse::<f64>().with_context(|| format!("invalid angle {v:?}"))
}

/// `x`, `y`, `z` or three comma-separated components (normalized).
pub fn parse_axis(v: &str) -> Result<[f64; 3]> {
    let a = match v.trim() {
        "x" => [1.0, 0.0, 0.0],
        "y" => [0.0, 1.0, 0.0],
        "z" => [0.0, 0.0, 1.0],
        other => {
            let c = parse_list(other)?;
            if c.len() != 3 {
                bail!("expected x, y, z or three components");
            }
            [c[0], c[1], c[2]]
        }
    };
    if a.iter().all(|&c| c == 0.0) {
        bail!("axis must be nonzero");
    }
    Ok(normalize3(a))
}

/// `N` or `N:scheme`.
pub fn parse_mesh(v: &str) -> Result<MeshSpec> {
    let (n, scheme) = match v.split_once(':') {
        Some((n, s)) => (n, s.parse::<MeshScheme>()?),
        None => (v, MeshScheme::EqualArea),
    };
    let rings: usize = n.trim().parse()?;
    if rings < MIN_RINGS {
        bail!("mesh needs at least {MIN_RINGS} rings, got {rings}");
    }
    Ok(MeshSpec { rings, scheme })
}

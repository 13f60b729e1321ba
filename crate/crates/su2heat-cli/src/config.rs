//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};
use su2heat::{KernelConfig, QuadratureSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kernel: KernelConfig,
    pub seed: u64,
    /// Side of the interior verification grids.
    pub grid: usize,
    /// Side of the reverse Poincare grid; each point costs a full heat-rule pass.
    pub rp_grid: usize,
    /// Side of the grid used for the `Phi` supremum.
    pub phi_grid: usize,
    /// Histogram cells per axis for the sampler.
    pub hist_bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { kernel: KernelConfig::default(), seed: 20240601, grid: 20, rp_grid: 4, phi_grid: 30, hist_bins: 12 }
    }
}

struct Key {
    name: &'static str,
    help: &'static str,
    get: fn(&RunConfig) -> Value,
    set: fn(&mut RunConfig, &str) -> Result<(), String>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid value for {key}: {v:?}"))
}

fn positive(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = parse(key, v)?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{key} must be positive, got {v}"))
    }
}

fn count(key: &str, v: &str) -> Result<usize, String> {
    let n: usize = parse(key, v)?;
    if n >= 2 {
        Ok(n)
    } else {
        Err(format!("{key} must be at least 2, got {v}"))
    }
}

const KEYS: &[Key] = &[
    Key {
        name: "eps",
        help: "absolute truncation target of the spectral series",
        get: |c| c.kernel.eps.into(),
        set: |c, v| Ok(c.kernel.eps = positive("eps", v)?),
    },
    Key {
        name: "t_cross",
        help: "time above which the spectral series is used off the cut locus",
        get: |c| c.kernel.t_cross.into(),
        set: |c, v| Ok(c.kernel.t_cross = positive("t_cross", v)?),
    },
    Key {
        name: "r_min",
        help: "radius below which a point is treated as lying on the cut locus",
        get: |c| c.kernel.r_min.into(),
        set: |c, v| Ok(c.kernel.r_min = positive("r_min", v)?),
    },
    Key {
        name: "t_min_spectral",
        help: "smallest time accepted by the spectral series",
        get: |c| c.kernel.t_min_spectral.into(),
        set: |c, v| Ok(c.kernel.t_min_spectral = positive("t_min_spectral", v)?),
    },
    Key {
        name: "quad_abs_tol",
        help: "absolute tolerance of the adaptive quadrature",
        get: |c| c.kernel.quad.abs_tol.into(),
        set: |c, v| Ok(c.kernel.quad.abs_tol = positive("quad_abs_tol", v)?),
    },
    Key {
        name: "quad_rel_tol",
        help: "relative tolerance of the adaptive quadrature",
        get: |c| c.kernel.quad.rel_tol.into(),
        set: |c, v| Ok(c.kernel.quad.rel_tol = positive("quad_rel_tol", v)?),
    },
    Key {
        name: "quad_max_refinements",
        help: "maximum number of interval bisections",
        get: |c| c.kernel.quad.max_refinements.into(),
        set: |c, v| Ok(c.kernel.quad.max_refinements = parse("quad_max_refinements", v)?),
    },
    Key {
        name: "seed",
        help: "random seed of the sampler",
        get: |c| c.seed.into(),
        set: |c, v| Ok(c.seed = parse("seed", v)?),
    },
    Key {
        name: "grid",
        help: "side of the interior verification grids",
        get: |c| c.grid.into(),
        set: |c, v| Ok(c.grid = count("grid", v)?),
    },
    Key {
        name: "rp_grid",
        help: "side of the reverse Poincare verification grid",
        get: |c| c.rp_grid.into(),
        set: |c, v| Ok(c.rp_grid = count("rp_grid", v)?),
    },
    Key {
        name: "phi_grid",
        help: "side of the grid used for the Phi supremum",
        get: |c| c.phi_grid.into(),
        set: |c, v| Ok(c.phi_grid = count("phi_grid", v)?),
    },
    Key {
        name: "hist_bins",
        help: "histogram cells per axis for the sampler",
        get: |c| c.hist_bins.into(),
        set: |c, v| Ok(c.hist_bins = count("hist_bins", v)?),
    },
];

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let k = KEYS.iter().find(|k| k.name == key).ok_or_else(|| format!("unknown config key {key:?}"))?;
        (k.set)(self, value.trim())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            self.set(k.trim(), v).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn from_sources(file: Option<&Path>, overrides: &[String]) -> Result<Self, String> {
        let mut c = RunConfig::default();
        if let Some(p) = file {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            c.apply_text(&text)?;
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| format!("--set expects key=value, got {o:?}"))?;
            c.set(k.trim(), v)?;
        }
        Ok(c)
    }

    pub fn quad(&self) -> QuadratureSpec {
        self.kernel.quad
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for k in KEYS {
            m.insert(k.name.to_string(), (k.get)(self));
        }
        Value::Object(m)
    }
}

/// Reference of every key with its default, in config-file syntax.
pub fn reference() -> String {
    let d = RunConfig::default();
    let mut s = String::from("# su2heat configuration keys and defaults\n");
    for k in KEYS {
        let _ = writeln!(s, "# {}\n{} = {}", k.help, k.name, (k.get)(&d));
    }
    s
}

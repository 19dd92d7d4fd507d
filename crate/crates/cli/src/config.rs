//! Per-command configurations: a JSON object from `--config`, with flag
//! values written over it, deserialized into the command's schema.

use std::fs;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use flightlab_core::{Family, FlightSpec, GridLaw, IsotropicDensity, StandardLaw};

use crate::Opts;

/// Loads the manifest, applies overrides and deserializes. `samples_key`
/// names the field `--samples` maps to, if the command has one.
pub fn load<T: DeserializeOwned>(opts: &Opts, samples_key: Option<&str>) -> Result<T> {
    let mut map = match &opts.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            match serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?
            {
                Value::Object(m) => m,
                _ => bail!("{}: expected a JSON object", path.display()),
            }
        }
        None => Map::new(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            map.insert(key.to_string(), v);
        }
    };
    set("seed", opts.seed.map(Value::from));
    set("model", opts.model.clone().map(Value::from));
    set("d", opts.d.map(Value::from));
    set("c", opts.c.map(Value::from));
    set("t", opts.t.map(Value::from));
    set("n", opts.n.map(Value::from));
    set("lambda", opts.lambda.map(Value::from));
    set("w", opts.w.map(Value::from));
    set("r", opts.r.map(Value::from));
    set("points", opts.points.map(Value::from));
    if let Some(samples) = opts.samples {
        match samples_key {
            Some(key) => set(key, Some(Value::from(samples))),
            None => bail!("samples: this command takes no sample count"),
        }
    }
    Ok(serde_json::from_value(Value::Object(map))?)
}

/// A single flight law `{model, d, c, t, n?, lambda?}` plus the fields the
/// `simulate` (`samples`, `seed`) and `density` (`points`) commands use.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub model: String,
    pub d: usize,
    pub c: f64,
    pub t: f64,
    pub n: Option<u64>,
    pub lambda: Option<f64>,
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    pub points: Option<usize>,
}

enum Law {
    Conditional(Family, u64),
    Standard(f64),
}

impl LawConfig {
    fn law(&self) -> Result<Law> {
        match self.model.as_str() {
            "Z" | "z" => {
                if self.n.is_some() {
                    bail!("n: standard (Z) flights take lambda, not n");
                }
                let Some(lambda) = self.lambda else {
                    bail!("lambda: required for model Z")
                };
                Ok(Law::Standard(lambda))
            }
            other => {
                let Ok(family) = other.parse::<Family>() else {
                    bail!("model: expected X, Y or Z, got `{other}`");
                };
                if self.lambda.is_some() {
                    bail!("lambda: conditional flights take n, not lambda");
                }
                let Some(n) = self.n else {
                    bail!("n: required for models X and Y")
                };
                Ok(Law::Conditional(family, n))
            }
        }
    }

    pub fn spec(&self) -> Result<FlightSpec> {
        Ok(match self.law()? {
            Law::Conditional(family, n) => {
                FlightSpec::conditional(family, self.d, self.c, n, self.t)?
            }
            Law::Standard(lambda) => FlightSpec::standard(self.d, self.c, lambda, self.t)?,
        })
    }

    pub fn grid_law(&self) -> Result<GridLaw> {
        Ok(match self.law()? {
            Law::Conditional(family, n) => {
                GridLaw::Conditional(IsotropicDensity::new(family, self.d, n, self.c, self.t)?)
            }
            Law::Standard(lambda) => {
                GridLaw::Standard(StandardLaw::new(self.d, lambda, self.c, self.t)?)
            }
        })
    }
}

/// Rate grids on `r = 0, step, ..., c`: the standard `I_2`, `J_4`, and the
/// conditional `I_2(.; w)`, `J_4(.; w)` for every `w`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "default_ws")]
    pub w: OneOrMany,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Adds the Brownian-limit rate with this variance.
    pub sigma2: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(w) => vec![*w],
            Self::Many(ws) => ws.clone(),
        }
    }
}

fn default_ws() -> OneOrMany {
    OneOrMany::Many(vec![1.5, 0.6])
}

fn default_step() -> f64 {
    0.01
}

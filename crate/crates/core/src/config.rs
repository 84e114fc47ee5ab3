//! Run configuration: one JSON object holding every knob of a run, with
//! per-environment presets and `key=value` overrides.
//!
//! Files may use nested sections (`{"lsdr": {"epochs": 300}}`) or flat
//! dotted keys (`{"lsdr.epochs": 300}`); both resolve to the same config.
//! Unknown keys are rejected with their full path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::distributions::{Family, DEFAULT_BINS};
use crate::envs::{
    Environment, LinearReacher, LinearReacherParams, Pendulum, PendulumParams, LINEAR_REACHER_ID,
    PENDULUM_ID,
};
use crate::error::{Error, Result};
use crate::eval::{FinetuneConfig, SweepConfig};
use crate::policy::{EpoptConfig, NetworkConfig, OptimizerKind, PpoConfig};
use crate::train::{LsdrConfig, TrainConfig};

/// Test-time evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub test_set_size: usize,
    /// Seed of the test set and fine-tuning streams; unset uses `lsdr.seed`.
    pub seed: Option<u64>,
    /// Probability mass kept when fitting a uniform range to a distribution.
    pub range_mass: f64,
    pub finetune: FinetuneConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            test_set_size: 50,
            seed: None,
            range_mass: 0.95,
            finetune: FinetuneConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: String,
    /// Context coordinates that are randomized; the rest stay nominal.
    pub context_dims: Vec<usize>,
    pub family: Family,
    /// Bins per dimension for the discrete family.
    pub bins: usize,
    /// Keep the Gaussian covariance diagonal.
    pub diagonal_only: bool,
    /// Rollout threads. Results do not depend on the count.
    pub workers: usize,
    /// Root for run directories; unset falls back to `LSDR_OUTPUT_ROOT`,
    /// then `runs`.
    pub output_dir: Option<PathBuf>,
    pub lsdr: LsdrConfig,
    pub ppo: PpoConfig,
    pub epopt: EpoptConfig,
    pub network: NetworkConfig,
    pub reacher: LinearReacherParams,
    pub pendulum: PendulumParams,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset(LINEAR_REACHER_ID).expect("built-in preset")
    }
}

impl RunConfig {
    /// Defaults for a built-in environment.
    pub fn preset(env: &str) -> Result<Self> {
        let generic = |train: TrainConfig| Self {
            env: env.to_string(),
            context_dims: vec![0],
            family: Family::Discrete,
            bins: DEFAULT_BINS,
            diagonal_only: false,
            workers: 1,
            output_dir: None,
            lsdr: train.lsdr,
            ppo: train.ppo.clone(),
            epopt: train.epopt,
            network: train.network.clone(),
            reacher: LinearReacherParams::default(),
            pendulum: PendulumParams::default(),
            eval: EvalConfig {
                finetune: FinetuneConfig {
                    ppo: train.ppo.clone(),
                    ..FinetuneConfig::default()
                },
                ..EvalConfig::default()
            },
            sweep: SweepConfig {
                ppo: train.ppo,
                network: train.network,
                ..SweepConfig::default()
            },
        };
        match env {
            LINEAR_REACHER_ID => Ok(generic(TrainConfig::linear_reacher())),
            PENDULUM_ID => {
                let mut train = TrainConfig::default();
                train.lsdr.epochs = 500;
                train.ppo.optimizer = OptimizerKind::Adam;
                let mut config = generic(train);
                config.context_dims = vec![0, 1, 2];
                config.family = Family::Gaussian;
                config.eval.test_set_size = 100;
                Ok(config)
            }
            other => Err(Error::Config(format!("unknown environment `{other}`"))),
        }
    }

    /// Resolves a config: preset of the selected environment, then the
    /// file, then `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut user = Value::Object(Map::new());
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{} is not valid JSON: {e}", path.display())))?;
            if !file.is_object() {
                return Err(Error::Config(format!("{} must hold a JSON object", path.display())));
            }
            merge(&mut user, expand_dotted(file)?);
        }
        for (key, raw) in overrides {
            // Values that are not valid JSON are taken as strings, so
            // `env=pendulum-swingup` needs no quoting.
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            merge(&mut user, expand_dotted(single(key, value))?);
        }
        let env = match user.get("env") {
            None => LINEAR_REACHER_ID.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(other) => return Err(Error::Config(format!("env: expected a string, got {other}"))),
        };
        let mut resolved = serde_json::to_value(Self::preset(&env)?)?;
        check_known(&resolved, &user, "")?;
        merge(&mut resolved, user);
        let config: Self = serde_path_to_error::deserialize(resolved)
            .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("bins must be positive".into()));
        }
        if self.eval.test_set_size == 0 {
            return Err(Error::Config("eval.test_set_size must be positive".into()));
        }
        if !(self.eval.range_mass > 0.0 && self.eval.range_mass <= 1.0) {
            return Err(Error::Config(format!(
                "eval.range_mass must be in (0, 1], got {}",
                self.eval.range_mass
            )));
        }
        self.build_env().map(|_| ())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lsdr: self.lsdr.clone(),
            ppo: self.ppo.clone(),
            epopt: self.epopt.clone(),
            network: self.network.clone(),
        }
    }

    pub fn build_env(&self) -> Result<Box<dyn Environment>> {
        match self.env.as_str() {
            LINEAR_REACHER_ID => Ok(Box::new(LinearReacher::new(self.reacher.clone(), &self.context_dims)?)),
            PENDULUM_ID => Ok(Box::new(Pendulum::new(self.pendulum.clone(), &self.context_dims)?)),
            other => Err(Error::Config(format!("unknown environment `{other}`"))),
        }
    }

    pub fn eval_seed(&self) -> u64 {
        self.eval.seed.unwrap_or(self.lsdr.seed)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn single(key: &str, value: Value) -> Value {
    let mut map = Map::new();
    map.insert(key.to_string(), value);
    Value::Object(map)
}

/// Turns `{"a.b": 1}` into `{"a": {"b": 1}}`, recursively.
fn expand_dotted(value: Value) -> Result<Value> {
    let Value::Object(map) = value else {
        return Ok(value);
    };
    let mut out = Value::Object(Map::new());
    for (key, inner) in map {
        let inner = expand_dotted(inner)?;
        let mut parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("malformed key `{key}`")));
        }
        let mut nested = inner;
        while parts.len() > 1 {
            nested = single(parts.pop().expect("non-empty"), nested);
        }
        merge(&mut out, single(parts[0], nested));
    }
    Ok(out)
}

/// Objects merge key by key; anything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, patch) => *slot = patch,
    }
}

/// Every key the user set must exist in the resolved defaults.
fn check_known(defaults: &Value, user: &Value, prefix: &str) -> Result<()> {
    let (Value::Object(d), Value::Object(u)) = (defaults, user) else {
        return Ok(());
    };
    for (key, value) in u {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match d.get(key) {
            None => return Err(Error::Config(format!("unknown key `{path}`"))),
            Some(inner) => check_known(inner, value, &path)?,
        }
    }
    Ok(())
}

//! Experiment description read from JSON and overridden by flags.

use renewal_cache::{ModelFamily, PolicySpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A single value, an explicit list, or an inclusive `start:step:stop` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Grid::One(x) => Ok(vec![*x]),
            Grid::List(v) => Ok(v.clone()),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(format!("range needs step > 0 and stop >= start, got {start}:{step}:{stop}"));
                }
                let k = ((stop - start) / step + 1e-9).floor() as usize;
                // snap to 12 decimals so 0:0.1:1 yields 0.3 rather than 0.30000000000000004
                Ok((0..=k)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect())
            }
        }
    }
}

/// Catalog sizes: one value or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeGrid {
    One(usize),
    List(Vec<usize>),
}

impl SizeGrid {
    pub fn values(&self) -> Vec<usize> {
        match self {
            SizeGrid::One(n) => vec![*n],
            SizeGrid::List(v) => v.clone(),
        }
    }
}

/// A policy given by name or as a full object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyEntry {
    Name(String),
    Spec(PolicySpec),
}

impl PolicyEntry {
    pub fn resolve(&self) -> Result<PolicySpec, String> {
        match self {
            PolicyEntry::Name(s) => s.parse().map_err(|e: renewal_cache::Error| e.to_string()),
            PolicyEntry::Spec(p) => Ok(*p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_id")]
    pub experiment_id: String,
    #[serde(default = "default_model")]
    pub model: ModelFamily,
    #[serde(default = "default_beta")]
    pub beta: Grid,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(rename = "N", alias = "n", default = "default_n")]
    pub n: SizeGrid,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyEntry>,
    #[serde(default = "default_horizon")]
    pub horizon_events: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_events: Option<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub occupancy_samples: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_id() -> String {
    "exp".into()
}
fn default_model() -> ModelFamily {
    ModelFamily::Pareto { alpha: 2.0 }
}
fn default_beta() -> Grid {
    Grid::One(0.5)
}
fn default_c() -> f64 {
    0.1
}
fn default_n() -> SizeGrid {
    SizeGrid::One(1000)
}
fn default_policies() -> Vec<PolicyEntry> {
    vec![PolicyEntry::Name("optimal".into())]
}
fn default_horizon() -> u64 {
    200_000
}
fn default_replications() -> usize {
    1
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// Flag values that replace fields of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub experiment_id: Option<String>,
    pub model: Option<String>,
    pub beta: Option<String>,
    pub c: Option<f64>,
    pub n: Option<String>,
    pub policies: Option<String>,
    pub horizon_events: Option<u64>,
    pub warmup_events: Option<u64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub occupancy_samples: Option<usize>,
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

/// `pareto:2`, `erlang:4` or `exponential`.
pub fn parse_model(s: &str) -> Result<ModelFamily, CliError> {
    let (name, param) = match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    match (name.to_ascii_lowercase().as_str(), param) {
        ("pareto", Some(p)) => Ok(ModelFamily::Pareto {
            alpha: p.parse().map_err(|e| cfg_err("model", e))?,
        }),
        ("erlang", Some(p)) => Ok(ModelFamily::Erlang {
            k: p.parse().map_err(|e| cfg_err("model", e))?,
        }),
        ("exponential", None) => Ok(ModelFamily::Exponential),
        _ => Err(cfg_err("model", format!("expected pareto:<alpha>, erlang:<k> or exponential, got `{s}`"))),
    }
}

/// `0.5`, `0.1,0.5,0.9` or `0:0.1:1` (start:step:stop).
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [start, step, stop] => Ok(Grid::Range {
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        }),
        [one] => {
            let v = one.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(if v.len() == 1 { Grid::One(v[0]) } else { Grid::List(v) })
        }
        _ => Err(format!("cannot parse grid `{s}`")),
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(id) = &o.experiment_id {
            self.experiment_id = id.clone();
        }
        if let Some(m) = &o.model {
            self.model = parse_model(m)?;
        }
        if let Some(b) = &o.beta {
            self.beta = parse_grid(b).map_err(|e| cfg_err("beta", e))?;
        }
        if let Some(c) = o.c {
            self.c = c;
        }
        if let Some(n) = &o.n {
            let v = n
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| cfg_err("N", e))?;
            self.n = SizeGrid::List(v);
        }
        if let Some(p) = &o.policies {
            self.policies = p.split(',').map(|s| PolicyEntry::Name(s.trim().into())).collect();
        }
        if let Some(h) = o.horizon_events {
            self.horizon_events = h;
        }
        if o.warmup_events.is_some() {
            self.warmup_events = o.warmup_events;
        }
        if let Some(r) = o.replications {
            self.replications = r;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.occupancy_samples {
            self.occupancy_samples = k;
        }
        Ok(())
    }

    pub fn betas(&self) -> Result<Vec<f64>, CliError> {
        let v = self.beta.values().map_err(|e| cfg_err("beta", e))?;
        if v.is_empty() {
            return Err(cfg_err("beta", "grid is empty"));
        }
        if let Some(b) = v.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(cfg_err("beta", format!("must be finite and >= 0, got {b}")));
        }
        Ok(v)
    }

    pub fn sizes(&self) -> Result<Vec<usize>, CliError> {
        let v = self.n.values();
        if v.is_empty() {
            return Err(cfg_err("N", "grid is empty"));
        }
        if v.contains(&0) {
            return Err(cfg_err("N", "must be >= 1"));
        }
        Ok(v)
    }

    pub fn policy_specs(&self) -> Result<Vec<PolicySpec>, CliError> {
        if self.policies.is_empty() {
            return Err(cfg_err("policies", "list is empty"));
        }
        self.policies
            .iter()
            .map(|p| p.resolve().map_err(|e| cfg_err("policies", e)))
            .collect()
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        self.betas()?;
        self.sizes()?;
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(cfg_err("c", format!("must lie in (0, 1], got {}", self.c)));
        }
        renewal_cache::Model::from_family(self.model).map_err(|e| cfg_err("model", e))?;
        Ok(())
    }

    /// Additional checks for commands that simulate.
    pub fn validate_sim(&self) -> Result<(), CliError> {
        self.validate()?;
        self.policy_specs()?;
        if self.replications == 0 {
            return Err(cfg_err("replications", "must be >= 1"));
        }
        let warm = self.warmup_events.unwrap_or(self.horizon_events / 10);
        if self.horizon_events <= warm {
            return Err(cfg_err(
                "horizon_events",
                format!("must exceed warmup_events = {warm}"),
            ));
        }
        for n in self.sizes()? {
            let cap = (self.c * n as f64).round() as usize;
            if cap == 0 {
                return Err(cfg_err("c", format!("capacity round(c·N) is 0 for N = {n}")));
            }
        }
        Ok(())
    }

    /// The spec with grids expanded and policies spelled out.
    pub fn resolved(&self) -> Result<Self, CliError> {
        Ok(Self {
            beta: Grid::List(self.betas()?),
            n: SizeGrid::List(self.sizes()?),
            policies: self
                .policy_specs()?
                .into_iter()
                .map(PolicyEntry::Spec)
                .collect(),
            warmup_events: Some(self.warmup_events.unwrap_or(self.horizon_events / 10)),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0.5").unwrap().values().unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0.1, 0.9").unwrap().values().unwrap(), vec![0.1, 0.9]);
        let r = parse_grid("0:0.1:1").unwrap().values().unwrap();
        assert_eq!(r.len(), 11);
        assert_eq!(r[3], 0.3);
        assert_eq!(r[10], 1.0);
        let fine = parse_grid("0:0.01:1").unwrap().values().unwrap();
        assert_eq!(fine.len(), 101);
    }

    #[test]
    fn json_forms() {
        let s = ExperimentSpec::from_json(
            r#"{"model":{"family":"erlang","k":4},"beta":{"start":0,"stop":2,"step":0.1},
                "N":[100,1000],"policies":["optimal",{"kind":"ttl","theta":2.0}]}"#,
        )
        .unwrap();
        assert_eq!(s.betas().unwrap().len(), 21);
        assert_eq!(s.sizes().unwrap(), vec![100, 1000]);
        assert_eq!(
            s.policy_specs().unwrap(),
            vec![PolicySpec::Optimal, PolicySpec::Ttl { theta: Some(2.0) }]
        );
    }

    #[test]
    fn errors_name_fields() {
        let e = ExperimentSpec::from_json(r#"{"bogus": 1}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"));
        let mut s = ExperimentSpec::default();
        s.c = 1.5;
        assert!(s.validate().unwrap_err().to_string().starts_with("c:"));
        let mut s = ExperimentSpec::default();
        s.beta = Grid::List(vec![]);
        assert!(s.validate().unwrap_err().to_string().starts_with("beta:"));
        let mut s = ExperimentSpec::default();
        s.policies = vec![PolicyEntry::Name("lfu".into())];
        assert!(s.validate_sim().unwrap_err().to_string().starts_with("policies:"));
        let mut s = ExperimentSpec::default();
        s.model = ModelFamily::Pareto { alpha: 0.5 };
        assert!(s.validate().unwrap_err().to_string().starts_with("model:"));
    }

    #[test]
    fn overrides_replace_fields() {
        let mut s = ExperimentSpec::default();
        s.apply(&Overrides {
            model: Some("erlang:4".into()),
            beta: Some("0.2,0.8".into()),
            n: Some("10,20".into()),
            policies: Some("lru,static".into()),
            seed: Some(9),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(s.model, ModelFamily::Erlang { k: 4 });
        assert_eq!(s.betas().unwrap(), vec![0.2, 0.8]);
        assert_eq!(s.sizes().unwrap(), vec![10, 20]);
        assert_eq!(s.seed, 9);
        assert_eq!(s.policy_specs().unwrap(), vec![PolicySpec::Lru, PolicySpec::Static]);
        assert!(parse_model("weibull:2").is_err());
    }
}

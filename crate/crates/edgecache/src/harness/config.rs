//! JSON configuration schema for the `optimize` and `simulate` commands.
//! Strict parsing: unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::demand::{Catalog, DemandProfile, Population, StartMode};
use crate::error::{Error, Result};
use crate::policy::{CachePolicy, CapacityMode, Ttl};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub population: PopulationSpec,
    /// Average cache budget `b` (items' worth of occupancy per cache).
    pub cache_size: f64,
    pub overhearing: OverhearSpec,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub warmup: Option<f64>,
    #[serde(default)]
    pub start: StartMode,
    #[serde(default)]
    pub capacity: CapacityMode,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Event-driven estimation phase length (default 10000).
    #[serde(default)]
    pub estimation_horizon: Option<f64>,
    #[serde(default)]
    pub baselines_overhear: bool,
    #[serde(default)]
    pub broadcast_delay: f64,
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub users: usize,
    /// Explicit shared item list (all users identical).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<ItemSpec>>,
    /// Synthetic Zipf-like catalog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    /// Heterogeneous profiles, one item list per user (shared item indices).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_user_items: Option<Vec<Vec<ItemSpec>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemSpec {
    /// OFF period; the string "inf" marks a never-repeating item.
    pub s: Ttl,
    pub beta: f64,
}

impl ItemSpec {
    fn profile(&self) -> Result<DemandProfile> {
        DemandProfile::new(self.s.value(), self.beta)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    /// `beta_i = c * i^(-zipf_exponent)`.
    pub zipf_exponent: f64,
    /// Scale `c`; omitted means normalize so the betas sum to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub s_rule: SRule,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SRule {
    /// `s_i = 1 / beta_i`.
    InverseBeta,
    Constant { value: f64 },
}

impl GeneratorSpec {
    pub fn profiles(&self) -> Result<Vec<DemandProfile>> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("generator needs n > 0".into()));
        }
        let raw: Vec<f64> = (1..=self.n).map(|i| (i as f64).powf(-self.zipf_exponent)).collect();
        let c = match self.c {
            Some(c) => c,
            None => 1.0 / raw.iter().sum::<f64>(),
        };
        raw.iter()
            .map(|&w| {
                let beta = c * w;
                let s = match self.s_rule {
                    SRule::InverseBeta => 1.0 / beta,
                    SRule::Constant { value } => value,
                };
                DemandProfile::new(s, beta)
            })
            .collect()
    }

    /// The normalization constant actually used.
    pub fn scale(&self) -> f64 {
        match self.c {
            Some(c) => c,
            None => {
                1.0 / (1..=self.n).map(|i| (i as f64).powf(-self.zipf_exponent)).sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OverhearSpec {
    TimeDriven {
        /// `lambda_i = gamma * beta_i`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        /// Explicit per-item broadcast rates (catalog order, beta-sorted).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambdas: Option<Vec<f64>>,
    },
    EventDriven,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Optimal timer policy under Poisson broadcasts.
    TimeDrivenOptimal,
    /// Near-optimal mixture policy under event-driven broadcasts (runs an
    /// estimation phase first).
    EventDrivenOptimal,
    /// Best policy ignoring broadcasts entirely.
    CachingOnly,
    /// Best policy never caching own requests.
    OverhearingOnly,
    /// Heterogeneous rule of thumb: overhear your own popular set.
    OverhearPopular,
    Lru,
    Lfu,
    Explicit { per_cache: Vec<CachePolicy> },
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.population;
        let sources =
            p.items.is_some() as u8 + p.generator.is_some() as u8 + p.per_user_items.is_some() as u8;
        if sources != 1 {
            return Err(Error::InvalidConfig(
                "population needs exactly one of items, generator, per_user_items".into(),
            ));
        }
        if p.users == 0 {
            return Err(Error::InvalidConfig("population needs at least one user".into()));
        }
        if !(self.cache_size >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cache_size must be nonnegative, got {}",
                self.cache_size
            )));
        }
        if let OverhearSpec::TimeDriven { gamma, lambdas } = &self.overhearing {
            if gamma.is_some() == lambdas.is_some() {
                return Err(Error::InvalidConfig(
                    "time-driven overhearing needs exactly one of gamma, lambdas".into(),
                ));
            }
        }
        Ok(())
    }

    /// The shared catalog, beta-sorted. Heterogeneous populations have no
    /// single catalog; this errors for them.
    pub fn catalog(&self) -> Result<Catalog> {
        let p = &self.population;
        if let Some(items) = &p.items {
            return Catalog::new(items.iter().map(|i| i.profile()).collect::<Result<_>>()?);
        }
        if let Some(g) = &p.generator {
            return Catalog::new(g.profiles()?);
        }
        Err(Error::InvalidConfig("per-user population has no shared catalog".into()))
    }

    pub fn population(&self) -> Result<Population> {
        let p = &self.population;
        if let Some(per_user) = &p.per_user_items {
            if per_user.len() != p.users {
                return Err(Error::InvalidConfig("per_user_items length must equal users".into()));
            }
            let profiles = per_user
                .iter()
                .map(|u| u.iter().map(|i| i.profile()).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            return Population::heterogeneous(profiles);
        }
        Population::homogeneous(&self.catalog()?, p.users)
    }

    /// Per-item broadcast rates in catalog order (time-driven only).
    pub fn lambdas(&self, catalog: &Catalog) -> Result<Vec<f64>> {
        match &self.overhearing {
            OverhearSpec::EventDriven => {
                Err(Error::InvalidConfig("event-driven mode has no broadcast rates".into()))
            }
            OverhearSpec::TimeDriven { gamma: Some(g), .. } => {
                Ok(catalog.items().iter().map(|p| g * p.beta).collect())
            }
            OverhearSpec::TimeDriven { lambdas: Some(ls), .. } => {
                if ls.len() != catalog.len() {
                    return Err(Error::InvalidConfig(format!(
                        "need {} broadcast rates, got {}",
                        catalog.len(),
                        ls.len()
                    )));
                }
                Ok(ls.clone())
            }
            _ => unreachable!("validated"),
        }
    }

    pub fn estimation_horizon(&self) -> f64 {
        self.estimation_horizon.unwrap_or(10_000.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "population": {"users": 2, "items": [{"s": 1.0, "beta": 1.0}, {"s": "inf", "beta": 0.5}]},
        "cache_size": 1.0,
        "overhearing": {"mode": "time-driven", "gamma": 1.0}
    }"#;

    #[test]
    fn minimal_round_trip() {
        let c = Config::from_str(MINIMAL).unwrap();
        assert_eq!(c.replications, 1);
        let cat = c.catalog().unwrap();
        assert_eq!(cat.len(), 2);
        assert!(cat.item(1).s.is_infinite() || cat.item(0).s.is_infinite());
        let echoed = serde_json::to_string_pretty(&c).unwrap();
        let back = Config::from_str(&echoed).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), echoed);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = MINIMAL.replacen("\"cache_size\"", "\"typo_field\": 3, \"cache_size\"", 1);
        assert!(Config::from_str(&bad).is_err());
    }

    #[test]
    fn exclusive_population_sources() {
        let bad = MINIMAL.replacen(
            "\"items\":",
            "\"generator\": {\"n\": 3, \"zipf_exponent\": 1.0, \"s_rule\": \"inverse-beta\"}, \"items\":",
            1,
        );
        assert!(Config::from_str(&bad).is_err());
    }

    #[test]
    fn gamma_and_lambdas_exclusive() {
        let bad = MINIMAL.replacen("\"gamma\": 1.0", "\"gamma\": 1.0, \"lambdas\": [1.0, 1.0]", 1);
        assert!(Config::from_str(&bad).is_err());
    }

    #[test]
    fn generator_normalization() {
        let g = GeneratorSpec {
            n: 1000,
            zipf_exponent: 1.4,
            c: None,
            s_rule: SRule::Constant { value: 5000.0 },
        };
        assert!((g.scale() - 0.3392).abs() < 1e-4);
        let profiles = g.profiles().unwrap();
        assert_eq!(profiles.len(), 1000);
        assert!((profiles[0].beta - g.scale()).abs() < 1e-12);
        assert_eq!(profiles[42].s, 5000.0);

        let g = GeneratorSpec { n: 100, zipf_exponent: 0.8, c: None, s_rule: SRule::InverseBeta };
        for p in g.profiles().unwrap() {
            assert!((p.s * p.beta - 1.0).abs() < 1e-12);
        }
    }
}

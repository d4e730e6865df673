//! Declarative run configuration: a single TOML file with nested sections,
//! overridable by command-line flags. The fully resolved configuration is
//! echoed into every artifact so reruns are reproducible byte for byte.

use depletion::geometry::SphereSpecies;
use depletion::integrals::{AInfVariant, CloudCaps};
use depletion::polymers::ConvergenceParams;
use depletion::series::TruncationSpec;
use depletion::{Ensemble, ExclusionReading, ModelParams};
use serde::{Deserialize, Serialize};

fn default_d() -> usize {
    1
}
fn default_r_small() -> f64 {
    0.25
}
fn default_r_big() -> f64 {
    1.0
}
fn default_mode() -> String {
    "limit".into()
}
fn default_rho_small() -> f64 {
    0.002
}
fn default_rho_big() -> f64 {
    0.001
}
fn default_n_small() -> u64 {
    2
}
fn default_n_big() -> u64 {
    1
}
fn default_box_len() -> f64 {
    320.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_r_small")]
    pub r_small: f64,
    #[serde(default = "default_r_big")]
    pub r_big: f64,
    /// "limit" (densities) or "finite" (counts in a box).
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_rho_small")]
    pub rho_small: f64,
    #[serde(default = "default_rho_big")]
    pub rho_big: f64,
    #[serde(default = "default_n_small")]
    pub n_small: u64,
    #[serde(default = "default_n_big")]
    pub n_big: u64,
    #[serde(default = "default_box_len")]
    pub box_len: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            a: 0.3,
            b: 0.05,
            c: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationSection {
    pub beta_order: usize,
    pub a_order: usize,
    pub b1_order: usize,
    pub bstar_order: usize,
    pub bstar_k_max: usize,
    pub c_l_max: usize,
    pub c_k_max: usize,
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection {
            beta_order: 2,
            a_order: 2,
            b1_order: 1,
            bstar_order: 1,
            bstar_k_max: 1,
            c_l_max: 2,
            c_k_max: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McSection {
    pub samples: u64,
    pub seed: u64,
    pub shards: u32,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            samples: 200_000,
            seed: 1,
            shards: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagsSection {
    /// "printed" or "coupled" adjustment-coefficient reading.
    pub a_inf_variant: String,
    /// "big" (|B_2R| as printed) or "small" (|B_2r|) in the summability
    /// condition.
    pub exclusion_reading: String,
    pub allow_out_of_domain: bool,
}

impl Default for FlagsSection {
    fn default() -> Self {
        FlagsSection {
            a_inf_variant: "printed".into(),
            exclusion_reading: "big".into(),
            allow_out_of_domain: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub rho_small_min: f64,
    pub rho_small_max: f64,
    pub rho_small_points: usize,
    pub rho_big_min: f64,
    pub rho_big_max: f64,
    pub rho_big_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            rho_small_min: 5e-4,
            rho_small_max: 5e-3,
            rho_small_points: 10,
            rho_big_min: 5e-4,
            rho_big_max: 5e-3,
            rho_big_points: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainCurveSection {
    pub d: usize,
    pub alpha: f64,
    pub r_big_min: f64,
    pub r_big_max: f64,
    pub points: usize,
}

impl Default for DomainCurveSection {
    fn default() -> Self {
        DomainCurveSection {
            d: 3,
            alpha: 2.5,
            r_big_min: 1.0,
            r_big_max: 100.0,
            points: 41,
        }
    }
}

/// The whole run configuration; every field validated before computation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub flags: FlagsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub domain_curve: DomainCurveSection,
}

impl RunConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, String> {
        let config = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("invalid config: {e}"))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.model.d == 0 || self.model.d > 3 {
            return Err("model.d must be 1, 2 or 3".into());
        }
        if !(self.model.r_small > 0.0 && self.model.r_big > self.model.r_small) {
            return Err("radii must satisfy 0 < r_small < r_big".into());
        }
        match self.model.mode.as_str() {
            "limit" | "finite" => {}
            other => return Err(format!("model.mode must be limit or finite, got {other}")),
        }
        if self.model.rho_small < 0.0 || self.model.rho_big < 0.0 {
            return Err("densities must be nonnegative".into());
        }
        if self.model.box_len <= 0.0 {
            return Err("box length must be positive".into());
        }
        if self.convergence.a < 0.0 || self.convergence.b < 0.0 || self.convergence.c < 0.0 {
            return Err("convergence weights must be nonnegative".into());
        }
        if self.mc.samples == 0 || self.mc.shards == 0 {
            return Err("mc.samples and mc.shards must be positive".into());
        }
        match self.flags.a_inf_variant.as_str() {
            "printed" | "coupled" => {}
            other => return Err(format!("flags.a_inf_variant must be printed or coupled, got {other}")),
        }
        match self.flags.exclusion_reading.as_str() {
            "big" | "small" => {}
            other => {
                return Err(format!(
                    "flags.exclusion_reading must be big or small, got {other}"
                ))
            }
        }
        self.truncation_spec()
            .validate()
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn species(&self) -> SphereSpecies {
        SphereSpecies::new(self.model.r_small, self.model.r_big).expect("validated radii")
    }

    pub fn params(&self) -> Result<ModelParams, depletion::Error> {
        let ensemble = if self.model.mode == "finite" {
            Ensemble::Finite {
                n_small: self.model.n_small,
                n_big: self.model.n_big,
                box_len: self.model.box_len,
            }
        } else {
            Ensemble::Limit {
                rho_small: self.model.rho_small,
                rho_big: self.model.rho_big,
            }
        };
        ModelParams::new(self.model.d, self.species(), ensemble)
    }

    pub fn weights(&self) -> ConvergenceParams {
        ConvergenceParams::new(self.convergence.a, self.convergence.b, self.convergence.c)
            .expect("validated weights")
    }

    pub fn truncation_spec(&self) -> TruncationSpec {
        TruncationSpec {
            beta_order: self.truncation.beta_order,
            a_order: self.truncation.a_order,
            b1_order: self.truncation.b1_order,
            bstar_order: self.truncation.bstar_order,
            bstar_k_max: self.truncation.bstar_k_max,
            cloud_caps: CloudCaps {
                l_max: self.truncation.c_l_max,
                k_max: self.truncation.c_k_max,
            },
        }
    }

    pub fn a_variant(&self) -> AInfVariant {
        if self.flags.a_inf_variant == "coupled" {
            AInfVariant::Coupled
        } else {
            AInfVariant::Printed
        }
    }

    pub fn reading(&self) -> ExclusionReading {
        if self.flags.exclusion_reading == "small" {
            ExclusionReading::SmallBall
        } else {
            ExclusionReading::BigBall
        }
    }

    pub fn mc_config(&self) -> depletion::McConfig {
        depletion::McConfig {
            samples: self.mc.samples,
            seed: self.mc.seed,
            shards: self.mc.shards,
        }
    }
}

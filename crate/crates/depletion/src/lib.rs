//! Cluster-expansion toolkit for a canonical binary mixture of small and
//! large hard spheres.
//!
//! The crate enumerates the labeled graph families behind the expansion
//! coefficients, evaluates the coefficients by deterministic sharded Monte
//! Carlo, assembles finite-volume and infinite-volume free-energy bounds for
//! the effective system of big spheres, checks the convergence conditions,
//! and validates everything against brute-force partition-function oracles
//! at desk scale.

pub mod error;
pub mod estimate;
pub mod geometry;
pub mod graphs;
pub mod integrals;
pub mod oracle;
pub mod polymers;
pub mod series;

pub use error::{Error, Result};
pub use estimate::{CoefficientEstimate, McConfig, Truncation};

use serde::{Deserialize, Serialize};

/// Whether a quantity is evaluated at finite volume or in the
/// thermodynamic limit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum Ensemble {
    /// Fixed particle numbers in a periodic box of side `box_len`.
    Finite { n_small: u64, n_big: u64, box_len: f64 },
    /// Fixed densities, infinite volume.
    Limit { rho_small: f64, rho_big: f64 },
}

/// Model parameters: dimension, the two radii and the ensemble data.
/// Temperature is fixed at the hard-core limit where Mayer functions are
/// indicator-valued, so no beta appears anywhere.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub species: geometry::SphereSpecies,
    pub ensemble: Ensemble,
}

impl ModelParams {
    pub fn new(d: usize, species: geometry::SphereSpecies, ensemble: Ensemble) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        match ensemble {
            Ensemble::Finite { box_len, .. } => {
                if !box_len.is_finite() || box_len <= 0.0 {
                    return Err(Error::invalid("box length must be positive"));
                }
                if species.big >= box_len {
                    return Err(Error::invalid("big radius must stay below the box length"));
                }
            }
            Ensemble::Limit { rho_small, rho_big } => {
                if rho_small < 0.0 || rho_big < 0.0 {
                    return Err(Error::invalid("densities must be nonnegative"));
                }
            }
        }
        Ok(ModelParams { d, species, ensemble })
    }

    /// Small-sphere density `N_r / |Lambda|` (or its limit).
    pub fn rho_small(&self) -> f64 {
        match self.ensemble {
            Ensemble::Finite { n_small, box_len, .. } => {
                n_small as f64 / box_len.powi(self.d as i32)
            }
            Ensemble::Limit { rho_small, .. } => rho_small,
        }
    }

    /// Big-sphere density `N_R / |Lambda|` (or its limit).
    pub fn rho_big(&self) -> f64 {
        match self.ensemble {
            Ensemble::Finite { n_big, box_len, .. } => n_big as f64 / box_len.powi(self.d as i32),
            Ensemble::Limit { rho_big, .. } => rho_big,
        }
    }
}

/// Side of the free-energy sandwich a quantity belongs to.
///
/// The available-volume ratio is bracketed by `1 - rho_R |B_R|` from one
/// side and `1 - rho_R |B_{R+r}|` from the other; the upper free-energy
/// bound carries the `|B_{R+r}|` argument, the lower one `|B_R|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundSide {
    Upper,
    Lower,
}

/// Which excluded volume enters the small-sphere convergence condition.
///
/// The condition is stated with `|B_2R|`; the surrounding small-sphere
/// estimates suggest `|B_2r|` may be intended. Both readings are selectable
/// and carried through every domain check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ExclusionReading {
    /// `|B_2R|`, as printed.
    #[default]
    BigBall,
    /// `|B_2r]`, the small-small excluded volume.
    SmallBall,
}

impl ExclusionReading {
    pub fn volume(self, d: usize, species: &geometry::SphereSpecies) -> Result<f64> {
        match self {
            ExclusionReading::BigBall => geometry::ball_volume(d, 2.0 * species.big),
            ExclusionReading::SmallBall => geometry::ball_volume(d, 2.0 * species.small),
        }
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MixtureComponent, RcDistribution};
use crate::error::Error;

/// Prototype RC distributions. Mixture parameters are repo constants shaped
/// after the four reference prototypes, not measured values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistributionPreset {
    /// Uniform on `[0, 1]`.
    #[serde(rename = "delta-i")]
    DeltaI,
    /// Bimodal, mid and high RC.
    #[serde(rename = "delta-ii")]
    DeltaII,
    /// Most mass at low RC.
    #[serde(rename = "delta-iii")]
    DeltaIII,
    /// Concentrated around mid RC.
    #[serde(rename = "delta-iv")]
    DeltaIV,
}

const fn comp(weight: f64, mean: f64, std_dev: f64) -> MixtureComponent {
    MixtureComponent { weight, mean, std_dev }
}

impl DistributionPreset {
    pub const ALL: [Self; 4] = [Self::DeltaI, Self::DeltaII, Self::DeltaIII, Self::DeltaIV];

    pub fn distribution(self) -> RcDistribution {
        match self {
            Self::DeltaI => RcDistribution::Uniform { lo: 0.0, hi: 1.0 },
            Self::DeltaII => RcDistribution::Mixture(vec![comp(0.5, 0.45, 0.08), comp(0.5, 0.8, 0.07)]),
            Self::DeltaIII => RcDistribution::Mixture(vec![comp(0.3, 0.0, 0.06), comp(0.7, 0.4, 0.4)]),
            Self::DeltaIV => RcDistribution::Mixture(vec![comp(0.7, 0.55, 0.12), comp(0.3, 0.25, 0.1)]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::DeltaI => "delta-i",
            Self::DeltaII => "delta-ii",
            Self::DeltaIII => "delta-iii",
            Self::DeltaIV => "delta-iv",
        }
    }
}

impl fmt::Display for DistributionPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown distribution preset '{s}'")))
    }
}

//! Point state, the δ-neighborhood, and the per-step synchronization rules.

mod dynamics;
mod state;

use serde::{Deserialize, Serialize};

pub use dynamics::{ek_update, lv_update, ov_update, weighted_core_update, VicsekStep};
pub(crate) use dynamics::{synchronous_pass, PassStats, Rule, Search};
pub(crate) use state::dist;
pub use state::{delta_neighbors, euclidean_dis, ModelParams, PointState, StateVector};

/// The dynamics driving a synchronization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Averaging with the δ-neighborhood.
    #[default]
    LinearVicsek,
    /// Sinusoidal phase coupling per dimension (the SynC dynamics).
    ExtensiveKuramoto,
    /// Constant step length along the summed position vector.
    OriginalVicsek,
}

impl Model {
    pub fn short_name(self) -> &'static str {
        match self {
            Model::LinearVicsek => "lv",
            Model::ExtensiveKuramoto => "ek",
            Model::OriginalVicsek => "ov",
        }
    }

    pub(crate) fn rule(self, params: &ModelParams) -> Rule<'static> {
        match self {
            Model::LinearVicsek => Rule::Average { weights: None },
            Model::ExtensiveKuramoto => Rule::Kuramoto,
            Model::OriginalVicsek => Rule::Vicsek { v_dt: params.v_dt },
        }
    }
}

impl std::str::FromStr for Model {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "lv" | "linear-vicsek" => Ok(Model::LinearVicsek),
            "ek" | "extensive-kuramoto" => Ok(Model::ExtensiveKuramoto),
            "ov" | "original-vicsek" => Ok(Model::OriginalVicsek),
            other => Err(crate::Error::invalid(format!("unknown model '{other}'"))),
        }
    }
}

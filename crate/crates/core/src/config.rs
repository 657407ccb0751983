use serde::{Deserialize, Serialize};

use crate::catalog::DEFAULT_ENUMERATION_CAP;
use crate::interestingness::MetricParams;

/// How a collection's primary attributes are matched against the attributes
/// of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AttrMatchMode {
    /// `|P ∩ U| / |P|` over non-temporal primary attributes.
    #[default]
    Proportion,
    /// `|P ∩ U| / |P ∪ U|` over all primary attributes, with `U` the explicit
    /// attributes when any are selected and the implicit ones otherwise.
    Jaccard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct EngineConfig {
    pub metrics: MetricParams,
    pub enumeration_cap: usize,
    pub attr_match: AttrMatchMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            metrics: MetricParams::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            attr_match: AttrMatchMode::Proportion,
        }
    }
}

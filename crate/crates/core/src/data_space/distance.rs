use serde::{Deserialize, Serialize};
use std::fmt;

use super::Dimension;

/// Hop or century count between two entities of the same dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    /// No path links the two entities.
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    pub fn within(self, threshold: u32) -> bool {
        matches!(self, Distance::Finite(d) if d <= threshold)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

/// Per-dimension distance threshold defining the neighborhood of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborThresholds {
    pub chronos: u32,
    pub topos: u32,
    pub thema: u32,
}

impl Default for NeighborThresholds {
    fn default() -> Self {
        Self {
            chronos: 1,
            topos: 1,
            thema: 1,
        }
    }
}

impl NeighborThresholds {
    pub fn get(&self, dim: Dimension) -> u32 {
        match dim {
            Dimension::Chronos => self.chronos,
            Dimension::Topos => self.topos,
            Dimension::Thema => self.thema,
        }
    }
}

//! Domain types of the exploration data space: heritage objects described by
//! dimensional entities along three axes (time, space, concept), the catalog
//! that holds them, and the per-dimension distance metrics.

mod catalog;
mod distance;

pub use catalog::{load_catalog, Catalog, CatalogError, LoadedCatalog};
pub use distance::{Distance, NeighborThresholds};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One of the three descriptor axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    /// Time, in centuries.
    Chronos,
    /// Space, as territories linked by adjacency.
    Topos,
    /// Concepts linked by an ontology graph.
    Thema,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Chronos, Dimension::Topos, Dimension::Thema];

    pub fn index(self) -> usize {
        match self {
            Dimension::Chronos => 0,
            Dimension::Topos => 1,
            Dimension::Thema => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Chronos => "Chronos",
            Dimension::Topos => "Topos",
            Dimension::Thema => "Thema",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chronos" => Ok(Dimension::Chronos),
            "topos" => Ok(Dimension::Topos),
            "thema" => Ok(Dimension::Thema),
            other => Err(format!("unknown dimension `{other}`")),
        }
    }
}

/// Dimension-specific payload of an entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// Signed century index, e.g. 19 for the nineteenth century.
    Century(i32),
    Territory(String),
    Concept(String),
}

impl Payload {
    pub fn dimension(&self) -> Dimension {
        match self {
            Payload::Century(_) => Dimension::Chronos,
            Payload::Territory(_) => Dimension::Topos,
            Payload::Concept(_) => Dimension::Thema,
        }
    }
}

/// A typed tag on one axis; the unit that carries relevance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionalEntity {
    pub id: String,
    pub dimension: Dimension,
    pub label: String,
    pub payload: Payload,
    /// Per-entity relevance floor; the engine default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    /// Per-entity relevance ceiling; the engine default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

impl DimensionalEntity {
    pub fn century(&self) -> Option<i32> {
        match self.payload {
            Payload::Century(c) => Some(c),
            _ => None,
        }
    }

    /// Identifier carried in the payload (territory or concept id, or the
    /// century index rendered as text).
    pub fn payload_key(&self) -> String {
        match &self.payload {
            Payload::Century(c) => c.to_string(),
            Payload::Territory(t) => t.clone(),
            Payload::Concept(c) => c.clone(),
        }
    }
}

/// An explorable item of the collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeritageObject {
    pub id: String,
    pub name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    pub entities: Vec<String>,
}

/// Dense handle of an entity inside a [`Catalog`]. Entities are indexed in
/// ascending id order, so comparing handles compares ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityIdx(pub(crate) u32);

impl EntityIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        EntityIdx(i as u32)
    }
}

/// Dense handle of an object inside a [`Catalog`], in ascending id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectIdx(pub(crate) u32);

impl ObjectIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        ObjectIdx(i as u32)
    }
}

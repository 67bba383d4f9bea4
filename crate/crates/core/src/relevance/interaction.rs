use serde::{Deserialize, Serialize};
use std::fmt;

use crate::data_space::{Catalog, EntityIdx};

/// The six kinds of user interaction that feed relevance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionType {
    StandBefore,
    ConsultDescription,
    BasketAdd,
    BasketRemove,
    EnterRoom,
    ToolUse,
}

impl InteractionType {
    pub const ALL: [InteractionType; 6] = [
        InteractionType::StandBefore,
        InteractionType::ConsultDescription,
        InteractionType::BasketAdd,
        InteractionType::BasketRemove,
        InteractionType::EnterRoom,
        InteractionType::ToolUse,
    ];
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Base weight of each interaction type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightTable {
    pub stand_before: f64,
    pub consult_description: f64,
    pub basket_add: f64,
    pub basket_remove: f64,
    pub enter_room: f64,
    pub tool_use: f64,
}

impl Default for WeightTable {
    fn default() -> Self {
        Self {
            stand_before: 0.05,
            consult_description: 0.2,
            basket_add: 0.4,
            basket_remove: -0.3,
            enter_room: 0.1,
            tool_use: 0.3,
        }
    }
}

impl WeightTable {
    pub fn get(&self, kind: InteractionType) -> f64 {
        match kind {
            InteractionType::StandBefore => self.stand_before,
            InteractionType::ConsultDescription => self.consult_description,
            InteractionType::BasketAdd => self.basket_add,
            InteractionType::BasketRemove => self.basket_remove,
            InteractionType::EnterRoom => self.enter_room,
            InteractionType::ToolUse => self.tool_use,
        }
    }
}

/// A timestamped, weighted event over a set of dimensional entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionType,
    pub entities: Vec<String>,
    pub weight: f64,
    /// Seconds on the session clock.
    pub timestamp: f64,
}

impl Interaction {
    /// Builds an interaction carrying the table weight for `kind`.
    pub fn new(kind: InteractionType, entities: Vec<String>, timestamp: f64, table: &WeightTable) -> Self {
        Self {
            kind,
            entities,
            weight: table.get(kind),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TraceEntry {
    pub(crate) interaction: Interaction,
    pub(crate) dead: bool,
    #[serde(skip)]
    pub(crate) resolved: Vec<EntityIdx>,
}

/// Append-only log of interactions for one session.
///
/// Entries whose decayed weight falls below the pruning epsilon are marked
/// dead and skipped by reinforcement; they stay in the log.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trace {
    entries: Vec<TraceEntry>,
    #[serde(skip)]
    live: Vec<usize>,
    #[serde(skip)]
    touched: Vec<bool>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn interactions(&self) -> impl Iterator<Item = &Interaction> {
        self.entries.iter().map(|e| &e.interaction)
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn is_dead(&self, i: usize) -> bool {
        self.entries[i].dead
    }

    pub fn last_timestamp(&self) -> Option<f64> {
        self.entries.last().map(|e| e.interaction.timestamp)
    }

    /// Whether `de` appears in any recorded interaction.
    pub fn touched(&self, de: EntityIdx) -> bool {
        self.touched.get(de.index()).copied().unwrap_or(false)
    }

    pub(crate) fn push(&mut self, interaction: Interaction, resolved: Vec<EntityIdx>, entity_count: usize) {
        if self.touched.len() < entity_count {
            self.touched.resize(entity_count, false);
        }
        for e in &resolved {
            self.touched[e.index()] = true;
        }
        self.live.push(self.entries.len());
        self.entries.push(TraceEntry {
            interaction,
            dead: false,
            resolved,
        });
    }

    pub(crate) fn live_entries(&self) -> impl Iterator<Item = (usize, &TraceEntry)> {
        self.live.iter().map(|&i| (i, &self.entries[i]))
    }

    pub(crate) fn kill(&mut self, dead: &[usize]) {
        if dead.is_empty() {
            return;
        }
        for &i in dead {
            self.entries[i].dead = true;
        }
        let entries = &self.entries;
        self.live.retain(|&i| !entries[i].dead);
    }

    /// Rebuilds the derived indexes after deserialization.
    pub fn restore(&mut self, catalog: &Catalog) -> Result<(), String> {
        self.touched = vec![false; catalog.entity_count()];
        self.live.clear();
        for (i, entry) in self.entries.iter_mut().enumerate() {
            let mut resolved = Vec::with_capacity(entry.interaction.entities.len());
            for id in &entry.interaction.entities {
                let idx = catalog
                    .entity_idx(id)
                    .ok_or_else(|| format!("unknown entity `{id}` in trace"))?;
                resolved.push(idx);
            }
            resolved.sort();
            resolved.dedup();
            for e in &resolved {
                self.touched[e.index()] = true;
            }
            entry.resolved = resolved;
            if !entry.dead {
                self.live.push(i);
            }
        }
        Ok(())
    }
}

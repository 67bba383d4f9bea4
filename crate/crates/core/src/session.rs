//! One user's exploration: catalog, relevance, museum and basket advanced
//! together one second at a time.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

use crate::data_space::{Catalog, Dimension, Payload};
use crate::museum::{DoorRef, Museum, MuseumError, Room, SpawnTrigger, DOORS_PER_ROOM};
use crate::params::Params;
use crate::relevance::{
    rank_dimension, relevance_to_color, Interaction, InteractionType, RelevanceEngine, RelevanceError,
    RelevanceSnapshot, RelevanceState, Trace,
};

/// Version of the persisted session format.
pub const SCHEMA_VERSION: u32 = 1;

/// Entities listed in a `RelevanceUpdated` event.
const SUMMARY_TOP: usize = 5;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Museum(#[from] MuseumError),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
    #[error("room `{room}` has no door {door}")]
    UnknownDoor { room: String, door: usize },
    #[error("no {dimension} entity matches `{target}`")]
    UnknownTarget { dimension: Dimension, target: String },
    #[error("object `{0}` is not in the basket")]
    NotInBasket(String),
    #[error("the clock can only be advanced by hand in logical mode")]
    NotLogical,
    #[error("session format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("corrupt session payload: {0}")]
    Corrupt(String),
    #[error("session was saved against a different catalog")]
    CatalogMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockMode {
    /// Ticks are driven by the wall clock at 1 Hz.
    RealTime,
    /// Ticks happen only through [`Session::advance_clock`].
    Logical,
}

/// A Topos, Chronos or Thema tool selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tool")]
pub enum ToolEvent {
    /// Territory entity id or territory key.
    Topos { target: String },
    /// Inclusive century interval.
    Chronos { from: i32, to: i32 },
    /// Concept entity id or concept key.
    Thema { target: String },
}

/// What a client reports. The first six map to interactions; door
/// approaches go to the museum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum UserEvent {
    StandBefore { object: String },
    ConsultDescription { object: String },
    BasketAdd { object: String },
    BasketRemove { object: String },
    EnterRoom { room: String },
    ToolUse(ToolEvent),
    DoorApproach { room: String, door: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    /// The recorded interaction, absent for door approaches.
    pub interaction: Option<Interaction>,
    /// The event waits for the next tick.
    pub queued: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayEntry {
    pub entity: String,
    pub dimension: Dimension,
    pub label: String,
    pub relevance: f64,
    /// 0 is red (floor), 1 is green (ceiling).
    pub color: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum SessionEvent {
    RoomSpawned {
        tick: f64,
        room: String,
        parent: String,
        door: usize,
        topic: Vec<String>,
        trigger: SpawnTrigger,
    },
    DoorOpened {
        tick: f64,
        room: String,
        door: usize,
        child: String,
    },
    RelevanceUpdated {
        tick: f64,
        changed: usize,
        top: Vec<OverlayEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSnapshot {
    pub id: String,
    #[serde(flatten)]
    pub room: Room,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    catalog: Arc<Catalog>,
    params: Params,
    engine: RelevanceEngine,
    trace: Trace,
    relevance: RelevanceState,
    museum: Museum,
    basket: Vec<String>,
    user_room: String,
    mode: ClockMode,
    pending: Vec<DoorRef>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersistedState {
    id: String,
    seed: u64,
    mode: ClockMode,
    params: Params,
    relevance: RelevanceSnapshot,
    trace: Trace,
    museum: Museum,
    basket: Vec<String>,
    user_room: String,
    pending: Vec<DoorRef>,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    version: u64,
    catalog_digest: String,
    checksum: String,
    state: serde_json::Value,
}

fn checksum(state: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(state.to_string().as_bytes()))
}

impl Session {
    /// A fresh session standing in the root room of a new museum.
    pub fn new(
        id: impl Into<String>,
        catalog: Arc<Catalog>,
        params: Params,
        mode: ClockMode,
        seed: u64,
    ) -> Result<Session, SessionError> {
        params
            .validate()
            .map_err(|e| SessionError::InvalidParams(e.to_string()))?;
        let engine = RelevanceEngine::new(&catalog, params.engine.clone())?;
        let museum = Museum::init(&catalog, &params, seed)?;
        Ok(Session {
            id: id.into(),
            relevance: engine.initial_state(),
            trace: Trace::new(),
            user_room: museum.root().to_string(),
            museum,
            basket: Vec::new(),
            engine,
            catalog,
            params,
            mode,
            pending: Vec::new(),
            seed,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn clock(&self) -> f64 {
        self.relevance.clock()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn relevance(&self) -> &RelevanceState {
        &self.relevance
    }

    pub fn museum(&self) -> &Museum {
        &self.museum
    }

    pub fn user_room(&self) -> &str {
        &self.user_room
    }

    pub fn basket(&self) -> &[String] {
        &self.basket
    }

    pub fn pending_approaches(&self) -> &[DoorRef] {
        &self.pending
    }

    pub fn room(&self, id: &str) -> Result<RoomSnapshot, SessionError> {
        let room = self
            .museum
            .room(id)
            .ok_or_else(|| SessionError::UnknownRoom(id.to_string()))?;
        Ok(RoomSnapshot {
            id: id.to_string(),
            room: room.clone(),
        })
    }

    /// Entities of `dimension` (or all entities) by descending relevance,
    /// each with its overlay color.
    pub fn relevance_overlay(&self, dimension: Option<Dimension>) -> Vec<OverlayEntry> {
        let dims: Vec<Dimension> = match dimension {
            Some(d) => vec![d],
            None => Dimension::ALL.to_vec(),
        };
        let mut out: Vec<OverlayEntry> = dims
            .into_iter()
            .flat_map(|d| rank_dimension(&self.relevance, &self.catalog, d))
            .map(|(e, r)| {
                let entity = self.catalog.entity_at(e);
                OverlayEntry {
                    entity: entity.id.clone(),
                    dimension: entity.dimension,
                    label: entity.label.clone(),
                    relevance: r,
                    color: relevance_to_color(r, self.engine.r_min(e), self.engine.r_max(e)),
                }
            })
            .collect();
        if dimension.is_none() {
            out.sort_by(|a, b| {
                b.relevance
                    .total_cmp(&a.relevance)
                    .then_with(|| a.entity.cmp(&b.entity))
            });
        }
        out
    }

    fn object_entities(&self, object: &str) -> Result<Vec<String>, SessionError> {
        let idx = self
            .catalog
            .object_idx(object)
            .ok_or_else(|| SessionError::UnknownObject(object.to_string()))?;
        Ok(self
            .catalog
            .object_entities(idx)
            .iter()
            .map(|&e| self.catalog.entity_at(e).id.clone())
            .collect())
    }

    fn tool_entities(&self, tool: &ToolEvent) -> Result<Vec<String>, SessionError> {
        let lookup = |dimension: Dimension, target: &str| {
            self.catalog
                .find_in_dimension(dimension, target)
                .map(|e| vec![self.catalog.entity_at(e).id.clone()])
                .ok_or_else(|| SessionError::UnknownTarget {
                    dimension,
                    target: target.to_string(),
                })
        };
        match tool {
            ToolEvent::Topos { target } => lookup(Dimension::Topos, target),
            ToolEvent::Thema { target } => lookup(Dimension::Thema, target),
            ToolEvent::Chronos { from, to } => {
                let (lo, hi) = (*from.min(to), *from.max(to));
                let covered: Vec<String> = self
                    .catalog
                    .entities()
                    .iter()
                    .filter(|e| matches!(e.payload, Payload::Century(c) if (lo..=hi).contains(&c)))
                    .map(|e| e.id.clone())
                    .collect();
                if covered.is_empty() {
                    return Err(SessionError::UnknownTarget {
                        dimension: Dimension::Chronos,
                        target: format!("{lo}..={hi}"),
                    });
                }
                Ok(covered)
            }
        }
    }

    /// Applies a user event. Interactions are timestamped with the current
    /// clock and take effect at the next tick; door approaches are queued
    /// for the next trigger detection. On error nothing changes.
    pub fn post(&mut self, event: UserEvent) -> Result<Ack, SessionError> {
        let (kind, entities) = match &event {
            UserEvent::StandBefore { object } => (InteractionType::StandBefore, self.object_entities(object)?),
            UserEvent::ConsultDescription { object } => {
                (InteractionType::ConsultDescription, self.object_entities(object)?)
            }
            UserEvent::BasketAdd { object } => (InteractionType::BasketAdd, self.object_entities(object)?),
            UserEvent::BasketRemove { object } => {
                let entities = self.object_entities(object)?;
                if !self.basket.contains(object) {
                    return Err(SessionError::NotInBasket(object.clone()));
                }
                (InteractionType::BasketRemove, entities)
            }
            UserEvent::EnterRoom { room } => {
                let r = self
                    .museum
                    .room(room)
                    .ok_or_else(|| SessionError::UnknownRoom(room.clone()))?;
                (InteractionType::EnterRoom, r.topic.clone())
            }
            UserEvent::ToolUse(tool) => (InteractionType::ToolUse, self.tool_entities(tool)?),
            UserEvent::DoorApproach { room, door } => {
                if !self.museum.contains(room) {
                    return Err(SessionError::UnknownRoom(room.clone()));
                }
                if *door >= DOORS_PER_ROOM {
                    return Err(SessionError::UnknownDoor {
                        room: room.clone(),
                        door: *door,
                    });
                }
                let r = DoorRef {
                    room: room.clone(),
                    door: *door,
                };
                if !self.pending.contains(&r) {
                    self.pending.push(r);
                }
                return Ok(Ack {
                    interaction: None,
                    queued: true,
                });
            }
        };

        let interaction = Interaction::new(kind, entities, self.relevance.clock(), &self.params.engine.weight_table);
        self.engine
            .record_interaction(&self.relevance, &mut self.trace, interaction.clone(), &self.catalog)?;
        match event {
            UserEvent::BasketAdd { object } if !self.basket.contains(&object) => self.basket.push(object),
            UserEvent::BasketRemove { object } => self.basket.retain(|o| *o != object),
            UserEvent::EnterRoom { room } => self.user_room = room,
            _ => {}
        }
        Ok(Ack {
            interaction: Some(interaction),
            queued: false,
        })
    }

    /// Processes one second: relevance update, trigger detection, then at
    /// most one spawn under the user's room.
    pub fn tick(&mut self) -> Vec<SessionEvent> {
        let before = self.relevance.values().to_vec();
        let report = self.engine.tick(&mut self.relevance, &mut self.trace);
        let now = report.time;
        let mut events = Vec::new();

        let triggers = self
            .museum
            .detect_triggers(
                &self.relevance,
                &self.catalog,
                &self.user_room,
                &self.pending,
                self.params.s_room,
            )
            .expect("user room exists");
        let mut attempted = BTreeSet::new();
        for trigger in &triggers {
            if let SpawnTrigger::DoorApproach { room, door } = trigger {
                attempted.insert(DoorRef {
                    room: room.clone(),
                    door: *door,
                });
            }
            let spawned = self.museum.spawn_room(
                &self.user_room,
                trigger,
                &self.relevance,
                &self.catalog,
                &self.params,
                now,
            );
            if let Ok((child, door)) = spawned {
                let room = self.museum.room(&child).expect("spawned room exists");
                events.push(SessionEvent::RoomSpawned {
                    tick: now,
                    room: child.clone(),
                    parent: self.user_room.clone(),
                    door,
                    topic: room.topic.clone(),
                    trigger: trigger.clone(),
                });
                events.push(SessionEvent::DoorOpened {
                    tick: now,
                    room: self.user_room.clone(),
                    door,
                    child,
                });
                break;
            }
        }
        // approaches that were tried, or that no longer point at a closed door
        // of the user's room, are spent; the rest wait for the next tick
        let museum = &self.museum;
        let user_room = &self.user_room;
        self.pending.retain(|r| {
            !attempted.contains(r)
                && r.room == *user_room
                && museum
                    .room(&r.room)
                    .is_some_and(|room| room.doors[r.door] == crate::museum::Door::Closed)
        });

        if report.changed {
            let changed = before
                .iter()
                .zip(self.relevance.values())
                .filter(|(a, b)| a != b)
                .count();
            let mut top = self.relevance_overlay(None);
            top.truncate(SUMMARY_TOP);
            events.push(SessionEvent::RelevanceUpdated {
                tick: now,
                changed,
                top,
            });
        }
        events
    }

    /// Runs `n` ticks back to back. Logical mode only.
    pub fn advance_clock(&mut self, n: u64) -> Result<Vec<SessionEvent>, SessionError> {
        if self.mode != ClockMode::Logical {
            return Err(SessionError::NotLogical);
        }
        let mut events = Vec::new();
        for _ in 0..n {
            events.extend(self.tick());
        }
        Ok(events)
    }

    fn persisted(&self) -> PersistedState {
        PersistedState {
            id: self.id.clone(),
            seed: self.seed,
            mode: self.mode,
            params: self.params.clone(),
            relevance: self.relevance.snapshot(&self.catalog),
            trace: self.trace.clone(),
            museum: self.museum.clone(),
            basket: self.basket.clone(),
            user_room: self.user_room.clone(),
            pending: self.pending.clone(),
        }
    }

    /// Serialized session state without the envelope; equal sessions give
    /// equal bytes.
    pub fn state_json(&self) -> String {
        serde_json::to_value(self.persisted())
            .expect("session serializes")
            .to_string()
    }

    /// Versioned, checksummed JSON document.
    pub fn save(&self) -> String {
        let state = serde_json::to_value(self.persisted()).expect("session serializes");
        let envelope = Envelope {
            version: u64::from(SCHEMA_VERSION),
            catalog_digest: self.catalog.digest().to_string(),
            checksum: checksum(&state),
            state,
        };
        serde_json::to_string_pretty(&envelope).expect("envelope serializes")
    }

    pub fn save_to(&self, mut sink: impl std::io::Write) -> std::io::Result<()> {
        sink.write_all(self.save().as_bytes())
    }

    pub fn load(text: &str, catalog: Arc<Catalog>) -> Result<Session, SessionError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        let version = raw
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| SessionError::Corrupt("missing version".into()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(SessionError::Version {
                found: version,
                expected: SCHEMA_VERSION,
            });
        }
        let envelope: Envelope = serde_json::from_value(raw).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        if checksum(&envelope.state) != envelope.checksum {
            return Err(SessionError::Corrupt("checksum mismatch".into()));
        }
        if envelope.catalog_digest != catalog.digest() {
            return Err(SessionError::CatalogMismatch);
        }
        let state: PersistedState =
            serde_json::from_value(envelope.state).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        Self::from_persisted(state, catalog)
    }

    pub fn load_from(mut source: impl std::io::Read, catalog: Arc<Catalog>) -> Result<Session, SessionError> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|e| SessionError::Corrupt(e.to_string()))?;
        Self::load(&text, catalog)
    }

    fn from_persisted(state: PersistedState, catalog: Arc<Catalog>) -> Result<Session, SessionError> {
        let corrupt = SessionError::Corrupt;
        state.params.validate().map_err(|e| corrupt(e.to_string()))?;
        let engine = RelevanceEngine::new(&catalog, state.params.engine.clone())?;
        let relevance = RelevanceState::restore(&state.relevance, &catalog).map_err(corrupt)?;
        let mut trace = state.trace;
        trace.restore(&catalog).map_err(corrupt)?;
        if !state.museum.contains(&state.user_room) {
            return Err(corrupt(format!("user room `{}` does not exist", state.user_room)));
        }
        for room in state.museum.rooms().map(|(_, r)| r) {
            for e in &room.topic {
                if catalog.entity_idx(e).is_none() {
                    return Err(corrupt(format!("room topic `{e}` is not in the catalog")));
                }
            }
            for o in &room.contents {
                if catalog.object_idx(&o.object_id).is_none() {
                    return Err(corrupt(format!("room object `{}` is not in the catalog", o.object_id)));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for o in &state.basket {
            if catalog.object_idx(o).is_none() || !seen.insert(o) {
                return Err(corrupt(format!("bad basket entry `{o}`")));
            }
        }
        if state
            .pending
            .iter()
            .any(|r| !state.museum.contains(&r.room) || r.door >= DOORS_PER_ROOM)
        {
            return Err(corrupt("bad pending door approach".into()));
        }
        Ok(Session {
            id: state.id,
            catalog,
            params: state.params,
            engine,
            trace,
            relevance,
            museum: state.museum,
            basket: state.basket,
            user_room: state.user_room,
            mode: state.mode,
            pending: state.pending,
            seed: state.seed,
        })
    }
}

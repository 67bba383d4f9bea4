//! The room tree.
//!
//! Rooms are never destroyed and never change once created: a spawn only
//! appends a child and flips one closed door of its parent to open.

use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

use crate::composer::{compose_room, LayoutParams, PlacedObject};
use crate::data_space::{Catalog, EntityIdx, ObjectIdx};
use crate::params::Params;
use crate::relevance::RelevanceState;

pub const DOORS_PER_ROOM: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum MuseumError {
    #[error("catalog has no objects")]
    EmptyCatalog,
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
    #[error("room `{0}` has no closed door left")]
    ParentFull(String),
    #[error("door {door} of room `{room}` is not a closed door")]
    DoorNotClosed { room: String, door: usize },
    #[error("no entity is available for a new topic")]
    TopicExhausted,
    #[error("malformed museum: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Door {
    Closed,
    /// Leads to the child room with this id.
    Open(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub parent: Option<String>,
    pub children: Vec<String>,
    /// One or two entity ids.
    pub topic: Vec<String>,
    pub doors: [Door; DOORS_PER_ROOM],
    pub created_at: f64,
    pub contents: Vec<PlacedObject>,
    /// `empty` when no candidate object matched, `layout_unconverged` when
    /// the spring solver hit its iteration cap.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl Room {
    pub fn closed_doors(&self) -> impl Iterator<Item = usize> + '_ {
        self.doors
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == Door::Closed)
            .map(|(i, _)| i)
    }

    pub fn is_full(&self) -> bool {
        self.closed_doors().next().is_none()
    }
}

/// A reference to one door of one room.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DoorRef {
    pub room: String,
    pub door: usize,
}

/// Why a room should appear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpawnTrigger {
    /// An entity crossed the spawn threshold and no nearby room covers it.
    RelevancePeak { entity: String },
    /// The user walked up to a closed door.
    DoorApproach { room: String, door: usize },
}

/// Rooted tree of rooms. Room ids are sequential integers rendered as
/// strings; the root is `"0"`.
#[derive(Debug, Clone, PartialEq)]
pub struct Museum {
    rooms: Vec<Room>,
    seed: u64,
}

fn room_index(id: &str) -> Option<usize> {
    if id.len() > 1 && id.starts_with('0') {
        return None;
    }
    id.parse().ok()
}

/// Seed of a room's contents, derived from the museum seed.
fn room_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The entity with the most objects, ties broken by id.
pub fn most_populous_entity(catalog: &Catalog) -> Option<EntityIdx> {
    (0..catalog.entity_count())
        .map(EntityIdx::from_index)
        .filter(|&e| !catalog.objects_with(e).is_empty())
        .max_by(|&a, &b| {
            catalog
                .objects_with(a)
                .len()
                .cmp(&catalog.objects_with(b).len())
                .then(b.cmp(&a))
        })
}

/// Picks a topic from entities outside `adjoining`: the most relevant one,
/// plus the runner-up when it lies in another dimension and has reached
/// `s_room`. Ties go to the smaller id.
pub fn select_topic(
    state: &RelevanceState,
    catalog: &Catalog,
    adjoining: &HashSet<EntityIdx>,
    s_room: f64,
) -> Result<Vec<EntityIdx>, MuseumError> {
    select_topic_from(state, catalog, adjoining, s_room, None)
}

fn select_topic_from(
    state: &RelevanceState,
    catalog: &Catalog,
    adjoining: &HashSet<EntityIdx>,
    s_room: f64,
    forced_first: Option<EntityIdx>,
) -> Result<Vec<EntityIdx>, MuseumError> {
    let mut ranked = state.top_relevant(2, adjoining).into_iter();
    let first = match forced_first {
        Some(f) => f,
        None => ranked.next().ok_or(MuseumError::TopicExhausted)?.0,
    };
    let mut exclude = adjoining.clone();
    exclude.insert(first);
    let mut topic = vec![first];
    if let Some(&(second, r)) = state.top_relevant(1, &exclude).first() {
        if catalog.dimension_of(second) != catalog.dimension_of(first) && r >= s_room {
            topic.push(second);
        }
    }
    Ok(topic)
}

impl Museum {
    /// A single root room dedicated to the catalog's most populous entity.
    pub fn init(catalog: &Catalog, params: &Params, seed: u64) -> Result<Museum, MuseumError> {
        let root_topic = most_populous_entity(catalog).ok_or(MuseumError::EmptyCatalog)?;
        let mut museum = Museum { rooms: vec![], seed };
        let room = museum.build_room(None, vec![root_topic], catalog, &params.layout, &HashSet::new(), 0.0);
        museum.rooms.push(room);
        Ok(museum)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn root(&self) -> &str {
        "0"
    }

    pub fn len(&self) -> usize {
        self.rooms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rooms.is_empty()
    }

    pub fn room(&self, id: &str) -> Option<&Room> {
        room_index(id).and_then(|i| self.rooms.get(i))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.room(id).is_some()
    }

    /// Rooms in id order.
    pub fn rooms(&self) -> impl Iterator<Item = (String, &Room)> {
        self.rooms.iter().enumerate().map(|(i, r)| (i.to_string(), r))
    }

    fn require(&self, id: &str) -> Result<&Room, MuseumError> {
        self.room(id).ok_or_else(|| MuseumError::UnknownRoom(id.to_string()))
    }

    /// The room itself, its parent if any, and its children.
    pub fn adjoining_rooms(&self, id: &str) -> Result<Vec<String>, MuseumError> {
        let room = self.require(id)?;
        let mut out = vec![id.to_string()];
        out.extend(room.parent.iter().cloned());
        out.extend(room.children.iter().cloned());
        Ok(out)
    }

    /// Topic entities of the adjoining rooms of `id`.
    pub fn adjoining_topics(&self, id: &str, catalog: &Catalog) -> Result<HashSet<EntityIdx>, MuseumError> {
        let mut set = HashSet::new();
        for rid in self.adjoining_rooms(id)? {
            for e in &self.require(&rid)?.topic {
                if let Some(idx) = catalog.entity_idx(e) {
                    set.insert(idx);
                }
            }
        }
        Ok(set)
    }

    /// Spawn triggers for a user standing in `user_room`: relevance peaks not
    /// covered by any adjoining room (descending relevance, then id), then
    /// approaches to closed doors of `user_room` (by door index).
    pub fn detect_triggers(
        &self,
        state: &RelevanceState,
        catalog: &Catalog,
        user_room: &str,
        approaches: &[DoorRef],
        s_room: f64,
    ) -> Result<Vec<SpawnTrigger>, MuseumError> {
        let room = self.require(user_room)?;
        let covered = self.adjoining_topics(user_room, catalog)?;
        let mut triggers: Vec<SpawnTrigger> = state
            .top_relevant(usize::MAX, &covered)
            .into_iter()
            .take_while(|&(_, r)| r >= s_room)
            .map(|(e, _)| SpawnTrigger::RelevancePeak {
                entity: catalog.entity_at(e).id.clone(),
            })
            .collect();
        let mut doors: Vec<usize> = approaches
            .iter()
            .filter(|a| a.room == user_room && room.doors.get(a.door) == Some(&Door::Closed))
            .map(|a| a.door)
            .collect();
        doors.sort_unstable();
        doors.dedup();
        triggers.extend(doors.into_iter().map(|door| SpawnTrigger::DoorApproach {
            room: user_room.to_string(),
            door,
        }));
        Ok(triggers)
    }

    /// Creates a child of `parent` for `trigger` and returns its id and the
    /// door it hangs from. On error the museum is unchanged.
    pub fn spawn_room(
        &mut self,
        parent: &str,
        trigger: &SpawnTrigger,
        state: &RelevanceState,
        catalog: &Catalog,
        params: &Params,
        now: f64,
    ) -> Result<(String, usize), MuseumError> {
        let parent_room = self.require(parent)?;
        let parent_idx = room_index(parent).expect("existing room id parses");
        let door = match trigger {
            SpawnTrigger::DoorApproach { room, door } => {
                if room != parent || parent_room.doors.get(*door) != Some(&Door::Closed) {
                    return Err(MuseumError::DoorNotClosed {
                        room: room.clone(),
                        door: *door,
                    });
                }
                *door
            }
            SpawnTrigger::RelevancePeak { .. } => parent_room
                .closed_doors()
                .next()
                .ok_or_else(|| MuseumError::ParentFull(parent.to_string()))?,
        };
        let adjoining = self.adjoining_topics(parent, catalog)?;
        let topic = match trigger {
            SpawnTrigger::RelevancePeak { entity } => {
                let e = catalog.entity_idx(entity).ok_or(MuseumError::TopicExhausted)?;
                select_topic_from(state, catalog, &adjoining, params.s_room, Some(e))?
            }
            SpawnTrigger::DoorApproach { .. } => select_topic(state, catalog, &adjoining, params.s_room)?,
        };

        let mut shown = HashSet::new();
        for rid in self.adjoining_rooms(parent)? {
            for placed in &self.require(&rid)?.contents {
                if let Some(o) = catalog.object_idx(&placed.object_id) {
                    shown.insert(o);
                }
            }
        }

        let room = self.build_room(Some(parent.to_string()), topic, catalog, &params.layout, &shown, now);
        let id = self.rooms.len().to_string();
        self.rooms.push(room);
        let parent_room = &mut self.rooms[parent_idx];
        parent_room.children.push(id.clone());
        parent_room.doors[door] = Door::Open(id.clone());
        Ok((id, door))
    }

    fn build_room(
        &self,
        parent: Option<String>,
        topic: Vec<EntityIdx>,
        catalog: &Catalog,
        layout: &LayoutParams,
        exclusions: &HashSet<ObjectIdx>,
        now: f64,
    ) -> Room {
        let contents = compose_room(
            &topic,
            catalog,
            room_seed(self.seed, self.rooms.len()),
            exclusions,
            layout,
        );
        let mut flags = Vec::new();
        if contents.is_empty() {
            flags.push("empty".to_string());
        }
        if contents.layout_unconverged {
            flags.push("layout_unconverged".to_string());
        }
        Room {
            parent,
            children: Vec::new(),
            topic: topic.iter().map(|&e| catalog.entity_at(e).id.clone()).collect(),
            doors: [Door::Closed, Door::Closed, Door::Closed],
            created_at: now,
            contents: contents.objects,
            flags,
        }
    }

    /// Checks the structural invariants: a single root, consistent
    /// parent/child/door links, at most three children, no cycles, and
    /// topics of one or two entities.
    pub fn validate(&self) -> Result<(), MuseumError> {
        let bad = |m: String| Err(MuseumError::Malformed(m));
        if self.rooms.is_empty() {
            return bad("no rooms".into());
        }
        for (i, room) in self.rooms.iter().enumerate() {
            let id = i.to_string();
            if !(1..=2).contains(&room.topic.len()) {
                return bad(format!("room {id} has {} topic entities", room.topic.len()));
            }
            match (&room.parent, i) {
                (None, 0) => {}
                (None, _) => return bad(format!("room {id} has no parent")),
                (Some(_), 0) => return bad("root has a parent".into()),
                (Some(p), _) => {
                    let Some(parent) = self.room(p) else {
                        return bad(format!("room {id} has unknown parent {p}"));
                    };
                    if parent.children.iter().filter(|c| **c == id).count() != 1 {
                        return bad(format!("room {p} does not list child {id} exactly once"));
                    }
                    // children are created after their parents, so ids increase
                    // strictly along every path and no cycle can exist
                    if room_index(p).is_none_or(|pi| pi >= i) {
                        return bad(format!("room {id} has parent {p} created after it"));
                    }
                }
            }
            if room.children.len() > DOORS_PER_ROOM {
                return bad(format!("room {id} has {} children", room.children.len()));
            }
            let open: Vec<&String> = room
                .doors
                .iter()
                .filter_map(|d| match d {
                    Door::Open(c) => Some(c),
                    Door::Closed => None,
                })
                .collect();
            if open.len() != room.children.len() {
                return bad(format!("room {id} open doors do not match its children"));
            }
            for c in open {
                let Some(child) = self.room(c) else {
                    return bad(format!("room {id} door leads to unknown room {c}"));
                };
                if child.parent.as_deref() != Some(id.as_str()) || !room.children.contains(c) {
                    return bad(format!("room {id} door to {c} is inconsistent"));
                }
            }
        }
        Ok(())
    }
}

impl Serialize for Museum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Rooms<'a>(&'a [Room]);
        impl Serialize for Rooms<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (i, room) in self.0.iter().enumerate() {
                    map.serialize_entry(&i.to_string(), room)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("root", self.root())?;
        map.serialize_entry("seed", &self.seed)?;
        map.serialize_entry("rooms", &Rooms(&self.rooms))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Museum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            root: String,
            seed: u64,
            rooms: BTreeMap<String, Room>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.root != "0" {
            return Err(serde::de::Error::custom("root room must be \"0\""));
        }
        let mut indexed: Vec<(usize, Room)> = Vec::with_capacity(raw.rooms.len());
        for (id, room) in raw.rooms {
            let i = room_index(&id).ok_or_else(|| serde::de::Error::custom(format!("bad room id `{id}`")))?;
            indexed.push((i, room));
        }
        indexed.sort_by_key(|(i, _)| *i);
        if indexed.iter().enumerate().any(|(k, (i, _))| k != *i) {
            return Err(serde::de::Error::custom("room ids must be 0..n"));
        }
        let museum = Museum {
            rooms: indexed.into_iter().map(|(_, r)| r).collect(),
            seed: raw.seed,
        };
        museum.validate().map_err(serde::de::Error::custom)?;
        Ok(museum)
    }
}

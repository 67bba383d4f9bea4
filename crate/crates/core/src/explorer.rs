//! Headless drivers: replay a script or let a synthetic visitor walk the
//! museum, in logical time, and collect run metrics.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

use crate::composer::topic_distance;
use crate::data_space::{Catalog, Dimension, EntityIdx};
use crate::params::Params;
use crate::session::{ClockMode, Session, SessionError, SessionEvent, ToolEvent, UserEvent};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("script step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: SessionError,
    },
    #[error("script step {index} has tick {tick}, before the previous step")]
    Unordered { index: usize, tick: u64 },
    #[error("script step {index} has tick {tick}, past the end of a {ticks}-tick run")]
    PastEnd { index: usize, tick: u64, ticks: u64 },
    #[error("unknown target entity `{0}`")]
    UnknownTarget(String),
    #[error("malformed script: {0}")]
    Syntax(String),
    #[error("malformed metrics: {0}")]
    Metrics(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    /// Events are applied before the tick with this index runs.
    pub tick: u64,
    pub event: UserEvent,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Script(pub Vec<ScriptStep>);

impl Script {
    pub fn from_json_str(text: &str) -> Result<Script, RunError> {
        let script: Script = serde_json::from_str(text).map_err(|e| RunError::Syntax(e.to_string()))?;
        script.check_order()?;
        Ok(script)
    }

    fn check_order(&self) -> Result<(), RunError> {
        for (index, pair) in self.0.windows(2).enumerate() {
            if pair[1].tick < pair[0].tick {
                return Err(RunError::Unordered {
                    index: index + 1,
                    tick: pair[1].tick,
                });
            }
        }
        Ok(())
    }
}

/// State of the run after one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub rooms_created: usize,
    pub unique_objects_exposed: usize,
    pub serendipity_ratio: f64,
    /// Relevance per entity, in `RunMetrics::entities` order.
    pub relevance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    /// Entity ids, sorted; the column order of the trajectories.
    pub entities: Vec<String>,
    pub ticks: Vec<TickRecord>,
}

impl RunMetrics {
    pub fn rooms_created(&self) -> usize {
        self.ticks.last().map_or(0, |t| t.rooms_created)
    }

    pub fn unique_objects_exposed(&self) -> usize {
        self.ticks.last().map_or(0, |t| t.unique_objects_exposed)
    }

    pub fn serendipity_ratio(&self) -> f64 {
        self.ticks.last().map_or(0.0, |t| t.serendipity_ratio)
    }

    /// Relevance trajectory of one entity.
    pub fn trajectory(&self, entity: &str) -> Option<Vec<f64>> {
        let col = self.entities.iter().position(|e| e == entity)?;
        Some(self.ticks.iter().map(|t| t.relevance[col]).collect())
    }

    /// Parses the CSV written by [`emit_metrics`].
    pub fn from_csv(text: &str) -> Result<RunMetrics, RunError> {
        let bad = |e: &dyn std::fmt::Display| RunError::Metrics(e.to_string());
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| bad(&e))?.clone();
        if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
            return Err(RunError::Metrics("unexpected header".into()));
        }
        let entities: Vec<String> = header.iter().skip(FIXED_COLUMNS.len()).map(String::from).collect();
        let mut ticks = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| bad(&e))?;
            let field = |i: usize| row.get(i).ok_or_else(|| RunError::Metrics("short row".into()));
            let relevance = (FIXED_COLUMNS.len()..row.len())
                .map(|i| field(i)?.parse::<f64>().map_err(|e| bad(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            ticks.push(TickRecord {
                tick: field(0)?.parse().map_err(|e| bad(&e))?,
                rooms_created: field(1)?.parse().map_err(|e| bad(&e))?,
                unique_objects_exposed: field(2)?.parse().map_err(|e| bad(&e))?,
                serendipity_ratio: field(3)?.parse().map_err(|e| bad(&e))?,
                relevance,
            });
        }
        Ok(RunMetrics { entities, ticks })
    }
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub events: Vec<SessionEvent>,
    pub session: Session,
}

/// Running exposure tally, updated from spawn events.
struct Exposure {
    /// Object id -> whether it was ever placed as an exact topic match.
    seen: BTreeMap<String, bool>,
}

impl Exposure {
    fn new(session: &Session) -> Self {
        let mut e = Exposure { seen: BTreeMap::new() };
        e.add_room(session, session.museum().root());
        e
    }

    fn add_room(&mut self, session: &Session, id: &str) {
        for o in &session.museum().room(id).expect("room exists").contents {
            *self.seen.entry(o.object_id.clone()).or_insert(false) |= o.source_group == 1;
        }
    }

    fn ratio(&self) -> f64 {
        if self.seen.is_empty() {
            return 0.0;
        }
        let serendipitous = self.seen.values().filter(|g1| !**g1).count();
        serendipitous as f64 / self.seen.len() as f64
    }
}

/// Steps a session one tick at a time and records metrics.
struct Recorder {
    exposure: Exposure,
    metrics: RunMetrics,
    events: Vec<SessionEvent>,
}

impl Recorder {
    fn new(session: &Session) -> Self {
        let entities = session.catalog().entities().iter().map(|e| e.id.clone()).collect();
        Recorder {
            exposure: Exposure::new(session),
            metrics: RunMetrics {
                entities,
                ticks: Vec::new(),
            },
            events: Vec::new(),
        }
    }

    fn tick(&mut self, session: &mut Session) -> Vec<SessionEvent> {
        let tick = self.metrics.ticks.len() as u64;
        let events = session.tick();
        for e in &events {
            if let SessionEvent::RoomSpawned { room, .. } = e {
                self.exposure.add_room(session, room);
            }
        }
        self.metrics.ticks.push(TickRecord {
            tick,
            rooms_created: session.museum().len() - 1,
            unique_objects_exposed: self.exposure.seen.len(),
            serendipity_ratio: self.exposure.ratio(),
            relevance: session.relevance().values().to_vec(),
        });
        self.events.extend(events.iter().cloned());
        events
    }

    fn finish(self, session: Session) -> RunResult {
        RunResult {
            metrics: self.metrics,
            events: self.events,
            session,
        }
    }
}

/// Replays `script` over `ticks` logical seconds.
pub fn run_script(
    catalog: Arc<Catalog>,
    params: Params,
    script: &Script,
    seed: u64,
    ticks: u64,
) -> Result<RunResult, RunError> {
    script.check_order()?;
    if let Some((index, step)) = script.0.iter().enumerate().find(|(_, s)| s.tick >= ticks) {
        return Err(RunError::PastEnd {
            index,
            tick: step.tick,
            ticks,
        });
    }
    let mut session = Session::new("script", catalog, params, ClockMode::Logical, seed)?;
    let mut recorder = Recorder::new(&session);
    let mut steps = script.0.iter().enumerate().peekable();
    for t in 0..ticks {
        while let Some((index, step)) = steps.next_if(|(_, s)| s.tick == t) {
            session
                .post(step.event.clone())
                .map_err(|source| RunError::Step { index, source })?;
        }
        recorder.tick(&mut session);
    }
    Ok(recorder.finish(session))
}

/// Synthetic visitors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// Keeps interacting with whatever is closest to one entity, and walks
    /// into rooms about it.
    Focused { target: String },
    /// Opens every closed door it meets, then moves on to a child room.
    Wanderer,
    /// Uniformly random events.
    Random,
}

impl std::str::FromStr for Policy {
    type Err = String;

    /// `focused:<entity>`, `wanderer` or `random`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("focused", target)) if !target.is_empty() => Ok(Policy::Focused {
                target: target.to_string(),
            }),
            None if s == "wanderer" => Ok(Policy::Wanderer),
            None if s == "random" => Ok(Policy::Random),
            _ => Err(format!("unknown policy `{s}`")),
        }
    }
}

fn tool_event(catalog: &Catalog, e: EntityIdx) -> ToolEvent {
    let entity = catalog.entity_at(e);
    match (entity.dimension, entity.century()) {
        (Dimension::Chronos, Some(c)) => ToolEvent::Chronos { from: c, to: c },
        (Dimension::Topos, _) => ToolEvent::Topos {
            target: entity.id.clone(),
        },
        _ => ToolEvent::Thema {
            target: entity.id.clone(),
        },
    }
}

fn focused_event(session: &Session, target: EntityIdx) -> UserEvent {
    let catalog = session.catalog();
    let museum = session.museum();
    let here = museum.room(session.user_room()).expect("user room exists");
    let target_id = &catalog.entity_at(target).id;
    if let Some(child) = here
        .children
        .iter()
        .find(|c| museum.room(c).is_some_and(|r| r.topic.contains(target_id)))
    {
        return UserEvent::EnterRoom { room: child.clone() };
    }
    let nearest = here
        .contents
        .iter()
        .filter_map(|o| catalog.object_idx(&o.object_id).map(|idx| (idx, &o.object_id)))
        .min_by(|a, b| {
            topic_distance(catalog, a.0, &[target])
                .cmp(&topic_distance(catalog, b.0, &[target]))
                .then(a.1.cmp(b.1))
        });
    match nearest {
        Some((idx, id)) if topic_distance(catalog, idx, &[target]).finite() == Some(0) => {
            UserEvent::ConsultDescription { object: id.clone() }
        }
        _ => UserEvent::ToolUse(tool_event(catalog, target)),
    }
}

fn wanderer_event(session: &Session, rng: &mut ChaCha8Rng) -> Option<UserEvent> {
    let room_id = session.user_room();
    let here = session.museum().room(room_id).expect("user room exists");
    let pending = session.pending_approaches();
    if let Some(door) = here
        .closed_doors()
        .find(|&d| !pending.iter().any(|p| p.room == room_id && p.door == d))
    {
        return Some(UserEvent::DoorApproach {
            room: room_id.to_string(),
            door,
        });
    }
    if !pending.is_empty() {
        return None;
    }
    here.children
        .choose(rng)
        .map(|c| UserEvent::EnterRoom { room: c.clone() })
}

fn random_event(session: &Session, rng: &mut ChaCha8Rng) -> Option<UserEvent> {
    let catalog = session.catalog();
    let museum = session.museum();
    let room_id = session.user_room();
    let here = museum.room(room_id).expect("user room exists");
    let object = |rng: &mut ChaCha8Rng| here.contents.choose(rng).map(|o| o.object_id.clone());
    match rng.random_range(0..7) {
        0 => object(rng).map(|object| UserEvent::StandBefore { object }),
        1 => object(rng).map(|object| UserEvent::ConsultDescription { object }),
        2 => object(rng).map(|object| UserEvent::BasketAdd { object }),
        3 => session
            .basket()
            .choose(rng)
            .map(|o| UserEvent::BasketRemove { object: o.clone() }),
        4 => {
            let rooms = museum.adjoining_rooms(room_id).expect("user room exists");
            rooms.choose(rng).map(|r| UserEvent::EnterRoom { room: r.clone() })
        }
        5 => {
            let e = EntityIdx::from_index(rng.random_range(0..catalog.entity_count()));
            Some(UserEvent::ToolUse(tool_event(catalog, e)))
        }
        _ => {
            let door = rng.random_range(0..here.doors.len());
            Some(UserEvent::DoorApproach {
                room: room_id.to_string(),
                door,
            })
        }
    }
}

/// Runs `policy` for `steps` ticks, each preceded by at most one event.
/// `observe` sees the session after every tick.
pub fn run_agent_observed(
    catalog: Arc<Catalog>,
    params: Params,
    policy: &Policy,
    steps: u64,
    seed: u64,
    mut observe: impl FnMut(&Session, &[SessionEvent]),
) -> Result<RunResult, RunError> {
    let target = match policy {
        Policy::Focused { target } => Some(
            catalog
                .entity_idx(target)
                .ok_or_else(|| RunError::UnknownTarget(target.clone()))?,
        ),
        _ => None,
    };
    let mut session = Session::new("agent", catalog, params, ClockMode::Logical, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recorder = Recorder::new(&session);
    for _ in 0..steps {
        let event = match (policy, target) {
            (Policy::Focused { .. }, Some(t)) => Some(focused_event(&session, t)),
            (Policy::Wanderer, _) => wanderer_event(&session, &mut rng),
            _ => random_event(&session, &mut rng),
        };
        if let Some(event) = event {
            session.post(event)?;
        }
        let events = recorder.tick(&mut session);
        observe(&session, &events);
    }
    Ok(recorder.finish(session))
}

pub fn run_agent(
    catalog: Arc<Catalog>,
    params: Params,
    policy: &Policy,
    steps: u64,
    seed: u64,
) -> Result<RunResult, RunError> {
    run_agent_observed(catalog, params, policy, steps, seed, |_, _| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
    Table,
    Csv,
}

const FIXED_COLUMNS: [&str; 4] = ["tick", "rooms_created", "unique_objects_exposed", "serendipity_ratio"];

pub const TABLE_WIDTH: usize = 80;

pub fn emit_metrics(metrics: &RunMetrics, format: MetricsFormat) -> String {
    match format {
        MetricsFormat::Csv => metrics_csv(metrics),
        MetricsFormat::Table => metrics_table(metrics),
    }
}

fn metrics_csv(metrics: &RunMetrics) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = FIXED_COLUMNS
        .iter()
        .copied()
        .chain(metrics.entities.iter().map(String::as_str));
    writer.write_record(header).expect("write to memory");
    for t in &metrics.ticks {
        let mut row = vec![
            t.tick.to_string(),
            t.rooms_created.to_string(),
            t.unique_objects_exposed.to_string(),
            t.serendipity_ratio.to_string(),
        ];
        row.extend(t.relevance.iter().map(f64::to_string));
        writer.write_record(&row).expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

fn truncate(s: &str, width: usize) -> String {
    if s.chars().count() <= width {
        s.to_string()
    } else {
        let mut out: String = s.chars().take(width - 1).collect();
        out.push('~');
        out
    }
}

fn metrics_table(metrics: &RunMetrics) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "rooms created {}  objects exposed {}  serendipity {:.3}",
        metrics.rooms_created(),
        metrics.unique_objects_exposed(),
        metrics.serendipity_ratio()
    );
    let _ = writeln!(
        out,
        "{:>7} {:>6} {:>7} {:>11}  {:<28} {:>8}",
        "tick", "rooms", "exposed", "serendipity", "top entity", "R"
    );
    for t in &metrics.ticks {
        let top = t
            .relevance
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)));
        let (name, r) = match top {
            Some((i, r)) => (truncate(&metrics.entities[i], 28), format!("{r:.4}")),
            None => (String::from("-"), String::from("-")),
        };
        let _ = writeln!(
            out,
            "{:>7} {:>6} {:>7} {:>11.3}  {:<28} {:>8}",
            t.tick, t.rooms_created, t.unique_objects_exposed, t.serendipity_ratio, name, r
        );
    }
    out
}

/// Objects placed anywhere in the museum.
pub fn exposed_objects(session: &Session) -> BTreeSet<String> {
    session
        .museum()
        .rooms()
        .flat_map(|(_, r)| r.contents.iter().map(|o| o.object_id.clone()))
        .collect()
}

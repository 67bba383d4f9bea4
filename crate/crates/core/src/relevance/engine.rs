use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

use super::interaction::{Interaction, Trace, WeightTable};
use crate::data_space::{Catalog, Dimension, EntityIdx, NeighborThresholds};

#[derive(Debug, Error, PartialEq)]
pub enum RelevanceError {
    #[error("interaction has an empty entity set")]
    EmptyEntitySet,
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("timestamp {timestamp} regresses behind clock {clock} or the previous entry")]
    TimestampRegression { timestamp: f64, clock: f64 },
    #[error("weight {actual} does not match the table weight {expected} for {kind}")]
    WeightMismatch {
        kind: super::InteractionType,
        expected: f64,
        actual: f64,
    },
    #[error("invalid engine parameter: {0}")]
    InvalidParam(String),
}

/// Parameters of the relevance update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    /// Weight decay rate, 1/s.
    pub lambda: f64,
    /// Fraction of the gap to the floor removed per tick.
    pub tau: f64,
    /// Diffusion threshold.
    pub s_d: f64,
    /// Fraction of relevance a donor diffuses.
    pub gamma: f64,
    /// Minimum seconds between two diffusions of one entity.
    pub cooldown: f64,
    pub neighbor_thresholds: NeighborThresholds,
    pub weight_table: WeightTable,
    pub r_min: f64,
    pub r_max: f64,
    /// Trace entries below this absolute decayed weight are pruned.
    pub epsilon_prune: f64,
    /// Apply the decrease to every entity instead of only trace-touched ones.
    pub global_decrease: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            lambda: std::f64::consts::LN_2 / 30.0,
            tau: 0.02,
            s_d: 0.7,
            gamma: 0.2,
            cooldown: 10.0,
            neighbor_thresholds: NeighborThresholds::default(),
            weight_table: WeightTable::default(),
            r_min: 0.0,
            r_max: 1.0,
            epsilon_prune: 1e-3,
            global_decrease: false,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<(), RelevanceError> {
        let bad = |msg: &str| Err(RelevanceError::InvalidParam(msg.to_string()));
        let all_finite = [
            self.lambda,
            self.tau,
            self.s_d,
            self.gamma,
            self.cooldown,
            self.r_min,
            self.r_max,
            self.epsilon_prune,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return bad("all rates and bounds must be finite");
        }
        if self.lambda < 0.0 {
            return bad("lambda must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.cooldown < 0.0 {
            return bad("cooldown must be >= 0");
        }
        if self.r_min >= self.r_max {
            return bad("r_min must be below r_max");
        }
        if self.s_d >= self.r_max {
            return bad("s_d must be below r_max");
        }
        if self.epsilon_prune < 0.0 {
            return bad("epsilon_prune must be >= 0");
        }
        let t = self.neighbor_thresholds;
        if t.chronos == 0 || t.topos == 0 || t.thema == 0 {
            return bad("neighbor thresholds must be >= 1");
        }
        Ok(())
    }
}

/// Relevance snapshot keyed by entity id, as persisted and used by goldens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceSnapshot {
    pub clock: f64,
    pub relevance: BTreeMap<String, f64>,
    pub last_diffusion: BTreeMap<String, f64>,
}

/// The engine's model of the user: relevance per entity plus diffusion
/// bookkeeping. Indexed by [`EntityIdx`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceState {
    values: Vec<f64>,
    last_diffusion: Vec<Option<f64>>,
    clock: f64,
}

impl RelevanceState {
    /// Current simulation time: the second the next tick will process.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn get(&self, de: EntityIdx) -> f64 {
        self.values[de.index()]
    }

    pub fn set(&mut self, de: EntityIdx, r: f64) {
        self.values[de.index()] = r;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Moves the clock forward without processing the skipped seconds.
    pub fn skip_ahead(&mut self, secs: f64) {
        assert!(secs >= 0.0, "clock cannot move backwards");
        self.clock += secs;
    }

    pub fn last_diffusion(&self, de: EntityIdx) -> Option<f64> {
        self.last_diffusion[de.index()]
    }

    /// The `k` highest-relevance entities not in `exclude`, ties broken by
    /// ascending id.
    pub fn top_relevant(&self, k: usize, exclude: &HashSet<EntityIdx>) -> Vec<(EntityIdx, f64)> {
        let mut ranked: Vec<(EntityIdx, f64)> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &r)| (EntityIdx::from_index(i), r))
            .filter(|(e, _)| !exclude.contains(e))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }

    pub fn snapshot(&self, catalog: &Catalog) -> RelevanceSnapshot {
        let id = |i: usize| catalog.entity_at(EntityIdx::from_index(i)).id.clone();
        RelevanceSnapshot {
            clock: self.clock,
            relevance: self.values.iter().enumerate().map(|(i, &r)| (id(i), r)).collect(),
            last_diffusion: self
                .last_diffusion
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.map(|t| (id(i), t)))
                .collect(),
        }
    }

    pub fn restore(snapshot: &RelevanceSnapshot, catalog: &Catalog) -> Result<Self, String> {
        let n = catalog.entity_count();
        if snapshot.relevance.len() != n {
            return Err(format!(
                "relevance map has {} entries, catalog has {n} entities",
                snapshot.relevance.len()
            ));
        }
        let mut values = vec![0.0; n];
        for (id, &r) in &snapshot.relevance {
            let idx = catalog.entity_idx(id).ok_or_else(|| format!("unknown entity `{id}`"))?;
            values[idx.index()] = r;
        }
        let mut last_diffusion = vec![None; n];
        for (id, &t) in &snapshot.last_diffusion {
            let idx = catalog.entity_idx(id).ok_or_else(|| format!("unknown entity `{id}`"))?;
            if t > snapshot.clock {
                return Err(format!("last diffusion of `{id}` is ahead of the clock"));
            }
            last_diffusion[idx.index()] = Some(t);
        }
        Ok(Self {
            values,
            last_diffusion,
            clock: snapshot.clock,
        })
    }
}

/// What one tick did, for observers and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickReport {
    /// Second that was processed.
    pub time: f64,
    /// Entities that diffused this tick, ascending.
    pub donors: Vec<EntityIdx>,
    pub pruned: usize,
    /// Whether any relevance value changed.
    pub changed: bool,
}

/// Applies the per-second relevance update for one catalog.
///
/// Neighborhoods and per-entity bounds are resolved once at construction.
#[derive(Debug, Clone)]
pub struct RelevanceEngine {
    params: EngineParams,
    neighbors: Vec<Vec<EntityIdx>>,
    r_min: Vec<f64>,
    r_max: Vec<f64>,
}

impl RelevanceEngine {
    pub fn new(catalog: &Catalog, params: EngineParams) -> Result<Self, RelevanceError> {
        params.validate()?;
        let n = catalog.entity_count();
        let neighbors = (0..n)
            .map(|i| catalog.neighbors_of(EntityIdx::from_index(i), &params.neighbor_thresholds))
            .collect();
        let mut r_min = Vec::with_capacity(n);
        let mut r_max = Vec::with_capacity(n);
        for e in catalog.entities() {
            let lo = e.r_min.unwrap_or(params.r_min);
            let hi = e.r_max.unwrap_or(params.r_max);
            if lo >= hi {
                return Err(RelevanceError::InvalidParam(format!(
                    "entity `{}` ends up with r_min >= r_max",
                    e.id
                )));
            }
            r_min.push(lo);
            r_max.push(hi);
        }
        Ok(Self {
            params,
            neighbors,
            r_min,
            r_max,
        })
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn neighbors(&self, de: EntityIdx) -> &[EntityIdx] {
        &self.neighbors[de.index()]
    }

    pub fn r_min(&self, de: EntityIdx) -> f64 {
        self.r_min[de.index()]
    }

    pub fn r_max(&self, de: EntityIdx) -> f64 {
        self.r_max[de.index()]
    }

    /// Every entity starts at its floor.
    pub fn initial_state(&self) -> RelevanceState {
        RelevanceState {
            values: self.r_min.clone(),
            last_diffusion: vec![None; self.r_min.len()],
            clock: 0.0,
        }
    }

    /// Decayed weight of `interaction` at time `t`.
    pub fn interaction_weight(&self, interaction: &Interaction, t: f64) -> f64 {
        interaction_weight(interaction, t, self.params.lambda)
    }

    /// Validates and appends an interaction. Relevance changes only at the
    /// next tick.
    pub fn record_interaction(
        &self,
        state: &RelevanceState,
        trace: &mut Trace,
        interaction: Interaction,
        catalog: &Catalog,
    ) -> Result<(), RelevanceError> {
        if interaction.entities.is_empty() {
            return Err(RelevanceError::EmptyEntitySet);
        }
        let expected = self.params.weight_table.get(interaction.kind);
        if interaction.weight != expected {
            return Err(RelevanceError::WeightMismatch {
                kind: interaction.kind,
                expected,
                actual: interaction.weight,
            });
        }
        let ts = interaction.timestamp;
        let behind_clock = ts < state.clock - 1.0;
        let behind_trace = trace.last_timestamp().is_some_and(|last| ts < last);
        if !ts.is_finite() || behind_clock || behind_trace {
            return Err(RelevanceError::TimestampRegression {
                timestamp: ts,
                clock: state.clock,
            });
        }
        let mut resolved = Vec::with_capacity(interaction.entities.len());
        for id in &interaction.entities {
            let idx = catalog
                .entity_idx(id)
                .ok_or_else(|| RelevanceError::UnknownEntity(id.clone()))?;
            resolved.push(idx);
        }
        resolved.sort();
        resolved.dedup();
        trace.push(interaction, resolved, catalog.entity_count());
        Ok(())
    }

    /// Processes the second at `state.clock`, then advances the clock by one.
    ///
    /// Order: reinforcement toward the ceiling by every live entry, decrease
    /// toward the floor (once per touched entity), thresholded diffusion,
    /// clamping, and pruning of negligible entries.
    pub fn tick(&self, state: &mut RelevanceState, trace: &mut Trace) -> TickReport {
        let now = state.clock;
        let before = state.values.clone();
        let lambda = self.params.lambda;

        for (_, entry) in trace.live_entries() {
            let i = &entry.interaction;
            if i.timestamp > now {
                continue;
            }
            let w = interaction_weight(i, now, lambda);
            for de in &entry.resolved {
                let k = de.index();
                state.values[k] += w * (self.r_max[k] - state.values[k]);
            }
        }

        let tau = self.params.tau;
        for k in 0..state.values.len() {
            if self.params.global_decrease || trace.touched(EntityIdx::from_index(k)) {
                state.values[k] = tau * self.r_min[k] + (1.0 - tau) * state.values[k];
            }
        }

        let donors = self.propagate(state);

        for (k, r) in state.values.iter_mut().enumerate() {
            *r = r.clamp(self.r_min[k], self.r_max[k]);
        }

        let eps = self.params.epsilon_prune;
        let dead: Vec<usize> = trace
            .live_entries()
            .filter(|(_, e)| {
                e.interaction.timestamp <= now && interaction_weight(&e.interaction, now, lambda).abs() < eps
            })
            .map(|(i, _)| i)
            .collect();
        trace.kill(&dead);

        state.clock = now + 1.0;
        TickReport {
            time: now,
            changed: before != state.values,
            donors,
            pruned: dead.len(),
        }
    }

    /// Diffusion step. Donors are every entity above the diffusion threshold
    /// whose cooldown has elapsed and which has at least one neighbor; all
    /// donations are computed from the pre-step values, so the result does
    /// not depend on iteration order and the total is conserved.
    pub fn propagate(&self, state: &mut RelevanceState) -> Vec<EntityIdx> {
        let now = state.clock;
        let snapshot = &state.values;
        let cooldown = self.params.cooldown;
        let donors: Vec<EntityIdx> = (0..snapshot.len())
            .filter(|&k| {
                snapshot[k] > self.params.s_d
                    && !self.neighbors[k].is_empty()
                    && state.last_diffusion[k].is_none_or(|t| now - t >= cooldown)
            })
            .map(EntityIdx::from_index)
            .collect();
        if donors.is_empty() {
            return donors;
        }
        let mut delta = vec![0.0; snapshot.len()];
        for d in &donors {
            let k = d.index();
            let given = self.params.gamma * snapshot[k];
            let share = given / self.neighbors[k].len() as f64;
            delta[k] -= given;
            for n in &self.neighbors[k] {
                delta[n.index()] += share;
            }
        }
        for (r, dr) in state.values.iter_mut().zip(&delta) {
            *r += dr;
        }
        for d in &donors {
            state.last_diffusion[d.index()] = Some(now);
        }
        donors
    }
}

/// `W * exp(-lambda * (t - t_I))`.
pub fn interaction_weight(interaction: &Interaction, t: f64, lambda: f64) -> f64 {
    interaction.weight * (-lambda * (t - interaction.timestamp)).exp()
}

/// Entities of one dimension ranked by relevance.
pub fn rank_dimension(state: &RelevanceState, catalog: &Catalog, dim: Dimension) -> Vec<(EntityIdx, f64)> {
    let exclude: HashSet<EntityIdx> = (0..catalog.entity_count())
        .map(EntityIdx::from_index)
        .filter(|&e| catalog.dimension_of(e) != dim)
        .collect();
    state.top_relevant(usize::MAX, &exclude)
}

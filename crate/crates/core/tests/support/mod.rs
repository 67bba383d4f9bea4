//! Test-only helpers shared by the integration suites: the sample fixture,
//! random catalogs, and a brute-force relevance model written against the
//! raw catalog JSON rather than the library's indexes.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use museum_core::data_space::{Catalog, DimensionalEntity, HeritageObject, Payload};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub const SAMPLE: &str = include_str!("../../fixtures/sample_catalog.json");

pub fn sample() -> Catalog {
    Catalog::from_json_str(SAMPLE, true)
        .expect("sample fixture loads")
        .catalog
}

pub fn sample_arc() -> Arc<Catalog> {
    Arc::new(sample())
}

fn entity(id: String, payload: Payload) -> DimensionalEntity {
    DimensionalEntity {
        dimension: payload.dimension(),
        label: id.clone(),
        id,
        payload,
        r_min: None,
        r_max: None,
    }
}

/// Random valid catalog: a handful of centuries, territories and concepts,
/// random sparse edges, and objects tagging one to two entities per
/// dimension.
pub fn random_catalog(seed: u64, max_per_dim: usize, objects: usize) -> Catalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = [
        rng.random_range(1..=max_per_dim),
        rng.random_range(1..=max_per_dim),
        rng.random_range(1..=max_per_dim),
    ];
    let mut entities = Vec::new();
    let mut ids: [Vec<String>; 3] = Default::default();
    let first_century = rng.random_range(-3..20);
    for k in 0..n[0] {
        let c = first_century + k as i32 * rng.random_range(1..3);
        let id = format!("chronos.c{c}");
        if !ids[0].contains(&id) {
            ids[0].push(id.clone());
            entities.push(entity(id, Payload::Century(c)));
        }
    }
    for k in 0..n[1] {
        let id = format!("topos.t{k}");
        ids[1].push(id.clone());
        entities.push(entity(id, Payload::Territory(format!("t{k}"))));
    }
    for k in 0..n[2] {
        let id = format!("thema.k{k}");
        ids[2].push(id.clone());
        entities.push(entity(id, Payload::Concept(format!("k{k}"))));
    }
    let edges = |list: &[String], rng: &mut ChaCha8Rng| {
        let mut out = Vec::new();
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                if rng.random_bool(0.35) {
                    out.push((list[i].clone(), list[j].clone()));
                }
            }
        }
        out
    };
    let topos_edges = edges(&ids[1], &mut rng);
    let thema_edges = edges(&ids[2], &mut rng);
    let objects = (0..objects)
        .map(|o| {
            let mut tags = BTreeSet::new();
            for list in &ids {
                let extra = if rng.random_bool(0.25) { 2 } else { 1 };
                for _ in 0..extra {
                    tags.insert(list[rng.random_range(0..list.len())].clone());
                }
            }
            HeritageObject {
                id: format!("ob{o:03}"),
                name: format!("object {o}"),
                description: String::new(),
                image_ref: None,
                entities: tags.into_iter().collect(),
            }
        })
        .collect();
    Catalog::new(entities, objects, topos_edges, thema_edges).expect("generated catalog is valid")
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &order[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Everything the brute-force model needs, read from catalog JSON.
pub struct World {
    pub ids: Vec<String>,
    dimension: Vec<String>,
    century: Vec<Option<i64>>,
    adjacency: BTreeMap<String, Vec<String>>,
    r_bounds: Vec<(Option<f64>, Option<f64>)>,
    pub objects: BTreeMap<String, Vec<String>>,
}

impl World {
    pub fn from_json(text: &str) -> World {
        let v: Value = serde_json::from_str(text).unwrap();
        let mut rows: Vec<&Value> = v["entities"].as_array().unwrap().iter().collect();
        rows.sort_by_key(|e| e["id"].as_str().unwrap().to_string());
        let mut adjacency: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for key in ["topos_edges", "thema_edges"] {
            for pair in v[key].as_array().into_iter().flatten() {
                let a = pair[0].as_str().unwrap().to_string();
                let b = pair[1].as_str().unwrap().to_string();
                adjacency.entry(a.clone()).or_default().push(b.clone());
                adjacency.entry(b).or_default().push(a);
            }
        }
        let objects = v["objects"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| {
                let ents = o["entities"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|e| e.as_str().unwrap().to_string())
                    .collect();
                (o["id"].as_str().unwrap().to_string(), ents)
            })
            .collect();
        World {
            ids: rows.iter().map(|e| e["id"].as_str().unwrap().to_string()).collect(),
            dimension: rows
                .iter()
                .map(|e| e["dimension"].as_str().unwrap().to_lowercase())
                .collect(),
            century: rows.iter().map(|e| e["payload"]["century"].as_i64()).collect(),
            adjacency,
            r_bounds: rows
                .iter()
                .map(|e| (e["r_min"].as_f64(), e["r_max"].as_f64()))
                .collect(),
            objects,
        }
    }

    fn index(&self, id: &str) -> usize {
        self.ids.iter().position(|x| x == id).unwrap()
    }

    /// Hop count by breadth-first search, or century gap.
    pub fn hops(&self, a: usize, b: usize) -> Option<u64> {
        if self.dimension[a] != self.dimension[b] {
            return None;
        }
        if let (Some(x), Some(y)) = (self.century[a], self.century[b]) {
            return Some(x.abs_diff(y));
        }
        let target = &self.ids[b];
        let mut seen = BTreeSet::from([self.ids[a].clone()]);
        let mut queue = VecDeque::from([(self.ids[a].clone(), 0u64)]);
        while let Some((node, d)) = queue.pop_front() {
            if &node == target {
                return Some(d);
            }
            for next in self.adjacency.get(&node).into_iter().flatten() {
                if seen.insert(next.clone()) {
                    queue.push_back((next.clone(), d + 1));
                }
            }
        }
        None
    }

    pub fn neighbors(&self, a: usize, threshold: u64) -> Vec<usize> {
        (0..self.ids.len())
            .filter(|&b| b != a && self.hops(a, b).is_some_and(|d| d <= threshold))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleParams {
    pub lambda: f64,
    pub tau: f64,
    pub s_d: f64,
    pub gamma: f64,
    pub cooldown: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub threshold: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            lambda: std::f64::consts::LN_2 / 30.0,
            tau: 0.02,
            s_d: 0.7,
            gamma: 0.2,
            cooldown: 10.0,
            r_min: 0.0,
            r_max: 1.0,
            threshold: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoggedInteraction {
    pub time: f64,
    pub weight: f64,
    pub entities: Vec<String>,
}

/// Re-evaluates every formula from the full log at every tick: no pruning,
/// no cached neighborhoods. Returns the relevance after each tick.
pub fn oracle_run(world: &World, p: OracleParams, log: &[LoggedInteraction], ticks: usize) -> Vec<Vec<f64>> {
    let n = world.ids.len();
    let lo: Vec<f64> = world.r_bounds.iter().map(|b| b.0.unwrap_or(p.r_min)).collect();
    let hi: Vec<f64> = world.r_bounds.iter().map(|b| b.1.unwrap_or(p.r_max)).collect();
    let mut r = lo.clone();
    let mut last: Vec<Option<f64>> = vec![None; n];
    let mut history = Vec::with_capacity(ticks);
    for tick in 0..ticks {
        let t = tick as f64;
        let active: Vec<&LoggedInteraction> = log.iter().filter(|i| i.time <= t).collect();
        for i in &active {
            let w = i.weight * (-p.lambda * (t - i.time)).exp();
            let distinct: BTreeSet<&String> = i.entities.iter().collect();
            for e in distinct {
                let k = world.index(e);
                r[k] += w * (hi[k] - r[k]);
            }
        }
        let touched: BTreeSet<usize> = active
            .iter()
            .flat_map(|i| i.entities.iter().map(|e| world.index(e)))
            .collect();
        for &k in &touched {
            r[k] = p.tau * lo[k] + (1.0 - p.tau) * r[k];
        }
        let before = r.clone();
        for k in 0..n {
            let ng = world.neighbors(k, p.threshold);
            let ready = last[k].is_none_or(|l| t - l >= p.cooldown);
            if before[k] > p.s_d && ready && !ng.is_empty() {
                let give = p.gamma * before[k];
                r[k] -= give;
                for m in &ng {
                    r[*m] += give / ng.len() as f64;
                }
                last[k] = Some(t);
            }
        }
        for k in 0..n {
            r[k] = r[k].clamp(lo[k], hi[k]);
        }
        history.push(r.clone());
    }
    history
}

/// First tick after which a single entity, hit by an interaction of weight
/// `w` every tick and never receiving diffusion from others, reaches
/// `threshold`. `has_neighbors` switches the donor-side diffusion loss on.
pub fn scalar_crossing_tick(
    p: OracleParams,
    w: f64,
    has_neighbors: bool,
    threshold: f64,
    max_ticks: usize,
) -> Option<u64> {
    let mut r = p.r_min;
    let mut last: Option<f64> = None;
    for tick in 0..max_ticks {
        let t = tick as f64;
        for k in 0..=tick {
            let wk = w * (-p.lambda * (t - k as f64)).exp();
            r += wk * (p.r_max - r);
        }
        r = p.tau * p.r_min + (1.0 - p.tau) * r;
        if has_neighbors && r > p.s_d && last.is_none_or(|l| t - l >= p.cooldown) {
            r -= p.gamma * r;
            last = Some(t);
        }
        r = r.clamp(p.r_min, p.r_max);
        if r >= threshold {
            return Some(tick as u64);
        }
    }
    None
}

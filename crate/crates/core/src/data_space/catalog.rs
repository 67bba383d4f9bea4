use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};
use thiserror::Error;
use tracing::warn;

use super::{Dimension, DimensionalEntity, Distance, EntityIdx, HeritageObject, NeighborThresholds, ObjectIdx};

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed catalog: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(String),
    #[error("duplicate object id `{0}`")]
    DuplicateObject(String),
    #[error("entity `{0}` payload does not match its dimension")]
    PayloadMismatch(String),
    #[error("entity `{0}` has r_min >= r_max or a non-finite bound")]
    InvalidBounds(String),
    #[error("object `{object}` references unknown entity `{entity}`")]
    DanglingReference { object: String, entity: String },
    #[error("object `{object}` has no {dimension} entity")]
    MissingDimension { object: String, dimension: Dimension },
    #[error("{dimension} edge references unknown entity `{id}`")]
    UnknownEdgeEndpoint { dimension: Dimension, id: String },
    #[error("{dimension} edge endpoint `{id}` belongs to another dimension")]
    EdgeDimension { dimension: Dimension, id: String },
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("unknown entity `{0}`")]
    NoSuchEntity(String),
    #[error("unknown object `{0}`")]
    NoSuchObject(String),
    #[error("entities `{a}` and `{b}` belong to different dimensions")]
    DimensionMismatch { a: String, b: String },
}

/// On-disk catalog document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogFile {
    entities: Vec<DimensionalEntity>,
    objects: Vec<HeritageObject>,
    #[serde(default)]
    topos_edges: Vec<(String, String)>,
    #[serde(default)]
    thema_edges: Vec<(String, String)>,
}

/// A parsed catalog plus any non-fatal diagnostics produced while loading.
#[derive(Debug)]
pub struct LoadedCatalog {
    pub catalog: Catalog,
    pub warnings: Vec<String>,
}

/// Validated, immutable collection of entities, objects and ontology graphs.
///
/// All-pairs hop distances are precomputed at construction, so distance and
/// neighborhood queries are table lookups.
#[derive(Debug, Clone)]
pub struct Catalog {
    entities: Vec<DimensionalEntity>,
    entity_index: HashMap<String, EntityIdx>,
    objects: Vec<HeritageObject>,
    object_index: HashMap<String, ObjectIdx>,
    object_entities: Vec<Vec<EntityIdx>>,
    objects_by_entity: Vec<Vec<ObjectIdx>>,
    topos_edges: Vec<(String, String)>,
    thema_edges: Vec<(String, String)>,
    // n x n; UNREACHABLE for disconnected or cross-dimension pairs
    hops: Vec<u32>,
    ceiling: [u32; 3],
    digest: String,
}

/// Reads and validates a catalog file. In non-strict mode unknown keys are
/// logged and ignored.
pub fn load_catalog(path: impl AsRef<Path>, strict: bool) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let loaded = Catalog::from_json_str(&text, strict)?;
    for w in &loaded.warnings {
        warn!(catalog = %path.display(), "{w}");
    }
    Ok(loaded.catalog)
}

impl Catalog {
    pub fn from_json_str(text: &str, strict: bool) -> Result<LoadedCatalog, CatalogError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let unknown = unknown_keys(&value);
        if strict {
            if let Some(first) = unknown.first() {
                return Err(CatalogError::UnknownKey(first.clone()));
            }
        }
        let file: CatalogFile = serde_json::from_value(value)?;
        let catalog = Catalog::build(file)?;
        let warnings = unknown
            .into_iter()
            .map(|k| format!("ignoring unknown key `{k}`"))
            .collect();
        Ok(LoadedCatalog { catalog, warnings })
    }

    /// Builds a catalog from in-memory parts, running the same validation as
    /// the loader.
    pub fn new(
        entities: Vec<DimensionalEntity>,
        objects: Vec<HeritageObject>,
        topos_edges: Vec<(String, String)>,
        thema_edges: Vec<(String, String)>,
    ) -> Result<Catalog, CatalogError> {
        Catalog::build(CatalogFile {
            entities,
            objects,
            topos_edges,
            thema_edges,
        })
    }

    fn build(file: CatalogFile) -> Result<Catalog, CatalogError> {
        let CatalogFile {
            mut entities,
            mut objects,
            topos_edges,
            thema_edges,
        } = file;

        entities.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = entities.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CatalogError::DuplicateEntity(w[0].id.clone()));
        }
        for e in &entities {
            if e.payload.dimension() != e.dimension {
                return Err(CatalogError::PayloadMismatch(e.id.clone()));
            }
            let finite = e.r_min.is_none_or(f64::is_finite) && e.r_max.is_none_or(f64::is_finite);
            let ordered = match (e.r_min, e.r_max) {
                (Some(lo), Some(hi)) => lo < hi,
                _ => true,
            };
            if !finite || !ordered {
                return Err(CatalogError::InvalidBounds(e.id.clone()));
            }
        }
        let entity_index: HashMap<String, EntityIdx> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), EntityIdx::from_index(i)))
            .collect();

        objects.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = objects.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CatalogError::DuplicateObject(w[0].id.clone()));
        }
        let mut object_entities = Vec::with_capacity(objects.len());
        let mut objects_by_entity = vec![Vec::new(); entities.len()];
        for (oi, ob) in objects.iter().enumerate() {
            let mut resolved = Vec::with_capacity(ob.entities.len());
            for id in &ob.entities {
                let idx = *entity_index.get(id).ok_or_else(|| CatalogError::DanglingReference {
                    object: ob.id.clone(),
                    entity: id.clone(),
                })?;
                resolved.push(idx);
            }
            resolved.sort();
            resolved.dedup();
            for dim in Dimension::ALL {
                if !resolved.iter().any(|e| entities[e.index()].dimension == dim) {
                    return Err(CatalogError::MissingDimension {
                        object: ob.id.clone(),
                        dimension: dim,
                    });
                }
            }
            for e in &resolved {
                objects_by_entity[e.index()].push(ObjectIdx::from_index(oi));
            }
            object_entities.push(resolved);
        }

        let n = entities.len();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (dim, edges) in [(Dimension::Topos, &topos_edges), (Dimension::Thema, &thema_edges)] {
            for (a, b) in edges {
                let ia = resolve_endpoint(&entity_index, &entities, dim, a)?;
                let ib = resolve_endpoint(&entity_index, &entities, dim, b)?;
                if ia == ib {
                    return Err(CatalogError::SelfLoop(a.clone()));
                }
                adjacency[ia].push(ib);
                adjacency[ib].push(ia);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }

        let hops = all_pairs_hops(&entities, &adjacency);
        let mut longest = [0u32; 3];
        for i in 0..n {
            let dim = entities[i].dimension.index();
            for j in 0..n {
                let d = hops[i * n + j];
                if d != UNREACHABLE && d > longest[dim] {
                    longest[dim] = d;
                }
            }
        }
        let ceiling = longest.map(|l| l.saturating_add(1));

        let mut catalog = Catalog {
            entities,
            entity_index,
            objects,
            object_index: HashMap::new(),
            object_entities,
            objects_by_entity,
            topos_edges,
            thema_edges,
            hops,
            ceiling,
            digest: String::new(),
        };
        catalog.object_index = catalog
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.clone(), ObjectIdx::from_index(i)))
            .collect();
        catalog.digest = catalog.compute_digest();
        Ok(catalog)
    }

    fn compute_digest(&self) -> String {
        let mut topos = normalized_edges(&self.topos_edges);
        let mut thema = normalized_edges(&self.thema_edges);
        topos.dedup();
        thema.dedup();
        let canonical = CatalogFile {
            entities: self.entities.clone(),
            objects: self.objects.clone(),
            topos_edges: topos,
            thema_edges: thema,
        };
        let bytes = serde_json::to_vec(&canonical).expect("catalog serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// SHA-256 over a canonical rendering of the catalog; used to bind
    /// persisted sessions to the catalog they were created from.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile {
            entities: self.entities.clone(),
            objects: self.objects.clone(),
            topos_edges: self.topos_edges.clone(),
            thema_edges: self.thema_edges.clone(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }

    pub fn entities(&self) -> &[DimensionalEntity] {
        &self.entities
    }

    pub fn objects(&self) -> &[HeritageObject] {
        &self.objects
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn entity_idx(&self, id: &str) -> Option<EntityIdx> {
        self.entity_index.get(id).copied()
    }

    pub fn entity(&self, id: &str) -> Option<&DimensionalEntity> {
        self.entity_idx(id).map(|i| &self.entities[i.index()])
    }

    pub fn entity_at(&self, idx: EntityIdx) -> &DimensionalEntity {
        &self.entities[idx.index()]
    }

    pub fn dimension_of(&self, idx: EntityIdx) -> Dimension {
        self.entities[idx.index()].dimension
    }

    pub fn object_idx(&self, id: &str) -> Option<ObjectIdx> {
        self.object_index.get(id).copied()
    }

    pub fn object(&self, id: &str) -> Option<&HeritageObject> {
        self.object_idx(id).map(|i| &self.objects[i.index()])
    }

    pub fn object_at(&self, idx: ObjectIdx) -> &HeritageObject {
        &self.objects[idx.index()]
    }

    /// Entities of an object, deduplicated, in ascending id order.
    pub fn object_entities(&self, idx: ObjectIdx) -> &[EntityIdx] {
        &self.object_entities[idx.index()]
    }

    pub fn objects_with(&self, entity: EntityIdx) -> &[ObjectIdx] {
        &self.objects_by_entity[entity.index()]
    }

    pub fn topos_edges(&self) -> &[(String, String)] {
        &self.topos_edges
    }

    pub fn thema_edges(&self) -> &[(String, String)] {
        &self.thema_edges
    }

    /// Value substituted for an infinite distance of `dim` when per-dimension
    /// distances are summed: the longest finite shortest path plus one.
    pub fn ceiling(&self, dim: Dimension) -> u32 {
        self.ceiling[dim.index()]
    }

    /// Distance between two entities of the same dimension, by handle.
    /// Callers must ensure both share a dimension.
    pub fn hops(&self, a: EntityIdx, b: EntityIdx) -> Distance {
        debug_assert_eq!(self.dimension_of(a), self.dimension_of(b));
        match self.hops[a.index() * self.entities.len() + b.index()] {
            UNREACHABLE => Distance::Infinite,
            d => Distance::Finite(d),
        }
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<Distance, CatalogError> {
        let ia = self
            .entity_idx(a)
            .ok_or_else(|| CatalogError::NoSuchEntity(a.to_string()))?;
        let ib = self
            .entity_idx(b)
            .ok_or_else(|| CatalogError::NoSuchEntity(b.to_string()))?;
        if self.dimension_of(ia) != self.dimension_of(ib) {
            return Err(CatalogError::DimensionMismatch {
                a: a.to_string(),
                b: b.to_string(),
            });
        }
        Ok(self.hops(ia, ib))
    }

    /// Same-dimension entities within the threshold distance of `de`,
    /// excluding `de` itself, in ascending id order.
    pub fn neighbors_of(&self, de: EntityIdx, thresholds: &NeighborThresholds) -> Vec<EntityIdx> {
        let dim = self.dimension_of(de);
        let limit = thresholds.get(dim);
        (0..self.entities.len())
            .map(EntityIdx::from_index)
            .filter(|&e| e != de && self.dimension_of(e) == dim && self.hops(de, e).within(limit))
            .collect()
    }

    pub fn neighbors(
        &self,
        de: &str,
        thresholds: &NeighborThresholds,
    ) -> Result<Vec<&DimensionalEntity>, CatalogError> {
        let idx = self
            .entity_idx(de)
            .ok_or_else(|| CatalogError::NoSuchEntity(de.to_string()))?;
        Ok(self
            .neighbors_of(idx, thresholds)
            .into_iter()
            .map(|e| self.entity_at(e))
            .collect())
    }

    /// Minimum entity-to-entity distance between two objects in one dimension.
    pub fn dimension_distance(&self, a: ObjectIdx, b: ObjectIdx, dim: Dimension) -> Distance {
        let mut best = Distance::Infinite;
        for &ea in self.object_entities(a) {
            if self.dimension_of(ea) != dim {
                continue;
            }
            for &eb in self.object_entities(b) {
                if self.dimension_of(eb) == dim {
                    best = best.min(self.hops(ea, eb));
                }
            }
        }
        best
    }

    /// Sum over dimensions of the per-dimension minimum distance, with
    /// infinite components replaced by the dimension's ceiling.
    pub fn object_distance_of(&self, a: ObjectIdx, b: ObjectIdx) -> u32 {
        Dimension::ALL
            .iter()
            .map(|&dim| match self.dimension_distance(a, b, dim) {
                Distance::Finite(d) => d,
                Distance::Infinite => self.ceiling(dim),
            })
            .fold(0u32, u32::saturating_add)
    }

    pub fn object_distance(&self, a: &str, b: &str) -> Result<u32, CatalogError> {
        let ia = self
            .object_idx(a)
            .ok_or_else(|| CatalogError::NoSuchObject(a.to_string()))?;
        let ib = self
            .object_idx(b)
            .ok_or_else(|| CatalogError::NoSuchObject(b.to_string()))?;
        Ok(self.object_distance_of(ia, ib))
    }

    /// Entity of `dim` whose id or payload key equals `key`.
    pub fn find_in_dimension(&self, dim: Dimension, key: &str) -> Option<EntityIdx> {
        if let Some(idx) = self.entity_idx(key) {
            if self.dimension_of(idx) == dim {
                return Some(idx);
            }
        }
        self.entities
            .iter()
            .position(|e| e.dimension == dim && e.payload_key() == key)
            .map(EntityIdx::from_index)
    }
}

fn resolve_endpoint(
    index: &HashMap<String, EntityIdx>,
    entities: &[DimensionalEntity],
    dim: Dimension,
    id: &str,
) -> Result<usize, CatalogError> {
    let idx = index.get(id).ok_or_else(|| CatalogError::UnknownEdgeEndpoint {
        dimension: dim,
        id: id.to_string(),
    })?;
    if entities[idx.index()].dimension != dim {
        return Err(CatalogError::EdgeDimension {
            dimension: dim,
            id: id.to_string(),
        });
    }
    Ok(idx.index())
}

fn normalized_edges(edges: &[(String, String)]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = edges
        .iter()
        .map(|(a, b)| {
            if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            }
        })
        .collect();
    out.sort();
    out
}

fn all_pairs_hops(entities: &[DimensionalEntity], adjacency: &[Vec<usize>]) -> Vec<u32> {
    let n = entities.len();
    let mut hops = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        let row = &mut hops[src * n..(src + 1) * n];
        match entities[src].dimension {
            Dimension::Chronos => {
                let c = entities[src].century().unwrap_or_default();
                for (j, e) in entities.iter().enumerate() {
                    if let Some(other) = e.century() {
                        row[j] = c.abs_diff(other);
                    }
                }
            }
            Dimension::Topos | Dimension::Thema => {
                row[src] = 0;
                queue.clear();
                queue.push_back(src);
                while let Some(u) = queue.pop_front() {
                    let next = row[u] + 1;
                    for &v in &adjacency[u] {
                        if row[v] == UNREACHABLE {
                            row[v] = next;
                            queue.push_back(v);
                        }
                    }
                }
            }
        }
    }
    hops
}

const TOP_KEYS: &[&str] = &["entities", "objects", "topos_edges", "thema_edges"];
const ENTITY_KEYS: &[&str] = &["id", "dimension", "label", "payload", "r_min", "r_max"];
const OBJECT_KEYS: &[&str] = &["id", "name", "description", "image_ref", "entities"];

fn unknown_keys(value: &serde_json::Value) -> Vec<String> {
    let mut found = Vec::new();
    let Some(top) = value.as_object() else {
        return found;
    };
    for key in top.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            found.push(key.clone());
        }
    }
    for (section, allowed) in [("entities", ENTITY_KEYS), ("objects", OBJECT_KEYS)] {
        let Some(items) = top.get(section).and_then(|v| v.as_array()) else {
            continue;
        };
        for (i, item) in items.iter().enumerate() {
            let Some(map) = item.as_object() else {
                continue;
            };
            for key in map.keys() {
                if !allowed.contains(&key.as_str()) {
                    found.push(format!("{section}[{i}].{key}"));
                }
            }
        }
    }
    found
}

use crate::data_space::{Catalog, Distance, EntityIdx, ObjectIdx};

/// Candidate objects for a room, grouped by distance to the room topic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartitionedCandidates {
    /// Objects matching every topic entity.
    pub g1: Vec<ObjectIdx>,
    /// One hop off in the worst topic dimension.
    pub g2: Vec<ObjectIdx>,
    /// Two hops off.
    pub g3: Vec<ObjectIdx>,
}

impl PartitionedCandidates {
    pub fn groups(&self) -> [&[ObjectIdx]; 3] {
        [&self.g1, &self.g2, &self.g3]
    }

    pub fn total(&self) -> usize {
        self.g1.len() + self.g2.len() + self.g3.len()
    }
}

/// Worst-case (over topic entities) of the object's closest entity in that
/// entity's dimension. Zero iff the object carries every topic entity.
pub fn topic_distance(catalog: &Catalog, object: ObjectIdx, topic: &[EntityIdx]) -> Distance {
    let own = catalog.object_entities(object);
    topic
        .iter()
        .map(|&t| {
            let dim = catalog.dimension_of(t);
            own.iter()
                .filter(|&&o| catalog.dimension_of(o) == dim)
                .map(|&o| catalog.hops(o, t))
                .min()
                .unwrap_or(Distance::Infinite)
        })
        .max()
        .unwrap_or(Distance::Finite(0))
}

/// Splits the catalog into topic-distance groups 0, 1 and 2; farther objects
/// are dropped. Groups are in ascending object id order.
pub fn partition_objects(topic: &[EntityIdx], catalog: &Catalog) -> PartitionedCandidates {
    let mut parts = PartitionedCandidates::default();
    if topic.is_empty() {
        return parts;
    }
    for i in 0..catalog.object_count() {
        let ob = ObjectIdx::from_index(i);
        match topic_distance(catalog, ob, topic) {
            Distance::Finite(0) => parts.g1.push(ob),
            Distance::Finite(1) => parts.g2.push(ob),
            Distance::Finite(2) => parts.g3.push(ob),
            _ => {}
        }
    }
    parts
}

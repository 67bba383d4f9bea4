//! Room population: candidate partition, quota selection and layout.

mod layout;
mod partition;
mod select;

pub use layout::{
    dist, layout_objects, normalize, spring_system, Layout, LayoutParams, Point, Relaxation, SpringSystem,
};
pub use partition::{partition_objects, topic_distance, PartitionedCandidates};
pub use select::{select_objects, GROUP_QUOTAS, ROOM_CAPACITY};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::data_space::{Catalog, EntityIdx, ObjectIdx};

const LAYOUT_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// An object placed in a room, in unit-square coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub object_id: String,
    pub x: f64,
    pub y: f64,
    /// 1, 2 or 3: topic distance group the object was drawn from, plus one.
    pub source_group: u8,
}

/// Composed contents of one room.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoomContents {
    pub objects: Vec<PlacedObject>,
    /// The spring solver stopped at its iteration cap.
    pub layout_unconverged: bool,
}

impl RoomContents {
    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

/// Partition, select and lay out the objects of a room with topic `topic`.
/// Deterministic in `seed`.
pub fn compose_room(
    topic: &[EntityIdx],
    catalog: &Catalog,
    seed: u64,
    exclusions: &HashSet<ObjectIdx>,
    params: &LayoutParams,
) -> RoomContents {
    let parts = partition_objects(topic, catalog);
    let picks = select_objects(&parts, seed, exclusions);
    if picks.is_empty() {
        return RoomContents::default();
    }
    let objects: Vec<ObjectIdx> = picks.iter().map(|(o, _)| *o).collect();
    let layout = layout_objects(&objects, catalog, seed ^ LAYOUT_SEED_SALT, params);
    RoomContents {
        objects: picks
            .iter()
            .zip(&layout.positions)
            .map(|((o, g), p)| PlacedObject {
                object_id: catalog.object_at(*o).id.clone(),
                x: p[0],
                y: p[1],
                source_group: *g,
            })
            .collect(),
        layout_unconverged: !layout.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_space::{Catalog, Distance, Payload};
    use crate::test_support::{entity, object, sample_catalog};

    fn ids(c: &Catalog, objs: &[ObjectIdx]) -> Vec<String> {
        objs.iter().map(|o| c.object_at(*o).id.clone()).collect()
    }

    /// Thema chain t0 - t1 - t2 - t3 with `counts[k]` objects tagged tk.
    fn chain_catalog(counts: [usize; 4]) -> Catalog {
        let mut entities = vec![
            entity("chronos.c20", Payload::Century(20)),
            entity("topos.here", Payload::Territory("here".into())),
        ];
        for k in 0..4 {
            entities.push(entity(&format!("thema.t{k}"), Payload::Concept(format!("t{k}"))));
        }
        let edges = (0..3)
            .map(|k| (format!("thema.t{k}"), format!("thema.t{}", k + 1)))
            .collect();
        let mut objects = Vec::new();
        for (k, &count) in counts.iter().enumerate() {
            for m in 0..count {
                let t = format!("thema.t{k}");
                objects.push(object(&format!("ob{k}-{m:02}"), &["chronos.c20", "topos.here", &t]));
            }
        }
        Catalog::new(entities, objects, vec![], edges).unwrap()
    }

    #[test]
    fn partition_by_topic_distance() {
        let c = chain_catalog([3, 2, 2, 2]);
        let topic = [c.entity_idx("thema.t0").unwrap()];
        let parts = partition_objects(&topic, &c);
        assert_eq!(ids(&c, &parts.g1), ["ob0-00", "ob0-01", "ob0-02"]);
        assert_eq!(ids(&c, &parts.g2), ["ob1-00", "ob1-01"]);
        assert_eq!(ids(&c, &parts.g3), ["ob2-00", "ob2-01"]);
    }

    #[test]
    fn pair_topic_requires_every_entity_for_group_one() {
        let c = sample_catalog();
        let topic = [
            c.entity_idx("chronos.xix").unwrap(),
            c.entity_idx("thema.lighthouse").unwrap(),
        ];
        let parts = partition_objects(&topic, &c);
        assert_eq!(ids(&c, &parts.g1), ["phare-creach", "phare-petit-minou"]);
        // architecture is one hop from lighthouse and the engraving is XIXth
        assert!(ids(&c, &parts.g2).contains(&"gravure-tour-eiffel".to_string()));
        let creach = c.object_idx("phare-creach").unwrap();
        assert_eq!(topic_distance(&c, creach, &topic), Distance::Finite(0));
    }

    #[test]
    fn full_groups_give_five_five_two() {
        let c = chain_catalog([8, 8, 4, 3]);
        let topic = [c.entity_idx("thema.t0").unwrap()];
        let parts = partition_objects(&topic, &c);
        for seed in 0..20 {
            let picks = select_objects(&parts, seed, &HashSet::new());
            let count = |g| picks.iter().filter(|(_, s)| *s == g).count();
            assert_eq!((count(1), count(2), count(3)), (5, 5, 2));
        }
    }

    #[test]
    fn shortfall_backfills_from_group_one() {
        let c = chain_catalog([20, 0, 0, 0]);
        let topic = [c.entity_idx("thema.t0").unwrap()];
        let picks = select_objects(&partition_objects(&topic, &c), 7, &HashSet::new());
        assert_eq!(picks.len(), 12);
        assert!(picks.iter().all(|(_, g)| *g == 1));
        let unique: HashSet<_> = picks.iter().map(|(o, _)| *o).collect();
        assert_eq!(unique.len(), 12);
    }

    #[test]
    fn small_pool_is_taken_whole() {
        let c = chain_catalog([3, 3, 2, 0]);
        let topic = [c.entity_idx("thema.t0").unwrap()];
        let picks = select_objects(&partition_objects(&topic, &c), 1, &HashSet::new());
        assert_eq!(picks.len(), 8);
    }

    #[test]
    fn exclusions_are_soft() {
        let c = chain_catalog([6, 0, 0, 0]);
        let topic = [c.entity_idx("thema.t0").unwrap()];
        let parts = partition_objects(&topic, &c);
        let some: HashSet<_> = parts.g1[..4].iter().copied().collect();
        let picks = select_objects(&parts, 3, &some);
        assert_eq!(picks.len(), 2);
        assert!(picks.iter().all(|(o, _)| !some.contains(o)));
        let all: HashSet<_> = parts.g1.iter().copied().collect();
        assert_eq!(select_objects(&parts, 3, &all).len(), 6);
    }

    #[test]
    fn single_and_pair_layouts() {
        let c = sample_catalog();
        let a = c.object_idx("viaduc-morlaix").unwrap();
        let b = c.object_idx("phare-creach").unwrap();
        let p = LayoutParams::default();
        assert_eq!(layout_objects(&[a], &c, 1, &p).positions, vec![[0.5, 0.5]]);
        let pair = layout_objects(&[a, b], &c, 1, &p).positions;
        let d = f64::from(c.object_distance_of(a, b)) * p.rest_scale;
        assert!((dist(pair[0], pair[1]) - d).abs() < 1e-12);
        assert_eq!(pair[0][0] + pair[1][0], 1.0);
    }

    #[test]
    fn equal_distances_relax_to_equilateral() {
        let sys = SpringSystem::new(3, vec![0.0, 0.3, 0.3, 0.3, 0.0, 0.3, 0.3, 0.3, 0.0], 1.0);
        let mut pos = vec![[0.1, 0.2], [0.9, 0.4], [0.5, 0.95]];
        let r = sys.relax(&mut pos, &LayoutParams::default());
        assert!(r.converged);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert!((dist(pos[i], pos[j]) - 0.3).abs() < 0.3 * 0.02);
        }
        assert!(r.energies.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn normalization_preserves_distance_ratios() {
        let mut pos = vec![[-3.0, 1.0], [5.0, 2.0], [0.0, -1.0], [2.0, 7.0]];
        let before = pos.clone();
        normalize(&mut pos);
        assert!(pos
            .iter()
            .all(|p| (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])));
        let ratio = dist(pos[0], pos[1]) / dist(before[0], before[1]);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((dist(pos[i], pos[j]) / dist(before[i], before[j]) - ratio).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn compose_is_deterministic_and_flags_empty() {
        let c = sample_catalog();
        let topic = [c.entity_idx("thema.architecture").unwrap()];
        let p = LayoutParams::default();
        let a = compose_room(&topic, &c, 99, &HashSet::new(), &p);
        let b = compose_room(&topic, &c, 99, &HashSet::new(), &p);
        assert_eq!(a, b);
        assert!(!a.is_empty());
        assert!(a
            .objects
            .iter()
            .all(|o| (0.0..=1.0).contains(&o.x) && (0.0..=1.0).contains(&o.y)));

        let isolated = chain_catalog([0, 0, 0, 3]);
        let far = [isolated.entity_idx("thema.t0").unwrap()];
        assert!(compose_room(&far, &isolated, 1, &HashSet::new(), &p).is_empty());
    }
}

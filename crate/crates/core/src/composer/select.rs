use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use super::PartitionedCandidates;
use crate::data_space::ObjectIdx;

pub const ROOM_CAPACITY: usize = 12;

/// Per-group targets: 40/40/20 percent of twelve, rounded to 5/5/2.
pub const GROUP_QUOTAS: [usize; 3] = [5, 5, 2];

/// Chooses up to twelve objects: the group quotas first, then any shortfall
/// backfilled from the leftovers of group 1, then 2, then 3. Picks within a
/// group are uniform under the seeded generator.
///
/// Objects in `exclusions` are skipped unless skipping them would leave the
/// room empty. Returns `(object, group)` pairs with groups numbered 1..=3.
pub fn select_objects(
    parts: &PartitionedCandidates,
    seed: u64,
    exclusions: &HashSet<ObjectIdx>,
) -> Vec<(ObjectIdx, u8)> {
    let filtered: [Vec<ObjectIdx>; 3] = parts
        .groups()
        .map(|g| g.iter().copied().filter(|o| !exclusions.contains(o)).collect());
    let mut pools = if filtered.iter().all(Vec::is_empty) {
        parts.groups().map(<[ObjectIdx]>::to_vec)
    } else {
        filtered
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(ROOM_CAPACITY);
    for (g, pool) in pools.iter_mut().enumerate() {
        let take = GROUP_QUOTAS[g].min(pool.len());
        draw(&mut rng, pool, take, g as u8 + 1, &mut picked);
    }
    for (g, pool) in pools.iter_mut().enumerate() {
        let take = (ROOM_CAPACITY - picked.len()).min(pool.len());
        draw(&mut rng, pool, take, g as u8 + 1, &mut picked);
    }
    picked
}

fn draw(rng: &mut ChaCha8Rng, pool: &mut Vec<ObjectIdx>, take: usize, group: u8, out: &mut Vec<(ObjectIdx, u8)>) {
    if take == 0 {
        return;
    }
    let mut chosen: Vec<usize> = sample(rng, pool.len(), take).into_vec();
    for &i in &chosen {
        out.push((pool[i], group));
    }
    chosen.sort_unstable();
    for &i in chosen.iter().rev() {
        pool.remove(i);
    }
}

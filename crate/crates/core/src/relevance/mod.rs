//! Real-time estimate of the user's centers of interest.
//!
//! Every simulated second the engine reinforces the entities of each live
//! trace entry toward their ceiling, with the entry's weight decaying
//! exponentially since it was recorded; pulls touched entities back toward
//! their floor; and lets entities above the diffusion threshold hand a share
//! of their relevance to same-dimension neighbors, at most once per cooldown.

mod engine;
mod interaction;

pub use engine::{
    interaction_weight, rank_dimension, EngineParams, RelevanceEngine, RelevanceError, RelevanceSnapshot,
    RelevanceState, TickReport,
};
pub use interaction::{Interaction, InteractionType, Trace, WeightTable};

/// Maps relevance onto a red-to-green hue fraction: 0 is red (floor),
/// 0.5 yellow, 1 green (ceiling). Values outside the bounds are clamped.
pub fn relevance_to_color(r: f64, r_min: f64, r_max: f64) -> f64 {
    if r_max <= r_min {
        return 0.0;
    }
    ((r - r_min) / (r_max - r_min)).clamp(0.0, 1.0)
}

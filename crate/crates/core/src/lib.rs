//! Adaptive data-exploration engine built on a growing virtual museum.
//!
//! A catalog of heritage objects is described along three dimensions
//! (time, space, concept). User interactions feed a relevance model over
//! the catalog's dimensional entities; the museum grows new rooms toward
//! whatever the user currently cares about, and each room lays out a dozen
//! objects mixing exact matches with near and far neighbors.

pub mod composer;
pub mod data_space;
pub mod explorer;
pub mod museum;
pub mod params;
pub mod relevance;
pub mod session;

#[cfg(test)]
mod test_support;

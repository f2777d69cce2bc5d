//! Battle episodes from qualitative spatiotemporal histories.
//!
//! An agent plays a small deterministic strategy world, segments its
//! experience into defensive battle episodes, generalizes them analogically
//! into success and failure models, and consults learned limit points when
//! deciding how to defend its cities.

pub mod analogy;
pub mod decision;
pub mod episodes;
pub mod experiment;
pub mod fluents;
pub mod sim;
pub mod spatial;
pub mod symbolic;

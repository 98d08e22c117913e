pub mod classify;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod morphology;
pub mod planner;
pub mod raster;
pub mod synthgen;

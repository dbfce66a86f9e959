//! Paper-sheet interaction engine: recognizes physical paper actions from
//! pose streams and turns them into chart commands.

pub mod chart;
pub mod geometry;
pub mod mapping;
pub mod recognizer;
pub mod scene;
pub mod sim;

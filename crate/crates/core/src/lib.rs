//! Warehouse layout generation: grid layouts, lifelong multi-agent path
//! finding simulation, MILP layout repair, and quality-diversity search with
//! an optional learned surrogate.

pub mod dsage;
pub mod layout;
pub mod par;
pub mod qd;
pub mod repair;
pub mod setups;
pub mod sim;

pub use layout::{Layout, Pos, Scenario, StorageArea, TileType};

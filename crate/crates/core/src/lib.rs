pub mod address;
pub mod cli;
pub mod derivation;
pub mod estimation;
pub mod events;
pub mod grammar;
pub mod models;
pub mod search;
pub mod smoothing;
pub mod stats;
pub mod syntax;

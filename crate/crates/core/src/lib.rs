//! Analytics for tree-based coding-agent runs.

pub mod code_analysis;
pub mod formats;
pub mod journal;
pub mod projection;
pub mod simulator;
pub mod tree_analytics;

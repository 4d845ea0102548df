//! Resistance-rate forecasting and grounded policy retrieval for WHO
//! GLASS-style antimicrobial-resistance surveillance data.

pub mod assistant;
pub mod data;
pub mod eval;
pub mod features;
pub mod models;
pub mod rag;

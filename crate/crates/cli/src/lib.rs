//! Command-line orchestration of the extraction pipelines, dataset
//! evaluation, plotting, and the synthetic benchmark generator.

pub mod config;
pub mod evaluate;
mod font;
pub mod pipeline;
pub mod plots;
pub mod synthcmd;

//! Command-line pipeline and HTTP session service for tidyplan.

pub mod commands;
pub mod io;
pub mod service;

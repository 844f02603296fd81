//! Command line and HTTP session service for the `avlem` library.

pub mod cli;
pub mod commands;
pub mod config;
pub mod service;

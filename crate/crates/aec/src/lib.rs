//! File formats, the HTTP backend and the command-line front end for the
//! `aec-core` extraction pipeline.

pub mod cache;
pub mod cli;
pub mod config;
pub mod fixture;
pub mod http;
pub mod run;

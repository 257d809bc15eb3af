//! Schema-driven event extraction with generated code, deterministic
//! verification and bounded repair.
//!
//! This crate is `no_std` (it needs `alloc`). Model access goes through the
//! [`agents::ChatBackend`] trait; file and network IO live in the `aec` crate.

#![no_std]
extern crate alloc;

pub mod agents;
pub mod eval;
pub mod lang;
pub mod refinement;
pub mod schema;
pub mod text;
pub mod verifier;

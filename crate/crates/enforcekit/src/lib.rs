//! Runtime enforcement toolkit for API usage policies.
//!
//! The crate turns edit-automaton enforcement models into executable
//! runtime enforcers. An enforcement model is a finite-state transducer
//! over begin/end method-call events: each transition names the event it
//! intercepts and the (possibly empty) sequence of actions to emit in its
//! place, which lets a model suppress calls, insert calls, and transparently
//! restore forcibly released resources.
//!
//! Functional areas:
//!
//! - [`model`]: core domain types (signatures, guards, transitions, events).
//! - [`spec_io`]: JSON model/trace/catalog loading and model validation.
//! - [`engine`]: the policy enforcer that rewrites event streams.
//! - [`codegen`]: hook-module source generation from validated models.
//! - [`sim`]: deterministic component-lifecycle and resource simulator,
//!   policy acceptors, scenario corpus runner, and the overhead bench.

pub mod codegen;
pub mod engine;
pub mod model;
pub mod sim;
pub mod spec_io;

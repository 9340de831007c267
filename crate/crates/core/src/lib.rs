//! Exploration planning for GUI testing.
//!
//! The crate builds an action-annotated state-transition graph of an app
//! ([`stg`]), collapses near-duplicate states ([`merging`]), plans a
//! minimum-step walk that covers every reachable state ([`planner`]) and runs
//! live guidance sessions that tell a tester which component to act on next,
//! replanning whenever the tester wanders off the plan ([`guidance`]).
//!
//! Graphs come from a declared-transition descriptor combined with random
//! exploration of a simulated app ([`extraction`], [`sim`]). The [`bench`]
//! module compares guided exploration against depth-first, breadth-first and
//! random agents on the same graphs.

pub mod bench;
pub mod extraction;
pub mod format;
pub mod guidance;
pub mod hierarchy;
pub mod merging;
pub mod planner;
pub mod sim;
pub mod stg;
pub mod synth;

pub use hierarchy::{Bounds, HierarchyNode};
pub use stg::{ActionKind, ComponentKind, ComponentRef, ScreenState, StateId, StgGraph, TriggerAction};

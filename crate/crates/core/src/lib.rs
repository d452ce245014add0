//! Desk-scale simulations of network self-organization.
//!
//! * [`substrate`]: sheets, activity, sparse weight fields, RNG streams, snapshots.
//! * [`selforg`]: retina-to-tectum map formation by Hebbian plasticity under a
//!   fixed synaptic budget, plus topographic order metrics.
//! * [`fragments`]: feature encoding, lateral learning, net-fragment settling,
//!   coherent nets, figure-ground and collective net selection.
//! * [`maplets`]: one-shot model storage and recognition by relaxation of
//!   local correspondence links into a smooth map.
//! * [`harness`]: stimulus generators, config files, oracles and experiment runs.

pub mod error;
pub mod fragments;
pub mod harness;
pub mod maplets;
pub mod selforg;
pub mod substrate;

pub use error::{NetfragError, Result};

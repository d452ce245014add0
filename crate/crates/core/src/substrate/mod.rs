//! Grids, activity, sparse weight fields, counter-based randomness and
//! weight snapshots shared by every engine.

pub mod image;
pub mod rng;
pub mod sheet;
pub mod snapshot;
pub mod weights;

pub use image::Image;
pub use rng::RngStream;
pub use sheet::{ActivityState, Sheet};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};
pub use weights::{init_weight_field, InitMode, Synapse, WeightField};

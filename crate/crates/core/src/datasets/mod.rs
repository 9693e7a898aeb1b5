//! Pattern batches, file formats, synthetic generators, stream ordering and
//! receptive-field tiling.

mod batch;
pub mod idx;
pub mod manifest;
pub mod stream;
pub mod synth;
pub mod tensor_file;
pub mod tile;

pub use batch::PatternBatch;
pub use manifest::{load_manifest, read_manifest, ManifestEntry};
pub use stream::{make_stream, StreamItem, StreamOrder};
pub use synth::{generate, split_domains, DomainTransform, SynthKind, SynthSpec};
pub use tensor_file::{load_tensor_file, read_tensor_file, save_tensor_file, write_tensor_file};
pub use tile::{tile, untile};

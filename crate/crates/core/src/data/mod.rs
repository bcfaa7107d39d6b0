//! Embedding bags on disk, the synthetic dataset generator and model
//! checkpoints.

mod bag;
mod checkpoint;
mod files;
mod synthetic;

pub use bag::EmbeddingBag;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use files::{
    load_bags, load_bags_with, read_embedding_file, write_dataset, write_embedding_file, DatasetManifest,
    EmbeddingRows, ManifestEntry,
};
pub use synthetic::{generate_synthetic, signal_direction, synthesize, SyntheticConfig, STAINS};

//! Location-token fusion: a location encoder, its projection to the token
//! width, token-sequence assembly, a reference encoder block, and analyses of
//! embedding sets.

mod analytics;
mod block;
mod encoder;
mod sequence;

pub use analytics::{
    cosine_disagreement, cosine_distance_map, pairwise_cosine, pca, pca_rgb, EmbeddingRow, EmbeddingSet, Pca, PcaRgb,
};
pub use block::{
    encoder_block_attention, encoder_block_backward, encoder_block_forward, gradient_check, relative_error,
    BlockWeights,
};
pub use encoder::{check_coordinates, encode_location_stub, LocationEncoder, StubLocationEncoder, LOCATION_DIM};
pub use sequence::{
    build_token_sequence, init_registers, patch_count, patchify, positional_ids, project_embedding, LocationToken,
    Projection, SequenceParts, TokenSequence,
};

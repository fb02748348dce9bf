//! Multi-cycle JPEG compression simulator with every intermediate signal and
//! all four noise planes recorded per cycle.

mod checks;
mod cycle;
mod stats;
mod table;

pub use checks::{identity_residuals, verify_trace, IdentityResiduals};
pub use cycle::{
    decode_spectrum, encode_decode_cycle, extract_noises, quantize, run_cycles, spectrum_of,
    CodecOptions, CompressionTrace, CycleRecord, NoiseKind, NoiseSet,
};
pub use stats::{mean_var, per_index_stats, plane_index_stats, IndexStats};
pub use table::{
    natural_to_zigzag, zigzag_to_natural, QuantTable, IJG_LUMINANCE_BASE, NATURAL_TO_ZIGZAG,
    ZIGZAG_TO_NATURAL,
};


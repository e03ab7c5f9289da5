//! Radial sparse attention for video diffusion models.
//!
//! A video latent is a grid of `f` frames with `s` tokens each, flattened
//! frame-major into `n = f * s` tokens. The radial mask keeps a query-key
//! pair when the keys sit in a spatial band whose width halves every time
//! the temporal distance doubles, with the band eventually collapsing to a
//! strided diagonal. Its density is `O(s n log(n / s))` instead of `O(n^2)`.
//!
//! ```
//! use radial_attention::{blockify, count_kept, sparsity, GridShape, PatternSpec};
//!
//! let shape = GridShape::new(64, 64)?;
//! let kept = count_kept(&shape, &PatternSpec::radial())?;
//! assert!(kept < (64u128 * 64).pow(2) / 4);
//!
//! let layout = blockify(&GridShape::new(256, 16)?, &PatternSpec::radial(), 16)?;
//! assert!(sparsity(&layout) > 0.5);
//! # Ok::<(), radial_attention::Error>(())
//! ```
//!
//! Modules:
//! - [`grid`] and [`pattern`]: geometry and the keep predicates of every
//!   mask family;
//! - [`mask`]: lazily evaluated and materialized token masks;
//! - [`blocksparse`]: CSR block layouts, the `.ramk` codec and PGM images;
//! - [`attention`]: reference dense and masked softmax attention;
//! - [`analysis`]: complexity and error bounds, decay fitting, budget
//!   matching;
//! - [`presets`]: latent shapes of published model configurations;
//! - [`oracle`]: brute-force references for small grids.

pub mod analysis;
pub mod attention;
pub mod blocksparse;
mod error;
pub mod grid;
pub mod mask;
pub mod oracle;
pub mod pattern;
pub mod presets;

pub use analysis::DecayParams;
pub use attention::{dense_attention, masked_attention, AttentionInstance, Matrix};
pub use blocksparse::{attention_flops, blockify, sparsity, AttentionFlops, BlockLayout};
pub use error::{Error, Result};
pub use grid::GridShape;
pub use mask::{materialize_mask, KeySelector, PatternMask, TokenMask};
pub use pattern::{count_kept, PatternKind, PatternSpec};

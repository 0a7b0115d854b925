//! Rate-distortion workbench for finite memoryless sources.
//!
//! Three lossy codecs share one reproduction-string machinery:
//!
//! * **GVW** matches each length-`l` block to the nearest of
//!   `floor(2^(l R))` independent random codewords;
//! * **HYB** does the same against the sliding windows of a single random
//!   database of `floor(2^(l R)) + l - 1` symbols;
//! * **LLZ** greedily parses the message into the longest prefixes that
//!   some database window reproduces within a distortion budget.
//!
//! Supporting modules compute `R(D)` and friends ([`rd`]), sample sources
//! and databases reproducibly ([`source`]), search databases
//! ([`matcher`]), choose parameters ([`params`]) and run benchmark grids
//! ([`bench`]).

pub mod bench;
pub mod codec;
pub mod error;
pub mod matcher;
pub mod model;
pub mod params;
pub mod rd;
pub mod source;

pub use codec::{CodecId, CodecParams, EncodeReport, Limits, Settings};
pub use error::{Error, Result};
pub use model::{DistortionSpec, Model, SourceModel};
pub use source::{Seed, SymbolBlock};

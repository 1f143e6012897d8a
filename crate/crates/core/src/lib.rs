//! Error-floor analysis of min-sum decoded LDPC codes: instanton search,
//! computational-tree certification and Monte Carlo validation.

pub mod certify;
pub mod channel;
pub mod code_model;
pub mod decoder;
pub mod montecarlo;
pub mod par;
pub mod record;
pub mod search;
pub mod symmetry;
pub mod tree;

pub use channel::{ChannelKind, ChannelModel};
pub use code_model::ParityCheckCode;
pub use decoder::{min_sum_decode, DecodeTrace, MinSumDecoder};

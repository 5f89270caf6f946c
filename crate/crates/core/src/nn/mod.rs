//! Neural-network building blocks on top of the tape.
//!
//! Parameters live in a [`ParamStore`] owned by the model; each forward
//! pass binds them onto a fresh tape through a [`Ctx`], which records the
//! (parameter, tape node) pairing that the optimizer later consumes.

mod adam;
pub mod checkpoint;
pub mod init;
mod layers;
mod params;

pub use adam::Adam;
pub use layers::{BatchNorm2d, Conv2d, Head, LayerNorm, Linear, Mlp, MultiHeadAttention, TransformerBlock};
pub use params::{Ctx, ParamId, ParamKind, ParamStore};

pub mod cantor;
pub mod error;
pub mod semimeasure;

pub use error::{Error, Result};
pub mod pct;
pub mod mltest;
pub mod fixture;
pub mod reduction;
pub mod export;
pub mod verify;
pub mod cli;

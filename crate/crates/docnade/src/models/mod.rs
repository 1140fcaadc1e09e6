//! The three model families.

pub mod deep;
pub mod docnade;
pub mod lm;

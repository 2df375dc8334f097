pub mod catalog;
pub mod cli;
pub mod error;
pub mod grid;
pub mod kgmap;
pub mod opcalc;
pub mod position;
pub mod triplets;
pub mod verify;

pub use error::{Error, Result};

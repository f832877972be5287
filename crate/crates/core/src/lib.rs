pub mod abd;
pub mod adaptive;
pub mod baselines;
pub mod basis;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod osc1d;
pub mod osc2d;
pub mod surrogate;
pub mod trajectory;

pub use error::{Error, Result};

pub mod analysis;
pub mod cdf;
pub mod cli;
pub mod interval;
pub mod game;
pub mod verifier;

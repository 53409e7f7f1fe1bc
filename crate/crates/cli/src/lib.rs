//! Terminal and HTTP front ends for the construe dialog engine.

pub mod config;
pub mod repl;
pub mod server;

pub use config::Config;

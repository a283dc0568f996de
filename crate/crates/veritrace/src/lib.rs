pub mod chess;
pub mod cli;
pub mod config;
pub mod judge;
pub mod metrics;
pub mod oracle;
pub mod prompts;
pub mod rewards;
pub mod scheduler;
pub mod service;
pub mod sim;
pub mod synth;
pub mod trace;

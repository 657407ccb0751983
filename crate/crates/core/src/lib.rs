pub mod canvas;
pub mod catalog;
pub mod config;
pub mod dataset;
pub mod emitter;
pub mod engine;
pub mod interactions;
pub mod interestingness;
pub mod session;
pub mod synth;
pub mod viewdata;

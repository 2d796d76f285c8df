pub mod fock;
pub mod herald;
pub mod measurement;
pub mod planner;
pub mod poly;
pub mod rng;
pub mod waveform;
mod warning;

pub use warning::Warning;

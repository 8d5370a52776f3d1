//! Characterization, verification and validation of a simulated noisy
//! quantum register.

pub mod dfe;
pub mod error;
pub mod holistic;
pub mod linalg;
pub mod metrics;
pub mod qmodel;
pub mod rb;
pub mod seeding;
pub mod simcore;
pub mod tomo;

pub use error::{QcvvError, Result};

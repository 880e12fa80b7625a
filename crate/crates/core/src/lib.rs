//! Device-free activity and emotion recognition from RF amplitude traces.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! ```text
//! synth_carrier -> gesture envelope -> AWGN at a target SNR      (channel)
//!   -> amplitude detection -> Haar DWT -> SURE shrinkage
//!   -> inverse DWT -> moving average                            (preprocess, wavelet)
//!   -> 100k-sample windows -> mean/std/entropy/zc/avg-derivative (features)
//!   -> z-scored k-NN, k-fold and leave-one-subject-out CV        (knn, cv)
//!   -> gesture -> emotion mapping and sustained-anger alerting   (emotion)
//! ```
//!
//! [`eval`] ties the stages together into SNR sweeps and the driving and
//! conversation scenarios. Every stochastic step is a pure function of a
//! master seed (see [`seed`]); data-parallel loops go through [`exec`] and fall
//! back to sequential execution when the `parallel` feature is disabled.

pub mod channel;
pub mod cv;
pub mod emotion;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod knn;
pub mod preprocess;
pub mod seed;
pub mod trace;
pub mod units;
pub mod wavelet;

pub use error::{Error, Result};
pub use exec::Exec;
pub use trace::{GestureLabel, Trace, TraceMeta};
pub use units::{PowerDbm, PowerMw, SnrDb};

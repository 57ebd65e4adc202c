//! A laboratory for designing collectives of learning agents.
//!
//! The crate models a collective as a worldline of node states and a world
//! utility over it, and provides:
//!
//! * [`worldline`]: worldlines, the clamping operator and Wonderful Life
//!   utility (WLU), `G(w) - G(CL_sigma(w))`.
//! * [`diagnostics`]: intelligence, factoredness degree and (differential)
//!   learnability estimators.
//! * [`agent`]: independent Boltzmann value learners.
//! * [`bar`] and [`leader_follower`]: the two environments.
//! * [`macrolearn`]: correlation-based correction of guessed effect sets.
//! * [`harness`]: seeded, parallel batch experiments with CSV/JSON output.
//!
//! ```
//! use coinlab::bar::{self, AlphaPreset, BarConfig};
//! use coinlab::worldline::WeekState;
//!
//! let cfg = BarConfig::standard(AlphaPreset::SingleNight);
//! let mut picks = vec![0; 168];
//! picks[..6].fill(3);
//! let week = WeekState::from_indices(7, &picks).unwrap();
//! // six agents on the only weighted night is optimal: 7 * 6 / e
//! assert!((bar::world_reward(&week, &cfg) - 42.0 / std::f64::consts::E).abs() < 1e-12);
//! ```

pub mod agent;
pub mod bar;
pub mod diagnose;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod leader_follower;
pub mod macrolearn;
pub mod worldline;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/worldlines.md")]
    mod worldlines {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/bar.md")]
    mod bar {}
    #[doc = include_str!("../../../book/src/leader_follower.md")]
    mod leader_follower {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

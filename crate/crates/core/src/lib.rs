//! Executable model of two password-change protocols over a tampering
//! channel, together with the offline-guessing, denial-of-service and
//! known-key attacks run against each.
//!
//! * [`chang`]: the three-message protocol that leaks.
//! * [`proposed`]: its replacement, with Bob's candidate search.
//! * [`adversary`]: channel model, attacks and their success oracles.
//! * [`harness`]: scenarios, password store, transcripts and reports.

pub mod adversary;
pub mod chang;
pub mod codec;
pub mod dictionary;
pub mod error;
pub mod golden;
pub mod group;
pub mod harness;
pub mod presets;
pub mod proposed;

pub use codec::{Digest, Identity, MaskedBytes, Password};
pub use dictionary::Dictionary;
pub use error::ProtocolError;
pub use group::{Exponent, GroupElement, GroupParams, SharedKey};
pub use presets::Preset;

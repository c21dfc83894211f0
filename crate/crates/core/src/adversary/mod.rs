//! The attacker: a tampering channel and the three attacks, each with an
//! oracle that decides success from ground truth.

mod attacks;
mod channel;

pub use attacks::*;
pub use channel::*;

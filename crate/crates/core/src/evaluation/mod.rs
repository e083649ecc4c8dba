//! Open-world evaluation of the attacks.
//!
//! [`metrics`] defines the verdict partition (tp/fp/tn/fn) and the
//! recall/precision conventions every harness in the crate shares.
//! [`harness`] runs the cross-validated experiment that trains the
//! fingerprinting classifier, simulates background DNS, and scores the
//! wf, ctw and hp attacks on identical verdict inputs. [`sweep`]
//! repeats the experiment along one parameter axis.

pub mod harness;
pub mod metrics;
pub mod sweep;

pub use harness::*;
pub use metrics::*;
pub use sweep::*;

//! Channel assignment for hardware-constrained cognitive-radio secondary users.
//!
//! `M` secondary users opportunistically exploit spectrum holes on `N`
//! licensed channels. Each user owns a single narrow-band transceiver, so it
//! can transmit on at most one available channel per cycle. Channel `j` is
//! idle at user `i` with probability `p[i][j]`, and the goal is to pick, in
//! advance, a set of channels for every user so that the expected total
//! throughput is maximized.
//!
//! The crate provides:
//!
//! - [`instance`]: the availability-matrix data model ([`ProblemInstance`]),
//!   seeded instance generation, and the [`Assignment`] representation with
//!   its derived set views.
//! - [`analytic`]: closed-form throughput of a private channel set, the
//!   greedy increase-of-throughput metric, and the estimated gain from
//!   letting an extra user share an already-assigned channel.
//! - [`assign`]: the non-overlapped greedy assignment, the overlapped greedy
//!   assignment with MAC-overhead feedback, and P-blind round-robin
//!   baselines.
//! - [`mac`]: the contention calculus — per-user contention probability,
//!   contender-count distribution, first-collision probability, the minimal
//!   contention window meeting a collision target, and the protocol overhead
//!   fraction.
//! - [`simulate`]: a cycle-level Monte Carlo simulator of the synchronized
//!   multi-channel MAC protocol, used as the empirical ground truth.
//! - [`oracle`]: brute-force references (exhaustive assignment, subset
//!   enumeration, backoff enumeration) that validate the fast paths.
//!
//! ```
//! use chanshare::instance::generate_instance;
//! use chanshare::assign::assign_nonoverlapped;
//! use chanshare::analytic::throughput_nonoverlapped;
//!
//! let inst = generate_instance(4, 12, 0.7, 0.9, 42).unwrap();
//! let (asg, _trace) = assign_nonoverlapped(&inst);
//! let total: f64 = (0..4)
//!     .map(|i| throughput_nonoverlapped(&inst, &asg.private_sets[i], i).unwrap())
//!     .sum();
//! assert!(total > 3.5 && total <= 4.0);
//! ```

pub mod analytic;
pub mod assign;
pub mod error;
pub mod instance;
pub mod io;
pub mod mac;
pub mod oracle;
pub mod simulate;

pub use analytic::ThroughputEstimate;
pub use assign::{Alg2Config, AssignmentTrace, TraceEntry, TracePhase};
pub use error::{Error, Result};
pub use instance::{Assignment, AssignmentViews, ProblemInstance};
pub use mac::{CollisionEvent, MacConfig, MacDerived};
pub use simulate::{OverheadModel, SimConfig, SimReport};

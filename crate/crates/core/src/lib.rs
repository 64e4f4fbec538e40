//! Slotted model of RTS/CTS contention in multi-hop wireless networks.
//!
//! Each node is a Markov chain whose transition probabilities depend on its
//! neighbors' marginals; the coupled system is solved by fixed-point iteration
//! ([`solver`]). Two references check it: an exact joint chain over all nodes
//! ([`oracle`]) for small topologies, and a slot-synchronous simulator ([`sim`]).

pub mod diagram;
pub mod error;
pub mod io;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod solver;
pub mod space;
pub mod specialize;
mod step;
pub mod symmetry;

pub use diagram::{Edge, Family, LabelKind, TransitionLabel};
pub use error::{Error, Result};
pub use kernel::{evaluate_transition, Evaluation, OmegaPredicate, Triviality};
pub use model::{
    discretize_times, Action, Distribution, NodeId, NodeState, ProtocolParams, Queue, QueueLen, QueueMode, SlotTimes,
    Topology,
};
pub use space::{closure, enumerate_states, StateSpace};
pub use specialize::{specialize_example, Specialization, StateClass};

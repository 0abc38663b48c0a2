//! Exact Markov-chain analysis on small instances: state indexing, transition
//! kernels, stationary distributions, resistances and stochastic potential.

pub mod arborescence;
pub mod kernel;
pub mod resistance;
pub mod state;
pub mod stationary;
pub mod verify;

pub use arborescence::{min_in_arborescence, stochastic_potential, StochasticPotential};
pub use kernel::{transition_row, TransitionModel, INFINITE};
pub use resistance::{least_resistance, recurrent_classes, step_resistance, ResistanceGraph};
pub use state::StateSpace;
pub use stationary::{stationary, stationary_distribution, stationary_exact, AgentLumping};

pub use verify::{epsilon_sweep, verify, SweepRow, Verdict, VerifyReport};

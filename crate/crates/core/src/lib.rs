//! Temporal-epistemic resilience for multi-agent systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`logic`]: formulas with bounded temporal and knowledge operators, a text
//!   parser and the satisfaction relation over finite runs.
//! * [`kripke`]: worlds, valuations, per-agent accessibility relations, the
//!   refine/revise updates and the three-cell grid fixture.
//! * [`resilience`]: recovery/durability metrics and the bounded-horizon monitor.
//! * [`sensing`]: residual exceedance detection, pairwise evidence ledgers and
//!   broadcast conflict resolution.
//! * [`env`]: piecewise-stationary Gaussian bandit and its world catalog.
//! * [`net`]: ring and small-world graphs, TTL flooding, Metropolis-Hastings
//!   consensus.
//! * [`policies`]: discounted UCB, the five learning modes and best-policy
//!   identification.
//! * [`harness`]: configuration, trial execution, aggregation and CSV output.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```text
//! cargo run --example grid_world          # knowledge in the three-cell grid
//! cargo run --example formulas            # parsing, printing, desugaring
//! cargo run --example monitor             # metrics and verdicts on a synthetic run
//! cargo run --example detection           # exceedance window + evidence ledger
//! cargo run --example network             # flooding and consensus accounting
//! cargo run --release --example bandit_modes   # the five modes side by side
//! cargo run --release --example eta_sweep      # recovery vs evidence threshold
//! cargo run --release --example scaling        # ring vs small-world sweep
//! ```

pub mod config;
pub mod env;
pub mod harness;
pub mod kripke;
pub mod logic;
pub mod net;
pub mod policies;
pub mod resilience;
pub mod rng;
pub mod sensing;
pub mod sim;
pub mod trace;

/// 1-based agent identifier, as used in formulas (`K 1`, `E{1,2}`).
pub type AgentId = usize;
/// Dense world index into a [`kripke::KripkeModel`].
pub type WorldId = usize;

//! Simulation of lorries flowing through the France, UK shed and UK berth
//! checks.
//!
//! One model, two operating regimes: Monte Carlo (all delays zero, queues
//! effectively unbounded) and discrete-event variants that add service
//! times and resources (DES0), variable arrival rates (DES1), a restricted
//! shed queue with bypass (DES2), or both (DES3).

pub mod arrivals;
pub mod engine;
pub mod rng;
pub mod station;
pub mod variates;

pub use arrivals::{ArrivalProcess, ArrivalProfile, RateBlock};
pub use engine::{
    run_replication, Exit, Lorry, Mode, RunConfig, RunStats, StationStats, HOURS_PER_YEAR,
};
pub use station::{
    route_through_station, Admission, NetworkConfig, QueueState, StationConfig, StationDraws,
    StationOutcome, StationSpec, UNBOUNDED_QUEUE,
};
pub use variates::{sample_triangular, ServiceTime};

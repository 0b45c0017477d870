//! Depth-camera quadcopter navigation: a kinematic simulator, a ray-traced
//! depth sensor and DQN / Double-DQN training built from scratch.

pub mod config;
pub mod env;
pub mod metrics;
pub mod nn;
pub mod rl;
pub mod sensor;
pub mod vehicle;
pub mod world;

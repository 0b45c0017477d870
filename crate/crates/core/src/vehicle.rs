//! Kinematic quadcopter with discrete actions, noisy actuation, heading hold
//! and emulated attitude for logging.

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Attitude angles are never reported beyond this magnitude.
pub const ROLL_CLAMP_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Degrees in `[0, 360)`.
    pub yaw: f64,
    pub forward_speed: f64,
    pub roll: f64,
    pub pitch: f64,
    /// Integrated heading drift, degrees.
    pub heading_bias: f64,
}

impl QuadState {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64, forward_speed: f64) -> Self {
        Self { x, y, z, yaw: normalize_yaw(yaw), forward_speed, roll: 0.0, pitch: 0.0, heading_bias: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    /// Yaw-rate commands (deg/s) at a fixed forward speed.
    YawRate { rates: Vec<f64>, forward_speed: f64 },
    /// Fixed heading; each roll command (deg) maps to a lateral velocity of
    /// `lateral_gain * roll` m/s, positive roll to the right.
    LateralRoll { rolls: Vec<f64>, lateral_gain: f64, forward_speed: f64 },
}

impl Default for ActionSpace {
    fn default() -> Self {
        ActionSpace::YawRate { rates: vec![-10.0, -5.0, 0.0, 5.0, 10.0], forward_speed: 2.0 }
    }
}

impl ActionSpace {
    pub fn default_lateral_roll() -> Self {
        ActionSpace::LateralRoll { rolls: vec![-15.0, 0.0, 15.0], lateral_gain: 0.1, forward_speed: 2.0 }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    pub fn values(&self) -> &[f64] {
        match self {
            ActionSpace::YawRate { rates, .. } => rates,
            ActionSpace::LateralRoll { rolls, .. } => rolls,
        }
    }

    pub fn forward_speed(&self) -> f64 {
        match *self {
            ActionSpace::YawRate { forward_speed, .. } | ActionSpace::LateralRoll { forward_speed, .. } => {
                forward_speed
            }
        }
    }

    /// Largest command magnitude; 0 for an all-zero action set.
    pub fn max_magnitude(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Commanded yaw rate of an action (0 for lateral-roll actions).
    pub fn yaw_rate(&self, action: usize) -> f64 {
        match self {
            ActionSpace::YawRate { rates, .. } => rates[action],
            ActionSpace::LateralRoll { .. } => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            ActionSpace::YawRate { rates, forward_speed } => {
                if rates.is_empty() {
                    return Err("yaw-rate action set is empty".into());
                }
                if !(*forward_speed >= 0.0) {
                    return Err("forward speed must be non-negative".into());
                }
            }
            ActionSpace::LateralRoll { rolls, forward_speed, .. } => {
                if rolls.len() != 3 {
                    return Err("lateral-roll mode takes exactly 3 roll values".into());
                }
                if !(*forward_speed >= 0.0) {
                    return Err("forward speed must be non-negative".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub yaw_rate_sigma: f64,
    pub speed_sigma: f64,
    /// Constant heading bias rate, deg/s.
    pub heading_drift_rate: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { yaw_rate_sigma: 0.5, speed_sigma: 0.05, heading_drift_rate: 0.2 }
    }
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { yaw_rate_sigma: 0.0, speed_sigma: 0.0, heading_drift_rate: 0.0 };
}

/// Maps degrees to `[0, 360)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if y >= 360.0 {
        0.0
    } else {
        y
    }
}

/// Maps degrees to `(-180, 180]`.
pub fn wrap_angle(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

/// Advances the vehicle by one control interval.
///
/// `extra_yaw_rate` is added to the commanded rate (heading-hold correction).
/// Noise draws are taken only for non-zero sigmas, so a noiseless model
/// never touches `rng`.
pub fn apply_action<R: Rng + ?Sized>(
    state: &QuadState,
    action: usize,
    space: &ActionSpace,
    noise: &NoiseModel,
    extra_yaw_rate: f64,
    dt: f64,
    rng: &mut R,
) -> QuadState {
    let eps_yaw = gaussian(rng, noise.yaw_rate_sigma);
    let eps_speed = gaussian(rng, noise.speed_sigma);
    let drift = noise.heading_drift_rate;
    let mut next = *state;
    next.heading_bias = state.heading_bias + drift * dt;

    match space {
        ActionSpace::YawRate { rates, forward_speed } => {
            let rate = rates[action] + extra_yaw_rate + eps_yaw + drift;
            next.yaw = normalize_yaw(state.yaw + rate * dt);
            next.forward_speed = *forward_speed;
            let speed = (forward_speed + eps_speed).max(0.0);
            let (s, c) = next.yaw.to_radians().sin_cos();
            next.x = state.x + speed * c * dt;
            next.y = state.y + speed * s * dt;
        }
        ActionSpace::LateralRoll { rolls, lateral_gain, forward_speed } => {
            let rate = extra_yaw_rate + eps_yaw + drift;
            next.yaw = if rate == 0.0 { state.yaw } else { normalize_yaw(state.yaw + rate * dt) };
            next.forward_speed = *forward_speed;
            let speed = (forward_speed + eps_speed).max(0.0);
            let lateral = lateral_gain * rolls[action];
            let (s, c) = next.yaw.to_radians().sin_cos();
            // Right of heading is (sin, -cos).
            next.x = state.x + (speed * c + lateral * s) * dt;
            next.y = state.y + (speed * s - lateral * c) * dt;
        }
    }
    next
}

/// Proportional yaw-rate correction toward `target_yaw`.
pub fn heading_hold_correction(state: &QuadState, target_yaw: f64, gain: f64) -> f64 {
    -gain * wrap_angle(state.yaw - target_yaw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCoeffs {
    /// Degrees of roll per deg/s of yaw rate.
    pub k_roll: f64,
    /// Degrees of nose-down pitch per m/s of forward speed.
    pub k_pitch: f64,
}

impl Default for AttitudeCoeffs {
    fn default() -> Self {
        Self { k_roll: 2.0, k_pitch: 2.5 }
    }
}

/// `(roll, pitch)` in degrees implied by a yaw-rate and speed command.
pub fn emulate_attitude(yaw_rate: f64, forward_speed: f64, coeffs: &AttitudeCoeffs) -> (f64, f64) {
    let roll = (coeffs.k_roll * yaw_rate).clamp(-ROLL_CLAMP_DEG, ROLL_CLAMP_DEG);
    let pitch = -coeffs.k_pitch * forward_speed;
    (roll, pitch)
}

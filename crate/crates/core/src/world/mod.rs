//! Static scene description: arena bounds, extruded obstacles, start/goal
//! markers and the geometric queries (collision, ray casting) run against them.
//!
//! The world is 2.5-D. Every obstacle is a vertical extrusion of a box or
//! disc footprint from the ground plane (z = 0) up to its height, and the
//! vehicle flies at a fixed altitude. Arenas are immutable once built.

mod builders;
mod format;
mod geometry;

pub use builders::{build_blocks_arena, build_corridor_arena, build_wobbles_zone, WobblesZone};
pub use format::parse_arena;
pub use geometry::{check_collision, ray_intersect, CollisionInfo, ContactSource, Wall};

use nalgebra::Vector3;
use thiserror::Error;

/// Radius of the spherical vehicle collision body.
pub const VEHICLE_RADIUS: f64 = 0.5;
/// Flying altitude used for arena validation and by default in the vehicle.
pub const DEFAULT_ALTITUDE: f64 = 2.0;
/// Wall height assumed when an arena file omits `wallheight`.
pub const DEFAULT_WALL_HEIGHT: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArenaError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Semantic(String),
    #[error("infeasible layout: {0}")]
    Infeasible(String),
}

impl ArenaError {
    fn semantic(msg: impl Into<String>) -> Self {
        ArenaError::Semantic(msg.into())
    }
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self { xmin, ymin, xmax, ymax }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Box {
        cx: f64,
        cy: f64,
        hx: f64,
        hy: f64,
        height: f64,
    },
    Cylinder {
        cx: f64,
        cy: f64,
        radius: f64,
        height: f64,
    },
}

impl Obstacle {
    pub fn height(&self) -> f64 {
        match *self {
            Obstacle::Box { height, .. } | Obstacle::Cylinder { height, .. } => height,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        match *self {
            Obstacle::Box { cx, cy, .. } | Obstacle::Cylinder { cx, cy, .. } => (cx, cy),
        }
    }

    /// Footprint bounding rectangle `(xmin, ymin, xmax, ymax)`.
    pub fn footprint(&self) -> Bounds {
        match *self {
            Obstacle::Box { cx, cy, hx, hy, .. } => Bounds::new(cx - hx, cy - hy, cx + hx, cy + hy),
            Obstacle::Cylinder { cx, cy, radius, .. } => {
                Bounds::new(cx - radius, cy - radius, cx + radius, cy + radius)
            }
        }
    }

    /// Horizontal distance from `(x, y)` to the footprint; 0 inside.
    pub fn footprint_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Obstacle::Box { cx, cy, hx, hy, .. } => {
                let dx = ((x - cx).abs() - hx).max(0.0);
                let dy = ((y - cy).abs() - hy).max(0.0);
                dx.hypot(dy)
            }
            Obstacle::Cylinder { cx, cy, radius, .. } => ((x - cx).hypot(y - cy) - radius).max(0.0),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            Obstacle::Box { hx, hy, height, .. } => hx > 0.0 && hy > 0.0 && height > 0.0,
            Obstacle::Cylinder { radius, height, .. } => radius > 0.0 && height > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err("obstacle extents must be strictly positive".into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    /// Degrees, counter-clockwise from +x.
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub name: String,
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub start: StartPose,
    pub goal: Waypoint,
    /// Ordered; visited in sequence under checkpoint reward shaping.
    pub checkpoints: Vec<Waypoint>,
    pub wall_height: f64,
    pub boundary_is_wall: bool,
}

impl Arena {
    /// Checks every structural invariant, using the default vehicle body
    /// (radius [`VEHICLE_RADIUS`] at [`DEFAULT_ALTITUDE`]) for the start and
    /// goal clearance tests.
    pub fn validate(&self) -> Result<(), ArenaError> {
        self.validate_with(VEHICLE_RADIUS, DEFAULT_ALTITUDE)
    }

    pub fn validate_with(&self, radius: f64, altitude: f64) -> Result<(), ArenaError> {
        let b = &self.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(ArenaError::semantic("bounds must have positive width and height"));
        }
        if !(self.wall_height > 0.0) {
            return Err(ArenaError::semantic("wall height must be positive"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate().map_err(|m| ArenaError::semantic(format!("obstacle {i}: {m}")))?;
            let f = o.footprint();
            if f.xmin < b.xmin || f.ymin < b.ymin || f.xmax > b.xmax || f.ymax > b.ymax {
                return Err(ArenaError::semantic(format!("obstacle {i} outside bounds")));
            }
        }
        if !(self.goal.radius > 0.0) {
            return Err(ArenaError::semantic("goal radius must be positive"));
        }
        for (i, c) in self.checkpoints.iter().enumerate() {
            if !(c.radius > 0.0) {
                return Err(ArenaError::semantic(format!("checkpoint {i} radius must be positive")));
            }
        }
        if !b.contains(self.start.x, self.start.y) {
            return Err(ArenaError::semantic("start outside bounds"));
        }
        if !b.contains(self.goal.x, self.goal.y) {
            return Err(ArenaError::semantic("goal outside bounds"));
        }
        let at = |x: f64, y: f64| Vector3::new(x, y, altitude);
        if check_collision(self, at(self.start.x, self.start.y), radius).is_some() {
            return Err(ArenaError::semantic("start in collision"));
        }
        if check_collision(self, at(self.goal.x, self.goal.y), radius).is_some() {
            return Err(ArenaError::semantic("goal in collision"));
        }
        Ok(())
    }

    /// Serializes to the line-oriented arena format accepted by [`parse_arena`].
    pub fn to_text(&self) -> String {
        format::serialize(self)
    }

    /// Straight-line distance between start and goal.
    pub fn start_goal_distance(&self) -> f64 {
        (self.goal.x - self.start.x).hypot(self.goal.y - self.start.y)
    }
}

//! Seeded arena generators. Same arguments always yield the same arena.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    check_collision, Arena, ArenaError, Bounds, Obstacle, StartPose, Waypoint, DEFAULT_ALTITUDE,
    VEHICLE_RADIUS,
};

const BLOCKS_HALF_SIZE: f64 = 50.0;
const BLOCK_HEIGHT: f64 = 8.0;
/// Jitter applied to each block center, as a fraction of the grid spacing.
const BLOCKS_JITTER: f64 = 0.1;

/// Rectangular arena with `block_count` boxes on a jittered grid of pitch
/// `spacing`. The start sits at the arena center facing +x.
pub fn build_blocks_arena(spacing: f64, block_count: usize, seed: u64) -> Result<Arena, ArenaError> {
    let diameter = 2.0 * VEHICLE_RADIUS;
    if !(spacing > 2.0 * diameter) {
        return Err(ArenaError::Infeasible(format!(
            "spacing {spacing} must exceed twice the vehicle diameter ({})",
            2.0 * diameter
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = BLOCKS_JITTER * spacing;
    let half_max = (spacing - 2.0 * jitter - diameter) / 2.0;

    let reach = ((BLOCKS_HALF_SIZE - spacing / 2.0) / spacing).floor() as i64;
    let mut sites: Vec<(i64, i64)> = (-reach..=reach)
        .flat_map(|i| (-reach..=reach).map(move |j| (i, j)))
        .filter(|&s| s != (0, 0))
        .collect();
    if block_count > sites.len() {
        return Err(ArenaError::Infeasible(format!(
            "{block_count} blocks requested but only {} grid sites fit at spacing {spacing}",
            sites.len()
        )));
    }
    sites.shuffle(&mut rng);

    let obstacles = sites[..block_count]
        .iter()
        .map(|&(i, j)| Obstacle::Box {
            cx: i as f64 * spacing + rng.random_range(-jitter..=jitter),
            cy: j as f64 * spacing + rng.random_range(-jitter..=jitter),
            hx: rng.random_range(0.5 * half_max..=half_max),
            hy: rng.random_range(0.5 * half_max..=half_max),
            height: BLOCK_HEIGHT,
        })
        .collect();

    // Cell centers sit between grid sites and are always clear of blocks.
    let cell_reach = reach.max(1);
    let (gi, gj) = loop {
        let gi = rng.random_range(-cell_reach..cell_reach);
        let gj = rng.random_range(-cell_reach..cell_reach);
        if gi.abs().max(gj.abs()) >= 1 || reach <= 1 {
            break (gi, gj);
        }
    };
    let goal = Waypoint {
        x: (gi as f64 + 0.5) * spacing,
        y: (gj as f64 + 0.5) * spacing,
        radius: (0.3 * spacing).min(2.0),
    };

    let arena = Arena {
        name: "blocks".into(),
        bounds: Bounds::new(-BLOCKS_HALF_SIZE, -BLOCKS_HALF_SIZE, BLOCKS_HALF_SIZE, BLOCKS_HALF_SIZE),
        obstacles,
        start: StartPose { x: 0.0, y: 0.0, yaw: 0.0 },
        goal,
        checkpoints: vec![],
        wall_height: 10.0,
        boundary_is_wall: true,
    };
    arena.validate()?;
    Ok(arena)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WobblesZone {
    /// Pillars on the start-goal line.
    A,
    /// Staggered short walls.
    B,
    /// Corridor with sharp turns.
    C,
    /// Congested mix with a checkpoint route.
    D,
}

impl WobblesZone {
    pub const ALL: [WobblesZone; 4] = [WobblesZone::A, WobblesZone::B, WobblesZone::C, WobblesZone::D];

    pub fn tag(self) -> char {
        match self {
            WobblesZone::A => 'a',
            WobblesZone::B => 'b',
            WobblesZone::C => 'c',
            WobblesZone::D => 'd',
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "a" => Some(WobblesZone::A),
            "b" => Some(WobblesZone::B),
            "c" => Some(WobblesZone::C),
            "d" => Some(WobblesZone::D),
            _ => None,
        }
    }
}

const WOBBLES_WALL_HEIGHT: f64 = 6.0;

pub fn build_wobbles_zone(zone: WobblesZone, seed: u64) -> Arena {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (zone as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let arena = match zone {
        WobblesZone::A => zone_a(&mut rng),
        WobblesZone::B => zone_b(&mut rng),
        WobblesZone::C => zone_c(&mut rng),
        WobblesZone::D => zone_d(&mut rng),
    };
    debug_assert!(arena.validate().is_ok(), "{:?}", arena.validate());
    arena
}

fn zone_a(rng: &mut ChaCha8Rng) -> Arena {
    let count = rng.random_range(1..=3usize);
    let pitch = 30.0 / (count as f64 + 1.0);
    let obstacles = (1..=count)
        .map(|k| Obstacle::Cylinder {
            cx: 4.0 + pitch * k as f64 + rng.random_range(-1.0..=1.0),
            cy: 0.0,
            radius: rng.random_range(0.8..=1.5),
            height: WOBBLES_WALL_HEIGHT,
        })
        .collect();
    Arena {
        name: "wobbles-a".into(),
        bounds: Bounds::new(0.0, -8.0, 40.0, 8.0),
        obstacles,
        start: StartPose { x: 2.0, y: 0.0, yaw: 0.0 },
        goal: Waypoint { x: 37.0, y: 0.0, radius: 2.0 },
        checkpoints: vec![],
        wall_height: WOBBLES_WALL_HEIGHT,
        boundary_is_wall: true,
    }
}

/// Travel runs along +y so the walls are thin in y and span part of x.
fn zone_b(rng: &mut ChaCha8Rng) -> Arena {
    let count = 3;
    let obstacles = (0..count)
        .map(|k| {
            let side = if k % 2 == 0 { -1.0 } else { 1.0 };
            let hx = rng.random_range(3.0..=4.0);
            Obstacle::Box {
                cx: side * (8.0 - hx),
                cy: 10.0 + 9.0 * k as f64 + rng.random_range(-1.0..=1.0),
                hx,
                hy: 0.3,
                height: rng.random_range(3.0..=4.5),
            }
        })
        .collect();
    Arena {
        name: "wobbles-b".into(),
        bounds: Bounds::new(-8.0, 0.0, 8.0, 40.0),
        obstacles,
        start: StartPose { x: 0.0, y: 2.0, yaw: 90.0 },
        goal: Waypoint { x: 0.0, y: 37.0, radius: 2.0 },
        checkpoints: vec![],
        wall_height: WOBBLES_WALL_HEIGHT,
        boundary_is_wall: true,
    }
}

/// Serpentine corridor: east, north, west, north, east. Every bend is 90 degrees.
fn zone_c(rng: &mut ChaCha8Rng) -> Arena {
    let gap = rng.random_range(4.5..=5.5);
    let obstacles = vec![
        // Divider between the first and second leg, open at the east end.
        Obstacle::Box { cx: 12.0 - gap / 2.0, cy: 10.0, hx: 12.0 - gap / 2.0, hy: 0.5, height: WOBBLES_WALL_HEIGHT },
        // Divider between the second and third leg, open at the west end.
        Obstacle::Box { cx: 18.0 + gap / 2.0, cy: 20.0, hx: 12.0 - gap / 2.0, hy: 0.5, height: WOBBLES_WALL_HEIGHT },
    ];
    let checkpoints = vec![
        Waypoint { x: 27.0, y: 5.0, radius: 2.0 },
        Waypoint { x: 27.0, y: 15.0, radius: 2.0 },
        Waypoint { x: 3.0, y: 15.0, radius: 2.0 },
        Waypoint { x: 3.0, y: 25.0, radius: 2.0 },
    ];
    Arena {
        name: "wobbles-c".into(),
        bounds: Bounds::new(0.0, 0.0, 30.0, 30.0),
        obstacles,
        start: StartPose { x: 3.0, y: 5.0, yaw: 0.0 },
        goal: Waypoint { x: 27.0, y: 25.0, radius: 2.0 },
        checkpoints,
        wall_height: WOBBLES_WALL_HEIGHT,
        boundary_is_wall: true,
    }
}

fn zone_d(rng: &mut ChaCha8Rng) -> Arena {
    let bounds = Bounds::new(0.0, -10.0, 60.0, 10.0);
    let start = StartPose { x: 2.0, y: 0.0, yaw: 0.0 };
    let goal = Waypoint { x: 58.0, y: 0.0, radius: 2.0 };
    let checkpoints: Vec<Waypoint> = (1..=5)
        .map(|k| Waypoint {
            x: 10.0 * k as f64,
            y: if k % 2 == 1 { 5.0 } else { -5.0 } + rng.random_range(-1.0..=1.0),
            radius: 2.0,
        })
        .collect();
    let route: Vec<(f64, f64)> = std::iter::once((start.x, start.y))
        .chain(checkpoints.iter().map(|c| (c.x, c.y)))
        .chain(std::iter::once((goal.x, goal.y)))
        .collect();

    // Keep every footprint at least this far (bounding circle) from the route.
    let clearance = VEHICLE_RADIUS + 1.5;
    let mut obstacles: Vec<Obstacle> = Vec::new();
    let target = 14;
    let mut attempts = 0;
    while obstacles.len() < target && attempts < 10_000 {
        attempts += 1;
        let cx = rng.random_range(4.0..56.0);
        let cy = rng.random_range(-9.0..9.0);
        let candidate = if rng.random_bool(0.5) {
            Obstacle::Cylinder { cx, cy, radius: rng.random_range(0.6..=1.2), height: WOBBLES_WALL_HEIGHT }
        } else {
            let along_x = rng.random_bool(0.5);
            let (long, thin) = (rng.random_range(1.0..=2.5), 0.3);
            let (hx, hy) = if along_x { (long, thin) } else { (thin, long) };
            Obstacle::Box { cx, cy, hx, hy, height: rng.random_range(3.0..=4.5) }
        };
        let f = candidate.footprint();
        if f.xmin < bounds.xmin || f.xmax > bounds.xmax || f.ymin < bounds.ymin || f.ymax > bounds.ymax {
            continue;
        }
        let reach = bounding_radius(&candidate);
        let near_route = route
            .windows(2)
            .any(|w| point_segment_distance((cx, cy), w[0], w[1]) < reach + clearance);
        let overlaps = obstacles.iter().any(|o| {
            let (ox, oy) = o.center();
            (ox - cx).hypot(oy - cy) < bounding_radius(o) + reach + 1.0
        });
        if !near_route && !overlaps {
            obstacles.push(candidate);
        }
    }

    let arena = Arena {
        name: "wobbles-d".into(),
        bounds,
        obstacles,
        start,
        goal,
        checkpoints,
        wall_height: WOBBLES_WALL_HEIGHT,
        boundary_is_wall: true,
    };
    debug_assert!(route_is_clear(&arena, &route));
    arena
}

/// Straight corridor with one box centered on the start-goal line; the
/// smallest navigation task in the builtin set.
pub fn build_corridor_arena() -> Arena {
    Arena {
        name: "corridor".into(),
        bounds: Bounds::new(0.0, -5.0, 30.0, 5.0),
        obstacles: vec![Obstacle::Box { cx: 14.0, cy: 0.0, hx: 1.0, hy: 1.0, height: 6.0 }],
        start: StartPose { x: 2.0, y: 0.0, yaw: 0.0 },
        goal: Waypoint { x: 27.0, y: 0.0, radius: 2.0 },
        checkpoints: vec![],
        wall_height: 6.0,
        boundary_is_wall: true,
    }
}

fn bounding_radius(o: &Obstacle) -> f64 {
    match *o {
        Obstacle::Box { hx, hy, .. } => hx.hypot(hy),
        Obstacle::Cylinder { radius, .. } => radius,
    }
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - (a.0 + t * abx)).hypot(p.1 - (a.1 + t * aby))
}

fn route_is_clear(arena: &Arena, route: &[(f64, f64)]) -> bool {
    route.windows(2).all(|w| {
        (0..=200).all(|k| {
            let t = k as f64 / 200.0;
            let x = w[0].0 + t * (w[1].0 - w[0].0);
            let y = w[0].1 + t * (w[1].1 - w[0].1);
            check_collision(arena, Vector3::new(x, y, DEFAULT_ALTITUDE), VEHICLE_RADIUS).is_none()
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_blocks_arena() {
        let a = build_blocks_arena(10.0, 0, 1).unwrap();
        assert!(a.obstacles.is_empty());
        assert_eq!((a.start.x, a.start.y), (0.0, 0.0));
    }

    #[test]
    fn blocks_are_deterministic() {
        assert_eq!(build_blocks_arena(10.0, 9, 42).unwrap(), build_blocks_arena(10.0, 9, 42).unwrap());
        assert_ne!(build_blocks_arena(10.0, 9, 42).unwrap(), build_blocks_arena(10.0, 9, 43).unwrap());
    }

    #[test]
    fn blocks_keep_pairwise_spacing() {
        let spacing = 10.0;
        let a = build_blocks_arena(spacing, 9, 7).unwrap();
        assert_eq!(a.obstacles.len(), 9);
        let min_gap = spacing - 2.0 * BLOCKS_JITTER * spacing;
        for (i, p) in a.obstacles.iter().enumerate() {
            for q in &a.obstacles[i + 1..] {
                let (px, py) = p.center();
                let (qx, qy) = q.center();
                assert!((px - qx).hypot(py - qy) >= min_gap - 1e-12);
            }
        }
    }

    #[test]
    fn blocks_infeasible() {
        assert!(matches!(build_blocks_arena(10.0, 1000, 0), Err(ArenaError::Infeasible(_))));
        assert!(matches!(build_blocks_arena(1.5, 1, 0), Err(ArenaError::Infeasible(_))));
    }

    #[test]
    fn dense_blocks_validate() {
        for seed in 0..5 {
            let a = build_blocks_arena(4.0, 400, seed).unwrap();
            assert!(a.validate().is_ok());
        }
    }

    #[test]
    fn zone_a_only_cylinders() {
        for seed in 0..20 {
            let a = build_wobbles_zone(WobblesZone::A, seed);
            assert!(!a.obstacles.is_empty());
            for o in &a.obstacles {
                assert!(matches!(o, Obstacle::Cylinder { cy, .. } if *cy == a.start.y));
            }
        }
    }

    #[test]
    fn zone_b_short_walls() {
        for seed in 0..20 {
            let a = build_wobbles_zone(WobblesZone::B, seed);
            for o in &a.obstacles {
                match *o {
                    Obstacle::Box { hx, hy, height, .. } => {
                        assert!(height < a.wall_height);
                        assert!(hy < hx);
                    }
                    _ => panic!("zone B has walls only"),
                }
            }
        }
    }

    #[test]
    fn zone_c_has_two_right_angle_turns() {
        let a = build_wobbles_zone(WobblesZone::C, 3);
        let route: Vec<(f64, f64)> = std::iter::once((a.start.x, a.start.y))
            .chain(a.checkpoints.iter().map(|c| (c.x, c.y)))
            .chain(std::iter::once((a.goal.x, a.goal.y)))
            .collect();
        assert!(route_is_clear(&a, &route));
        let mut sharp = 0;
        for w in route.windows(3) {
            let h0 = (w[1].1 - w[0].1).atan2(w[1].0 - w[0].0);
            let h1 = (w[2].1 - w[1].1).atan2(w[2].0 - w[1].0);
            let mut turn = (h1 - h0).to_degrees().abs();
            if turn > 180.0 {
                turn = 360.0 - turn;
            }
            if turn >= 90.0 - 1e-9 {
                sharp += 1;
            }
        }
        assert!(sharp >= 2);
    }

    #[test]
    fn zone_d_checkpoint_route_is_clear() {
        for seed in 0..10 {
            let a = build_wobbles_zone(WobblesZone::D, seed);
            assert!(!a.checkpoints.is_empty());
            assert!(a.obstacles.iter().any(|o| matches!(o, Obstacle::Cylinder { .. })));
            assert!(a.obstacles.iter().any(|o| matches!(o, Obstacle::Box { .. })));
            let route: Vec<(f64, f64)> = std::iter::once((a.start.x, a.start.y))
                .chain(a.checkpoints.iter().map(|c| (c.x, c.y)))
                .chain(std::iter::once((a.goal.x, a.goal.y)))
                .collect();
            assert!(route_is_clear(&a, &route));
            // Ordered: checkpoints advance toward the goal.
            assert!(a.checkpoints.windows(2).all(|w| w[0].x < w[1].x));
        }
    }

    #[test]
    fn zones_validate() {
        for zone in WobblesZone::ALL {
            for seed in 0..10 {
                build_wobbles_zone(zone, seed).validate().unwrap();
            }
        }
        build_corridor_arena().validate().unwrap();
    }
}

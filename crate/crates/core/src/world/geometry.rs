use nalgebra::Vector3;

use super::{Arena, Obstacle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    XMin,
    XMax,
    YMin,
    YMax,
}

/// What the vehicle touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactSource {
    Obstacle(usize),
    Boundary(Wall),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionInfo {
    /// Point of the vehicle sphere that lies deepest inside the contacted solid.
    pub position: Vector3<f64>,
    /// Unit vector from the contacted surface toward the sphere center.
    pub normal: Vector3<f64>,
    pub penetration_depth: f64,
    pub source: ContactSource,
}

/// Sphere-versus-scene test. Returns the deepest contact, or `None` when the
/// sphere penetrates nothing. Exact tangency does not count as contact.
pub fn check_collision(arena: &Arena, center: Vector3<f64>, radius: f64) -> Option<CollisionInfo> {
    let mut best: Option<(f64, Vector3<f64>, ContactSource)> = None;
    let mut consider = |depth: f64, normal: Vector3<f64>, source: ContactSource| {
        if depth > 0.0 && best.is_none_or(|(d, _, _)| depth > d) {
            best = Some((depth, normal, source));
        }
    };

    for (i, o) in arena.obstacles.iter().enumerate() {
        if let Some((depth, normal)) = sphere_vs_obstacle(o, center, radius) {
            consider(depth, normal, ContactSource::Obstacle(i));
        }
    }

    if arena.boundary_is_wall && center.z - radius < arena.wall_height {
        let b = &arena.bounds;
        let walls = [
            (center.x - b.xmin, Vector3::x(), Wall::XMin),
            (b.xmax - center.x, -Vector3::x(), Wall::XMax),
            (center.y - b.ymin, Vector3::y(), Wall::YMin),
            (b.ymax - center.y, -Vector3::y(), Wall::YMax),
        ];
        for (dist, normal, wall) in walls {
            consider(radius - dist, normal, ContactSource::Boundary(wall));
        }
    }

    best.map(|(depth, normal, source)| CollisionInfo {
        position: center - normal * radius,
        normal,
        penetration_depth: depth,
        source,
    })
}

/// `(depth, normal)` for a sphere against one extruded solid, if penetrating.
fn sphere_vs_obstacle(o: &Obstacle, c: Vector3<f64>, r: f64) -> Option<(f64, Vector3<f64>)> {
    match *o {
        Obstacle::Box { cx, cy, hx, hy, height } => {
            let lo = Vector3::new(cx - hx, cy - hy, 0.0);
            let hi = Vector3::new(cx + hx, cy + hy, height);
            let inside = (0..3).all(|k| c[k] >= lo[k] && c[k] <= hi[k]);
            if inside {
                // Exit through the nearest side or the top; the bottom rests on the ground.
                let exits = [
                    (c.x - lo.x, -Vector3::x()),
                    (hi.x - c.x, Vector3::x()),
                    (c.y - lo.y, -Vector3::y()),
                    (hi.y - c.y, Vector3::y()),
                    (hi.z - c.z, Vector3::z()),
                ];
                let (d, n) = exits
                    .into_iter()
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("non-empty");
                return Some((r + d, n));
            }
            let p = Vector3::new(
                c.x.clamp(lo.x, hi.x),
                c.y.clamp(lo.y, hi.y),
                c.z.clamp(lo.z, hi.z),
            );
            penetrating(c, p, r)
        }
        Obstacle::Cylinder { cx, cy, radius, height } => {
            let (dx, dy) = (c.x - cx, c.y - cy);
            let rho = dx.hypot(dy);
            let in_z = c.z >= 0.0 && c.z <= height;
            if rho <= radius && in_z {
                let side = radius - rho;
                let top = height - c.z;
                if top < side || rho == 0.0 {
                    return Some((r + top, Vector3::z()));
                }
                return Some((r + side, Vector3::new(dx / rho, dy / rho, 0.0)));
            }
            if in_z {
                let gap = rho - radius;
                return (gap < r).then(|| (r - gap, Vector3::new(dx / rho, dy / rho, 0.0)));
            }
            let scale = if rho > radius { radius / rho } else { 1.0 };
            let p = Vector3::new(cx + dx * scale, cy + dy * scale, c.z.clamp(0.0, height));
            penetrating(c, p, r)
        }
    }
}

fn penetrating(c: Vector3<f64>, surface: Vector3<f64>, r: f64) -> Option<(f64, Vector3<f64>)> {
    let v = c - surface;
    let d = v.norm();
    if d < r && d > 0.0 {
        Some((r - d, v / d))
    } else {
        None
    }
}

/// Distance along a unit ray to the first surface hit (obstacles, ground
/// plane, boundary walls), clamped to `max_range`.
pub fn ray_intersect(arena: &Arena, origin: Vector3<f64>, dir: Vector3<f64>, max_range: f64) -> f64 {
    let mut nearest = max_range;
    let mut take = |t: f64| {
        if t > 0.0 && t < nearest {
            nearest = t;
        }
    };

    if dir.z < 0.0 {
        take(-origin.z / dir.z);
    }

    for o in &arena.obstacles {
        if let Some(t) = ray_vs_obstacle(o, origin, dir) {
            take(t);
        }
    }

    if arena.boundary_is_wall {
        let b = &arena.bounds;
        let mut wall = |t: f64| {
            let z = origin.z + t * dir.z;
            if (0.0..=arena.wall_height).contains(&z) {
                take(t);
            }
        };
        if dir.x > 0.0 {
            wall((b.xmax - origin.x) / dir.x);
        } else if dir.x < 0.0 {
            wall((b.xmin - origin.x) / dir.x);
        }
        if dir.y > 0.0 {
            wall((b.ymax - origin.y) / dir.y);
        } else if dir.y < 0.0 {
            wall((b.ymin - origin.y) / dir.y);
        }
    }

    nearest
}

fn ray_vs_obstacle(o: &Obstacle, origin: Vector3<f64>, dir: Vector3<f64>) -> Option<f64> {
    match *o {
        Obstacle::Box { cx, cy, hx, hy, height } => {
            let lo = [cx - hx, cy - hy, 0.0];
            let hi = [cx + hx, cy + hy, height];
            let mut t_near = f64::NEG_INFINITY;
            let mut t_far = f64::INFINITY;
            for k in 0..3 {
                if dir[k] == 0.0 {
                    if origin[k] < lo[k] || origin[k] > hi[k] {
                        return None;
                    }
                    continue;
                }
                let inv = 1.0 / dir[k];
                let (mut t0, mut t1) = ((lo[k] - origin[k]) * inv, (hi[k] - origin[k]) * inv);
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_near = t_near.max(t0);
                t_far = t_far.min(t1);
            }
            if t_near > t_far || t_far <= 0.0 {
                None
            } else if t_near > 0.0 {
                Some(t_near)
            } else {
                Some(t_far)
            }
        }
        Obstacle::Cylinder { cx, cy, radius, height } => {
            let mut hit: Option<f64> = None;
            let mut keep = |t: f64| {
                if t > 0.0 && hit.is_none_or(|h| t < h) {
                    hit = Some(t);
                }
            };
            let (ox, oy) = (origin.x - cx, origin.y - cy);
            let a = dir.x * dir.x + dir.y * dir.y;
            if a > 0.0 {
                let b = 2.0 * (ox * dir.x + oy * dir.y);
                let c = ox * ox + oy * oy - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                        let z = origin.z + t * dir.z;
                        if (0.0..=height).contains(&z) {
                            keep(t);
                        }
                    }
                }
            }
            if dir.z != 0.0 {
                let t = (height - origin.z) / dir.z;
                let (px, py) = (ox + t * dir.x, oy + t * dir.y);
                if px * px + py * py <= radius * radius {
                    keep(t);
                }
            }
            hit
        }
    }
}

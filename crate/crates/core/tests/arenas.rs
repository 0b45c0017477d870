use deeprotor::world::{
    build_blocks_arena, build_corridor_arena, build_wobbles_zone, check_collision, parse_arena, ray_intersect, Arena,
    Obstacle, WobblesZone, DEFAULT_ALTITUDE, VEHICLE_RADIUS,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn builtin_arenas() -> Vec<Arena> {
    let mut v = vec![build_corridor_arena(), build_blocks_arena(10.0, 30, 7).unwrap()];
    for z in [WobblesZone::A, WobblesZone::B, WobblesZone::C, WobblesZone::D] {
        v.push(build_wobbles_zone(z, 3));
    }
    v
}

#[test]
fn builtins_roundtrip_through_text() {
    for a in builtin_arenas() {
        a.validate().unwrap();
        let back = parse_arena(&a.to_text()).unwrap();
        assert_eq!(back, a, "{}", a.name);
    }
}

#[test]
fn corridor_has_one_centered_box() {
    let a = build_corridor_arena();
    assert_eq!(a.obstacles.len(), 1);
    let (cx, cy) = a.obstacles[0].center();
    assert_eq!(cy, a.start.y);
    assert_eq!(cy, a.goal.y);
    assert!(cx > a.start.x && cx < a.goal.x);
    // Straight flight hits the box; the sides have room to pass.
    let f = a.obstacles[0].footprint();
    let clearance = (a.bounds.ymax - f.ymax).min(f.ymin - a.bounds.ymin);
    assert!(clearance > 2.0 * VEHICLE_RADIUS);
    let straight = (0..=100).any(|k| {
        let x = a.start.x + (a.goal.x - a.start.x) * k as f64 / 100.0;
        check_collision(&a, Vector3::new(x, 0.0, DEFAULT_ALTITUDE), VEHICLE_RADIUS).is_some()
    });
    assert!(straight);
}

fn obstacle() -> impl Strategy<Value = Obstacle> {
    prop_oneof![
        (5.0..40.0f64, -20.0..20.0f64, 0.3..3.0f64, 0.3..3.0f64, 0.5..9.0f64)
            .prop_map(|(cx, cy, hx, hy, height)| Obstacle::Box { cx, cy, hx, hy, height }),
        (5.0..40.0f64, -20.0..20.0f64, 0.3..3.0f64, 0.5..9.0f64)
            .prop_map(|(cx, cy, radius, height)| Obstacle::Cylinder { cx, cy, radius, height }),
    ]
}

fn arena_with(obstacles: Vec<Obstacle>, walls: bool) -> Arena {
    let mut a = build_corridor_arena();
    a.name = "random".into();
    a.bounds = deeprotor::world::Bounds::new(-5.0, -25.0, 50.0, 25.0);
    a.start.x = 0.0;
    a.goal.x = 45.0;
    a.obstacles = obstacles;
    a.boundary_is_wall = walls;
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_arenas_roundtrip(obstacles in prop::collection::vec(obstacle(), 0..8), walls: bool) {
        let a = arena_with(obstacles, walls);
        let text = a.to_text();
        let back = parse_arena(&text).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn ray_hit_point_touches_a_surface(obstacles in prop::collection::vec(obstacle(), 1..6), yaw in -60.0..60.0f64, pitch in -20.0..5.0f64) {
        let a = arena_with(obstacles, true);
        let origin = Vector3::new(0.0, 0.0, DEFAULT_ALTITUDE);
        let (y, p) = (yaw.to_radians(), pitch.to_radians());
        let dir = Vector3::new(y.cos() * p.cos(), y.sin() * p.cos(), p.sin());
        let t = ray_intersect(&a, origin, dir, 200.0);
        prop_assert!(t > 0.0 && t <= 200.0);
        // Points strictly before the hit are free; a small sphere at the hit touches something.
        let before = origin + dir * (t * 0.5);
        prop_assert!(check_collision(&a, before, 1e-3).is_none() || t < 1e-2);
        if t < 200.0 {
            let at = origin + dir * t;
            let on_obstacle = a.obstacles.iter().any(|o| o.footprint_distance(at.x, at.y) < 1e-6 && at.z <= o.height() + 1e-6);
            let touching = at.z <= 1e-6 || on_obstacle
                || (at.x - a.bounds.xmin).abs() < 1e-6 || (at.x - a.bounds.xmax).abs() < 1e-6
                || (at.y - a.bounds.ymin).abs() < 1e-6 || (at.y - a.bounds.ymax).abs() < 1e-6;
            prop_assert!(touching, "t = {t}, point = {at:?}");
        }
    }

    #[test]
    fn ray_length_is_monotone_in_range(obstacles in prop::collection::vec(obstacle(), 0..6), yaw in -90.0..90.0f64, range in 1.0..80.0f64) {
        let a = arena_with(obstacles, true);
        let origin = Vector3::new(0.0, 0.0, DEFAULT_ALTITUDE);
        let dir = Vector3::new(yaw.to_radians().cos(), yaw.to_radians().sin(), -0.02).normalize();
        let short = ray_intersect(&a, origin, dir, range);
        let long = ray_intersect(&a, origin, dir, range * 2.0);
        prop_assert!(short <= range);
        prop_assert!(short == long || short == range);
    }
}

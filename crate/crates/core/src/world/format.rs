//! Line-oriented arena text format.
//!
//! ```text
//! # comment
//! arena blocks
//! bounds -50 -50 50 50
//! wallheight 10
//! box 10 0 1 1 5
//! cylinder 0 12 1.5 6
//! start 0 0 0
//! goal 30 30 2
//! checkpoint 10 10 2
//! walls solid
//! ```

use std::fmt::Write as _;

use super::{Arena, ArenaError, Bounds, Obstacle, StartPose, Waypoint, DEFAULT_WALL_HEIGHT};

pub fn parse_arena(text: &str) -> Result<Arena, ArenaError> {
    let mut name = String::from("unnamed");
    let mut bounds = None;
    let mut wall_height = DEFAULT_WALL_HEIGHT;
    let mut obstacles = Vec::new();
    let mut start = None;
    let mut goal = None;
    let mut checkpoints = Vec::new();
    let mut boundary_is_wall = true;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let directive = tokens.next().expect("non-empty line");
        let args: Vec<&str> = tokens.collect();
        let syntax = |message: String| ArenaError::Syntax { line: line_no, message };
        let nums = |expected: usize| -> Result<Vec<f64>, ArenaError> {
            if args.len() != expected {
                return Err(syntax(format!(
                    "`{directive}` takes {expected} values, found {}",
                    args.len()
                )));
            }
            args.iter()
                .map(|a| {
                    a.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| syntax(format!("invalid number `{a}`")))
                })
                .collect()
        };

        match directive {
            "arena" => {
                if args.len() != 1 {
                    return Err(syntax("`arena` takes a single name".into()));
                }
                name = args[0].to_string();
            }
            "bounds" => {
                let v = nums(4)?;
                bounds = Some(Bounds::new(v[0], v[1], v[2], v[3]));
            }
            "wallheight" => wall_height = nums(1)?[0],
            "box" => {
                let v = nums(5)?;
                obstacles.push(Obstacle::Box { cx: v[0], cy: v[1], hx: v[2], hy: v[3], height: v[4] });
            }
            "cylinder" => {
                let v = nums(4)?;
                obstacles.push(Obstacle::Cylinder { cx: v[0], cy: v[1], radius: v[2], height: v[3] });
            }
            "start" => {
                let v = nums(3)?;
                start = Some(StartPose { x: v[0], y: v[1], yaw: v[2] });
            }
            "goal" => {
                let v = nums(3)?;
                goal = Some(Waypoint { x: v[0], y: v[1], radius: v[2] });
            }
            "checkpoint" => {
                let v = nums(3)?;
                checkpoints.push(Waypoint { x: v[0], y: v[1], radius: v[2] });
            }
            "walls" => {
                boundary_is_wall = match args.as_slice() {
                    ["solid"] => true,
                    ["open"] => false,
                    _ => return Err(syntax("`walls` takes `solid` or `open`".into())),
                };
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    let arena = Arena {
        name,
        bounds: bounds.ok_or_else(|| ArenaError::semantic("bounds required"))?,
        obstacles,
        start: start.ok_or_else(|| ArenaError::semantic("start required"))?,
        goal: goal.ok_or_else(|| ArenaError::semantic("goal required"))?,
        checkpoints,
        wall_height,
        boundary_is_wall,
    };
    arena.validate()?;
    Ok(arena)
}

pub(super) fn serialize(arena: &Arena) -> String {
    let mut out = String::new();
    let b = &arena.bounds;
    // `{}` on f64 is the shortest representation that parses back exactly.
    let _ = writeln!(out, "arena {}", arena.name);
    let _ = writeln!(out, "bounds {} {} {} {}", b.xmin, b.ymin, b.xmax, b.ymax);
    let _ = writeln!(out, "wallheight {}", arena.wall_height);
    if !arena.boundary_is_wall {
        let _ = writeln!(out, "walls open");
    }
    for o in &arena.obstacles {
        let _ = match *o {
            Obstacle::Box { cx, cy, hx, hy, height } => {
                writeln!(out, "box {cx} {cy} {hx} {hy} {height}")
            }
            Obstacle::Cylinder { cx, cy, radius, height } => {
                writeln!(out, "cylinder {cx} {cy} {radius} {height}")
            }
        };
    }
    let s = &arena.start;
    let _ = writeln!(out, "start {} {} {}", s.x, s.y, s.yaw);
    let g = &arena.goal;
    let _ = writeln!(out, "goal {} {} {}", g.x, g.y, g.radius);
    for c in &arena.checkpoints {
        let _ = writeln!(out, "checkpoint {} {} {}", c.x, c.y, c.radius);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "bounds -20 -20 20 20\nstart 0 0 0\ngoal 15 0 1\nbox 10 0 1 1 5\n";

    #[test]
    fn minimal_file() {
        let a = parse_arena(MINIMAL).unwrap();
        assert_eq!(a.obstacles, vec![Obstacle::Box { cx: 10.0, cy: 0.0, hx: 1.0, hy: 1.0, height: 5.0 }]);
        assert!(a.checkpoints.is_empty());
        assert!(a.boundary_is_wall);
        assert_eq!(a.wall_height, DEFAULT_WALL_HEIGHT);
    }

    #[test]
    fn missing_goal() {
        let err = parse_arena("bounds -20 -20 20 20\nstart 0 0 0\n").unwrap_err();
        assert_eq!(err, ArenaError::Semantic("goal required".into()));
    }

    #[test]
    fn start_inside_box() {
        let err = parse_arena("bounds -20 -20 20 20\nstart 0 0 0\ngoal 15 0 1\nbox 0 0 1 1 5\n")
            .unwrap_err();
        assert_eq!(err, ArenaError::Semantic("start in collision".into()));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_arena("bounds 0 0 10 10\n# ok\nbox 1 2 x 1 1\n").unwrap_err();
        assert!(matches!(err, ArenaError::Syntax { line: 3, .. }), "{err}");
        let err = parse_arena("frobnicate 1\n").unwrap_err();
        assert!(matches!(err, ArenaError::Syntax { line: 1, .. }));
    }

    #[test]
    fn obstacle_outside_bounds() {
        let err = parse_arena("bounds -20 -20 20 20\nstart 0 0 0\ngoal 15 0 1\nbox 19.5 0 1 1 5\n")
            .unwrap_err();
        assert!(matches!(err, ArenaError::Semantic(ref m) if m.contains("outside bounds")));
    }

    #[test]
    fn comments_and_checkpoints_keep_order() {
        let a = parse_arena(
            "arena demo # trailing\nbounds -20 -20 20 20\nstart 0 0 90\ngoal 15 0 1\n\
             checkpoint 5 5 1\ncheckpoint 2 2 1\nwalls open\n",
        )
        .unwrap();
        assert_eq!(a.name, "demo");
        assert_eq!(a.checkpoints[0].x, 5.0);
        assert_eq!(a.checkpoints[1].x, 2.0);
        assert!(!a.boundary_is_wall);
        assert_eq!(parse_arena(&a.to_text()).unwrap(), a);
    }
}

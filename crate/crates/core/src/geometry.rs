//! Pitch constants and the geometric foul features: distance to goal and
//! angle to goal.
//!
//! All coordinates follow the StatsBomb convention: a 120 x 80 pitch with
//! the origin at the defending team's left corner flag and the attacked
//! goal centered at (120, 40). Feature extraction always works in the
//! possession team's attacking frame, so both geometric features target
//! the goal at x = 120.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub const PITCH_LENGTH: f64 = 120.0;
pub const PITCH_WIDTH: f64 = 80.0;
/// Goal mouth spans (120, 36)..(120, 44): 8 pitch units wide.
pub const GOAL_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Scalar> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Point { x, y }
    }

    pub fn in_bounds(&self) -> bool {
        self.x >= F::zero()
            && self.x <= F::from_f64_lit(PITCH_LENGTH)
            && self.y >= F::zero()
            && self.y <= F::from_f64_lit(PITCH_WIDTH)
    }
}

/// Pitch geometry for one attacking direction. `goal_center` is the middle
/// of the attacked goal mouth, `post_low`/`post_high` its posts.
#[derive(Debug, Clone, Copy)]
pub struct PitchSpec<F> {
    pub length: F,
    pub width: F,
    pub goal_center: Point<F>,
    pub post_low: Point<F>,
    pub post_high: Point<F>,
}

impl<F: Scalar> Default for PitchSpec<F> {
    fn default() -> Self {
        let length = F::from_f64_lit(PITCH_LENGTH);
        let width = F::from_f64_lit(PITCH_WIDTH);
        let mid = width * F::half();
        let half_goal = F::from_f64_lit(GOAL_HALF_WIDTH);
        PitchSpec {
            length,
            width,
            goal_center: Point::new(length, mid),
            post_low: Point::new(length, mid - half_goal),
            post_high: Point::new(length, mid + half_goal),
        }
    }
}

/// How the angle-to-goal feature is measured.
///
/// `Subtended` is the angle at the foul location between the two posts,
/// the usual expected-goals geometry. `Bearing` is the absolute angle
/// between the ray to the goal center and the pitch's long axis; it is
/// kept behind a flag for sensitivity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    #[default]
    Subtended,
    Bearing,
}

impl AngleMode {
    pub fn parse(s: &str) -> Option<AngleMode> {
        match s {
            "subtended" => Some(AngleMode::Subtended),
            "bearing" => Some(AngleMode::Bearing),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AngleMode::Subtended => "subtended",
            AngleMode::Bearing => "bearing",
        }
    }
}

/// Reflect a point through the pitch center, flipping the attacking
/// direction. Involution: `mirror(mirror(p)) == p`.
pub fn mirror<F: Scalar>(p: Point<F>) -> Point<F> {
    Point::new(F::from_f64_lit(PITCH_LENGTH) - p.x, F::from_f64_lit(PITCH_WIDTH) - p.y)
}

/// Tuple form of [`mirror`] for raw event coordinates.
pub fn mirror_xy(p: (f64, f64)) -> (f64, f64) {
    (PITCH_LENGTH - p.0, PITCH_WIDTH - p.1)
}

/// Clamp raw event coordinates into pitch bounds. Open-data locations
/// occasionally sit a fraction outside the lines.
pub fn clamp_pitch(p: (f64, f64)) -> (f64, f64) {
    (p.0.clamp(0.0, PITCH_LENGTH), p.1.clamp(0.0, PITCH_WIDTH))
}

/// Euclidean distance from `p` (attacking frame) to the attacked goal
/// center at (120, 40).
pub fn distance_to_goal<F: Scalar>(p: Point<F>) -> F {
    let spec = PitchSpec::<F>::default();
    let dx = spec.goal_center.x - p.x;
    let dy = spec.goal_center.y - p.y;
    (dx * dx + dy * dy).sqrt()
}

/// Angle-to-goal feature in radians, see [`AngleMode`].
///
/// In subtended mode a point on the goal line between the posts sees the
/// whole goal mouth; the convention there is pi. On the goal line outside
/// the posts both rays are collinear and the angle collapses to zero, so
/// the output range is [0, pi] for subtended mode and [0, pi/2] for
/// bearing mode.
pub fn angle_to_goal<F: Scalar>(p: Point<F>, mode: AngleMode) -> F {
    let spec = PitchSpec::<F>::default();
    match mode {
        AngleMode::Subtended => {
            let on_goal_line_between_posts =
                p.x == spec.length && p.y >= spec.post_low.y && p.y <= spec.post_high.y;
            if on_goal_line_between_posts {
                return F::from_f64_lit(std::f64::consts::PI);
            }
            let u = (spec.post_low.x - p.x, spec.post_low.y - p.y);
            let v = (spec.post_high.x - p.x, spec.post_high.y - p.y);
            let dot = u.0 * v.0 + u.1 * v.1;
            let cross = u.0 * v.1 - u.1 * v.0;
            // atan2 of |cross| keeps the angle in (0, pi] regardless of
            // which side of the goal line the point sits on.
            cross.abs().atan2(dot)
        }
        AngleMode::Bearing => {
            let dx = spec.goal_center.x - p.x;
            let dy = (spec.goal_center.y - p.y).abs();
            if dx == F::zero() && dy == F::zero() {
                return F::zero();
            }
            dy.atan2(dx.abs())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror(Point::new(0.0, 0.0)), Point::new(120.0, 80.0));
        assert_eq!(mirror(Point::new(60.0, 40.0)), Point::new(60.0, 40.0));
        assert_eq!(mirror(Point::new(30.0, 20.0)), Point::new(90.0, 60.0));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_goal(Point::new(120.0, 40.0)), 0.0);
        assert_eq!(distance_to_goal(Point::new(108.0, 40.0)), 12.0);
        // sqrt(60^2 + 40^2)
        let d = distance_to_goal(Point::new(60.0, 0.0));
        assert!((d - (60.0f64 * 60.0 + 40.0 * 40.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn subtended_on_center_line_matches_closed_form() {
        // At (108, 40) the goal mouth subtends 2*atan(4/12).
        let a = angle_to_goal(Point::new(108.0, 40.0), AngleMode::Subtended);
        assert!((a - 2.0 * (4.0f64 / 12.0).atan()).abs() < 1e-12);
        assert!((a - 0.643501).abs() < 1e-6);
    }

    #[test]
    fn bearing_examples() {
        assert_eq!(angle_to_goal(Point::new(108.0, 40.0), AngleMode::Bearing), 0.0);
        // 45 degrees from (80, 0): dx = 40, dy = 40.
        let a = angle_to_goal(Point::new(80.0, 0.0), AngleMode::Bearing);
        assert!((a - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_goal_line_convention() {
        assert_eq!(angle_to_goal(Point::new(120.0, 40.0), AngleMode::Subtended), PI);
        assert_eq!(angle_to_goal(Point::new(120.0, 36.0), AngleMode::Subtended), PI);
        // On the goal line outside the posts the rays to both posts are
        // collinear, so the angle collapses to zero.
        assert_eq!(angle_to_goal(Point::new(120.0, 50.0), AngleMode::Subtended), 0.0);
        // Just off the line the angle is small but positive.
        let a = angle_to_goal(Point::new(119.5, 50.0), AngleMode::Subtended);
        assert!(a > 0.0 && a < PI / 2.0);
    }

    #[test]
    fn works_in_f32() {
        let a = angle_to_goal(Point::new(108.0f32, 40.0), AngleMode::Subtended);
        assert!((a - 0.643_501_1).abs() < 1e-5);
    }
}

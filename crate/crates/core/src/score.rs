//! Closed-form shoulder presentation scores.
//!
//! Two components are computed from the left/right shoulder landmarks of a
//! 33-point pose skeleton:
//!
//! * the horizontal-alignment (yaw) score, the cosine of the rotation of the
//!   shoulder line about the vertical axis, discounted by how asymmetric the
//!   two landmark confidences are;
//! * the shoulder-tilt (roll) score, a linear map of the in-plane slope of the
//!   shoulder line onto the unit interval.
//!
//! The combined quality value is their geometric mean. Everything here is a
//! pure function of its arguments.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpeError};

/// Pose index of the left shoulder.
pub const LEFT_SHOULDER: u32 = 11;
/// Pose index of the right shoulder.
pub const RIGHT_SHOULDER: u32 = 12;

/// One pose point in estimator-normalized coordinates.
///
/// Coordinates are always finite and `visibility` is always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    x: f64,
    y: f64,
    z: f64,
    visibility: f64,
}

impl Landmark {
    /// Builds a landmark, rejecting non-finite values and clamping the
    /// visibility into `[0, 1]`.
    pub fn new(x: f64, y: f64, z: f64, visibility: f64) -> Result<Self> {
        for (field, value) in [("x", x), ("y", y), ("z", z), ("visibility", visibility)] {
            if !value.is_finite() {
                return Err(SpeError::NonFinite { field, value });
            }
        }
        Ok(Self {
            x,
            y,
            z,
            visibility: visibility.clamp(0.0, 1.0),
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// Same point shifted by `(dx, dy, dz)`.
    pub fn translated(&self, dx: f64, dy: f64, dz: f64) -> Result<Self> {
        Self::new(self.x + dx, self.y + dy, self.z + dz, self.visibility)
    }
}

/// The left (index 11) and right (index 12) shoulder landmarks of one pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoulderObservation {
    pub left: Landmark,
    pub right: Landmark,
}

impl ShoulderObservation {
    pub fn new(left: Landmark, right: Landmark) -> Self {
        Self { left, right }
    }

    /// The same pose with the two shoulders exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            left: self.right,
            right: self.left,
        }
    }

    fn deltas(&self) -> Result<(f64, f64, f64)> {
        let dx = self.left.x - self.right.x;
        let dy = self.left.y - self.right.y;
        let dz = self.left.z - self.right.z;
        for (field, value) in [("dx", dx), ("dy", dy), ("dz", dz)] {
            if !value.is_finite() {
                return Err(SpeError::NonFinite { field, value });
            }
        }
        Ok((dx, dy, dz))
    }
}

/// Scoring parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeConfig {
    epsilon: f64,
    min_visibility: f64,
    tau: f64,
}

impl SpeConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-6;
    pub const DEFAULT_MIN_VISIBILITY: f64 = 0.5;
    pub const DEFAULT_TAU: f64 = 0.8;

    pub fn new(epsilon: f64, min_visibility: f64, tau: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(SpeError::InvalidEpsilon(epsilon));
        }
        check_unit("min_visibility", min_visibility)?;
        check_unit("tau", tau)?;
        Ok(Self {
            epsilon,
            min_visibility,
            tau,
        })
    }

    /// Length below which a shoulder separation counts as degenerate.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Per-landmark confidence floor.
    pub fn min_visibility(&self) -> f64 {
        self.min_visibility
    }

    /// Compliance threshold.
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

impl Default for SpeConfig {
    fn default() -> Self {
        Self {
            epsilon: Self::DEFAULT_EPSILON,
            min_visibility: Self::DEFAULT_MIN_VISIBILITY,
            tau: Self::DEFAULT_TAU,
        }
    }
}

fn check_unit(field: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(SpeError::NonFinite { field, value });
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(SpeError::OutOfUnitRange { field, value });
    }
    Ok(())
}

/// A single component score with the angle it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentScore {
    pub score: f64,
    /// Degrees in `[0, 90]`.
    pub angle_deg: f64,
    /// True when the epsilon guard fired and the score defaulted to 0.
    pub degenerate: bool,
}

impl ComponentScore {
    const DEGENERATE: Self = Self {
        score: 0.0,
        angle_deg: 90.0,
        degenerate: true,
    };
}

/// Visibility-symmetry factor `1 - |v_L - v_R|`, clamped to `[0, 1]`.
pub fn visibility_symmetry(obs: &ShoulderObservation) -> f64 {
    (1.0 - (obs.left.visibility - obs.right.visibility).abs()).clamp(0.0, 1.0)
}

/// Horizontal-alignment (yaw) score.
///
/// `|dx| / ||(dx, dz)||` times the visibility-symmetry factor. Returns 0 with
/// a 90° yaw when the `(dx, dz)` separation is shorter than epsilon.
pub fn horizontal_score(obs: &ShoulderObservation, cfg: &SpeConfig) -> Result<ComponentScore> {
    let (dx, _, dz) = obs.deltas()?;
    let norm = dx.hypot(dz);
    if norm < cfg.epsilon {
        return Ok(ComponentScore::DEGENERATE);
    }
    let geom = (dx.abs() / norm).min(1.0);
    let score = (geom * visibility_symmetry(obs)).clamp(0.0, 1.0);
    Ok(ComponentScore {
        score,
        angle_deg: dz.abs().atan2(dx.abs()).to_degrees(),
        degenerate: false,
    })
}

/// Shoulder-tilt (roll) score, `1 - phi / 90°`.
///
/// Returns 0 with a 90° roll when both `|dx|` and `|dy|` are below epsilon.
pub fn shoulder_tilt_score(obs: &ShoulderObservation, cfg: &SpeConfig) -> Result<ComponentScore> {
    let (dx, dy, _) = obs.deltas()?;
    if dx.abs().max(dy.abs()) < cfg.epsilon {
        return Ok(ComponentScore::DEGENERATE);
    }
    let roll = dy.abs().atan2(dx.abs());
    // Dividing the radian angle keeps phi = 45° at exactly 0.5.
    let score = (1.0 - roll / FRAC_PI_2).clamp(0.0, 1.0);
    Ok(ComponentScore {
        score,
        angle_deg: roll.to_degrees(),
        degenerate: false,
    })
}

/// Geometric mean of the two component scores.
pub fn combined_score(yaw: f64, roll: f64) -> Result<f64> {
    check_unit("horizontal_score", yaw)?;
    check_unit("tilt_score", roll)?;
    Ok((yaw * roll).sqrt())
}

/// Why a pose received the score it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    MissingLandmarks,
    LowVisibility,
    DegenerateGeometry,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::MissingLandmarks => "missing_landmarks",
            Status::LowVisibility => "low_visibility",
            Status::DegenerateGeometry => "degenerate_geometry",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ok" => Ok(Status::Ok),
            "missing_landmarks" => Ok(Status::MissingLandmarks),
            "low_visibility" => Ok(Status::LowVisibility),
            "degenerate_geometry" => Ok(Status::DegenerateGeometry),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

/// Full scoring outcome for one pose.
///
/// Whenever `status` is not [`Status::Ok`] all three scores are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeResult {
    pub horizontal_score: f64,
    pub tilt_score: f64,
    pub combined_score: f64,
    pub yaw_angle_deg: f64,
    pub roll_angle_deg: f64,
    pub status: Status,
}

impl SpeResult {
    fn rejected(status: Status, yaw_angle_deg: f64, roll_angle_deg: f64) -> Self {
        Self {
            horizontal_score: 0.0,
            tilt_score: 0.0,
            combined_score: 0.0,
            yaw_angle_deg,
            roll_angle_deg,
            status,
        }
    }

    /// True when the combined score reaches `tau` (boundary counts as a pass).
    pub fn passes(&self, tau: f64) -> bool {
        self.combined_score >= tau
    }
}

/// Scores one pose, applying the missing-landmark and visibility gates.
///
/// A low-visibility pose still reports its geometric angles for debugging;
/// missing and degenerate poses report 90° for both.
pub fn evaluate_pose(obs: Option<&ShoulderObservation>, cfg: &SpeConfig) -> Result<SpeResult> {
    let Some(obs) = obs else {
        return Ok(SpeResult::rejected(Status::MissingLandmarks, 90.0, 90.0));
    };
    let yaw = horizontal_score(obs, cfg)?;
    let roll = shoulder_tilt_score(obs, cfg)?;

    if obs.left.visibility.min(obs.right.visibility) < cfg.min_visibility {
        return Ok(SpeResult::rejected(
            Status::LowVisibility,
            yaw.angle_deg,
            roll.angle_deg,
        ));
    }
    if yaw.degenerate && roll.degenerate {
        return Ok(SpeResult::rejected(Status::DegenerateGeometry, 90.0, 90.0));
    }
    Ok(SpeResult {
        horizontal_score: yaw.score,
        tilt_score: roll.score,
        combined_score: combined_score(yaw.score, roll.score)?,
        yaw_angle_deg: yaw.angle_deg,
        roll_angle_deg: roll.angle_deg,
        status: Status::Ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lm(x: f64, y: f64, z: f64, v: f64) -> Landmark {
        Landmark::new(x, y, z, v).unwrap()
    }

    fn pair(l: Landmark, r: Landmark) -> ShoulderObservation {
        ShoulderObservation::new(l, r)
    }

    #[test]
    fn landmark_clamps_visibility_and_rejects_nan() {
        assert_eq!(lm(0.0, 0.0, 0.0, 1.7).visibility(), 1.0);
        assert_eq!(lm(0.0, 0.0, 0.0, -0.2).visibility(), 0.0);
        assert!(matches!(
            Landmark::new(f64::NAN, 0.0, 0.0, 1.0),
            Err(SpeError::NonFinite { field: "x", .. })
        ));
        assert!(Landmark::new(0.0, 0.0, f64::INFINITY, 1.0).is_err());
        assert!(Landmark::new(0.0, 0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SpeConfig::new(0.0, 0.5, 0.8).is_err());
        assert!(SpeConfig::new(-1e-6, 0.5, 0.8).is_err());
        assert!(SpeConfig::new(1e-6, 1.5, 0.8).is_err());
        assert!(SpeConfig::new(1e-6, 0.5, -0.1).is_err());
        let cfg = SpeConfig::default();
        assert_eq!(cfg.epsilon(), 1e-6);
        assert_eq!(cfg.min_visibility(), 0.5);
        assert_eq!(cfg.tau(), 0.8);
    }

    #[test]
    fn horizontal_frontal_pair() {
        let obs = pair(lm(0.7, 0.5, 0.0, 1.0), lm(0.3, 0.5, 0.0, 1.0));
        let h = horizontal_score(&obs, &SpeConfig::default()).unwrap();
        assert_eq!(h.score, 1.0);
        assert_eq!(h.angle_deg, 0.0);
    }

    #[test]
    fn horizontal_equal_depth_and_width_gap() {
        let obs = pair(lm(0.65, 0.5, 0.3, 0.9), lm(0.35, 0.5, 0.0, 0.9));
        let h = horizontal_score(&obs, &SpeConfig::default()).unwrap();
        assert_abs_diff_eq!(h.score, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(h.angle_deg, 45.0, epsilon = 1e-9);
    }

    #[test]
    fn horizontal_visibility_penalty() {
        let obs = pair(lm(0.7, 0.5, 0.0, 1.0), lm(0.3, 0.5, 0.0, 0.6));
        let h = horizontal_score(&obs, &SpeConfig::default()).unwrap();
        assert_abs_diff_eq!(h.score, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn horizontal_coincident_points() {
        let p = lm(0.5, 0.5, 0.1, 1.0);
        let h = horizontal_score(&pair(p, p), &SpeConfig::default()).unwrap();
        assert_eq!(h.score, 0.0);
        assert_eq!(h.angle_deg, 90.0);
        assert!(h.degenerate);
    }

    #[test]
    fn horizontal_profile_view() {
        let obs = pair(lm(0.5, 0.5, 0.2, 1.0), lm(0.5, 0.5, 0.0, 1.0));
        let h = horizontal_score(&obs, &SpeConfig::default()).unwrap();
        assert_eq!(h.score, 0.0);
        assert_eq!(h.angle_deg, 90.0);
        assert!(!h.degenerate);
    }

    #[test]
    fn tilt_cases() {
        let cfg = SpeConfig::default();
        let level = pair(lm(0.7, 0.5, 0.0, 1.0), lm(0.3, 0.5, 0.0, 1.0));
        let t = shoulder_tilt_score(&level, &cfg).unwrap();
        assert_eq!((t.score, t.angle_deg), (1.0, 0.0));

        let diag = pair(lm(0.6, 0.6, 0.0, 1.0), lm(0.4, 0.4, 0.0, 1.0));
        let t = shoulder_tilt_score(&diag, &cfg).unwrap();
        assert_eq!(t.score, 0.5);
        assert_abs_diff_eq!(t.angle_deg, 45.0, epsilon = 1e-12);

        let vertical = pair(lm(0.5, 0.8, 0.0, 1.0), lm(0.5, 0.5, 0.0, 1.0));
        let t = shoulder_tilt_score(&vertical, &cfg).unwrap();
        assert_eq!((t.score, t.angle_deg), (0.0, 90.0));
        assert!(!t.degenerate);

        let p = lm(0.5, 0.5, 0.0, 1.0);
        let t = shoulder_tilt_score(&pair(p, p), &cfg).unwrap();
        assert_eq!(t.score, 0.0);
        assert!(t.degenerate);
    }

    #[test]
    fn combined_cases() {
        assert_eq!(combined_score(1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(combined_score(0.64, 0.25).unwrap(), 0.4, epsilon = 1e-12);
        assert_eq!(combined_score(0.0, 0.9).unwrap(), 0.0);
        assert!(combined_score(1.1, 0.5).is_err());
        assert!(combined_score(0.5, -0.01).is_err());
        assert!(combined_score(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn evaluate_missing() {
        let r = evaluate_pose(None, &SpeConfig::default()).unwrap();
        assert_eq!(r.status, Status::MissingLandmarks);
        assert_eq!(
            (r.horizontal_score, r.tilt_score, r.combined_score),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn evaluate_low_visibility() {
        let obs = pair(lm(0.7, 0.5, 0.0, 0.9), lm(0.3, 0.5, 0.0, 0.3));
        let r = evaluate_pose(Some(&obs), &SpeConfig::default()).unwrap();
        assert_eq!(r.status, Status::LowVisibility);
        assert_eq!(
            (r.horizontal_score, r.tilt_score, r.combined_score),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(r.yaw_angle_deg, 0.0);
    }

    #[test]
    fn evaluate_degenerate_and_frontal() {
        let p = lm(0.5, 0.5, 0.0, 1.0);
        let r = evaluate_pose(Some(&pair(p, p)), &SpeConfig::default()).unwrap();
        assert_eq!(r.status, Status::DegenerateGeometry);
        assert_eq!(r.combined_score, 0.0);

        let obs = pair(lm(0.7, 0.5, 0.0, 1.0), lm(0.3, 0.5, 0.0, 1.0));
        let r = evaluate_pose(Some(&obs), &SpeConfig::default()).unwrap();
        assert_eq!(r.status, Status::Ok);
        assert_eq!(
            (r.horizontal_score, r.tilt_score, r.combined_score),
            (1.0, 1.0, 1.0)
        );
        assert!(r.passes(0.8));
    }

    #[test]
    fn evaluate_one_guard_is_still_ok() {
        // Pure depth separation: tilt guard fires, yaw guard does not.
        let obs = pair(lm(0.5, 0.5, 0.2, 1.0), lm(0.5, 0.5, 0.0, 1.0));
        let r = evaluate_pose(Some(&obs), &SpeConfig::default()).unwrap();
        assert_eq!(r.status, Status::Ok);
        assert_eq!(r.combined_score, 0.0);
    }

    #[test]
    fn overflowing_delta_is_rejected() {
        let obs = pair(lm(f64::MAX, 0.0, 0.0, 1.0), lm(-f64::MAX, 0.0, 0.0, 1.0));
        assert!(horizontal_score(&obs, &SpeConfig::default()).is_err());
        assert!(evaluate_pose(Some(&obs), &SpeConfig::default()).is_err());
    }

    #[test]
    fn status_round_trips_through_str() {
        for s in [
            Status::Ok,
            Status::MissingLandmarks,
            Status::LowVisibility,
            Status::DegenerateGeometry,
        ] {
            assert_eq!(s.as_str().parse::<Status>().unwrap(), s);
        }
    }
}

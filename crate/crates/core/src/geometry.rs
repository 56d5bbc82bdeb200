//! UAV kinematics and the angular geometry between the UAV and ground SBSs.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use libm::{acos, atan2, sqrt};

use crate::{Error, Result};

/// A point or vector in the local Cartesian frame (m, m/s or m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Ground point (`z = 0`).
    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dot(*self))
    }

    pub fn horizontal_norm(&self) -> f64 {
        sqrt(self.x * self.x + self.y * self.y)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Speed, acceleration and altitude envelope of the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            v_max: 8.0,
            a_max: 4.0,
            h_min: 30.0,
            h_max: 130.0,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_max, self.a_max, self.h_min, self.h_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.v_max <= 0.0 || self.a_max <= 0.0 {
            return Err(Error::invalid("v_max and a_max must be positive"));
        }
        if !(0.0 < self.h_min && self.h_min < self.h_max) {
            return Err(Error::invalid("altitude bounds must satisfy 0 < h_min < h_max"));
        }
        Ok(())
    }

    /// Largest displacement reachable in one step of length `dt`:
    /// `v_max·dt + a_max·dt²/2`.
    pub fn max_step_displacement(&self, dt: f64) -> f64 {
        self.v_max * dt + 0.5 * self.a_max * dt * dt
    }

    pub fn mid_altitude(&self) -> f64 {
        0.5 * (self.h_min + self.h_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavKinematicState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl UavKinematicState {
    pub fn is_within(&self, limits: &KinematicLimits) -> bool {
        self.velocity.norm() <= limits.v_max
            && self.acceleration.norm() <= limits.a_max
            && (limits.h_min..=limits.h_max).contains(&self.position.z)
    }
}

/// Constant-acceleration position update `p + v·dt + a·dt²/2`.
///
/// Altitude is not clamped here; the environment owns the altitude rule.
pub fn update_position(state: &UavKinematicState, dt: f64) -> Result<Vec3> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("time step must be positive and finite"));
    }
    if !(state.position.is_finite() && state.velocity.is_finite() && state.acceleration.is_finite())
    {
        return Err(Error::invalid("kinematic state has non-finite components"));
    }
    Ok(state.position + state.velocity * dt + state.acceleration * (0.5 * dt * dt))
}

fn axis_angle(u: f64, a: f64, b: f64, z: f64) -> f64 {
    let da = u - a;
    let db = u - b;
    let d = a - b;
    let z2 = z * z;
    let num = da * da + db * db + 2.0 * z2 - d * d;
    let den = 2.0 * sqrt((da * da + z2) * (db * db + z2));
    acos((num / den).clamp(-1.0, 1.0))
}

/// Per-axis spatial angles `(θx, θy)` between the links UAV→`s_i` and
/// UAV→`s_j`, each measured in the vertical plane of that axis.
pub fn spatial_angles(uav: Vec3, s_i: Vec3, s_j: Vec3) -> Result<(f64, f64)> {
    if !(uav.z > 0.0) {
        return Err(Error::DegenerateGeometry("UAV altitude must be positive".into()));
    }
    Ok((
        axis_angle(uav.x, s_i.x, s_j.x, uav.z),
        axis_angle(uav.y, s_i.y, s_j.y, uav.z),
    ))
}

/// Elevation of `sbs` as seen from the UAV, in `(0, π/2]`.
pub fn elevation_angle(uav: Vec3, sbs: Vec3) -> Result<f64> {
    if !(uav.z > 0.0) {
        return Err(Error::DegenerateGeometry("UAV altitude must be positive".into()));
    }
    // atan2 yields exactly π/2 for zero horizontal offset.
    Ok(atan2(uav.z, (uav - sbs).horizontal_norm()))
}

pub fn link_length(uav: Vec3, sbs: Vec3) -> f64 {
    (uav - sbs).norm()
}

/// Flight time along `waypoints`, flying segment `j` at `speeds[j]`.
pub fn trajectory_time(waypoints: &[Vec3], speeds: &[f64]) -> Result<f64> {
    if waypoints.is_empty() {
        return Err(Error::invalid("trajectory needs at least one waypoint"));
    }
    if waypoints.len() != speeds.len() + 1 {
        return Err(Error::ShapeMismatch {
            what: "segment speeds",
            expected: waypoints.len() - 1,
            got: speeds.len(),
        });
    }
    if speeds.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::invalid("segment speeds must be strictly positive"));
    }
    Ok(waypoints
        .windows(2)
        .zip(speeds)
        .map(|(w, &s)| (w[1] - w[0]).norm() / s)
        .sum())
}

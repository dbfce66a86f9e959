//! Pose math shared by the detectors.
//!
//! World frame is right-handed, meters, +z up. A sheet lies in its local
//! xy-plane with the origin at the bottom-left corner and local +z as the
//! printed face normal. Everything here is pure; thresholds live in the
//! recognizer.

use std::f64::consts::PI;

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Allowed deviation of a quaternion norm from 1.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Rigid pose: position of the local origin and orientation, both in world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    /// Builds a pose from raw `[w, x, y, z]` quaternion components without
    /// renormalizing, so encoded values survive a round trip bit for bit.
    pub fn from_raw(position: [f64; 3], wxyz: [f64; 4]) -> Result<Self, PoseError> {
        if position.iter().any(|c| !c.is_finite()) {
            return Err(PoseError::NonFinitePosition);
        }
        if wxyz.iter().any(|c| !c.is_finite()) {
            return Err(PoseError::NonUnitQuaternion(f64::NAN));
        }
        let q = nalgebra::Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(PoseError::NonUnitQuaternion(norm));
        }
        Ok(Self::new(
            Vector3::from(position),
            UnitQuaternion::new_unchecked(q),
        ))
    }

    pub fn position_array(&self) -> [f64; 3] {
        [self.position.x, self.position.y, self.position.z]
    }

    /// Quaternion components in `[w, x, y, z]` order.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Maps a local point into world space.
    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * local + self.position
    }

    /// Maps a world point into this pose's local frame.
    pub fn inverse_transform_point(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse_transform_vector(&(world - self.position))
    }

    /// Composition `self ∘ other`: `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.transform_point(&other.position),
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    /// Local +z in world frame.
    pub fn normal(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }

    /// Rotates the pose about a world-space axis through `pivot`.
    pub fn rotated_about(&self, pivot: &Vector3<f64>, axis: &Vector3<f64>, angle: f64) -> Pose {
        let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Pose::new(
            rot * (self.position - pivot) + pivot,
            rot * self.orientation,
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoseError {
    #[error("position has a non-finite component")]
    NonFinitePosition,
    #[error("orientation quaternion norm {0} is not within 1e-6 of 1")]
    NonUnitQuaternion(f64),
}

/// Physical sheet size in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetGeometry {
    pub width: f64,
    pub height: f64,
}

impl SheetGeometry {
    pub const A4: SheetGeometry = SheetGeometry {
        width: 0.210,
        height: 0.297,
    };

    pub fn new(width: f64, height: f64) -> Option<Self> {
        let g = Self { width, height };
        g.is_valid().then_some(g)
    }

    pub fn is_valid(&self) -> bool {
        self.width.is_finite() && self.height.is_finite() && self.width > 0.0 && self.height > 0.0
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Local-frame point at the given sheet coordinate (on the face plane).
    pub fn local_point(&self, uv: Uv) -> Vector3<f64> {
        Vector3::new(uv.u * self.width, uv.v * self.height, 0.0)
    }

    pub fn local_center(&self) -> Vector3<f64> {
        self.local_point(Uv::new(0.5, 0.5))
    }

    /// The four corners in local coordinates, counter-clockwise from the origin.
    pub fn local_corners(&self) -> [Vector3<f64>; 4] {
        [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(self.width, 0.0, 0.0),
            Vector3::new(self.width, self.height, 0.0),
            Vector3::new(0.0, self.height, 0.0),
        ]
    }
}

/// Normalized sheet-surface coordinate; origin bottom-left, u right, v up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Uv {
    pub u: f64,
    pub v: f64,
}

impl Uv {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_unit(&self) -> bool {
        (0.0..=1.0).contains(&self.u) && (0.0..=1.0).contains(&self.v)
    }

    pub fn clamped(self) -> Self {
        Self::new(self.u.clamp(0.0, 1.0), self.v.clamp(0.0, 1.0))
    }
}

/// Orthogonal projection of `p` onto the (unbounded) sheet plane: the
/// unclamped sheet coordinate plus the signed distance along the face normal.
pub fn project_to_plane(p: &Vector3<f64>, pose: &Pose, geom: &SheetGeometry) -> (Uv, f64) {
    let local = pose.inverse_transform_point(p);
    (
        Uv::new(local.x / geom.width, local.y / geom.height),
        local.z,
    )
}

/// Projects `p` onto the sheet. Returns the sheet coordinate and signed
/// distance iff the foot point lies on the rectangle and `|distance| <= max_dist`.
pub fn project_to_sheet(
    p: &Vector3<f64>,
    pose: &Pose,
    geom: &SheetGeometry,
    max_dist: f64,
) -> Option<(Uv, f64)> {
    let (uv, dist) = project_to_plane(p, pose, geom);
    (uv.is_unit() && dist.abs() <= max_dist).then_some((uv, dist))
}

/// Unsigned angle between two vectors in `[0, π]`, stable near 0 and π.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Dihedral angle between two panels sharing a crease: `π` when coplanar
/// with the same facing, `0` when folded flat onto each other.
pub fn dihedral(a: &Pose, b: &Pose) -> f64 {
    PI - angle_between(&a.normal(), &b.normal())
}

fn wrap_half_open(angle: f64) -> f64 {
    // atan2 can return exactly -π; report it as π.
    if angle <= -PI {
        angle + 2.0 * PI
    } else {
        angle
    }
}

/// Pitch (about the sheet's local x-axis) and roll (about local y) of the
/// face normal away from world +z, both in `(-π, π]`.
///
/// Positive pitch lifts the top edge; positive roll lowers the right edge.
pub fn tilt_angles(pose: &Pose) -> (f64, f64) {
    let up = pose.orientation.inverse_transform_vector(&Vector3::z());
    let pitch = wrap_half_open(up.y.atan2(up.z));
    let roll = wrap_half_open(-up.x.atan2(up.z));
    (pitch, roll)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    Front,
    Back,
}

/// Front iff the face normal points back along the camera-to-sheet ray.
pub fn facing(pose: &Pose, camera: &Pose) -> Facing {
    let ray = pose.position - camera.position;
    if pose.normal().dot(&ray) < 0.0 {
        Facing::Front
    } else {
        Facing::Back
    }
}

/// Depth of a world point along the camera's viewing axis (camera looks down its local -z).
pub fn camera_depth(camera: &Pose, p: &Vector3<f64>) -> f64 {
    -camera.inverse_transform_point(p).z
}

/// Area of the intersection of two convex polygons given counter-clockwise
/// in the same 2-D frame (Sutherland-Hodgman clipping).
pub fn convex_overlap_area(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> f64 {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let inside = |p: &[f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0;
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let cur_in = inside(&cur);
            let prev_in = inside(&prev);
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    polygon_area(&output).abs()
}

fn line_intersection(p1: [f64; 2], p2: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d1 = [p2[0] - p1[0], p2[1] - p1[1]];
    let d2 = [b[0] - a[0], b[1] - a[1]];
    let denom = d1[0] * d2[1] - d1[1] * d2[0];
    if denom.abs() < f64::EPSILON {
        return p2;
    }
    let t = ((a[0] - p1[0]) * d2[1] - (a[1] - p1[1]) * d2[0]) / denom;
    [p1[0] + t * d1[0], p1[1] + t * d1[1]]
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const A4: SheetGeometry = SheetGeometry::A4;

    fn rot(axis: Vector3<f64>, deg: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), deg.to_radians())
    }

    #[test]
    fn projects_sheet_center() {
        let p = Vector3::new(0.105, 0.1485, 0.0);
        let (uv, d) = project_to_sheet(&p, &Pose::identity(), &A4, 0.01).unwrap();
        assert_relative_eq!(uv.u, 0.5, epsilon = 1e-12);
        assert_relative_eq!(uv.v, 0.5, epsilon = 1e-12);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn distance_gate_rejects_hover() {
        let p = Vector3::new(0.105, 0.1485, 0.05);
        assert!(project_to_sheet(&p, &Pose::identity(), &A4, 0.01).is_none());
    }

    #[test]
    fn outside_rectangle_is_empty() {
        let p = Vector3::new(-0.01, 0.1, 0.0);
        assert!(project_to_sheet(&p, &Pose::identity(), &A4, 0.01).is_none());
    }

    // Brute force: nearest point on a dense grid of the rotated sheet.
    fn grid_nearest_uv(p: &Vector3<f64>, pose: &Pose, geom: &SheetGeometry) -> Uv {
        let n = 400;
        let mut best = (f64::INFINITY, Uv::default());
        for i in 0..=n {
            for j in 0..=n {
                let uv = Uv::new(i as f64 / n as f64, j as f64 / n as f64);
                let w = pose.transform_point(&geom.local_point(uv));
                let d = (w - p).norm();
                if d < best.0 {
                    best = (d, uv);
                }
            }
        }
        best.1
    }

    #[test]
    fn rotated_sheet_projection_matches_grid_search() {
        let pose = Pose::new(Vector3::zeros(), rot(Vector3::z(), 90.0));
        let p = Vector3::new(-0.1485, 0.105, 0.0);
        let (uv, d) = project_to_sheet(&p, &pose, &A4, 0.01).unwrap();
        assert_relative_eq!(uv.u, 0.5, epsilon = 1e-12);
        assert_relative_eq!(uv.v, 0.5, epsilon = 1e-12);
        assert_relative_eq!(d, 0.0, epsilon = 1e-12);
        let brute = grid_nearest_uv(&p, &pose, &A4);
        assert_relative_eq!(brute.u, uv.u, epsilon = 1.0 / 400.0);
        assert_relative_eq!(brute.v, uv.v, epsilon = 1.0 / 400.0);
    }

    #[test]
    fn dihedral_examples() {
        let a = Pose::identity();
        assert_relative_eq!(dihedral(&a, &a), PI, epsilon = 1e-12);
        // Crease along local y at u = 0.5.
        let pivot = A4.local_point(Uv::new(0.5, 0.0));
        let b90 = a.rotated_about(&pivot, &Vector3::y(), -PI / 2.0);
        assert_relative_eq!(dihedral(&a, &b90), PI / 2.0, epsilon = 1e-12);
        let b180 = a.rotated_about(&pivot, &Vector3::y(), -PI);
        assert_relative_eq!(dihedral(&a, &b180), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tilt_examples() {
        let (p, r) = tilt_angles(&Pose::identity());
        assert_eq!((p, r), (0.0, 0.0));
        let (p, r) = tilt_angles(&Pose::new(Vector3::zeros(), rot(Vector3::x(), 30.0)));
        assert_relative_eq!(p, 30f64.to_radians(), epsilon = 1e-12);
        assert_relative_eq!(r, 0.0, epsilon = 1e-12);
        let (p, r) = tilt_angles(&Pose::new(Vector3::zeros(), rot(Vector3::y(), -15.0)));
        assert_relative_eq!(p, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r, (-15f64).to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn tilt_matches_rotation_matrix_oracle() {
        // Rotation matrix for Rx(θ) applied to +z gives (0, -sinθ, cosθ);
        // pitch is the angle that rotation moves the normal off world +z.
        for deg in [-60.0, -20.0, 5.0, 45.0, 80.0] {
            let theta: f64 = f64::to_radians(deg);
            let m = nalgebra::Matrix3::new(
                1.0, 0.0, 0.0,
                0.0, theta.cos(), -theta.sin(),
                0.0, theta.sin(), theta.cos(),
            );
            let q = UnitQuaternion::from_matrix(&m);
            let (p, r) = tilt_angles(&Pose::new(Vector3::zeros(), q));
            assert_relative_eq!(p, theta, epsilon = 1e-9);
            assert_relative_eq!(r, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn tilt_is_odd_near_zero() {
        let d = 1f64.to_radians();
        for axis in [Vector3::x(), Vector3::y()] {
            let plus = tilt_angles(&Pose::new(Vector3::zeros(), rot(axis, 1.0)));
            let minus = tilt_angles(&Pose::new(Vector3::zeros(), rot(axis, -1.0)));
            assert_relative_eq!(plus.0, -minus.0, epsilon = 1e-12);
            assert_relative_eq!(plus.1, -minus.1, epsilon = 1e-12);
            assert_relative_eq!(plus.0.abs() + plus.1.abs(), d, epsilon = 1e-12);
        }
    }

    fn overhead_camera() -> Pose {
        Pose::from_translation(0.0, 0.0, 1.0)
    }

    #[test]
    fn facing_examples() {
        let cam = overhead_camera();
        assert_eq!(facing(&Pose::identity(), &cam), Facing::Front);
        let flipped = Pose::new(Vector3::zeros(), rot(Vector3::y(), 180.0));
        assert_eq!(facing(&flipped, &cam), Facing::Back);
        let at = |deg| Pose::new(Vector3::zeros(), rot(Vector3::y(), deg));
        assert_eq!(facing(&at(89.0), &cam), Facing::Front);
        assert_eq!(facing(&at(91.0), &cam), Facing::Back);
        // Oracle: sign of n·ray computed by hand.
        for deg in [89.0f64, 91.0] {
            let n = Vector3::new(deg.to_radians().sin(), 0.0, deg.to_radians().cos());
            let ray = Vector3::new(0.0, 0.0, -1.0);
            let expect = if n.dot(&ray) < 0.0 { Facing::Front } else { Facing::Back };
            assert_eq!(facing(&at(deg), &cam), expect);
        }
    }

    #[test]
    fn facing_changes_once_over_a_sweep() {
        let cam = overhead_camera();
        let mut changes = 0;
        let mut prev = Facing::Front;
        for step in 0..=1800 {
            let deg = step as f64 / 10.0;
            let f = facing(&Pose::new(Vector3::zeros(), rot(Vector3::y(), deg)), &cam);
            if f != prev {
                changes += 1;
                prev = f;
            }
        }
        assert_eq!(changes, 1);
    }

    #[test]
    fn from_raw_rejects_non_unit() {
        assert!(matches!(
            Pose::from_raw([0.0; 3], [1.0, 0.1, 0.0, 0.0]),
            Err(PoseError::NonUnitQuaternion(_))
        ));
        assert!(Pose::from_raw([f64::NAN, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(Pose::from_raw([0.0; 3], [1.0, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn overlap_of_unit_squares() {
        let a = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let b = [[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]];
        assert_relative_eq!(convex_overlap_area(&a, &b), 0.25, epsilon = 1e-12);
        let far = [[5.0, 5.0], [6.0, 5.0], [6.0, 6.0], [5.0, 6.0]];
        assert_eq!(convex_overlap_area(&a, &far), 0.0);
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-1.0f64..1.0),
            prop::array::uniform3(-1.0f64..1.0),
            0.0f64..PI,
        )
            .prop_map(|(t, axis, angle)| {
                let axis = Vector3::from(axis);
                let axis = if axis.norm() < 1e-3 { Vector3::z() } else { axis };
                Pose::new(
                    Vector3::from(t),
                    UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
                )
            })
    }

    proptest! {
        #[test]
        fn projection_is_rigid_invariant(
            pose in arb_pose(),
            motion in arb_pose(),
            u in 0.0f64..1.0,
            v in 0.0f64..1.0,
            h in -0.005f64..0.005,
        ) {
            let local = Vector3::new(u * A4.width, v * A4.height, h);
            let p = pose.transform_point(&local);
            let (uv, d) = project_to_plane(&p, &pose, &A4);
            let moved_pose = motion.compose(&pose);
            let moved_p = motion.transform_point(&p);
            let (uv2, d2) = project_to_plane(&moved_p, &moved_pose, &A4);
            prop_assert!((uv.u - uv2.u).abs() < 1e-9);
            prop_assert!((uv.v - uv2.v).abs() < 1e-9);
            prop_assert!((d - d2).abs() < 1e-9);
        }

        #[test]
        fn dihedral_is_symmetric(a in arb_pose(), b in arb_pose()) {
            prop_assert!((dihedral(&a, &b) - dihedral(&b, &a)).abs() <= 1e-12);
        }
    }
}

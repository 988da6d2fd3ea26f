//! Closed-form rotation exponential and its right Jacobian.

use nalgebra::Matrix3;

use crate::mesh::Vec3;

/// Below this angle the trigonometric coefficients use Taylor series.
pub const SERIES_ANGLE: f64 = 1e-4;

/// Cross-product matrix `[v]` with `[v] w = v × w`.
#[inline]
pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `(sin θ/θ, (1 - cos θ)/θ², (θ - sin θ)/θ³)`.
fn coefficients(theta2: f64) -> (f64, f64, f64) {
    let theta = theta2.sqrt();
    if theta < SERIES_ANGLE {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
            1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / theta2, (theta - s) / (theta2 * theta))
    }
}

/// `exp([s])` by Rodrigues' formula.
pub fn exp_so3(s: &Vec3) -> Matrix3<f64> {
    let k = skew(s);
    let (a, b, _) = coefficients(s.norm_squared());
    Matrix3::identity() + k * a + k * k * b
}

/// Right Jacobian: `exp([s + δ]) ≈ exp([s]) exp([J_r(s) δ])`.
pub fn right_jacobian(s: &Vec3) -> Matrix3<f64> {
    let k = skew(s);
    let (_, b, c) = coefficients(s.norm_squared());
    Matrix3::identity() - k * b + k * k * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    #[test]
    fn quarter_turn_about_z() {
        let r = exp_so3(&Vec3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let expect = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r - expect).norm() < 1e-15);
    }

    #[test]
    fn series_branch_is_continuous() {
        let axis = Vec3::new(0.3, -0.5, 0.8).normalize();
        for &t in &[0.5 * SERIES_ANGLE, 0.999 * SERIES_ANGLE, 1.001 * SERIES_ANGLE, 1e-9, 0.0] {
            let s = axis * t;
            let reference = Rotation3::from_axis_angle(&Unit::new_normalize(axis), t).into_inner();
            assert!((exp_so3(&s) - reference).norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn exponential_is_orthonormal_and_matches_reference(v in prop::array::uniform3(-4.0f64..4.0)) {
            let s = Vec3::from(v);
            let r = exp_so3(&s);
            prop_assert!((r.transpose() * r - Matrix3::identity()).norm() <= 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
            let reference = Rotation3::new(s).into_inner();
            prop_assert!((r - reference).norm() <= 1e-12);
        }

        #[test]
        fn right_jacobian_matches_finite_differences(v in prop::array::uniform3(-3.0f64..3.0), d in prop::array::uniform3(-1.0f64..1.0)) {
            let s = Vec3::from(v);
            let d = Vec3::from(d);
            let h = 1e-6;
            let fd = (exp_so3(&(s + d * h)) - exp_so3(&(s - d * h))) / (2.0 * h);
            let an = exp_so3(&s) * skew(&(right_jacobian(&s) * d));
            prop_assert!((fd - an).norm() <= 1e-7 * (1.0 + an.norm()));
        }
    }
}

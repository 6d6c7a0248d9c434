//! Real 2×2 matrices and the projective circle action.
//!
//! Angles on the circle are measured in turns: a [`LiftedAngle`] `y` stands
//! for the unit vector `exp(2πiy)`. The lift of the circle map
//! `w ↦ Mw/‖Mw‖` is fixed by the Iwasawa factorisation `M = R_θ·T` (with `T`
//! upper triangular and positive on the diagonal): `T` preserves both half
//! planes, so its increment has a principal value in `(-1/2, 1/2)`, and the
//! rotation part contributes `θ`. Callers that need continuity of the lift
//! along a family of matrices pass an anchor for `θ`
//! ([`lift_increment_anchored`]).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    #[inline]
    pub const fn diag(p: f64, q: f64) -> Self {
        Mat2::new(p, 0.0, 0.0, q)
    }

    /// The rotation `R_θ` by `θ` turns.
    #[inline]
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (TAU * theta).sin_cos();
        Mat2::new(c, -s, s, c)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    /// Adjugate; equals the inverse for unimodular matrices.
    #[inline]
    pub fn adjugate(&self) -> Self {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Degenerate(format!("singular matrix (det = {det})")));
        }
        Ok(self.adjugate().scale(1.0 / det))
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    #[inline]
    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Matrix product with an explicit overflow check.
    pub fn checked_mul(&self, rhs: &Mat2) -> Result<Mat2> {
        let p = *self * *rhs;
        if p.is_finite() {
            Ok(p)
        } else {
            Err(Error::Overflow(p.max_abs()))
        }
    }

    /// Both singular values `(σ₁, σ₂)`, largest first.
    #[inline]
    pub fn singular_values(&self) -> (f64, f64) {
        let p = (self.a + self.d).hypot(self.c - self.b);
        let q = (self.a - self.d).hypot(self.c + self.b);
        (0.5 * (p + q), 0.5 * (p - q).abs())
    }

    /// Largest singular value.
    #[inline]
    pub fn operator_norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Angle (radians, modulo π) of the most expanded output direction.
    #[inline]
    pub fn top_left_singular_angle(&self) -> f64 {
        let off = self.a * self.c + self.b * self.d;
        let diff = self.a * self.a + self.b * self.b - self.c * self.c - self.d * self.d;
        0.5 * (2.0 * off).atan2(diff)
    }

    /// Angle (radians, modulo π) of the most expanded input direction.
    #[inline]
    pub fn top_right_singular_angle(&self) -> f64 {
        self.transpose().top_left_singular_angle()
    }

    /// Nearest rotation (polar factor) and the operator-norm distance to it.
    pub fn distance_to_so2(&self) -> (f64, Mat2) {
        let r = Mat2::from_radians(f64::atan2(self.c - self.b, self.a + self.d));
        ((*self - r).operator_norm(), r)
    }

    /// Rotation angle (turns, in `(-1/2, 1/2]`) of the polar factor.
    pub fn polar_angle(&self) -> f64 {
        f64::atan2(self.c - self.b, self.a + self.d) / TAU
    }

    #[inline]
    fn from_radians(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Mat2::new(c, -s, s, c)
    }
}

impl Default for Mat2 {
    fn default() -> Self {
        Mat2::IDENTITY
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, r: Mat2) -> Mat2 {
        Mat2::new(self.a + r.a, self.b + r.b, self.c + r.c, self.d + r.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, r: Mat2) -> Mat2 {
        Mat2::new(self.a - r.a, self.b - r.b, self.c - r.c, self.d - r.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

/// `mul(m1, m2)`: matrix product, failing on overflow.
pub fn mul(m1: Mat2, m2: Mat2) -> Result<Mat2> {
    m1.checked_mul(&m2)
}

pub fn operator_norm(m: Mat2) -> f64 {
    m.operator_norm()
}

pub fn rotation(theta: f64) -> Mat2 {
    Mat2::rotation(theta)
}

pub fn distance_to_so2(m: Mat2) -> (f64, Mat2) {
    m.distance_to_so2()
}

/// A lift `y ∈ ℝ` of the circle point `exp(2πiy)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct LiftedAngle(pub f64);

impl LiftedAngle {
    #[inline]
    pub fn unit_vector(self) -> [f64; 2] {
        let (s, c) = (TAU * self.0).sin_cos();
        [c, s]
    }

    /// Representative of the projected point in `[0, 1)`.
    #[inline]
    pub fn fract(self) -> f64 {
        self.0.rem_euclid(1.0)
    }
}

/// Reduce `t` (turns) into `(-1/2, 1/2]`.
#[inline]
pub fn wrap_half(t: f64) -> f64 {
    let r = t - t.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Principal Iwasawa rotation angle of `m`: the angle of `m·e₁` in `(-1/2, 1/2]`.
#[inline]
pub fn iwasawa_angle(m: &Mat2) -> f64 {
    m.c.atan2(m.a) / TAU
}

/// Lift increment `d` with `exp(2πi(y+d)) = m·w/‖m·w‖`, using the Iwasawa
/// angle representative closest to `anchor`.
#[inline]
pub fn lift_increment_anchored(m: &Mat2, y: f64, anchor: f64) -> f64 {
    let theta0 = iwasawa_angle(m);
    let theta = theta0 + (anchor - theta0).round();
    let (s, c) = (TAU * y).sin_cos();
    let img = (m.c * c + m.d * s).atan2(m.a * c + m.b * s) / TAU;
    theta + wrap_half(img - theta - y)
}

/// Lift increment with the principal Iwasawa branch (`θ ∈ (-1/2, 1/2]`).
#[inline]
pub fn lift_increment(m: &Mat2, y: f64) -> f64 {
    let theta = iwasawa_angle(m);
    let (s, c) = (TAU * y).sin_cos();
    let img = (m.c * c + m.d * s).atan2(m.a * c + m.b * s) / TAU;
    theta + wrap_half(img - theta - y)
}

/// `projective_step(m, y)`: the image point on the circle with its lift
/// increment.
pub fn projective_step(m: Mat2, y: LiftedAngle) -> Result<(LiftedAngle, f64)> {
    let det = m.det();
    if !(det > 0.0) {
        return Err(Error::Domain(format!(
            "projective step needs det > 0, got {det}"
        )));
    }
    let img = m.apply(y.unit_vector());
    if img[0].hypot(img[1]) <= f64::MIN_POSITIVE {
        return Err(Error::Degenerate("m·w vanished".into()));
    }
    let d = lift_increment(&m, y.0);
    Ok((LiftedAngle(y.0 + d), d))
}

/// Signed angle (radians) from direction `from` to direction `to`, both taken
/// modulo π, reduced into `(-π/2, π/2]`.
#[inline]
pub fn projective_angle_diff(from: f64, to: f64) -> f64 {
    let r = (to - from).rem_euclid(PI);
    if r > 0.5 * PI {
        r - PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(m: Mat2, n: Mat2, tol: f64) -> bool {
        (m - n).max_abs() <= tol
    }

    fn random_sl2(rng: &mut ChaCha8Rng, scale: f64) -> Mat2 {
        loop {
            let a: f64 = rng.gen_range(-scale..scale);
            let b: f64 = rng.gen_range(-scale..scale);
            let c: f64 = rng.gen_range(-scale..scale);
            let d: f64 = rng.gen_range(-scale..scale);
            let det = a * d - b * c;
            if det > 0.05 {
                return Mat2::new(a, b, c, d).scale(1.0 / det.sqrt());
            }
        }
    }

    /// Power iteration on MᵀM, independent of the closed-form SVD.
    fn power_norm(m: Mat2) -> f64 {
        let mtm = m.transpose() * m;
        let mut v = [0.6, 0.8];
        for _ in 0..2000 {
            let w = mtm.apply(v);
            let n = w[0].hypot(w[1]);
            v = [w[0] / n, w[1] / n];
        }
        let w = m.apply(v);
        w[0].hypot(w[1])
    }

    #[test]
    fn mul_examples() {
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(mul(Mat2::IDENTITY, m).unwrap(), m);
        let half = mul(rotation(0.25), rotation(0.25)).unwrap();
        assert!(close(half, Mat2::diag(-1.0, -1.0), 1e-15));
        let sq = mul(Mat2::diag(2.0, 0.5), Mat2::diag(2.0, 0.5)).unwrap();
        assert_eq!(sq, Mat2::diag(4.0, 0.25));
    }

    #[test]
    fn mul_overflow_is_reported() {
        let big = Mat2::diag(1e200, 1e-200);
        assert!(matches!(mul(big, big), Err(Error::Overflow(_))));
    }

    #[test]
    fn norm_examples() {
        assert!((operator_norm(Mat2::IDENTITY) - 1.0).abs() < 1e-15);
        assert!((operator_norm(Mat2::diag(2.0, 0.5)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn norm_matches_power_method() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = Mat2::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let exact = operator_norm(m);
            let oracle = power_norm(m);
            assert!((exact - oracle).abs() <= 1e-8 * oracle.max(1.0), "{m}");
        }
    }

    #[test]
    fn rotation_examples() {
        assert!(close(rotation(0.0), Mat2::IDENTITY, 0.0));
        assert!(close(rotation(0.25), Mat2::new(0.0, -1.0, 1.0, 0.0), 1e-16));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t: f64 = rng.gen_range(-3.0..3.0);
            assert!(close(rotation(t) * rotation(-t), Mat2::IDENTITY, 1e-14));
            assert!((rotation(t).det() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn distance_to_so2_examples() {
        let r = rotation(0.137);
        let (delta, p) = distance_to_so2(r);
        assert!(delta < 1e-15);
        assert!(close(p, r, 1e-15));

        // polar factor of a symmetric positive matrix is the identity
        let (delta, p) = distance_to_so2(Mat2::diag(2.0, 0.5));
        assert!((delta - 1.0).abs() < 1e-15);
        assert!(close(p, Mat2::IDENTITY, 1e-15));

        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let shear = Mat2::new(1.0, eps, 0.0, 1.0);
            let (delta, _) = distance_to_so2(rotation(0.3) * shear);
            assert!(delta < prev);
            prev = delta;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn projective_step_examples() {
        for theta in [-0.4, -0.1, 0.0, 0.2, 0.49] {
            for y in [0.0, 0.3, -1.7] {
                let (z, d) = projective_step(rotation(theta), LiftedAngle(y)).unwrap();
                assert!((d - theta).abs() < 1e-13, "theta {theta} y {y} d {d}");
                assert!((z.0 - y - theta).abs() < 1e-13);
            }
        }
        let (z, d) = projective_step(Mat2::diag(2.0, 0.5), LiftedAngle(0.0)).unwrap();
        assert_eq!((z.0, d), (0.0, 0.0));
        assert!(projective_step(Mat2::diag(1.0, -1.0), LiftedAngle(0.0)).is_err());
    }

    /// Continue the image angle of `w` along `t ↦ R_{tθ}((1-t)I + tT)` with
    /// small principal steps; independent of the closed-form branch.
    fn path_continuation(m: Mat2, y: f64, steps: usize) -> f64 {
        let theta = iwasawa_angle(&m);
        let t_part = rotation(-theta) * m;
        let w = LiftedAngle(y).unit_vector();
        let mut angle = y;
        let mut prev = y;
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            let mt = rotation(t * theta) * (Mat2::IDENTITY.scale(1.0 - t) + t_part.scale(t));
            let v = mt.apply(w);
            let a = v[1].atan2(v[0]) / TAU;
            angle += wrap_half(a - prev);
            prev = a;
        }
        angle - y
    }

    #[test]
    fn projective_step_matches_path_continuation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = random_sl2(&mut rng, 3.0);
            let y: f64 = rng.gen_range(-2.0..2.0);
            let (z, d) = projective_step(m, LiftedAngle(y)).unwrap();
            let v = m.apply(LiftedAngle(y).unit_vector());
            let direct = v[1].atan2(v[0]) / TAU;
            let k = z.0 - direct;
            assert!((k - k.round()).abs() < 1e-9);
            let oracle = path_continuation(m, y, 4096);
            assert!((d - oracle).abs() < 1e-9, "{m} y={y}: {d} vs {oracle}");
        }
    }

    #[test]
    fn principal_branch_near_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let e = Mat2::new(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
            );
            let m = Mat2::IDENTITY + e;
            if (m - Mat2::IDENTITY).operator_norm() >= 1.0 || m.det() <= 0.0 {
                continue;
            }
            let (_, d) = projective_step(m, LiftedAngle(rng.gen_range(0.0..1.0))).unwrap();
            assert!(d.abs() < 0.5);
        }
    }

    #[test]
    fn long_chains_stay_unimodular() {
        // near-elliptic factors keep the product norm moderate, so the
        // determinant is measurable without rescaling
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let mut p = Mat2::IDENTITY;
            for _ in 0..10_000 {
                let theta: f64 = rng.gen_range(0.0..1.0);
                let s: f64 = rng.gen_range(-0.02..0.02);
                let m = rotation(theta) * Mat2::new(1.0, s, 0.0, 1.0);
                p = m * p;
            }
            assert!(p.operator_norm() < 1e6);
            assert!((p.det() - 1.0).abs() <= 1e-6, "det {}", p.det());
        }
    }

    proptest! {
        #[test]
        fn lift_increments_are_additive(
            e in prop::array::uniform4(-2.0f64..2.0),
            f in prop::array::uniform4(-2.0f64..2.0),
            y in -3.0f64..3.0,
        ) {
            let m1 = Mat2::new(e[0], e[1], e[2], e[3]);
            let m2 = Mat2::new(f[0], f[1], f[2], f[3]);
            prop_assume!(m1.det() > 0.05 && m2.det() > 0.05);
            let (z1, d1) = projective_step(m1, LiftedAngle(y)).unwrap();
            let (_, d2) = projective_step(m2, z1).unwrap();
            let (_, d12) = projective_step(m2 * m1, LiftedAngle(y)).unwrap();
            let k = d12 - d1 - d2;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }

        #[test]
        fn norm_of_inverse_equals_norm(e in prop::array::uniform4(-5.0f64..5.0)) {
            let m = Mat2::new(e[0], e[1], e[2], e[3]);
            prop_assume!(m.det() > 1e-3);
            let m = m.scale(1.0 / m.det().sqrt());
            let inv = m.inverse().unwrap();
            let (n, ni) = (m.operator_norm(), inv.operator_norm());
            prop_assert!((n - ni).abs() <= 1e-10 * n);
            prop_assert!(n >= 1.0 - 1e-12);
        }

        #[test]
        fn det_is_multiplicative(
            e in prop::array::uniform4(-10.0f64..10.0),
            f in prop::array::uniform4(-10.0f64..10.0),
        ) {
            let m1 = Mat2::new(e[0], e[1], e[2], e[3]);
            let m2 = Mat2::new(f[0], f[1], f[2], f[3]);
            let p = mul(m1, m2).unwrap();
            let scale = (m1.max_abs() * m2.max_abs()).powi(2).max(1e-300);
            prop_assert!((p.det() - m1.det() * m2.det()).abs() <= 1e-12 * scale * 10.0);
        }
    }
}

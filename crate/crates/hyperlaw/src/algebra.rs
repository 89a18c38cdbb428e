//! Small dense primitives: 2-vectors, 2x2 and 3x2 matrices, second-order jets
//! and central-difference oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat22 = [[f64; 2]; 2];

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(t: f64, a: Vec2) -> Vec2 {
    [t * a[0], t * a[1]]
}

pub fn axpy(t: f64, a: Vec2, b: Vec2) -> Vec2 {
    [b[0] + t * a[0], b[1] + t * a[1]]
}

/// z-component of the planar cross product.
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn normalize(a: Vec2) -> Vec2 {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}

/// Counterclockwise rotation by a right angle.
pub fn perp(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

pub fn mat_vec(m: &Mat22, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn vec_mat(v: Vec2, m: &Mat22) -> Vec2 {
    [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
}

pub fn quad_form(m: &Mat22, a: Vec2, b: Vec2) -> f64 {
    dot(a, mat_vec(m, b))
}

pub fn det22(m: &Mat22) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Solves `m x = b`; `None` when the matrix is numerically singular.
pub fn solve22(m: &Mat22, b: Vec2) -> Option<Vec2> {
    let d = det22(m);
    let s = m.iter().flatten().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if d.abs() <= 1e-300 || d.abs() <= 1e-15 * s * s {
        return None;
    }
    Some([(b[0] * m[1][1] - m[0][1] * b[1]) / d, (m[0][0] * b[1] - b[0] * m[1][0]) / d])
}

/// Positive definiteness of a symmetric 2x2 matrix.
pub fn is_positive_definite(m: &Mat22) -> bool {
    m[0][0] > 0.0 && det22(m) > 0.0
}

/// A 3x2 matrix stored row-major; rows are indexed 1..=3 in [`subdet`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat32(pub [[f64; 2]; 3]);

impl Mat32 {
    pub fn zero() -> Self {
        Mat32([[0.0; 2]; 3])
    }

    pub fn from_rows(r1: Vec2, r2: Vec2, r3: Vec2) -> Self {
        Mat32([r1, r2, r3])
    }

    /// The rank-one matrix `a ⊗ n`.
    pub fn outer(a: [f64; 3], n: Vec2) -> Self {
        Mat32([
            [a[0] * n[0], a[0] * n[1]],
            [a[1] * n[0], a[1] * n[1]],
            [a[2] * n[0], a[2] * n[1]],
        ])
    }

    pub fn add(&self, o: &Mat32) -> Mat32 {
        let mut r = *self;
        for (row, orow) in r.0.iter_mut().zip(o.0.iter()) {
            row[0] += orow[0];
            row[1] += orow[1];
        }
        r
    }

    pub fn sub(&self, o: &Mat32) -> Mat32 {
        let mut r = *self;
        for (row, orow) in r.0.iter_mut().zip(o.0.iter()) {
            row[0] -= orow[0];
            row[1] -= orow[1];
        }
        r
    }

    pub fn scaled(&self, t: f64) -> Mat32 {
        let mut r = *self;
        for row in r.0.iter_mut() {
            row[0] *= t;
            row[1] *= t;
        }
        r
    }

    /// Right multiplication by a 2x2 matrix.
    pub fn mul_right(&self, m: &Mat22) -> Mat32 {
        let mut r = Mat32::zero();
        for (row, src) in r.0.iter_mut().zip(self.0.iter()) {
            *row = vec_mat(*src, m);
        }
        r
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

/// Determinant of the 2x2 matrix formed by rows `rows.0` and `rows.1` (1-based), in that order.
pub fn subdet(m: &Mat32, rows: (usize, usize)) -> Result<f64> {
    let (r, s) = rows;
    if !(1..=3).contains(&r) || !(1..=3).contains(&s) || r == s {
        return Err(Error::Argument(format!(
            "row pair ({r}, {s}) is not two distinct rows of a 3x2 matrix"
        )));
    }
    let a = m.0[r - 1];
    let b = m.0[s - 1];
    Ok(a[0] * b[1] - a[1] * b[0])
}

/// The three row pairs in canonical order.
pub const ROW_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

/// Second singular value of a 3x2 matrix.
///
/// Uses `σ₁²σ₂² = Σ minors²` (Cauchy–Binet) and `σ₁² + σ₂² = ‖M‖²`, which stays
/// accurate for nearly rank-one input where the Gram determinant would cancel.
pub fn rank_one_residual(m: &Mat32) -> f64 {
    let f2: f64 = m.0.iter().flatten().map(|x| x * x).sum();
    if f2 == 0.0 {
        return 0.0;
    }
    let det: f64 = ROW_PAIRS
        .iter()
        .map(|&p| {
            let d = subdet(m, p).unwrap_or(0.0);
            d * d
        })
        .sum();
    let disc = (f2 * f2 - 4.0 * det).max(0.0).sqrt();
    let lmax = 0.5 * (f2 + disc);
    (det / lmax).max(0.0).sqrt()
}

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: Vec2,
    pub h: Mat22,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 { v, g: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    /// The coordinate function `u_i` evaluated at `u`.
    pub fn var(i: usize, u: Vec2) -> Self {
        let mut g = [0.0; 2];
        g[i] = 1.0;
        Jet2 { v: u[i], g, h: [[0.0; 2]; 2] }
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        let mut h = self.h;
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] += o.h[i][j];
            }
        }
        Jet2 { v: self.v + o.v, g: add(self.g, o.g), h }
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, t: f64) -> Jet2 {
        let mut h = self.h;
        for row in h.iter_mut() {
            row[0] *= t;
            row[1] *= t;
        }
        Jet2 { v: t * self.v, g: scale(t, self.g), h }
    }

    pub fn add_const(&self, c: f64) -> Jet2 {
        Jet2 { v: self.v + c, ..*self }
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.h[i][j] * o.v
                    + o.h[i][j] * self.v
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        Jet2 { v: self.v * o.v, g: add(scale(o.v, self.g), scale(self.v, o.g)), h }
    }

    /// Composition `φ ∘ self` given `φ(x), φ'(x), φ''(x)` at `x = self.v`.
    pub fn map(&self, phi: f64, dphi: f64, d2phi: f64) -> Jet2 {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = d2phi * self.g[i] * self.g[j] + dphi * self.h[i][j];
            }
        }
        Jet2 { v: phi, g: scale(dphi, self.g), h }
    }

    pub fn recip(&self) -> Jet2 {
        let x = self.v;
        self.map(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    /// Chain rule: `self` is a jet in variables `w`, and `w = (inner[0], inner[1])`
    /// are jets in the outer variables.
    pub fn compose(&self, inner: &[Jet2; 2]) -> Jet2 {
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for k in 0..2 {
            g = axpy(self.g[k], inner[k].g, g);
        }
        for (i, row) in h.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += self.h[k][l] * inner[k].g[i] * inner[l].g[j];
                    }
                    acc += self.g[k] * inner[k].h[i][j];
                }
                *x = acc;
            }
        }
        Jet2 { v: self.v, g, h }
    }
}

/// Default central-difference step for first derivatives: `ε^(1/3) · max(1, |U|)`.
pub fn default_step(u: Vec2) -> f64 {
    f64::EPSILON.cbrt() * norm(u).max(1.0)
}

/// Default step for second derivatives, `ε^(1/4) · max(1, |U|)`; the cube-root
/// step leaves rounding error near 1e-5 in a three-point second difference.
pub fn default_step_second(u: Vec2) -> f64 {
    f64::EPSILON.sqrt().sqrt() * norm(u).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivative {
    Gradient(Vec2),
    Hessian(Mat22),
}

/// Central-difference gradient (`order = 1`) or Hessian (`order = 2`) of a scalar field.
pub fn numeric_derivative<F>(f: F, u: Vec2, order: u8, step: Option<f64>) -> Result<Derivative>
where
    F: Fn(Vec2) -> Result<f64>,
{
    match order {
        1 => fd_gradient(&f, u, step.unwrap_or_else(|| default_step(u))).map(Derivative::Gradient),
        2 => fd_hessian(&f, u, step.unwrap_or_else(|| default_step_second(u))).map(Derivative::Hessian),
        _ => Err(Error::Argument(format!("derivative order {order} is not 1 or 2"))),
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("finite-difference step {h} must be positive")))
    }
}

fn shifted(u: Vec2, i: usize, t: f64) -> Vec2 {
    let mut w = u;
    w[i] += t;
    w
}

pub fn fd_gradient<F>(f: &F, u: Vec2, h: f64) -> Result<Vec2>
where
    F: Fn(Vec2) -> Result<f64>,
{
    check_step(h)?;
    let mut g = [0.0; 2];
    for (i, gi) in g.iter_mut().enumerate() {
        *gi = (f(shifted(u, i, h))? - f(shifted(u, i, -h))?) / (2.0 * h);
    }
    Ok(g)
}

pub fn fd_hessian<F>(f: &F, u: Vec2, h: f64) -> Result<Mat22>
where
    F: Fn(Vec2) -> Result<f64>,
{
    check_step(h)?;
    let f0 = f(u)?;
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        m[i][i] = (f(shifted(u, i, h))? - 2.0 * f0 + f(shifted(u, i, -h))?) / (h * h);
    }
    let pp = f([u[0] + h, u[1] + h])?;
    let pm = f([u[0] + h, u[1] - h])?;
    let mp = f([u[0] - h, u[1] + h])?;
    let mm = f([u[0] - h, u[1] - h])?;
    m[0][1] = (pp - pm - mp + mm) / (4.0 * h * h);
    m[1][0] = m[0][1];
    Ok(m)
}

/// Central-difference Jacobian of a vector field; row `i` holds `∇F_i`.
pub fn fd_jacobian<F>(f: &F, u: Vec2, h: f64) -> Result<Mat22>
where
    F: Fn(Vec2) -> Result<Vec2>,
{
    check_step(h)?;
    let mut m = [[0.0; 2]; 2];
    for j in 0..2 {
        let p = f(shifted(u, j, h))?;
        let q = f(shifted(u, j, -h))?;
        for i in 0..2 {
            m[i][j] = (p[i] - q[i]) / (2.0 * h);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn subdet_identity_like() {
        let m = Mat32::from_rows([1.0, 0.0], [0.0, 1.0], [5.0, 5.0]);
        assert_eq!(subdet(&m, (1, 2)).unwrap(), 1.0);
        assert_eq!(subdet(&m, (1, 3)).unwrap(), 5.0);
        assert!(subdet(&m, (2, 2)).is_err());
        assert!(subdet(&m, (0, 1)).is_err());
    }

    #[test]
    fn rank_one_of_outer_and_zero() {
        let m = Mat32::outer([1.0, 2.0, 3.0], [4.0, 5.0]);
        assert!(rank_one_residual(&m) < 1e-12);
        assert_eq!(rank_one_residual(&Mat32::zero()), 0.0);
    }

    #[test]
    fn rank_one_of_partial_identity() {
        // Gram matrix is the 2x2 identity, so both singular values are 1.
        let m = Mat32::from_rows([1.0, 0.0], [0.0, 1.0], [0.0, 0.0]);
        assert!((rank_one_residual(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_of_square() {
        let g = numeric_derivative(|u| Ok(u[0] * u[0]), [3.0, 7.0], 1, Some(1e-5)).unwrap();
        let Derivative::Gradient(g) = g else { panic!() };
        assert!((g[0] - 6.0).abs() < 1e-8 && g[1].abs() < 1e-8);
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        for order in [1, 2] {
            match numeric_derivative(|_| Ok(4.2), [0.3, -1.0], order, None).unwrap() {
                Derivative::Gradient(g) => assert!(norm(g) < 1e-10),
                Derivative::Hessian(h) => assert!(h.iter().flatten().all(|x| x.abs() < 1e-10)),
            }
        }
    }

    #[test]
    fn bad_order_and_step_rejected() {
        assert!(numeric_derivative(|_| Ok(0.0), [0.0, 0.0], 3, None).is_err());
        assert!(numeric_derivative(|_| Ok(0.0), [0.0, 0.0], 1, Some(0.0)).is_err());
    }

    #[test]
    fn domain_errors_propagate() {
        let f = |u: Vec2| {
            if u[0] > 0.0 {
                Ok(u[0].ln())
            } else {
                Err(Error::Domain { state: u, domain: "u1 > 0".into() })
            }
        };
        assert!(matches!(
            numeric_derivative(f, [1e-9, 0.0], 1, Some(1e-5)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn jet_chain_rule_matches_direct_formula() {
        // g(x, y) = x * y composed with x = a^2, y = a + b.
        let u = [0.7, -1.3];
        let a = Jet2::var(0, u);
        let b = Jet2::var(1, u);
        let inner = [a.mul(&a), a.add(&b)];
        let w = [inner[0].v, inner[1].v];
        let g = Jet2::var(0, w).mul(&Jet2::var(1, w)).compose(&inner);
        let direct = a.mul(&a).mul(&a.add(&b));
        assert!((g.v - direct.v).abs() < 1e-14);
        for i in 0..2 {
            assert!((g.g[i] - direct.g[i]).abs() < 1e-13);
            for j in 0..2 {
                assert!((g.h[i][j] - direct.h[i][j]).abs() < 1e-13);
            }
        }
    }

    fn mat32_strategy() -> impl Strategy<Value = Mat32> {
        prop::array::uniform3(prop::array::uniform2(-10.0..10.0f64)).prop_map(Mat32)
    }

    proptest! {
        #[test]
        fn subdet_is_antisymmetric(m in mat32_strategy()) {
            for (r, s) in ROW_PAIRS {
                prop_assert_eq!(subdet(&m, (r, s)).unwrap(), -subdet(&m, (s, r)).unwrap());
            }
        }

        #[test]
        fn outer_products_are_rank_one(a in prop::array::uniform3(-5.0..5.0f64), n in prop::array::uniform2(-5.0..5.0f64)) {
            let m = Mat32::outer(a, n);
            prop_assert!(rank_one_residual(&m) <= 1e-12 * m.frobenius().max(1.0));
        }

        #[test]
        fn residual_is_scale_equivariant(m in mat32_strategy(), t in -4.0..4.0f64) {
            let r = rank_one_residual(&m);
            let rt = rank_one_residual(&m.scaled(t));
            prop_assert!((rt - t.abs() * r).abs() <= 1e-10 * (1.0 + m.frobenius() * t.abs()));
        }

        #[test]
        fn quadratics_are_differentiated_exactly(c in prop::array::uniform6(-3.0..3.0f64), u in prop::array::uniform2(-2.0..2.0f64)) {
            let f = |w: Vec2| Ok(c[0] + c[1] * w[0] + c[2] * w[1] + c[3] * w[0] * w[0] + c[4] * w[0] * w[1] + c[5] * w[1] * w[1]);
            let Derivative::Gradient(g) = numeric_derivative(f, u, 1, Some(1e-4)).unwrap() else { unreachable!() };
            let Derivative::Hessian(h) = numeric_derivative(f, u, 2, Some(1e-4)).unwrap() else { unreachable!() };
            prop_assert!((g[0] - (c[1] + 2.0 * c[3] * u[0] + c[4] * u[1])).abs() < 1e-8);
            prop_assert!((g[1] - (c[2] + c[4] * u[0] + 2.0 * c[5] * u[1])).abs() < 1e-8);
            // Second differences at h = 1e-4 carry rounding of order 4ε·S/h² with S the term magnitude.
            let s = c[0].abs() + (c[1] * u[0]).abs() + (c[2] * u[1]).abs() + 3.0 * c[3..].iter().map(|x| x.abs()).fold(0.0, f64::max) * (u[0].abs() + u[1].abs()).powi(2);
            let tol = 1e-7 * (1.0 + s);
            prop_assert!((h[0][0] - 2.0 * c[3]).abs() < tol);
            prop_assert!((h[0][1] - c[4]).abs() < tol);
            prop_assert!((h[1][1] - 2.0 * c[5]).abs() < tol);
        }
    }
}

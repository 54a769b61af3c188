//! Complex 2x2 matrices, spinors, and the Pauli basis.
//!
//! Every protocol acts on a two-level internal space, so this module carries
//! exactly the algebra that the rest of the crate needs: products, adjoints,
//! unitarity/hermiticity predicates, the Pauli constants, and a closed-form
//! eigendecomposition. General n x n linear algebra is out of scope.

use num_complex::Complex64;

/// Complex amplitude stored as a double-precision real/imaginary pair.
pub type ComplexAmplitude = Complex64;

const C_ZERO: ComplexAmplitude = Complex64::new(0.0, 0.0);
const C_ONE: ComplexAmplitude = Complex64::new(1.0, 0.0);
const C_I: ComplexAmplitude = Complex64::new(0.0, 1.0);

/// A 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub e: [[ComplexAmplitude; 2]; 2],
}

/// Identity matrix.
pub const IDENTITY: Mat2 = Mat2 {
    e: [[C_ONE, C_ZERO], [C_ZERO, C_ONE]],
};

/// Pauli x.
pub const SIGMA_X: Mat2 = Mat2 {
    e: [[C_ZERO, C_ONE], [C_ONE, C_ZERO]],
};

/// Pauli y.
pub const SIGMA_Y: Mat2 = Mat2 {
    e: [
        [C_ZERO, Complex64::new(0.0, -1.0)],
        [C_I, C_ZERO],
    ],
};

/// Pauli z.
pub const SIGMA_Z: Mat2 = Mat2 {
    e: [
        [C_ONE, C_ZERO],
        [C_ZERO, Complex64::new(-1.0, 0.0)],
    ],
};

impl Mat2 {
    pub const fn new(
        e00: ComplexAmplitude,
        e01: ComplexAmplitude,
        e10: ComplexAmplitude,
        e11: ComplexAmplitude,
    ) -> Self {
        Mat2 {
            e: [[e00, e01], [e10, e11]],
        }
    }

    /// Real rotation about the y axis of the internal space, `e^{-i phi sigma_y}`.
    pub fn rotation_y(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Mat2::new(c.into(), (-s).into(), s.into(), c.into())
    }

    /// Diagonal momentum phase `e^{i phi sigma_z} = diag(e^{i phi}, e^{-i phi})`.
    pub fn phase_z(phi: f64) -> Self {
        Mat2::new(
            Complex64::from_polar(1.0, phi),
            C_ZERO,
            C_ZERO,
            Complex64::from_polar(1.0, -phi),
        )
    }

    /// `a . sigma` for a real 3-vector `a`.
    pub fn from_axis(a: [f64; 3]) -> Self {
        Mat2::new(
            Complex64::new(a[2], 0.0),
            Complex64::new(a[0], -a[1]),
            Complex64::new(a[0], a[1]),
            Complex64::new(-a[2], 0.0),
        )
    }

    pub fn trace(&self) -> ComplexAmplitude {
        self.e[0][0] + self.e[1][1]
    }

    pub fn det(&self) -> ComplexAmplitude {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Mat2::new(
            self.e[0][0].conj(),
            self.e[1][0].conj(),
            self.e[0][1].conj(),
            self.e[1][1].conj(),
        )
    }

    /// Elementwise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        Mat2::new(
            self.e[0][0].conj(),
            self.e[0][1].conj(),
            self.e[1][0].conj(),
            self.e[1][1].conj(),
        )
    }

    pub fn scale(&self, s: ComplexAmplitude) -> Self {
        Mat2::new(
            self.e[0][0] * s,
            self.e[0][1] * s,
            self.e[1][0] * s,
            self.e[1][1] * s,
        )
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest elementwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                m = m.max((self.e[r][c] - other.e[r][c]).norm());
            }
        }
        m
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).max_abs_diff(&IDENTITY) < tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) < tol
    }

    pub fn is_traceless(&self, tol: f64) -> bool {
        self.trace().norm() < tol
    }

    pub fn apply(&self, s: &Spinor) -> Spinor {
        Spinor {
            up: self.e[0][0] * s.up + self.e[0][1] * s.down,
            down: self.e[1][0] * s.up + self.e[1][1] * s.down,
        }
    }

    /// True if any entry is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.e
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.e;
        let b = &rhs.e;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] + rhs.e[0][0],
            self.e[0][1] + rhs.e[0][1],
            self.e[1][0] + rhs.e[1][0],
            self.e[1][1] + rhs.e[1][1],
        )
    }
}

impl std::ops::Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] - rhs.e[0][0],
            self.e[0][1] - rhs.e[0][1],
            self.e[1][0] - rhs.e[1][0],
            self.e[1][1] - rhs.e[1][1],
        )
    }
}

impl std::ops::Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Two-component internal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub up: ComplexAmplitude,
    pub down: ComplexAmplitude,
}

impl Spinor {
    pub fn new(up: ComplexAmplitude, down: ComplexAmplitude) -> Self {
        Spinor { up, down }
    }

    /// Basis state with all weight on the up component.
    pub fn up_state() -> Self {
        Spinor::new(C_ONE, C_ZERO)
    }

    /// Basis state with all weight on the down component.
    pub fn down_state() -> Self {
        Spinor::new(C_ZERO, C_ONE)
    }

    /// Equal-weight state `(1, i)/sqrt(2)`; spreads symmetrically under real coins.
    pub fn balanced() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Spinor::new(Complex64::new(r, 0.0), Complex64::new(0.0, r))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() < tol
    }

    /// `<self|other>` with this spinor conjugated.
    pub fn inner(&self, other: &Spinor) -> ComplexAmplitude {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    pub fn scale(&self, s: ComplexAmplitude) -> Spinor {
        Spinor::new(self.up * s, self.down * s)
    }

    pub fn normalized(&self) -> Spinor {
        let n = self.norm();
        self.scale(Complex64::new(1.0 / n, 0.0))
    }
}

/// Result of the 2x2 eigendecomposition.
///
/// Eigenvalues are ordered so that the phase of the first lies in `[0, pi]`
/// (the positive branch used everywhere downstream). `degenerate` is set when
/// the two eigenvalues coincide to within 1e-12, which marks a gapless point
/// for protocol unitaries.
#[derive(Debug, Clone, Copy)]
pub struct EigenPair {
    pub values: [ComplexAmplitude; 2],
    pub vectors: [Spinor; 2],
    pub degenerate: bool,
}

const DEGENERACY_EPS: f64 = 1e-12;

/// Closed-form eigendecomposition of a 2x2 complex matrix.
pub fn eigendecompose(u: &Mat2) -> EigenPair {
    let tr = u.trace();
    let disc = tr * tr - u.det().scale(4.0);
    let root = disc.sqrt();
    let half = Complex64::new(0.5, 0.0);
    let mut values = [(tr + root) * half, (tr - root) * half];
    if values[0].arg() < values[1].arg() {
        values.swap(0, 1);
    }
    let degenerate = (values[0] - values[1]).norm() < DEGENERACY_EPS;

    let off_weight = u.e[0][1].norm() + u.e[1][0].norm();
    let vector_for = |lambda: ComplexAmplitude, fallback: Spinor| -> Spinor {
        if off_weight < 1e-14 {
            // Diagonal matrix: pick the basis vector whose entry matches.
            return if (u.e[0][0] - lambda).norm() <= (u.e[1][1] - lambda).norm() {
                Spinor::up_state()
            } else {
                Spinor::down_state()
            };
        }
        // Rows of (U - lambda I) give two candidate null vectors; take the
        // better conditioned one.
        let cand_a = Spinor::new(u.e[0][1], lambda - u.e[0][0]);
        let cand_b = Spinor::new(lambda - u.e[1][1], u.e[1][0]);
        let v = if cand_a.norm_sqr() >= cand_b.norm_sqr() {
            cand_a
        } else {
            cand_b
        };
        if v.norm_sqr() < 1e-28 {
            fallback
        } else {
            v.normalized()
        }
    };

    let vectors = [
        vector_for(values[0], Spinor::up_state()),
        vector_for(values[1], Spinor::down_state()),
    ];
    EigenPair {
        values,
        vectors,
        degenerate,
    }
}

/// Largest residual `|U v - lambda v|` over the two eigenpairs.
pub fn eigen_residual(u: &Mat2, pair: &EigenPair) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        let uv = u.apply(&pair.vectors[i]);
        let lv = pair.vectors[i].scale(pair.values[i]);
        let d = (uv.up - lv.up).norm().hypot((uv.down - lv.down).norm());
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn pauli_relations_exact() {
        assert_eq!(SIGMA_X * SIGMA_X, IDENTITY);
        assert_eq!(SIGMA_Y * SIGMA_Y, IDENTITY);
        assert_eq!(SIGMA_Z * SIGMA_Z, IDENTITY);
        // Cyclic products: sigma_x sigma_y = i sigma_z and permutations.
        assert_eq!(SIGMA_X * SIGMA_Y, SIGMA_Z.scale(C_I));
        assert_eq!(SIGMA_Y * SIGMA_Z, SIGMA_X.scale(C_I));
        assert_eq!(SIGMA_Z * SIGMA_X, SIGMA_Y.scale(C_I));
    }

    #[test]
    fn pauli_product_z_times_y() {
        // sigma_z sigma_y = -i sigma_x
        let expect = SIGMA_X.scale(Complex64::new(0.0, -1.0));
        assert_eq!(SIGMA_Z * SIGMA_Y, expect);
    }

    #[test]
    fn identity_preserves_random_unitary() {
        let u = Mat2::phase_z(0.83) * Mat2::rotation_y(1.2);
        assert_eq!(IDENTITY * u, u);
        assert_eq!(u * IDENTITY, u);
    }

    #[test]
    fn identity_eig_is_degenerate() {
        let pair = eigendecompose(&IDENTITY);
        assert!(pair.degenerate);
        assert!((pair.values[0] - C_ONE).norm() < 1e-15);
        assert!((pair.values[1] - C_ONE).norm() < 1e-15);
    }

    #[test]
    fn diagonal_phase_eig() {
        let u = Mat2::phase_z(PI / 3.0);
        let pair = eigendecompose(&u);
        assert!(!pair.degenerate);
        assert!((pair.values[0] - Complex64::from_polar(1.0, PI / 3.0)).norm() < 1e-15);
        assert!((pair.values[1] - Complex64::from_polar(1.0, -PI / 3.0)).norm() < 1e-15);
        assert!(eigen_residual(&u, &pair) < 1e-12);
    }

    #[test]
    fn coin_eigenphases_are_half_angles() {
        // A rotation about sigma_y has eigenvalues e^{+-i phi}; checked against
        // the characteristic polynomial lambda^2 - 2 cos(phi) lambda + 1 = 0.
        for &phi in &[0.3, 1.1, 2.0, 2.9] {
            let u = Mat2::rotation_y(phi);
            let pair = eigendecompose(&u);
            for v in pair.values {
                let p = v * v - v.scale(2.0 * phi.cos()) + C_ONE;
                assert!(p.norm() < 1e-13);
            }
            assert!((pair.values[0] - Complex64::from_polar(1.0, phi)).norm() < 1e-13);
        }
    }

    #[test]
    fn eig_residual_for_protocol_like_unitaries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let k = rng.gen_range(-PI..PI);
            let phi = rng.gen_range(-PI..PI);
            let k2 = rng.gen_range(-PI..PI);
            let phi2 = rng.gen_range(-PI..PI);
            let u = Mat2::phase_z(k) * Mat2::rotation_y(phi) * Mat2::phase_z(k2)
                * Mat2::rotation_y(phi2);
            assert!(u.is_unitary(1e-13));
            let pair = eigendecompose(&u);
            assert!(eigen_residual(&u, &pair) < 1e-12);
            // Ordering convention: first eigenphase in [0, pi].
            assert!(pair.values[0].arg() >= -1e-15);
        }
    }

    proptest! {
        #[test]
        fn mul_is_associative(angles in proptest::array::uniform6(-PI..PI)) {
            let a = Mat2::phase_z(angles[0]) * Mat2::rotation_y(angles[1]);
            let b = Mat2::phase_z(angles[2]) * Mat2::rotation_y(angles[3]);
            let c = Mat2::phase_z(angles[4]) * Mat2::rotation_y(angles[5]);
            let lhs = (a * b) * c;
            let rhs = a * (b * c);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }

        #[test]
        fn axis_matrices_are_hermitian_unitary(theta in 0.0..PI, phi in -PI..PI) {
            let a = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let m = Mat2::from_axis(a);
            prop_assert!(m.is_hermitian(1e-14));
            prop_assert!(m.is_unitary(1e-13));
            prop_assert!(m.is_traceless(1e-14));
            prop_assert!((m * m).max_abs_diff(&IDENTITY) < 1e-13);
        }
    }
}

//! Random states, rotations, and parameters for tests and verification.
//!
//! Everything is generic over a [`rand::Rng`], so callers control seeding
//! (the verification suite uses a fixed-seed ChaCha stream for bit-for-bit
//! reproducible reports).  Distributions are chosen for coverage, not for
//! exact Haar measure.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dynamics::{FullState, ReducedState};
use crate::liealg::{InertiaSpec, Rotation, SkewMatrix};
use crate::reduction::{Chart, Hemisphere};
use crate::Real;

/// Standard normal via Box–Muller (avoids a distributions dependency).
pub fn gaussian<T: Real>(rng: &mut impl Rng) -> T {
    loop {
        let u1: f64 = rng.random_range(0.0..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        if z.is_finite() {
            return T::of(z);
        }
    }
}

/// Uniform point on the unit sphere S^{n−1} ⊂ ℝⁿ.
pub fn random_unit_vector<T: Real>(n: usize, rng: &mut impl Rng) -> DVector<T> {
    loop {
        let v = DVector::from_fn(n, |_, _| gaussian::<T>(rng));
        let norm = v.norm();
        if norm.as_f64() > 1e-6 {
            return v / norm;
        }
    }
}

/// Random rotation: QR of a Gaussian matrix, sign-fixed by the diagonal of R,
/// with a final column flip if the determinant lands in the wrong component.
pub fn random_rotation<T: Real>(n: usize, rng: &mut impl Rng) -> Rotation<T> {
    let m = DMatrix::from_fn(n, n, |_, _| gaussian::<T>(rng));
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < T::zero() {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < T::zero() {
        for i in 0..n {
            q[(i, n - 1)] = -q[(i, n - 1)];
        }
    }
    Rotation::from_matrix(q).expect("QR output is orthogonal")
}

/// Random rotation with |e_nn| ≥ `min_abs` (rejection sampling): a generic
/// frame, safely away from the degenerate set of the reduction.
pub fn random_rotation_generic<T: Real>(n: usize, min_abs: f64, rng: &mut impl Rng) -> Rotation<T> {
    loop {
        let g = random_rotation::<T>(n, rng);
        if g.as_matrix()[(n - 1, n - 1)].abs().as_f64() >= min_abs {
            return g;
        }
    }
}

/// Random rotation with e_nn = 0 exactly: a random frame is turned in the
/// (1,n) coordinate plane until the (n,n) entry vanishes, and the entry is
/// then zeroed bit-exactly (the residual is a couple of ulps, so the
/// orthogonality defect stays at roundoff).
pub fn random_rotation_on_degenerate_set<T: Real>(n: usize, rng: &mut impl Rng) -> Rotation<T> {
    loop {
        let g = random_rotation::<T>(n, rng);
        let gm = g.as_matrix();
        let a = gm[(0, n - 1)];
        let b = gm[(n - 1, n - 1)];
        let r = a.hypot(b);
        if r.as_f64() < 1e-6 {
            continue;
        }
        let s = -b / r;
        let c = a / r;
        let mut out = gm.clone();
        for j in 0..n {
            let top = gm[(0, j)];
            let bottom = gm[(n - 1, j)];
            out[(0, j)] = c * top - s * bottom;
            out[(n - 1, j)] = s * top + c * bottom;
        }
        out[(n - 1, n - 1)] = T::zero();
        match Rotation::from_matrix(out) {
            Ok(rot) => return rot,
            Err(_) => continue,
        }
    }
}

/// Random point of the reduced phase space S^{n−1} × ℝ^{n−1}: uniform 𝐪,
/// Gaussian momenta scaled by `p_scale`.
pub fn random_reduced_state<T: Real>(
    n: usize,
    p_scale: f64,
    rng: &mut impl Rng,
) -> ReducedState<T> {
    let q = random_unit_vector::<T>(n, rng);
    let p = DVector::from_fn(n - 1, |_, _| gaussian::<T>(rng) * T::of(p_scale));
    ReducedState::new(q, p).expect("unit vector is nonzero")
}

/// Random reduced state with |qₙ| ≥ `min_q_n` (both hemispheres), for tests
/// that must start away from the equator.
pub fn random_interior_state<T: Real>(
    n: usize,
    min_q_n: f64,
    p_scale: f64,
    rng: &mut impl Rng,
) -> ReducedState<T> {
    loop {
        let s = random_reduced_state::<T>(n, p_scale, rng);
        if s.q_n().abs().as_f64() >= min_q_n {
            return s;
        }
    }
}

/// Random chart point: q uniform-ish in the ball with (q,q) ≤ `max_qq`,
/// Gaussian P scaled by `p_scale`, random hemisphere.
pub fn random_interior_chart<T: Real>(
    n: usize,
    max_qq: f64,
    p_scale: f64,
    rng: &mut impl Rng,
) -> Chart<T> {
    let m = n - 1;
    let q = loop {
        let cand = DVector::from_fn(m, |_, _| T::of(rng.random_range(-1.0..1.0)));
        if cand.dot(&cand).as_f64() <= max_qq {
            break cand;
        }
    };
    let sigma = if rng.random_range(0..2) == 0 {
        Hemisphere::Plus
    } else {
        Hemisphere::Minus
    };
    let p_pre = DVector::from_fn(m, |_, _| gaussian::<T>(rng) * T::of(p_scale));
    let qn = sigma.sign::<T>() * (T::one() - q.dot(&q)).sqrt();
    let p = &p_pre * qn;
    Chart {
        sigma,
        q,
        p_pre,
        p,
    }
}

/// Random skew-symmetric matrix with independent Gaussian wedge coefficients
/// scaled by `scale`.
pub fn random_skew<T: Real>(n: usize, scale: f64, rng: &mut impl Rng) -> SkewMatrix<T> {
    let entries: Vec<T> = (0..n * (n - 1) / 2)
        .map(|_| gaussian::<T>(rng) * T::of(scale))
        .collect();
    let mut k = 0;
    SkewMatrix::from_upper_fn(n, |_, _| {
        let v = entries[k];
        k += 1;
        v
    })
}

/// Random principal moments, uniform in [0.5, 3].
pub fn random_moments<T: Real>(n: usize, rng: &mut impl Rng) -> Vec<T> {
    (0..n).map(|_| T::of(rng.random_range(0.5..3.0))).collect()
}

/// Random physical inertia in dimension n (moments from [`random_moments`]).
pub fn random_physical_inertia<T: Real>(n: usize, rng: &mut impl Rng) -> InertiaSpec<T> {
    let moments = random_moments::<T>(n, rng);
    InertiaSpec::physical(&moments).expect("moments are positive")
}

/// Random full state over a generic frame: rotation from
/// [`random_rotation_generic`] (|e_nn| ≥ 0.1), Gaussian constraint velocities
/// scaled by `w_scale`.
pub fn random_full_state<T: Real>(n: usize, w_scale: f64, rng: &mut impl Rng) -> FullState<T> {
    let g = random_rotation_generic::<T>(n, 0.1, rng);
    let w = DVector::from_fn(n - 1, |_, _| gaussian::<T>(rng) * T::of(w_scale));
    FullState::new(g, w).expect("dimensions agree")
}

//! Reduction to the ball, Hamiltonization, and the invariant measure.
//!
//! Away from the equator Λ = {qₙ = 0} the sphere is the union of two
//! hemisphere charts over the open ball B = {(q,q) < 1} ⊂ ℝⁿ⁻¹, with
//! qₙ = σ√(1−(q,q)) and σ = ±.  In a chart the reduced flow becomes the
//! second-order system EL1 for (q, P), P = (1/qₙ²)Jq̇, with energy
//!
//! ```text
//!     H_σ = ½(1−(q,q))(AP,P) + V_σ(q),      V_σ(q) = v(q, σ√(1−(q,q))).
//! ```
//!
//! EL1 is not Hamiltonian — the flow only preserves the weighted measure
//! qₙ^{n−2} dq dP (see [`weighted_divergence_residual`]).  The time
//! substitution dτ = qₙ dt together with the momentum rescaling p = qₙP
//! removes the obstruction: in (q, p, τ) the equations become canonical,
//!
//! ```text
//!     q′ = ∂H*/∂p = Ap,        p′ = −∂H*/∂q = −∂V_σ/∂q,
//! ```
//!
//! a particle in the ball under the potential V_σ ([`el2_rhs`]).  Original
//! time is recovered from a τ-trajectory by the quadrature
//! t − t₀ = ∫ σ dτ/√(1−(q,q)) ([`time_reparametrize`]); for σ = − the
//! physical time runs backwards in τ.
//!
//! The reduction is honest only where constraint plus symmetry directions
//! span the whole tangent space of SO(n); [`span_rank`] measures that span
//! and drops below full rank exactly on {e_nn = 0}.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{reduced_step, ReducedState, Trajectory};
use crate::integrable::PotentialSpec;
use crate::liealg::{wedge_pairs, InertiaSpec, Rotation, SkewMatrix};
use crate::{Error, Real, Result};

/// Points with |qₙ| at or below this cannot be charted: P = p/qₙ would lose
/// half the mantissa.
pub const CHART_BOUNDARY_TOL: f64 = 1e-8;

/// Relative SVD threshold for [`span_rank`]: singular values above
/// `RANK_RELATIVE_TOL`·σ_max count toward the rank.
pub const RANK_RELATIVE_TOL: f64 = 1e-10;

/// Which hemisphere a chart lives on: the sign σ in qₙ = σ√(1−(q,q)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hemisphere {
    Plus,
    Minus,
}

impl Hemisphere {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Hemisphere::Plus => T::one(),
            Hemisphere::Minus => -T::one(),
        }
    }

    pub fn of<T: Real>(x: T) -> Self {
        if x >= T::zero() {
            Hemisphere::Plus
        } else {
            Hemisphere::Minus
        }
    }
}

/// A charted phase point: ball coordinates q, pre-rescaling momenta
/// P = (1/qₙ²)Jq̇, and Hamiltonized momenta p = qₙP.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart<T: Real> {
    pub sigma: Hemisphere,
    /// Ball coordinates, (q,q) < 1.
    pub q: DVector<T>,
    /// P (pre-rescaling).
    pub p_pre: DVector<T>,
    /// p = qₙ·P (canonical for the τ-flow).
    pub p: DVector<T>,
}

impl<T: Real> Chart<T> {
    /// qₙ = σ√(1−(q,q)).
    pub fn q_n(&self) -> T {
        let qq = self.q.dot(&self.q);
        self.sigma.sign::<T>() * (T::one() - qq).sqrt()
    }

    /// Chart from Hamiltonized data (q, p); P is recovered as p/qₙ.
    pub fn from_hamiltonized(sigma: Hemisphere, q: DVector<T>, p: DVector<T>) -> Result<Self> {
        let qq = q.dot(&q);
        if !(qq < T::one()) {
            return Err(Error::OnBoundary {
                q_n_abs: 0.0,
                threshold: CHART_BOUNDARY_TOL,
            });
        }
        let qn = sigma.sign::<T>() * (T::one() - qq).sqrt();
        let p_pre = &p / qn;
        Ok(Self {
            sigma,
            q,
            p_pre,
            p,
        })
    }

    /// The charted point as a state on the sphere.
    pub fn to_reduced(&self) -> ReducedState<T> {
        let m = self.q.len();
        let qn = self.q_n();
        let q_full = DVector::from_fn(m + 1, |i, _| if i < m { self.q[i] } else { qn });
        ReducedState::new(q_full, self.p.clone()).expect("chart points are interior")
    }
}

/// Charts a sphere point, failing on (or within [`CHART_BOUNDARY_TOL`] of)
/// the equator.
pub fn to_chart<T: Real>(s: &ReducedState<T>) -> Result<Chart<T>> {
    let qn = s.q_n();
    if qn.abs().as_f64() <= CHART_BOUNDARY_TOL {
        return Err(Error::OnBoundary {
            q_n_abs: qn.abs().as_f64(),
            threshold: CHART_BOUNDARY_TOL,
        });
    }
    let q = s.q_head();
    let p = s.p().clone();
    let p_pre = &p / qn;
    Ok(Chart {
        sigma: Hemisphere::of(qn),
        q,
        p_pre,
        p,
    })
}

/// Dimension of span({g⁻¹ξg : ξ ∈ so(n−1)} ∪ 𝔇) inside so(n) ≅ ℝ^{n(n−1)/2}:
/// the constraint distribution plus the symmetry directions at g.  Full rank
/// n(n−1)/2 away from {e_nn = 0}; on that submanifold the span degenerates
/// (by a fixed deficiency) and the Chaplygin reduction is no longer clean.
pub fn span_rank<T: Real>(g: &Rotation<T>) -> usize {
    let n = g.dim();
    let so_dim = n * (n - 1) / 2;
    let gm = g.as_matrix();
    let gt = gm.transpose();
    let mut columns: Vec<DVector<T>> = Vec::with_capacity(so_dim);
    // Symmetry directions: the right-translated so(n−1) generators.
    for &(i, j) in &wedge_pairs(n - 1) {
        let mut xi = DMatrix::zeros(n, n);
        xi[(i, j)] = T::one();
        xi[(j, i)] = -T::one();
        let conj = SkewMatrix::from_matrix(&gt * xi * gm);
        columns.push(conj.wedge_coordinates());
    }
    // Constraint directions: 𝔇 itself, already a coordinate subspace.
    for i in 0..n - 1 {
        let mut e = DVector::zeros(so_dim);
        // Index of the pair (i, n−1) in lexicographic order.
        let idx = wedge_pairs(n)
            .iter()
            .position(|&(a, b)| a == i && b == n - 1)
            .expect("pair exists");
        e[idx] = T::one();
        columns.push(e);
    }
    let mat = DMatrix::from_fn(so_dim, columns.len(), |r, c| columns[c][r]);
    let svals = mat.singular_values();
    let smax = svals.max();
    if !(smax > T::zero()) {
        return 0;
    }
    let tol = T::of(RANK_RELATIVE_TOL) * smax;
    svals.iter().filter(|&&s| s > tol).count()
}

/// V_σ(q) = v(q, σ√(1−(q,q))) on the ball.
///
/// For the quadratic family the qₙ-dependence collapses to the constant ½Bₙ
/// (qₙ² = 1−(q,q)), so the value is σ-independent and polynomial; the heavy
/// body keeps a genuine σ√(1−(q,q)) term.
pub fn v_sigma<T: Real>(q: &DVector<T>, sigma: Hemisphere, pot: &PotentialSpec<T>) -> T {
    let m = q.len();
    let n = m + 1;
    let half = T::of(0.5);
    match pot.quadratic_family(n) {
        Some((c, b)) => {
            let mut v = half * b[n - 1];
            for i in 0..m {
                v += c[i] * q[i] + half * (b[i] - b[n - 1]) * q[i] * q[i];
            }
            v
        }
        None => {
            let qq = q.dot(q);
            let qn = sigma.sign::<T>() * (T::one() - qq).sqrt();
            let q_full = DVector::from_fn(n, |i, _| if i < m { q[i] } else { qn });
            pot.value(&q_full)
        }
    }
}

/// ∂V_σ/∂q, by the chain rule ∂V_σ/∂qᵢ = ∂v/∂qᵢ − (∂v/∂qₙ)qᵢ/qₙ (polynomial
/// closed form for the quadratic family).
pub fn v_sigma_grad<T: Real>(q: &DVector<T>, sigma: Hemisphere, pot: &PotentialSpec<T>) -> DVector<T> {
    let m = q.len();
    let n = m + 1;
    match pot.quadratic_family(n) {
        Some((c, b)) => DVector::from_fn(m, |i, _| c[i] + (b[i] - b[n - 1]) * q[i]),
        None => {
            let qq = q.dot(q);
            let qn = sigma.sign::<T>() * (T::one() - qq).sqrt();
            let q_full = DVector::from_fn(n, |i, _| if i < m { q[i] } else { qn });
            let grad = pot.gradient(&q_full);
            DVector::from_fn(m, |i, _| grad[i] - grad[n - 1] * q[i] / qn)
        }
    }
}

/// The chart energy H_σ = ½(1−(q,q))(AP,P) + V_σ(q).  Numerically equal to
/// the reduced energy of the same point (½(Ap,p) = ½qₙ²(AP,P)).
pub fn h_pm<T: Real>(c: &Chart<T>, inertia: &InertiaSpec<T>, pot: &PotentialSpec<T>) -> T {
    let qq = c.q.dot(&c.q);
    let ap = inertia.apply_inverse_metric(&c.p_pre);
    T::of(0.5) * (T::one() - qq) * ap.dot(&c.p_pre) + v_sigma(&c.q, c.sigma, pot)
}

/// EL1 on raw (q, P) coordinates — the chart image of the reduced flow in
/// original time:
///
/// ```text
///     q̇ = (1−(q,q))AP,
///     Ṗ = −∂H_σ/∂q + (AP,q)P − (P,AP)q.
/// ```
pub fn el1_field<T: Real>(
    q: &DVector<T>,
    p_pre: &DVector<T>,
    sigma: Hemisphere,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (DVector<T>, DVector<T>) {
    let qq = q.dot(q);
    let ap = inertia.apply_inverse_metric(p_pre);
    let ap_dot_p = ap.dot(p_pre);
    let ap_dot_q = ap.dot(q);
    let qdot = &ap * (T::one() - qq);
    // ∂H_σ/∂q = −(AP,P)q + ∇V_σ (the kinetic factor 1−(q,q) differentiates
    // into the first term).
    let h_q = q * (-ap_dot_p) + v_sigma_grad(q, sigma, pot);
    let pdot = -h_q + p_pre * ap_dot_q - q * ap_dot_p;
    (qdot, pdot)
}

/// [`el1_field`] at a chart point.
pub fn el1_rhs<T: Real>(
    c: &Chart<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (DVector<T>, DVector<T>) {
    el1_field(&c.q, &c.p_pre, c.sigma, inertia, pot)
}

/// The Hamiltonizing substitution: (q, p) with p = qₙP, the canonical
/// coordinates of the τ-flow.
pub fn hamiltonize<T: Real>(c: &Chart<T>) -> (DVector<T>, DVector<T>) {
    (c.q.clone(), c.p.clone())
}

/// EL2 — the canonical equations of H* = ½(Ap,p) + V_σ(q) in rescaled time:
/// (q′, p′) = (Ap, −∂V_σ/∂q).
pub fn el2_rhs<T: Real>(
    q: &DVector<T>,
    p: &DVector<T>,
    sigma: Hemisphere,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (DVector<T>, DVector<T>) {
    (
        inertia.apply_inverse_metric(p),
        -v_sigma_grad(q, sigma, pot),
    )
}

/// The conserved quantity of the τ-flow: H*_σ(q,p) = ½(Ap,p) + V_σ(q).
pub fn el2_energy<T: Real>(
    q: &DVector<T>,
    p: &DVector<T>,
    sigma: Hemisphere,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> T {
    let ap = inertia.apply_inverse_metric(p);
    T::of(0.5) * ap.dot(p) + v_sigma(q, sigma, pot)
}

/// Integration scheme for the τ-flow.  H* is separable, so besides the
/// default RK4 a symplectic leapfrog (velocity Verlet) is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum El2Method {
    #[default]
    Rk4,
    Leapfrog,
}

/// A trajectory of the Hamiltonized flow, on a uniform grid in rescaled
/// time τ.
#[derive(Debug, Clone)]
pub struct TauTrajectory<T: Real> {
    pub sigma: Hemisphere,
    pub taus: Vec<T>,
    pub qs: Vec<DVector<T>>,
    pub ps: Vec<DVector<T>>,
    /// H*_σ per sample.
    pub energies: Vec<T>,
}

impl<T: Real> TauTrajectory<T> {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

/// Integrates EL2 from (q₀, p₀) over `steps` steps of size `dtau`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_el2<T: Real>(
    q0: &DVector<T>,
    p0: &DVector<T>,
    sigma: Hemisphere,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
    dtau: T,
    steps: usize,
    record_every: usize,
    method: El2Method,
) -> Result<TauTrajectory<T>> {
    assert!(dtau > T::zero(), "step must be positive");
    let m = q0.len();
    assert_eq!(m, p0.len(), "q and p must have equal length");
    pot.validate_dim(m + 1)?;
    let every = record_every.max(1);
    let mut taus = Vec::with_capacity(steps / every + 2);
    let mut qs = Vec::with_capacity(steps / every + 2);
    let mut ps = Vec::with_capacity(steps / every + 2);
    let mut q = q0.clone();
    let mut p = p0.clone();
    taus.push(T::zero());
    qs.push(q.clone());
    ps.push(p.clone());
    let half = T::of(0.5);
    for step in 1..=steps {
        match method {
            El2Method::Rk4 => {
                let f = |q: &DVector<T>, p: &DVector<T>| el2_rhs(q, p, sigma, inertia, pot);
                let (k1q, k1p) = f(&q, &p);
                let (k2q, k2p) = f(&(&q + &k1q * (dtau * half)), &(&p + &k1p * (dtau * half)));
                let (k3q, k3p) = f(&(&q + &k2q * (dtau * half)), &(&p + &k2p * (dtau * half)));
                let (k4q, k4p) = f(&(&q + &k3q * dtau), &(&p + &k3p * dtau));
                let sixth = T::of(1.0 / 6.0);
                q += (k1q + (k2q + k3q) * T::of(2.0) + k4q) * (dtau * sixth);
                p += (k1p + (k2p + k3p) * T::of(2.0) + k4p) * (dtau * sixth);
            }
            El2Method::Leapfrog => {
                let p_half = &p - v_sigma_grad(&q, sigma, pot) * (dtau * half);
                q += inertia.apply_inverse_metric(&p_half) * dtau;
                p = p_half - v_sigma_grad(&q, sigma, pot) * (dtau * half);
            }
        }
        if !(q.iter().all(|x| x.is_finite()) && p.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite {
                step,
                t: (T::of(step as f64) * dtau).as_f64(),
            });
        }
        if step % every == 0 || step == steps {
            taus.push(T::of(step as f64) * dtau);
            qs.push(q.clone());
            ps.push(p.clone());
        }
    }
    let energies = (0..taus.len())
        .map(|k| el2_energy(&qs[k], &ps[k], sigma, inertia, pot))
        .collect();
    Ok(TauTrajectory {
        sigma,
        taus,
        qs,
        ps,
        energies,
    })
}

/// Cumulative ∫ f dx over a (possibly non-uniform) grid by composite Simpson:
/// each interval pair carries the quadratic through its three points, with
/// the half-interval value from the same parabola; a trailing odd interval
/// reuses the last triple.  O(h⁴) on smooth integrands.
pub(crate) fn cumulative_simpson<T: Real>(x: &[T], f: &[T], start: T) -> Vec<T> {
    assert_eq!(x.len(), f.len(), "grid and integrand lengths must agree");
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(start);
    if n == 1 {
        return out;
    }
    if n == 2 {
        out.push(start + (f[0] + f[1]) * (x[1] - x[0]) * T::of(0.5));
        return out;
    }
    // Integrals of the Newton form c0 + c1(u) + c2·u(u−h0) over [0,h0] and
    // [0,h0+h1], u = x − x_k.
    let triple = |k: usize| -> (T, T) {
        let h0 = x[k + 1] - x[k];
        let h1 = x[k + 2] - x[k + 1];
        let c0 = f[k];
        let c1 = (f[k + 1] - f[k]) / h0;
        let c2 = ((f[k + 2] - f[k + 1]) / h1 - c1) / (h0 + h1);
        let first = c0 * h0 + c1 * h0 * h0 * T::of(0.5) - c2 * h0 * h0 * h0 * T::of(1.0 / 6.0);
        let big = h0 + h1;
        let total = c0 * big + c1 * big * big * T::of(0.5)
            + c2 * (big * big * big * T::of(1.0 / 3.0) - h0 * big * big * T::of(0.5));
        (first, total)
    };
    let mut k = 0;
    while k + 2 < n {
        let base = out[k];
        let (first, total) = triple(k);
        out.push(base + first);
        out.push(base + total);
        k += 2;
    }
    if out.len() < n {
        // One interval left: integrate the last triple's parabola over its
        // second subinterval.
        let (first, total) = triple(n - 3);
        let tail = total - first;
        let base = out[n - 2];
        out.push(base + tail);
    }
    out
}

/// Recovers original time along a τ-trajectory through the quadrature
/// t(τ) = t₀ + ∫ σ dτ/√(1−(q,q)): composite Simpson on the stored grid.
/// Monotone increasing for σ = +, decreasing for σ = −.  Errors out if the
/// trajectory touches the ball boundary (integrand singular).
pub fn time_reparametrize<T: Real>(traj: &TauTrajectory<T>, t0: T) -> Result<Vec<T>> {
    let sign = traj.sigma.sign::<T>();
    let mut integrand = Vec::with_capacity(traj.len());
    for (k, q) in traj.qs.iter().enumerate() {
        let room = T::one() - q.dot(q);
        if room.as_f64() <= 1e-12 {
            return Err(Error::SingularIntegrand {
                index: k,
                value: room.as_f64(),
            });
        }
        integrand.push(sign / room.sqrt());
    }
    Ok(cumulative_simpson(&traj.taus, &integrand, t0))
}

/// Attaches the rescaled time τ(t) = ∫₀ᵗ qₙ ds to a trajectory integrated in
/// original time, by the same composite quadrature over its recorded grid.
pub fn attach_tau<T: Real, S>(traj: &mut Trajectory<T, S>) {
    let taus = cumulative_simpson(&traj.times, &traj.monitors.q_n, T::zero());
    traj.taus = Some(taus);
}

/// The density qₙ^(n−2) whose product with the chart volume dq dP the
/// EL1 flow preserves (the k = n−1 Chaplygin multiplier measure).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureDensity {
    pub exponent: u32,
}

impl MeasureDensity {
    pub fn for_dim(n: usize) -> Self {
        assert!(n >= 2, "dimension too small");
        Self {
            exponent: (n - 2) as u32,
        }
    }

    pub fn eval<T: Real>(&self, q_n: T) -> T {
        q_n.powi(self.exponent as i32)
    }
}

/// |div(ρ·X_EL1)| in the chart variables (q, P) by central finite differences
/// (step 1e−5, relative per-component scaling), with ρ(q) = qₙ^{n−2}.  Near
/// zero at interior points — the numerical certificate that the EL1 flow
/// preserves the multiplier-induced measure.
pub fn weighted_divergence_residual<T: Real>(
    c: &Chart<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> T {
    divergence_el1(c, inertia, pot, true)
}

/// |div X_EL1| itself (unweighted) — generically nonzero; the contrast that
/// makes the weighted result meaningful.
pub fn unweighted_divergence_el1<T: Real>(
    c: &Chart<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> T {
    divergence_el1(c, inertia, pot, false)
}

fn divergence_el1<T: Real>(
    c: &Chart<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
    weighted: bool,
) -> T {
    let m = c.q.len();
    let density = MeasureDensity::for_dim(m + 1);
    let sigma = c.sigma;
    let sign = sigma.sign::<T>();
    let field_k = |x: &DVector<T>, k: usize| -> T {
        let q = DVector::from_fn(m, |i, _| x[i]);
        let p_pre = DVector::from_fn(m, |i, _| x[m + i]);
        let (qdot, pdot) = el1_field(&q, &p_pre, sigma, inertia, pot);
        let rho = if weighted {
            let qn = sign * (T::one() - q.dot(&q)).sqrt();
            density.eval(qn)
        } else {
            T::one()
        };
        rho * if k < m { qdot[k] } else { pdot[k - m] }
    };
    let mut x = DVector::zeros(2 * m);
    for i in 0..m {
        x[i] = c.q[i];
        x[m + i] = c.p_pre[i];
    }
    let h = T::of(1e-5);
    let mut div = T::zero();
    for k in 0..2 * m {
        let hk = h * T::one().max(x[k].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += hk;
        xm[k] -= hk;
        div += (field_k(&xp, k) - field_k(&xm, k)) / (hk + hk);
    }
    div.abs()
}

/// Times at which a reduced trajectory crosses the equator Λ = {qₙ = 0},
/// located by a sign change between recorded samples and refined by bisection
/// on the integrator's own one-step map to 1e−10 in t.  Crossings are
/// resolved at the recording resolution: an even number of crossings inside
/// one recorded interval goes unseen.
pub fn lambda_crossings<T: Real>(
    traj: &Trajectory<T, ReducedState<T>>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Vec<T> {
    let mut crossings = Vec::new();
    for k in 0..traj.len().saturating_sub(1) {
        let qa = traj.monitors.q_n[k];
        let qb = traj.monitors.q_n[k + 1];
        if (qa > T::zero() && qb > T::zero()) || (qa < T::zero() && qb < T::zero()) {
            continue;
        }
        if qa == T::zero() {
            crossings.push(traj.times[k]);
            continue;
        }
        let width = traj.times[k + 1] - traj.times[k];
        let left = &traj.states[k];
        // Bisect the step fraction θ: q_n after one RK4 step of size θ.
        let mut lo = T::zero();
        let mut hi = width;
        let target = T::of(1e-10);
        while hi - lo > target {
            let mid = (lo + hi) * T::of(0.5);
            let qn_mid = reduced_step(left, inertia, pot, mid).q_n();
            if (qn_mid > T::zero()) == (qa > T::zero()) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        crossings.push(traj.times[k] + (lo + hi) * T::of(0.5));
    }
    crossings
}

//! The constrained equations of motion and their fixed-step integration.
//!
//! Two equivalent descriptions are propagated, both in the original time t:
//!
//! * the **full system** on SO(n) × 𝔇 — the frame g together with the
//!   admissible angular velocity coefficients w = (ω₁ₙ, …, ω_{n−1,n}),
//!
//!   ```text
//!       ġ = g·ω(w),        (Jẇ)ᵢ = (∂v/∂qᵢ)qₙ − (∂v/∂qₙ)qᵢ,
//!   ```
//!
//!   with (q₁,…,qₙ) = 𝐪 = last row of g (the commutator term of the
//!   Euler–Poincaré equation dies because [𝔇, 𝔇] ⊥ 𝔇 and ℐ preserves the
//!   splitting);
//!
//! * the **reduced system** on ℳ = Sⁿ⁻¹ × ℝⁿ⁻¹ in the variables (𝐪, p),
//!   obtained under the identification p = −Jw,
//!
//!   ```text
//!       q̇ᵢ = qₙ(Ap)ᵢ,   q̇ₙ = −(Ap, q),   ṗ = −qₙ ∂v/∂q + (∂v/∂qₙ) q,
//!   ```
//!
//!   smooth across the equator {qₙ = 0} and divergence-free in the
//!   coordinates (q, w) — see [`divergence_residual`].
//!
//! The integrator is classical RK4 with a fixed step; after every step the
//! frame is pulled back onto SO(n) by polar projection (full system) or 𝐪 is
//! renormalized (reduced system).  Fixed steps keep time grids reproducible,
//! which the cross-oracle comparisons rely on.

use nalgebra::{DMatrix, DVector};

use crate::integrable::{self, PhaseFunction, PotentialSpec};
use crate::liealg::{reorthonormalize, InertiaSpec, Rotation, SkewMatrix};
use crate::{Error, Real, Result};

/// State of the full system: the frame and the 𝔇-coefficients of ω.
///
/// Storing only the n−1 admissible coefficients makes the nonholonomic
/// constraints ⟨ω, Eᵢ∧Eⱼ⟩ = 0 (i < j < n) exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState<T: Real> {
    g: Rotation<T>,
    omega: DVector<T>,
}

impl<T: Real> FullState<T> {
    pub fn new(g: Rotation<T>, omega: DVector<T>) -> Result<Self> {
        if g.dim() != omega.len() + 1 {
            return Err(Error::DimensionMismatch {
                left: g.dim(),
                right: omega.len() + 1,
                context: "full state (omega must have length n-1)",
            });
        }
        Ok(Self { g, omega })
    }

    /// Completes a reduced state to a full one: the frame is an arbitrary
    /// rotation with last row 𝐪 and the velocity is w = −Ap.
    pub fn from_reduced(s: &ReducedState<T>, inertia: &InertiaSpec<T>) -> Result<Self> {
        let g = Rotation::with_poisson_vector(s.q_full())?;
        let omega = -inertia.apply_inverse_metric(s.p());
        Self::new(g, omega)
    }

    pub fn rotation(&self) -> &Rotation<T> {
        &self.g
    }

    /// The 𝔇-coefficients (ω₁ₙ, …, ω_{n−1,n}).
    pub fn omega(&self) -> &DVector<T> {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// ω assembled as a skew matrix (so(n−1)-part identically zero).
    pub fn omega_matrix(&self) -> SkewMatrix<T> {
        let n = self.dim();
        SkewMatrix::from_upper_fn(n, |i, j| {
            if j == n - 1 {
                self.omega[i]
            } else {
                T::zero()
            }
        })
    }

    /// The reduced image (𝐪, p) = (last row of g, −Jw).
    pub fn to_reduced(&self, inertia: &InertiaSpec<T>) -> ReducedState<T> {
        let q = self.g.poisson_vector();
        let p = -inertia.apply_metric(&self.omega);
        ReducedState::new(q, p).expect("a rotation row is unit")
    }
}

/// State of the reduced system: the Poisson vector 𝐪 ∈ Sⁿ⁻¹ and momenta
/// p ∈ ℝⁿ⁻¹.  The constructor normalizes 𝐪 (and rejects a zero vector), so
/// ‖𝐪‖ = 1 holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState<T: Real> {
    q_full: DVector<T>,
    p: DVector<T>,
}

impl<T: Real> ReducedState<T> {
    pub fn new(q_full: DVector<T>, p: DVector<T>) -> Result<Self> {
        if q_full.len() != p.len() + 1 {
            return Err(Error::DimensionMismatch {
                left: q_full.len(),
                right: p.len() + 1,
                context: "reduced state (p must have length n-1)",
            });
        }
        let norm = q_full.norm();
        if !(norm.as_f64() > 1e-150) {
            return Err(Error::ZeroVector {
                norm: norm.as_f64(),
            });
        }
        Ok(Self {
            q_full: q_full / norm,
            p,
        })
    }

    /// 𝐪 ∈ Sⁿ⁻¹ (all n components).
    pub fn q_full(&self) -> &DVector<T> {
        &self.q_full
    }

    /// The first n−1 components of 𝐪 (the chart coordinates q).
    pub fn q_head(&self) -> DVector<T> {
        DVector::from_fn(self.q_full.len() - 1, |i, _| self.q_full[i])
    }

    pub fn q_n(&self) -> T {
        self.q_full[self.q_full.len() - 1]
    }

    pub fn p(&self) -> &DVector<T> {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.q_full.len()
    }
}

/// Right-hand side of the full system: (ġ, ẇ).
pub fn full_rhs<T: Real>(
    s: &FullState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (DMatrix<T>, DVector<T>) {
    let n = s.dim();
    assert_eq!(inertia.dim(), n, "inertia dimension must match the state");
    let g = s.rotation().as_matrix();
    let gdot = g * s.omega_matrix().as_matrix();
    let q = s.rotation().poisson_vector();
    let wdot = inertia.apply_inverse_metric(&torque(&q, pot));
    (gdot, wdot)
}

/// The 𝔇-projected torque: (∂v/∂qᵢ)qₙ − (∂v/∂qₙ)qᵢ for i = 1..n−1.
fn torque<T: Real>(q: &DVector<T>, pot: &PotentialSpec<T>) -> DVector<T> {
    let n = q.len();
    let grad = pot.gradient(q);
    DVector::from_fn(n - 1, |i, _| grad[i] * q[n - 1] - grad[n - 1] * q[i])
}

/// Right-hand side of the reduced system: (𝐪̇, ṗ).  Defined — and smooth — on
/// all of ℳ including the equator.
pub fn reduced_rhs<T: Real>(
    s: &ReducedState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (DVector<T>, DVector<T>) {
    let q = s.q_full();
    let p = s.p();
    assert_eq!(inertia.dim(), s.dim(), "inertia dimension must match");
    qp_field(q, p, inertia, pot)
}

/// The same field on raw coordinate vectors (no normalization assumed); the
/// finite-difference divergence probe needs to evaluate off the sphere.
fn qp_field<T: Real>(
    q: &DVector<T>,
    p: &DVector<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (DVector<T>, DVector<T>) {
    let n = q.len();
    let qn = q[n - 1];
    let ap = inertia.apply_inverse_metric(p);
    let mut qdot = DVector::zeros(n);
    let mut ap_dot_q = T::zero();
    for i in 0..n - 1 {
        qdot[i] = qn * ap[i];
        ap_dot_q += ap[i] * q[i];
    }
    qdot[n - 1] = -ap_dot_q;
    let grad = pot.gradient(q);
    let pdot = DVector::from_fn(n - 1, |i, _| -qn * grad[i] + grad[n - 1] * q[i]);
    (qdot, pdot)
}

/// Energy of the full system, ½⟨ℐω, ω⟩ + v(𝐪) = ½ wᵀJw + v(𝐪).
pub fn energy_full<T: Real>(
    s: &FullState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> T {
    let w = s.omega();
    let kinetic = inertia.apply_metric(w).dot(w) * T::of(0.5);
    kinetic + pot.value(&s.rotation().poisson_vector())
}

/// Energy of the reduced system, ½(Ap, p) + v(𝐪); equals [`energy_full`]
/// under p = −Jw.
pub fn energy_reduced<T: Real>(
    s: &ReducedState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> T {
    let p = s.p();
    let kinetic = inertia.apply_inverse_metric(p).dot(p) * T::of(0.5);
    kinetic + pot.value(s.q_full())
}

/// |div X| of the reduced field in the 2n−1 variables (q₁,…,qₙ, w₁,…,w_{n−1})
/// by central finite differences (step `1e-5`, scaled per component by
/// max(1, |xₖ|)).  The flow preserves the standard volume in exactly these
/// variables, so the result is zero up to truncation.
pub fn divergence_residual<T: Real>(
    q_full: &DVector<T>,
    omega: &DVector<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> T {
    let n = q_full.len();
    assert_eq!(omega.len() + 1, n, "omega must have length n-1");
    let h = T::of(1e-5);
    // Component k of the field as a function of the stacked x = (q, w).
    let field_k = |x: &DVector<T>, k: usize| -> T {
        let q = DVector::from_fn(n, |i, _| x[i]);
        let w = DVector::from_fn(n - 1, |i, _| x[n + i]);
        if k < n - 1 {
            -w[k] * q[n - 1]
        } else if k == n - 1 {
            (0..n - 1).fold(T::zero(), |acc, i| acc + w[i] * q[i])
        } else {
            let grad = pot.gradient(&q);
            let t = DVector::from_fn(n - 1, |i, _| grad[i] * q[n - 1] - grad[n - 1] * q[i]);
            inertia.apply_inverse_metric(&t)[k - n]
        }
    };
    let mut x = DVector::zeros(2 * n - 1);
    for i in 0..n {
        x[i] = q_full[i];
    }
    for i in 0..n - 1 {
        x[n + i] = omega[i];
    }
    let mut div = T::zero();
    for k in 0..2 * n - 1 {
        let hk = h * T::one().max(x[k].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += hk;
        xm[k] -= hk;
        div += (field_k(&xp, k) - field_k(&xm, k)) / (hk + hk);
    }
    div.abs()
}

/// Per-sample diagnostics recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct Monitors<T: Real> {
    /// Energy ½⟨ℐω,ω⟩ + v (equivalently ½(Ap,p) + v).
    pub energy: Vec<T>,
    /// The last component of 𝐪 (distance from the equator Λ).
    pub q_n: Vec<T>,
    /// Full runs: ‖ggᵀ − Id‖_max; reduced runs: |‖𝐪‖ − 1|.
    pub frame_defect: Vec<T>,
    /// Values of the first integrals fᵢ when they exist for the run's
    /// (inertia, potential) pair.
    pub integrals: Option<Vec<DVector<T>>>,
}

/// A fixed-step trajectory: states and diagnostics on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real, S> {
    /// Sample times t (uniform: every `record_every`-th step).
    pub times: Vec<T>,
    /// Cumulative rescaled time τ(t) = ∫ qₙ dt on the same grid, when it has
    /// been attached (see [`crate::reduction::attach_tau`]).
    pub taus: Option<Vec<T>>,
    pub states: Vec<S>,
    pub monitors: Monitors<T>,
}

impl<T: Real, S> Trajectory<T, S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Knobs of [`integrate_full`] / [`integrate_reduced`].
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Record every k-th step (the initial state is always recorded).
    pub record_every: usize,
    /// Pull the frame back onto SO(n) (full) / renormalize 𝐪 (reduced) after
    /// each step.  On by default; disable only to observe raw drift.
    pub reproject: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            reproject: true,
        }
    }
}

/// One classical RK4 step of size `dt` for the field `f`.
fn rk4_step<T: Real>(
    f: &mut impl FnMut(&DVector<T>) -> DVector<T>,
    y: &DVector<T>,
    dt: T,
) -> DVector<T> {
    let half = T::of(0.5);
    let sixth = T::of(1.0 / 6.0);
    let k1 = f(y);
    let k2 = f(&(y + &k1 * (dt * half)));
    let k3 = f(&(y + &k2 * (dt * half)));
    let k4 = f(&(y + &k3 * dt));
    y + (k1 + (k2 + k3) * T::of(2.0) + k4) * (dt * sixth)
}

fn check_finite<T: Real>(y: &DVector<T>, step: usize, t: T) -> Result<()> {
    if y.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            step,
            t: t.as_f64(),
        })
    }
}

/// Drives `steps` RK4 steps, applying `project` after each one and recording
/// every `record_every`-th state (plus the initial one).  Returns the sample
/// times and flattened states; errors out with the step index if the state
/// stops being finite.
fn integrate_flat<T: Real>(
    f: &mut impl FnMut(&DVector<T>) -> DVector<T>,
    project: &mut impl FnMut(&mut DVector<T>),
    y0: DVector<T>,
    dt: T,
    steps: usize,
    record_every: usize,
) -> Result<(Vec<T>, Vec<DVector<T>>)> {
    assert!(dt > T::zero(), "time step must be positive");
    let every = record_every.max(1);
    let mut times = Vec::with_capacity(steps / every + 2);
    let mut samples = Vec::with_capacity(steps / every + 2);
    let mut y = y0;
    times.push(T::zero());
    samples.push(y.clone());
    for step in 1..=steps {
        let t = T::of(step as f64) * dt;
        y = rk4_step(f, &y, dt);
        project(&mut y);
        check_finite(&y, step, t)?;
        if step % every == 0 || step == steps {
            times.push(t);
            samples.push(y.clone());
        }
    }
    Ok((times, samples))
}

fn flatten_full<T: Real>(g: &DMatrix<T>, w: &DVector<T>) -> DVector<T> {
    let n = g.nrows();
    DVector::from_fn(n * n + n - 1, |k, _| {
        if k < n * n {
            g[(k / n, k % n)]
        } else {
            w[k - n * n]
        }
    })
}

fn unflatten_full<T: Real>(y: &DVector<T>, n: usize) -> (DMatrix<T>, DVector<T>) {
    let g = DMatrix::from_fn(n, n, |r, c| y[r * n + c]);
    let w = DVector::from_fn(n - 1, |i, _| y[n * n + i]);
    (g, w)
}

/// Integrates the full system from `s0` over `steps` steps of size `dt`.
///
/// `steps == 0` returns the one-sample trajectory {s0}.
pub fn integrate_full<T: Real>(
    s0: &FullState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
    dt: T,
    steps: usize,
    opts: &IntegrateOptions,
) -> Result<Trajectory<T, FullState<T>>> {
    let n = s0.dim();
    assert_eq!(inertia.dim(), n, "inertia dimension must match the state");
    pot.validate_dim(n)?;
    let mut f = |y: &DVector<T>| -> DVector<T> {
        let (g, w) = unflatten_full(y, n);
        // The raw matrix is used directly: RK4 stage points are off the
        // group, and the field formula does not require membership.
        let gdot = &g * assemble_omega(&w).as_matrix();
        let q = g.row(n - 1).transpose();
        let wdot = inertia.apply_inverse_metric(&torque(&q, pot));
        flatten_full(&gdot, &wdot)
    };
    let reproject = opts.reproject;
    let mut project = |y: &mut DVector<T>| {
        if reproject {
            let (g, w) = unflatten_full(y, n);
            if let Ok(r) = reorthonormalize(&g) {
                *y = flatten_full(r.as_matrix(), &w);
            }
        }
    };
    let y0 = flatten_full(s0.rotation().as_matrix(), s0.omega());
    let (times, samples) = integrate_flat(&mut f, &mut project, y0, dt, steps, opts.record_every)?;
    let states: Vec<FullState<T>> = samples
        .iter()
        .map(|y| {
            let (g, w) = unflatten_full(y, n);
            // Unvalidated wrap: with `reproject` off the frame is allowed to
            // drift, and the defect monitor reports by how much.
            FullState {
                g: Rotation::from_matrix_unchecked(g),
                omega: w,
            }
        })
        .collect();
    let monitors = full_monitors(&states, inertia, pot);
    Ok(Trajectory {
        times,
        taus: None,
        states,
        monitors,
    })
}

fn assemble_omega<T: Real>(w: &DVector<T>) -> SkewMatrix<T> {
    let n = w.len() + 1;
    SkewMatrix::from_upper_fn(n, |i, j| if j == n - 1 { w[i] } else { T::zero() })
}

fn full_monitors<T: Real>(
    states: &[FullState<T>],
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Monitors<T> {
    let n = inertia.dim();
    let id = DMatrix::<T>::identity(n, n);
    let mut energy = Vec::with_capacity(states.len());
    let mut q_n = Vec::with_capacity(states.len());
    let mut frame_defect = Vec::with_capacity(states.len());
    let with_integrals = integrable::first_integrals(inertia, pot).ok();
    let mut integrals = with_integrals.as_ref().map(|_| Vec::with_capacity(states.len()));
    for s in states {
        energy.push(energy_full(s, inertia, pot));
        let g = s.rotation().as_matrix();
        q_n.push(g[(n - 1, n - 1)]);
        frame_defect.push((g * g.transpose() - &id).amax());
        if let (Some(fs), Some(acc)) = (with_integrals.as_ref(), integrals.as_mut()) {
            let r = s.to_reduced(inertia);
            let (q, p) = (r.q_head(), r.p().clone());
            acc.push(DVector::from_fn(fs.len(), |i, _| fs[i].value(&q, &p)));
        }
    }
    Monitors {
        energy,
        q_n,
        frame_defect,
        integrals,
    }
}

/// Integrates the reduced system from `s0` over `steps` steps of size `dt`.
///
/// `steps == 0` returns the one-sample trajectory {s0}.
pub fn integrate_reduced<T: Real>(
    s0: &ReducedState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
    dt: T,
    steps: usize,
    opts: &IntegrateOptions,
) -> Result<Trajectory<T, ReducedState<T>>> {
    let n = s0.dim();
    assert_eq!(inertia.dim(), n, "inertia dimension must match the state");
    pot.validate_dim(n)?;
    let mut f = |y: &DVector<T>| -> DVector<T> {
        let q = DVector::from_fn(n, |i, _| y[i]);
        let p = DVector::from_fn(n - 1, |i, _| y[n + i]);
        let (qdot, pdot) = qp_field(&q, &p, inertia, pot);
        DVector::from_fn(2 * n - 1, |k, _| if k < n { qdot[k] } else { pdot[k - n] })
    };
    let reproject = opts.reproject;
    let mut project = |y: &mut DVector<T>| {
        if reproject {
            let norm = (0..n).fold(T::zero(), |a, i| a + y[i] * y[i]).sqrt();
            if norm > T::zero() {
                for i in 0..n {
                    y[i] /= norm;
                }
            }
        }
    };
    let mut y0 = DVector::zeros(2 * n - 1);
    for i in 0..n {
        y0[i] = s0.q_full()[i];
    }
    for i in 0..n - 1 {
        y0[n + i] = s0.p()[i];
    }
    let (times, samples) = integrate_flat(&mut f, &mut project, y0, dt, steps, opts.record_every)?;
    let states: Vec<ReducedState<T>> = samples
        .iter()
        .map(|y| ReducedState {
            q_full: DVector::from_fn(n, |i, _| y[i]),
            p: DVector::from_fn(n - 1, |i, _| y[n + i]),
        })
        .collect();
    let monitors = reduced_monitors(&states, inertia, pot);
    Ok(Trajectory {
        times,
        taus: None,
        states,
        monitors,
    })
}

/// A single projected RK4 step of the reduced system — the exact one-step map
/// the integrator iterates, exposed for event refinement (equator-crossing
/// bisection needs to re-step from a recorded sample with shrinking dt).
pub fn reduced_step<T: Real>(
    s: &ReducedState<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
    dt: T,
) -> ReducedState<T> {
    let n = s.dim();
    let mut f = |y: &DVector<T>| -> DVector<T> {
        let q = DVector::from_fn(n, |i, _| y[i]);
        let p = DVector::from_fn(n - 1, |i, _| y[n + i]);
        let (qdot, pdot) = qp_field(&q, &p, inertia, pot);
        DVector::from_fn(2 * n - 1, |k, _| if k < n { qdot[k] } else { pdot[k - n] })
    };
    let mut y = DVector::zeros(2 * n - 1);
    for i in 0..n {
        y[i] = s.q_full()[i];
    }
    for i in 0..n - 1 {
        y[n + i] = s.p()[i];
    }
    let mut y1 = rk4_step(&mut f, &y, dt);
    let norm = (0..n).fold(T::zero(), |a, i| a + y1[i] * y1[i]).sqrt();
    if norm > T::zero() {
        for i in 0..n {
            y1[i] /= norm;
        }
    }
    ReducedState {
        q_full: DVector::from_fn(n, |i, _| y1[i]),
        p: DVector::from_fn(n - 1, |i, _| y1[n + i]),
    }
}

fn reduced_monitors<T: Real>(
    states: &[ReducedState<T>],
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Monitors<T> {
    let mut energy = Vec::with_capacity(states.len());
    let mut q_n = Vec::with_capacity(states.len());
    let mut frame_defect = Vec::with_capacity(states.len());
    let with_integrals = integrable::first_integrals(inertia, pot).ok();
    let mut integrals = with_integrals.as_ref().map(|_| Vec::with_capacity(states.len()));
    for s in states {
        energy.push(energy_reduced(s, inertia, pot));
        q_n.push(s.q_n());
        frame_defect.push((s.q_full().norm() - T::one()).abs());
        if let (Some(fs), Some(acc)) = (with_integrals.as_ref(), integrals.as_mut()) {
            let (q, p) = (s.q_head(), s.p().clone());
            acc.push(DVector::from_fn(fs.len(), |i, _| fs[i].value(&q, &p)));
        }
    }
    Monitors {
        energy,
        q_n,
        frame_defect,
        integrals,
    }
}

/// Cubic-Hermite evaluation of a reduced trajectory at an off-grid time,
/// using the recorded states and the exact field at the bracketing samples.
/// Returns the raw (𝐪, p) pair (𝐪 interpolated, not re-normalized).
///
/// The grid must be uniform (which [`integrate_reduced`] produces); `t` is
/// clamped to the recorded range.
pub fn dense_reduced_eval<T: Real>(
    traj: &Trajectory<T, ReducedState<T>>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
    t: T,
) -> (DVector<T>, DVector<T>) {
    let n_samples = traj.len();
    assert!(n_samples >= 2, "dense evaluation needs at least two samples");
    let t0 = traj.times[0];
    let h = traj.times[1] - traj.times[0];
    let mut k = ((t - t0) / h).floor().to_usize().unwrap_or(0);
    if k + 1 >= n_samples {
        k = n_samples - 2;
    }
    let (sa, sb) = (&traj.states[k], &traj.states[k + 1]);
    let s = ((t - traj.times[k]) / h).clamp(T::zero(), T::one());
    let stack = |st: &ReducedState<T>| -> DVector<T> {
        let n = st.dim();
        DVector::from_fn(2 * n - 1, |i, _| {
            if i < n {
                st.q_full()[i]
            } else {
                st.p()[i - n]
            }
        })
    };
    let stack_d = |st: &ReducedState<T>| -> DVector<T> {
        let (qd, pd) = reduced_rhs(st, inertia, pot);
        let n = st.dim();
        DVector::from_fn(2 * n - 1, |i, _| if i < n { qd[i] } else { pd[i - n] })
    };
    let (ya, yb) = (stack(sa), stack(sb));
    let (da, db) = (stack_d(sa), stack_d(sb));
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = T::of(2.0) * s3 - T::of(3.0) * s2 + T::one();
    let h10 = s3 - T::of(2.0) * s2 + s;
    let h01 = -T::of(2.0) * s3 + T::of(3.0) * s2;
    let h11 = s3 - s2;
    let y = ya * h00 + da * (h10 * h) + yb * h01 + db * (h11 * h);
    let n = sa.dim();
    (
        DVector::from_fn(n, |i, _| y[i]),
        DVector::from_fn(n - 1, |i, _| y[n + i]),
    )
}

/// max_k |x_k − x_0| / max(|x_0|, floor): the relative drift of a monitored
/// quantity along a trajectory, with a floor guarding the zero-level case.
pub fn relative_drift<T: Real>(series: &[T]) -> T {
    if series.is_empty() {
        return T::zero();
    }
    let x0 = series[0];
    let scale = x0.abs().max(T::of(1e-30));
    series
        .iter()
        .fold(T::zero(), |acc, &x| acc.max((x - x0).abs()))
        / scale
}

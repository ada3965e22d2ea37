//! The integrable potentials of the reduced flow and their structure.
//!
//! For the quadratic family
//!
//! ```text
//!     v(𝐪) = C₁q₁ + … + C_{n−1}q_{n−1} + ½(B₁q₁² + … + Bₙqₙ²)
//! ```
//!
//! (the linear part alone, the diagonal quadratic alone, or their sum) the
//! Hamiltonized reduced system decouples: in the hemisphere chart the
//! functions
//!
//! ```text
//!     fᵢ(q, p) = pᵢ² + 2Cᵢ(Iᵢ+Iₙ)qᵢ + ϰᵢqᵢ²,      ϰᵢ = (Iᵢ+Iₙ)(Bᵢ−Bₙ),
//! ```
//!
//! Poisson-commute pairwise and with the Hamiltonian H* = Σᵢ fᵢ/(2(Iᵢ+Iₙ)),
//! giving n−1 independent integrals.  When every ϰᵢ > 0 the common level set
//! {fᵢ = cᵢ} is a product of circles intersected with the configuration ball,
//! parametrized by angles φᵢ moving uniformly in the rescaled time τ with
//! frequencies Ωᵢ = √((Bᵢ−Bₙ)/(Iᵢ+Iₙ)); depending on how the actions cᵢ
//! compare with the ϰᵢ the invariant manifold is a pair of tori, a handled
//! surface, disjoint spheres, or glued cylinders — [`classify_topology`]
//! reports which.
//!
//! The axially symmetric heavy body (first n−1 moments equal, potential εqₙ)
//! is integrable for a different reason: the reduced flow preserves every
//! angular momentum f_ij = qᵢpⱼ − qⱼpᵢ, the motion q(τ) stays in the plane
//! spanned by the initial position and velocity, and the n-th body axis,
//! followed in the space frame, obeys the spherical-pendulum equation
//! (I₁+Iₙ)ü = −εEₙ + λu — which [`spherical_pendulum_residual`] checks along
//! any integrated trajectory.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{FullState, Trajectory};
use crate::liealg::InertiaSpec;
use crate::{Error, Real, Result};

/// A potential energy v(𝐪) on the sphere, evaluated in body coordinates
/// 𝐪 = (q₁,…,qₙ).
///
/// `Zero` through `Combined` form the quadratic family with first integrals
/// fᵢ; `LagrangeTop` is the axially symmetric heavy body v = ε·qₙ (paired
/// with a symmetric inertia it conserves the f_ij instead).
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec<T: Real> {
    /// v ≡ 0.
    Zero,
    /// Linear pull on the first n−1 coordinates: v = Σᵢ₌₁^{n−1} Cᵢqᵢ.
    Kharlamova { c: DVector<T> },
    /// Diagonal quadratic: v = ½ Σᵢ₌₁ⁿ Bᵢqᵢ².
    KlebshTisserand { b: DVector<T> },
    /// The sum of the two previous: v = (C,q) + ½(B,q∘q).
    Combined { c: DVector<T>, b: DVector<T> },
    /// Axially symmetric heavy body: v = ε·qₙ.
    LagrangeTop { epsilon: T },
}

impl<T: Real> PotentialSpec<T> {
    /// Short variant name, used in error messages and reports.
    pub fn label(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Kharlamova { .. } => "kharlamova",
            PotentialSpec::KlebshTisserand { .. } => "klebsh_tisserand",
            PotentialSpec::Combined { .. } => "combined",
            PotentialSpec::LagrangeTop { .. } => "lagrange_top",
        }
    }

    /// Checks the coefficient vectors against the ambient dimension n:
    /// C has length n−1, B has length n.
    pub fn validate_dim(&self, n: usize) -> Result<()> {
        let check = |len: usize, expect: usize, what: &'static str| {
            if len == expect {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    left: len,
                    right: expect,
                    context: what,
                })
            }
        };
        match self {
            PotentialSpec::Zero | PotentialSpec::LagrangeTop { .. } => Ok(()),
            PotentialSpec::Kharlamova { c } => check(c.len(), n - 1, "potential C coefficients"),
            PotentialSpec::KlebshTisserand { b } => check(b.len(), n, "potential B coefficients"),
            PotentialSpec::Combined { c, b } => {
                check(c.len(), n - 1, "potential C coefficients")?;
                check(b.len(), n, "potential B coefficients")
            }
        }
    }

    /// v(𝐪) for a full body-frame point 𝐪 ∈ ℝⁿ (not necessarily unit).
    pub fn value(&self, q: &DVector<T>) -> T {
        let n = q.len();
        let half = T::of(0.5);
        match self {
            PotentialSpec::Zero => T::zero(),
            PotentialSpec::Kharlamova { c } => {
                assert_eq!(c.len() + 1, n, "C must have length n-1");
                (0..n - 1).map(|i| c[i] * q[i]).fold(T::zero(), |a, x| a + x)
            }
            PotentialSpec::KlebshTisserand { b } => {
                assert_eq!(b.len(), n, "B must have length n");
                (0..n).map(|i| b[i] * q[i] * q[i]).fold(T::zero(), |a, x| a + x) * half
            }
            PotentialSpec::Combined { c, b } => {
                PotentialSpec::Kharlamova { c: c.clone() }.value(q)
                    + PotentialSpec::KlebshTisserand { b: b.clone() }.value(q)
            }
            PotentialSpec::LagrangeTop { epsilon } => *epsilon * q[n - 1],
        }
    }

    /// ∇v(𝐪) ∈ ℝⁿ.
    pub fn gradient(&self, q: &DVector<T>) -> DVector<T> {
        let n = q.len();
        match self {
            PotentialSpec::Zero => DVector::zeros(n),
            PotentialSpec::Kharlamova { c } => {
                assert_eq!(c.len() + 1, n, "C must have length n-1");
                DVector::from_fn(n, |i, _| if i < n - 1 { c[i] } else { T::zero() })
            }
            PotentialSpec::KlebshTisserand { b } => {
                assert_eq!(b.len(), n, "B must have length n");
                DVector::from_fn(n, |i, _| b[i] * q[i])
            }
            PotentialSpec::Combined { c, b } => {
                assert_eq!(c.len() + 1, n, "C must have length n-1");
                assert_eq!(b.len(), n, "B must have length n");
                DVector::from_fn(n, |i, _| {
                    let lin = if i < n - 1 { c[i] } else { T::zero() };
                    lin + b[i] * q[i]
                })
            }
            PotentialSpec::LagrangeTop { epsilon } => {
                let mut g = DVector::zeros(n);
                g[n - 1] = *epsilon;
                g
            }
        }
    }

    /// The (C, B) coefficient pair of the quadratic family, zero-padded:
    /// `None` for the heavy-body potential, whose qₙ-linear term falls outside
    /// the family.
    pub fn quadratic_family(&self, n: usize) -> Option<(DVector<T>, DVector<T>)> {
        match self {
            PotentialSpec::Zero => Some((DVector::zeros(n - 1), DVector::zeros(n))),
            PotentialSpec::Kharlamova { c } => Some((c.clone(), DVector::zeros(n))),
            PotentialSpec::KlebshTisserand { b } => Some((DVector::zeros(n - 1), b.clone())),
            PotentialSpec::Combined { c, b } => Some((c.clone(), b.clone())),
            PotentialSpec::LagrangeTop { .. } => None,
        }
    }

    /// Max deviation of the analytic gradient from a central finite difference
    /// of `value` (step `h`, relatively scaled per component) — a self-test
    /// hook used by the randomized verification suite.
    pub fn gradient_fd_residual(&self, q: &DVector<T>, h: T) -> T {
        let n = q.len();
        let grad = self.gradient(q);
        let mut worst = T::zero();
        for k in 0..n {
            let hk = h * T::one().max(q[k].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += hk;
            qm[k] -= hk;
            let fd = (self.value(&qp) - self.value(&qm)) / (hk + hk);
            worst = worst.max((fd - grad[k]).abs());
        }
        worst
    }
}

/// A scalar function of a chart point (q, p) ∈ ℝ^{n−1}×ℝ^{n−1} with analytic
/// partial derivatives, the input contract of [`poisson_bracket`].
pub trait PhaseFunction<T: Real> {
    fn value(&self, q: &DVector<T>, p: &DVector<T>) -> T;
    fn grad_q(&self, q: &DVector<T>, p: &DVector<T>) -> DVector<T>;
    fn grad_p(&self, q: &DVector<T>, p: &DVector<T>) -> DVector<T>;
}

/// The canonical bracket {F, G} = Σᵢ (∂F/∂qᵢ ∂G/∂pᵢ − ∂F/∂pᵢ ∂G/∂qᵢ), built
/// from the functions' analytic gradients — no finite differences involved.
pub fn poisson_bracket<T, F, G>(f: &F, g: &G, q: &DVector<T>, p: &DVector<T>) -> T
where
    T: Real,
    F: PhaseFunction<T> + ?Sized,
    G: PhaseFunction<T> + ?Sized,
{
    let fq = f.grad_q(q, p);
    let fp = f.grad_p(q, p);
    let gq = g.grad_q(q, p);
    let gp = g.grad_p(q, p);
    let mut acc = T::zero();
    for i in 0..q.len() {
        acc += fq[i] * gp[i] - fp[i] * gq[i];
    }
    acc
}

/// One integral of the quadratic family,
/// fᵢ(q,p) = pᵢ² + 2Cᵢ(Iᵢ+Iₙ)qᵢ + ϰᵢqᵢ², depending on the single pair
/// (qᵢ, pᵢ) — which is why the fᵢ commute pairwise exactly.
#[derive(Debug, Clone)]
pub struct FirstIntegral<T: Real> {
    index: usize,
    /// 2Cᵢ(Iᵢ+Iₙ).
    linear: T,
    /// ϰᵢ = (Iᵢ+Iₙ)(Bᵢ−Bₙ).
    kappa: T,
}

impl<T: Real> FirstIntegral<T> {
    /// 0-based component index i.
    pub fn index(&self) -> usize {
        self.index
    }

    /// The oscillator strength ϰᵢ.
    pub fn kappa(&self) -> T {
        self.kappa
    }
}

impl<T: Real> PhaseFunction<T> for FirstIntegral<T> {
    fn value(&self, q: &DVector<T>, p: &DVector<T>) -> T {
        let (qi, pi) = (q[self.index], p[self.index]);
        pi * pi + self.linear * qi + self.kappa * qi * qi
    }

    fn grad_q(&self, q: &DVector<T>, _p: &DVector<T>) -> DVector<T> {
        let mut g = DVector::zeros(q.len());
        g[self.index] = self.linear + (self.kappa + self.kappa) * q[self.index];
        g
    }

    fn grad_p(&self, _q: &DVector<T>, p: &DVector<T>) -> DVector<T> {
        let mut g = DVector::zeros(p.len());
        g[self.index] = p[self.index] + p[self.index];
        g
    }
}

fn physical_moments<'a, T: Real>(
    inertia: &'a InertiaSpec<T>,
    operation: &'static str,
) -> Result<&'a DVector<T>> {
    inertia
        .moments()
        .ok_or(Error::PhysicalInertiaRequired { operation })
}

fn quadratic_family_or_err<T: Real>(
    pot: &PotentialSpec<T>,
    n: usize,
    operation: &'static str,
) -> Result<(DVector<T>, DVector<T>)> {
    pot.quadratic_family(n).ok_or(Error::UnsupportedPotential {
        operation,
        potential: pot.label(),
    })
}

/// The family {f₁,…,f_{n−1}} for a physical inertia and a quadratic-family
/// potential (missing coefficients read as zero).
pub fn first_integrals<T: Real>(
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Result<Vec<FirstIntegral<T>>> {
    let n = inertia.dim();
    let moments = physical_moments(inertia, "first_integrals")?;
    let (c, b) = quadratic_family_or_err(pot, n, "first_integrals")?;
    let two = T::of(2.0);
    Ok((0..n - 1)
        .map(|i| {
            let ji = moments[i] + moments[n - 1];
            FirstIntegral {
                index: i,
                linear: two * c[i] * ji,
                kappa: ji * (b[i] - b[n - 1]),
            }
        })
        .collect())
}

/// Values (f₁,…,f_{n−1}) at a chart point.
pub fn integrals_fi<T: Real>(
    q: &DVector<T>,
    p: &DVector<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Result<DVector<T>> {
    let fs = first_integrals(inertia, pot)?;
    Ok(DVector::from_fn(fs.len(), |i, _| fs[i].value(q, p)))
}

/// The vector (ϰ₁,…,ϰ_{n−1}), ϰᵢ = (Iᵢ+Iₙ)(Bᵢ−Bₙ).
pub fn kappa_vector<T: Real>(
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Result<DVector<T>> {
    let fs = first_integrals(inertia, pot)?;
    Ok(DVector::from_fn(fs.len(), |i, _| fs[i].kappa()))
}

/// The Hamiltonian of the rescaled flow,
/// H* = ½(Ap,p) + Σ Cᵢqᵢ + ½ Σ (Bᵢ−Bₙ)qᵢ², as a [`PhaseFunction`].
///
/// It differs from the chart energy only by the constant ½Bₙ (the value of
/// ½Bₙqₙ² = ½Bₙ(1−(q,q)) got absorbed), and equals Σᵢ fᵢ/(2(Iᵢ+Iₙ)).
#[derive(Debug, Clone)]
pub struct HStarFunction<T: Real> {
    a: DMatrix<T>,
    c: DVector<T>,
    b_diff: DVector<T>,
}

impl<T: Real> HStarFunction<T> {
    pub fn new(inertia: &InertiaSpec<T>, pot: &PotentialSpec<T>) -> Result<Self> {
        let n = inertia.dim();
        physical_moments(inertia, "h_star")?;
        let (c, b) = quadratic_family_or_err(pot, n, "h_star")?;
        let b_diff = DVector::from_fn(n - 1, |i, _| b[i] - b[n - 1]);
        Ok(Self {
            a: inertia.inverse_metric().clone(),
            c,
            b_diff,
        })
    }
}

impl<T: Real> PhaseFunction<T> for HStarFunction<T> {
    fn value(&self, q: &DVector<T>, p: &DVector<T>) -> T {
        let half = T::of(0.5);
        let kinetic = (&self.a * p).dot(p) * half;
        let mut potential = T::zero();
        for i in 0..q.len() {
            potential += self.c[i] * q[i] + half * self.b_diff[i] * q[i] * q[i];
        }
        kinetic + potential
    }

    fn grad_q(&self, q: &DVector<T>, _p: &DVector<T>) -> DVector<T> {
        DVector::from_fn(q.len(), |i, _| self.c[i] + self.b_diff[i] * q[i])
    }

    fn grad_p(&self, _q: &DVector<T>, p: &DVector<T>) -> DVector<T> {
        &self.a * p
    }
}

/// H*(q, p); see [`HStarFunction`].
pub fn h_star<T: Real>(
    q: &DVector<T>,
    p: &DVector<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Result<T> {
    Ok(HStarFunction::new(inertia, pot)?.value(q, p))
}

/// Angle variables on an invariant torus of the diagonal quadratic potential.
#[derive(Debug, Clone)]
pub struct KtAngles<T: Real> {
    /// φᵢ = atan2(√ϰᵢ·qᵢ, pᵢ), the uniform angle on the fᵢ-circle.
    pub phi: DVector<T>,
    /// Frequencies Ωᵢ = √((Bᵢ−Bₙ)/(Iᵢ+Iₙ)) of dφᵢ/dτ.
    pub omega: DVector<T>,
    /// Actions cᵢ = fᵢ(q, p) = pᵢ² + ϰᵢqᵢ².
    pub actions: DVector<T>,
    /// Components with cᵢ ≈ 0 carry no angle (the torus loses a dimension);
    /// their φᵢ is reported as 0 and flagged here.
    pub degenerate: Vec<bool>,
}

/// Angles and frequencies at a chart point of the diagonal quadratic
/// potential (a `Combined` whose linear part vanishes is accepted too).
///
/// Requires every ϰᵢ > 0, i.e. Bᵢ > Bₙ for i < n.
pub fn kt_angles<T: Real>(
    q: &DVector<T>,
    p: &DVector<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> Result<KtAngles<T>> {
    match pot {
        PotentialSpec::KlebshTisserand { .. } => {}
        PotentialSpec::Combined { c, .. } if c.iter().all(|&x| x == T::zero()) => {}
        _ => {
            return Err(Error::UnsupportedPotential {
                operation: "kt_angles",
                potential: pot.label(),
            })
        }
    }
    let n = inertia.dim();
    let moments = physical_moments(inertia, "kt_angles")?;
    let (_, b) = quadratic_family_or_err(pot, n, "kt_angles")?;
    let m = n - 1;
    let mut phi = DVector::zeros(m);
    let mut omega = DVector::zeros(m);
    let mut actions = DVector::zeros(m);
    let mut degenerate = vec![false; m];
    for i in 0..m {
        let ji = moments[i] + moments[n - 1];
        let kappa = ji * (b[i] - b[n - 1]);
        if !(kappa > T::zero()) {
            return Err(Error::KappaNotPositive {
                index: i + 1,
                value: kappa.as_f64(),
            });
        }
        let c_i = p[i] * p[i] + kappa * q[i] * q[i];
        actions[i] = c_i;
        omega[i] = ((b[i] - b[n - 1]) / ji).sqrt();
        // c_i = 0 only at the oscillator's rest point, where the angle is
        // undefined; the scale of c is set by kappa (q is order ≤ 1).
        if c_i <= T::of(1e-24) * kappa {
            degenerate[i] = true;
            phi[i] = T::zero();
        } else {
            phi[i] = (kappa.sqrt() * q[i]).atan2(p[i]);
        }
    }
    Ok(KtAngles {
        phi,
        omega,
        actions,
        degenerate,
    })
}

/// Which side of its ϰᵢ an action cᵢ falls on (the classifier's per-component
/// certificate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionBand {
    /// cᵢ ≈ 0: the component carries no angle.
    Zero,
    /// 0 < cᵢ < ϰᵢ.
    Interior,
    /// cᵢ > ϰᵢ.
    Above,
    /// |cᵢ − ϰᵢ| within tolerance: a bifurcation value.
    Tie,
}

/// The diffeomorphism type of the common level set {fᵢ = cᵢ} ⊂ ℳ of the
/// diagonal quadratic case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyTag {
    /// Σcᵢ/ϰᵢ < 1: a disjoint pair of l-tori inside the two hemispheres,
    /// l = #{cᵢ > 0}.
    InteriorTori { dim: usize },
    /// All cᵢ interior but the ratios add to ≥ 1: a connected surface — a
    /// sphere with handles (for n = 3, genus five).
    HandledSurface,
    /// All cᵢ > ϰᵢ: a disjoint union of 2ⁿ⁻¹ spheres Sⁿ⁻¹.
    SpheresDisjoint { count: usize },
    /// Exactly one cᵢ > ϰᵢ, the rest interior: two cylinders T^{n−2}×[0,1]
    /// glued into a pair of (n−1)-tori.
    CylinderTori { torus_dim: usize },
    /// A tie (bifurcation value) or a pattern the classification does not
    /// cover.
    Degenerate { reason: String },
}

/// Classifier output: the tag plus the comparison pattern it was derived
/// from (the certificate).
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyClass<T: Real> {
    pub tag: TopologyTag,
    /// cᵢ/ϰᵢ per component.
    pub ratios: Vec<T>,
    /// Σ cᵢ/ϰᵢ.
    pub ratio_sum: T,
    /// Band of each component.
    pub bands: Vec<ActionBand>,
}

/// Decides the topology of {fᵢ = cᵢ} from the actions c and strengths ϰ.
///
/// All comparisons are relative (scaled by ϰᵢ), so the tag is invariant under
/// (c, ϰ) ↦ (λc, λϰ) for λ > 0.  Bifurcation values — any cᵢ within `tol` of
/// 0 or of ϰᵢ outside the interior-tori regime, or Σc/ϰ within `tol` of 1 —
/// are reported as `Degenerate` rather than forced into a chart.
pub fn classify_topology<T: Real>(c: &[T], kappa: &[T], tol: T) -> TopologyClass<T> {
    let m = c.len();
    assert_eq!(m, kappa.len(), "need one kappa per action");
    let degenerate = |reason: String, ratios: Vec<T>, sum: T, bands: Vec<ActionBand>| {
        TopologyClass {
            tag: TopologyTag::Degenerate { reason },
            ratios,
            ratio_sum: sum,
            bands,
        }
    };

    if kappa.iter().any(|&k| !(k > T::zero())) {
        return degenerate(
            "kappa must be positive".to_string(),
            vec![T::zero(); m],
            T::zero(),
            vec![ActionBand::Tie; m],
        );
    }
    if c.iter().any(|&ci| ci < T::zero()) {
        return degenerate(
            "actions must be nonnegative".to_string(),
            vec![T::zero(); m],
            T::zero(),
            vec![ActionBand::Tie; m],
        );
    }

    let ratios: Vec<T> = (0..m).map(|i| c[i] / kappa[i]).collect();
    let sum = ratios.iter().fold(T::zero(), |a, &r| a + r);
    let bands: Vec<ActionBand> = (0..m)
        .map(|i| {
            if c[i] <= tol * kappa[i] {
                ActionBand::Zero
            } else if (c[i] - kappa[i]).abs() <= tol * kappa[i] {
                ActionBand::Tie
            } else if c[i] < kappa[i] {
                ActionBand::Interior
            } else {
                ActionBand::Above
            }
        })
        .collect();

    // Inside the ball (Σ < 1) the level set never reaches the equator and the
    // per-component comparison with ϰ is immaterial.
    if sum < T::one() - tol {
        let dim = bands.iter().filter(|&&b| b != ActionBand::Zero).count();
        return TopologyClass {
            tag: TopologyTag::InteriorTori { dim },
            ratios,
            ratio_sum: sum,
            bands,
        };
    }
    if (sum - T::one()).abs() <= tol {
        return degenerate(
            "ratio sum at the critical value 1".to_string(),
            ratios,
            sum,
            bands,
        );
    }
    if let Some(i) = bands.iter().position(|&b| b == ActionBand::Tie) {
        return degenerate(
            format!("action {} at the bifurcation value kappa", i + 1),
            ratios,
            sum,
            bands,
        );
    }
    if bands.contains(&ActionBand::Zero) {
        return degenerate(
            "zero action component outside the interior-tori regime".to_string(),
            ratios,
            sum,
            bands,
        );
    }

    let above = bands.iter().filter(|&&b| b == ActionBand::Above).count();
    let tag = if above == m {
        TopologyTag::SpheresDisjoint { count: 1usize << m }
    } else if above == 0 {
        TopologyTag::HandledSurface
    } else if above == 1 {
        TopologyTag::CylinderTori { torus_dim: m }
    } else {
        TopologyTag::Degenerate {
            reason: format!("{above} of {m} actions above kappa: pattern not covered"),
        }
    };
    TopologyClass {
        tag,
        ratios,
        ratio_sum: sum,
        bands,
    }
}

/// Distance-to-Σ certificate for a point (𝐪, p): the equilibrium set of the
/// reduced flow inside the equator is
///
/// ```text
///     Σ = { qₙ = 0,  (Ap, q) = 0,  ∂v/∂qₙ|_(q,0) = 0 },
/// ```
///
/// and the returned triple is (|qₙ|, |(Ap,q)|, |∂v/∂qₙ at (q,0)|).  For
/// potentials even in qₙ the third residual vanishes identically.
pub fn sigma_residual<T: Real>(
    q_full: &DVector<T>,
    p: &DVector<T>,
    inertia: &InertiaSpec<T>,
    pot: &PotentialSpec<T>,
) -> (T, T, T) {
    let n = q_full.len();
    let r1 = q_full[n - 1].abs();
    let ap = inertia.apply_inverse_metric(p);
    let mut dot = T::zero();
    for i in 0..n - 1 {
        dot += ap[i] * q_full[i];
    }
    let r2 = dot.abs();
    let mut on_equator = q_full.clone();
    on_equator[n - 1] = T::zero();
    let r3 = pot.gradient(&on_equator)[n - 1].abs();
    (r1, r2, r3)
}

/// The angular momenta f_ij = qᵢpⱼ − qⱼpᵢ (i, j < n), assembled as an
/// antisymmetric (n−1)×(n−1) matrix.  Conserved along the heavy-body flow.
pub fn integrals_fij<T: Real>(q: &DVector<T>, p: &DVector<T>) -> DMatrix<T> {
    let m = q.len();
    assert_eq!(m, p.len(), "q and p must have equal length");
    DMatrix::from_fn(m, m, |i, j| q[i] * p[j] - q[j] * p[i])
}

/// Certifies the spherical-pendulum form of the heavy-body case along an
/// integrated full trajectory: with the first n−1 moments equal, the n-th
/// body axis u(t) (last *column* of g) obeys (I₁+Iₙ)ü = −εEₙ + λu.  The
/// residual is the sup over interior samples of the sphere-tangential part of
/// (I₁+Iₙ)ü + εEₙ, with ü from second differences on the recorded grid (the
/// normal part is the constraint multiplier λu and carries no information).
pub fn spherical_pendulum_residual<T: Real>(
    traj: &Trajectory<T, FullState<T>>,
    inertia: &InertiaSpec<T>,
    epsilon: T,
) -> Result<T> {
    let n = inertia.dim();
    let moments = physical_moments(inertia, "spherical_pendulum_residual")?;
    let i1 = moments[0];
    for i in 1..n - 1 {
        if (moments[i] - i1).abs() > T::of(1e-12) * i1.abs() {
            return Err(Error::InvalidArgument(format!(
                "moments I_1..I_{} must coincide (axial symmetry); I_{} differs",
                n - 1,
                i + 1
            )));
        }
    }
    let samples = traj.states.len();
    if samples < 3 {
        return Err(Error::InvalidArgument(
            "need at least 3 samples for second differences".to_string(),
        ));
    }
    let dt = traj.times[1] - traj.times[0];
    let mass = i1 + moments[n - 1];
    let inv_dt2 = T::one() / (dt * dt);
    let mut worst = T::zero();
    for k in 1..samples - 1 {
        let u_prev = traj.states[k - 1].rotation().body_axis();
        let u = traj.states[k].rotation().body_axis();
        let u_next = traj.states[k + 1].rotation().body_axis();
        let udd = (u_next - &u * T::of(2.0) + u_prev) * inv_dt2;
        let mut r = udd * mass;
        r[n - 1] += epsilon;
        let normal = r.dot(&u);
        let tangential = r - &u * normal;
        worst = worst.max(tangential.norm());
    }
    Ok(worst)
}

/// Brute-force count of connected components of the level set
/// {fᵢ(q,p) = cᵢ} ∩ {(𝐪,p) : ‖𝐪‖ = 1} ⊂ ℝ^{2n−1} for the diagonal quadratic
/// case, by seeded rejection sampling and ε-graph union-find.
///
/// Points are drawn by sampling torus angles φ uniformly, mapping them to
/// (qᵢ, pᵢ) = (√(cᵢ/ϰᵢ) sin φᵢ, √cᵢ cos φᵢ), rejecting configurations
/// outside the unit ball, and keeping both equator-symmetric lifts
/// qₙ = ±√(1−(q,q)).  Connectivity is decided in normalized coordinates —
/// each oscillator pair mapped back to its unit circle (sin φᵢ, cos φᵢ),
/// plus qₙ — a homeomorphic embedding of the level set, so the component
/// count is unaffected while `eps` stays meaningful regardless of how large
/// the actions are.  Two samples join when closer than `eps` there; the
/// number of union-find classes is returned.  The estimate is reliable when
/// `accepted_samples` is large enough that the typical nearest-neighbor
/// spacing is well below `eps`; with samples drawn uniformly in φ, 2000+
/// samples and eps ≈ 0.35 resolve the n = 3 cases.
pub fn count_level_set_components<T: Real>(
    c: &[T],
    kappa: &[T],
    accepted_samples: usize,
    eps: T,
    seed: u64,
) -> Result<usize> {
    let m = c.len();
    if m != kappa.len() {
        return Err(Error::DimensionMismatch {
            left: m,
            right: kappa.len(),
            context: "count_level_set_components",
        });
    }
    for i in 0..m {
        if !(kappa[i] > T::zero()) {
            return Err(Error::KappaNotPositive {
                index: i + 1,
                value: kappa[i].as_f64(),
            });
        }
        if c[i] < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "action c_{} must be nonnegative",
                i + 1
            )));
        }
    }

    let q_amp: Vec<T> = (0..m).map(|i| (c[i] / kappa[i]).sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 * m + 1;
    let mut points: Vec<DVector<T>> = Vec::with_capacity(2 * accepted_samples);
    let mut attempts = 0usize;
    let max_attempts = accepted_samples.saturating_mul(10_000).max(100_000);
    while points.len() < 2 * accepted_samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::InvalidArgument(
                "level-set sampler rejection rate too high".to_string(),
            ));
        }
        let mut circle = DVector::zeros(2 * m);
        let mut qq = T::zero();
        for i in 0..m {
            let phi = T::of(rng.random_range(0.0..std::f64::consts::TAU));
            // A pinned oscillator (cᵢ = 0) sits at the origin of its plane;
            // its normalized coordinate is the constant point, not a circle.
            if c[i] > T::zero() {
                circle[2 * i] = phi.sin();
                circle[2 * i + 1] = phi.cos();
            }
            let qi = q_amp[i] * phi.sin();
            qq += qi * qi;
        }
        if qq > T::one() {
            continue;
        }
        let qn = (T::one() - qq).sqrt();
        for &sign in &[T::one(), -T::one()] {
            let mut pt = DVector::zeros(dim);
            for i in 0..m {
                pt[i] = circle[2 * i];
                pt[m + 1 + i] = circle[2 * i + 1];
            }
            pt[m] = sign * qn;
            points.push(pt);
        }
    }

    // Union-find over the ε-graph.
    let n_pts = points.len();
    let mut parent: Vec<usize> = (0..n_pts).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..n_pts {
        for b in (a + 1)..n_pts {
            let d = (&points[a] - &points[b]).norm();
            if d < eps {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n_pts).map(|x| find(&mut parent, x)).collect();
    roots.sort_unstable();
    roots.dedup();
    Ok(roots.len())
}

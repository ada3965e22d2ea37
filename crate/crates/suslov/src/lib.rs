//! Dynamics of the n-dimensional Suslov rigid body.
//!
//! The configuration space is the rotation group SO(n).  A left-invariant
//! nonholonomic constraint confines the body angular velocity ω ∈ so(n) to the
//! subspace
//!
//! ```text
//!     𝔇 = span{ E₁∧Eₙ, …, E_{n−1}∧Eₙ },
//! ```
//!
//! i.e. all components of ω outside the n-th row/column vanish.  The crate
//! provides, layer by layer:
//!
//! * [`liealg`] — skew matrices, the wedge basis, the Killing-type inner
//!   product ⟨X,Y⟩ = ½ tr(X Yᵀ), rotations, and inertia tensors ω ↦ Iω + ωI;
//! * [`dynamics`] — the full constrained equations on SO(n) × 𝔇 and their
//!   reduction to the unit sphere {(𝐪, p)}, with a fixed-step RK4 integrator;
//! * [`reduction`] — hemisphere charts of the sphere, the rank of the
//!   constraint + symmetry distribution, the almost-Hamiltonian form of the
//!   reduced equations, and the time substitution dτ = qₙ dt that makes them
//!   canonically Hamiltonian;
//! * [`integrable`] — the potentials v(𝐪) for which the reduced flow is
//!   integrable (linear, quadratic-diagonal, and their sum, plus the axially
//!   symmetric heavy-body case), their first integrals, angle variables,
//!   frequencies, and the topology of the common level sets;
//! * [`sampling`] — seeded random elements of the various state spaces, used
//!   by the randomized verification suites.
//!
//! All linear algebra is dynamically sized (`nalgebra::DMatrix`/`DVector`) so
//! that one code path serves every dimension n ≥ 3, and every type is generic
//! over the scalar via the [`Real`] trait; `f64` aliases for the common types
//! are exported at the crate root.
//!
//! Conventions used throughout (and assumed by every formula in the crate):
//! the rows e₁,…,eₙ of g ∈ SO(n) are the space axes written in the body frame,
//! ω = g⁻¹ġ, the Poisson vector is the last row 𝐪 = eₙ, and wedge matrices act
//! as (a∧b)ᵣₛ = aᵣbₛ − aₛbᵣ.

// Validation guards are written `!(x > t)` rather than `x <= t` on purpose:
// the negated form also rejects NaN, which would otherwise flow into square
// roots and Cholesky factorizations far from the bad input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod integrable;
pub mod liealg;
pub mod reduction;
pub mod sampling;

/// Scalar abstraction: everything the solvers need from `f32`/`f64`.
///
/// `nalgebra::RealField` supplies the field operations, elementary functions
/// and comparisons; the `num_traits` conversions move constants and
/// diagnostics across the `f64` boundary.  The trait is blanket-implemented,
/// so any foreign scalar satisfying the bounds (e.g. a software float) works
/// unchanged.
pub trait Real:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy
{
    /// Shorthand for embedding an `f64` constant (tolerance, step size, …).
    ///
    /// Panics if the value is not representable, which cannot happen for the
    /// finite literals the crate uses.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert into a Real scalar")
    }

    /// Lossy view of the scalar as `f64`, for error payloads and reports.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real scalar must convert to f64")
    }
}

impl<T> Real for T where
    T: nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy
{
}

/// Everything that can go wrong in the crate.
///
/// Numeric payloads are carried as `f64` so that the enum itself stays
/// independent of the scalar parameter.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A wedge index lies outside 1..=n or a pair coincides.
    #[error("wedge indices ({i}, {j}) invalid for so({n}): need distinct 1-based indices <= n")]
    BadWedgeIndices { i: usize, j: usize, n: usize },

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right} in {context}")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// The ambient dimension is too small for the construction.
    #[error("dimension {n} too small: {context} needs n >= {min}")]
    DimensionTooSmall {
        n: usize,
        min: usize,
        context: &'static str,
    },

    /// A matrix expected to be (near-)orthogonal is too far from the group.
    #[error("matrix is not orthogonal: ||g^T g - Id|| = {defect:.6e} exceeds {tolerance:.1e}")]
    NotOrthogonal { defect: f64, tolerance: f64 },

    /// An orthogonal matrix with determinant −1 cannot be a rotation.
    #[error("orthogonal matrix has determinant {det:.6}; not in SO(n)")]
    NotARotation { det: f64 },

    /// Inertia data that fails positivity.
    #[error("inertia is not positive definite: {context}")]
    InertiaNotPositive { context: &'static str },

    /// An operation needs the diagonal (physical) form of the inertia tensor.
    #[error("operation '{operation}' requires a physical (diagonal) inertia tensor")]
    PhysicalInertiaRequired { operation: &'static str },

    /// An operation is not defined for the given potential variant.
    #[error("operation '{operation}' is not defined for the potential '{potential}'")]
    UnsupportedPotential {
        operation: &'static str,
        potential: &'static str,
    },

    /// A sphere point sits on (or too close to) the equator {qₙ = 0}, where
    /// the hemisphere charts break down.
    #[error("point lies on the chart boundary: |q_n| = {q_n_abs:.3e} <= {threshold:.1e}")]
    OnBoundary { q_n_abs: f64, threshold: f64 },

    /// A vector that must be normalizable is (numerically) zero.
    #[error("cannot normalize a vector of norm {norm:.3e}")]
    ZeroVector { norm: f64 },

    /// The integrator produced a non-finite value.
    #[error("non-finite state after step {step} (t = {t:.6})")]
    NonFinite { step: usize, t: f64 },

    /// A quadrature ran into a (near-)singular integrand.
    #[error("singular integrand at sample {index}: 1 - (q,q) = {value:.3e}")]
    SingularIntegrand { index: usize, value: f64 },

    /// The oscillator strength ϰᵢ = (Iᵢ+Iₙ)(Bᵢ−Bₙ) must be positive for
    /// angle/frequency extraction.
    #[error("kappa_{index} = {value:.6e} is not positive (needs B_{index} > B_n)")]
    KappaNotPositive { index: usize, value: f64 },

    /// Catch-all for invalid run parameters.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use dynamics::{FullState, ReducedState, Trajectory};
pub use integrable::PotentialSpec;
pub use liealg::{InertiaSpec, Rotation, SkewMatrix};
pub use reduction::{Chart, Hemisphere, TauTrajectory};

/// `f64` instantiations of the core types, the working precision of the CLI.
pub type SkewMatrix64 = SkewMatrix<f64>;
pub type Rotation64 = Rotation<f64>;
pub type InertiaSpec64 = InertiaSpec<f64>;
pub type FullState64 = FullState<f64>;
pub type ReducedState64 = ReducedState<f64>;
pub type Trajectory64<S> = Trajectory<f64, S>;
pub type Chart64 = Chart<f64>;
pub type TauTrajectory64 = TauTrajectory<f64>;
pub type PotentialSpec64 = PotentialSpec<f64>;

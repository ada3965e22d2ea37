//! so(n) in the wedge basis, rotations, and inertia tensors.
//!
//! A skew matrix is expanded in the orthonormal basis {Eᵢ∧Eⱼ}, i < j, where
//!
//! ```text
//!     (a∧b)ᵣₛ = aᵣbₛ − aₛbᵣ,      ⟨X, Y⟩ = ½ tr(X Yᵀ) = Σ_{r<s} XᵣₛYᵣₛ,
//! ```
//!
//! so the coordinate of X along Eᵢ∧Eⱼ is simply the entry Xᵢⱼ.  The last
//! basis index plays a distinguished role: the constraint subspace
//! 𝔇 = span{Eᵢ∧Eₙ}_{i<n} and its Killing-orthogonal complement so(n−1) (upper
//! (n−1)×(n−1) block) decompose so(n), and [`split`]/[`embed`] move between a
//! skew matrix and that block pair.
//!
//! Inertia tensors act as ω ↦ Iω + ωI.  For a diagonal I = diag(I₁,…,Iₙ) every
//! wedge Eᵢ∧Eⱼ is an eigenvector with eigenvalue Iᵢ+Iⱼ, so the tensor
//! preserves the decomposition and restricts to J = diag(Iᵢ+Iₙ) on 𝔇.  The
//! block form keeps that structure but lets J (on 𝔇) and K (on so(n−1)) be
//! arbitrary symmetric positive-definite operators.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// Acceptance tolerance on ‖gᵀg − Id‖_F when validating a rotation as given.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// [`reorthonormalize`] refuses matrices farther than this from orthogonality;
/// beyond it, "nearest rotation" stops being a repair and becomes a guess.
pub const REPAIR_PRE_TOL: f64 = 0.1;

/// Orthogonality defect guaranteed by [`reorthonormalize`] on success.
pub const REPAIR_POST_TOL: f64 = 1e-12;

/// A skew-symmetric n×n matrix, i.e. an element of so(n).
///
/// Antisymmetry is enforced structurally: every constructor symmetrizes its
/// input as (M − Mᵀ)/2, so the invariant survives arbitrary arithmetic noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix<T: Real> {
    m: DMatrix<T>,
}

impl<T: Real> SkewMatrix<T> {
    /// The zero element of so(n).
    pub fn zero(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// Wraps a square matrix, projecting it onto its antisymmetric part
    /// (M − Mᵀ)/2.  Already-skew input passes through unchanged (up to the
    /// exact arithmetic of the projection, which is the identity on it).
    ///
    /// Panics if the matrix is not square.
    pub fn from_matrix(m: DMatrix<T>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "skew matrix must be square");
        let half = T::of(0.5);
        let mt = m.transpose();
        Self {
            m: (m - mt) * half,
        }
    }

    /// Builds the matrix from its upper-triangle coordinates: `f(i, j)` is the
    /// coefficient along Eᵢ∧Eⱼ for 0-based i < j.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.m
    }

    /// The coefficient along Eᵢ∧Eⱼ (0-based indices, any order).
    pub fn coeff(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { m: &self.m * s }
    }

    /// Norm induced by the inner product ⟨X,X⟩½ = (Σ_{r<s} Xᵣₛ²)^½.
    pub fn norm(&self) -> T {
        killing_inner(self, self)
            .expect("same object, same dimension")
            .sqrt()
    }

    /// Upper-triangle coordinates in the wedge basis, ordered
    /// lexicographically: (1,2), (1,3), …, (1,n), (2,3), …, (n−1,n).
    pub fn wedge_coordinates(&self) -> DVector<T> {
        let n = self.dim();
        let mut out = DVector::zeros(n * (n - 1) / 2);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                out[k] = self.m[(i, j)];
                k += 1;
            }
        }
        out
    }
}

impl<T: Real> std::ops::Add for &SkewMatrix<T> {
    type Output = SkewMatrix<T>;
    fn add(self, rhs: &SkewMatrix<T>) -> SkewMatrix<T> {
        assert_eq!(self.dim(), rhs.dim(), "skew matrix dimensions must agree");
        SkewMatrix {
            m: &self.m + &rhs.m,
        }
    }
}

impl<T: Real> std::ops::Sub for &SkewMatrix<T> {
    type Output = SkewMatrix<T>;
    fn sub(self, rhs: &SkewMatrix<T>) -> SkewMatrix<T> {
        assert_eq!(self.dim(), rhs.dim(), "skew matrix dimensions must agree");
        SkewMatrix {
            m: &self.m - &rhs.m,
        }
    }
}

/// The basis wedge Eᵢ∧Eⱼ ∈ so(n) for **1-based** indices i ≠ j; entry (i,j) is
/// +1 and (j,i) is −1.  Swapping the indices flips the sign.
pub fn wedge<T: Real>(i: usize, j: usize, n: usize) -> Result<SkewMatrix<T>> {
    if i == 0 || j == 0 || i > n || j > n || i == j {
        return Err(Error::BadWedgeIndices { i, j, n });
    }
    let mut m = DMatrix::zeros(n, n);
    m[(i - 1, j - 1)] = T::one();
    m[(j - 1, i - 1)] = -T::one();
    Ok(SkewMatrix { m })
}

/// The inner product ⟨X, Y⟩ = ½ tr(X Yᵀ) = Σᵢⱼ XᵢⱼYᵢⱼ / 2, under which the
/// wedge basis is orthonormal and 𝔇 ⊥ so(n−1).
pub fn killing_inner<T: Real>(x: &SkewMatrix<T>, y: &SkewMatrix<T>) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
            context: "killing_inner",
        });
    }
    Ok(x.m.dot(&y.m) * T::of(0.5))
}

/// Splits X ∈ so(n) along so(n) = so(n−1) ⊕ 𝔇 into the embedded so(n−1) part
/// (last row and column zeroed) and the 𝔇 coefficient vector d, dᵢ = Xᵢₙ for
/// i = 1..n−1.  The decomposition is exact: no arithmetic is performed.
pub fn split<T: Real>(x: &SkewMatrix<T>) -> (SkewMatrix<T>, DVector<T>) {
    let n = x.dim();
    let mut h = x.m.clone();
    let d = DVector::from_fn(n - 1, |i, _| x.m[(i, n - 1)]);
    for k in 0..n {
        h[(k, n - 1)] = T::zero();
        h[(n - 1, k)] = T::zero();
    }
    (SkewMatrix { m: h }, d)
}

/// Inverse of [`split`]: rebuilds h + Σ dᵢ Eᵢ∧Eₙ.  `h` must already live in
/// the embedded so(n−1) (zero last row/column) and have dimension
/// `d.len() + 1`; the round trip `embed(split(x)) == x` is bitwise exact.
pub fn embed<T: Real>(h: &SkewMatrix<T>, d: &DVector<T>) -> Result<SkewMatrix<T>> {
    let n = h.dim();
    if d.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: d.len() + 1,
            context: "embed",
        });
    }
    debug_assert!(
        (0..n).all(|k| h.m[(k, n - 1)] == T::zero() && h.m[(n - 1, k)] == T::zero()),
        "embed: the so(n-1) part must have a zero last row/column"
    );
    let mut m = h.m.clone();
    for i in 0..(n - 1) {
        m[(i, n - 1)] = d[i];
        m[(n - 1, i)] = -d[i];
    }
    Ok(SkewMatrix { m })
}

/// The commutator [X, Y] = XY − YX, antisymmetrized against roundoff.
pub fn commutator<T: Real>(x: &SkewMatrix<T>, y: &SkewMatrix<T>) -> Result<SkewMatrix<T>> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
            context: "commutator",
        });
    }
    Ok(SkewMatrix::from_matrix(&x.m * &y.m - &y.m * &x.m))
}

/// Frobenius distance of gᵀg from the identity.
fn orthogonality_defect<T: Real>(m: &DMatrix<T>) -> T {
    let n = m.ncols();
    (m.transpose() * m - DMatrix::<T>::identity(n, n)).norm()
}

/// Projects a near-orthogonal matrix onto SO(n) through the polar
/// decomposition: if m = UΣVᵀ, the nearest orthogonal matrix (in the
/// Frobenius metric) is UVᵀ.
///
/// Refuses matrices with ‖mᵀm − Id‖ > [`REPAIR_PRE_TOL`] (the projection
/// would no longer be a small repair) and orthogonal matrices of determinant
/// −1 (no rotation is nearby).  On success the defect of the result is below
/// [`REPAIR_POST_TOL`].
pub fn reorthonormalize<T: Real>(m: &DMatrix<T>) -> Result<Rotation<T>> {
    assert_eq!(m.nrows(), m.ncols(), "rotation candidate must be square");
    let defect = orthogonality_defect(m).as_f64();
    if !(defect <= REPAIR_PRE_TOL) {
        return Err(Error::NotOrthogonal {
            defect,
            tolerance: REPAIR_PRE_TOL,
        });
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("SVD with compute_u");
    let v_t = svd.v_t.expect("SVD with compute_v");
    let r = u * v_t;
    let det = r.determinant().as_f64();
    if det < 0.0 {
        return Err(Error::NotARotation { det });
    }
    let post = orthogonality_defect(&r).as_f64();
    debug_assert!(
        post <= REPAIR_POST_TOL,
        "polar projection left defect {post:.3e}"
    );
    Ok(Rotation { m: r })
}

/// An element of SO(n).  Rows are the space axes e₁,…,eₙ written in the body
/// frame; the last row is the Poisson vector 𝐪 = eₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation<T: Real> {
    m: DMatrix<T>,
}

impl<T: Real> Rotation<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Validates and wraps a matrix that is claimed to already be a rotation:
    /// ‖mᵀm − Id‖ ≤ [`ORTHOGONALITY_TOL`] and det > 0.
    pub fn from_matrix(m: DMatrix<T>) -> Result<Self> {
        assert_eq!(m.nrows(), m.ncols(), "rotation must be square");
        let defect = orthogonality_defect(&m).as_f64();
        if !(defect <= ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal {
                defect,
                tolerance: ORTHOGONALITY_TOL,
            });
        }
        let det = m.determinant().as_f64();
        if det < 0.0 {
            return Err(Error::NotARotation { det });
        }
        Ok(Self { m })
    }

    /// A rotation whose last row is the given unit vector 𝐪, built from the
    /// Householder reflection swapping 𝐪 and Eₙ (with the first row flipped to
    /// restore det = +1).  The remaining rows are an arbitrary completion.
    /// `q` is normalized first; a zero vector is rejected.
    pub fn with_poisson_vector(q: &DVector<T>) -> Result<Self> {
        let n = q.len();
        if n < 2 {
            return Err(Error::DimensionTooSmall {
                n,
                min: 2,
                context: "rotation from last row",
            });
        }
        let norm = q.norm();
        if norm.as_f64() < 1e-150 {
            return Err(Error::ZeroVector {
                norm: norm.as_f64(),
            });
        }
        let q = q / norm;
        let mut u = q.clone();
        u[n - 1] -= T::one();
        let u_norm = u.norm();
        if u_norm.as_f64() < 1e-150 {
            // q is (numerically exactly) Eₙ itself.
            return Ok(Self::identity(n));
        }
        u /= u_norm;
        // H = Id − 2uuᵀ is symmetric orthogonal with H Eₙ = q, so its last row
        // is qᵀ; det H = −1, fixed by negating the first row (n ≥ 2 keeps that
        // away from the last row).
        let mut m = DMatrix::identity(n, n) - (&u * u.transpose()) * T::of(2.0);
        for j in 0..n {
            m[(0, j)] = -m[(0, j)];
        }
        debug_assert!(orthogonality_defect(&m).as_f64() <= 1e-12);
        Ok(Self { m })
    }

    /// Wraps without validation — for integrator-internal states where the
    /// defect is tracked separately (e.g. running deliberately unprojected).
    pub(crate) fn from_matrix_unchecked(m: DMatrix<T>) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    /// The Poisson vector 𝐪 = eₙ: the last row, i.e. the space vertical axis
    /// written in body coordinates.
    pub fn poisson_vector(&self) -> DVector<T> {
        self.m.row(self.dim() - 1).transpose()
    }

    /// The last *column* (e₁ₙ, …, eₙₙ): the n-th body axis written in space
    /// coordinates.  Distinct from [`Self::poisson_vector`] — rows and columns
    /// of a rotation are different orthonormal frames.
    pub fn body_axis(&self) -> DVector<T> {
        self.m.column(self.dim() - 1).into_owned()
    }

    pub fn orthogonality_defect(&self) -> T {
        orthogonality_defect(&self.m)
    }

    /// Polar re-projection onto SO(n); see [`reorthonormalize`].
    pub fn reprojected(&self) -> Result<Self> {
        reorthonormalize(&self.m)
    }
}

/// Lexicographic list of 0-based index pairs (i, j), i < j ≤ m−1: the wedge
/// basis order for so(m).
pub(crate) fn wedge_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((i, j));
        }
    }
    pairs
}

#[derive(Debug, Clone)]
enum InertiaKind<T: Real> {
    /// Diagonal mass tensor I = diag(I₁,…,Iₙ), Iᵢ > 0.
    Physical { moments: DVector<T> },
    /// Separate symmetric positive-definite operators on the two summands of
    /// so(n) = so(n−1) ⊕ 𝔇; `k` acts on so(n−1) in its wedge basis.
    Block { k: DMatrix<T> },
}

/// The inertia tensor ℐω = Iω + ωI of the body, together with its restriction
/// J to the constraint subspace 𝔇 and the inverse A = J⁻¹.
///
/// Both forms preserve the splitting so(n−1) ⊕ 𝔇, which is what makes the
/// reduced equations close on (𝐪, p) alone.
#[derive(Debug, Clone)]
pub struct InertiaSpec<T: Real> {
    kind: InertiaKind<T>,
    j: DMatrix<T>,
    a: DMatrix<T>,
}

fn check_spd<T: Real>(m: &DMatrix<T>, context: &'static str) -> Result<DMatrix<T>> {
    let sym_defect = (m - m.transpose()).amax().as_f64();
    let scale = m.amax().as_f64().max(1.0);
    if sym_defect > 1e-12 * scale {
        return Err(Error::InertiaNotPositive { context });
    }
    match nalgebra::Cholesky::new(m.clone()) {
        Some(chol) => Ok(chol.inverse()),
        None => Err(Error::InertiaNotPositive { context }),
    }
}

impl<T: Real> InertiaSpec<T> {
    /// Physical inertia from the diagonal mass tensor I = diag(I₁,…,Iₙ).
    /// On 𝔇 this gives J = diag(Iᵢ + Iₙ).
    pub fn physical(moments: &[T]) -> Result<Self> {
        let n = moments.len();
        if n < 3 {
            return Err(Error::DimensionTooSmall {
                n,
                min: 3,
                context: "physical inertia",
            });
        }
        if moments.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::InertiaNotPositive {
                context: "physical moments must all be positive",
            });
        }
        let moments = DVector::from_column_slice(moments);
        let i_n = moments[n - 1];
        let j = DMatrix::from_fn(n - 1, n - 1, |r, c| {
            if r == c {
                moments[r] + i_n
            } else {
                T::zero()
            }
        });
        let a = DMatrix::from_fn(n - 1, n - 1, |r, c| {
            if r == c {
                T::one() / (moments[r] + i_n)
            } else {
                T::zero()
            }
        });
        Ok(Self {
            kind: InertiaKind::Physical { moments },
            j,
            a,
        })
    }

    /// Block inertia: `j` is the (n−1)×(n−1) kinetic-energy metric on 𝔇 and
    /// `k` the (n−1)(n−2)/2-dimensional operator on so(n−1), both in wedge
    /// coordinates.  Both must be symmetric positive-definite.
    pub fn block(j: DMatrix<T>, k: DMatrix<T>) -> Result<Self> {
        let n = j.nrows() + 1;
        if n < 3 {
            return Err(Error::DimensionTooSmall {
                n,
                min: 3,
                context: "block inertia",
            });
        }
        if j.nrows() != j.ncols() {
            return Err(Error::DimensionMismatch {
                left: j.nrows(),
                right: j.ncols(),
                context: "block inertia J",
            });
        }
        let so_dim = (n - 1) * (n - 2) / 2;
        if k.nrows() != so_dim || k.ncols() != so_dim {
            return Err(Error::DimensionMismatch {
                left: k.nrows(),
                right: so_dim,
                context: "block inertia K",
            });
        }
        let a = check_spd(&j, "block inertia J must be symmetric positive-definite")?;
        check_spd(&k, "block inertia K must be symmetric positive-definite")?;
        Ok(Self {
            kind: InertiaKind::Block { k },
            j,
            a,
        })
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.j.nrows() + 1
    }

    /// J: the restriction of ℐ to 𝔇 in wedge coordinates (the kinetic-energy
    /// metric of the constrained body).
    pub fn metric(&self) -> &DMatrix<T> {
        &self.j
    }

    /// A = J⁻¹.
    pub fn inverse_metric(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn apply_metric(&self, v: &DVector<T>) -> DVector<T> {
        &self.j * v
    }

    pub fn apply_inverse_metric(&self, v: &DVector<T>) -> DVector<T> {
        &self.a * v
    }

    /// The diagonal mass tensor, when the inertia is physical.
    pub fn moments(&self) -> Option<&DVector<T>> {
        match &self.kind {
            InertiaKind::Physical { moments } => Some(moments),
            InertiaKind::Block { .. } => None,
        }
    }

    /// Applies the full tensor: ℐω = Iω + ωI (physical) or the block pair
    /// (K, J) on the split parts.  Either way the two summands of so(n) are
    /// mapped into themselves.
    pub fn apply(&self, w: &SkewMatrix<T>) -> SkewMatrix<T> {
        assert_eq!(
            w.dim(),
            self.dim(),
            "inertia and angular velocity dimensions must agree"
        );
        match &self.kind {
            InertiaKind::Physical { moments } => {
                // Eᵣ∧Eₛ is an eigenvector with eigenvalue Iᵣ + Iₛ, so the
                // action is entrywise.
                let n = self.dim();
                SkewMatrix {
                    m: DMatrix::from_fn(n, n, |r, c| (moments[r] + moments[c]) * w.m[(r, c)]),
                }
            }
            InertiaKind::Block { k } => {
                let n = self.dim();
                let (h, d) = split(w);
                let pairs = wedge_pairs(n - 1);
                let coords = DVector::from_fn(pairs.len(), |idx, _| {
                    let (i, j) = pairs[idx];
                    h.m[(i, j)]
                });
                let mapped = k * coords;
                let mut hm = DMatrix::zeros(n, n);
                for (idx, &(i, j)) in pairs.iter().enumerate() {
                    hm[(i, j)] = mapped[idx];
                    hm[(j, i)] = -mapped[idx];
                }
                embed(&SkewMatrix { m: hm }, &(&self.j * d)).expect("dimensions agree")
            }
        }
    }
}

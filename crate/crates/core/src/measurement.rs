//! Signals, complex-Gaussian sensing ensembles and amplitude observations.
//!
//! The CN(0,1) convention throughout: real and imaginary parts are each
//! N(0, 1/2), so E|a|^2 = 1.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type C64 = Complex<f64>;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Draw one standard complex normal CN(0,1) scalar.
pub fn sample_cn(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// The unknown signal z (or an estimate x) in C^n.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(DVector<C64>);

impl Signal {
    pub fn new(entries: DVector<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("signal dimension must be >= 1".into()));
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Dimension("signal entries must be finite".into()));
        }
        Ok(Self(entries))
    }

    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.0
    }

    /// Conjugate inner product x^* other.
    pub fn inner(&self, other: &Signal) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn scale(&self, c: C64) -> Signal {
        Signal(&self.0 * c)
    }

    /// Unit-normalized copy; errors on the zero vector.
    pub fn normalized(&self) -> Result<Signal> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::DegenerateInput("cannot normalize the zero signal".into()));
        }
        Ok(Signal(&self.0 / C64::new(nrm, 0.0)))
    }
}

/// Nonnegative amplitude observations y_i = |a_i^* z|.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations(DVector<f64>);

impl Observations {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Dimension("observations must be finite and nonnegative".into()));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Restrict to a contiguous index range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Observations {
        Observations(DVector::from_iterator(range.len(), range.map(|i| self.0[i])))
    }
}

/// An m x n sensing matrix A with a cached thin-QR factorization.
///
/// The QR factors serve two purposes: `solve_normal` solves
/// (A^* A) u = v through two triangular solves with R (backward stable
/// even for moderately ill-conditioned A), and Q gives the orthogonal
/// projector onto range(A) directly.
#[derive(Debug, Clone)]
pub struct SensingEnsemble {
    a: DMatrix<C64>,
    q: DMatrix<C64>,
    r: DMatrix<C64>,
}

impl SensingEnsemble {
    pub fn new(a: DMatrix<C64>) -> Result<Self> {
        let (m, n) = a.shape();
        if n == 0 {
            return Err(Error::Dimension("sensing matrix must have n >= 1".into()));
        }
        if m < n {
            return Err(Error::InsufficientMeasurements { m, n });
        }
        let qr = a.clone().qr();
        let q = qr.q();
        let r = qr.r();
        // Rank check on the triangular factor.
        let rmax = (0..n).map(|i| r[(i, i)].norm()).fold(0.0f64, f64::max);
        if (0..n).any(|i| r[(i, i)].norm() <= rmax * 1e-14) || rmax == 0.0 {
            return Err(Error::Singular("sensing matrix is numerically rank deficient".into()));
        }
        Ok(Self { a, q, r })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.a
    }

    /// Thin Q factor (m x n, orthonormal columns).
    pub fn q(&self) -> &DMatrix<C64> {
        &self.q
    }

    /// Upper-triangular R factor (n x n).
    pub fn r(&self) -> &DMatrix<C64> {
        &self.r
    }

    /// Rebuild A from the cached factorization (QR product).
    pub fn reconstruct(&self) -> DMatrix<C64> {
        &self.q * &self.r
    }

    /// A x.
    pub fn apply(&self, x: &DVector<C64>) -> Result<DVector<C64>> {
        if x.len() != self.n() {
            return Err(Error::Dimension(format!(
                "apply: expected length {}, got {}",
                self.n(),
                x.len()
            )));
        }
        Ok(&self.a * x)
    }

    /// A^* v.
    pub fn apply_adjoint(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.m() {
            return Err(Error::Dimension(format!(
                "apply_adjoint: expected length {}, got {}",
                self.m(),
                v.len()
            )));
        }
        Ok(self.a.ad_mul(v))
    }

    /// Solve (A^* A) u = v using A^* A = R^* R.
    pub fn solve_normal(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.n() {
            return Err(Error::Dimension(format!(
                "solve_normal: expected length {}, got {}",
                self.n(),
                v.len()
            )));
        }
        let w = self
            .r
            .adjoint()
            .solve_lower_triangular(v)
            .ok_or_else(|| Error::Singular("triangular solve failed (R^*)".into()))?;
        self.r
            .solve_upper_triangular(&w)
            .ok_or_else(|| Error::Singular("triangular solve failed (R)".into()))
    }

    /// Ensemble restricted to a contiguous row range, with its own
    /// factorization.
    pub fn row_block(&self, range: std::ops::Range<usize>) -> Result<SensingEnsemble> {
        if range.end > self.m() {
            return Err(Error::Dimension("row range out of bounds".into()));
        }
        SensingEnsemble::new(self.a.rows(range.start, range.len()).into_owned())
    }
}

/// Hermitian positive-definite covariance with a cached square root.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    matrix: DMatrix<C64>,
    sqrt: DMatrix<C64>,
}

impl CovarianceSpec {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::Covariance("covariance must be square with n >= 1".into()));
        }
        let herm_err = (&matrix - matrix.adjoint()).norm();
        if herm_err > 1e-12 * matrix.norm().max(1.0) {
            return Err(Error::Covariance(format!(
                "covariance is not Hermitian (deviation {herm_err:.3e})"
            )));
        }
        let eig = nalgebra::SymmetricEigen::new(matrix.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(Error::Covariance(format!(
                "covariance is not positive definite (min eigenvalue {min_eig:.3e})"
            )));
        }
        let sqrt_vals = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| C64::new(l.sqrt(), 0.0)));
        let sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
        let recon_err = (&sqrt * &sqrt - &matrix).norm() / matrix.norm();
        if recon_err > 1e-10 {
            return Err(Error::Covariance(format!(
                "square root reconstruction error {recon_err:.3e} exceeds 1e-10"
            )));
        }
        Ok(Self { matrix, sqrt })
    }

    /// Diagonal covariance from positive variances.
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        let diag = DVector::from_iterator(variances.len(), variances.iter().map(|&v| C64::new(v, 0.0)));
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn sqrt(&self) -> &DMatrix<C64> {
        &self.sqrt
    }
}

/// Sample a signal with i.i.d. CN(0,1) entries, optionally normalized.
pub fn sample_signal(n: usize, unit: bool, stream: RngStream) -> Result<Signal> {
    if n == 0 {
        return Err(Error::Dimension("signal dimension must be >= 1".into()));
    }
    let mut rng = stream.rng();
    let v = DVector::from_fn(n, |_, _| sample_cn(&mut rng));
    let s = Signal::new(v)?;
    if unit {
        s.normalized()
    } else {
        Ok(s)
    }
}

/// Haar-uniform random unit vector on the complex sphere.
pub fn random_unit(n: usize, stream: RngStream) -> Result<Signal> {
    sample_signal(n, true, stream)
}

/// m x n ensemble with i.i.d. CN(0,1) entries, factorized.
pub fn sample_sensing(m: usize, n: usize, stream: RngStream) -> Result<SensingEnsemble> {
    if n == 0 {
        return Err(Error::Dimension("sensing dimension must be >= 1".into()));
    }
    if m < n {
        return Err(Error::InsufficientMeasurements { m, n });
    }
    let mut rng = stream.rng();
    // Row-major fill: row i is a_i^*, matching per-measurement draws.
    let mut a = DMatrix::<C64>::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = sample_cn(&mut rng);
        }
    }
    SensingEnsemble::new(a)
}

/// Ensemble with rows i.i.d. CN(0, Sigma): each row is Sigma^{1/2} g.
pub fn sample_sensing_cov(m: usize, cov: &CovarianceSpec, stream: RngStream) -> Result<SensingEnsemble> {
    let n = cov.dim();
    if m < n {
        return Err(Error::InsufficientMeasurements { m, n });
    }
    let mut rng = stream.rng();
    let mut a = DMatrix::<C64>::zeros(m, n);
    let mut g = DVector::<C64>::zeros(n);
    for i in 0..m {
        for j in 0..n {
            g[j] = sample_cn(&mut rng);
        }
        // Measurement vector a_i = Sigma^{1/2} g; the stored row is a_i^*.
        let ai = cov.sqrt() * &g;
        for j in 0..n {
            a[(i, j)] = ai[j].conj();
        }
    }
    SensingEnsemble::new(a)
}

/// Forward model: y_i = |a_i^* z|.
pub fn observe(ensemble: &SensingEnsemble, z: &Signal) -> Result<Observations> {
    if z.dim() != ensemble.n() {
        return Err(Error::Dimension(format!(
            "observe: signal dim {} does not match ensemble n {}",
            z.dim(),
            ensemble.n()
        )));
    }
    let v = ensemble.apply(z.as_vector())?;
    Observations::new(v.map(|c| c.norm()))
}

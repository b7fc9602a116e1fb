//! Validated generators, plants and realizations.
//!
//! Every other module consumes these types. They are immutable once built;
//! constructors check the hypotheses the closed-form results rely on
//! (a symmetric, strictly negative generator and coercive weights).

use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{HinfError, Result};
use crate::linalg;
use crate::sparse::SparseSym;

/// Default relative symmetry tolerance for [`validate_generator`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Above this order coercivity is certified by inverse iteration instead of
/// the full spectrum.
pub const FULL_SPECTRUM_LIMIT: usize = 2000;

/// Largest order accepted for dense storage.
pub const DENSE_LIMIT: usize = 5000;

/// A symmetric matrix `A` with `λ_max(A) ≤ −m < 0`.
#[derive(Debug, Clone)]
pub struct SymmetricGenerator {
    entries: Mat<f64>,
    coercivity: f64,
    /// `−A` when it is large and sparse.
    negated_sparse: Option<SparseSym>,
}

impl SymmetricGenerator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    /// The margin `m = −λ_max(A)`.
    pub fn coercivity(&self) -> f64 {
        self.coercivity
    }

    pub fn negated_sparse(&self) -> Option<&SparseSym> {
        self.negated_sparse.as_ref()
    }

    /// Builds a generator from coordinate triplets `(row, col, value)`;
    /// duplicate entries are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)], tol: f64) -> Result<Self> {
        if dim > DENSE_LIMIT {
            return Err(HinfError::TooLarge {
                dim,
                limit: DENSE_LIMIT,
            });
        }
        let mut a = Mat::<f64>::zeros(dim, dim);
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(HinfError::DimensionMismatch(format!(
                    "triplet ({i}, {j}) outside a {dim}x{dim} matrix"
                )));
            }
            a[(i, j)] += v;
        }
        validate_generator(a.as_ref(), tol)
    }
}

/// Checks symmetry (relative to `max|A|`) and strict negativity.
pub fn validate_generator(a: MatRef<'_, f64>, tol: f64) -> Result<SymmetricGenerator> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(HinfError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if n > DENSE_LIMIT {
        return Err(HinfError::TooLarge {
            dim: n,
            limit: DENSE_LIMIT,
        });
    }
    if !linalg::all_finite(a) {
        return Err(HinfError::NonFinite);
    }
    let threshold = tol * linalg::max_abs(a);
    let asymmetry = linalg::asymmetry(a);
    if asymmetry > threshold {
        return Err(HinfError::NotSymmetric {
            asymmetry,
            threshold,
        });
    }
    let entries = linalg::symmetrize(a);
    let lambda_max = if n <= FULL_SPECTRUM_LIMIT {
        linalg::sym_lambda_max(entries.as_ref())?
    } else {
        largest_eigenvalue_by_inverse_iteration(entries.as_ref())?
    };
    if !(lambda_max < 0.0) {
        return Err(HinfError::NotCoercive { lambda_max });
    }
    let negated = Mat::from_fn(n, n, |i, j| -entries[(i, j)]);
    Ok(SymmetricGenerator {
        negated_sparse: SparseSym::from_dense(negated.as_ref()),
        entries,
        coercivity: -lambda_max,
    })
}

/// `λ_max(A)` for large symmetric `A` by power iteration on `(−A)⁻¹`.
fn largest_eigenvalue_by_inverse_iteration(a: MatRef<'_, f64>) -> Result<f64> {
    let n = a.nrows();
    let neg = Mat::from_fn(n, n, |i, j| -a[(i, j)]);
    let llt = neg
        .llt(Side::Lower)
        .map_err(|_| HinfError::NotCoercive { lambda_max: 0.0 })?;
    let mut v = Mat::from_fn(n, 1, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    let norm = v.norm_l2();
    v = Mat::from_fn(n, 1, |i, _| v[(i, 0)] / norm);
    let mut mu = 0.0;
    for _ in 0..1000 {
        let w = llt.solve(v.as_ref());
        let next_mu: f64 = (0..n).map(|i| w[(i, 0)] * v[(i, 0)]).sum();
        let wn = w.norm_l2();
        if !(wn > 0.0) || !wn.is_finite() {
            return Err(HinfError::SingularFactorization);
        }
        v = Mat::from_fn(n, 1, |i, _| w[(i, 0)] / wn);
        if (next_mu - mu).abs() <= 1e-12 * next_mu.abs() {
            return Ok(-1.0 / next_mu);
        }
        mu = next_mu;
    }
    Err(HinfError::ConvergenceFailure)
}

/// Eigenvalues ascending with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<f64>,
}

pub fn sym_eig(a: &SymmetricGenerator) -> Result<SpectralDecomposition> {
    let evd = a
        .entries()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| HinfError::ConvergenceFailure)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let eigenvalues = order.iter().map(|&k| s[k]).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Solves `A X = V` through a Cholesky factorization of `−A`.
pub fn neg_solve(a: &SymmetricGenerator, v: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = a.dim();
    if v.nrows() != n {
        return Err(HinfError::DimensionMismatch(format!(
            "right-hand side has {} rows, generator has order {n}",
            v.nrows()
        )));
    }
    let y = match &a.negated_sparse {
        Some(neg) => neg.spd_solve(v)?,
        None => {
            let neg = Mat::from_fn(n, n, |i, j| -a.entries[(i, j)]);
            linalg::spd_solve(neg.as_ref(), v)?
        }
    };
    Ok(Mat::from_fn(n, v.ncols(), |i, j| -y[(i, j)]))
}

fn check_coercive_weight(w: MatRef<'_, f64>, name: &'static str) -> Result<()> {
    if w.nrows() == 0 {
        return Ok(());
    }
    let lambda_min = linalg::sym_lambda_min(w)?;
    let scale = linalg::max_abs(w);
    if !(lambda_min > 1e-14 * scale) {
        return Err(HinfError::WeightNotCoercive { name, lambda_min });
    }
    Ok(())
}

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(HinfError::DimensionMismatch(what()))
    }
}

/// State-feedback plant `ż = Az + Bu + Hd`, regulated output `[z; Ru]`.
#[derive(Debug, Clone)]
pub struct PlantSF {
    pub a: SymmetricGenerator,
    pub b: Mat<f64>,
    pub h: Mat<f64>,
    pub r: Mat<f64>,
}

impl PlantSF {
    pub fn new(a: SymmetricGenerator, b: Mat<f64>, h: Mat<f64>, r: Mat<f64>) -> Result<Self> {
        let n = a.dim();
        require(b.nrows() == n, || {
            format!("B has {} rows, expected {n}", b.nrows())
        })?;
        require(h.nrows() == n, || {
            format!("H has {} rows, expected {n}", h.nrows())
        })?;
        require(r.ncols() == b.ncols(), || {
            format!("R has {} columns, B has {}", r.ncols(), b.ncols())
        })?;
        for (m, name) in [(&b, "B"), (&h, "H"), (&r, "R")] {
            if !linalg::all_finite(m.as_ref()) {
                return Err(HinfError::DimensionMismatch(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        let rtr = r.transpose() * &r;
        check_coercive_weight(rtr.as_ref(), "R^T R")?;
        Ok(Self { a, b, h, r })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn disturbances(&self) -> usize {
        self.h.ncols()
    }

    /// `(RᵀR)⁻¹`.
    pub fn input_weight_inverse(&self) -> Result<Mat<f64>> {
        let rtr = self.r.transpose() * &self.r;
        linalg::spd_inverse(linalg::symmetrize(rtr.as_ref()).as_ref())
    }
}

/// Estimation plant `ż = Az + w`, `q = Qz`, `y = Cz + Sv`.
#[derive(Debug, Clone)]
pub struct PlantEst {
    pub a: SymmetricGenerator,
    pub c: Mat<f64>,
    pub q: Mat<f64>,
    pub s: Mat<f64>,
}

impl PlantEst {
    pub fn new(a: SymmetricGenerator, c: Mat<f64>, q: Mat<f64>, s: Mat<f64>) -> Result<Self> {
        let n = a.dim();
        require(c.ncols() == n, || {
            format!("C has {} columns, expected {n}", c.ncols())
        })?;
        require(q.ncols() == n, || {
            format!("Q has {} columns, expected {n}", q.ncols())
        })?;
        require(s.nrows() == c.nrows(), || {
            format!("S has {} rows, C has {}", s.nrows(), c.nrows())
        })?;
        for (m, name) in [(&c, "C"), (&q, "Q"), (&s, "S")] {
            if !linalg::all_finite(m.as_ref()) {
                return Err(HinfError::DimensionMismatch(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        let sst = &s * s.transpose();
        check_coercive_weight(sst.as_ref(), "S S^T")?;
        Ok(Self { a, c, q, s })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn measurements(&self) -> usize {
        self.c.nrows()
    }

    /// `(SSᵀ)⁻¹`.
    pub fn noise_weight_inverse(&self) -> Result<Mat<f64>> {
        let sst = &self.s * self.s.transpose();
        linalg::spd_inverse(linalg::symmetrize(sst.as_ref()).as_ref())
    }

    /// The adjoint state-feedback plant `(A, Cᵀ, Qᵀ, Sᵀ)`.
    pub fn dual(&self) -> Result<PlantSF> {
        PlantSF::new(
            self.a.clone(),
            self.c.transpose().to_owned(),
            self.q.transpose().to_owned(),
            self.s.transpose().to_owned(),
        )
    }
}

/// A realization `(A, B, C, D)` of `G(s) = C(sI − A)⁻¹B + D`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    pub d: Mat<f64>,
    stability_margin: OnceLock<f64>,
}

impl StateSpace {
    pub fn new(a: Mat<f64>, b: Mat<f64>, c: Mat<f64>, d: Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        require(a.ncols() == n, || {
            format!("A is {}x{}", a.nrows(), a.ncols())
        })?;
        require(b.nrows() == n, || {
            format!("B has {} rows, expected {n}", b.nrows())
        })?;
        require(c.ncols() == n, || {
            format!("C has {} columns, expected {n}", c.ncols())
        })?;
        require(d.nrows() == c.nrows() && d.ncols() == b.ncols(), || {
            format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )
        })?;
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            if !linalg::all_finite(m.as_ref()) {
                return Err(HinfError::DimensionMismatch(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            stability_margin: OnceLock::new(),
        })
    }

    /// Realization with `D = 0`.
    pub fn strictly_proper(a: Mat<f64>, b: Mat<f64>, c: Mat<f64>) -> Result<Self> {
        let d = Mat::zeros(c.nrows(), b.ncols());
        Self::new(a, b, c, d)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Spectral abscissa `max Re λ(A)`, computed once.
    pub fn stability_margin(&self) -> Result<f64> {
        if let Some(v) = self.stability_margin.get() {
            return Ok(*v);
        }
        let v = linalg::spectral_abscissa(self.a.as_ref())?;
        Ok(*self.stability_margin.get_or_init(|| v))
    }
}

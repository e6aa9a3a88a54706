use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// A real symmetric matrix used as a covariance or scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates squareness and symmetry (relative to the largest entry).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Domain(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    /// Averages `m` with its transpose.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("matrix rows must all have length p".into()));
        }
        Self::new(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Adds `eps * trace / p` to the diagonal.
    pub fn with_ridge(&self, eps: f64) -> Self {
        let p = self.dim();
        let bump = eps * self.trace().abs() / p as f64;
        let mut m = self.0.clone();
        for i in 0..p {
            m[(i, i)] += bump;
        }
        Self(m)
    }

    /// Rank-one update `self + v v'`.
    pub fn plus_outer(&self, v: &DVector<f64>) -> Self {
        Self(&self.0 + v * v.transpose())
    }

    pub fn factor(&self) -> Result<SpdFactor> {
        SpdFactor::new(self.0.clone())
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> DMatrix<f64> {
        select_block(&self.0, idx, idx)
    }
}

pub fn select_block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl SpdFactor {
    /// Fails (never pseudo-inverts) when the matrix is not positive definite.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(m).ok_or(Error::NotPositiveDefinite { component: None })?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite { component: None });
        }
        Ok(Self { chol, log_det })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// Squared Mahalanobis norm `d' M^-1 d`, via the triangular solve.
    pub fn mahalanobis_sq(&self, d: &DVector<f64>) -> f64 {
        let l = self.chol.l_dirty();
        let n = d.len();
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut acc = d[i];
            for j in 0..i {
                acc -= l[(i, j)] * z[j];
            }
            z[i] = acc / l[(i, i)];
        }
        z.iter().map(|v| v * v).sum()
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Observed / missing split of the coordinates of one row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockPartition {
    observed: Vec<usize>,
    missing: Vec<usize>,
}

impl BlockPartition {
    /// Builds the partition from a per-coordinate observed mask.
    pub fn from_mask(mask: &[bool]) -> Self {
        let (mut observed, mut missing) = (Vec::new(), Vec::new());
        for (j, &o) in mask.iter().enumerate() {
            if o {
                observed.push(j);
            } else {
                missing.push(j);
            }
        }
        Self { observed, missing }
    }

    /// Checks that the two index sets are disjoint and cover `0..p`.
    pub fn new(observed: Vec<usize>, missing: Vec<usize>, p: usize) -> Result<Self> {
        let mut seen = vec![false; p];
        for &j in observed.iter().chain(&missing) {
            if j >= p || seen[j] {
                return Err(Error::Domain(format!(
                    "partition indices must be disjoint and within 0..{p}"
                )));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Domain("partition does not cover every coordinate".into()));
        }
        Ok(Self { observed, missing })
    }

    pub fn all_observed(p: usize) -> Self {
        Self {
            observed: (0..p).collect(),
            missing: Vec::new(),
        }
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    pub fn dim(&self) -> usize {
        self.observed.len() + self.missing.len()
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Blocks of a Gaussian (or Gaussian-like) parameter pair under a partition,
/// together with the regression operator `S_mo S_oo^-1`.
#[derive(Debug, Clone)]
pub struct GaussianBlocks {
    pub mu_o: DVector<f64>,
    pub mu_m: DVector<f64>,
    pub s_oo: DMatrix<f64>,
    pub s_mm: DMatrix<f64>,
    pub s_om: DMatrix<f64>,
    pub s_mo: DMatrix<f64>,
    pub regression: DMatrix<f64>,
    /// `S_mm - S_mo S_oo^-1 S_om`
    pub conditional_cov: DMatrix<f64>,
    pub factor_oo: Option<SpdFactor>,
}

pub fn partition_gaussian(
    mu: &DVector<f64>,
    sigma: &SymMatrix,
    part: &BlockPartition,
) -> Result<GaussianBlocks> {
    let p = sigma.dim();
    if mu.len() != p || part.dim() != p {
        return Err(Error::Dimension(format!(
            "partition of a {p}-dim parameter with mean of length {} and partition of size {}",
            mu.len(),
            part.dim()
        )));
    }
    let (o, m) = (part.observed(), part.missing());
    let s = sigma.matrix();
    let s_oo = select_block(s, o, o);
    let s_mm = select_block(s, m, m);
    let s_om = select_block(s, o, m);
    let s_mo = select_block(s, m, o);
    let (regression, conditional_cov, factor_oo) = if o.is_empty() {
        (DMatrix::zeros(m.len(), 0), s_mm.clone(), None)
    } else {
        let f = SpdFactor::new(s_oo.clone()).map_err(|_| {
            Error::Domain(format!("observed block on columns {o:?} is singular"))
        })?;
        // S_mo S_oo^-1 = (S_oo^-1 S_om)'
        let reg = f.solve_mat(&s_om).transpose();
        let cond = &s_mm - &reg * &s_om;
        (reg, cond, Some(f))
    };
    Ok(GaussianBlocks {
        mu_o: select_vec(mu, o),
        mu_m: select_vec(mu, m),
        s_oo,
        s_mm,
        s_om,
        s_mo,
        regression,
        conditional_cov,
        factor_oo,
    })
}

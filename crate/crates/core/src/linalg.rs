//! Householder QR with column pivoting for small dense least-squares problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SglmError};

/// Relative tolerance on `|R_kk| / |R_00|` below which a column is treated as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Pivoted QR factorization `X P = Q R` of a tall matrix, used as a
/// least-squares solver. Construction fails when `X` is rank deficient.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// Upper triangle holds `R`; below the diagonal is scratch.
    packed: DMatrix<f64>,
    /// Householder vectors, `reflectors[k]` acts on rows `k..m`.
    reflectors: Vec<DVector<f64>>,
    /// `perm[k]` is the original column index placed at position `k`.
    perm: Vec<usize>,
    /// Number of independent columns kept (always `p` unless built with `rank_revealing`).
    rank: usize,
}

impl LeastSquares {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        Self::factor(x, true)
    }

    /// Factorization that stops at the numerical rank instead of failing.
    /// Dependent columns get zero coefficients; `fitted` still projects onto
    /// the full column space.
    pub fn rank_revealing(x: &DMatrix<f64>) -> Result<Self> {
        Self::factor(x, false)
    }

    fn factor(x: &DMatrix<f64>, strict: bool) -> Result<Self> {
        let (m, p) = x.shape();
        if p == 0 && strict {
            return Err(SglmError::dim("design has no columns"));
        }
        if m < p && strict {
            return Err(SglmError::SingularDesign(format!(
                "{m} observations cannot identify {p} coefficients"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SglmError::domain("design contains non-finite entries"));
        }

        let mut a = x.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::with_capacity(p);
        let mut r00 = 0.0f64;
        let mut rank = p.min(m);

        for k in 0..p.min(m) {
            // recomputing the trailing norms each step avoids downdating cancellation
            let (piv, norm2) = (k..p)
                .map(|j| (j, a.column(j).rows(k, m - k).norm_squared()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if piv != k {
                a.swap_columns(k, piv);
                perm.swap(k, piv);
            }
            let norm = norm2.sqrt();
            if k == 0 {
                r00 = norm;
            }
            if norm <= RANK_TOL * r00 || norm == 0.0 {
                if !strict {
                    rank = k;
                    break;
                }
                return Err(SglmError::SingularDesign(format!(
                    "design is rank deficient (column {} depends on the others)",
                    perm[k]
                )));
            }

            let x0 = a[(k, k)];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let mut v: DVector<f64> = a.column(k).rows(k, m - k).into_owned();
            v[0] -= alpha;
            let vnorm2 = v.norm_squared();
            if vnorm2 > 0.0 {
                for j in (k + 1)..p {
                    let mut col = a.column_mut(j);
                    let mut seg = col.rows_mut(k, m - k);
                    let s = 2.0 * v.dot(&seg) / vnorm2;
                    seg.axpy(-s, &v, 1.0);
                }
            }
            a[(k, k)] = alpha;
            for i in (k + 1)..m {
                a[(i, k)] = 0.0;
            }
            reflectors.push(v);
        }

        Ok(LeastSquares {
            packed: a,
            reflectors,
            perm,
            rank,
        })
    }

    pub fn nrows(&self) -> usize {
        self.packed.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.packed.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn apply_qt(&self, y: &mut DVector<f64>) {
        let m = self.nrows();
        for (k, v) in self.reflectors.iter().enumerate() {
            let vnorm2 = v.norm_squared();
            if vnorm2 == 0.0 {
                continue;
            }
            let mut seg = y.rows_mut(k, m - k);
            let s = 2.0 * v.dot(&seg) / vnorm2;
            seg.axpy(-s, v, 1.0);
        }
    }

    fn apply_q(&self, y: &mut DVector<f64>) {
        let m = self.nrows();
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            let vnorm2 = v.norm_squared();
            if vnorm2 == 0.0 {
                continue;
            }
            let mut seg = y.rows_mut(k, m - k);
            let s = 2.0 * v.dot(&seg) / vnorm2;
            seg.axpy(-s, v, 1.0);
        }
    }

    /// Least-squares coefficients in the original column order.
    pub fn coefficients(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(
            y.len(),
            self.nrows(),
            "response length must match design rows"
        );
        let p = self.ncols();
        let r = self.rank;
        let mut qty = y.clone();
        self.apply_qt(&mut qty);
        let mut z = DVector::zeros(p);
        for k in (0..r).rev() {
            let mut s = qty[k];
            for j in (k + 1)..r {
                s -= self.packed[(k, j)] * z[j];
            }
            z[k] = s / self.packed[(k, k)];
        }
        let mut beta = DVector::zeros(p);
        for (k, &col) in self.perm.iter().enumerate() {
            beta[col] = z[k];
        }
        beta
    }

    /// Projection of `y` onto the column space, `Q Qᵀ y`.
    pub fn fitted(&self, y: &DVector<f64>) -> DVector<f64> {
        let p = self.rank;
        let mut v = y.clone();
        self.apply_qt(&mut v);
        for i in p..v.len() {
            v[i] = 0.0;
        }
        self.apply_q(&mut v);
        v
    }

    /// Thin `Q` (m × rank).
    pub fn thin_q(&self) -> DMatrix<f64> {
        let (m, p) = (self.nrows(), self.rank);
        let mut q = DMatrix::zeros(m, p);
        for j in 0..p {
            let mut e = DVector::zeros(m);
            e[j] = 1.0;
            self.apply_q(&mut e);
            q.set_column(j, &e);
        }
        q
    }

    /// Diagonal of the projection matrix, i.e. squared row norms of thin `Q`.
    pub fn leverages(&self) -> DVector<f64> {
        let q = self.thin_q();
        DVector::from_iterator(q.nrows(), q.row_iter().map(|r| r.norm_squared()))
    }
}

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}

/// Column-wise concatenation `[a | b]`.
pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Drops columns that are constant, so an explicit intercept can be added without collinearity.
pub fn drop_constant_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let keep: Vec<usize> = (0..x.ncols())
        .filter(|&j| {
            let c = x.column(j);
            let first = c[0];
            c.iter().any(|&v| v != first)
        })
        .collect();
    x.select_columns(&keep)
}

/// `(XᵀX)⁻¹` style inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| SglmError::SingularDesign("matrix is not positive definite".into()))
}

pub fn mean(v: &DVector<f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// Pearson correlation; `NaN` if either input is constant.
pub fn correlation(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

//! Thin wrappers over nalgebra decompositions used across the crate.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

/// Economy SVD `A = U diag(s) Vᵀ` truncated to the numerical rank.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `nrows × rank`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending, all `> rtol · s[0]`.
    pub s: Vec<f64>,
    /// `ncols × rank`, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

pub fn thin_svd(a: &DMatrix<f64>, rtol: f64) -> ThinSvd {
    let (n, p) = a.shape();
    if n == 0 || p == 0 {
        return ThinSvd {
            u: DMatrix::zeros(n, 0),
            s: Vec::new(),
            v: DMatrix::zeros(p, 0),
        };
    }
    // nalgebra is noticeably faster on tall inputs
    let (u_full, s_full, v_full) = if n >= p {
        let svd = a.clone().svd(true, true);
        let vt = svd.v_t.expect("requested V");
        (svd.u.expect("requested U"), svd.singular_values, vt.transpose())
    } else {
        let svd = a.transpose().svd(true, true);
        let vt = svd.v_t.expect("requested V");
        (vt.transpose(), svd.singular_values, svd.u.expect("requested U"))
    };
    let mut order: Vec<usize> = (0..s_full.len()).collect();
    order.sort_by(|&i, &j| s_full[j].total_cmp(&s_full[i]));
    let s_max = order.first().map(|&i| s_full[i]).unwrap_or(0.0);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| s_max > 0.0 && s_full[i] > rtol * s_max)
        .collect();
    let u = DMatrix::from_fn(n, keep.len(), |r, c| u_full[(r, keep[c])]);
    let v = DMatrix::from_fn(p, keep.len(), |r, c| v_full[(r, keep[c])]);
    let s = keep.iter().map(|&i| s_full[i]).collect();
    ThinSvd { u, s, v }
}

/// Orthonormal basis of the column space of `a` (via SVD, rank at `RANK_RTOL`).
pub fn column_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    thin_svd(a, RANK_RTOL).u
}

/// `‖Qᵀ y‖²` for an orthonormal `Q`; equals `yᵀ P y`.
pub fn projected_sq_norm(q: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    if q.ncols() == 0 {
        return 0.0;
    }
    (q.transpose() * y).norm_squared()
}

/// Columns of `a` listed in `idx`, in that order.
pub fn select_columns(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])])
}

/// `[a b]`.
pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

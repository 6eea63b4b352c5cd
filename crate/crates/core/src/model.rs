//! Grouped linear mixed-effect data model.
//!
//! Observations are stored group-contiguously. The random-effect design `Z`
//! is block-diagonal with one `n_m × q` block per group and is kept as a list
//! of blocks; [`GroupedDesign::z_dense`] materializes it when a dense matrix
//! is genuinely needed.

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{LmmError, Result};

/// Affine map applied to each fixed-effect column: `x_std = (x_raw - center) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GroupedDesign {
    y: DVector<f64>,
    x: DMatrix<f64>,
    z_blocks: Vec<DMatrix<f64>>,
    group_sizes: Vec<usize>,
    q: usize,
    x_scaling: ColumnScaling,
    z_scale: Vec<f64>,
    row_order: Vec<usize>,
}

/// Ground truth used by the simulation harness.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTruth {
    pub beta_star: Vec<f64>,
    pub sigma_star2: f64,
    pub tau_star2: f64,
}

impl ModelTruth {
    /// Indices with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.beta_star
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

fn is_degenerate(norm: f64, reference: f64, n: usize) -> bool {
    !(norm > 1e-12 * (n as f64).sqrt() * reference.max(1.0))
}

/// Builds a standardized design from raw inputs.
///
/// `raw_z_unblocked` is the `N × q` row-wise concatenation of the per-group
/// random-effect blocks. Rows are regrouped so that each group is contiguous
/// (groups keep their order of first appearance, rows keep their relative
/// order). Fixed-effect columns are centered and scaled to `‖x_j‖² = N`;
/// random-effect columns are scaled (not centered) so that each block column
/// has squared norm equal to its group size.
pub fn build_design<G: Eq + Hash + Clone>(
    y: &[f64],
    raw_x: &DMatrix<f64>,
    raw_z_unblocked: &DMatrix<f64>,
    group_ids: &[G],
) -> Result<GroupedDesign> {
    let n = y.len();
    if n == 0 {
        return Err(LmmError::Dimension("no observations".into()));
    }
    if raw_x.nrows() != n || raw_z_unblocked.nrows() != n || group_ids.len() != n {
        return Err(LmmError::Dimension(format!(
            "y has {n} rows, x has {}, z has {}, group ids {}",
            raw_x.nrows(),
            raw_z_unblocked.nrows(),
            group_ids.len()
        )));
    }
    if raw_x.ncols() == 0 {
        return Err(LmmError::Dimension("x has no columns".into()));
    }
    let q = raw_z_unblocked.ncols();
    if q == 0 {
        return Err(LmmError::Dimension("z has no columns".into()));
    }

    let mut slot: HashMap<&G, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, g) in group_ids.iter().enumerate() {
        let k = *slot.entry(g).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[k].push(i);
    }
    let row_order: Vec<usize> = members.iter().flatten().copied().collect();
    let group_sizes: Vec<usize> = members.iter().map(Vec::len).collect();

    let p = raw_x.ncols();
    let mut x = DMatrix::from_fn(n, p, |r, c| raw_x[(row_order[r], c)]);
    let mut center = vec![0.0; p];
    let mut scale = vec![0.0; p];
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let mean = col.mean();
        let peak = col.amax();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if is_degenerate(norm, peak, n) {
            return Err(LmmError::DegenerateColumn {
                matrix: "x",
                column: j,
            });
        }
        let s = norm / (n as f64).sqrt();
        col /= s;
        center[j] = mean;
        scale[j] = s;
    }

    let mut z_blocks = Vec::with_capacity(members.len());
    let mut z_scale = Vec::with_capacity(members.len() * q);
    for (m, rows) in members.iter().enumerate() {
        let nm = rows.len();
        let mut block = DMatrix::from_fn(nm, q, |r, c| raw_z_unblocked[(rows[r], c)]);
        for (l, mut col) in block.column_iter_mut().enumerate() {
            let peak = col.amax();
            let norm = col.norm();
            if is_degenerate(norm, peak, nm) {
                return Err(LmmError::DegenerateColumn {
                    matrix: "z",
                    column: m * q + l,
                });
            }
            let s = norm / (nm as f64).sqrt();
            col /= s;
            z_scale.push(s);
        }
        z_blocks.push(block);
    }

    let y = DVector::from_iterator(n, row_order.iter().map(|&i| y[i]));
    Ok(GroupedDesign {
        y,
        x,
        z_blocks,
        group_sizes,
        q,
        x_scaling: ColumnScaling { center, scale },
        z_scale,
        row_order,
    })
}

impl GroupedDesign {
    /// Assembles a design from already-standardized parts without rescaling.
    pub fn from_parts(
        y: DVector<f64>,
        x: DMatrix<f64>,
        z_blocks: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = x.nrows();
        if y.len() != n {
            return Err(LmmError::Dimension(format!(
                "y has {} rows, x has {n}",
                y.len()
            )));
        }
        let q = z_blocks.first().map(|b| b.ncols()).unwrap_or(0);
        if q == 0 {
            return Err(LmmError::Dimension("z has no columns".into()));
        }
        for (m, b) in z_blocks.iter().enumerate() {
            if b.nrows() == 0 {
                return Err(LmmError::EmptyGroup(m));
            }
            if b.ncols() != q {
                return Err(LmmError::Dimension(format!(
                    "block {m} has {} columns, expected {q}",
                    b.ncols()
                )));
            }
        }
        let group_sizes: Vec<usize> = z_blocks.iter().map(|b| b.nrows()).collect();
        if group_sizes.iter().sum::<usize>() != n {
            return Err(LmmError::Dimension("group sizes do not sum to N".into()));
        }
        let p = x.ncols();
        let qm = q * z_blocks.len();
        Ok(GroupedDesign {
            y,
            x,
            z_blocks,
            group_sizes,
            q,
            x_scaling: ColumnScaling {
                center: vec![0.0; p],
                scale: vec![1.0; p],
            },
            z_scale: vec![1.0; qm],
            row_order: (0..n).collect(),
        })
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_fixed(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of columns of the blocked `Z`, i.e. `q · M`.
    pub fn n_random(&self) -> usize {
        self.q * self.group_sizes.len()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z_blocks(&self) -> &[DMatrix<f64>] {
        &self.z_blocks
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn x_scaling(&self) -> &ColumnScaling {
        &self.x_scaling
    }

    pub fn z_scale(&self) -> &[f64] {
        &self.z_scale
    }

    /// Original row index of each stored row.
    pub fn row_order(&self) -> &[usize] {
        &self.row_order
    }

    /// Row ranges of each group.
    pub fn group_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.group_sizes
            .iter()
            .map(|&nm| {
                let r = start..start + nm;
                start += nm;
                r
            })
            .collect()
    }

    /// Replaces the response, keeping the design.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n_obs() {
            return Err(LmmError::Dimension(format!(
                "response has {} entries, design has {} rows",
                y.len(),
                self.n_obs()
            )));
        }
        let mut out = self.clone();
        out.y = y;
        Ok(out)
    }

    /// Dense `N × qM` block-diagonal `Z`.
    pub fn z_dense(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.n_obs(), self.n_random());
        for (m, (rows, block)) in self.group_ranges().into_iter().zip(&self.z_blocks).enumerate() {
            z.view_mut((rows.start, m * self.q), (rows.len(), self.q))
                .copy_from(block);
        }
        z
    }

    /// `Z v` for `v` of length `qM`.
    pub fn z_mul(&self, v: &[f64]) -> DVector<f64> {
        assert_eq!(v.len(), self.n_random());
        let mut out = DVector::zeros(self.n_obs());
        for (m, (rows, block)) in self.group_ranges().into_iter().zip(&self.z_blocks).enumerate() {
            let coef = DVector::from_column_slice(&v[m * self.q..(m + 1) * self.q]);
            out.rows_mut(rows.start, rows.len()).copy_from(&(block * coef));
        }
        out
    }

    /// `Zᵀ a` for `a` of length `N`.
    pub fn zt_mul(&self, a: &[f64]) -> DVector<f64> {
        assert_eq!(a.len(), self.n_obs());
        let mut out = DVector::zeros(self.n_random());
        for (m, (rows, block)) in self.group_ranges().into_iter().zip(&self.z_blocks).enumerate() {
            let seg = DVector::from_column_slice(&a[rows.clone()]);
            out.rows_mut(m * self.q, self.q).copy_from(&(block.transpose() * seg));
        }
        out
    }

    /// Block `m` of `ZᵀZ` (size `q × q`); `ZᵀZ` is block-diagonal.
    pub fn ztz_block(&self, m: usize) -> DMatrix<f64> {
        let b = &self.z_blocks[m];
        b.transpose() * b
    }

    /// Maps a coefficient on the standardized scale back to the raw covariate scale.
    pub fn coef_to_original(&self, j: usize, value: f64) -> f64 {
        value / self.x_scaling.scale[j]
    }
}

/// `V = σ² I + τ² Z Zᵀ`, stored as its `M` diagonal blocks.
#[derive(Debug, Clone)]
pub struct MarginalCovariance {
    sigma2: f64,
    tau2: f64,
    blocks: Vec<DMatrix<f64>>,
    ranges: Vec<Range<usize>>,
}

pub fn marginal_covariance(
    design: &GroupedDesign,
    sigma2: f64,
    tau2: f64,
) -> Result<MarginalCovariance> {
    if !(sigma2 > 0.0) {
        return Err(LmmError::InvalidArgument(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    if !(tau2 >= 0.0) {
        return Err(LmmError::InvalidArgument(format!(
            "tau2 must be nonnegative, got {tau2}"
        )));
    }
    let blocks = design
        .z_blocks()
        .iter()
        .map(|b| {
            let mut v = b * b.transpose() * tau2;
            for i in 0..v.nrows() {
                v[(i, i)] += sigma2;
            }
            v
        })
        .collect();
    Ok(MarginalCovariance {
        sigma2,
        tau2,
        blocks,
        ranges: design.group_ranges(),
    })
}

impl MarginalCovariance {
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.ranges.last().map(|r| r.end).unwrap_or(0)
    }

    /// `V v`, block by block.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim());
        let mut out = DVector::zeros(v.len());
        for (rows, block) in self.ranges.iter().zip(&self.blocks) {
            let seg = v.rows(rows.start, rows.len());
            out.rows_mut(rows.start, rows.len())
                .copy_from(&(block * seg));
        }
        out
    }

    /// Dense `N × N` matrix; intended for small problems and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut v = DMatrix::zeros(n, n);
        for (rows, block) in self.ranges.iter().zip(&self.blocks) {
            v.view_mut((rows.start, rows.start), (rows.len(), rows.len()))
                .copy_from(block);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn random_intercept_blocks() {
        let raw_x = gaussian(6, 2, 1);
        let ones = DMatrix::from_element(6, 1, 1.0);
        let d = build_design(&[0.0; 6], &raw_x, &ones, &[1, 1, 1, 2, 2, 2]).unwrap();
        let z = d.z_dense();
        assert_eq!(z.shape(), (6, 2));
        for i in 0..6 {
            let (own, other) = if i < 3 { (0, 1) } else { (1, 0) };
            assert_eq!(z[(i, own)], 1.0);
            assert_eq!(z[(i, other)], 0.0);
        }
        for c in z.column_iter() {
            assert!((c.norm_squared() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_rejected() {
        let mut raw_x = gaussian(6, 3, 2);
        raw_x.column_mut(1).fill(4.2);
        let ones = DMatrix::from_element(6, 1, 1.0);
        let err = build_design(&[0.0; 6], &raw_x, &ones, &[0, 0, 0, 1, 1, 1]).unwrap_err();
        assert!(matches!(
            err,
            LmmError::DegenerateColumn {
                matrix: "x",
                column: 1
            }
        ));
    }

    #[test]
    fn zero_random_effect_column_is_rejected() {
        let raw_x = gaussian(4, 2, 3);
        let raw_z = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 0.0, 0.0]);
        let err = build_design(&[0.0; 4], &raw_x, &raw_z, &[0, 0, 1, 1]).unwrap_err();
        assert!(matches!(err, LmmError::DegenerateColumn { matrix: "z", column: 1 }));
    }

    #[test]
    fn gaussian_columns_get_norm_n() {
        let raw_x = gaussian(6, 4, 4);
        let ones = DMatrix::from_element(6, 1, 1.0);
        let d = build_design(&[0.0; 6], &raw_x, &ones, &[0, 0, 0, 1, 1, 1]).unwrap();
        for c in d.x().column_iter() {
            let direct: f64 = c.iter().map(|v| v * v).sum();
            assert!((direct - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interleaved_groups_are_made_contiguous() {
        let raw_x = gaussian(5, 2, 5);
        let ones = DMatrix::from_element(5, 1, 1.0);
        let y = [0.0, 1.0, 2.0, 3.0, 4.0];
        let d = build_design(&y, &raw_x, &ones, &["a", "b", "a", "c", "b"]).unwrap();
        assert_eq!(d.group_sizes(), &[2, 2, 1]);
        assert_eq!(d.row_order(), &[0, 2, 1, 4, 3]);
        assert_eq!(d.y().as_slice(), &[0.0, 2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn standardization_is_idempotent() {
        let raw_x = gaussian(12, 5, 6);
        let raw_z = gaussian(12, 2, 7);
        let groups: Vec<usize> = (0..12).map(|i| i / 4).collect();
        let y: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let d1 = build_design(&y, &raw_x, &raw_z, &groups).unwrap();
        let zu = DMatrix::from_fn(12, 2, |r, c| d1.z_blocks()[r / 4][(r % 4, c)]);
        let d2 = build_design(d1.y().as_slice(), d1.x(), &zu, &groups).unwrap();
        assert!((d2.x() - d1.x()).amax() < 1e-12);
        assert!((d2.z_dense() - d1.z_dense()).amax() < 1e-12);
    }

    #[test]
    fn ragged_groups_scale_to_own_size() {
        let raw_x = gaussian(7, 2, 8);
        let raw_z = gaussian(7, 2, 9);
        let groups = [0, 0, 1, 1, 1, 1, 2];
        let d = build_design(&[0.0; 7], &raw_x, &raw_z, &groups).unwrap();
        for (block, &nm) in d.z_blocks().iter().zip(d.group_sizes()) {
            for c in block.column_iter() {
                assert!((c.norm_squared() - nm as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_without_random_effects_is_scaled_identity() {
        let raw_x = gaussian(6, 2, 10);
        let ones = DMatrix::from_element(6, 1, 1.0);
        let d = build_design(&[0.0; 6], &raw_x, &ones, &[0, 0, 0, 1, 1, 1]).unwrap();
        let v = marginal_covariance(&d, 0.7, 0.0).unwrap().to_dense();
        assert!((v - DMatrix::identity(6, 6) * 0.7).amax() == 0.0);
    }

    #[test]
    fn covariance_block_matches_dense_product() {
        let raw_x = gaussian(6, 2, 11);
        let ones = DMatrix::from_element(6, 1, 1.0);
        let d = build_design(&[0.0; 6], &raw_x, &ones, &[0, 0, 0, 1, 1, 1]).unwrap();
        let cov = marginal_covariance(&d, 0.25, 1.0).unwrap();
        let z = d.z_dense();
        let oracle = DMatrix::identity(6, 6) * 0.25 + &z * z.transpose();
        assert!((cov.to_dense() - &oracle).amax() < 1e-14);
        // each within-group entry is tau2 * 1 * 1, diagonal is 0.25 + 1
        assert!((cov.blocks()[0][(0, 1)] - 1.0).abs() < 1e-14);
        assert!((cov.blocks()[0][(2, 2)] - 1.25).abs() < 1e-14);
        assert_eq!(cov.to_dense()[(0, 4)], 0.0);

        let v = DVector::from_fn(6, |i, _| i as f64 - 2.5);
        assert!((cov.apply(&v) - &oracle * &v).amax() < 1e-13);
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        let raw_x = gaussian(4, 2, 12);
        let ones = DMatrix::from_element(4, 1, 1.0);
        let d = build_design(&[0.0; 4], &raw_x, &ones, &[0, 0, 1, 1]).unwrap();
        assert!(marginal_covariance(&d, 0.0, 1.0).is_err());
        assert!(marginal_covariance(&d, 1.0, -0.1).is_err());
    }

    #[test]
    fn z_products_agree_with_dense() {
        let raw_x = gaussian(7, 2, 13);
        let raw_z = gaussian(7, 2, 14);
        let d = build_design(&[0.0; 7], &raw_x, &raw_z, &[0, 0, 1, 1, 1, 2, 2]).unwrap();
        let z = d.z_dense();
        let v: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let a: Vec<f64> = (0..7).map(|i| (i as f64).cos()).collect();
        assert!((d.z_mul(&v) - &z * DVector::from_vec(v.clone())).amax() < 1e-14);
        assert!((d.zt_mul(&a) - z.transpose() * DVector::from_vec(a.clone())).amax() < 1e-14);
    }
}

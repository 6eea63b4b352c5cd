//! Empirical checks of the design conditions: the irrepresentability
//! statistic `T_IR` and the projection statistic `T_4`, on Wishart-covariance
//! designs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{LmmError, Result};
use crate::linalg::{column_basis, hcat, select_columns, RANK_RTOL};
use crate::model::{build_design, GroupedDesign, ModelTruth};
use crate::par::map_indexed;
use crate::rng;
use crate::simulate::{draw_response, RateEstimate, TableRow};

/// Default bound for `T_4`.
pub const T4_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub t_ir: f64,
    pub t_4: f64,
    pub c_threshold: f64,
}

impl AssumptionCheck {
    pub fn irrepresentable(&self) -> bool {
        self.t_ir < 1.0
    }

    pub fn t4_bounded(&self) -> bool {
        self.t_4 < self.c_threshold
    }
}

fn active_set(beta_star: &[f64]) -> Vec<usize> {
    beta_star
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// `max_{j∈A} ‖Σ̂_{Bᶜ,B} Σ̂_{B,B}⁻¹ sign(β_B)‖_∞` with `B = A∖{j}` and `Σ̂ = XᵀX/N`.
///
/// Each `Σ̂_{B,B}⁻¹` is obtained from `Σ̂_{A,A}⁻¹` by a rank-one downdate.
pub fn t_ir(design: &GroupedDesign, beta_star: &[f64]) -> Result<f64> {
    let x = design.x();
    let p = x.ncols();
    if beta_star.len() != p {
        return Err(LmmError::Dimension(format!(
            "beta has {} entries, design has {p} columns",
            beta_star.len()
        )));
    }
    let active = active_set(beta_star);
    if active.is_empty() {
        return Err(LmmError::InvalidArgument("active set is empty".into()));
    }
    if active.len() == 1 {
        return Ok(0.0);
    }
    let n = x.nrows() as f64;
    let xa = select_columns(x, &active);
    let gram_aa = xa.tr_mul(&xa) / n;
    let cross = x.tr_mul(&xa) / n;
    let inv_aa = gram_aa
        .cholesky()
        .ok_or_else(|| LmmError::RankDeficient {
            columns: active.clone(),
        })?
        .inverse();
    let signs = DVector::from_iterator(active.len(), active.iter().map(|&j| beta_star[j].signum()));

    let mut in_active = vec![false; p];
    active.iter().for_each(|&j| in_active[j] = true);
    let mut t = 0.0_f64;
    for (pos, &j) in active.iter().enumerate() {
        let pivot = inv_aa[(pos, pos)];
        if !(pivot > 0.0) {
            return Err(LmmError::RankDeficient {
                columns: active.clone(),
            });
        }
        // weights on A with the j-th entry forced to zero
        let mut s = signs.clone();
        s[pos] = 0.0;
        let col = inv_aa.column(pos);
        let w = &inv_aa * &s - col * (col.dot(&s) / pivot);
        let fitted = &cross * w;
        let worst = (0..p)
            .filter(|&k| k == j || !in_active[k])
            .map(|k| fitted[k].abs())
            .fold(0.0, f64::max);
        t = t.max(worst);
    }
    Ok(t)
}

/// `‖P_X̃ x_j‖_∞` for `X̃ = [X_{A∖{j}}, X_S, Z]`.
pub fn t_4_with_subset(design: &GroupedDesign, active: &[usize], subset: &[usize], j: usize) -> Result<f64> {
    if !active.contains(&j) {
        return Err(LmmError::InvalidArgument(format!("{j} is not in the active set")));
    }
    let mut cols: Vec<usize> = active.iter().copied().filter(|&k| k != j).collect();
    cols.extend_from_slice(subset);
    let x_tilde = hcat(&select_columns(design.x(), &cols), &design.z_dense());
    let q = column_basis(&x_tilde);
    if q.ncols() == 0 {
        return Err(LmmError::InvalidArgument("augmented design has rank zero".into()));
    }
    let xj = design.x().column(j);
    let projected = &q * q.tr_mul(&xj);
    Ok(projected.amax())
}

/// [`t_4_with_subset`] with `S` the full complement of the active set.
pub fn t_4(design: &GroupedDesign, active: &[usize], j: usize) -> Result<f64> {
    let complement = complement_of(active, design.n_fixed());
    t_4_with_subset(design, active, &complement, j)
}

fn complement_of(active: &[usize], p: usize) -> Vec<usize> {
    (0..p).filter(|k| !active.contains(k)).collect()
}

/// `T_{4,j}` for every `j ∈ A`, with `S` the full complement.
///
/// Then `X̃` is `W = [X Z]` minus column `j`, and with `W = QR` the residual of
/// `x_j` on the other columns is `Q g / ‖g‖²` where `Rᵀg = e_j`. One QR serves
/// every `j`. Falls back to per-`j` projections when `W` is rank deficient.
pub fn t_4_all(design: &GroupedDesign, active: &[usize]) -> Result<Vec<f64>> {
    let w = hcat(design.x(), &design.z_dense());
    let (n, k) = w.shape();
    if k < n {
        let qr = w.clone().qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
        let top = diag.iter().copied().fold(0.0, f64::max);
        if diag.iter().all(|&v| v > RANK_RTOL.sqrt() * top) {
            let q = qr.q();
            let rt = r.transpose();
            return active
                .iter()
                .map(|&j| {
                    let mut e = DVector::zeros(k);
                    e[j] = 1.0;
                    let g = rt
                        .solve_lower_triangular(&e)
                        .ok_or(LmmError::RankDeficient { columns: vec![j] })?;
                    let resid = &q * &g / g.norm_squared();
                    let projected = w.column(j) - resid;
                    Ok(projected.amax())
                })
                .collect();
        }
    }
    active.iter().map(|&j| t_4(design, active, j)).collect()
}

/// Both statistics for one design.
pub fn assumption_check(design: &GroupedDesign, beta_star: &[f64], c_threshold: f64) -> Result<AssumptionCheck> {
    let active = active_set(beta_star);
    let t_ir = t_ir(design, beta_star)?;
    let t_4 = t_4_all(design, &active)?.into_iter().fold(0.0, f64::max);
    Ok(AssumptionCheck {
        t_ir,
        t_4,
        c_threshold,
    })
}

/// Lower-triangular Bartlett factor `L` with `LLᵀ ~ Wishart(dof, I_dim)`.
pub fn bartlett_factor<R: Rng>(dim: usize, dof: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if dof < dim {
        return Err(LmmError::InvalidArgument(format!(
            "Wishart degrees of freedom {dof} below dimension {dim}"
        )));
    }
    let mut l = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let chi = ChiSquared::new((dof - i) as f64)
            .map_err(|e| LmmError::InvalidArgument(e.to_string()))?;
        l[(i, i)] = chi.sample(rng).sqrt();
        for c in 0..i {
            l[(i, c)] = StandardNormal.sample(rng);
        }
    }
    Ok(l)
}

/// Design whose rows of `[X Z_u]` are i.i.d. `N(0, Σ)` with `Σ ~ Wishart(p+q, I)`,
/// `β* = (1,…,1,0,…,0)` with `d` ones and unit variance components.
pub fn wishart_scenario(
    p: usize,
    q: usize,
    m_groups: usize,
    n_per_group: usize,
    d: usize,
    seed: u64,
) -> Result<(GroupedDesign, ModelTruth)> {
    if p == 0 || q == 0 || m_groups == 0 || n_per_group == 0 || d == 0 || d > p {
        return Err(LmmError::InvalidArgument(format!(
            "invalid Wishart scenario p={p} q={q} M={m_groups} n={n_per_group} d={d}"
        )));
    }
    let n = m_groups * n_per_group;
    let dim = p + q;
    let mut rng = rng::stream(seed, &[0]);
    let l = bartlett_factor(dim, dim, &mut rng)?;
    let white = DMatrix::from_fn(dim, n, |_, _| StandardNormal.sample(&mut rng));
    let raw = (l * white).transpose();
    let raw_x = raw.columns(0, p).clone_owned();
    let raw_z = raw.columns(p, q).clone_owned();
    let ids: Vec<usize> = (0..n).map(|i| i / n_per_group).collect();
    let design = build_design(&vec![0.0; n], &raw_x, &raw_z, &ids)?;
    let mut beta_star = vec![0.0; p];
    beta_star[..d].iter_mut().for_each(|b| *b = 1.0);
    let truth = ModelTruth {
        beta_star,
        sigma_star2: 1.0,
        tau_star2: 1.0,
    };
    let y = draw_response(&design, &truth, &mut rng);
    Ok((design.with_response(y)?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSettings {
    pub q: usize,
    pub m_groups: usize,
    pub n_per_group: usize,
    pub replicates: usize,
    pub seed: u64,
    pub c_threshold: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            q: 2,
            m_groups: 25,
            n_per_group: 20,
            replicates: 300,
            seed: 1,
            c_threshold: T4_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub p: usize,
    pub d: usize,
    /// Proportion of replicates with `T_IR < 1`.
    pub prop_irrepresentable: RateEstimate,
    /// Proportion of replicates with `T_4 < c_threshold`.
    pub prop_t4_bounded: RateEstimate,
    pub n_failed: usize,
}

/// Proportions for one `(p, d)` cell.
pub fn run_cell(p: usize, d: usize, settings: &GridSettings) -> CellResult {
    let checks = map_indexed(settings.replicates, |r| {
        let seed = rng::derive_seed(settings.seed, &[p as u64, d as u64, r as u64]);
        let (design, truth) = wishart_scenario(p, settings.q, settings.m_groups, settings.n_per_group, d, seed)?;
        assumption_check(&design, &truth.beta_star, settings.c_threshold)
    });
    let ok: Vec<AssumptionCheck> = checks.iter().filter_map(|c| c.as_ref().ok().copied()).collect();
    CellResult {
        p,
        d,
        prop_irrepresentable: RateEstimate::from_indicators(ok.iter().map(|c| c.irrepresentable())),
        prop_t4_bounded: RateEstimate::from_indicators(ok.iter().map(|c| c.t4_bounded())),
        n_failed: checks.len() - ok.len(),
    }
}

/// Cells for `p ∈ ps` and `d = t p/8`, `t ∈ ts`.
pub fn run_grid(ps: &[usize], ts: &[usize], settings: &GridSettings) -> Vec<CellResult> {
    ps.iter()
        .flat_map(|&p| ts.iter().map(move |&t| (p, t * p / 8)))
        .filter(|&(p, d)| d >= 1 && d <= p)
        .map(|(p, d)| run_cell(p, d, settings))
        .collect()
}

pub fn long_table(cells: &[CellResult]) -> Vec<TableRow> {
    cells
        .iter()
        .flat_map(|c| {
            let scenario = format!("wishart_p{}_d{}", c.p, c.d);
            [
                ("prop_t_ir_lt_1", c.prop_irrepresentable),
                ("prop_t4_lt_c", c.prop_t4_bounded),
            ]
            .into_iter()
            .map(move |(m, r)| TableRow {
                scenario: scenario.clone(),
                metric: m.into(),
                value: r.value,
                stderr: r.stderr,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonal_design() -> GroupedDesign {
        // columns of a scaled 8×8 Hadamard matrix, minus the constant column
        let h = [
            [1, 1, 1, 1, 1, 1, 1, 1],
            [1, -1, 1, -1, 1, -1, 1, -1],
            [1, 1, -1, -1, 1, 1, -1, -1],
            [1, -1, -1, 1, 1, -1, -1, 1],
            [1, 1, 1, 1, -1, -1, -1, -1],
            [1, -1, 1, -1, -1, 1, -1, 1],
            [1, 1, -1, -1, -1, -1, 1, 1],
            [1, -1, -1, 1, -1, 1, 1, -1],
        ];
        let x = DMatrix::from_fn(8, 4, |r, c| h[r][c + 1] as f64);
        let z = vec![DMatrix::from_element(4, 1, 1.0), DMatrix::from_element(4, 1, 1.0)];
        GroupedDesign::from_parts(DVector::zeros(8), x, z).unwrap()
    }

    #[test]
    fn orthogonal_design_has_zero_t_ir() {
        let d = orthogonal_design();
        assert!(t_ir(&d, &[1.0, 1.0, -1.0, 0.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_active_column_gives_zero() {
        let d = orthogonal_design();
        assert_eq!(t_ir(&d, &[0.0, 2.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_column_has_zero_t4() {
        let d = orthogonal_design();
        // column 0 is orthogonal to the other columns and to both group indicators
        assert!(t_4(&d, &[0, 1], 0).unwrap() < 1e-12);
    }

    #[test]
    fn fast_t4_matches_direct() {
        let (design, truth) = wishart_scenario(16, 2, 5, 8, 4, 9).unwrap();
        let active = active_set(&truth.beta_star);
        let fast = t_4_all(&design, &active).unwrap();
        for (&j, f) in active.iter().zip(&fast) {
            let direct = t_4(&design, &active, j).unwrap();
            assert!((f - direct).abs() < 1e-8, "{f} vs {direct}");
        }
    }

    #[test]
    fn wishart_factor_is_lower_triangular_psd() {
        let mut rng = rng::stream(3, &[]);
        let l = bartlett_factor(6, 6, &mut rng).unwrap();
        for r in 0..6 {
            for c in r + 1..6 {
                assert_eq!(l[(r, c)], 0.0);
            }
        }
        let sigma = &l * l.transpose();
        assert!(sigma.symmetric_eigenvalues().min() > -1e-10);
    }

    #[test]
    fn wishart_design_is_scaled() {
        let (design, _) = wishart_scenario(8, 2, 25, 20, 1, 4).unwrap();
        for col in design.x().column_iter() {
            assert!((col.norm_squared() - 500.0).abs() < 1e-8);
        }
        for b in design.z_blocks() {
            for col in b.column_iter() {
                assert!((col.norm_squared() - 20.0).abs() < 1e-9);
            }
        }
    }
}

//! Exact solves of the elliptic equation and of the coupled state/adjoint
//! system, globally or on a strip.
//!
//! Known boundary values are moved to the right-hand side, so the factored
//! matrix depends only on `(operator, α, region)` and can be reused across
//! Schwarz sweeps. The coupled unknowns are interleaved per point as
//! `(Y_k, P̃_k)`, which keeps the block system banded:
//!
//! ```text
//! [ L_h    α⁻¹ I ] [ Y  ]   [ F + boundary terms    ]
//! [ -I     L_h   ] [ P̃ ] = [ -Y_d + boundary terms ]
//! ```

use crate::error::{ensure_same_grid, Error, Result};
use crate::fdm::{neighbours, StencilOperator};
use crate::linalg::{BandMatrix, BandedLu, DenseMatrix};
use crate::metrics::tolerances::SOLVER_RESIDUAL;
use crate::model::{GridFunction, Region};

/// Offset between vertically adjacent unknowns in solver order.
fn row_stride(region: &Region) -> usize {
    if region.grid().dim() == 1 {
        1
    } else {
        region.nx()
    }
}

/// Sum of `1/h² · z` over the stencil neighbours of `(i, j)` outside the region interior.
#[inline]
fn boundary_term(op: &StencilOperator, region: &Region, z: &GridFunction, i: usize, j: usize) -> f64 {
    neighbours(op.grid(), i, j)
        .filter(|&(ni, nj)| !region.contains_interior(ni, nj))
        .map(|(ni, nj)| z.at(ni, nj))
        .sum::<f64>()
        * op.coupling()
}

fn check_region(op: &StencilOperator, region: &Region) -> Result<()> {
    ensure_same_grid(op.grid(), region.grid())
}

/// Factored `L_h` on the interior of a region.
#[derive(Debug, Clone)]
pub struct EllipticFactor {
    op: StencilOperator,
    region: Region,
    lu: BandedLu,
}

impl EllipticFactor {
    pub fn new(op: &StencilOperator, region: &Region) -> Result<Self> {
        check_region(op, region)?;
        let m = region.interior_len();
        let bw = row_stride(region);
        let mut a = BandMatrix::zeros(m, bw, bw);
        for (i, j) in region.interior_points() {
            let row = region.local_index(i, j);
            a.set(row, row, op.diagonal());
            for (ni, nj) in neighbours(op.grid(), i, j) {
                if region.contains_interior(ni, nj) {
                    a.set(row, region.local_index(ni, nj), -op.coupling());
                }
            }
        }
        Ok(Self { op: *op, region: *region, lu: a.factor()? })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Solves `L_h W = rhs` on the region interior, reading Dirichlet data
    /// from the region boundary of `w` and overwriting only its interior.
    pub fn solve_into(&self, rhs: Option<&GridFunction>, w: &mut GridFunction) -> Result<()> {
        ensure_same_grid(self.op.grid(), w.grid())?;
        if let Some(r) = rhs {
            ensure_same_grid(self.op.grid(), r.grid())?;
        }
        let mut b: Vec<f64> = self
            .region
            .interior_points()
            .map(|(i, j)| {
                rhs.map_or(0.0, |r| r.at(i, j)) + boundary_term(&self.op, &self.region, w, i, j)
            })
            .collect();
        self.lu.solve_in_place(&mut b);
        for ((i, j), v) in self.region.interior_points().zip(b) {
            w.set(i, j, v);
        }
        Ok(())
    }
}

/// Max-norm residual of `L_h W = rhs` on the region, relative to the natural scale.
pub fn elliptic_residual(
    op: &StencilOperator,
    region: &Region,
    rhs: &GridFunction,
    w: &GridFunction,
) -> f64 {
    let mut res = 0.0f64;
    let mut scale = f64::MIN_POSITIVE;
    for (i, j) in region.interior_points() {
        res = res.max((op.at(w, i, j) - rhs.at(i, j)).abs());
        scale = scale.max(rhs.at(i, j).abs()).max(op.diagonal() * w.at(i, j).abs());
    }
    res / scale
}

/// `W` with `L_h W = rhs` on the region interior and `W = boundary_data`
/// everywhere else. The residual is verified before returning.
pub fn solve_elliptic(
    op: &StencilOperator,
    region: &Region,
    rhs: &GridFunction,
    boundary_data: &GridFunction,
) -> Result<GridFunction> {
    let factor = EllipticFactor::new(op, region)?;
    let mut w = boundary_data.clone();
    factor.solve_into(Some(rhs), &mut w)?;
    let residual = elliptic_residual(op, region, rhs, &w);
    if residual > SOLVER_RESIDUAL {
        return Err(Error::Residual { residual, tol: SOLVER_RESIDUAL });
    }
    Ok(w)
}

fn assemble_coupled(op: &StencilOperator, alpha: f64, region: &Region, mut put: impl FnMut(usize, usize, f64)) {
    let inv_alpha = 1.0 / alpha;
    for (i, j) in region.interior_points() {
        let k = region.local_index(i, j);
        let (ry, rp) = (2 * k, 2 * k + 1);
        put(ry, ry, op.diagonal());
        put(ry, rp, inv_alpha);
        put(rp, ry, -1.0);
        put(rp, rp, op.diagonal());
        for (ni, nj) in neighbours(op.grid(), i, j) {
            if region.contains_interior(ni, nj) {
                let c = region.local_index(ni, nj);
                put(ry, 2 * c, -op.coupling());
                put(rp, 2 * c + 1, -op.coupling());
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

/// Factored coupled state/adjoint system on the interior of a region.
#[derive(Debug, Clone)]
pub struct CoupledFactor {
    op: StencilOperator,
    alpha: f64,
    region: Region,
    lu: BandedLu,
}

impl CoupledFactor {
    pub fn new(op: &StencilOperator, alpha: f64, region: &Region) -> Result<Self> {
        check_region(op, region)?;
        check_alpha(alpha)?;
        let m = region.interior_len();
        let bw = 2 * row_stride(region);
        let mut a = BandMatrix::zeros(2 * m, bw, bw);
        assemble_coupled(op, alpha, region, |r, c, v| a.set(r, c, v));
        Ok(Self { op: *op, alpha, region: *region, lu: a.factor()? })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Solves for interior `(Y, P̃)` given the assembled right-hand sides.
    pub fn solve_rhs(&self, rhs_state: &[f64], rhs_adjoint: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.region.interior_len();
        assert!(rhs_state.len() == m && rhs_adjoint.len() == m);
        let mut b = Vec::with_capacity(2 * m);
        for k in 0..m {
            b.push(rhs_state[k]);
            b.push(rhs_adjoint[k]);
        }
        self.lu.solve_in_place(&mut b);
        let y = b.iter().step_by(2).copied().collect();
        let p = b.iter().skip(1).step_by(2).copied().collect();
        (y, p)
    }

    /// One subdomain solve: boundary data is read from `y` and `p` on the
    /// region boundary, and only the region interior is overwritten.
    /// `data = None` means homogeneous `F = Y_d = 0`.
    pub fn solve_into(
        &self,
        data: Option<(&GridFunction, &GridFunction)>,
        y: &mut GridFunction,
        p: &mut GridFunction,
    ) -> Result<()> {
        let sys = CoupledSystem::assemble(&self.op, self.alpha, &self.region, data, y, p)?;
        let (ys, ps) = self.solve_rhs(&sys.rhs_state, &sys.rhs_adjoint);
        for (((i, j), yv), pv) in self.region.interior_points().zip(ys).zip(ps) {
            y.set(i, j, yv);
            p.set(i, j, pv);
        }
        Ok(())
    }
}

/// The block system `[L_h, α⁻¹I; -I, L_h] (Y_I; P̃_I) = (rhs_state; rhs_adjoint)`
/// on a region, with boundary data already folded into the right-hand sides.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub operator: StencilOperator,
    pub alpha: f64,
    pub region: Region,
    pub rhs_state: Vec<f64>,
    pub rhs_adjoint: Vec<f64>,
    pub y_boundary: GridFunction,
    pub p_boundary: GridFunction,
}

impl CoupledSystem {
    /// `f`/`y_d` are the state source and target; the boundary values of
    /// `y_boundary`/`p_boundary` on the region boundary are the Dirichlet data.
    pub fn new(
        op: &StencilOperator,
        alpha: f64,
        region: &Region,
        f: &GridFunction,
        y_d: &GridFunction,
        y_boundary: &GridFunction,
        p_boundary: &GridFunction,
    ) -> Result<Self> {
        Self::assemble(op, alpha, region, Some((f, y_d)), y_boundary, p_boundary)
    }

    fn assemble(
        op: &StencilOperator,
        alpha: f64,
        region: &Region,
        data: Option<(&GridFunction, &GridFunction)>,
        y_boundary: &GridFunction,
        p_boundary: &GridFunction,
    ) -> Result<Self> {
        check_region(op, region)?;
        check_alpha(alpha)?;
        let grid = op.grid();
        ensure_same_grid(grid, y_boundary.grid())?;
        ensure_same_grid(grid, p_boundary.grid())?;
        if let Some((f, y_d)) = data {
            ensure_same_grid(grid, f.grid())?;
            ensure_same_grid(grid, y_d.grid())?;
        }
        let m = region.interior_len();
        let mut rhs_state = Vec::with_capacity(m);
        let mut rhs_adjoint = Vec::with_capacity(m);
        for (i, j) in region.interior_points() {
            let (fv, ydv) = data.map_or((0.0, 0.0), |(f, y_d)| (f.at(i, j), y_d.at(i, j)));
            rhs_state.push(fv + boundary_term(op, region, y_boundary, i, j));
            rhs_adjoint.push(-ydv + boundary_term(op, region, p_boundary, i, j));
        }
        Ok(Self {
            operator: *op,
            alpha,
            region: *region,
            rhs_state,
            rhs_adjoint,
            y_boundary: y_boundary.clone(),
            p_boundary: p_boundary.clone(),
        })
    }

    /// Explicit `2m × 2m` matrix in interleaved order.
    pub fn dense_matrix(&self) -> DenseMatrix {
        let m = self.region.interior_len();
        let mut a = DenseMatrix::zeros(2 * m, 2 * m);
        assemble_coupled(&self.operator, self.alpha, &self.region, |r, c, v| a.set(r, c, v));
        a
    }

    fn scatter(&self, y_int: Vec<f64>, p_int: Vec<f64>) -> (GridFunction, GridFunction) {
        let mut y = self.y_boundary.clone();
        let mut p = self.p_boundary.clone();
        for (((i, j), yv), pv) in self.region.interior_points().zip(y_int).zip(p_int) {
            y.set(i, j, yv);
            p.set(i, j, pv);
        }
        (y, p)
    }

    /// Max-norm residual of both block rows, relative to the natural scale.
    pub fn residual(&self, y: &GridFunction, p: &GridFunction) -> f64 {
        let op = &self.operator;
        let inv_alpha = 1.0 / self.alpha;
        let mut res = 0.0f64;
        let mut scale = f64::MIN_POSITIVE;
        for (k, (i, j)) in self.region.interior_points().enumerate() {
            let (yv, pv) = (y.at(i, j), p.at(i, j));
            // boundary terms are already inside the rhs, so use the interior-only stencil
            let ly = op.at(y, i, j) + boundary_term(op, &self.region, y, i, j);
            let lp = op.at(p, i, j) + boundary_term(op, &self.region, p, i, j);
            res = res
                .max((ly + inv_alpha * pv - self.rhs_state[k]).abs())
                .max((lp - yv - self.rhs_adjoint[k]).abs());
            scale = scale
                .max(self.rhs_state[k].abs())
                .max(self.rhs_adjoint[k].abs())
                .max(op.diagonal() * yv.abs())
                .max(op.diagonal() * pv.abs())
                .max(inv_alpha * pv.abs());
        }
        res / scale
    }
}

/// Banded direct solve with residual verification.
pub fn solve_coupled(sys: &CoupledSystem) -> Result<(GridFunction, GridFunction)> {
    let factor = CoupledFactor::new(&sys.operator, sys.alpha, &sys.region)?;
    let (yi, pi) = factor.solve_rhs(&sys.rhs_state, &sys.rhs_adjoint);
    let (y, p) = sys.scatter(yi, pi);
    let residual = sys.residual(&y, &p);
    if residual > SOLVER_RESIDUAL {
        return Err(Error::Residual { residual, tol: SOLVER_RESIDUAL });
    }
    Ok((y, p))
}

/// Dense Gaussian-elimination fallback; intended for grids with `N <= 8`.
pub fn solve_coupled_dense(sys: &CoupledSystem) -> Result<(GridFunction, GridFunction)> {
    let lu = sys.dense_matrix().factor()?;
    let m = sys.region.interior_len();
    let mut b = Vec::with_capacity(2 * m);
    for k in 0..m {
        b.push(sys.rhs_state[k]);
        b.push(sys.rhs_adjoint[k]);
    }
    let x = lu.solve(&b);
    let y = x.iter().step_by(2).copied().collect();
    let p = x.iter().skip(1).step_by(2).copied().collect();
    Ok(sys.scatter(y, p))
}

/// `U_I = -P̃_I / α`, zero on the boundary.
pub fn recover_control(p: &GridFunction, alpha: f64) -> Result<GridFunction> {
    check_alpha(alpha)?;
    let grid = p.grid();
    let mut u = GridFunction::zeros(grid);
    for k in grid.interior_indices() {
        u.values_mut()[k] = -p.values()[k] / alpha;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_function, AnalyticTag, Decomposition, Grid, OverlapConvention};
    use std::f64::consts::PI;

    fn grid(dim: usize, n: usize) -> Grid {
        Grid::new(dim, n).unwrap()
    }

    #[test]
    fn elliptic_zero_data() {
        let g = grid(2, 6);
        let op = StencilOperator::laplacian(g);
        let z = GridFunction::zeros(g);
        let w = solve_elliptic(&op, &g.full_region(), &z, &z).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_dimensional_harmonic_is_linear() {
        let n = 10;
        let g = grid(1, n);
        let op = StencilOperator::laplacian(g);
        let mut bc = GridFunction::zeros(g);
        bc.set(n, 0, 1.0);
        let w = solve_elliptic(&op, &g.full_region(), &GridFunction::zeros(g), &bc).unwrap();
        for i in 0..=n {
            assert!((w.at(i, 0) - i as f64 / n as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn elliptic_on_subdomain_keeps_outside_values() {
        let g = grid(2, 8);
        let op = StencilOperator::new(g, 2.0).unwrap();
        let d = Decomposition::new(g, 1, OverlapConvention::ExtendBoth).unwrap();
        let data = sample_function(g, AnalyticTag::Random { seed: 9 });
        let rhs = sample_function(g, AnalyticTag::Random { seed: 10 });
        let w = solve_elliptic(&op, d.left.region(), &rhs, &data).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.coords(k);
            if !d.left.region().contains_interior(i, j) {
                assert_eq!(w.values()[k], data.values()[k]);
            }
        }
        assert!(elliptic_residual(&op, d.left.region(), &rhs, &w) < 1e-12);
    }

    #[test]
    fn coupled_zero_data_gives_zero() {
        let g = grid(2, 6);
        let op = StencilOperator::laplacian(g);
        let z = GridFunction::zeros(g);
        let sys = CoupledSystem::new(&op, 0.5, &g.full_region(), &z, &z, &z, &z).unwrap();
        let (y, p) = solve_coupled(&sys).unwrap();
        assert!(y.values().iter().chain(p.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn coupled_matches_dense_fallback() {
        for alpha in [1.0, 1e-2, 1e-6] {
            let g = grid(2, 8);
            let op = StencilOperator::laplacian(g);
            let d = Decomposition::new(g, 2, OverlapConvention::ExtendBoth).unwrap();
            let f = sample_function(g, AnalyticTag::SinSinSource);
            let yd = sample_function(g, AnalyticTag::SinSinTarget);
            let yb = sample_function(g, AnalyticTag::Random { seed: 1 });
            let pb = sample_function(g, AnalyticTag::Random { seed: 2 });
            let sys = CoupledSystem::new(&op, alpha, d.right.region(), &f, &yd, &yb, &pb).unwrap();
            let (y, p) = solve_coupled(&sys).unwrap();
            let (y2, p2) = solve_coupled_dense(&sys).unwrap();
            let scale = y2.max_abs().max(p2.max_abs());
            for k in 0..g.len() {
                assert!((y.values()[k] - y2.values()[k]).abs() <= 1e-12 * scale);
                assert!((p.values()[k] - p2.values()[k]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn benchmark_solution_is_close_to_continuous() {
        let g = grid(2, 32);
        let op = StencilOperator::laplacian(g);
        let f = sample_function(g, AnalyticTag::SinSinSource);
        let yd = sample_function(g, AnalyticTag::SinSinTarget);
        let z = GridFunction::zeros(g);
        let sys = CoupledSystem::new(&op, 1e-2, &g.full_region(), &f, &yd, &z, &z).unwrap();
        let (y, p) = solve_coupled(&sys).unwrap();
        let u = recover_control(&p, 1e-2).unwrap();
        // O(h²) discretization error around the continuous y = sin sin, p = u = 0
        assert!(y.sub(&yd).unwrap().max_abs() < 2e-3);
        assert!(u.max_abs() < 0.1 * PI * PI / 32.0);
    }

    #[test]
    fn recover_control_identities() {
        let g = grid(2, 4);
        let alpha = 0.25;
        let p = GridFunction::interior_constant(g, alpha);
        let u = recover_control(&p, alpha).unwrap();
        assert!(u.interior_values().all(|v| (v + 1.0).abs() < 1e-15));
        assert!(u.boundary_values().all(|v| v == 0.0));
        assert!(recover_control(&GridFunction::zeros(g), alpha).unwrap().max_abs() == 0.0);
        assert!(recover_control(&p, 0.0).is_err());
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let g = grid(2, 12);
        let op = StencilOperator::laplacian(g);
        let f = sample_function(g, AnalyticTag::Random { seed: 4 });
        let yd = sample_function(g, AnalyticTag::Random { seed: 5 });
        let z = GridFunction::zeros(g);
        let sys = CoupledSystem::new(&op, 1e-4, &g.full_region(), &f, &yd, &z, &z).unwrap();
        let a = solve_coupled(&sys).unwrap();
        let b = solve_coupled(&sys).unwrap();
        assert_eq!(a, b);
    }
}

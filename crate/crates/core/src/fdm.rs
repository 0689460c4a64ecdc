//! Three-point (1D) and five-point (2D) stencils for `-Δ_h + c I`.

use crate::error::{ensure_same_grid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Grid, GridFunction, Region, Subdomain};

/// `L_h z = -Δ_h z + c z` on nodal values. `c` is not scaled by `h²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilOperator {
    grid: Grid,
    shift: f64,
}

impl StencilOperator {
    pub fn new(grid: Grid, shift: f64) -> Result<Self> {
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift c must be >= 0, got {shift}")));
        }
        Ok(Self { grid, shift })
    }

    pub fn laplacian(grid: Grid) -> Self {
        Self { grid, shift: 0.0 }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `1 / h²`, the magnitude of every off-diagonal entry.
    pub fn coupling(&self) -> f64 {
        let n = self.grid.n() as f64;
        n * n
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.grid.dim() as f64 * self.coupling() + self.shift
    }

    /// Stencil value at an interior point `(i, j)` of the grid.
    #[inline]
    pub fn at(&self, z: &GridFunction, i: usize, j: usize) -> f64 {
        let inv_h2 = self.coupling();
        let centre = z.at(i, j);
        let mut nbr = z.at(i - 1, j) + z.at(i + 1, j);
        if self.grid.dim() == 2 {
            nbr += z.at(i, j - 1) + z.at(i, j + 1);
        }
        self.diagonal() * centre - inv_h2 * nbr
    }

    /// `L_h z` on every interior point of the domain; boundary entries are 0.
    pub fn apply(&self, z: &GridFunction) -> Result<GridFunction> {
        self.apply_on_region(z, &self.grid.full_region())
    }

    /// Same stencil restricted to a subdomain: the strip's boundary values
    /// (physical and artificial) enter as given data.
    pub fn apply_on_subdomain(&self, z: &GridFunction, sub: &Subdomain) -> Result<GridFunction> {
        self.apply_on_region(z, sub.region())
    }

    pub fn apply_on_region(&self, z: &GridFunction, region: &Region) -> Result<GridFunction> {
        ensure_same_grid(self.grid, z.grid())?;
        ensure_same_grid(self.grid, region.grid())?;
        let mut out = GridFunction::zeros(self.grid);
        for (i, j) in region.interior_points() {
            out.set(i, j, self.at(z, i, j));
        }
        Ok(out)
    }

    /// The interior matrix on `region` in solver order (boundary rows eliminated).
    pub fn interior_matrix(&self, region: &Region) -> DenseMatrix {
        let m = region.interior_len();
        let mut a = DenseMatrix::zeros(m, m);
        let inv_h2 = self.coupling();
        for (i, j) in region.interior_points() {
            let row = region.local_index(i, j);
            a.set(row, row, self.diagonal());
            for (ni, nj) in neighbours(self.grid, i, j) {
                if region.contains_interior(ni, nj) {
                    a.set(row, region.local_index(ni, nj), -inv_h2);
                }
            }
        }
        a
    }
}

/// Stencil neighbours of an interior point.
pub(crate) fn neighbours(grid: Grid, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    let two_d = grid.dim() == 2;
    [(i - 1, j), (i + 1, j)]
        .into_iter()
        .chain(two_d.then(|| [(i, j - 1), (i, j + 1)]).into_iter().flatten())
}

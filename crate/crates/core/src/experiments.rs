//! The experiment grid: one independent run per `(kind, α, δ)` cell.

use crate::error::Result;
use crate::metrics::{extract_rates, ConvergenceRecord, MeritNorm};
use crate::model::{Decomposition, Grid, InitPolicy, OverlapConvention, ProblemKind, ProblemSpec};
use crate::schwarz::run;

pub const DEFAULT_N: usize = 64;
pub const DEFAULT_ALPHAS: [f64; 3] = [1e-2, 1e-4, 1e-6];
pub const DEFAULT_DELTAS: [usize; 4] = [1, 2, 3, 4];
pub const TABLE2_ALPHA: f64 = 1e-6;

/// Settings shared by every cell of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSettings {
    pub dim: usize,
    pub n: usize,
    pub convention: OverlapConvention,
    pub init: InitPolicy,
    pub tol: f64,
    pub max_sweeps: usize,
    pub norm: MeritNorm,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            dim: 2,
            n: DEFAULT_N,
            convention: OverlapConvention::ExtendBoth,
            init: InitPolicy::Ones,
            tol: 0.0,
            max_sweeps: 5,
            norm: MeritNorm::Split,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kind: ProblemKind,
    /// Ignored for [`ProblemKind::Elliptic`].
    pub alpha: f64,
    pub delta: usize,
}

/// The Laplace column plus one control-problem column per α.
pub fn table1_cells(alphas: &[f64], deltas: &[usize]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &delta in deltas {
        cells.push(Cell { kind: ProblemKind::Elliptic, alpha: 1.0, delta });
        for &alpha in alphas {
            cells.push(Cell { kind: ProblemKind::Ocp, alpha, delta });
        }
    }
    cells
}

pub fn table2_cells(alpha: f64, deltas: &[usize]) -> Vec<Cell> {
    deltas.iter().map(|&delta| Cell { kind: ProblemKind::AlphaElliptic, alpha, delta }).collect()
}

pub fn build_spec(settings: &SuiteSettings, cell: &Cell) -> Result<ProblemSpec> {
    let grid = Grid::new(settings.dim, settings.n)?;
    let d = Decomposition::new(grid, cell.delta, settings.convention)?;
    Ok(ProblemSpec::benchmark(cell.kind, cell.alpha, d)?
        .with_init(settings.init)
        .with_tol(settings.tol)
        .with_max_sweeps(settings.max_sweeps))
}

pub fn run_cell(settings: &SuiteSettings, cell: &Cell) -> Result<ConvergenceRecord> {
    let spec = build_spec(settings, cell)?;
    Ok(extract_rates(&run(&spec)?, settings.norm))
}

fn sorted(mut records: Vec<ConvergenceRecord>) -> Vec<ConvergenceRecord> {
    records.sort_by_key(ConvergenceRecord::sort_key);
    records
}

pub fn run_cells_sequential(settings: &SuiteSettings, cells: &[Cell]) -> Result<Vec<ConvergenceRecord>> {
    let records = cells.iter().map(|c| run_cell(settings, c)).collect::<Result<Vec<_>>>()?;
    Ok(sorted(records))
}

/// Runs cells on a dedicated pool of `jobs` threads (0 means rayon's default).
#[cfg(feature = "parallel")]
pub fn run_cells_parallel(
    settings: &SuiteSettings,
    cells: &[Cell],
    jobs: usize,
) -> Result<Vec<ConvergenceRecord>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    let records =
        pool.install(|| cells.par_iter().map(|c| run_cell(settings, c)).collect::<Result<Vec<_>>>())?;
    Ok(sorted(records))
}

/// Sequential for `jobs == 1` or without the `parallel` feature.
pub fn run_cells(settings: &SuiteSettings, cells: &[Cell], jobs: usize) -> Result<Vec<ConvergenceRecord>> {
    #[cfg(feature = "parallel")]
    if jobs != 1 {
        return run_cells_parallel(settings, cells, jobs);
    }
    let _ = jobs;
    run_cells_sequential(settings, cells)
}

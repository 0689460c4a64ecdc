//! Randomized property checks: the coupled-solve lemma, the discrete maximum
//! principle, merit domination, direct-solver accuracy, and the half-step
//! invariants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fdm::StencilOperator;
use crate::metrics::{check_lemma_inequality, check_max_principle, tolerances};
use crate::model::{
    alpha_shift, Decomposition, Grid, GridFunction, InitPolicy, OverlapConvention, ProblemKind, ProblemSpec,
    Region,
};
use crate::saddle::{solve_coupled, solve_coupled_dense, solve_elliptic, CoupledFactor, CoupledSystem};
use crate::schwarz::{run_domination_pair, Mode, Schwarz, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub sizes: Vec<usize>,
    pub seeds: usize,
    pub base_seed: u64,
    pub alphas: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { sizes: vec![4, 8, 16], seeds: 20, base_seed: 0, alphas: vec![1.0, 1e-2, 1e-4, 1e-6] }
    }
}

/// Cases run and failures seen by one checker.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: Vec::new() }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(describe());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.cases > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(CheckOutcome::passed)
    }

    pub fn outcome(&self, name: &str) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let status = if o.passed() { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {:<14} {} cases, {} failures\n", o.name, o.cases, o.failures.len()));
            for f in o.failures.iter().take(5) {
                out.push_str(&format!("    {f}\n"));
            }
        }
        out
    }
}

/// One random case: a grid size, a seed and an RNG derived from both.
struct Case {
    n: usize,
    seed: u64,
    rng: ChaCha8Rng,
}

fn cases(opts: &VerifyOptions, salt: u64) -> impl Iterator<Item = Case> + '_ {
    opts.sizes.iter().flat_map(move |&n| {
        (0..opts.seeds as u64).map(move |s| {
            let seed = opts.base_seed.wrapping_add(s);
            let mix = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((n as u64) << 40) ^ salt;
            Case { n, seed, rng: ChaCha8Rng::seed_from_u64(mix) }
        })
    })
}

/// Uniform `[-1, 1)` at interior points, zero on the physical boundary.
fn signed_field(grid: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
    let values = (0..grid.len()).map(|k| if grid.is_boundary(k) { 0.0 } else { rng.gen_range(-1.0..1.0) });
    GridFunction::from_values(grid, values.collect()).expect("length matches")
}

fn pick<T: Copy>(items: &[T], rng: &mut ChaCha8Rng) -> T {
    items[rng.gen_range(0..items.len())]
}

/// A random strip of the grid: the whole domain or one side of a
/// decomposition with random overlap.
fn random_region(grid: Grid, rng: &mut ChaCha8Rng) -> Region {
    let max_delta = grid.n() / 2 - 1;
    match rng.gen_range(0..3) {
        0 => grid.full_region(),
        side => {
            let delta = rng.gen_range(1..=max_delta);
            let d = Decomposition::new(grid, delta, OverlapConvention::ExtendBoth).expect("delta in range");
            if side == 1 {
                *d.left.region()
            } else {
                *d.right.region()
            }
        }
    }
}

fn dim_for(rng: &mut ChaCha8Rng) -> usize {
    if rng.gen_bool(0.75) {
        2
    } else {
        1
    }
}

/// Homogeneous coupled subdomain solves with random Dirichlet data satisfy
/// `L_h(Y² + α⁻¹P̃²) <= 0`.
fn check_lemma(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("lemma");
    for mut c in cases(opts, 1) {
        let grid = Grid::new(dim_for(&mut c.rng), c.n)?;
        let alpha = pick(&opts.alphas, &mut c.rng);
        let region = random_region(grid, &mut c.rng);
        let op = StencilOperator::laplacian(grid);
        let mut y = signed_field(grid, &mut c.rng);
        let mut p = signed_field(grid, &mut c.rng);
        CoupledFactor::new(&op, alpha, &region)?.solve_into(None, &mut y, &mut p)?;
        let verdict = check_lemma_inequality(&op, &y, &p, 1.0 / alpha, &region)?;
        out.record(verdict.is_pass(), || format!("N={} seed={} alpha={alpha:e}: {verdict:?}", c.n, c.seed));
    }
    Ok(out)
}

/// Solutions of `L_h Z = f` with sign-definite `f` obey the maximum principle.
fn check_max_principle_cases(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("max-principle");
    for mut c in cases(opts, 2) {
        let grid = Grid::new(dim_for(&mut c.rng), c.n)?;
        let shift = if c.rng.gen_bool(0.5) { 0.0 } else { alpha_shift(pick(&opts.alphas, &mut c.rng))? };
        let op = StencilOperator::new(grid, shift)?;
        let region = random_region(grid, &mut c.rng);
        let sign = if c.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let rhs = signed_field(grid, &mut c.rng).map(|v| sign * v.abs());
        let boundary = signed_field(grid, &mut c.rng);
        let z = solve_elliptic(&op, &region, &rhs, &boundary)?;
        let verdict = check_max_principle(&op, &z, &region)?;
        out.record(verdict.is_pass(), || format!("N={} seed={} c={shift:e}: {verdict:?}", c.n, c.seed));
    }
    Ok(out)
}

/// The control-problem merit stays below the elliptic majorant at every half-step.
fn check_domination(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("domination");
    for mut c in cases(opts, 3) {
        let grid = Grid::new(2, c.n)?;
        let alpha = pick(&opts.alphas, &mut c.rng);
        let delta = c.rng.gen_range(1..=c.n / 2 - 1);
        let d = Decomposition::new(grid, delta, OverlapConvention::ExtendBoth)?;
        let spec = ProblemSpec::benchmark(ProblemKind::Ocp, alpha, d)?
            .with_init(InitPolicy::Random { seed: c.seed })
            .with_max_sweeps(4);
        let pair = run_domination_pair(&spec)?;
        out.record(pair.holds(tolerances::DOMINATION_SLACK), || {
            format!("N={} seed={} alpha={alpha:e} delta={delta}: excess {:e}", c.n, c.seed, pair.max_excess())
        });
    }
    Ok(out)
}

/// Banded solves meet the residual bound and agree with dense elimination.
/// Grids are capped at `N = 8` to keep the dense oracle cheap.
fn check_solver(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("solver");
    for mut c in cases(opts, 4) {
        c.n = c.n.min(8);
        let grid = Grid::new(dim_for(&mut c.rng), c.n)?;
        let alpha = pick(&opts.alphas, &mut c.rng);
        let op = StencilOperator::laplacian(grid);
        let region = random_region(grid, &mut c.rng);
        let f = signed_field(grid, &mut c.rng);
        let y_d = signed_field(grid, &mut c.rng);
        let yb = signed_field(grid, &mut c.rng);
        let pb = signed_field(grid, &mut c.rng);
        let sys = CoupledSystem::new(&op, alpha, &region, &f, &y_d, &yb, &pb)?;
        // solve_coupled enforces the residual bound itself
        let banded = solve_coupled(&sys);
        let dense = solve_coupled_dense(&sys)?;
        let (ok, detail) = match banded {
            Ok((y, p)) => {
                let scale = y.max_abs().max(p.max_abs()).max(1.0);
                let diff = y.sub(&dense.0)?.max_abs().max(p.sub(&dense.1)?.max_abs());
                (diff <= 1e-12 * scale, format!("dense disagreement {diff:e}"))
            }
            Err(e) => (false, e.to_string()),
        };
        out.record(ok, || format!("N={} seed={} alpha={alpha:e}: {detail}", c.n, c.seed));
    }
    Ok(out)
}

/// Half-steps leave values outside the strip untouched and fix the exact solution.
fn check_half_step_invariants(opts: &VerifyOptions) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut locality = CheckOutcome::new("locality");
    let mut fixed = CheckOutcome::new("fixed-point");
    for mut c in cases(opts, 5) {
        let grid = Grid::new(dim_for(&mut c.rng), c.n)?;
        let alpha = pick(&opts.alphas, &mut c.rng);
        let kind = pick(&[ProblemKind::Ocp, ProblemKind::Elliptic, ProblemKind::AlphaElliptic], &mut c.rng);
        let delta = c.rng.gen_range(1..=c.n / 2 - 1);
        let d = Decomposition::new(grid, delta, OverlapConvention::ExtendBoth)?;
        let f = signed_field(grid, &mut c.rng);
        let y_d = signed_field(grid, &mut c.rng);
        let spec = ProblemSpec::benchmark(kind, alpha, d)?
            .with_data(f, y_d)?
            .with_init(InitPolicy::Random { seed: c.seed });
        let driver = Schwarz::new(&spec, Mode::Iterate)?;
        let side = if c.rng.gen_bool(0.5) { Side::Left } else { Side::Right };
        let region = match side {
            Side::Left => *spec.decomposition.left.region(),
            Side::Right => *spec.decomposition.right.region(),
        };

        let start = driver.initial_state();
        let next = driver.half_step(&start, side)?;
        let untouched = |a: &GridFunction, b: &GridFunction| {
            (0..grid.len()).all(|k| {
                let (i, j) = grid.coords(k);
                region.contains_interior(i, j) || a.values()[k].to_bits() == b.values()[k].to_bits()
            })
        };
        let p_ok = match (&start.p, &next.p) {
            (Some(a), Some(b)) => untouched(a, b),
            _ => true,
        };
        locality.record(untouched(&start.y, &next.y) && p_ok, || {
            format!("N={} seed={} kind={kind} side={side:?}", c.n, c.seed)
        });

        let exact = driver.exact_solution();
        let again = driver.half_step(exact, side)?;
        let scale = exact.y.max_abs().max(exact.p.as_ref().map_or(0.0, GridFunction::max_abs)).max(1.0);
        let mut diff = again.y.sub(&exact.y)?.max_abs();
        if let (Some(a), Some(b)) = (&again.p, &exact.p) {
            diff = diff.max(a.sub(b)?.max_abs());
        }
        fixed.record(diff <= tolerances::FIXED_POINT * scale, || {
            format!("N={} seed={} kind={kind}: moved by {diff:e}", c.n, c.seed)
        });
    }
    Ok((locality, fixed))
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let (locality, fixed) = check_half_step_invariants(opts)?;
    Ok(VerifyReport {
        outcomes: vec![
            check_lemma(opts)?,
            check_max_principle_cases(opts)?,
            check_domination(opts)?,
            check_solver(opts)?,
            locality,
            fixed,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_verify(&VerifyOptions::default()).unwrap();
        assert!(report.passed(), "{}", report.summary());
        assert_eq!(report.outcome("lemma").unwrap().cases, 60);
        assert_eq!(report.outcome("solver").unwrap().cases, 60);
    }

    #[test]
    fn same_seed_same_report() {
        let opts = VerifyOptions { sizes: vec![4, 8], seeds: 3, base_seed: 7, ..VerifyOptions::default() };
        assert_eq!(run_verify(&opts).unwrap(), run_verify(&opts).unwrap());
    }

    #[test]
    fn empty_outcome_is_not_a_pass() {
        assert!(!CheckOutcome::new("x").passed());
    }
}

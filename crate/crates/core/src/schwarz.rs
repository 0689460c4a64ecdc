//! Alternating Schwarz sweeps for the coupled optimality system and for the
//! reference elliptic equations.
//!
//! A sweep is one left half-step followed by one right half-step. Each
//! half-step solves the subdomain problem with Dirichlet data taken from the
//! current iterate and leaves every value outside the subdomain interior
//! untouched.

use crate::error::{Error, Result};
use crate::fdm::StencilOperator;
use crate::metrics::{state_merit, state_merit_vector, MeritNorm};
use crate::model::{GridFunction, ProblemKind, ProblemSpec, Subdomain};
use crate::saddle::{solve_coupled, solve_elliptic, CoupledFactor, CoupledSystem, EllipticFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// What the stored states hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// States are errors `exact - iterate`, advanced with homogeneous data.
    #[default]
    ErrorPropagation,
    /// States are the iterates themselves, advanced with the problem data.
    Iterate,
}

/// `(Y, P̃)` for the optimal control problem, or a single `W` (stored in `y`)
/// for the elliptic kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub kind: ProblemKind,
    pub y: GridFunction,
    pub p: Option<GridFunction>,
    /// Completed full sweeps.
    pub sweep_index: usize,
    /// Subdomain updated last; `None` for the initial state.
    pub half_step: Option<Side>,
}

impl IterateState {
    pub fn new(kind: ProblemKind, y: GridFunction, p: Option<GridFunction>) -> Self {
        Self { kind, y, p, sweep_index: 0, half_step: None }
    }

    fn minus(&self, other: &Self) -> Result<(GridFunction, Option<GridFunction>)> {
        let y = self.y.sub(&other.y)?;
        let p = match (&self.p, &other.p) {
            (Some(a), Some(b)) => Some(a.sub(b)?),
            _ => None,
        };
        Ok((y, p))
    }
}

#[derive(Debug, Clone)]
enum SubSolver {
    Elliptic(EllipticFactor),
    Coupled(CoupledFactor),
}

impl SubSolver {
    fn new(spec: &ProblemSpec, op: &StencilOperator, sub: &Subdomain) -> Result<Self> {
        Ok(match spec.kind {
            ProblemKind::Ocp => Self::Coupled(CoupledFactor::new(op, spec.alpha, sub.region())?),
            _ => Self::Elliptic(EllipticFactor::new(op, sub.region())?),
        })
    }

    fn update(&self, spec: &ProblemSpec, mode: Mode, state: &mut IterateState) -> Result<()> {
        let with_data = mode == Mode::Iterate;
        match self {
            Self::Elliptic(factor) => factor.solve_into(with_data.then_some(&spec.f), &mut state.y),
            Self::Coupled(factor) => {
                let p = state
                    .p
                    .as_mut()
                    .ok_or_else(|| Error::InvalidParameter("optimal control state is missing P".into()))?;
                factor.solve_into(with_data.then_some((&spec.f, &spec.y_d)), &mut state.y, p)
            }
        }
    }
}

/// Exact discrete solution of the global problem.
pub fn exact_solution(spec: &ProblemSpec) -> Result<IterateState> {
    let op = StencilOperator::new(spec.grid, spec.shift_c)?;
    let zero = GridFunction::zeros(spec.grid);
    let region = spec.grid.full_region();
    Ok(match spec.kind {
        ProblemKind::Ocp => {
            let sys = CoupledSystem::new(&op, spec.alpha, &region, &spec.f, &spec.y_d, &zero, &zero)?;
            let (y, p) = solve_coupled(&sys)?;
            IterateState::new(spec.kind, y, Some(p))
        }
        _ => IterateState::new(spec.kind, solve_elliptic(&op, &region, &spec.f, &zero)?, None),
    })
}

/// A spec with both subdomain factorizations and the exact solution cached.
/// Immutable after construction, so it can be shared across threads.
#[derive(Debug, Clone)]
pub struct Schwarz {
    spec: ProblemSpec,
    mode: Mode,
    left: SubSolver,
    right: SubSolver,
    exact: IterateState,
}

impl Schwarz {
    pub fn new(spec: &ProblemSpec, mode: Mode) -> Result<Self> {
        spec.validate()?;
        let op = StencilOperator::new(spec.grid, spec.shift_c)?;
        let d = &spec.decomposition;
        Ok(Self {
            left: SubSolver::new(spec, &op, &d.left)?,
            right: SubSolver::new(spec, &op, &d.right)?,
            exact: exact_solution(spec)?,
            spec: spec.clone(),
            mode,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn exact_solution(&self) -> &IterateState {
        &self.exact
    }

    /// The initial iterate from the init policy, or its error in error mode.
    pub fn initial_state(&self) -> IterateState {
        let grid = self.spec.grid;
        let y0 = self.spec.init.sample(grid, 0);
        let p0 = (self.spec.kind == ProblemKind::Ocp).then(|| self.spec.init.sample(grid, 1));
        let iterate = IterateState::new(self.spec.kind, y0, p0);
        match self.mode {
            Mode::Iterate => iterate,
            Mode::ErrorPropagation => {
                let (y, p) = self.exact.minus(&iterate).expect("same grid");
                IterateState::new(self.spec.kind, y, p)
            }
        }
    }

    pub fn half_step(&self, state: &IterateState, side: Side) -> Result<IterateState> {
        let mut next = state.clone();
        let solver = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        };
        solver.update(&self.spec, self.mode, &mut next)?;
        next.half_step = Some(side);
        if side == Side::Right {
            next.sweep_index += 1;
        }
        Ok(next)
    }

    /// Error fields of a state in this driver's mode.
    pub fn error_of(&self, state: &IterateState) -> (GridFunction, Option<GridFunction>) {
        match self.mode {
            Mode::ErrorPropagation => (state.y.clone(), state.p.clone()),
            Mode::Iterate => self.exact.minus(state).expect("same grid"),
        }
    }

    fn merit(&self, state: &IterateState) -> f64 {
        let (y, p) = self.error_of(state);
        state_merit(self.spec.kind, &y, p.as_ref(), self.spec.alpha, MeritNorm::Split)
    }

    pub fn run(&self) -> Result<SweepHistory> {
        self.run_from(self.initial_state())
    }

    /// Sweeps from an explicit starting state until the merit drops to `tol`
    /// or `max_sweeps` is reached.
    pub fn run_from(&self, initial: IterateState) -> Result<SweepHistory> {
        let mut converged = self.merit(&initial) <= self.spec.tol;
        let mut states = vec![initial];
        if !converged {
            for _ in 0..self.spec.max_sweeps {
                let left = self.half_step(states.last().expect("non-empty"), Side::Left)?;
                let right = self.half_step(&left, Side::Right)?;
                states.push(left);
                converged = self.merit(&right) <= self.spec.tol;
                states.push(right);
                if converged {
                    break;
                }
            }
        }
        Ok(SweepHistory {
            spec: self.spec.clone(),
            mode: self.mode,
            states,
            exact: self.exact.clone(),
            converged,
        })
    }
}

/// Every half-step of one run; `states[0]` is the initial state.
#[derive(Debug, Clone)]
pub struct SweepHistory {
    spec: ProblemSpec,
    mode: Mode,
    states: Vec<IterateState>,
    exact: IterateState,
    converged: bool,
}

impl SweepHistory {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn states(&self) -> &[IterateState] {
        &self.states
    }

    pub fn exact(&self) -> &IterateState {
        &self.exact
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn full_sweeps(&self) -> usize {
        (self.states.len() - 1) / 2
    }

    /// Error fields after half-step `j` (`j = 2k` closes sweep `k`).
    pub fn error_at(&self, j: usize) -> (GridFunction, Option<GridFunction>) {
        let s = &self.states[j];
        match self.mode {
            Mode::ErrorPropagation => (s.y.clone(), s.p.clone()),
            Mode::Iterate => self.exact.minus(s).expect("same grid"),
        }
    }

    /// Pointwise merit vector after half-step `j`.
    pub fn merit_vector_at(&self, j: usize) -> GridFunction {
        let (y, p) = self.error_at(j);
        state_merit_vector(&y, p.as_ref(), self.spec.alpha)
    }
}

/// One half-step without a cached driver. `sub` must be one of the spec's strips.
pub fn half_step(
    state: &IterateState,
    sub: &Subdomain,
    spec: &ProblemSpec,
    mode: Mode,
) -> Result<IterateState> {
    let d = &spec.decomposition;
    let side = if *sub == d.left {
        Side::Left
    } else if *sub == d.right {
        Side::Right
    } else {
        return Err(Error::InvalidDecomposition("subdomain is not part of the spec's decomposition".into()));
    };
    let op = StencilOperator::new(spec.grid, spec.shift_c)?;
    let mut next = state.clone();
    SubSolver::new(spec, &op, sub)?.update(spec, mode, &mut next)?;
    next.half_step = Some(side);
    if side == Side::Right {
        next.sweep_index += 1;
    }
    Ok(next)
}

/// Error-propagation run of a spec.
pub fn run(spec: &ProblemSpec) -> Result<SweepHistory> {
    Schwarz::new(spec, Mode::ErrorPropagation)?.run()
}

/// An optimal control run together with the elliptic run started from the
/// merit vector of its initial error.
#[derive(Debug, Clone)]
pub struct DominationPair {
    pub ocp: SweepHistory,
    pub elliptic: SweepHistory,
}

impl DominationPair {
    /// `max_j max_x (E^(j) - Ξ^(j))`; non-positive when the merit is dominated.
    pub fn max_excess(&self) -> f64 {
        let steps = self.ocp.states().len().min(self.elliptic.states().len());
        (0..steps)
            .flat_map(|j| {
                let e = self.ocp.merit_vector_at(j);
                let xi = self.elliptic.states()[j].y.clone();
                e.values().iter().zip(xi.values()).map(|(a, b)| a - b).collect::<Vec<_>>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E^(j) <= Ξ^(j) + slack·max(1, ‖Ξ⁰‖)` at every recorded half-step.
    pub fn holds(&self, slack: f64) -> bool {
        let scale = self.elliptic.states()[0].y.max_abs().max(1.0);
        self.max_excess() <= slack * scale
    }
}

pub fn run_domination_pair(spec_ocp: &ProblemSpec) -> Result<DominationPair> {
    if spec_ocp.kind != ProblemKind::Ocp {
        return Err(Error::InvalidParameter("domination pair needs an optimal control spec".into()));
    }
    let ocp_driver = Schwarz::new(spec_ocp, Mode::ErrorPropagation)?;
    let ocp = ocp_driver.run()?;

    let mut companion = spec_ocp.clone();
    companion.kind = ProblemKind::Elliptic;
    companion.f = GridFunction::zeros(spec_ocp.grid);
    companion.y_d = GridFunction::zeros(spec_ocp.grid);
    companion.tol = 0.0;
    companion.max_sweeps = ocp.full_sweeps();
    let xi0 = ocp.merit_vector_at(0);
    let elliptic = Schwarz::new(&companion, Mode::ErrorPropagation)?
        .run_from(IterateState::new(ProblemKind::Elliptic, xi0, None))?;
    Ok(DominationPair { ocp, elliptic })
}

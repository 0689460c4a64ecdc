//! Merit vectors, norms, rate extraction and the maximum-principle / lemma checkers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_grid, Error, Result};
use crate::fdm::StencilOperator;
use crate::model::{GridFunction, ProblemKind, Region};
use crate::schwarz::SweepHistory;

/// Fixed numerical tolerances. They reflect direct-solver accuracy, not theory.
pub mod tolerances {
    /// Relative max-norm residual accepted from a direct solve.
    pub const SOLVER_RESIDUAL: f64 = 1e-10;
    /// Sign tolerance on `L_h Z` when deciding whether the maximum principle applies.
    pub const SIGN_SLACK: f64 = 1e-12;
    /// Slack on the extremum bound of the maximum principle.
    pub const MAX_PRINCIPLE_SLACK: f64 = 1e-10;
    /// Relative tolerance on the coupled hypothesis of the lemma checker.
    pub const LEMMA_HYPOTHESIS: f64 = 1e-9;
    /// Slack on `L_h(Ψ² + βΦ²) <= 0`.
    pub const LEMMA_SLACK: f64 = 1e-8;
    /// Componentwise slack for merit domination `E <= Ξ`.
    pub const DOMINATION_SLACK: f64 = 1e-9;
    /// Fixed-point tolerance of a half-step applied to the exact solution.
    pub const FIXED_POINT: f64 = 1e-10;
}

/// How the merit of an `(E_y, E_p̃)` pair is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MeritNorm {
    /// `‖E_y‖∞² + α⁻¹‖E_p̃‖∞²`, the convention of the reported tables.
    #[default]
    Split,
    /// `‖E_y² + α⁻¹E_p̃²‖∞`, the max of the componentwise merit vector.
    Pointwise,
}

impl fmt::Display for MeritNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Split => "split",
            Self::Pointwise => "pointwise",
        })
    }
}

impl FromStr for MeritNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Self::Split),
            "pointwise" => Ok(Self::Pointwise),
            other => Err(Error::InvalidParameter(format!("unknown merit norm `{other}`"))),
        }
    }
}

/// Componentwise `E_y² + α⁻¹ E_p̃²`.
pub fn merit_vector(e_y: &GridFunction, e_p: &GridFunction, alpha: f64) -> Result<GridFunction> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let inv_alpha = 1.0 / alpha;
    e_y.zip_with(e_p, |y, p| y * y + inv_alpha * p * p)
}

pub fn max_norm(z: &GridFunction) -> f64 {
    z.max_abs()
}

/// `h^dim · Σ E` over all grid points.
pub fn discrete_l2_merit(e: &GridFunction) -> f64 {
    let g = e.grid();
    g.h().powi(g.dim() as i32) * e.values().iter().sum::<f64>()
}

/// Merit of an error state: the plain max error for elliptic kinds, the
/// chosen merit norm for the optimal control problem.
pub fn state_merit(
    kind: ProblemKind,
    e_y: &GridFunction,
    e_p: Option<&GridFunction>,
    alpha: f64,
    norm: MeritNorm,
) -> f64 {
    match (kind, e_p) {
        (ProblemKind::Ocp, Some(e_p)) => match norm {
            MeritNorm::Split => {
                let y = e_y.max_abs();
                let p = e_p.max_abs();
                y * y + p * p / alpha
            }
            MeritNorm::Pointwise => {
                max_norm(&merit_vector(e_y, e_p, alpha).expect("error fields share a grid"))
            }
        },
        _ => e_y.max_abs(),
    }
}

/// Pointwise merit field of an error state (`W²` for elliptic kinds).
pub fn state_merit_vector(e_y: &GridFunction, e_p: Option<&GridFunction>, alpha: f64) -> GridFunction {
    match e_p {
        Some(e_p) => merit_vector(e_y, e_p, alpha).expect("error fields share a grid"),
        None => e_y.map(|v| v * v),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub merit_max: f64,
    /// `merit_max[k] / merit_max[k-1]`, absent for the first sweep.
    pub rate: Option<f64>,
    /// Weighted sum of the pointwise merit vector.
    pub l2_merit: f64,
}

/// Per-sweep merits and rates of one run, with enough metadata to re-run it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub kind: ProblemKind,
    pub alpha: f64,
    pub delta: usize,
    pub n: usize,
    pub dim: usize,
    pub shift_c: f64,
    pub overlap: usize,
    pub convention: String,
    pub init: String,
    pub tol: f64,
    pub max_sweeps: usize,
    pub norm: MeritNorm,
    pub entries: Vec<SweepEntry>,
    pub converged: bool,
}

impl ConvergenceRecord {
    pub fn entry(&self, k: usize) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    pub fn last_rate(&self) -> Option<f64> {
        self.entries.last().and_then(|e| e.rate)
    }

    /// Ordering key `(kind, α, δ)` used to sort suite output.
    pub fn sort_key(&self) -> (ProblemKind, u64, usize) {
        // reversed α so larger α comes first, matching the table layout
        (self.kind, u64::MAX - self.alpha.to_bits(), self.delta)
    }
}

/// Merit after every full sweep (left then right) and successive ratios.
pub fn extract_rates(history: &SweepHistory, norm: MeritNorm) -> ConvergenceRecord {
    let spec = history.spec();
    let mut entries: Vec<SweepEntry> = Vec::new();
    for k in 1..=history.full_sweeps() {
        let (e_y, e_p) = history.error_at(2 * k);
        let merit = state_merit(spec.kind, &e_y, e_p.as_ref(), spec.alpha, norm);
        let l2 = discrete_l2_merit(&state_merit_vector(&e_y, e_p.as_ref(), spec.alpha));
        let rate = entries.last().map(|prev| merit / prev.merit_max);
        entries.push(SweepEntry { k, merit_max: merit, rate, l2_merit: l2 });
    }
    let d = &spec.decomposition;
    ConvergenceRecord {
        kind: spec.kind,
        alpha: if spec.kind == ProblemKind::Elliptic { 0.0 } else { spec.alpha },
        delta: d.delta,
        n: spec.grid.n(),
        dim: spec.grid.dim(),
        shift_c: spec.shift_c,
        overlap: d.overlap(),
        convention: d.convention.map_or_else(|| "explicit".to_string(), |c| c.to_string()),
        init: spec.init.to_string(),
        tol: spec.tol,
        max_sweeps: spec.max_sweeps,
        norm,
        entries,
        converged: history.converged(),
    }
}

/// Location and size of the worst offending point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Pass,
    /// The checker's premise does not hold; nothing is asserted.
    HypothesisNotSatisfied(Witness),
    /// Premise holds but the conclusion fails.
    Violated(Witness),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Self::Pass)
    }
}

/// Discrete maximum principle on `region`: if `L_h Z <= 0` on the interior
/// then `max Z <= max(0, max over the region boundary)`; if `L_h Z >= 0` the
/// symmetric bound holds for the minimum.
pub fn check_max_principle(op: &StencilOperator, z: &GridFunction, region: &Region) -> Result<Verdict> {
    use tolerances::{MAX_PRINCIPLE_SLACK, SIGN_SLACK};
    ensure_same_grid(op.grid(), z.grid())?;
    let g = op.grid();
    let lz: Vec<(usize, f64)> =
        region.interior_points().map(|(i, j)| (g.index(i, j), op.at(z, i, j))).collect();
    let scale = op.diagonal() * z.max_abs();
    let sign_tol = SIGN_SLACK * scale.max(1.0);

    let sub = lz.iter().all(|&(_, v)| v <= sign_tol);
    let sup = lz.iter().all(|&(_, v)| v >= -sign_tol);
    if !sub && !sup {
        let (index, magnitude) = lz
            .iter()
            .copied()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("region has interior points");
        return Ok(Verdict::HypothesisNotSatisfied(Witness { index, magnitude }));
    }

    let boundary: Vec<f64> = (0..g.len())
        .filter(|&k| {
            let (i, j) = g.coords(k);
            region.contains(i, j) && !region.contains_interior(i, j)
        })
        .map(|k| z.values()[k])
        .collect();
    let bound_tol = MAX_PRINCIPLE_SLACK * z.max_abs().max(1.0);
    let interior = lz.iter().map(|&(k, _)| (k, z.values()[k]));

    if sub {
        let cap = boundary.iter().copied().fold(0.0, f64::max);
        if let Some((index, v)) = interior.clone().find(|&(_, v)| v > cap + bound_tol) {
            return Ok(Verdict::Violated(Witness { index, magnitude: v - cap }));
        }
    }
    if sup {
        let floor = boundary.iter().copied().fold(0.0, f64::min);
        if let Some((index, v)) = interior.clone().find(|&(_, v)| v < floor - bound_tol) {
            return Ok(Verdict::Violated(Witness { index, magnitude: floor - v }));
        }
    }
    Ok(Verdict::Pass)
}

/// Checks `L_h(Ψ² + βΦ²) <= 0` on the interior of `region`, provided the
/// coupled hypothesis `L_h Ψ = -βΦ`, `L_h Φ = Ψ` holds there.
pub fn check_lemma_inequality(
    op: &StencilOperator,
    psi: &GridFunction,
    phi: &GridFunction,
    beta: f64,
    region: &Region,
) -> Result<Verdict> {
    use tolerances::{LEMMA_HYPOTHESIS, LEMMA_SLACK};
    ensure_same_grid(op.grid(), psi.grid())?;
    ensure_same_grid(op.grid(), phi.grid())?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    let g = op.grid();

    let hyp_scale = op.diagonal() * psi.max_abs().max(phi.max_abs()) * (1.0 + beta);
    let hyp_tol = LEMMA_HYPOTHESIS * hyp_scale.max(f64::MIN_POSITIVE);
    let mut worst_hyp = Witness { index: 0, magnitude: 0.0 };
    for (i, j) in region.interior_points() {
        let r1 = (op.at(psi, i, j) + beta * phi.at(i, j)).abs();
        let r2 = (op.at(phi, i, j) - psi.at(i, j)).abs();
        let r = r1.max(r2);
        if r > worst_hyp.magnitude {
            worst_hyp = Witness { index: g.index(i, j), magnitude: r };
        }
    }
    if worst_hyp.magnitude > hyp_tol {
        return Ok(Verdict::HypothesisNotSatisfied(worst_hyp));
    }

    let merit = psi.zip_with(phi, |a, b| a * a + beta * b * b)?;
    let tol = LEMMA_SLACK * (op.diagonal() * merit.max_abs()).max(1.0);
    let mut worst = Witness { index: 0, magnitude: f64::NEG_INFINITY };
    for (i, j) in region.interior_points() {
        let v = op.at(&merit, i, j);
        if v > worst.magnitude {
            worst = Witness { index: g.index(i, j), magnitude: v };
        }
    }
    Ok(if worst.magnitude > tol { Verdict::Violated(worst) } else { Verdict::Pass })
}

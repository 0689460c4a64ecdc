//! Grids, grid functions, strip decompositions and problem descriptions.
//!
//! Points are stored lexicographically with `x` fastest: the 2D point
//! `(i, j)` lives at `j * (N + 1) + i`. A 1D grid uses `j = 0` throughout.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_same_grid, Error, Result};

/// Uniform grid on the unit interval or unit square with `N` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "N must be at least 2 to have an interior point, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Points per side, `N + 1`.
    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interior_count(&self) -> usize {
        (self.n - 1).pow(self.dim as u32)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j <= self.n && (self.dim == 2 || j == 0));
        j * self.side() + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.side(), idx / self.side())
    }

    /// Physical coordinates of a grid point.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        (i as f64 * self.h(), j as f64 * self.h())
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        let on_x = i == 0 || i == self.n;
        match self.dim {
            1 => on_x,
            _ => on_x || j == 0 || j == self.n,
        }
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| !self.is_boundary(k))
    }

    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.is_boundary(k))
    }

    /// The box covering every grid point.
    pub fn full_region(&self) -> Region {
        Region::new(*self, 0, self.n).expect("full grid is a valid region")
    }
}

/// Inclusive index box. Strips span the full `y` range; only the `x` bounds vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    grid: Grid,
    x_lo: usize,
    x_hi: usize,
}

impl Region {
    pub fn new(grid: Grid, x_lo: usize, x_hi: usize) -> Result<Self> {
        if x_hi > grid.n() || x_lo + 2 > x_hi {
            return Err(Error::InvalidDecomposition(format!(
                "strip {x_lo}..={x_hi} has no interior point on a grid with N = {}",
                grid.n()
            )));
        }
        Ok(Self { grid, x_lo, x_hi })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn x_lo(&self) -> usize {
        self.x_lo
    }

    pub fn x_hi(&self) -> usize {
        self.x_hi
    }

    /// Interior points along `x`.
    pub fn nx(&self) -> usize {
        self.x_hi - self.x_lo - 1
    }

    /// Interior points along `y` (1 for a 1D grid).
    pub fn ny(&self) -> usize {
        if self.grid.dim() == 1 {
            1
        } else {
            self.grid.n() - 1
        }
    }

    pub fn interior_len(&self) -> usize {
        self.nx() * self.ny()
    }

    fn j_range(&self) -> std::ops::Range<usize> {
        if self.grid.dim() == 1 {
            0..1
        } else {
            1..self.grid.n()
        }
    }

    /// Interior points in solver order (x fastest).
    pub fn interior_points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let xs = self.x_lo + 1..self.x_hi;
        self.j_range().flat_map(move |j| xs.clone().map(move |i| (i, j)))
    }

    pub fn contains_interior(&self, i: usize, j: usize) -> bool {
        i > self.x_lo && i < self.x_hi && self.j_range().contains(&j)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.x_lo && i <= self.x_hi && j <= self.grid.n()
    }

    /// Solver-order position of an interior point.
    #[inline]
    pub fn local_index(&self, i: usize, j: usize) -> usize {
        let row = if self.grid.dim() == 1 { 0 } else { j - 1 };
        row * self.nx() + (i - self.x_lo - 1)
    }

    /// Box boundary points that are interior to the whole domain.
    pub fn artificial_boundary(&self) -> Vec<usize> {
        let g = self.grid;
        let mut out = Vec::new();
        for &x in &[self.x_lo, self.x_hi] {
            if x == 0 || x == g.n() {
                continue;
            }
            for j in self.j_range() {
                out.push(g.index(x, j));
            }
        }
        out
    }
}

/// Real values on every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every node (`y = 0` in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.point(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    /// Constant on the interior, zero on the boundary.
    pub fn interior_constant(grid: Grid, value: f64) -> Self {
        let values = (0..grid.len())
            .map(|k| if grid.is_boundary(k) { 0.0 } else { value })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn interior_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.interior_indices().map(move |k| self.values[k])
    }

    pub fn boundary_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.boundary_indices().map(move |k| self.values[k])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(self.grid, other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// How δ maps onto the strip bounds around the midline split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OverlapConvention {
    /// Each strip extends δ layers past the split: overlap of 2δ cells.
    #[default]
    ExtendBoth,
    /// Overlap of exactly δ cells: left gains ⌈δ/2⌉ layers, right ⌊δ/2⌋.
    HalfOverlap,
}

impl OverlapConvention {
    /// Layers added to the (left, right) strips.
    pub fn extensions(self, delta: usize) -> (usize, usize) {
        match self {
            Self::ExtendBoth => (delta, delta),
            Self::HalfOverlap => (delta.div_ceil(2), delta / 2),
        }
    }
}

impl fmt::Display for OverlapConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExtendBoth => "extend-both",
            Self::HalfOverlap => "half-overlap",
        })
    }
}

impl FromStr for OverlapConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extend-both" => Ok(Self::ExtendBoth),
            "half-overlap" => Ok(Self::HalfOverlap),
            other => Err(Error::InvalidParameter(format!("unknown overlap convention `{other}`"))),
        }
    }
}

/// One overlapping strip of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    region: Region,
    artificial_boundary: Vec<usize>,
}

impl Subdomain {
    pub fn new(region: Region) -> Self {
        let artificial_boundary = region.artificial_boundary();
        Self { region, artificial_boundary }
    }

    pub fn grid(&self) -> Grid {
        self.region.grid()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Flat indices of the subdomain boundary points lying inside the domain.
    pub fn artificial_boundary(&self) -> &[usize] {
        &self.artificial_boundary
    }
}

/// Two overlapping strips `left = [0, left_hi]` and `right = [right_lo, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub left: Subdomain,
    pub right: Subdomain,
    /// Layer count used to build the strips (0 for explicit interfaces).
    pub delta: usize,
    pub split_index: usize,
    pub convention: Option<OverlapConvention>,
}

impl Decomposition {
    /// Midline split extended by δ layers according to `convention`.
    pub fn new(grid: Grid, delta: usize, convention: OverlapConvention) -> Result<Self> {
        let n = grid.n();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidDecomposition(format!(
                "N must be even for a midline split, got {n}"
            )));
        }
        if delta == 0 {
            return Err(Error::InvalidDecomposition("delta must be at least 1".into()));
        }
        let split = n / 2;
        let (ext_left, ext_right) = convention.extensions(delta);
        if ext_right >= split || split + ext_left >= n {
            return Err(Error::InvalidDecomposition(format!(
                "delta = {delta} makes the overlap reach the physical boundary at N = {n}"
            )));
        }
        let mut d = Self::from_interfaces(grid, split - ext_right, split + ext_left)?;
        d.delta = delta;
        d.split_index = split;
        d.convention = Some(convention);
        Ok(d)
    }

    /// Strips `[0, left_hi]` and `[right_lo, N]` with `0 < right_lo < left_hi < N`.
    pub fn from_interfaces(grid: Grid, right_lo: usize, left_hi: usize) -> Result<Self> {
        if right_lo == 0 || right_lo >= left_hi || left_hi >= grid.n() {
            return Err(Error::InvalidDecomposition(format!(
                "need 0 < right_lo < left_hi < N, got right_lo = {right_lo}, left_hi = {left_hi}, N = {}",
                grid.n()
            )));
        }
        Ok(Self {
            left: Subdomain::new(Region::new(grid, 0, left_hi)?),
            right: Subdomain::new(Region::new(grid, right_lo, grid.n())?),
            delta: 0,
            split_index: (right_lo + left_hi) / 2,
            convention: None,
        })
    }

    pub fn grid(&self) -> Grid {
        self.left.grid()
    }

    /// Overlap width in cells.
    pub fn overlap(&self) -> usize {
        self.left.region().x_hi() - self.right.region().x_lo()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    Elliptic,
    AlphaElliptic,
    Ocp,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Elliptic => "elliptic",
            Self::AlphaElliptic => "alpha-elliptic",
            Self::Ocp => "ocp",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elliptic" => Ok(Self::Elliptic),
            "alpha-elliptic" => Ok(Self::AlphaElliptic),
            "ocp" => Ok(Self::Ocp),
            other => Err(Error::InvalidParameter(format!("unknown problem kind `{other}`"))),
        }
    }
}

/// Initial iterate on the interior; the physical boundary always starts at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitPolicy {
    Zero,
    #[default]
    Ones,
    Random { seed: u64 },
}

impl fmt::Display for InitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Ones => f.write_str("ones"),
            Self::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for InitPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "ones" => Ok(Self::Ones),
            "random" => Ok(Self::Random { seed: 0 }),
            _ => match s.strip_prefix("random:").map(str::parse::<u64>) {
                Some(Ok(seed)) => Ok(Self::Random { seed }),
                _ => Err(Error::InvalidParameter(format!("unknown init policy `{s}`"))),
            },
        }
    }
}

impl InitPolicy {
    /// Interior values for the state (stream 0) or adjoint (stream 1).
    pub fn sample(self, grid: Grid, stream: u64) -> GridFunction {
        match self {
            Self::Zero => GridFunction::zeros(grid),
            Self::Ones => GridFunction::interior_constant(grid, 1.0),
            Self::Random { seed } => sample_function(
                grid,
                AnalyticTag::Random { seed: seed.wrapping_mul(2).wrapping_add(stream) },
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticTag {
    /// `sin(πx) sin(πy)` (`sin(πx)` in 1D).
    SinSinTarget,
    /// `d π² sin(πx) sin(πy)`, whose Poisson solution is the target.
    SinSinSource,
    Zero,
    /// Uniform on `[0, 1)` at interior points, zero on the boundary.
    Random { seed: u64 },
}

pub fn sample_function(grid: Grid, tag: AnalyticTag) -> GridFunction {
    let bump = move |x: f64, y: f64| {
        let sx = (PI * x).sin();
        if grid.dim() == 1 {
            sx
        } else {
            sx * (PI * y).sin()
        }
    };
    match tag {
        AnalyticTag::Zero => GridFunction::zeros(grid),
        AnalyticTag::SinSinTarget => GridFunction::from_fn(grid, bump),
        AnalyticTag::SinSinSource => {
            let scale = grid.dim() as f64 * PI * PI;
            GridFunction::from_fn(grid, move |x, y| scale * bump(x, y))
        }
        AnalyticTag::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..grid.len())
                .map(|k| if grid.is_boundary(k) { 0.0 } else { rng.gen::<f64>() })
                .collect();
            GridFunction { grid, values }
        }
    }
}

/// Everything needed to run one Schwarz experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub alpha: f64,
    pub shift_c: f64,
    pub f: GridFunction,
    pub y_d: GridFunction,
    pub kind: ProblemKind,
    pub decomposition: Decomposition,
    pub init: InitPolicy,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl ProblemSpec {
    /// The sine benchmark: OCP data `f = dπ² sin·sin`, `y_d = sin·sin`; the
    /// elliptic kinds solve the homogeneous equation. Starts from the
    /// all-ones interior iterate and runs five sweeps.
    pub fn benchmark(kind: ProblemKind, alpha: f64, decomposition: Decomposition) -> Result<Self> {
        let grid = decomposition.grid();
        let (f, y_d) = match kind {
            ProblemKind::Ocp => (
                sample_function(grid, AnalyticTag::SinSinSource),
                sample_function(grid, AnalyticTag::SinSinTarget),
            ),
            _ => (GridFunction::zeros(grid), GridFunction::zeros(grid)),
        };
        let shift_c = match kind {
            ProblemKind::AlphaElliptic => alpha_shift(alpha)?,
            _ => 0.0,
        };
        let spec = Self {
            grid,
            alpha,
            shift_c,
            f,
            y_d,
            kind,
            decomposition,
            init: InitPolicy::Ones,
            tol: 0.0,
            max_sweeps: 5,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_init(mut self, init: InitPolicy) -> Self {
        self.init = init;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn with_data(mut self, f: GridFunction, y_d: GridFunction) -> Result<Self> {
        self.f = f;
        self.y_d = y_d;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_same_grid(self.grid, self.f.grid())?;
        ensure_same_grid(self.grid, self.y_d.grid())?;
        ensure_same_grid(self.grid, self.decomposition.grid())?;
        if matches!(self.kind, ProblemKind::Ocp | ProblemKind::AlphaElliptic)
            && !(self.alpha > 0.0 && self.alpha.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive for {}, got {}",
                self.kind, self.alpha
            )));
        }
        if !(self.shift_c >= 0.0 && self.shift_c.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift c must be >= 0, got {}", self.shift_c)));
        }
        if self.kind == ProblemKind::AlphaElliptic {
            let forced = alpha_shift(self.alpha)?;
            if (self.shift_c - forced).abs() > 1e-12 * forced {
                return Err(Error::InvalidParameter(format!(
                    "alpha-elliptic problems require c = 2 alpha^(-1/2) = {forced}, got {}",
                    self.shift_c
                )));
            }
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `2 α^(-1/2)`, the zeroth-order coefficient of the α-dependent equation.
pub fn alpha_shift(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(2.0 / alpha.sqrt())
    } else {
        Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

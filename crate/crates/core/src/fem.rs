//! Semi-implicit P1 finite elements for the full system on `[0, 2 pi]`.
//!
//! Each time step is backward Euler, linearized by fixed-point sweeps: with
//! coefficients frozen at the previous iterate, the capital equation is
//! solved first and the labor equation then uses the fresh capital gradient
//! in its cross-diffusion term. Mass is lumped (trapezoidal nodal
//! quadrature), so every solve is tridiagonal.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::model::{Equilibrium, ScaledModelParams};
use crate::scalar::Real;

/// Uniform grid on `[x_min, x_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub x_min: T,
    pub x_max: T,
    pub n_nodes: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::InvalidParameter {
                name: "n_nodes",
                reason: format!("{n_nodes} < 3"),
            });
        }
        if !(x_max > x_min) {
            return Err(Error::InvalidParameter {
                name: "x_max",
                reason: format!("interval [{x_min}, {x_max}] is empty"),
            });
        }
        Ok(Self {
            x_min,
            x_max,
            n_nodes,
        })
    }

    /// `[0, 2 pi]` with `n_nodes` nodes.
    pub fn periodic_cell(n_nodes: usize) -> Result<Self> {
        Self::new(T::zero(), T::lit(2.0) * T::PI(), n_nodes)
    }

    pub fn h(&self) -> T {
        (self.x_max - self.x_min) / T::lit((self.n_nodes - 1) as f64)
    }

    pub fn length(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn node(&self, i: usize) -> T {
        self.x_min + self.h() * T::lit(i as f64)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    /// Trapezoidal weights `(h/2, h, ..., h, h/2)`.
    pub fn lumped_weights(&self) -> Vec<T> {
        let h = self.h();
        let mut w = vec![h; self.n_nodes];
        w[0] = h / T::lit(2.0);
        w[self.n_nodes - 1] = h / T::lit(2.0);
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    pub labor: Vec<T>,
    pub capital: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn uniform(n: usize, labor: T, capital: T) -> Self {
        Self {
            labor: vec![labor; n],
            capital: vec![capital; n],
        }
    }

    pub fn len(&self) -> usize {
        self.labor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labor.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.labor
            .iter()
            .chain(&self.capital)
            .all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> T {
        self.labor
            .iter()
            .chain(&self.capital)
            .fold(T::infinity(), |m, &v| m.min(v))
    }

    /// `max(|L - L'|_2, |K - K'|_2)` with the Euclidean norm of nodal vectors.
    pub fn max_l2_diff(&self, other: &Self) -> T {
        l2_diff(&self.labor, &other.labor).max(l2_diff(&self.capital, &other.capital))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        for len in [self.labor.len(), self.capital.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        Ok(())
    }
}

fn l2_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig<T> {
    pub tau: T,
    pub tol_fp: T,
    pub tol_s: T,
    pub max_fp_iters: usize,
    pub max_steps: usize,
    /// Store a snapshot every this many steps; 0 keeps only the endpoints.
    pub snapshot_every: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tau: T::lit(0.01),
            tol_fp: T::lit(1e-6),
            tol_s: T::lit(1e-8),
            max_fp_iters: 100,
            max_steps: 500_000,
            snapshot_every: 100,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau", self.tau),
            ("tol_fp", self.tol_fp),
            ("tol_s", self.tol_s),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be positive"),
                });
            }
        }
        if self.max_fp_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_fp_iters",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Initial data `L*(1 + 0.05 sin(10 pi x))`, `K*(1 + 0.05 cos(10 pi x))`.
pub fn initial_condition<T: Real>(eq: &Equilibrium<T>, grid: &Grid<T>) -> Field<T> {
    initial_condition_with_amplitude(eq, grid, T::lit(0.05))
}

pub fn initial_condition_with_amplitude<T: Real>(
    eq: &Equilibrium<T>,
    grid: &Grid<T>,
    amplitude: T,
) -> Field<T> {
    let w = T::lit(10.0) * T::PI();
    let nodes = grid.nodes();
    Field {
        labor: nodes
            .iter()
            .map(|&x| eq.labor * (T::one() + amplitude * (w * x).sin()))
            .collect(),
        capital: nodes
            .iter()
            .map(|&x| eq.capital * (T::one() + amplitude * (w * x).cos()))
            .collect(),
    }
}

/// Trapezoidal `sum w_i u_i v_i`.
pub fn lumped_inner_product<T: Real>(u: &[T], v: &[T], grid: &Grid<T>) -> Result<T> {
    let n = grid.n_nodes;
    for len in [u.len(), v.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    Ok(grid
        .lumped_weights()
        .iter()
        .zip(u.iter().zip(v))
        .fold(T::zero(), |acc, (&w, (&a, &b))| acc + w * a * b))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats<T> {
    pub iterations: usize,
    /// Change of the first inner iterate against the previous step.
    pub first_change: T,
    /// Change between the last two inner iterates.
    pub residual: T,
}

/// Preallocated buffers for repeated steps on one grid.
#[derive(Clone, Debug)]
pub struct Workspace<T> {
    weights: Vec<T>,
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
    rhs: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Real> Workspace<T> {
    pub fn new(grid: &Grid<T>) -> Self {
        let n = grid.n_nodes;
        Self {
            weights: grid.lumped_weights(),
            lower: vec![T::zero(); n],
            diag: vec![T::zero(); n],
            upper: vec![T::zero(); n],
            rhs: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
        }
    }

    /// Mass plus reaction on the diagonal, right side from the old step.
    fn reset(&mut self, tau: T, old: &[T], reaction: impl Fn(usize) -> T) {
        for i in 0..self.weights.len() {
            let m = self.weights[i];
            self.lower[i] = T::zero();
            self.upper[i] = T::zero();
            self.diag[i] = m / tau - m * reaction(i);
            self.rhs[i] = m / tau * old[i];
        }
    }

    /// Adds `d_e / h [[1, -1], [-1, 1]]` for each element.
    fn add_stiffness(&mut self, h: T, coeff: impl Fn(usize) -> T) {
        for e in 0..self.weights.len() - 1 {
            let s = coeff(e) / h;
            self.diag[e] += s;
            self.diag[e + 1] += s;
            self.upper[e] -= s;
            self.lower[e + 1] -= s;
        }
    }

    fn solve(&mut self, out: &mut [T]) -> Result<()> {
        solve_tridiagonal(
            &self.lower,
            &self.diag,
            &self.upper,
            &self.rhs,
            out,
            &mut self.scratch,
        )
    }
}

fn midpoint<T: Real>(v: &[T], e: usize) -> T {
    (v[e] + v[e + 1]) / T::lit(2.0)
}

/// One fixed-point sweep from iterate `prev`: capital first, then labor.
fn sweep<T: Real>(
    p: &ScaledModelParams<T>,
    h: T,
    tau: T,
    old: &Field<T>,
    prev: &Field<T>,
    ws: &mut Workspace<T>,
    next: &mut Field<T>,
) -> Result<()> {
    let (lp, kp) = (&prev.labor, &prev.capital);

    ws.reset(tau, &old.capital, |i| {
        p.gamma * (p.alpha2 + lp[i] - p.beta2 * kp[i])
    });
    ws.add_stiffness(h, |e| p.capital_diffusivity(midpoint(kp, e)));
    ws.solve(&mut next.capital)?;

    ws.reset(tau, &old.labor, |i| {
        p.gamma * (p.alpha1 - p.beta1 * lp[i] + kp[i])
    });
    ws.add_stiffness(h, |e| p.labor_diffusivity(midpoint(lp, e)));
    let k = &next.capital;
    for e in 0..k.len() - 1 {
        let flux = p.b * midpoint(lp, e) * (k[e + 1] - k[e]) / h;
        ws.rhs[e] -= flux;
        ws.rhs[e + 1] += flux;
    }
    ws.solve(&mut next.labor)
}

/// One backward-Euler step.
pub fn step<T: Real>(
    state: &Field<T>,
    p: &ScaledModelParams<T>,
    grid: &Grid<T>,
    config: &SolverConfig<T>,
) -> Result<(Field<T>, StepStats<T>)> {
    let mut ws = Workspace::new(grid);
    step_with(state, p, grid, config, &mut ws)
}

pub fn step_with<T: Real>(
    state: &Field<T>,
    p: &ScaledModelParams<T>,
    grid: &Grid<T>,
    config: &SolverConfig<T>,
    ws: &mut Workspace<T>,
) -> Result<(Field<T>, StepStats<T>)> {
    state.check_len(grid.n_nodes)?;
    if !state.is_finite() {
        return Err(Error::Domain("state has non-finite entries".into()));
    }
    let h = grid.h();
    let mut prev = state.clone();
    let mut next = state.clone();
    let mut stats = StepStats::default();
    for k in 1..=config.max_fp_iters {
        sweep(p, h, config.tau, state, &prev, ws, &mut next)?;
        let change = next.max_l2_diff(&prev);
        if k == 1 {
            stats.first_change = change;
        }
        stats.iterations = k;
        stats.residual = change;
        if !next.is_finite() {
            return Err(Error::FixedPointNonConvergence {
                iterations: k,
                residual: f64::INFINITY,
            });
        }
        if change < config.tol_fp {
            return Ok((next, stats));
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Err(Error::FixedPointNonConvergence {
        iterations: config.max_fp_iters,
        residual: stats.residual.to_f64_lossy(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<T> {
    pub t: T,
    pub field: Field<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedPointStats {
    pub steps: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
}

impl FixedPointStats {
    pub fn mean_iterations(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.steps as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: Field<T>,
    /// Time at which the steady criterion first fired.
    pub steady_time: Option<T>,
    pub steps: usize,
    pub fp_stats: FixedPointStats,
    /// Steps after which some nodal value was negative.
    pub negative_steps: usize,
    pub min_value: T,
}

impl<T: Real> Trajectory<T> {
    pub fn reached_steady(&self) -> bool {
        self.steady_time.is_some()
    }
}

/// Steps until `max(|L^{n,1} - L^{n-1}|_2, |K^{n,1} - K^{n-1}|_2) < tol_s`
/// or `max_steps`.
pub fn run_to_steady<T: Real>(
    state0: &Field<T>,
    p: &ScaledModelParams<T>,
    grid: &Grid<T>,
    config: &SolverConfig<T>,
) -> Result<Trajectory<T>> {
    config.validate()?;
    state0.check_len(grid.n_nodes)?;
    let mut ws = Workspace::new(grid);
    let mut state = state0.clone();
    let mut traj = Trajectory {
        snapshots: vec![Snapshot {
            t: T::zero(),
            field: state.clone(),
        }],
        final_state: state.clone(),
        steady_time: None,
        steps: 0,
        fp_stats: FixedPointStats::default(),
        negative_steps: 0,
        min_value: state.min_value(),
    };
    for n in 1..=config.max_steps {
        let (next, stats) = step_with(&state, p, grid, config, &mut ws)?;
        state = next;
        traj.steps = n;
        traj.fp_stats.steps += 1;
        traj.fp_stats.total_iterations += stats.iterations;
        traj.fp_stats.max_iterations = traj.fp_stats.max_iterations.max(stats.iterations);
        let min = state.min_value();
        traj.min_value = traj.min_value.min(min);
        if min < T::zero() {
            if traj.negative_steps == 0 {
                warn!(
                    "negative nodal value {min} at t = {}",
                    config.tau * T::lit(n as f64)
                );
            }
            traj.negative_steps += 1;
        }
        let t = config.tau * T::lit(n as f64);
        let steady = stats.first_change < config.tol_s;
        if steady || (config.snapshot_every > 0 && n % config.snapshot_every == 0) {
            traj.snapshots.push(Snapshot {
                t,
                field: state.clone(),
            });
        }
        if steady {
            traj.steady_time = Some(t);
            break;
        }
    }
    if traj.steady_time.is_none() {
        warn!("no steady state after {} steps", traj.steps);
        if traj.snapshots.last().map(|s| s.t) != Some(config.tau * T::lit(traj.steps as f64)) {
            traj.snapshots.push(Snapshot {
                t: config.tau * T::lit(traj.steps as f64),
                field: state.clone(),
            });
        }
    }
    traj.final_state = state;
    Ok(traj)
}

/// Wavenumber `n/2` (n = 1, 2, ...) of the cosine mode carrying most of the
/// relative deviation of both fields from their means.
pub fn dominant_mode<T: Real>(field: &Field<T>, grid: &Grid<T>) -> Result<T> {
    field.check_len(grid.n_nodes)?;
    let ones = vec![T::one(); grid.n_nodes];
    let len = grid.length();
    let nodes = grid.nodes();
    let mut dev = Vec::with_capacity(2);
    for v in [&field.labor, &field.capital] {
        let mean = lumped_inner_product(v, &ones, grid)? / len;
        let scale = if mean != T::zero() {
            mean.abs()
        } else {
            T::one()
        };
        dev.push(v.iter().map(|&x| (x - mean) / scale).collect::<Vec<_>>());
    }
    let n_max = grid.n_nodes / 2;
    let mut best = (T::zero(), T::neg_infinity());
    let mut basis = vec![T::zero(); grid.n_nodes];
    for n in 1..=n_max {
        let k = T::lit(n as f64) / T::lit(2.0);
        for (b, &x) in basis.iter_mut().zip(&nodes) {
            *b = (k * (x - grid.x_min)).cos();
        }
        let mut energy = T::zero();
        for d in &dev {
            let c = lumped_inner_product(d, &basis, grid)?;
            energy += c * c;
        }
        if energy > best.1 {
            best = (k, energy);
        }
    }
    Ok(best.0)
}

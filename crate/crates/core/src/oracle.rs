//! Independent cross-checks by classical integration.
//!
//! `integrate_frame` solves `F⁻¹dF = θ_λ` with RK4 along axis-aligned paths;
//! `integrate_bf` solves the first-order system satisfied by `π̃` and `y`
//! for a real one-pole dressing. Both take `β` and `h` from a [`MetricField`],
//! never from the dressing formulas they are compared against.

use crate::algebra::{c64, identity, max_abs, real_vector, CMatrix, CVector, HermitianProjection, RVector, C64, IM};
use crate::error::{Error, Result};
use crate::frames::{ExtendedFrame, Grid};
use crate::geometry::EgoroffMetric;

/// Per-step projection correction above which `integrate_bf` gives up.
pub const MAX_PROJECTION_CORRECTION: f64 = 1e-6;

/// Below this, successive differences are treated as rounding noise and no
/// order is estimated.
const NOISE_FLOOR: f64 = 1e-13;

/// `β(u)` and `h(u)` at arbitrary `u`.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;
    fn fields(&self, u: &[f64]) -> Result<(CVector, CMatrix)>;
}

/// Exact evaluation from the closed-form accumulated updates.
impl MetricField for ExtendedFrame {
    fn dim(&self) -> usize {
        ExtendedFrame::dim(self)
    }

    fn fields(&self, u: &[f64]) -> Result<(CVector, CMatrix)> {
        let p = self.at(u)?;
        Ok((p.h(), p.beta()))
    }
}

/// Tensor-product local cubic (4-point Lagrange) interpolation of grid data.
pub struct GridMetricField {
    grid: Grid,
    h: Vec<CVector>,
    beta: Vec<CMatrix>,
}

impl GridMetricField {
    pub fn new(metric: &EgoroffMetric) -> Result<Self> {
        if metric.grid.axes.iter().any(|a| a.points < 4) {
            return Err(Error::InvalidGrid("cubic interpolation needs at least 4 points per axis".into()));
        }
        Ok(Self { grid: metric.grid.clone(), h: metric.h.clone(), beta: metric.beta.clone() })
    }

    fn stencil(&self, axis: usize, t: f64) -> Result<([usize; 4], [f64; 4])> {
        let a = &self.grid.axes[axis];
        let step = a.step();
        let slack = 1e-12 * (1.0 + t.abs());
        if t < a.min - slack || t > a.max + slack {
            return Err(Error::OutOfDomain { axis, value: t, min: a.min, max: a.max });
        }
        let s = (t - a.min) / step;
        let k = (s.floor() as isize - 1).clamp(0, a.points as isize - 4) as usize;
        let nodes = [k, k + 1, k + 2, k + 3];
        let x = s - k as f64;
        let mut w = [0.0; 4];
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = (0..4).filter(|&m| m != j).map(|m| (x - m as f64) / (j as f64 - m as f64)).product();
        }
        Ok((nodes, w))
    }
}

impl MetricField for GridMetricField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn fields(&self, u: &[f64]) -> Result<(CVector, CMatrix)> {
        let n = self.grid.dim();
        let stencils = (0..n).map(|a| self.stencil(a, u[a])).collect::<Result<Vec<_>>>()?;
        let mut h = CVector::zeros(n);
        let mut beta = CMatrix::zeros(n, n);
        for combo in 0..4usize.pow(n as u32) {
            let mut c = combo;
            let mut idx = vec![0; n];
            let mut w = 1.0;
            for a in (0..n).rev() {
                let j = c % 4;
                c /= 4;
                idx[a] = stencils[a].0[j];
                w *= stencils[a].1[j];
            }
            let p = self.grid.flat_index(&idx);
            h += &self.h[p] * c64(w, 0.0);
            beta += &self.beta[p] * c64(w, 0.0);
        }
        Ok((h, beta))
    }
}

/// Axis-aligned segments `(axis, target coordinate)` starting at `u = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    pub segments: Vec<(usize, f64)>,
}

impl PathSpec {
    pub fn new(segments: Vec<(usize, f64)>) -> Self {
        Self { segments }
    }

    /// Reach `target` moving through the axes in `order`.
    pub fn axis_ordered(target: &[f64], order: &[usize]) -> Self {
        Self { segments: order.iter().map(|&a| (a, target[a])).collect() }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for &(a, t) in &self.segments {
            if a >= n || !t.is_finite() {
                return Err(Error::InvalidPath(format!("segment ({a}, {t}) is invalid for dimension {n}")));
            }
        }
        Ok(())
    }

    pub fn end(&self, n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        for &(a, t) in &self.segments {
            u[a] = t;
        }
        u
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult<T> {
    pub value: T,
    pub step: f64,
    /// Distance to the reference value, when one was supplied.
    pub residual: Option<f64>,
    /// `log₂` of successive differences under step halving.
    pub order: Option<f64>,
}

/// `log₂(r₁/r₂)` for residuals at steps `s` and `s/2`.
pub fn estimate_order(r1: f64, r2: f64) -> f64 {
    (r1 / r2).log2()
}

/// Walk `path` with RK4 steps no longer than `step`, calling `rhs(axis, u, state)`.
fn rk4_path<S, F>(n: usize, path: &PathSpec, step: f64, init: S, rhs: F, mut after: impl FnMut(&mut S) -> Result<()>) -> Result<S>
where
    S: Clone + std::ops::Add<Output = S> + std::ops::Mul<f64, Output = S>,
    F: Fn(usize, &[f64], &S) -> Result<S>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidPath(format!("step must be positive, got {step}")));
    }
    path.validate(n)?;
    let mut u = vec![0.0; n];
    let mut state = init;
    for &(a, target) in &path.segments {
        let len = target - u[a];
        let count = (len.abs() / step).ceil() as usize;
        if count == 0 {
            continue;
        }
        let dt = len / count as f64;
        let start = u[a];
        for k in 0..count {
            let t0 = start + k as f64 * dt;
            let at = |t: f64| {
                let mut v = u.clone();
                v[a] = t;
                v
            };
            let k1 = rhs(a, &at(t0), &state)?;
            let k2 = rhs(a, &at(t0 + 0.5 * dt), &(state.clone() + k1.clone() * (0.5 * dt)))?;
            let k3 = rhs(a, &at(t0 + 0.5 * dt), &(state.clone() + k2.clone() * (0.5 * dt)))?;
            let k4 = rhs(a, &at(t0 + dt), &(state.clone() + k3.clone() * dt))?;
            state = state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            after(&mut state)?;
        }
        u[a] = target;
    }
    Ok(state)
}

/// Matrix state wrapper so RK4 can scale by real step sizes.
#[derive(Clone, Debug)]
struct M(CMatrix);

impl std::ops::Add for M {
    type Output = M;
    fn add(self, o: M) -> M {
        M(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for M {
    type Output = M;
    fn mul(self, s: f64) -> M {
        M(self.0 * c64(s, 0.0))
    }
}

/// `θ_λ(∂_i) = [[iλe_ii + [e_ii, β], h_i e_i], [0, 0]]`.
pub fn lax_matrix(axis: usize, lambda: C64, h: &CVector, beta: &CMatrix) -> CMatrix {
    let n = h.len();
    let mut theta = CMatrix::zeros(n + 1, n + 1);
    for j in 0..n {
        theta[(axis, j)] += beta[(axis, j)];
        theta[(j, axis)] -= beta[(j, axis)];
    }
    theta[(axis, axis)] += IM * lambda;
    theta[(axis, n)] = h[axis];
    theta
}

/// `F(end, λ)` from `F' = F θ_λ(∂_axis)` along the path, `F(0) = I`.
pub fn integrate_frame<F: MetricField + ?Sized>(
    field: &F,
    lambda: C64,
    path: &PathSpec,
    step: f64,
) -> Result<(CMatrix, CVector)> {
    let n = field.dim();
    let out = rk4_path(
        n,
        path,
        step,
        M(identity(n + 1)),
        |a, u, f| {
            let (h, beta) = field.fields(u)?;
            Ok(M(&f.0 * lax_matrix(a, lambda, &h, &beta)))
        },
        |_| Ok(()),
    )?;
    let e = out.0.view((0, 0), (n, n)).into_owned();
    let x = out.0.view((0, n), (n, 1)).column(0).into_owned();
    Ok((e, x))
}

fn frame_distance(a: &(CMatrix, CVector), b: &(CMatrix, CVector)) -> f64 {
    max_abs(&(&a.0 - &b.0)).max(max_abs(&(&a.1 - &b.1)))
}

/// `integrate_frame` at `step`, `step/2` and `step/4`. The order comes from
/// the reference residuals when a reference is given, otherwise from
/// successive differences. Fails with `StepTooLarge` when the observed
/// order is below 3 while the differences are still above rounding noise.
pub fn frame_convergence<F: MetricField + ?Sized>(
    field: &F,
    lambda: C64,
    path: &PathSpec,
    step: f64,
    reference: Option<&(CMatrix, CVector)>,
) -> Result<OracleResult<(CMatrix, CVector)>> {
    let runs = [step, 0.5 * step, 0.25 * step]
        .iter()
        .map(|&s| integrate_frame(field, lambda, path, s))
        .collect::<Result<Vec<_>>>()?;
    let (r1, r2) = match reference {
        Some(r) => (frame_distance(&runs[0], r), frame_distance(&runs[1], r)),
        None => (frame_distance(&runs[0], &runs[1]), frame_distance(&runs[1], &runs[2])),
    };
    let order = (r1 > NOISE_FLOOR && r2 > NOISE_FLOOR).then(|| estimate_order(r1, r2));
    if let Some(p) = order {
        if p < 3.0 {
            return Err(Error::StepTooLarge(p));
        }
    }
    let residual = reference.map(|r| frame_distance(&runs[0], r));
    Ok(OracleResult { value: runs.into_iter().next().unwrap(), step, residual, order })
}

/// Output of [`integrate_bf`].
#[derive(Clone, Debug)]
pub struct BfSolution {
    pub pi: CMatrix,
    pub y: CVector,
    /// Largest per-step re-projection correction `‖P_new − P_old‖_max`.
    pub max_correction: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
struct Bf {
    pi: CMatrix,
    y: CVector,
}

impl std::ops::Add for Bf {
    type Output = Bf;
    fn add(self, o: Bf) -> Bf {
        Bf { pi: self.pi + o.pi, y: self.y + o.y }
    }
}

impl std::ops::Mul<f64> for Bf {
    type Output = Bf;
    fn mul(self, s: f64) -> Bf {
        Bf { pi: self.pi * c64(s, 0.0), y: self.y * c64(s, 0.0) }
    }
}

/// Nearest Hermitian projection of an almost-projection of the same rank:
/// symmetrize, then iterate `P ← 3P² − 2P³`, which drives eigenvalues below
/// ½ to 0 and above ½ to 1.
pub fn reproject(p: &CMatrix) -> CMatrix {
    let mut q = (p + p.adjoint()) * c64(0.5, 0.0);
    for _ in 0..60 {
        let q2 = &q * &q;
        let next = &q2 * c64(3.0, 0.0) - &q2 * &q * c64(2.0, 0.0);
        let delta = max_abs(&(&next - &q));
        q = (&next + next.adjoint()) * c64(0.5, 0.0);
        if delta < 1e-16 {
            break;
        }
    }
    q
}

/// RK4 solution of
/// `∂_i π̃ = −[[e_ii,β],π̃] − α[e_ii,π̃](I−2π̃)`,
/// `∂_i y = −[e_ii, β−2απ̃]y + π̃ e_ii h − α e_ii y`,
/// with `π̃(0) = π₀`, `y(0) = b`, re-projecting `π̃` after every step.
pub fn integrate_bf<F: MetricField + ?Sized>(
    field: &F,
    alpha: f64,
    pi0: &HermitianProjection,
    b: &RVector,
    path: &PathSpec,
    step: f64,
) -> Result<BfSolution> {
    let n = field.dim();
    if !pi0.is_real() {
        return Err(Error::InvalidFactor("the system needs a real initial projection".into()));
    }
    if b.len() != n || pi0.dim() != n {
        return Err(Error::Dimension(format!("initial data does not match dimension {n}")));
    }
    let id = identity(n);
    let mut max_correction = 0.0f64;
    let mut steps = 0usize;
    let out = rk4_path(
        n,
        path,
        step,
        Bf { pi: pi0.matrix().clone(), y: real_vector(b) },
        |a, u, s| {
            let (h, beta) = field.fields(u)?;
            let mut e = CMatrix::zeros(n, n);
            e[(a, a)] = c64(1.0, 0.0);
            let comm = |x: &CMatrix, y: &CMatrix| x * y - y * x;
            let eb = comm(&e, &beta);
            // Sign fixed by differentiating π̃ = proj E(u,−iα)* V.
            let dpi = -(comm(&eb, &s.pi) + comm(&e, &s.pi) * (&id - &s.pi * c64(2.0, 0.0)) * c64(alpha, 0.0));
            let shifted = &beta - &s.pi * c64(2.0 * alpha, 0.0);
            let dy = -(comm(&e, &shifted) * &s.y) + &s.pi * (&e * &h) - (&e * &s.y) * c64(alpha, 0.0);
            Ok(Bf { pi: dpi, y: dy })
        },
        |s| {
            let fixed = reproject(&s.pi);
            let correction = max_abs(&(&fixed - &s.pi));
            max_correction = max_correction.max(correction);
            steps += 1;
            if correction > MAX_PROJECTION_CORRECTION {
                return Err(Error::ProjectionDrift(correction));
            }
            s.pi = fixed;
            Ok(())
        },
    )?;
    Ok(BfSolution { pi: out.pi, y: out.y, max_correction, steps })
}

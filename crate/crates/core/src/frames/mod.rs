//! Closed-form extended frames `F(u,λ) = [[E, X], [0, 1]]`.
//!
//! A frame is a vacuum seed plus an ordered list of dressing layers. Each
//! layer is a one-pole update (pole `z`, projection `π`) or a translation.
//! Per-point layer data (`π̃`, `η`, `y`) is computed once per `u` from the
//! previous level and then reused for every `λ`.

pub mod grid;
pub mod quadrature;
pub mod seed;
pub mod spline;

use std::borrow::Cow;

use rayon::prelude::*;

use crate::algebra::{
    c64, real_vector, solve_vector, star_reduce, CMatrix, CVector, HermitianProjection, RVector, C64, IM,
};
use crate::dressing::{DressingRecord, EtaConvention};
use crate::error::{Error, Result};
use crate::geometry::EgoroffMetric;
use crate::loopfactors::{pole_tol, simple_element};

pub use grid::{Axis, Grid};
pub use seed::{exprel, vacuum_e, vacuum_x, Profile, SeedProfile, QUAD_TOL};

/// Within `NEAR_POLE * max(1, |p|)` of a removable pole `p` the frame is
/// evaluated as a mean over a circle instead of by the raw formula.
pub const NEAR_POLE: f64 = 1e-2;

/// Number of nodes on the averaging circle.
pub const CAUCHY_NODES: usize = 32;

const DLAMBDA_STEP: f64 = 1e-3;

#[derive(Clone, Debug)]
pub enum Layer {
    /// `g_{z,π}` acting by `Ẽ = g_{z,π} E g_{z,π̃}^{-1}`.
    OnePole { z: C64, projection: HermitianProjection, convention: EtaConvention },
    /// `k_{iα,b}` acting by `X̃ = X + i(b − E y)/(λ − iα)`.
    Translation { alpha: f64, b: RVector },
}

impl Layer {
    /// The points where the raw update formula is singular. All of them are
    /// removable for the dressed frame.
    pub fn singular_points(&self) -> Vec<C64> {
        match self {
            Layer::OnePole { z, .. } => vec![*z, z.conj()],
            Layer::Translation { alpha, .. } => vec![c64(0.0, *alpha)],
        }
    }

    pub fn pole(&self) -> C64 {
        match self {
            Layer::OnePole { z, .. } => *z,
            Layer::Translation { alpha, .. } => c64(0.0, *alpha),
        }
    }

    /// `i(z − z̄)`, the coefficient in the `h`, `β` and `φ` updates.
    fn coefficient(z: C64) -> C64 {
        IM * (z - z.conj())
    }

    fn is_real(&self) -> bool {
        matches!(self, Layer::OnePole { z, projection, .. } if z.re == 0.0 && projection.is_real())
    }
}

/// Per-point cached data of one layer.
#[derive(Clone, Debug)]
pub enum LayerData {
    OnePole { pi_tilde: HermitianProjection, eta: CVector },
    Translation { y: CVector },
}

#[derive(Clone, Debug)]
pub struct PointData {
    pub u: Vec<f64>,
    pub layers: Vec<LayerData>,
}

#[derive(Clone, Debug)]
pub struct ExtendedFrame {
    seed: SeedProfile,
    history: Vec<DressingRecord>,
    layers: Vec<Layer>,
}

impl ExtendedFrame {
    pub fn vacuum(seed: SeedProfile) -> Self {
        Self { seed, history: Vec::new(), layers: Vec::new() }
    }

    pub fn seed(&self) -> &SeedProfile {
        &self.seed
    }

    pub fn history(&self) -> &[DressingRecord] {
        &self.history
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dim(&self) -> usize {
        self.seed.dim()
    }

    /// Append a record. A new pole may sit on an earlier zero (that is how
    /// inverses and compositions arise) but not on an earlier pole.
    pub fn with_record(&self, record: DressingRecord) -> Result<Self> {
        let new_layers = record.layers()?;
        let mut layers = self.layers.clone();
        for layer in new_layers {
            if let Layer::OnePole { projection, .. } = &layer {
                if projection.dim() != self.dim() {
                    return Err(Error::Dimension(format!(
                        "projection has dimension {}, frame has {}",
                        projection.dim(),
                        self.dim()
                    )));
                }
            }
            if let Layer::Translation { b, .. } = &layer {
                if b.len() != self.dim() {
                    return Err(Error::Dimension(format!("b has {} entries, frame has {}", b.len(), self.dim())));
                }
            }
            let p = layer.pole();
            for old in &layers {
                let q = old.pole();
                let tol = pole_tol(q);
                if (p - q).norm() <= tol {
                    return Err(Error::AtPole { lambda: p, pole: q, tol });
                }
            }
            layers.push(layer);
        }
        let mut history = self.history.clone();
        history.push(record);
        Ok(Self { seed: self.seed.clone(), history, layers })
    }

    /// Every history factor satisfies the σ condition.
    pub fn is_sigma_compatible(&self) -> bool {
        self.history.iter().all(|r| r.factor.is_sigma_compatible())
    }

    /// Closed-form `φ` is available when every layer is a real one-pole layer.
    pub fn has_closed_phi(&self) -> bool {
        self.layers.iter().all(Layer::is_real)
    }

    /// Removable singular points of the first `level` layers.
    pub fn singular_points(&self, level: usize) -> Vec<C64> {
        self.layers[..level].iter().flat_map(Layer::singular_points).collect()
    }

    /// Compute the per-point layer data at `u`.
    pub fn at(&self, u: &[f64]) -> Result<FramePoint<'_>> {
        self.seed.check_domain(u)?;
        let mut data = PointData { u: u.to_vec(), layers: Vec::with_capacity(self.layers.len()) };
        for (k, layer) in self.layers.iter().enumerate() {
            let entry = {
                let below = FramePoint { frame: self, data: Cow::Borrowed(&data) };
                match layer {
                    Layer::OnePole { z, projection, convention } => {
                        let (e, x) = below.eval_level(k, z.conj())?;
                        let image = e.adjoint() * projection.basis();
                        let pi_tilde = HermitianProjection::onto_span(&image)?;
                        let x = match convention {
                            EtaConvention::Statement => x,
                            EtaConvention::ProofVariant => below.eval_level(k, *z)?.1,
                        };
                        let eta = solve_vector(&e, &x)?;
                        LayerData::OnePole { pi_tilde, eta }
                    }
                    Layer::Translation { alpha, b } => {
                        let (e, _) = below.eval_level(k, c64(0.0, *alpha))?;
                        let y = solve_vector(&e, &real_vector(b))?;
                        LayerData::Translation { y }
                    }
                }
            };
            data.layers.push(entry);
        }
        Ok(FramePoint { frame: self, data: Cow::Owned(data) })
    }

    pub fn point_data(&self, u: &[f64]) -> Result<PointData> {
        Ok(self.at(u)?.data.into_owned())
    }
}

/// A frame with its layer data resolved at one `u`.
#[derive(Clone, Debug)]
pub struct FramePoint<'a> {
    frame: &'a ExtendedFrame,
    data: Cow<'a, PointData>,
}

impl<'a> FramePoint<'a> {
    pub fn from_data(frame: &'a ExtendedFrame, data: &'a PointData) -> Self {
        Self { frame, data: Cow::Borrowed(data) }
    }

    pub fn u(&self) -> &[f64] {
        &self.data.u
    }

    pub fn frame(&self) -> &ExtendedFrame {
        self.frame
    }

    pub fn layer_data(&self) -> &[LayerData] {
        &self.data.layers
    }

    /// `(E(u,λ), X(u,λ))` of the fully dressed frame, pole-free.
    pub fn eval(&self, lambda: C64) -> Result<(CMatrix, CVector)> {
        self.eval_level(self.frame.layers.len(), lambda)
    }

    /// The raw update formulas with no near-pole treatment.
    pub fn eval_direct(&self, lambda: C64) -> Result<(CMatrix, CVector)> {
        self.direct_level(self.frame.layers.len(), lambda)
    }

    /// The frame after the first `level` layers, pole-free.
    pub fn eval_level(&self, level: usize, lambda: C64) -> Result<(CMatrix, CVector)> {
        let points = self.frame.singular_points(level);
        let near = points.iter().any(|p| (lambda - p).norm() < NEAR_POLE * p.norm().max(1.0));
        if !near {
            return self.direct_level(level, lambda);
        }
        // The dressed frame is entire in λ, so its value is the mean over any
        // circle around λ. Pick a radius whose circle stays clear of every
        // singular point of the raw formula.
        let scale = points.iter().fold(1.0f64, |m, p| m.max(p.norm()));
        let radius = [1.0, 0.8, 1.25, 0.6, 1.5, 0.45, 0.35]
            .iter()
            .map(|f| 0.1 * scale * f)
            .max_by(|a, b| clearance(lambda, &points, *a).total_cmp(&clearance(lambda, &points, *b)))
            .unwrap();
        let n = self.frame.dim();
        let mut e = CMatrix::zeros(n, n);
        let mut x = CVector::zeros(n);
        for k in 0..CAUCHY_NODES {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / CAUCHY_NODES as f64;
            let (ek, xk) = self.direct_level(level, lambda + C64::from_polar(radius, theta))?;
            e += ek;
            x += xk;
        }
        let w = 1.0 / CAUCHY_NODES as f64;
        Ok((e * c64(w, 0.0), x * c64(w, 0.0)))
    }

    fn direct_level(&self, level: usize, lambda: C64) -> Result<(CMatrix, CVector)> {
        let u = &self.data.u;
        let seed = &self.frame.seed;
        let mut e = vacuum_e(seed, u, lambda)?;
        let mut x = vacuum_x(seed, u, lambda)?;
        for (layer, data) in self.frame.layers[..level].iter().zip(&self.data.layers) {
            for p in layer.singular_points() {
                let tol = pole_tol(p);
                if (lambda - p).norm() <= tol {
                    return Err(Error::AtPole { lambda, pole: p, tol });
                }
            }
            match (layer, data) {
                (Layer::OnePole { z, projection, .. }, LayerData::OnePole { pi_tilde, eta }) => {
                    let zb = z.conj();
                    let pt = pi_tilde.matrix();
                    let shift = (&e * (pt * eta)) * ((zb - z) / (lambda - z));
                    let perp = simple_element(zb, *z, projection.complement().matrix(), lambda);
                    x = perp * (x - shift);
                    let left = simple_element(*z, zb, projection.matrix(), lambda);
                    let right = simple_element(zb, *z, pt, lambda);
                    e = left * e * right;
                }
                (Layer::Translation { alpha, b }, LayerData::Translation { y }) => {
                    let s = IM / (lambda - c64(0.0, *alpha));
                    x += (real_vector(b) - &e * y) * s;
                }
                _ => unreachable!("layer data out of step with layers"),
            }
        }
        Ok((e, x))
    }

    /// `h(u)`: the seed profile plus every layer's increment.
    pub fn h(&self) -> CVector {
        let mut h = real_vector(&self.frame.seed.h(&self.data.u));
        for (layer, data) in self.frame.layers.iter().zip(&self.data.layers) {
            match (layer, data) {
                (Layer::OnePole { z, .. }, LayerData::OnePole { pi_tilde, eta }) => {
                    h += (pi_tilde.matrix() * eta) * Layer::coefficient(*z);
                }
                (Layer::Translation { .. }, LayerData::Translation { y }) => h += y,
                _ => unreachable!(),
            }
        }
        h
    }

    /// `β(u)`: zero for the vacuum, plus `i(z−z̄)π̃_*` per one-pole layer.
    pub fn beta(&self) -> CMatrix {
        let n = self.frame.dim();
        let mut beta = CMatrix::zeros(n, n);
        for (layer, data) in self.frame.layers.iter().zip(&self.data.layers) {
            if let (Layer::OnePole { z, .. }, LayerData::OnePole { pi_tilde, .. }) = (layer, data) {
                beta += star_reduce(pi_tilde.matrix()) * Layer::coefficient(*z);
            }
        }
        beta
    }

    /// Closed-form potential `φ − 2α ηᵗπ̃η` accumulated over real layers.
    pub fn phi_closed(&self) -> Result<Option<C64>> {
        if !self.frame.has_closed_phi() {
            return Ok(None);
        }
        let mut phi = c64(self.frame.seed.phi(&self.data.u)?, 0.0);
        for (layer, data) in self.frame.layers.iter().zip(&self.data.layers) {
            if let (Layer::OnePole { z, .. }, LayerData::OnePole { pi_tilde, eta }) = (layer, data) {
                phi += (eta.transpose() * pi_tilde.matrix() * eta)[(0, 0)] * Layer::coefficient(*z);
            }
        }
        Ok(Some(phi))
    }

    /// `∂E/∂λ(u,0)` by a 4th-order central difference with one Richardson step.
    pub fn de_dlambda_at_zero(&self) -> Result<CMatrix> {
        let d = |h: f64| -> Result<CMatrix> {
            let f = |t: f64| self.eval(c64(t, 0.0)).map(|(e, _)| e);
            Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * c64(8.0, 0.0)) * c64(1.0 / (12.0 * h), 0.0))
        };
        let coarse = d(DLAMBDA_STEP)?;
        let fine = d(0.5 * DLAMBDA_STEP)?;
        Ok((fine * c64(16.0, 0.0) - coarse) * c64(1.0 / 15.0, 0.0))
    }
}

fn clearance(lambda: C64, points: &[C64], radius: f64) -> f64 {
    points.iter().fold(f64::INFINITY, |m, p| m.min(((lambda - p).norm() - radius).abs()))
}

pub fn frame_eval(frame: &ExtendedFrame, u: &[f64], lambda: C64) -> Result<(CMatrix, CVector)> {
    frame.at(u)?.eval(lambda)
}

pub fn frame_dlambda_at_zero(frame: &ExtendedFrame, u: &[f64]) -> Result<CMatrix> {
    frame.at(u)?.de_dlambda_at_zero()
}

/// Layer data for every point of a grid, filled in parallel.
pub struct FrameGrid<'a> {
    frame: &'a ExtendedFrame,
    grid: Grid,
    data: Vec<PointData>,
}

impl<'a> FrameGrid<'a> {
    pub fn build(frame: &'a ExtendedFrame, grid: &Grid) -> Result<Self> {
        if grid.dim() != frame.dim() {
            return Err(Error::Dimension(format!("grid has {} axes, frame has dimension {}", grid.dim(), frame.dim())));
        }
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| frame.point_data(&grid.point(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frame, grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> FramePoint<'_> {
        FramePoint::from_data(self.frame, &self.data[i])
    }

    /// Evaluate `f` at every point in parallel, in grid order.
    pub fn map<T: Send, F: Fn(&FramePoint<'_>) -> Result<T> + Sync>(&self, f: F) -> Result<Vec<T>> {
        (0..self.len()).into_par_iter().map(|i| f(&self.point(i))).collect()
    }
}

/// Quadrature used for path integrals of `Σ h_i² du_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiRule {
    /// Trapezoid on the grid nodes (plus the origin), second order.
    Trapezoid,
    /// Composite Gauss-Legendre with this many nodes per grid step, using
    /// exact off-grid `h`.
    Gauss(usize),
}

/// Axis nodes extended to reach the origin at the grid's own spacing.
fn augmented_nodes(axis: &Axis) -> (Vec<f64>, usize) {
    let mut nodes = axis.coords();
    let step = if axis.points > 1 { axis.step() } else { 1.0 };
    if axis.min > 0.0 {
        let mut t = axis.min - step;
        while t > 1e-12 * step {
            nodes.push(t);
            t -= step;
        }
    } else if axis.max < 0.0 {
        let mut t = axis.max + step;
        while t < -1e-12 * step {
            nodes.push(t);
            t += step;
        }
    }
    if !nodes.iter().any(|&t| t.abs() <= 1e-14 * step) {
        nodes.push(0.0);
    }
    nodes.sort_by(f64::total_cmp);
    let zero = nodes.iter().position(|&t| t.abs() <= 1e-14 * step).unwrap();
    nodes[zero] = 0.0;
    (nodes, zero)
}

/// `φ(u) = ∫ Σ h_i² du_i` from the origin along the staircase path that
/// moves through the axes in `order`, at every grid point.
pub fn integrate_phi<H>(h_at: H, grid: &Grid, order: &[usize], rule: PhiRule) -> Result<Vec<C64>>
where
    H: Fn(&[f64]) -> Result<CVector> + Sync,
{
    let n = grid.dim();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidPath(format!("{order:?} is not a permutation of the axes")));
    }
    match rule {
        PhiRule::Trapezoid => phi_trapezoid(&h_at, grid, order),
        PhiRule::Gauss(m) => phi_gauss(&h_at, grid, order, m.max(1)),
    }
}

fn phi_trapezoid<H>(h_at: &H, grid: &Grid, order: &[usize]) -> Result<Vec<C64>>
where
    H: Fn(&[f64]) -> Result<CVector> + Sync,
{
    let (nodes, zeros): (Vec<_>, Vec<_>) = grid.axes.iter().map(augmented_nodes).unzip();
    let aug = Grid { axes: nodes.iter().map(|v| Axis::new(v[0], *v.last().unwrap(), v.len())).collect() };
    let coords = |idx: &[usize]| -> Vec<f64> { idx.iter().enumerate().map(|(d, &k)| nodes[d][k]).collect() };
    let sq: Vec<CVector> = (0..aug.len())
        .into_par_iter()
        .map(|i| h_at(&coords(&aug.multi_index(i))).map(|h| h.map(|v| v * v)))
        .collect::<Result<_>>()?;
    let mut phi = vec![C64::new(0.0, 0.0); aug.len()];
    for (d, &a) in order.iter().enumerate() {
        let stride = aug.stride(a);
        let len = aug.axes[a].points;
        for start in 0..aug.len() {
            let idx = aug.multi_index(start);
            if idx[a] != zeros[a] || order[d + 1..].iter().any(|&b| idx[b] != zeros[b]) {
                continue;
            }
            let base = start;
            let at = |k: usize| base - zeros[a] * stride + k * stride;
            for k in zeros[a] + 1..len {
                let dt = nodes[a][k] - nodes[a][k - 1];
                phi[at(k)] = phi[at(k - 1)] + (sq[at(k)][a] + sq[at(k - 1)][a]) * (0.5 * dt);
            }
            for k in (0..zeros[a]).rev() {
                let dt = nodes[a][k] - nodes[a][k + 1];
                phi[at(k)] = phi[at(k + 1)] + (sq[at(k)][a] + sq[at(k + 1)][a]) * (0.5 * dt);
            }
        }
    }
    // Pick out the original grid nodes.
    Ok((0..grid.len())
        .map(|i| {
            let idx = grid.multi_index(i);
            let aidx: Vec<usize> = idx
                .iter()
                .enumerate()
                .map(|(d, &k)| {
                    let t = grid.axes[d].coord(k);
                    (0..nodes[d].len())
                        .min_by(|&a, &b| (nodes[d][a] - t).abs().total_cmp(&(nodes[d][b] - t).abs()))
                        .unwrap()
                })
                .collect();
            phi[aug.flat_index(&aidx)]
        })
        .collect())
}

fn phi_gauss<H>(h_at: &H, grid: &Grid, order: &[usize], m: usize) -> Result<Vec<C64>>
where
    H: Fn(&[f64]) -> Result<CVector> + Sync,
{
    let (gx, gw) = quadrature::gauss_legendre(m);
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let target = grid.point(i);
            let mut pos = vec![0.0; grid.dim()];
            let mut total = C64::new(0.0, 0.0);
            for &a in order {
                let (t0, t1) = (0.0, target[a]);
                let step = if grid.axes[a].points > 1 { grid.step(a) } else { 1.0 };
                let pieces = ((t1 - t0).abs() / step).ceil().max(1.0) as usize;
                let piece = (t1 - t0) / pieces as f64;
                for p in 0..pieces {
                    let mid = t0 + (p as f64 + 0.5) * piece;
                    for (x, w) in gx.iter().zip(&gw) {
                        pos[a] = mid + 0.5 * piece * x;
                        let h = h_at(&pos)?;
                        total += h[a] * h[a] * (0.5 * piece * w);
                    }
                }
                pos[a] = t1;
            }
            Ok(total)
        })
        .collect()
}

/// `h`, `β` on the grid from the accumulated closed-form updates, `φ` by the
/// trapezoid rule along axis-ordered paths, and the closed-form `φ` when the
/// history admits one.
pub fn metric_from_frame(frame: &ExtendedFrame, grid: &Grid) -> Result<EgoroffMetric> {
    let fg = FrameGrid::build(frame, grid)?;
    let h = fg.map(|p| Ok(p.h()))?;
    let beta = fg.map(|p| Ok(p.beta()))?;
    let phi_closed = if frame.has_closed_phi() {
        Some(fg.map(|p| Ok(p.phi_closed()?.expect("closed form available")))?)
    } else {
        None
    };
    let order: Vec<usize> = (0..frame.dim()).collect();
    let phi = integrate_phi(|u| Ok(frame.at(u)?.h()), grid, &order, PhiRule::Trapezoid)?;
    let metric = EgoroffMetric { grid: grid.clone(), h, beta, phi, phi_closed };
    let (count, min) = metric.h.iter().flat_map(|v| v.iter()).fold((0usize, f64::INFINITY), |(c, m), z| {
        (c + usize::from(z.re <= 0.0), m.min(z.re))
    });
    if count > 0 {
        return Err(Error::NonPositive { count, min, metric: Box::new(metric) });
    }
    Ok(metric)
}

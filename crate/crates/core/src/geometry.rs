//! Metrics, rotation coefficients and the geometric invariant checks.
//!
//! Derivatives in u are second-order finite differences: central in the
//! interior, one-sided `(−3f₀ + 4f₁ − f₂)/2h` at the boundary.

use rayon::prelude::*;

use crate::algebra::{c64, max_abs, real_vector, CMatrix, CVector, RVector, C64, IM};
use crate::error::{Error, Result};
use crate::frames::{FrameGrid, Grid, ExtendedFrame};
use crate::report::{CheckRecord, VerificationReport};

/// Central differences need this many points per axis.
pub const MIN_FD_POINTS: usize = 5;

/// Grid-sampled Egoroff metric data.
#[derive(Clone, Debug)]
pub struct EgoroffMetric {
    pub grid: Grid,
    pub h: Vec<CVector>,
    pub beta: Vec<CMatrix>,
    /// Path-integrated potential.
    pub phi: Vec<C64>,
    /// Closed-form potential, when the dressing history has one.
    pub phi_closed: Option<Vec<C64>>,
}

/// Positions `X(u,λ)` on a grid.
#[derive(Clone, Debug)]
pub struct ImmersionSample {
    pub lambda: C64,
    pub grid: Grid,
    pub x: Vec<CVector>,
}

pub fn sample_immersion(frame: &ExtendedFrame, grid: &Grid, lambda: C64) -> Result<ImmersionSample> {
    let fg = FrameGrid::build(frame, grid)?;
    let x = fg.map(|p| Ok(p.eval(lambda)?.1))?;
    Ok(ImmersionSample { lambda, grid: grid.clone(), x })
}

/// `∂f/∂u_axis` at every grid point.
pub fn finite_difference(grid: &Grid, axis: usize, f: impl Fn(usize) -> C64) -> Vec<C64> {
    let m = grid.axes[axis].points;
    let h = grid.step(axis);
    let stride = grid.stride(axis);
    (0..grid.len())
        .map(|i| {
            if m < 3 {
                return c64(f64::NAN, 0.0);
            }
            let k = grid.multi_index(i)[axis];
            if k == 0 {
                (f(i) * -3.0 + f(i + stride) * 4.0 - f(i + 2 * stride)) / (2.0 * h)
            } else if k == m - 1 {
                (f(i) * 3.0 - f(i - stride) * 4.0 + f(i - 2 * stride)) / (2.0 * h)
            } else {
                (f(i + stride) - f(i - stride)) / (2.0 * h)
            }
        })
        .collect()
}

fn too_coarse(grid: &Grid) -> bool {
    grid.axes.iter().any(|a| a.points < MIN_FD_POINTS)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Darboux-Egoroff residuals:
/// `(β_ij)_{u_k} − β_ik β_kj` for distinct `i, j, k`, and
/// `(β_ij)_{u_i} + (β_ij)_{u_j} + Σ_k β_ik β_kj` for `i ≠ j`;
/// plus symmetry and zero-diagonal residuals of `β` itself.
pub fn check_darboux_egoroff(metric: &EgoroffMetric, tol: f64, structure_tol: f64) -> VerificationReport {
    let grid = &metric.grid;
    let n = grid.dim();
    let beta = &metric.beta;
    let mut report = VerificationReport::new();
    let symmetry = max_of(beta.iter().map(|b| max_abs(&(b - b.transpose()))));
    let diagonal = max_of(beta.iter().map(|b| max_abs(&b.diagonal())));
    report.push(CheckRecord::measured("beta_symmetry", symmetry, structure_tol));
    report.push(CheckRecord::measured("beta_zero_diagonal", diagonal, structure_tol));
    if too_coarse(grid) {
        report.push(CheckRecord::skipped("darboux_egoroff", tol, "needs at least 5 points per axis"));
        return report;
    }
    // d[k][(i,j)] = ∂_k β_ij
    let d: Vec<Vec<Vec<C64>>> = (0..n)
        .map(|k| {
            (0..n * n)
                .map(|ij| finite_difference(grid, k, |p| beta[p][(ij / n, ij % n)]))
                .collect()
        })
        .collect();
    let mut off = 0.0f64;
    let mut diag = 0.0f64;
    for p in 0..grid.len() {
        let b = &beta[p];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..n {
                    if k != i && k != j {
                        off = max_of([off, (d[k][i * n + j][p] - b[(i, k)] * b[(k, j)]).norm()]);
                    }
                }
                let sum: C64 = (0..n).map(|k| b[(i, k)] * b[(k, j)]).sum();
                diag = max_of([diag, (d[i][i * n + j][p] + d[j][i * n + j][p] + sum).norm()]);
            }
        }
    }
    let meta = |r: CheckRecord| r.with_meta("points_per_axis", format!("{:?}", grid.shape()));
    if n >= 3 {
        report.push(meta(CheckRecord::measured("darboux_egoroff.distinct", off, tol)));
    }
    report.push(meta(CheckRecord::measured("darboux_egoroff.pair", diag, tol)));
    report.push(meta(CheckRecord::measured("darboux_egoroff", off.max(diag), tol)));
    report
}

/// `β_ij` against `(h_i)_{u_j} / h_j`.
pub fn check_rotation_consistency(metric: &EgoroffMetric, tol: f64) -> VerificationReport {
    let grid = &metric.grid;
    let n = grid.dim();
    let mut report = VerificationReport::new();
    if too_coarse(grid) {
        report.push(CheckRecord::skipped("rotation_consistency", tol, "needs at least 5 points per axis"));
        return report;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dh = finite_difference(grid, j, |p| metric.h[p][i]);
            for p in 0..grid.len() {
                worst = max_of([worst, (dh[p] - metric.beta[p][(i, j)] * metric.h[p][j]).norm()]);
            }
        }
    }
    report.push(CheckRecord::measured("rotation_consistency", worst, tol));
    report
}

/// Closed-form potential against the path integral, and `dφ = Σ h_i² du_i`
/// by finite differences of the path-integrated `φ`.
pub fn check_potential(metric: &EgoroffMetric, tol: f64) -> VerificationReport {
    let mut report = VerificationReport::new();
    match &metric.phi_closed {
        Some(closed) => {
            let r = max_of(closed.iter().zip(&metric.phi).map(|(a, b)| (a - b).norm()));
            report.push(CheckRecord::measured("phi_closed_vs_path", r, tol));
        }
        None => report.push(CheckRecord::skipped("phi_closed_vs_path", tol, "no closed form for this history")),
    }
    if too_coarse(&metric.grid) {
        report.push(CheckRecord::skipped("phi_gradient", tol, "needs at least 5 points per axis"));
        return report;
    }
    let mut worst = 0.0f64;
    for a in 0..metric.grid.dim() {
        let d = finite_difference(&metric.grid, a, |p| metric.phi[p]);
        for p in 0..metric.grid.len() {
            worst = max_of([worst, (d[p] - metric.h[p][a] * metric.h[p][a]).norm()]);
        }
    }
    report.push(CheckRecord::measured("phi_gradient", worst, tol));
    report
}

/// `∂X/∂u_i` by finite differences against `h_i E e_i`.
pub fn check_position_equation(frame: &ExtendedFrame, grid: &Grid, lambda: C64, tol: f64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    if too_coarse(grid) {
        report.push(CheckRecord::skipped("position_equation", tol, "needs at least 5 points per axis"));
        return Ok(report);
    }
    let fg = FrameGrid::build(frame, grid)?;
    let vals = fg.map(|p| {
        let (e, x) = p.eval(lambda)?;
        Ok((e, x, p.h()))
    })?;
    let n = grid.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for comp in 0..n {
            let d = finite_difference(grid, i, |p| vals[p].1[comp]);
            for p in 0..grid.len() {
                let exact = vals[p].0[(comp, i)] * vals[p].2[i];
                worst = max_of([worst, (d[p] - exact).norm()]);
            }
        }
    }
    report.push(CheckRecord::measured("position_equation", worst, tol).with_meta("lambda", lambda));
    Ok(report)
}

/// `Im((∂_iX)*∂_jX)` and `(∂_iX)*∂_iX − |h_i|²` with the exact tangents
/// `∂_iX = h_i E e_i`. Skipped unless `λ` is real.
pub fn check_lagrangian(frame: &ExtendedFrame, grid: &Grid, lambda: C64, tol: f64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    if lambda.im != 0.0 {
        report.push(CheckRecord::skipped("lagrangian", tol, "λ is not real, so E is not unitary"));
        report.push(CheckRecord::skipped("tangent_metric", tol, "λ is not real, so E is not unitary"));
        return Ok(report);
    }
    let fg = FrameGrid::build(frame, grid)?;
    let res = fg.map(|p| {
        let (e, _) = p.eval(lambda)?;
        let h = p.h();
        let n = h.len();
        let tangents = CMatrix::from_fn(n, n, |r, c| e[(r, c)] * h[c]);
        let gram = tangents.adjoint() * &tangents;
        let omega = max_of(gram.iter().map(|z| z.im.abs()));
        let metric = max_of((0..n).map(|i| (gram[(i, i)].re - h[i].norm_sqr()).abs()));
        Ok((omega, metric))
    })?;
    let meta = |r: CheckRecord| r.with_meta("lambda", lambda).with_meta("grid_points", grid.len());
    report.push(meta(CheckRecord::measured("lagrangian", max_of(res.iter().map(|r| r.0)), tol)));
    report.push(meta(CheckRecord::measured("tangent_metric", max_of(res.iter().map(|r| r.1)), tol)));
    Ok(report)
}

/// `|‖X − iλ^{-1}c‖ − ‖c‖/|λ||` over the sample. The centre `iλ^{-1}c`
/// follows from `X = −iλ^{-1}(E h − c)`.
pub fn check_sphere(sample: &ImmersionSample, c: &RVector, tol: f64) -> VerificationReport {
    let mut report = VerificationReport::new();
    let lambda = sample.lambda;
    if lambda.im != 0.0 || lambda.re == 0.0 {
        report.push(CheckRecord::skipped("sphere", tol, "needs real nonzero λ"));
        return report;
    }
    let centre = real_vector(c) * (IM / lambda);
    let radius = c.norm() / lambda.re.abs();
    let worst = max_of(sample.x.iter().map(|x| ((x - &centre).norm() - radius).abs()));
    report.push(
        CheckRecord::measured("sphere", worst, tol).with_meta("lambda", lambda).with_meta("radius", radius),
    );
    report
}

/// ∂-invariance: `dh + [δ,β]h = 0` (all components), its diagonal part
/// `(h_i)_{u_i} = −Σ_j β_ij h_j`, and constancy of `‖h‖²`.
pub fn check_partial_invariance(metric: &EgoroffMetric, tol: f64) -> VerificationReport {
    let grid = &metric.grid;
    let n = grid.dim();
    let mut report = VerificationReport::new();
    let norms: Vec<f64> = metric.h.iter().map(|h| h.iter().map(|v| (v * v).re).sum()).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    report.push(CheckRecord::measured("norm_constancy", hi - lo, tol));
    if too_coarse(grid) {
        report.push(CheckRecord::skipped("partial_invariance", tol, "needs at least 5 points per axis"));
        return report;
    }
    let mut full = 0.0f64;
    let mut diag = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let d = finite_difference(grid, j, |p| metric.h[p][i]);
            for p in 0..grid.len() {
                let b = &metric.beta[p];
                let h = &metric.h[p];
                let expected = if i == j {
                    -(0..n).map(|k| b[(j, k)] * h[k]).sum::<C64>()
                } else {
                    b[(i, j)] * h[j]
                };
                let r = (d[p] - expected).norm();
                full = max_of([full, r]);
                if i == j {
                    diag = max_of([diag, r]);
                }
            }
        }
    }
    let mut grad = 0.0f64;
    for j in 0..n {
        let d = finite_difference(grid, j, |p| c64(norms[p], 0.0));
        grad = max_of([grad, max_of(d.iter().map(|z| z.norm()))]);
    }
    report.push(CheckRecord::measured("partial_invariance", full, tol));
    report.push(CheckRecord::measured("partial_invariance.diagonal", diag, tol));
    report.push(CheckRecord::measured("norm_gradient", grad, tol));
    report
}

/// The `λ → 0` net on a grid.
#[derive(Clone, Debug)]
pub struct LimitNet {
    pub points: Vec<RVector>,
    /// Largest `|Im X(u,0)|`.
    pub imaginary: f64,
    /// Spherical frames only: distance between `X(u,0)` and
    /// `−i ∂E/∂λ(u,0) h(u)`.
    pub derivative_mismatch: Option<f64>,
}

/// `X(u,0)`, asserted real to `tol`.
pub fn limit_net(frame: &ExtendedFrame, grid: &Grid, tol: f64) -> Result<LimitNet> {
    let fg = FrameGrid::build(frame, grid)?;
    let spherical = crate::dressing::is_spherical(frame);
    let vals = fg.map(|p| {
        let (_, x) = p.eval(c64(0.0, 0.0))?;
        let mismatch = if spherical {
            let alt = p.de_dlambda_at_zero()? * p.h() * (-IM);
            Some(max_abs(&(alt - &x)))
        } else {
            None
        };
        Ok((x, mismatch))
    })?;
    let imaginary = max_of(vals.iter().map(|(x, _)| x.iter().fold(0.0f64, |m, z| m.max(z.im.abs()))));
    if !(imaginary <= tol) {
        return Err(Error::NonReal(imaginary));
    }
    let derivative_mismatch = spherical.then(|| max_of(vals.iter().map(|(_, m)| m.unwrap())));
    let points = vals.iter().map(|(x, _)| x.map(|z| z.re)).collect();
    Ok(LimitNet { points, imaginary, derivative_mismatch })
}

/// Affine-chart coordinates `Y_j / Y_chart` (`j ≠ chart`) of the recentred
/// immersion `Y = X − iλ^{-1}c = −iλ^{-1}E h`.
pub fn hopf_project(sample: &ImmersionSample, c: &RVector, chart: usize) -> Result<Vec<Vec<C64>>> {
    let lambda = sample.lambda;
    if lambda.norm() == 0.0 {
        return Err(Error::InvalidPath("the Hopf projection needs λ ≠ 0".into()));
    }
    let n = c.len();
    if chart >= n {
        return Err(Error::Dimension(format!("chart {chart} out of range for dimension {n}")));
    }
    let shift = real_vector(c) * (-IM / lambda);
    sample
        .x
        .par_iter()
        .map(|x| {
            let y = x + &shift;
            let pivot = y[chart];
            if pivot.norm() < 1e-8 {
                return Err(Error::ChartSingular { chart, modulus: pivot.norm() });
            }
            Ok((0..n).filter(|&j| j != chart).map(|j| y[j] / pivot).collect())
        })
        .collect()
}

/// `‖E(λ̄)*E(λ) − I‖` and `‖E(λ)ᵗE(−λ) − I‖` at the given `(u, λ)` pairs.
pub fn check_frame_reality(
    frame: &ExtendedFrame,
    samples: &[(Vec<f64>, C64)],
    tol: f64,
) -> Result<VerificationReport> {
    let res = samples
        .par_iter()
        .map(|(u, l)| {
            let p = frame.at(u)?;
            let (e, _) = p.eval(*l)?;
            let (ebar, _) = p.eval(l.conj())?;
            let (eneg, _) = p.eval(-*l)?;
            let n = e.nrows();
            let id = CMatrix::identity(n, n);
            let tau = max_abs(&(ebar.adjoint() * &e - &id));
            let sigma = max_abs(&(e.transpose() * eneg - id));
            let unitary = if l.im == 0.0 { max_abs(&(e.adjoint() * &e - CMatrix::identity(n, n))) } else { 0.0 };
            Ok((tau, sigma, unitary))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport::new();
    let meta = |r: CheckRecord| r.with_meta("samples", samples.len());
    report.push(meta(CheckRecord::measured("tau_reality", max_of(res.iter().map(|r| r.0)), tol)));
    if frame.is_sigma_compatible() {
        report.push(meta(CheckRecord::measured("sigma_reality", max_of(res.iter().map(|r| r.1)), tol)));
    } else {
        report.push(CheckRecord::info(
            "sigma_reality",
            max_of(res.iter().map(|r| r.1)),
            "history contains a factor that is only τ-real",
        ));
    }
    report.push(meta(CheckRecord::measured("unitarity", max_of(res.iter().map(|r| r.2)), tol)));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{metric_from_frame, SeedProfile};

    #[test]
    fn vacuum_metric_is_trivially_flat() {
        let frame = ExtendedFrame::vacuum(SeedProfile::constant(&[1.0, 2.0, 0.5]).unwrap());
        let grid = Grid::cube(3, -0.5, 0.5, 5).unwrap();
        let m = metric_from_frame(&frame, &grid).unwrap();
        let rep = check_darboux_egoroff(&m, 1e-14, 1e-14);
        assert_eq!(rep.residual("darboux_egoroff"), 0.0);
        for (i, phi) in m.phi.iter().enumerate() {
            let u = grid.point(i);
            assert!((phi.re - (u[0] + 4.0 * u[1] + 0.25 * u[2])).abs() < 1e-14);
        }
    }

    #[test]
    fn random_symmetric_beta_fails_darboux_egoroff() {
        let grid = Grid::cube(3, 0.0, 1.0, 6).unwrap();
        let beta: Vec<CMatrix> = (0..grid.len())
            .map(|p| {
                let u = grid.point(p);
                let s = c64((3.0 * u[0] + u[1]).sin() + u[2], 0.0);
                let mut b = CMatrix::zeros(3, 3);
                b[(0, 1)] = s;
                b[(1, 0)] = s;
                b[(1, 2)] = c64(u[0] * u[1], 0.0);
                b[(2, 1)] = b[(1, 2)];
                b
            })
            .collect();
        let m = EgoroffMetric {
            grid: grid.clone(),
            h: vec![CVector::from_element(3, c64(1.0, 0.0)); grid.len()],
            beta,
            phi: vec![c64(0.0, 0.0); grid.len()],
            phi_closed: None,
        };
        let rep = check_darboux_egoroff(&m, 1e-4, 1e-12);
        assert!(rep.residual("darboux_egoroff") > 0.1);
        assert!(!rep.all_passed());
    }

    #[test]
    fn finite_differences_are_exact_on_quadratics() {
        let grid = Grid::cube(2, -1.0, 1.0, 7).unwrap();
        let f = |p: usize| {
            let u = grid.point(p);
            c64(u[0] * u[0] + 3.0 * u[1], 0.0)
        };
        let d0 = finite_difference(&grid, 0, f);
        for (p, v) in d0.iter().enumerate() {
            assert!((v.re - 2.0 * grid.point(p)[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_torus_sphere_and_hopf() {
        let r = [1.0, 2.0];
        let frame = ExtendedFrame::vacuum(SeedProfile::constant(&r).unwrap());
        let grid = Grid::cube(2, -1.0, 1.0, 6).unwrap();
        let lambda = c64(0.7, 0.0);
        let s = sample_immersion(&frame, &grid, lambda).unwrap();
        let c = RVector::from_vec(r.to_vec());
        assert!(check_sphere(&s, &c, 1e-10).all_passed());
        let proj = hopf_project(&s, &c, 0).unwrap();
        for (p, v) in proj.iter().enumerate() {
            let u = grid.point(p);
            // Y₂/Y₁ = (r₂/r₁) e^{iλ(u₂−u₁)}
            let expected = C64::from_polar(2.0, 0.7 * (u[1] - u[0]));
            assert!((v[0] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn lagrangian_skipped_off_real_axis() {
        let frame = ExtendedFrame::vacuum(SeedProfile::constant(&[1.0, 1.0]).unwrap());
        let grid = Grid::cube(2, 0.0, 1.0, 3).unwrap();
        let rep = check_lagrangian(&frame, &grid, c64(0.5, 0.5), 1e-12).unwrap();
        assert!(rep.checks.iter().all(|c| c.status == crate::report::CheckStatus::Skipped));
    }
}

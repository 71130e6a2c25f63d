//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use dressing_core::algebra::{c64, max_abs, project_onto_span};
use dressing_core::dressing::{dress_real_translated, dress_spherical_unchecked, SphericalSeedData};
use dressing_core::frames::{integrate_phi, FrameGrid, LayerData, PhiRule};
use dressing_core::geometry::{
    check_darboux_egoroff, check_frame_reality, check_lagrangian, check_position_equation, check_potential,
    check_rotation_consistency, check_sphere, limit_net, sample_immersion,
};
use dressing_core::oracle::{frame_convergence, integrate_bf, integrate_frame};
use dressing_core::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Suite {
    failures: usize,
    total: usize,
}

impl Suite {
    fn line(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failures += 1;
        }
        println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn below(&mut self, id: &str, name: &str, value: f64, tol: f64) {
        self.line(id, name, value < tol, format!("{value:.3e} < {tol:.0e}"));
    }

    fn ratio(&mut self, id: &str, name: &str, coarse: f64, fine: f64, target: f64) {
        let r = coarse / fine;
        let pass = (r - target).abs() <= 0.8;
        self.line(id, name, pass, format!("ratio {r:.3} ({coarse:.3e} -> {fine:.3e}), want {target}±0.8"));
    }

    fn order(&mut self, id: &str, name: &str, coarse: f64, fine: f64, target: f64) {
        let p = estimate_order(coarse, fine);
        let pass = (p - target).abs() <= 0.8;
        self.line(id, name, pass, format!("order {p:.3} ({coarse:.3e} -> {fine:.3e}), want {target}±0.8"));
    }

    fn run(&mut self, id: &str, body: impl FnOnce(&mut Suite) -> Result<()>) {
        let t = Instant::now();
        if let Err(e) = body(self) {
            self.line(id, "completed without error", false, e.to_string());
        }
        println!("     [{id}] {:.2}s", t.elapsed().as_secs_f64());
    }
}

fn line(v: &[C64]) -> HermitianProjection {
    project_onto_span(&CMatrix::from_column_slice(v.len(), 1, v)).unwrap()
}

fn real_line(v: &[f64]) -> HermitianProjection {
    line(&v.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>())
}

fn seed3() -> SeedProfile {
    SeedProfile::new(vec![
        Profile::polynomial(vec![1.0, 0.2, 0.1], (-2.0, 2.0)).unwrap(),
        Profile::polynomial(vec![1.3, -0.1], (-2.0, 2.0)).unwrap(),
        Profile::constant(0.8).unwrap(),
    ])
    .unwrap()
}

/// Metric on the grid without the positivity gate; the checks below do not
/// depend on the sign of h.
fn metric(frame: &ExtendedFrame, grid: &Grid) -> Result<EgoroffMetric> {
    match metric_from_frame(frame, grid) {
        Ok(m) => Ok(m),
        Err(Error::NonPositive { metric, .. }) => Ok(*metric),
        Err(e) => Err(e),
    }
}

fn random_samples(rng: &mut StdRng, n: usize, count: usize) -> Vec<(Vec<f64>, C64)> {
    (0..count)
        .map(|_| {
            let u = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = c64(rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5));
            (u, l)
        })
        .collect()
}

fn ac1(s: &mut Suite) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(1);
    let vac = ExtendedFrame::vacuum(seed3());
    let f1 = dress_real(&vac, 0.6, &real_line(&[1.0, 1.0, 0.0]))?;
    let f2 = dress_two_pole(&f1, c64(0.4, 0.7), &line(&[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.5, 0.0)]))?;
    let f3 = dress_translation(&f2, 0.9, &RVector::from_vec(vec![0.3, -0.2, 0.5]))?;
    for (name, frame) in [("vacuum", &vac), ("real", &f1), ("real+two-pole", &f2), ("real+two-pole+translation", &f3)] {
        let samples = random_samples(&mut rng, 3, 200);
        let rep = check_frame_reality(frame, &samples, 1e-10)?;
        s.below("AC1", &format!("{name}: ‖E(λ̄)*E(λ)−I‖ over 200 samples"), rep.residual("tau_reality"), 1e-10);
        s.below("AC1", &format!("{name}: ‖E(λ)ᵗE(−λ)−I‖ over 200 samples"), rep.residual("sigma_reality"), 1e-10);
    }
    Ok(())
}

fn soliton3() -> Result<ExtendedFrame> {
    let seed = SeedProfile::constant(&[1.0, 1.0, 1.0])?;
    let v = 1.0 / 3f64.sqrt();
    dress_real(&ExtendedFrame::vacuum(seed), 0.5, &real_line(&[v, v, v]))
}

fn ac2(s: &mut Suite) -> Result<()> {
    let frame = soliton3()?;
    let coarse = Grid::cube(3, -1.0, 1.0, 17)?;
    let fine = coarse.refined();
    let r1 = check_darboux_egoroff(&metric(&frame, &coarse)?, 1.0, 1e-12).residual("darboux_egoroff");
    let r2 = check_darboux_egoroff(&metric(&frame, &fine)?, 1.0, 1e-12).residual("darboux_egoroff");
    s.ratio("AC2", "Darboux-Egoroff residual ratio, Δu halved (17 -> 33 points/axis)", r1, r2, 4.0);
    let g64 = Grid::cube(3, -1.0, 1.0, 64)?;
    let rep = check_darboux_egoroff(&metric(&frame, &g64)?, 1e-4, 1e-12);
    s.below("AC2", "Darboux-Egoroff residual at 64 points/axis", rep.residual("darboux_egoroff"), 1e-4);
    s.below("AC2", "β̃ symmetry at 64 points/axis", rep.residual("beta_symmetry"), 1e-12);
    Ok(())
}

fn chain3() -> Result<Vec<(&'static str, ExtendedFrame)>> {
    let vac = ExtendedFrame::vacuum(seed3());
    let f1 = dress_real(&vac, 0.7, &real_line(&[1.0, -1.0, 2.0]))?;
    let f2 = dress_two_pole(&f1, c64(-0.3, 1.1), &line(&[c64(0.2, 1.0), c64(1.0, 0.0), c64(0.0, -0.4)]))?;
    let f3 = dress_translation(&f2, 1.4, &RVector::from_vec(vec![0.5, 0.1, -0.3]))?;
    Ok(vec![("vacuum", vac), ("length 1", f1), ("length 2", f2), ("length 3", f3)])
}

fn ac3(s: &mut Suite) -> Result<()> {
    let grid = Grid::cube(3, -1.0, 1.0, 7)?;
    for (name, frame) in chain3()? {
        let mut worst = 0.0f64;
        for l in [0.7, -1.3, 2.1] {
            worst = worst.max(check_lagrangian(&frame, &grid, c64(l, 0.0), 1e-10)?.residual("lagrangian"));
        }
        s.below("AC3", &format!("{name}: max |Im((∂iX)*∂jX)| at λ ∈ {{0.7, −1.3, 2.1}}"), worst, 1e-10);
    }
    Ok(())
}

fn ac4(s: &mut Suite) -> Result<()> {
    let frames = chain3()?;
    let frame = &frames[2].1;
    let coarse = Grid::cube(3, -1.0, 1.0, 9)?;
    for l in [c64(0.9, 0.0), c64(0.4, 0.6)] {
        let r1 = check_position_equation(frame, &coarse, l, 1.0)?.residual("position_equation");
        let r2 = check_position_equation(frame, &coarse.refined(), l, 1.0)?.residual("position_equation");
        s.ratio("AC4", &format!("position equation FD residual ratio at λ = {l}"), r1, r2, 4.0);
    }
    Ok(())
}

fn ac5(s: &mut Suite) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(5);
    let vac = ExtendedFrame::vacuum(SeedProfile::constant(&[1.0, 1.5])?);
    let (z1, z2) = (c64(0.3, 0.8), c64(-0.5, 1.2));
    let pi1 = line(&[c64(1.0, 0.0), c64(0.3, 0.6)]);
    let pi2 = line(&[c64(0.2, -0.4), c64(1.0, 0.0)]);
    let grid = Grid::cube(2, -1.0, 1.0, 10)?;
    let lambdas: Vec<C64> = (0..8).map(|_| c64(rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5))).collect();
    let (_, _, rep) = dress_permuted(&vac, z1, &pi1, z2, &pi2, &grid, &lambdas, 1e-9)?;
    s.below("AC5", "‖F12 − F21‖ over 10×10 grid × 8 λ", rep.residual("permutability.frame"), 1e-9);
    s.below("AC5", "‖h12 − h21‖ on the grid", rep.residual("permutability.h"), 1e-9);
    let (rho1, rho2) = permute_factors(z1, &pi1, z2, &pi2)?;
    let g = |z: C64, p: &HermitianProjection| TwoPointFactor::at(z, p.clone());
    let (a2, a1, b1, b2) = (g(z2, &rho2)?, g(z1, &pi1)?, g(z1, &rho1)?, g(z2, &pi2)?);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l = c64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let lhs = a2.eval(l)? * a1.eval(l)?;
        let rhs = b1.eval(l)? * b2.eval(l)?;
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    s.below("AC5", "‖g(z2,ρ2)g(z1,π1) − g(z1,ρ1)g(z2,π2)‖ at 20 random λ", worst, 1e-10);
    Ok(())
}

fn ac6(s: &mut Suite) -> Result<()> {
    let c = RVector::from_vec(vec![1.0, 2.0, 2.0]);
    let vac = ExtendedFrame::vacuum(SeedProfile::constant(c.as_slice())?);
    let grid = Grid::cube(3, -1.0, 1.0, 9)?;
    let good = real_line(&[2.0, -1.0, 0.0]);
    let frame = dress_spherical(&vac, 0.7, &good)?;
    let mut worst = 0.0f64;
    for l in [0.8, -1.7] {
        let sample = sample_immersion(&frame, &grid, c64(l, 0.0))?;
        worst = worst.max(check_sphere(&sample, &c, 1e-9).residual("sphere"));
    }
    s.below("AC6", "sphere residual |‖X̃ − iλ^{-1}h(0)‖ − ‖h(0)‖/|λ|| at λ ∈ {0.8, −1.7}", worst, 1e-9);
    let fg = FrameGrid::build(&frame, &grid)?;
    let norms = fg.map(|p| Ok((p.h().norm() - c.norm()).abs()))?;
    s.below("AC6", "|‖h̃(u)‖ − ‖h(0)‖| on the grid", norms.iter().cloned().fold(0.0, f64::max), 1e-10);

    let bad = real_line(&[1.0, 1.0, 0.0]);
    let refused = matches!(dress_spherical(&vac, 0.7, &bad), Err(Error::SphericalViolation(_)));
    s.line("AC6", "π·h(0) ≠ 0 is refused with SphericalViolation", refused, format!("refused = {refused}"));
    let forced = dress_spherical_unchecked(&vac, 0.7, &bad)?;
    let sample = sample_immersion(&forced, &grid, c64(0.8, 0.0))?;
    let r = check_sphere(&sample, &c, 1e-9).residual("sphere");
    s.line("AC6", "negative control: forced output fails the sphere check", r > 1e-9, format!("residual {r:.3e} > 1e-9"));
    // The literal centre −iλ^{-1}h(0) does not carry the immersion; reported only.
    let centre = SphericalSeedData { c: c.clone() }.center(c64(0.8, 0.0));
    let literal = sample_immersion(&frame, &grid, c64(0.8, 0.0))?
        .x
        .iter()
        .map(|x| ((x + &centre).norm() - c.norm() / 0.8).abs())
        .fold(0.0, f64::max);
    println!("INFO [AC6] residual about the opposite centre −iλ^{{-1}}h(0): {literal:.3e}");
    Ok(())
}

fn ac7(s: &mut Suite) -> Result<()> {
    let frames = chain3()?;
    let frame = &frames[2].1;
    let lambda = c64(0.6, 0.3);
    let target = [0.8, -0.4, 0.6];
    let reference = frame_eval(frame, &target, lambda)?;
    let dist = |a: &(CMatrix, CVector)| max_abs(&(&a.0 - &reference.0)).max(max_abs(&(&a.1 - &reference.1)));
    let p012 = PathSpec::axis_ordered(&target, &[0, 1, 2]);
    let r1 = dist(&integrate_frame(frame, lambda, &p012, 0.2)?);
    let r2 = dist(&integrate_frame(frame, lambda, &p012, 0.1)?);
    s.order("AC7", "RK4 frame vs algebraic frame, steps 0.2 -> 0.1", r1, r2, 4.0);
    let stable = frame_convergence(frame, lambda, &p012, 0.1, Some(&reference))?;
    println!("INFO [AC7] order from steps 0.1 -> 0.05: {:.3}", stable.order.unwrap_or(f64::NAN));
    let at = frame_convergence(frame, lambda, &p012, 1e-2, Some(&reference))?;
    s.below("AC7", "endpoint residual at step 1e-2", at.residual.unwrap(), 1e-6);
    let swapped = integrate_frame(frame, lambda, &PathSpec::axis_ordered(&target, &[2, 1, 0]), 1e-2)?;
    let swap = max_abs(&(&swapped.0 - &at.value.0)).max(max_abs(&(&swapped.1 - &at.value.1)));
    s.below("AC7", "axis-order swap residual at step 1e-2", swap, 1e-6);
    Ok(())
}

fn ac8(s: &mut Suite) -> Result<()> {
    let base = dress_real(&ExtendedFrame::vacuum(seed3()), 1.1, &real_line(&[0.0, 1.0, 1.0]))?;
    let alpha = 0.6;
    let pi0 = real_line(&[1.0, 0.5, -1.0]);
    let target = [0.6, -0.4, 0.5];
    // Step sizes divide every segment, so the runs are nested.
    let path = PathSpec::axis_ordered(&target, &[0, 1, 2]);
    for b in [RVector::zeros(3), RVector::from_vec(vec![1.0, 0.0, 0.0])] {
        let dressed = dress_real_translated(&base, alpha, &pi0, &b)?;
        let p = dressed.at(&target)?;
        let pi_alg = match &p.layer_data()[1] {
            LayerData::OnePole { pi_tilde, .. } => pi_tilde.matrix().clone(),
            _ => unreachable!(),
        };
        let y_alg = (base.at(&target)?.h() - p.h()) / c64(2.0 * alpha, 0.0);
        let err = |step: f64| -> Result<(f64, f64, f64)> {
            let sol = integrate_bf(&base, alpha, &pi0, &b, &path, step)?;
            Ok((max_abs(&(&sol.pi - &pi_alg)), max_abs(&(&sol.y - &y_alg)), sol.max_correction))
        };
        let (a1, b1, _) = err(0.1)?;
        let (a2, b2, _) = err(0.05)?;
        let (_, _, corr) = err(1e-2)?;
        let tag = format!("b = {:?}", b.as_slice());
        s.order("AC8", &format!("{tag}: integrated π̃ vs algebraic π̃"), a1, a2, 4.0);
        s.order("AC8", &format!("{tag}: integrated y vs (h − h̃)/(2α)"), b1, b2, 4.0);
        s.below("AC8", &format!("{tag}: max per-step projection correction at step 1e-2"), corr, 1e-8);
    }
    Ok(())
}

fn ac9(s: &mut Suite) -> Result<()> {
    let grid = Grid::cube(3, -1.0, 1.0, 7)?;
    let vac = ExtendedFrame::vacuum(seed3());
    let real = dress_real(&vac, 0.8, &real_line(&[1.0, 2.0, -1.0]))?;
    let two = dress_two_pole(&real, c64(0.5, 0.9), &line(&[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, 0.0)]))?;
    let trans = dress_translation(&two, 1.2, &RVector::from_vec(vec![0.4, -0.7, 0.2]))?;
    for (name, frame) in [("real", &real), ("real+two-pole", &two), ("real+two-pole+translation", &trans)] {
        let imag = limit_net(frame, &grid, f64::INFINITY)?.imaginary;
        s.below("AC9", &format!("{name}: ‖Im X(u,0)‖"), imag, 1e-10);
    }
    let c = [1.0, 2.0, 2.0];
    let sph = dress_spherical(
        &ExtendedFrame::vacuum(SeedProfile::constant(&c)?),
        0.9,
        &real_line(&[0.0, 1.0, -1.0]),
    )?;
    let net = limit_net(&sph, &grid, f64::INFINITY)?;
    s.below("AC9", "spherical: ‖Im X(u,0)‖", net.imaginary, 1e-10);
    s.below("AC9", "spherical: X(u,0) vs −i∂E/∂λ(u,0)h(u)", net.derivative_mismatch.unwrap(), 1e-7);
    Ok(())
}

fn ac10(s: &mut Suite) -> Result<()> {
    let base = dress_real(&ExtendedFrame::vacuum(seed3()), 0.7, &real_line(&[1.0, -1.0, 2.0]))?;
    let frame = dress_translation(&base, 0.9, &RVector::from_vec(vec![0.5, 0.3, -0.2]))?;
    let grid = Grid::cube(3, -1.0, 1.0, 9)?;
    let before = FrameGrid::build(&base, &grid)?.map(|p| Ok(p.beta()))?;
    let after = FrameGrid::build(&frame, &grid)?.map(|p| Ok(p.beta()))?;
    let identical = before.iter().zip(&after).all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    s.line("AC10", "β unchanged bit-for-bit by translation", identical, format!("{} grid points compared", grid.len()));
    let r1 = check_rotation_consistency(&metric(&frame, &grid)?, 1.0).residual("rotation_consistency");
    let r2 = check_rotation_consistency(&metric(&frame, &grid.refined())?, 1.0).residual("rotation_consistency");
    s.ratio("AC10", "(h̃_i)_{u_j} − β_ij h̃_j residual ratio, Δu halved", r1, r2, 4.0);
    Ok(())
}

fn ac11(s: &mut Suite) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(11);
    let z = c64(0.6, 0.9);
    let pi = line(&[c64(1.0, 0.0), c64(0.3, 0.8), c64(-0.5, 0.2)]);
    let base = dress_real(&ExtendedFrame::vacuum(seed3()), 1.3, &real_line(&[1.0, 0.0, 1.0]))?;
    let frame = dress_two_pole(&base, z, &pi)?;
    let grid = Grid::cube(3, -1.0, 1.0, 9)?;
    let fg = FrameGrid::build(&frame, &grid)?;
    let im = fg.map(|p| {
        let h = p.h().iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        let b = p.beta().iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        Ok((h, b))
    })?;
    s.below("AC11", "‖Im ĥ‖ on the grid", im.iter().map(|v| v.0).fold(0.0, f64::max), 1e-9);
    s.below("AC11", "‖Im β̂‖ on the grid", im.iter().map(|v| v.1).fold(0.0, f64::max), 1e-9);
    let factor = LoopFactor::TwoPole(TwoPoleFactor::new(z, pi)?);
    let lambdas: Vec<C64> = (0..200).map(|_| c64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect();
    let rep = check_reality(&factor, &lambdas, 1e-10);
    s.below("AC11", "f(z,π): τ reality over 200 λ", rep.residual("tau_reality"), 1e-10);
    s.below("AC11", "f(z,π): σ reality over 200 λ", rep.residual("sigma_reality"), 1e-10);
    let frame_rep = check_frame_reality(&frame, &random_samples(&mut rng, 3, 200), 1e-10)?;
    s.below("AC11", "dressed frame: τ reality over 200 samples", frame_rep.residual("tau_reality"), 1e-10);
    s.below("AC11", "dressed frame: σ reality over 200 samples", frame_rep.residual("sigma_reality"), 1e-10);
    Ok(())
}

fn ac12(s: &mut Suite) -> Result<()> {
    let f1 = dress_real(&ExtendedFrame::vacuum(seed3()), 0.9, &real_line(&[1.0, 1.0, 0.0]))?;
    let frame = dress_real(&f1, 1.4, &real_line(&[0.0, 1.0, -2.0]))?;
    let coarse = Grid::cube(3, -1.0, 1.0, 9)?;
    let r1 = check_potential(&metric(&frame, &coarse)?, 1.0).residual("phi_closed_vs_path");
    let r2 = check_potential(&metric(&frame, &coarse.refined())?, 1.0).residual("phi_closed_vs_path");
    s.ratio("AC12", "closed-form φ̃ vs trapezoid path integral, Δu halved", r1, r2, 4.0);
    let h_at = |u: &[f64]| Ok(frame.at(u)?.h());
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let runs = orders
        .iter()
        .map(|o| integrate_phi(h_at, &coarse, o, PhiRule::Gauss(8)))
        .collect::<Result<Vec<_>>>()?;
    let mut spread = 0.0f64;
    for i in 0..coarse.len() {
        let vals: Vec<C64> = runs.iter().map(|r| r[i]).collect();
        for a in &vals {
            for b in &vals {
                spread = spread.max((a - b).norm());
            }
        }
    }
    s.below("AC12", "axis-permutation spread of the path-integrated φ̃ (6 orders)", spread, 1e-8);
    let closed = FrameGrid::build(&frame, &coarse)?.map(|p| Ok(p.phi_closed()?.unwrap()))?;
    let gap = closed.iter().zip(&runs[0]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("INFO [AC12] closed-form φ̃ vs Gauss path integral: {gap:.3e}");
    Ok(())
}

fn main() -> ExitCode {
    let mut suite = Suite { failures: 0, total: 0 };
    suite.run("AC1", ac1);
    suite.run("AC2", ac2);
    suite.run("AC3", ac3);
    suite.run("AC4", ac4);
    suite.run("AC5", ac5);
    suite.run("AC6", ac6);
    suite.run("AC7", ac7);
    suite.run("AC8", ac8);
    suite.run("AC9", ac9);
    suite.run("AC10", ac10);
    suite.run("AC11", ac11);
    suite.run("AC12", ac12);
    println!("{} of {} acceptance checks passed", suite.total - suite.failures, suite.total);
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

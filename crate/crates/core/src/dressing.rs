//! Dressing transformations acting on extended frames.

use rayon::prelude::*;

use crate::algebra::{
    c64, max_abs, real_vector, solve_vector, star_reduce, CMatrix, CVector, HermitianProjection, RVector, C64, IM,
};
use crate::error::{Error, Result};
use crate::frames::{ExtendedFrame, FrameGrid, Grid, Layer};
use crate::loopfactors::{
    permute_factors, simple_element, LoopFactor, RealOnePoleFactor, TranslationFactor, TwoPointFactor, TwoPoleFactor,
};
use crate::report::{CheckRecord, VerificationReport};

/// Hard threshold for `‖π h(0)‖` in spherical dressing.
pub const SPHERICAL_TOL: f64 = 1e-10;

/// Which value of `X` enters `η = E(u,z̄)^{-1} X(u,·)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EtaConvention {
    /// `X(u, z̄)`: consistent with `η(0) = 0` and the real case.
    #[default]
    Statement,
    /// `X(u, z)`: kept only to show that it breaks the invariants.
    ProofVariant,
}

#[derive(Clone, Debug)]
pub struct DressingRecord {
    pub factor: LoopFactor,
    pub convention: EtaConvention,
    /// The step keeps a ∂-invariant frame ∂-invariant.
    pub preserves_sphere: bool,
}

impl DressingRecord {
    pub fn new(factor: LoopFactor) -> Self {
        Self { factor, convention: EtaConvention::Statement, preserves_sphere: false }
    }

    /// The one-pole and translation layers realizing this factor.
    pub fn layers(&self) -> Result<Vec<Layer>> {
        let one = |z: C64, projection: &HermitianProjection| Layer::OnePole {
            z,
            projection: projection.clone(),
            convention: self.convention,
        };
        match &self.factor {
            LoopFactor::TwoPoint(g) => {
                if (g.zero - g.pole.conj()).norm() > 1e-14 * g.pole.norm().max(1.0) {
                    return Err(Error::InvalidFactor(
                        "only factors with zero at the conjugate of the pole act on frames".into(),
                    ));
                }
                Ok(vec![one(g.pole, &g.projection)])
            }
            LoopFactor::RealOnePole(g) => Ok(vec![one(g.pole(), &g.projection)]),
            LoopFactor::TwoPole(f) => Ok(vec![one(f.z, &f.projection), one(-f.z.conj(), &f.rho)]),
            LoopFactor::Translation(k) => Ok(vec![Layer::Translation { alpha: k.alpha, b: k.b.clone() }]),
        }
    }
}

/// `Ẽ = g_{z,π} E g_{z,π̃}^{-1}`. The returned frame carries `X̃` as well;
/// the E-block does not depend on it.
pub fn dress_frame_e(frame: &ExtendedFrame, z: C64, projection: &HermitianProjection) -> Result<ExtendedFrame> {
    dress_extended(frame, z, projection)
}

/// One-pole dressing by `g_{z,π}` with `z ∉ R`.
pub fn dress_extended(frame: &ExtendedFrame, z: C64, projection: &HermitianProjection) -> Result<ExtendedFrame> {
    dress_extended_with(frame, z, projection, EtaConvention::Statement)
}

pub fn dress_extended_with(
    frame: &ExtendedFrame,
    z: C64,
    projection: &HermitianProjection,
    convention: EtaConvention,
) -> Result<ExtendedFrame> {
    let factor = TwoPointFactor::at(z, projection.clone())?;
    let record = DressingRecord { factor: LoopFactor::TwoPoint(factor), convention, preserves_sphere: false };
    frame.with_record(record)
}

/// Dressing by the real generator `g_{iα,π}`, `π̄ = π`.
pub fn dress_real(frame: &ExtendedFrame, alpha: f64, projection: &HermitianProjection) -> Result<ExtendedFrame> {
    let factor = RealOnePoleFactor::new(alpha, projection.clone())?;
    frame.with_record(DressingRecord::new(LoopFactor::RealOnePole(factor)))
}

/// Whether the frame is ∂-invariant: constant seed, and every step so far
/// preserves that.
pub fn is_spherical(frame: &ExtendedFrame) -> bool {
    frame.seed().is_spherical() && frame.history().iter().all(|r| r.preserves_sphere)
}

/// Real dressing of a ∂-invariant frame; requires `π h(0) = 0`.
pub fn dress_spherical(frame: &ExtendedFrame, alpha: f64, projection: &HermitianProjection) -> Result<ExtendedFrame> {
    if !is_spherical(frame) {
        return Err(Error::NotSpherical("the seed must be constant and every earlier step sphere-preserving".into()));
    }
    let c = real_vector(&frame.seed().h_at_origin());
    let residual = projection.apply_norm(&c);
    if !(residual < SPHERICAL_TOL) {
        return Err(Error::SphericalViolation(residual));
    }
    let factor = RealOnePoleFactor::new(alpha, projection.clone())?;
    let mut record = DressingRecord::new(LoopFactor::RealOnePole(factor));
    record.preserves_sphere = true;
    frame.with_record(record)
}

/// The same step with the precondition skipped. Only for negative controls.
pub fn dress_spherical_unchecked(
    frame: &ExtendedFrame,
    alpha: f64,
    projection: &HermitianProjection,
) -> Result<ExtendedFrame> {
    dress_real(frame, alpha, projection)
}

/// Translation by `k_{iα,b}`: `h̃ = h + E(u,iα)^{-1} b`, `β̃ = β`.
pub fn dress_translation(frame: &ExtendedFrame, alpha: f64, b: &RVector) -> Result<ExtendedFrame> {
    let factor = TranslationFactor::new(alpha, b.clone())?;
    frame.with_record(DressingRecord::new(LoopFactor::Translation(factor)))
}

/// `g_{iα,π}` followed by `k_{−iα,−2αb}`. The resulting `h` is
/// `h − 2α (π̃η + E₁(u,−iα)^{-1} b)` with `E₁` the frame after the first step.
pub fn dress_real_translated(
    frame: &ExtendedFrame,
    alpha: f64,
    projection: &HermitianProjection,
    b: &RVector,
) -> Result<ExtendedFrame> {
    let once = dress_real(frame, alpha, projection)?;
    dress_translation(&once, -alpha, &(b * (-2.0 * alpha)))
}

/// Complex Ribaucour transformation by `f_{z,π} = g_{−z̄,ρ} g_{z,π}`.
pub fn dress_two_pole(frame: &ExtendedFrame, z: C64, projection: &HermitianProjection) -> Result<ExtendedFrame> {
    let factor = TwoPoleFactor::new(z, projection.clone())?;
    frame.with_record(DressingRecord::new(LoopFactor::TwoPole(factor)))
}

/// `h`, `β` after the two-step dressing `g_{z₂,ρ₂} g_{z₁,π₁}`, computed only
/// from the undressed frame:
///
/// `h₁₂ = h + i(z₁−z̄₁)π̃₁η₁ + i(z₂−z̄₂)ρ̃₂η₁₂`,
/// `ρ̃₂ = proj g_{z₁,π̃₁}(z₂)(Im π̃₂)`,
/// `η₁₂ = g_{z̄₁,π̃₁^⊥}(z̄₂)η₂ + (z̄₁−z₁)/(z̄₁−z̄₂) π̃₁η₁`.
pub fn composed_closed_form(
    frame: &ExtendedFrame,
    u: &[f64],
    z1: C64,
    pi1: &HermitianProjection,
    z2: C64,
    pi2: &HermitianProjection,
) -> Result<(CVector, CMatrix)> {
    let p = frame.at(u)?;
    let transport = |z: C64, pi: &HermitianProjection| -> Result<(HermitianProjection, CVector)> {
        let (e, x) = p.eval(z.conj())?;
        let pt = HermitianProjection::onto_span(&(e.adjoint() * pi.basis()))?;
        Ok((pt, solve_vector(&e, &x)?))
    };
    let (pt1, eta1) = transport(z1, pi1)?;
    let (pt2, eta2) = transport(z2, pi2)?;
    let g1 = simple_element(z1, z1.conj(), pt1.matrix(), z2);
    let rho2 = pt2.transported(&g1)?;
    let perp = simple_element(z1.conj(), z1, pt1.complement().matrix(), z2.conj());
    let eta12 = perp * eta2 + (pt1.matrix() * &eta1) * ((z1.conj() - z1) / (z1.conj() - z2.conj()));
    let k1 = IM * (z1 - z1.conj());
    let k2 = IM * (z2 - z2.conj());
    let h = p.h() + (pt1.matrix() * eta1) * k1 + (rho2.matrix() * eta12) * k2;
    let beta = p.beta() + star_reduce(pt1.matrix()) * k1 + star_reduce(rho2.matrix()) * k2;
    Ok((h, beta))
}

/// `F₁₂ = g_{z₂,ρ₂} g_{z₁,π₁} ∗ F` and `F₂₁ = g_{z₁,ρ₁} g_{z₂,π₂} ∗ F`,
/// each built step by step, with a report comparing them on `grid × lambdas`.
pub fn dress_permuted(
    frame: &ExtendedFrame,
    z1: C64,
    pi1: &HermitianProjection,
    z2: C64,
    pi2: &HermitianProjection,
    grid: &Grid,
    lambdas: &[C64],
    tol: f64,
) -> Result<(ExtendedFrame, ExtendedFrame, VerificationReport)> {
    let (rho1, rho2) = permute_factors(z1, pi1, z2, pi2)?;
    let f12 = dress_extended(&dress_extended(frame, z1, pi1)?, z2, &rho2)?;
    let f21 = dress_extended(&dress_extended(frame, z2, pi2)?, z1, &rho1)?;
    let g12 = FrameGrid::build(&f12, grid)?;
    let g21 = FrameGrid::build(&f21, grid)?;
    let diffs = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = (g12.point(i), g21.point(i));
            let mut frame_diff = 0.0f64;
            for &l in lambdas {
                let (ea, xa) = a.eval(l)?;
                let (eb, xb) = b.eval(l)?;
                frame_diff = frame_diff.max(max_abs(&(ea - eb))).max(max_abs(&(xa - xb)));
            }
            let h_diff = max_abs(&(a.h() - b.h()));
            let beta_diff = max_abs(&(a.beta() - b.beta()));
            let (hc, _) = composed_closed_form(frame, a.u(), z1, pi1, z2, pi2)?;
            Ok([frame_diff, h_diff, beta_diff, max_abs(&(hc - a.h()))])
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |k: usize| diffs.iter().map(|d| d[k]).fold(0.0f64, f64::max);
    let mut report = VerificationReport::new();
    let meta = |r: CheckRecord| r.with_meta("grid_points", grid.len()).with_meta("lambda_samples", lambdas.len());
    report.push(meta(CheckRecord::measured("permutability.frame", fold(0), tol)));
    report.push(meta(CheckRecord::measured("permutability.h", fold(1), tol)));
    report.push(meta(CheckRecord::measured("permutability.beta", fold(2), tol)));
    report.push(meta(CheckRecord::measured("permutability.h_closed_form", fold(3), tol)));
    Ok((f12, f21, report))
}

/// Centre `iλ^{-1}c` and radius `‖c‖/|λ|` of the sphere carrying a
/// ∂-invariant immersion.
#[derive(Clone, Debug)]
pub struct SphericalSeedData {
    pub c: RVector,
}

impl SphericalSeedData {
    pub fn from_frame(frame: &ExtendedFrame) -> Result<Self> {
        if !is_spherical(frame) {
            return Err(Error::NotSpherical("frame is not ∂-invariant".into()));
        }
        Ok(Self { c: frame.seed().h_at_origin() })
    }

    pub fn radius(&self, lambda: f64) -> f64 {
        self.c.norm() / lambda.abs()
    }

    pub fn center(&self, lambda: C64) -> CVector {
        real_vector(&self.c) * (IM / lambda)
    }
}

/// The ∂-invariant family attached to a dressed frame and a real vector `c̃`:
/// `h̃ = Ẽ(u,0)ᵗ c̃`, `X̃ = −iλ^{-1}(Ẽ(u,λ)Ẽ(u,0)^{-1}c̃ − c̃)`.
#[derive(Clone, Debug)]
pub struct SphericalFamily {
    pub frame: ExtendedFrame,
    pub c: RVector,
}

impl SphericalFamily {
    pub fn h(&self, u: &[f64]) -> Result<CVector> {
        let (e0, _) = self.frame.at(u)?.eval(c64(0.0, 0.0))?;
        Ok(e0.transpose() * real_vector(&self.c))
    }

    /// `λ = 0` gives the limit `−i ∂Ẽ/∂λ(u,0) Ẽ(u,0)^{-1} c̃`.
    pub fn x(&self, u: &[f64], lambda: C64) -> Result<CVector> {
        let p = self.frame.at(u)?;
        let c = real_vector(&self.c);
        let (e0, _) = p.eval(c64(0.0, 0.0))?;
        let w = solve_vector(&e0, &c)?;
        if lambda.norm() < 1e-12 {
            return Ok(p.de_dlambda_at_zero()? * w * (-IM));
        }
        let (e, _) = p.eval(lambda)?;
        Ok((e * w - c) * (-IM / lambda))
    }
}

pub fn dress_spherical_family(frame: &ExtendedFrame, factor: &LoopFactor, c: &RVector) -> Result<SphericalFamily> {
    if !frame.seed().is_spherical() {
        return Err(Error::NotSpherical("the family needs a constant seed".into()));
    }
    if c.len() != frame.dim() {
        return Err(Error::Dimension(format!("c has {} entries, frame has {}", c.len(), frame.dim())));
    }
    if !matches!(factor, LoopFactor::RealOnePole(_) | LoopFactor::TwoPole(_)) {
        return Err(Error::InvalidFactor("the spherical family needs a real one-pole or two-pole factor".into()));
    }
    let dressed = frame.with_record(DressingRecord::new(factor.clone()))?;
    Ok(SphericalFamily { frame: dressed, c: c.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{identity, project_onto_span};
    use crate::frames::SeedProfile;

    fn torus(r: &[f64]) -> ExtendedFrame {
        ExtendedFrame::vacuum(SeedProfile::constant(r).unwrap())
    }

    fn line(v: &[C64]) -> HermitianProjection {
        project_onto_span(&CMatrix::from_column_slice(v.len(), 1, v)).unwrap()
    }

    #[test]
    fn zero_and_identity_projections() {
        let f = torus(&[1.0, 2.0]);
        let z = c64(0.3, 0.7);
        let u = [0.4, -0.6];
        let l = c64(0.9, 0.2);
        let base = f.at(&u).unwrap();
        let (e0, x0) = base.eval(l).unwrap();
        let zero = dress_extended(&f, z, &HermitianProjection::zero(2)).unwrap();
        let p = zero.at(&u).unwrap();
        let (e, x) = p.eval(l).unwrap();
        let s = (l - z.conj()) / (l - z);
        // π = 0 makes the factor the scalar s·I; the frame picks up nothing.
        assert!(max_abs(&(e - &e0)) < 1e-14, "{s}");
        assert!(max_abs(&(x - &x0)) < 1e-14);
        assert!(max_abs(&(p.h() - base.h())) < 1e-15);
        // π = I leaves E and β alone; on C^{n+1} the factor is still
        // diag(I, (λ−z̄)/(λ−z)), so X and h do move.
        let id = dress_extended(&f, z, &HermitianProjection::identity(2)).unwrap();
        let p = id.at(&u).unwrap();
        let (e, x) = p.eval(l).unwrap();
        assert!(max_abs(&(e - e0)) < 1e-14);
        assert_eq!(p.beta(), CMatrix::zeros(2, 2));
        assert!(max_abs(&(x - x0)) > 1e-3);
    }

    #[test]
    fn base_point_is_pinned() {
        let f = torus(&[1.0, 1.5, 0.5]);
        let p = line(&[c64(1.0, 0.0), c64(0.0, 0.5), c64(0.3, 0.0)]);
        let d = dress_two_pole(&dress_real(&f, 0.8, &line(&[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])).unwrap(), c64(0.4, 0.9), &p)
            .unwrap();
        let pt = d.at(&[0.0; 3]).unwrap();
        let (e, x) = pt.eval(c64(0.3, -0.2)).unwrap();
        assert!(max_abs(&(e - identity(3))) < 1e-12);
        assert!(x.norm() < 1e-12);
        assert!(max_abs(&(pt.h() - real_vector(&f.seed().h_at_origin()))) < 1e-12);
    }

    #[test]
    fn spherical_precondition() {
        let f = torus(&[1.0, 1.0]);
        let bad = line(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(dress_spherical(&f, 0.7, &bad), Err(Error::SphericalViolation(_))));
        let good = line(&[c64(1.0, 0.0), c64(-1.0, 0.0)]);
        let d = dress_spherical(&f, 0.7, &good).unwrap();
        assert!(is_spherical(&d));
        let t = dress_translation(&d, 0.5, &RVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(matches!(dress_spherical(&t, 0.3, &good), Err(Error::NotSpherical(_))));
    }

    #[test]
    fn repeated_pole_is_refused() {
        let f = torus(&[1.0, 1.0]);
        let p = line(&[c64(1.0, 0.0), c64(0.5, 0.0)]);
        let d = dress_real(&f, 0.7, &p).unwrap();
        assert!(matches!(dress_real(&d, 0.7, &p), Err(Error::AtPole { .. })));
        assert!(dress_real(&d, -0.7, &p).is_ok());
    }

    #[test]
    fn two_point_factor_without_conjugate_zero_is_refused() {
        let f = torus(&[1.0, 1.0]);
        let g = TwoPointFactor::new(c64(0.0, 1.0), c64(0.0, -2.0), HermitianProjection::zero(2)).unwrap();
        assert!(matches!(f.with_record(DressingRecord::new(LoopFactor::TwoPoint(g))), Err(Error::InvalidFactor(_))));
    }
}

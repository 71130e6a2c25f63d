//! Rational loop elements: simple two-point factors, the real one-pole and
//! two-pole generators, and translation factors.

use crate::algebra::{c64, identity, max_abs, CMatrix, HermitianProjection, RVector, C64, IM};
use crate::error::{Error, Result};
use crate::report::{CheckRecord, VerificationReport};

/// Two projections are considered equal below this distance.
pub const PROJECTION_EQ_TOL: f64 = 1e-9;

/// `pole_tol = 1e-8 * max(1, |pole|)`.
pub fn pole_tol(pole: C64) -> f64 {
    1e-8 * pole.norm().max(1.0)
}

fn check_pole(lambda: C64, pole: C64) -> Result<()> {
    let tol = pole_tol(pole);
    if (lambda - pole).norm() <= tol {
        return Err(Error::AtPole { lambda, pole, tol });
    }
    Ok(())
}

/// `π + (λ−zero)/(λ−pole)(I−π)` with no pole check.
pub fn simple_element(pole: C64, zero: C64, projection: &CMatrix, lambda: C64) -> CMatrix {
    let n = projection.nrows();
    let s = (lambda - zero) / (lambda - pole);
    projection + (identity(n) - projection) * s
}

/// `g_{α₁,α₂,π}(λ) = π + (λ−α₂)/(λ−α₁)(I−π)`: pole α₁, zero α₂.
#[derive(Clone, Debug)]
pub struct TwoPointFactor {
    pub pole: C64,
    pub zero: C64,
    pub projection: HermitianProjection,
}

impl TwoPointFactor {
    pub fn new(pole: C64, zero: C64, projection: HermitianProjection) -> Result<Self> {
        if !(pole.is_finite() && zero.is_finite()) {
            return Err(Error::InvalidFactor("pole and zero must be finite".into()));
        }
        if (pole - zero).norm() <= pole_tol(pole) {
            return Err(Error::InvalidFactor(format!("pole {pole} and zero {zero} coincide")));
        }
        Ok(Self { pole, zero, projection })
    }

    /// The τ-type factor `g_{z,π} = g_{z,z̄,π}`.
    pub fn at(z: C64, projection: HermitianProjection) -> Result<Self> {
        if z.im == 0.0 {
            return Err(Error::InvalidFactor(format!("pole {z} must lie off the real axis")));
        }
        Self::new(z, z.conj(), projection)
    }

    pub fn eval(&self, lambda: C64) -> Result<CMatrix> {
        check_pole(lambda, self.pole)?;
        Ok(self.eval_unchecked(lambda))
    }

    pub fn eval_unchecked(&self, lambda: C64) -> CMatrix {
        simple_element(self.pole, self.zero, self.projection.matrix(), lambda)
    }

    /// `g_{α₂,α₁,π}`, the pointwise inverse.
    pub fn inverse(&self) -> Self {
        Self { pole: self.zero, zero: self.pole, projection: self.projection.clone() }
    }

    pub fn dim(&self) -> usize {
        self.projection.dim()
    }
}

/// `g_{iα,π}` with `α ≠ 0` real and `π` real.
#[derive(Clone, Debug)]
pub struct RealOnePoleFactor {
    pub alpha: f64,
    pub projection: HermitianProjection,
}

impl RealOnePoleFactor {
    pub fn new(alpha: f64, projection: HermitianProjection) -> Result<Self> {
        if !(alpha.is_finite() && alpha != 0.0) {
            return Err(Error::InvalidFactor(format!("alpha must be finite and nonzero, got {alpha}")));
        }
        if !projection.is_real() {
            return Err(Error::InvalidFactor("real one-pole factor needs a real projection".into()));
        }
        Ok(Self { alpha, projection })
    }

    pub fn pole(&self) -> C64 {
        c64(0.0, self.alpha)
    }

    pub fn as_two_point(&self) -> TwoPointFactor {
        TwoPointFactor { pole: self.pole(), zero: self.pole().conj(), projection: self.projection.clone() }
    }

    pub fn eval(&self, lambda: C64) -> Result<CMatrix> {
        self.as_two_point().eval(lambda)
    }
}

/// `f_{z,π} = g_{−z̄,ρ} g_{z,π}` where `ρ` projects onto `g_{z,π}(−z̄)(Im π̄)`.
#[derive(Clone, Debug)]
pub struct TwoPoleFactor {
    pub z: C64,
    pub projection: HermitianProjection,
    pub rho: HermitianProjection,
}

impl TwoPoleFactor {
    pub fn new(z: C64, projection: HermitianProjection) -> Result<Self> {
        if !(z.is_finite() && z.re != 0.0 && z.im != 0.0) {
            return Err(Error::InvalidFactor(format!("two-pole factor needs Re z != 0 and Im z != 0, got {z}")));
        }
        let mirror = -z.conj();
        let g = simple_element(z, z.conj(), projection.matrix(), mirror);
        let rho = projection.conj().transported(&g)?;
        Ok(Self { z, projection, rho })
    }

    /// The right factor `g_{z,π}`.
    pub fn first(&self) -> TwoPointFactor {
        TwoPointFactor { pole: self.z, zero: self.z.conj(), projection: self.projection.clone() }
    }

    /// The left factor `g_{−z̄,ρ}`.
    pub fn second(&self) -> TwoPointFactor {
        let w = -self.z.conj();
        TwoPointFactor { pole: w, zero: w.conj(), projection: self.rho.clone() }
    }

    pub fn poles(&self) -> [C64; 2] {
        [self.z, -self.z.conj()]
    }

    pub fn eval(&self, lambda: C64) -> Result<CMatrix> {
        for p in self.poles() {
            check_pole(lambda, p)?;
        }
        Ok(self.second().eval_unchecked(lambda) * self.first().eval_unchecked(lambda))
    }

    /// The other factorization `g_{z,ρ̄} g_{−z̄,π̄}` of the same loop.
    pub fn eval_conjugate_order(&self, lambda: C64) -> Result<CMatrix> {
        for p in self.poles() {
            check_pole(lambda, p)?;
        }
        let w = -self.z.conj();
        let left = simple_element(self.z, self.z.conj(), self.rho.conj().matrix(), lambda);
        let right = simple_element(w, w.conj(), self.projection.conj().matrix(), lambda);
        Ok(left * right)
    }
}

/// `k_{iα,b}(λ) = [[I, ib/(λ−iα)], [0, 1]]` acting on `C^{n+1}`.
#[derive(Clone, Debug)]
pub struct TranslationFactor {
    pub alpha: f64,
    pub b: RVector,
}

impl TranslationFactor {
    pub fn new(alpha: f64, b: RVector) -> Result<Self> {
        if !(alpha.is_finite() && alpha != 0.0) {
            return Err(Error::InvalidFactor(format!("alpha must be finite and nonzero, got {alpha}")));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFactor("translation vector must be finite".into()));
        }
        Ok(Self { alpha, b })
    }

    pub fn pole(&self) -> C64 {
        c64(0.0, self.alpha)
    }

    pub fn eval(&self, lambda: C64) -> Result<CMatrix> {
        check_pole(lambda, self.pole())?;
        let n = self.b.len();
        let mut k = identity(n + 1);
        let s = IM / (lambda - self.pole());
        for i in 0..n {
            k[(i, n)] = s * self.b[i];
        }
        Ok(k)
    }
}

#[derive(Clone, Debug)]
pub enum LoopFactor {
    TwoPoint(TwoPointFactor),
    RealOnePole(RealOnePoleFactor),
    TwoPole(TwoPoleFactor),
    Translation(TranslationFactor),
}

impl LoopFactor {
    pub fn poles(&self) -> Vec<C64> {
        match self {
            LoopFactor::TwoPoint(g) => vec![g.pole],
            LoopFactor::RealOnePole(g) => vec![g.pole()],
            LoopFactor::TwoPole(g) => g.poles().to_vec(),
            LoopFactor::Translation(k) => vec![k.pole()],
        }
    }

    /// Matrix size: `n`, or `n+1` for translations.
    pub fn size(&self) -> usize {
        match self {
            LoopFactor::TwoPoint(g) => g.dim(),
            LoopFactor::RealOnePole(g) => g.projection.dim(),
            LoopFactor::TwoPole(g) => g.projection.dim(),
            LoopFactor::Translation(k) => k.b.len() + 1,
        }
    }

    /// Whether the factor satisfies the σ reality condition by construction.
    pub fn is_sigma_compatible(&self) -> bool {
        !matches!(self, LoopFactor::TwoPoint(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            LoopFactor::TwoPoint(_) => "two_point",
            LoopFactor::RealOnePole(_) => "real_one_pole",
            LoopFactor::TwoPole(_) => "two_pole",
            LoopFactor::Translation(_) => "translation",
        }
    }
}

pub fn eval_factor(g: &LoopFactor, lambda: C64) -> Result<CMatrix> {
    match g {
        LoopFactor::TwoPoint(g) => g.eval(lambda),
        LoopFactor::RealOnePole(g) => g.eval(lambda),
        LoopFactor::TwoPole(g) => g.eval(lambda),
        LoopFactor::Translation(k) => k.eval(lambda),
    }
}

/// The exact limit `λ → ∞`, which is `I` for every normalized factor.
pub fn eval_at_infinity(g: &LoopFactor) -> CMatrix {
    identity(g.size())
}

pub fn invert_factor(g: &TwoPointFactor) -> TwoPointFactor {
    g.inverse()
}

/// τ residual `‖g(λ̄)*g(λ) − I‖` and σ residual `‖g(−λ)ᵗg(λ) − I‖` at each
/// sample, maximized. The σ check is informational for two-point factors.
///
/// Translations act on `C^{n+1}`; there the E-block is `I` so τ is trivial,
/// and σ is read as `k(−λ̄) = conj(k(λ))`, which is what keeps the dressed
/// `X(u,0)` real.
pub fn check_reality(g: &LoopFactor, samples: &[C64], tol: f64) -> VerificationReport {
    let mut tau = 0.0f64;
    let mut sigma = 0.0f64;
    let mut evaluated = 0usize;
    for &lambda in samples {
        let pair = (|| -> Result<(f64, f64)> {
            let gl = eval_factor(g, lambda)?;
            match g {
                LoopFactor::Translation(_) => {
                    let mirrored = eval_factor(g, -lambda.conj())?;
                    Ok((0.0, max_abs(&(mirrored - gl.conjugate()))))
                }
                _ => {
                    let n = gl.nrows();
                    let gbar = eval_factor(g, lambda.conj())?;
                    let gneg = eval_factor(g, -lambda)?;
                    Ok((
                        max_abs(&(gbar.adjoint() * &gl - identity(n))),
                        max_abs(&(gneg.transpose() * &gl - identity(n))),
                    ))
                }
            }
        })();
        if let Ok((t, s)) = pair {
            tau = tau.max(t);
            sigma = sigma.max(s);
            evaluated += 1;
        }
    }
    let mut report = VerificationReport::new();
    if evaluated == 0 {
        report.push(CheckRecord::failed("tau_reality", tol, "no sample avoided the poles"));
        return report;
    }
    report.push(CheckRecord::measured("tau_reality", tau, tol).with_meta("samples", evaluated));
    let sigma_rec = if g.is_sigma_compatible() {
        CheckRecord::measured("sigma_reality", sigma, tol)
    } else {
        CheckRecord::info("sigma_reality", sigma, "a complex one-pole factor is only τ-real")
    };
    report.push(sigma_rec.with_meta("samples", evaluated));
    report
}

/// Recompute projections so that `g_{z₂,ρ₂} g_{z₁,π₁} = g_{z₁,ρ₁} g_{z₂,π₂}`.
/// Returns `(ρ₁, ρ₂)`.
pub fn permute_factors(
    z1: C64,
    pi1: &HermitianProjection,
    z2: C64,
    pi2: &HermitianProjection,
) -> Result<(HermitianProjection, HermitianProjection)> {
    if z1.im == 0.0 || z2.im == 0.0 {
        return Err(Error::InvalidFactor("poles must lie off the real axis".into()));
    }
    if (z1 - z2).norm() <= pole_tol(z2) || (z1 - z2.conj()).norm() <= pole_tol(z2) {
        return Err(Error::PoleCollision(format!("z1 = {z1} collides with z2 = {z2} or its conjugate")));
    }
    let g2_at_z1 = simple_element(z2, z2.conj(), pi2.matrix(), z1);
    let g1_at_z2 = simple_element(z1, z1.conj(), pi1.matrix(), z2);
    Ok((pi1.transported(&g2_at_z1)?, pi2.transported(&g1_at_z2)?))
}

pub fn projection_distance(a: &HermitianProjection, b: &HermitianProjection) -> f64 {
    a.distance(b)
}

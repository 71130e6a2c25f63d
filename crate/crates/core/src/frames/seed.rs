//! Vacuum seeds: `β = 0` with independent positive profiles `h_j(u_j)`.

use crate::algebra::{CMatrix, CVector, RVector, C64, IM};
use crate::error::{Error, Result};

use super::quadrature::integrate_with_breaks;
use super::spline::CubicSpline;

/// Absolute tolerance for sampled-profile quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// Below this `|iλu|` the `(e^x − 1)/x` factor is summed as a series.
const EXPREL_SERIES_RADIUS: f64 = 0.5;

/// Below this `|λu|` polynomial profiles are integrated by power series,
/// above it by parts.
const POLY_SERIES_RADIUS: f64 = 4.0;

#[derive(Clone, Debug)]
pub enum Profile {
    Constant(f64),
    /// `Σ c_k t^k` on a closed domain containing 0.
    Polynomial { coeffs: Vec<f64>, domain: (f64, f64) },
    Sampled(CubicSpline),
}

/// `(e^x − 1)/x`, continuous through `x = 0`.
pub fn exprel(x: C64) -> C64 {
    if x.norm() < EXPREL_SERIES_RADIUS {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..40 {
            term *= x / k as f64;
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        (x.exp() - 1.0) / x
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

impl Profile {
    pub fn constant(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidSeed(format!("constant profile must be positive, got {r}")));
        }
        Ok(Profile::Constant(r))
    }

    /// Positivity is checked on 1001 equispaced samples of the domain.
    pub fn polynomial(coeffs: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSeed("polynomial profile needs finite coefficients".into()));
        }
        let (a, b) = domain;
        if !(a <= 0.0 && 0.0 <= b && a < b) {
            return Err(Error::InvalidSeed(format!("profile domain [{a}, {b}] must contain 0")));
        }
        for k in 0..=1000 {
            let t = a + (b - a) * k as f64 / 1000.0;
            if !(horner(&coeffs, t) > 0.0) {
                return Err(Error::InvalidSeed(format!("polynomial profile is not positive at t = {t}")));
            }
        }
        Ok(Profile::Polynomial { coeffs, domain })
    }

    pub fn sampled(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = CubicSpline::new(knots, values)?;
        let (a, b) = s.domain();
        if !(a <= 0.0 && 0.0 <= b) {
            return Err(Error::InvalidSeed(format!("profile domain [{a}, {b}] must contain 0")));
        }
        Ok(Profile::Sampled(s))
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Profile::Constant(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Profile::Polynomial { domain, .. } => *domain,
            Profile::Sampled(s) => s.domain(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(r) => *r,
            Profile::Polynomial { coeffs, .. } => horner(coeffs, t),
            Profile::Sampled(s) => s.value(t),
        }
    }

    /// `∫_0^u h(t) e^{iλt} dt`.
    pub fn exp_integral(&self, u: f64, lambda: C64) -> Result<C64> {
        match self {
            Profile::Constant(r) => Ok(exprel(IM * lambda * u) * (r * u)),
            Profile::Polynomial { coeffs, .. } => Ok(poly_exp_integral(coeffs, u, lambda)),
            Profile::Sampled(s) => integrate_with_breaks(
                |t| (IM * lambda * t).exp() * s.value(t),
                0.0,
                u,
                s.knots(),
                QUAD_TOL,
            ),
        }
    }

    /// `∫_0^u h(t)² dt`.
    pub fn square_integral(&self, u: f64) -> Result<f64> {
        match self {
            Profile::Constant(r) => Ok(r * r * u),
            Profile::Polynomial { coeffs, .. } => {
                let mut sq = vec![0.0; 2 * coeffs.len() - 1];
                for (i, a) in coeffs.iter().enumerate() {
                    for (j, b) in coeffs.iter().enumerate() {
                        sq[i + j] += a * b;
                    }
                }
                Ok(sq.iter().enumerate().map(|(k, c)| c * u.powi(k as i32 + 1) / (k + 1) as f64).sum())
            }
            Profile::Sampled(s) => {
                integrate_with_breaks(|t| C64::new(s.value(t).powi(2), 0.0), 0.0, u, s.knots(), QUAD_TOL).map(|z| z.re)
            }
        }
    }
}

fn poly_exp_integral(coeffs: &[f64], u: f64, lambda: C64) -> C64 {
    let x = IM * lambda * u;
    if x.norm() <= POLY_SERIES_RADIUS {
        // ∫_0^u t^k e^{iλt} dt = u^{k+1} Σ_m x^m / (m! (k+m+1))
        let mut total = C64::new(0.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let mut term = C64::new(1.0, 0.0);
            let mut sum = term / (k + 1) as f64;
            for m in 1..80 {
                term *= x / m as f64;
                let add = term / (k + m + 1) as f64;
                sum += add;
                if add.norm() < 1e-18 * sum.norm().max(1e-300) {
                    break;
                }
            }
            total += sum * (c * u.powi(k as i32 + 1));
        }
        total
    } else {
        // e^{iλt} Σ_j (−1)^j p^{(j)}(t) / (iλ)^{j+1}, evaluated between 0 and u.
        let il = IM * lambda;
        let antiderivative = |t: f64| {
            let mut d = coeffs.to_vec();
            let mut acc = C64::new(0.0, 0.0);
            let mut denom = il;
            let mut sign = 1.0;
            while !d.is_empty() {
                acc += sign * horner(&d, t) / denom;
                d = derivative(&d);
                denom *= il;
                sign = -sign;
            }
            (il * t).exp() * acc
        };
        antiderivative(u) - antiderivative(0.0)
    }
}

#[derive(Clone, Debug)]
pub struct SeedProfile {
    pub profiles: Vec<Profile>,
}

impl SeedProfile {
    pub fn new(profiles: Vec<Profile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidSeed("seed needs at least one axis".into()));
        }
        Ok(Self { profiles })
    }

    /// Flat torus seed `h_j = r_j`.
    pub fn constant(radii: &[f64]) -> Result<Self> {
        Self::new(radii.iter().map(|&r| Profile::constant(r)).collect::<Result<_>>()?)
    }

    pub fn dim(&self) -> usize {
        self.profiles.len()
    }

    /// All profiles constant: the ∂-invariant (spherical) vacuum.
    pub fn is_spherical(&self) -> bool {
        self.profiles.iter().all(|p| matches!(p, Profile::Constant(_)))
    }

    pub fn check_domain(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::Dimension(format!("u has {} entries, seed has dimension {}", u.len(), self.dim())));
        }
        for (axis, (p, &v)) in self.profiles.iter().zip(u).enumerate() {
            let (min, max) = p.domain();
            let slack = 1e-12 * (1.0 + v.abs());
            if !(v >= min - slack && v <= max + slack) {
                return Err(Error::OutOfDomain { axis, value: v, min, max });
            }
        }
        Ok(())
    }

    pub fn h(&self, u: &[f64]) -> RVector {
        RVector::from_iterator(self.dim(), self.profiles.iter().zip(u).map(|(p, &t)| p.value(t)))
    }

    /// `c = h(0)`.
    pub fn h_at_origin(&self) -> RVector {
        self.h(&vec![0.0; self.dim()])
    }

    /// `φ = Σ_j ∫_0^{u_j} h_j²`.
    pub fn phi(&self, u: &[f64]) -> Result<f64> {
        self.profiles.iter().zip(u).map(|(p, &t)| p.square_integral(t)).sum()
    }
}

/// `E = diag(e^{iλu_j})`.
pub fn vacuum_e(seed: &SeedProfile, u: &[f64], lambda: C64) -> Result<CMatrix> {
    seed.check_domain(u)?;
    Ok(CMatrix::from_diagonal(&CVector::from_iterator(u.len(), u.iter().map(|&t| (IM * lambda * t).exp()))))
}

/// `X_j = ∫_0^{u_j} h_j(t) e^{iλt} dt`.
pub fn vacuum_x(seed: &SeedProfile, u: &[f64], lambda: C64) -> Result<CVector> {
    seed.check_domain(u)?;
    let entries = seed.profiles.iter().zip(u).map(|(p, &t)| p.exp_integral(t, lambda)).collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

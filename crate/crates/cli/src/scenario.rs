//! Scenario schema (JSON), validation and construction of core objects.
//!
//! Complex numbers are `[re, im]`; matrices are row-major arrays of rows of
//! such pairs.

use std::path::Path;

use dressing_core::algebra::{c64, project_onto_span};
use dressing_core::loopfactors::pole_tol;
use dressing_core::{
    dress_extended, dress_real, dress_spherical, dress_translation, dress_two_pole, Axis, CMatrix, Error,
    ExtendedFrame, Grid, HermitianProjection, Profile, RVector, SeedProfile, C64,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub type Pair = [f64; 2];
pub type MatrixSpec = Vec<Vec<Pair>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub seed: SeedSpec,
    /// Per axis `[min, max, steps]`.
    pub grid: Vec<(f64, f64, usize)>,
    #[serde(default)]
    pub lambdas: Vec<Pair>,
    #[serde(default)]
    pub chain: Vec<FactorSpec>,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default)]
    pub export: ExportSpec,
    #[serde(default)]
    pub permute: Option<PermuteSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    Constant { radii: Vec<f64> },
    Profiles { profiles: Vec<ProfileSpec> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    Polynomial { coeffs: Vec<f64>, domain: [f64; 2] },
    Sampled { knots: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionSpec {
    /// `n×k` matrix whose columns span the image.
    Span(MatrixSpec),
    /// The projection matrix itself.
    Matrix(MatrixSpec),
    Zero,
    Identity,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorSpec {
    OnePole { z: Pair, projection: ProjectionSpec },
    Real { alpha: f64, projection: ProjectionSpec },
    Spherical { alpha: f64, projection: ProjectionSpec },
    Translation { alpha: f64, b: Vec<f64> },
    TwoPole { z: Pair, projection: ProjectionSpec },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermuteSpec {
    pub z1: Pair,
    pub projection1: ProjectionSpec,
    pub z2: Pair,
    pub projection2: ProjectionSpec,
    #[serde(default = "defaults::permute_tol")]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Obj,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSpec {
    #[serde(default = "defaults::formats")]
    pub formats: Vec<ExportFormat>,
    /// Axes spanned by the slice; the others are held at `fixed`.
    #[serde(default = "defaults::slice_axes")]
    pub slice_axes: Vec<usize>,
    /// Values of the remaining axes, in increasing axis order (default 0).
    #[serde(default)]
    pub fixed: Vec<f64>,
    /// OBJ vertex = (Re X_a, Im X_a, Re X_b).
    #[serde(default = "defaults::embedding")]
    pub embedding: [usize; 2],
    /// File stem, relative to the output directory.
    #[serde(default = "defaults::stem")]
    pub path: String,
}

impl Default for ExportSpec {
    fn default() -> Self {
        Self {
            formats: defaults::formats(),
            slice_axes: defaults::slice_axes(),
            fixed: Vec::new(),
            embedding: defaults::embedding(),
            path: defaults::stem(),
        }
    }
}

/// A check toggle with its tolerance.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggle {
    #[serde(default = "defaults::yes")]
    pub enabled: bool,
    pub tol: f64,
}

macro_rules! toggle_default {
    ($name:ident, $enabled:expr, $tol:expr) => {
        pub fn $name() -> Toggle {
            Toggle { enabled: $enabled, tol: $tol }
        }
    };
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealitySpec {
    #[serde(default = "defaults::yes")]
    pub enabled: bool,
    #[serde(default = "defaults::reality_tol")]
    pub tol: f64,
    #[serde(default = "defaults::reality_samples")]
    pub samples: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for RealitySpec {
    fn default() -> Self {
        Self { enabled: true, tol: defaults::reality_tol(), samples: defaults::reality_samples(), rng_seed: 0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "defaults::oracle_tol")]
    pub tol: f64,
    #[serde(default = "defaults::oracle_step")]
    pub step: f64,
    #[serde(default = "defaults::oracle_lambda")]
    pub lambda: Pair,
    /// Path end point; defaults to the grid's upper corner.
    #[serde(default)]
    pub target: Option<Vec<f64>>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            tol: defaults::oracle_tol(),
            step: defaults::oracle_step(),
            lambda: defaults::oracle_lambda(),
            target: None,
        }
    }
}

/// Verification toggles. Every tolerance has a default listed in
/// `defaults`; `--tol-scale` multiplies all of them.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default)]
    pub reality: RealitySpec,
    #[serde(default = "defaults::darboux_egoroff")]
    pub darboux_egoroff: Toggle,
    #[serde(default = "defaults::structure")]
    pub structure: Toggle,
    #[serde(default = "defaults::rotation_consistency")]
    pub rotation_consistency: Toggle,
    #[serde(default = "defaults::lagrangian")]
    pub lagrangian: Toggle,
    #[serde(default = "defaults::position_equation")]
    pub position_equation: Toggle,
    #[serde(default = "defaults::potential")]
    pub potential: Toggle,
    #[serde(default = "defaults::sphere")]
    pub sphere: Toggle,
    #[serde(default = "defaults::partial_invariance")]
    pub partial_invariance: Toggle,
    #[serde(default = "defaults::limit_net")]
    pub limit_net: Toggle,
    #[serde(default)]
    pub pde_oracle: OracleSpec,
}

impl Default for ChecksSpec {
    fn default() -> Self {
        Self {
            reality: RealitySpec::default(),
            darboux_egoroff: defaults::darboux_egoroff(),
            structure: defaults::structure(),
            rotation_consistency: defaults::rotation_consistency(),
            lagrangian: defaults::lagrangian(),
            position_equation: defaults::position_equation(),
            potential: defaults::potential(),
            sphere: defaults::sphere(),
            partial_invariance: defaults::partial_invariance(),
            limit_net: defaults::limit_net(),
            pde_oracle: OracleSpec::default(),
        }
    }
}

/// Default tolerances.
pub mod defaults {
    use super::{ExportFormat, Pair, Toggle};

    pub fn yes() -> bool {
        true
    }
    pub fn reality_tol() -> f64 {
        1e-10
    }
    pub fn reality_samples() -> usize {
        200
    }
    pub fn oracle_tol() -> f64 {
        1e-6
    }
    pub fn oracle_step() -> f64 {
        1e-2
    }
    pub fn oracle_lambda() -> Pair {
        [0.5, 0.2]
    }
    pub fn permute_tol() -> f64 {
        1e-9
    }
    pub fn formats() -> Vec<ExportFormat> {
        vec![ExportFormat::Csv]
    }
    pub fn slice_axes() -> Vec<usize> {
        vec![0, 1]
    }
    pub fn embedding() -> [usize; 2] {
        [0, 1]
    }
    pub fn stem() -> String {
        "immersion".into()
    }
    // Finite-difference checks: the tolerance has to cover O(Δu²).
    toggle_default!(darboux_egoroff, true, 5e-2);
    toggle_default!(rotation_consistency, true, 5e-2);
    toggle_default!(position_equation, true, 5e-2);
    toggle_default!(potential, true, 5e-2);
    toggle_default!(partial_invariance, true, 5e-2);
    // Pointwise identities.
    toggle_default!(structure, true, 1e-10);
    toggle_default!(lagrangian, true, 1e-10);
    toggle_default!(sphere, true, 1e-9);
    toggle_default!(limit_net, true, 1e-10);
}

fn validation(rule: impl Into<String>) -> CliError {
    CliError::Validation(rule.into())
}

/// Library errors raised while building scenario objects are precondition
/// failures of the scenario.
fn as_validation(e: Error) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn load(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> CliResult<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn complex(p: Pair) -> C64 {
    c64(p[0], p[1])
}

fn matrix(spec: &MatrixSpec, rows: usize, what: &str) -> CliResult<CMatrix> {
    if spec.len() != rows {
        return Err(validation(format!("{what} must have {rows} rows, found {}", spec.len())));
    }
    let cols = spec.first().map_or(0, Vec::len);
    if cols == 0 || spec.iter().any(|r| r.len() != cols) {
        return Err(validation(format!("{what} rows must be non-empty and of equal length")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| complex(spec[r][c])))
}

impl ProjectionSpec {
    pub fn build(&self, n: usize) -> CliResult<HermitianProjection> {
        match self {
            ProjectionSpec::Span(m) => project_onto_span(&matrix(m, n, "projection span")?).map_err(as_validation),
            ProjectionSpec::Matrix(m) => {
                let m = matrix(m, n, "projection matrix")?;
                if m.ncols() != n {
                    return Err(validation("projection matrix must be square"));
                }
                HermitianProjection::from_matrix(&m).map_err(as_validation)
            }
            ProjectionSpec::Zero => Ok(HermitianProjection::zero(n)),
            ProjectionSpec::Identity => Ok(HermitianProjection::identity(n)),
        }
    }
}

impl FactorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FactorSpec::OnePole { .. } => "one_pole",
            FactorSpec::Real { .. } => "real",
            FactorSpec::Spherical { .. } => "spherical",
            FactorSpec::Translation { .. } => "translation",
            FactorSpec::TwoPole { .. } => "two_pole",
        }
    }

    /// Poles this factor adds to the frame.
    pub fn poles(&self) -> Vec<C64> {
        match self {
            FactorSpec::OnePole { z, .. } => vec![complex(*z)],
            FactorSpec::Real { alpha, .. } | FactorSpec::Spherical { alpha, .. } | FactorSpec::Translation { alpha, .. } => {
                vec![c64(0.0, *alpha)]
            }
            FactorSpec::TwoPole { z, .. } => {
                let z = complex(*z);
                vec![z, -z.conj()]
            }
        }
    }

    pub fn apply(&self, frame: &ExtendedFrame) -> CliResult<ExtendedFrame> {
        let n = frame.dim();
        let nonzero = |alpha: f64| {
            if alpha == 0.0 || !alpha.is_finite() {
                Err(validation(format!("{}: α must be a nonzero real number", self.name())))
            } else {
                Ok(())
            }
        };
        let out = match self {
            FactorSpec::OnePole { z, projection } => dress_extended(frame, complex(*z), &projection.build(n)?),
            FactorSpec::Real { alpha, projection } => {
                nonzero(*alpha)?;
                dress_real(frame, *alpha, &projection.build(n)?)
            }
            FactorSpec::Spherical { alpha, projection } => {
                nonzero(*alpha)?;
                dress_spherical(frame, *alpha, &projection.build(n)?)
            }
            FactorSpec::Translation { alpha, b } => {
                nonzero(*alpha)?;
                if b.len() != n {
                    return Err(validation(format!("translation: b must have n = {n} entries")));
                }
                dress_translation(frame, *alpha, &RVector::from_vec(b.clone()))
            }
            FactorSpec::TwoPole { z, projection } => dress_two_pole(frame, complex(*z), &projection.build(n)?),
        };
        out.map_err(|e| validation(format!("{} factor: {}", self.name(), e)))
    }
}

impl Scenario {
    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(validation(format!("schema_version must be {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        if self.n == 0 {
            return Err(validation("n must be positive"));
        }
        if self.grid.len() != self.n {
            return Err(validation(format!("grid must list n = {} axes, found {}", self.n, self.grid.len())));
        }
        let seed = self.seed_profile()?;
        if seed.dim() != self.n {
            return Err(validation(format!("seed must have n = {} profiles, found {}", self.n, seed.dim())));
        }
        let grid = self.grid_spec()?;
        for corner in [grid.point(0), grid.point(grid.len() - 1)] {
            seed.check_domain(&corner).map_err(|e| validation(format!("grid must lie inside the seed domain: {e}")))?;
        }
        for l in &self.lambdas {
            if !l.iter().all(|v| v.is_finite()) {
                return Err(validation("λ values must be finite"));
            }
        }
        let poles: Vec<C64> = self.chain.iter().flat_map(FactorSpec::poles).collect();
        for l in self.lambdas.iter().map(|&p| complex(p)) {
            for &p in &poles {
                if (l - p).norm() <= pole_tol(p) {
                    return Err(validation(format!("λ values must avoid chain poles: λ = {l} sits on {p}")));
                }
            }
        }
        self.validate_export()?;
        self.frame()?;
        if let Some(p) = &self.permute {
            p.projection1.build(self.n)?;
            p.projection2.build(self.n)?;
        }
        Ok(())
    }

    fn validate_export(&self) -> CliResult<()> {
        let e = &self.export;
        if e.slice_axes.iter().chain(&e.embedding).any(|&a| a >= self.n) {
            return Err(validation(format!("referenced axes must be < n = {}", self.n)));
        }
        let mut sorted = e.slice_axes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != e.slice_axes.len() || sorted.is_empty() {
            return Err(validation("slice axes must be distinct and non-empty"));
        }
        if e.formats.contains(&ExportFormat::Obj) && e.slice_axes.len() != 2 {
            return Err(validation("OBJ export needs exactly two slice axes"));
        }
        let remaining = self.n - e.slice_axes.len();
        if !e.fixed.is_empty() && e.fixed.len() != remaining {
            return Err(validation(format!("fixed must give {remaining} values (one per non-slice axis)")));
        }
        if e.path.is_empty() || Path::new(&e.path).is_absolute() || e.path.contains("..") {
            return Err(validation("export path must be a relative file stem"));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> CliResult<Grid> {
        let axes = self
            .grid
            .iter()
            .map(|&(min, max, steps)| Axis::new(min, max, steps))
            .collect();
        Grid::new(axes).map_err(as_validation)
    }

    pub fn seed_profile(&self) -> CliResult<SeedProfile> {
        let seed = match &self.seed {
            SeedSpec::Constant { radii } => SeedProfile::constant(radii),
            SeedSpec::Profiles { profiles } => profiles
                .iter()
                .map(|p| match p {
                    ProfileSpec::Constant { value } => Profile::constant(*value),
                    ProfileSpec::Polynomial { coeffs, domain } => Profile::polynomial(coeffs.clone(), (domain[0], domain[1])),
                    ProfileSpec::Sampled { knots, values } => Profile::sampled(knots.clone(), values.clone()),
                })
                .collect::<Result<Vec<_>, _>>()
                .and_then(SeedProfile::new),
        };
        seed.map_err(as_validation)
    }

    pub fn vacuum(&self) -> CliResult<ExtendedFrame> {
        Ok(ExtendedFrame::vacuum(self.seed_profile()?))
    }

    pub fn frame(&self) -> CliResult<ExtendedFrame> {
        let mut frame = self.vacuum()?;
        for factor in &self.chain {
            frame = factor.apply(&frame)?;
        }
        Ok(frame)
    }

    pub fn lambda_values(&self) -> Vec<C64> {
        self.lambdas.iter().map(|&p| complex(p)).collect()
    }

    /// The export slice: slice axes from the scenario grid, other axes pinned.
    pub fn slice_grid(&self) -> CliResult<Grid> {
        let full = self.grid_spec()?;
        let mut fixed = self.export.fixed.iter();
        let axes = (0..self.n)
            .map(|a| {
                if self.export.slice_axes.contains(&a) {
                    full.axes[a].clone()
                } else {
                    let v = fixed.next().copied().unwrap_or(0.0);
                    Axis::new(v, v, 1)
                }
            })
            .collect();
        Grid::new(axes).map_err(as_validation)
    }
}

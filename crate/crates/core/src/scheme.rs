//! Splitting schemes and the time-stepping propagator.
//!
//! A [`Scheme`] is an operator product written left to right, e.g.
//! `exp(ihV) R(-ihΔ)` is `[P:1, R:1]`; stages are applied right to left.
//! The flow being approximated is `exp(ih(-Δ + V))`, so on mode `k`:
//!
//! * `ResolventLaplacian γ` multiplies by `R(iγh|k|²) = exp(2i·atan(γh|k|²/2))`,
//! * `ExactLaplacian γ` multiplies by `exp(iγh|k|²)`,
//! * `PotentialPhase θ` multiplies pointwise by `exp(iθhV(x_j))` on the collocation grid.
//!
//! Every stage is an isometry of the truncated coefficient space.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierField, PotentialSpec, SpectralGrid, SpectralTransform};
use crate::operator::{identity_matrix, pointwise_matrix, SpectralOperator};

/// Tolerance for the consistency conditions `Σγ = 1`, `Σθ = 1`.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// `R(z) = (1 + z/2)/(1 - z/2)`, the stability function of the implicit midpoint rule.
pub fn stability_function(z: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) - z / 2.0;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole);
    }
    Ok((Complex64::new(1.0, 0.0) + z / 2.0) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageKind {
    /// `exp(iθhV)`, applied by collocation.
    PotentialPhase,
    /// `R(-iγhΔ)`, the midpoint (Cayley) approximation of the free flow.
    ResolventLaplacian,
    /// `exp(-iγhΔ)`, the exact free flow.
    ExactLaplacian,
}

impl StageKind {
    pub fn code(self) -> char {
        match self {
            StageKind::PotentialPhase => 'P',
            StageKind::ResolventLaplacian => 'R',
            StageKind::ExactLaplacian => 'E',
        }
    }

    fn from_code(code: &str) -> Option<Self> {
        match code {
            "P" => Some(StageKind::PotentialPhase),
            "R" => Some(StageKind::ResolventLaplacian),
            "E" => Some(StageKind::ExactLaplacian),
            _ => None,
        }
    }

    pub fn is_laplacian(self) -> bool {
        !matches!(self, StageKind::PotentialPhase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub scale: f64,
}

impl Stage {
    pub fn potential(theta: f64) -> Self {
        Self {
            kind: StageKind::PotentialPhase,
            scale: theta,
        }
    }

    pub fn resolvent(gamma: f64) -> Self {
        Self {
            kind: StageKind::ResolventLaplacian,
            scale: gamma,
        }
    }

    pub fn exact(gamma: f64) -> Self {
        Self {
            kind: StageKind::ExactLaplacian,
            scale: gamma,
        }
    }

    /// Phase picked up by a mode with `|k|² = k2` under a Laplacian stage of step `h`.
    pub fn laplacian_phase(&self, h: f64, k2: f64) -> f64 {
        match self.kind {
            StageKind::ResolventLaplacian => 2.0 * (self.scale * h * k2 / 2.0).atan(),
            StageKind::ExactLaplacian => self.scale * h * k2,
            StageKind::PotentialPhase => 0.0,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}", self.kind.code(), self.scale)
    }
}

/// Ordered operator product of stages with a declared order of accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    name: String,
    stages: Vec<Stage>,
    declared_order: u32,
}

impl Scheme {
    /// Validates finiteness, nonzero Laplacian scales and the consistency conditions.
    pub fn new(name: impl Into<String>, stages: Vec<Stage>, declared_order: u32) -> Result<Self> {
        let name = name.into();
        if stages.is_empty() {
            return Err(Error::InvalidScheme(format!("{name}: empty stage list")));
        }
        if declared_order == 0 {
            return Err(Error::InvalidScheme(format!("{name}: order must be positive")));
        }
        for st in &stages {
            if !st.scale.is_finite() {
                return Err(Error::InvalidScheme(format!("{name}: non-finite scale")));
            }
            if st.kind.is_laplacian() && st.scale == 0.0 {
                return Err(Error::InvalidScheme(format!("{name}: zero Laplacian scale")));
            }
        }
        let (gamma_sum, theta_sum) = stage_sums(&stages);
        if (gamma_sum - 1.0).abs() > CONSISTENCY_TOL {
            return Err(Error::InvalidScheme(format!(
                "{name}: Laplacian scales sum to {gamma_sum}, expected 1"
            )));
        }
        if (theta_sum - 1.0).abs() > CONSISTENCY_TOL {
            return Err(Error::InvalidScheme(format!(
                "{name}: potential scales sum to {theta_sum}, expected 1"
            )));
        }
        Ok(Self {
            name,
            stages,
            declared_order,
        })
    }

    /// Parses `"P:0.5, R:1.0, P:0.5"` (kinds `P`, `R`, `E`; written as an operator product).
    pub fn parse(name: impl Into<String>, spec: &str, declared_order: u32) -> Result<Self> {
        Self::new(name, parse_stages(spec)?, declared_order)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn declared_order(&self) -> u32 {
        self.declared_order
    }

    /// Scales of the Laplacian stages in written order.
    pub fn laplacian_scales(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter(|s| s.kind.is_laplacian())
            .map(|s| s.scale)
            .collect()
    }

    pub fn potential_scales(&self) -> Vec<f64> {
        self.stages
            .iter()
            .filter(|s| !s.kind.is_laplacian())
            .map(|s| s.scale)
            .collect()
    }

    /// Same stages in reverse order.
    pub fn reversed(&self) -> Self {
        Self {
            name: format!("{}-reversed", self.name),
            stages: self.stages.iter().rev().copied().collect(),
            declared_order: self.declared_order,
        }
    }

    /// Stage list in the config syntax.
    pub fn stage_string(&self) -> String {
        self.stages
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn stage_sums(stages: &[Stage]) -> (f64, f64) {
    stages.iter().fold((0.0, 0.0), |(g, t), s| {
        if s.kind.is_laplacian() {
            (g + s.scale, t)
        } else {
            (g, t + s.scale)
        }
    })
}

/// Parses a comma-separated `kind:scale` list.
pub fn parse_stages(spec: &str) -> Result<Vec<Stage>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (kind, scale) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidScheme(format!("stage `{item}` is not kind:scale")))?;
            let kind = StageKind::from_code(kind.trim())
                .ok_or_else(|| Error::InvalidScheme(format!("unknown stage kind `{kind}`")))?;
            let scale: f64 = scale
                .trim()
                .parse()
                .map_err(|_| Error::InvalidScheme(format!("bad scale in `{item}`")))?;
            Ok(Stage { kind, scale })
        })
        .collect()
}

/// Names of the built-in schemes, in catalog order.
pub const BUILTIN_SCHEMES: [&str; 8] = [
    "lie-midpoint",
    "lie-midpoint-reversed",
    "strang-v-outside",
    "strang-r-outside",
    "exact-splitting",
    "tj4",
    "yoshida6",
    "suzuki8",
];

/// Triple jump: `γ₁ = γ₃ = 1/(2 - 2^{1/3})`, `γ₂ = -2^{1/3}/(2 - 2^{1/3})`.
pub fn triple_jump_coefficients() -> [f64; 3] {
    let cbrt2 = 2f64.cbrt();
    let outer = 1.0 / (2.0 - cbrt2);
    [outer, -cbrt2 / (2.0 - cbrt2), outer]
}

/// Yoshida (1990), order 6, solution A (s = 7), as tabulated in Hairer–Lubich–Wanner,
/// Geometric Numerical Integration, Sec. V.3.2. The central weight is `1 - 2Σ`.
const YOSHIDA6_HALF: [f64; 3] = [
    0.784_513_610_477_557_263_819_497_63,
    0.235_573_213_359_358_133_684_793_18,
    -1.177_679_984_178_871_006_946_415_68,
];

/// Suzuki & Umeno (1993), order 8 (s = 15), as tabulated in Hairer–Lubich–Wanner,
/// Geometric Numerical Integration, Sec. V.3.2. The central weight is `1 - 2Σ`.
const SUZUKI8_HALF: [f64; 7] = [
    0.741_670_364_350_612_953_448_227_80,
    -0.409_100_825_800_031_593_997_300_10,
    0.190_754_710_296_238_379_953_876_26,
    -0.573_862_471_116_082_266_656_387_73,
    0.299_064_181_303_655_923_844_463_54,
    0.334_624_918_245_298_183_784_957_98,
    0.315_293_092_396_766_596_632_056_66,
];

fn symmetric_weights(half: &[f64]) -> Vec<f64> {
    let center = 1.0 - 2.0 * half.iter().sum::<f64>();
    half.iter()
        .copied()
        .chain(std::iter::once(center))
        .chain(half.iter().rev().copied())
        .collect()
}

/// Composition weights used by `tj4`, `yoshida6` and `suzuki8`.
pub fn composition_weights(name: &str) -> Option<Vec<f64>> {
    match name {
        "tj4" => Some(triple_jump_coefficients().to_vec()),
        "yoshida6" => Some(symmetric_weights(&YOSHIDA6_HALF)),
        "suzuki8" => Some(symmetric_weights(&SUZUKI8_HALF)),
        _ => None,
    }
}

/// Symmetric composition `Π_j exp(iγ_j hV/2) R(-iγ_j hΔ) exp(iγ_j hV/2)` of the
/// Strang step, with adjacent potential half-steps merged.
pub fn strang_composition(weights: &[f64]) -> Vec<Stage> {
    let mut stages = Vec::with_capacity(2 * weights.len() + 1);
    let mut pending = 0.0;
    for &w in weights {
        stages.push(Stage::potential(pending + w / 2.0));
        stages.push(Stage::resolvent(w));
        pending = w / 2.0;
    }
    stages.push(Stage::potential(pending));
    stages
}

/// Looks up a built-in scheme by name.
pub fn builtin_scheme(name: &str) -> Result<Scheme> {
    let (stages, order) = match name {
        "lie-midpoint" => (vec![Stage::potential(1.0), Stage::resolvent(1.0)], 1),
        "lie-midpoint-reversed" => (vec![Stage::resolvent(1.0), Stage::potential(1.0)], 1),
        "strang-v-outside" => (
            vec![Stage::potential(0.5), Stage::resolvent(1.0), Stage::potential(0.5)],
            2,
        ),
        "strang-r-outside" => (
            vec![Stage::resolvent(0.5), Stage::potential(1.0), Stage::resolvent(0.5)],
            2,
        ),
        "exact-splitting" => (vec![Stage::exact(1.0), Stage::potential(1.0)], 1),
        "tj4" | "yoshida6" | "suzuki8" => {
            let weights = composition_weights(name).expect("listed composition");
            let order = match name {
                "tj4" => 4,
                "yoshida6" => 6,
                _ => 8,
            };
            (strang_composition(&weights), order)
        }
        other => return Err(Error::UnknownName(other.to_string())),
    };
    Scheme::new(name, stages, order)
}

/// All built-ins in catalog order.
pub fn builtin_catalog() -> Vec<Scheme> {
    BUILTIN_SCHEMES
        .iter()
        .map(|name| builtin_scheme(name).expect("built-in schemes are valid"))
        .collect()
}

enum Factor {
    Diagonal(Vec<Complex64>),
    Pointwise(Vec<Complex64>),
}

/// Precomputed stage factors for one `(scheme, h, grid, V)`.
pub struct Propagator {
    grid: SpectralGrid,
    transform: SpectralTransform,
    /// in application order (rightmost stage first)
    factors: Vec<Factor>,
    buf: Vec<Complex64>,
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .field("stages", &self.factors.len())
            .finish()
    }
}

impl Propagator {
    pub fn new(scheme: &Scheme, h: f64, grid: SpectralGrid, v: &PotentialSpec) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidStepSize(h));
        }
        Self::with_signed_step(scheme, h, grid, v)
    }

    /// Like [`Propagator::new`] but also accepts `h < 0` (used for adjoint checks).
    pub fn with_signed_step(scheme: &Scheme, h: f64, grid: SpectralGrid, v: &PotentialSpec) -> Result<Self> {
        if h == 0.0 || !h.is_finite() {
            return Err(Error::InvalidStepSize(h));
        }
        let potential = v.samples(&grid)?;
        let k2 = grid.squared_modes();
        let factors = scheme
            .stages()
            .iter()
            .rev()
            .map(|stage| match stage.kind {
                StageKind::PotentialPhase => Factor::Pointwise(
                    potential
                        .iter()
                        .map(|&vx| Complex64::from_polar(1.0, stage.scale * h * vx))
                        .collect(),
                ),
                _ => Factor::Diagonal(
                    k2.iter()
                        .map(|&k2| Complex64::from_polar(1.0, stage.laplacian_phase(h, k2)))
                        .collect(),
                ),
            })
            .collect();
        Ok(Self {
            grid,
            transform: SpectralTransform::new(grid),
            factors,
            buf: vec![Complex64::new(0.0, 0.0); grid.len()],
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Advances `u` by one step in place.
    pub fn step_in_place(&mut self, u: &mut FourierField) -> Result<()> {
        self.grid.ensure_same(u.grid())?;
        let coeffs = u.coeffs_mut();
        for factor in &self.factors {
            match factor {
                Factor::Diagonal(d) => coeffs.iter_mut().zip(d).for_each(|(c, f)| *c *= f),
                Factor::Pointwise(p) => {
                    self.transform.coeffs_to_samples(coeffs, &mut self.buf);
                    self.buf.iter_mut().zip(p).for_each(|(s, f)| *s *= f);
                    self.transform.samples_to_coeffs(&mut self.buf, coeffs);
                }
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("propagated field"));
        }
        Ok(())
    }

    pub fn advance(&mut self, u: &FourierField) -> Result<FourierField> {
        let mut next = u.clone();
        self.step_in_place(&mut next)?;
        Ok(next)
    }
}

/// One step of `scheme` with step size `h`.
pub fn step(scheme: &Scheme, u: &FourierField, h: f64, v: &PotentialSpec) -> Result<FourierField> {
    Propagator::new(scheme, h, *u.grid(), v)?.advance(u)
}

/// Dense one-step matrix, built from explicit DFT matrices (independent of the FFT path).
pub fn scheme_matrix(scheme: &Scheme, h: f64, grid: SpectralGrid, v: &PotentialSpec) -> Result<SpectralOperator> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStepSize(h));
    }
    let potential = v.samples(&grid)?;
    let k2 = grid.squared_modes();
    let mut m = identity_matrix(grid.len());
    for stage in scheme.stages() {
        match stage.kind {
            StageKind::PotentialPhase => {
                let values: Vec<_> = potential
                    .iter()
                    .map(|&vx| Complex64::from_polar(1.0, stage.scale * h * vx))
                    .collect();
                m *= pointwise_matrix(&grid, &values);
            }
            _ => {
                for (j, &k2) in k2.iter().enumerate() {
                    let phase = Complex64::from_polar(1.0, stage.laplacian_phase(h, k2));
                    m.column_mut(j).iter_mut().for_each(|e| *e *= phase);
                }
            }
        }
    }
    SpectralOperator::new(grid, m, false)
}

/// Receives `(step index, field)` during [`evolve`]; step 0 is the initial datum.
pub trait Observer {
    fn observe(&mut self, step: usize, u: &FourierField);
}

impl<F: FnMut(usize, &FourierField)> Observer for F {
    fn observe(&mut self, step: usize, u: &FourierField) {
        self(step, u)
    }
}

/// Forwards every `stride`-th step (and the last one) to the wrapped observer.
pub struct Strided<O> {
    inner: O,
    stride: usize,
    last: usize,
}

impl<O: Observer> Strided<O> {
    pub fn new(inner: O, stride: usize, nsteps: usize) -> Self {
        Self {
            inner,
            stride: stride.max(1),
            last: nsteps,
        }
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Observer> Observer for Strided<O> {
    fn observe(&mut self, step: usize, u: &FourierField) {
        if step.is_multiple_of(self.stride) || step == self.last {
            self.inner.observe(step, u);
        }
    }
}

/// Runs `nsteps` steps from `u0`, calling every observer on the initial datum and after each step.
pub fn evolve(
    scheme: &Scheme,
    u0: &FourierField,
    h: f64,
    nsteps: usize,
    v: &PotentialSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<FourierField> {
    let mut prop = Propagator::new(scheme, h, *u0.grid(), v)?;
    let mut u = u0.clone();
    for obs in observers.iter_mut() {
        obs.observe(0, &u);
    }
    for n in 1..=nsteps {
        prop.step_in_place(&mut u)?;
        for obs in observers.iter_mut() {
            obs.observe(n, &u);
        }
    }
    Ok(u)
}

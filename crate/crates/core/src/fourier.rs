//! Truncated Fourier representation of periodic wavefunctions on the torus.
//!
//! Coefficients are stored in natural order `-K, ..., K`. The synthesis
//! convention is `u(x) = Σ_k u_k e^{ikx}` with analysis
//! `u_k = (2π)^{-1} ∫ u(x) e^{-ikx} dx`. Under the opposite sign convention
//! (`e^{+ikx}` in the analysis) every coefficient `u_k` becomes `u_{-k}`; norms,
//! multiplication operators and the diagonal Laplacian are unaffected, only the
//! sign of odd (sine) coefficients flips.
//!
//! The collocation grid has `N = 2K + 1` points `x_j = 2πj/N`, so the discrete
//! transform pair is exactly unitary up to the `1/N` scaling and pointwise
//! multiplication by a unimodular function is an isometry of the coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Truncated Fourier lattice `{-K, ..., K}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectralGrid {
    dimension: usize,
    cutoff: usize,
}

impl SpectralGrid {
    /// Builds the lattice with modes `-cutoff..=cutoff`. Only `dimension == 1` is supported.
    pub fn new(dimension: usize, cutoff: usize) -> Result<Self> {
        if dimension != 1 {
            return Err(Error::UnsupportedDimension(dimension));
        }
        if cutoff < 1 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        Ok(Self { dimension, cutoff })
    }

    /// One-dimensional grid; shorthand for `new(1, cutoff)`.
    pub fn with_cutoff(cutoff: usize) -> Result<Self> {
        Self::new(1, cutoff)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of modes, `N = 2K + 1`.
    pub fn len(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = i64> + Clone {
        let k = self.cutoff as i64;
        -k..=k
    }

    /// Mode stored at `index`.
    pub fn mode(&self, index: usize) -> i64 {
        index as i64 - self.cutoff as i64
    }

    /// Storage index of mode `k`, if it lies on the grid.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let shifted = k + self.cutoff as i64;
        (0..self.len() as i64).contains(&shifted).then_some(shifted as usize)
    }

    /// `|k|^2` for every mode, in storage order.
    pub fn squared_modes(&self) -> Vec<f64> {
        self.modes().map(|k| (k * k) as f64).collect()
    }

    /// Collocation points `x_j = 2πj/N`.
    pub fn collocation_points(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    /// Reduces an integer frequency to its alias in `-K..=K`.
    pub fn alias(&self, k: i64) -> i64 {
        let n = self.len() as i64;
        let k_max = self.cutoff as i64;
        (k + k_max).rem_euclid(n) - k_max
    }

    pub(crate) fn ensure_same(&self, other: &SpectralGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        Ok(())
    }
}

/// Builds a grid; rejects anything but `dimension == 1` and `cutoff >= 1`.
pub fn make_grid(dimension: usize, cutoff: usize) -> Result<SpectralGrid> {
    SpectralGrid::new(dimension, cutoff)
}

/// Fourier coefficients of a wavefunction on a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn new(grid: SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("field coefficients"));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Field with a single nonzero coefficient `value` at mode `k`.
    pub fn unit_mode(grid: SpectralGrid, k: i64, value: Complex64) -> Result<Self> {
        let idx = grid.index_of(k).ok_or(Error::ModeOutOfBand {
            mode: k,
            cutoff: grid.cutoff(),
        })?;
        let mut field = Self::zeros(grid);
        field.coeffs[idx] = value;
        Ok(field)
    }

    /// Builds a field from `(mode, coefficient)` pairs; other modes are zero.
    pub fn from_modes<I>(grid: SpectralGrid, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut field = Self::zeros(grid);
        for (k, c) in modes {
            let idx = grid.index_of(k).ok_or(Error::ModeOutOfBand {
                mode: k,
                cutoff: grid.cutoff(),
            })?;
            if !c.is_finite() {
                return Err(Error::NonFinite("field coefficients"));
            }
            field.coeffs[idx] += c;
        }
        Ok(field)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode `k`, zero off the grid.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// `‖u‖ = (Σ |u_k|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖u‖_{H^s} = (Σ (1 + |k|²)^s |u_k|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.grid
            .modes()
            .zip(&self.coeffs)
            .map(|(k, c)| (1.0 + (k * k) as f64).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// H¹ norm restricted to `|k| <= band`.
    pub fn truncated_h1_norm(&self, band: usize) -> Result<f64> {
        if band > self.grid.cutoff() {
            return Err(Error::BandTooLarge {
                band,
                cutoff: self.grid.cutoff(),
            });
        }
        let band = band as i64;
        Ok(self
            .grid
            .modes()
            .zip(&self.coeffs)
            .filter(|(k, _)| k.abs() <= band)
            .map(|(k, c)| (1.0 + (k * k) as f64) * c.norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Physical samples `u(x_j)` on the collocation grid.
    pub fn to_physical(&self) -> Vec<Complex64> {
        SpectralTransform::new(self.grid).to_physical(self)
    }

    /// Inverse of [`FourierField::to_physical`].
    pub fn from_physical(grid: SpectralGrid, samples: &[Complex64]) -> Result<Self> {
        SpectralTransform::new(grid).from_physical(samples)
    }

    /// Inner product `Σ conj(u_k) v_k`.
    pub fn inner(&self, other: &FourierField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum())
    }

    /// `max_k |u_k - v_k|`.
    pub fn max_abs_diff(&self, other: &FourierField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `‖u - v‖`.
    pub fn l2_distance(&self, other: &FourierField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// Forward/inverse DFT pair on the `N`-point collocation grid.
#[derive(Clone)]
pub struct SpectralTransform {
    grid: SpectralGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralTransform")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SpectralTransform {
    pub fn new(grid: SpectralGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.len();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn to_physical(&self, u: &FourierField) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.coeffs_to_samples(u.coeffs(), &mut buf);
        buf
    }

    pub fn from_physical(&self, samples: &[Complex64]) -> Result<FourierField> {
        if samples.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: samples.len(),
            });
        }
        let mut buf = samples.to_vec();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.samples_to_coeffs(&mut buf, &mut coeffs);
        FourierField::new(self.grid, coeffs)
    }

    /// Writes physical samples of `coeffs` (natural order) into `samples`.
    pub(crate) fn coeffs_to_samples(&self, coeffs: &[Complex64], samples: &mut [Complex64]) {
        let n = self.grid.len();
        let k_max = self.grid.cutoff();
        // mode k lives at FFT slot k mod N
        for (idx, c) in coeffs.iter().enumerate() {
            samples[(idx + n - k_max) % n] = *c;
        }
        self.inverse.process(samples);
    }

    /// Overwrites `coeffs` (natural order) with the analysis of `samples`; `samples` is clobbered.
    pub(crate) fn samples_to_coeffs(&self, samples: &mut [Complex64], coeffs: &mut [Complex64]) {
        let n = self.grid.len();
        let k_max = self.grid.cutoff();
        self.forward.process(samples);
        let scale = 1.0 / n as f64;
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c = samples[(idx + n - k_max) % n] * scale;
        }
    }
}

/// Real potential given by finitely many Fourier coefficients with `W_{-n} = conj(W_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    coeffs: BTreeMap<i64, Complex64>,
}

impl PotentialSpec {
    /// Validates exact conjugate symmetry; entries equal to zero are dropped.
    pub fn new(coeffs: BTreeMap<i64, Complex64>) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        for (&n, &c) in &coeffs {
            if !c.is_finite() {
                return Err(Error::NonFinite("potential coefficients"));
            }
            let partner = coeffs.get(&-n).copied().unwrap_or(zero);
            if partner != c.conj() {
                return Err(Error::NotConjugateSymmetric(n));
            }
        }
        Ok(Self {
            coeffs: coeffs.into_iter().filter(|(_, c)| *c != zero).collect(),
        })
    }

    /// Builds from `(n, W_n)` pairs for `n >= 0`; negative modes are filled in by conjugation.
    /// The zero mode must be real.
    pub fn from_half_spectrum<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (n, c) in pairs {
            if n < 0 {
                return Err(Error::InvalidScheme(format!("half spectrum takes n >= 0, got {n}")));
            }
            if n == 0 && c.im != 0.0 {
                return Err(Error::NotConjugateSymmetric(0));
            }
            *map.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let negatives: Vec<_> = map
            .iter()
            .filter(|(&n, _)| n > 0)
            .map(|(&n, c)| (-n, c.conj()))
            .collect();
        map.extend(negatives);
        Self::new(map)
    }

    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut map = BTreeMap::new();
        map.insert(0, Complex64::new(c, 0.0));
        Self::new(map).expect("real constant is conjugate-symmetric")
    }

    /// `V(x) = cos x + sin 6x`: `V_{±1} = 1/2`, `V_{6} = -i/2`, `V_{-6} = i/2`.
    pub fn paper() -> Self {
        Self::from_half_spectrum([(1, Complex64::new(0.5, 0.0)), (6, Complex64::new(0.0, -0.5))])
            .expect("built-in potential is valid")
    }

    /// Built-in potentials: `paper-V`, `zero`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "paper-V" => Ok(Self::paper()),
            "zero" => Ok(Self::zero()),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|n|` in the support (0 for an empty potential).
    pub fn bandwidth(&self) -> usize {
        self.coeffs.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Checks that the support fits in the band of `grid`.
    pub fn check_grid(&self, grid: &SpectralGrid) -> Result<()> {
        match self.coeffs.keys().find(|n| n.unsigned_abs() as usize > grid.cutoff()) {
            Some(&mode) => Err(Error::ModeOutOfBand {
                mode,
                cutoff: grid.cutoff(),
            }),
            None => Ok(()),
        }
    }

    /// Evaluates `W(x)` (real by construction).
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&n, c)| (c * Complex64::from_polar(1.0, n as f64 * x)).re)
            .sum()
    }

    /// Real samples `W(x_j)` on the collocation grid.
    pub fn samples(&self, grid: &SpectralGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok(grid.collocation_points().into_iter().map(|x| self.eval(x)).collect())
    }
}

/// Initial data: a built-in name or explicit coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Named(String),
    Coefficients(Vec<(i64, Complex64)>),
}

/// Names accepted by [`synthesize_initial`].
pub const BUILTIN_FIELDS: &[&str] = &["paper-u0", "paper-V", "constant"];

fn sample_function(grid: SpectralGrid, f: impl Fn(f64) -> f64) -> Result<FourierField> {
    let samples: Vec<Complex64> = grid
        .collocation_points()
        .into_iter()
        .map(|x| Complex64::new(f(x), 0.0))
        .collect();
    FourierField::from_physical(grid, &samples)
}

/// Fourier coefficients of a built-in function or explicit coefficient list.
///
/// Built-ins are sampled on the collocation grid and analysed with the DFT:
/// `paper-u0` is `2/(2 - cos x)`, `paper-V` is `cos x + sin 6x`, `constant` is 1.
pub fn synthesize_initial(data: &InitialData, grid: SpectralGrid) -> Result<FourierField> {
    match data {
        InitialData::Named(name) => match name.as_str() {
            "paper-u0" => sample_function(grid, |x| 2.0 / (2.0 - x.cos())),
            "paper-V" => sample_function(grid, |x| x.cos() + (6.0 * x).sin()),
            "constant" => FourierField::unit_mode(grid, 0, Complex64::new(1.0, 0.0)),
            other => Err(Error::UnknownName(other.to_string())),
        },
        InitialData::Coefficients(pairs) => FourierField::from_modes(grid, pairs.iter().copied()),
    }
}

/// Shorthand for the smooth initial datum `2/(2 - cos x)`.
pub fn paper_initial(grid: SpectralGrid) -> FourierField {
    synthesize_initial(&InitialData::Named("paper-u0".into()), grid)
        .expect("built-in initial datum is valid on every grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_modes_and_cardinality() {
        let g = make_grid(1, 2).unwrap();
        assert_eq!(g.modes().collect::<Vec<_>>(), vec![-2, -1, 0, 1, 2]);
        assert_eq!(g.len(), 5);
        assert_eq!(make_grid(1, 64).unwrap().len(), 129);
        assert_eq!(make_grid(1, 0), Err(Error::InvalidCutoff(0)));
        assert_eq!(make_grid(2, 4), Err(Error::UnsupportedDimension(2)));
    }

    #[test]
    fn alias_wraps_into_band() {
        let g = make_grid(1, 8).unwrap();
        assert_eq!(g.alias(11), -6);
        assert_eq!(g.alias(-16), 1);
        assert_eq!(g.alias(8), 8);
        assert_eq!(g.alias(9), -8);
    }

    #[test]
    fn norms_on_simple_fields() {
        let g = make_grid(1, 4).unwrap();
        let u = FourierField::unit_mode(g, 0, c(1.0, 0.0)).unwrap();
        assert_eq!(u.l2_norm(), 1.0);

        let u = FourierField::from_modes(g, [(1, c(3.0, 0.0)), (-1, c(4.0, 0.0))]).unwrap();
        assert!((u.l2_norm() - 5.0).abs() < 1e-15);
        assert!((u.sobolev_norm(0.0) - u.l2_norm()).abs() < 1e-15);

        let u = FourierField::unit_mode(g, 1, c(1.0, 0.0)).unwrap();
        assert!((u.sobolev_norm(1.0) - 2f64.sqrt()).abs() < 1e-15);
        let u = FourierField::unit_mode(g, 2, c(1.0, 0.0)).unwrap();
        assert!((u.sobolev_norm(2.0) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn truncated_norm_band_rules() {
        let g = make_grid(1, 32).unwrap();
        let u = FourierField::unit_mode(g, 30, c(1.0, 0.0)).unwrap();
        assert_eq!(u.truncated_h1_norm(20).unwrap(), 0.0);
        assert_eq!(
            u.truncated_h1_norm(33),
            Err(Error::BandTooLarge { band: 33, cutoff: 32 })
        );
        let u = paper_initial(g);
        assert!((u.truncated_h1_norm(32).unwrap() - u.sobolev_norm(1.0)).abs() < 1e-14);
    }

    #[test]
    fn field_rejects_bad_input() {
        let g = make_grid(1, 2).unwrap();
        assert!(FourierField::new(g, vec![c(0.0, 0.0); 4]).is_err());
        assert_eq!(
            FourierField::new(g, vec![c(f64::NAN, 0.0); 5]),
            Err(Error::NonFinite("field coefficients"))
        );
        assert!(FourierField::from_modes(g, [(3, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn constant_field_is_constant_in_space() {
        let g = make_grid(1, 5).unwrap();
        let u = synthesize_initial(&InitialData::Named("constant".into()), g).unwrap();
        assert_eq!(u.coeff(0), c(1.0, 0.0));
        for s in u.to_physical() {
            assert!((s - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn unknown_name_and_out_of_band_list() {
        let g = make_grid(1, 4).unwrap();
        assert_eq!(
            synthesize_initial(&InitialData::Named("gauss".into()), g),
            Err(Error::UnknownName("gauss".into()))
        );
        let list = InitialData::Coefficients(vec![(5, c(1.0, 0.0))]);
        assert!(matches!(
            synthesize_initial(&list, g),
            Err(Error::ModeOutOfBand { mode: 5, .. })
        ));
    }

    #[test]
    fn potential_symmetry_is_enforced() {
        let mut map = BTreeMap::new();
        map.insert(1, c(0.5, 0.1));
        map.insert(-1, c(0.5, 0.1));
        assert_eq!(PotentialSpec::new(map), Err(Error::NotConjugateSymmetric(-1)));

        let v = PotentialSpec::paper();
        assert_eq!(v.coeff(1), c(0.5, 0.0));
        assert_eq!(v.coeff(-1), c(0.5, 0.0));
        assert_eq!(v.coeff(6), c(0.0, -0.5));
        assert_eq!(v.coeff(-6), c(0.0, 0.5));
        assert_eq!(v.bandwidth(), 6);
        let x = 0.3;
        assert!((v.eval(x) - (x.cos() + (6.0 * x).sin())).abs() < 1e-15);
        assert!(v.check_grid(&make_grid(1, 5).unwrap()).is_err());
    }

    #[test]
    fn sampled_potential_matches_exact_coefficients() {
        let g = make_grid(1, 16).unwrap();
        let sampled = synthesize_initial(&InitialData::Named("paper-V".into()), g).unwrap();
        let exact = PotentialSpec::paper();
        for k in g.modes() {
            assert!((sampled.coeff(k) - exact.coeff(k)).norm() < 1e-15, "mode {k}");
        }
    }

    #[test]
    fn paper_u0_matches_closed_form() {
        let g = make_grid(1, 64).unwrap();
        let u = paper_initial(g);
        let r = 2.0 - 3f64.sqrt();
        for k in g.modes() {
            let expected = 2.0 / 3f64.sqrt() * r.powi(k.abs() as i32);
            assert!((u.coeff(k) - c(expected, 0.0)).norm() < 1e-15, "mode {k}");
        }
        // beyond k ~ 17 the coefficients sink below the f64 rounding floor of the DFT
        for k in 1..=16 {
            let ratio = u.coeff(k + 1).norm() / u.coeff(k).norm();
            assert!((ratio - r).abs() < 1e-6, "k = {k}: {ratio}");
        }
    }

    #[test]
    fn paper_u0_norms_against_quadrature() {
        let g = make_grid(1, 64).unwrap();
        let u = paper_initial(g);
        // trapezoid rule is spectrally accurate for periodic integrands
        let m = 4096;
        let quad = (0..m)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / m as f64;
                (2.0 / (2.0 - x.cos())).powi(2)
            })
            .sum::<f64>()
            / m as f64;
        assert!((u.l2_norm() - quad.sqrt()).abs() < 1e-10);

        let brute: f64 = (-20i64..=20)
            .map(|k| (1.0 + (k * k) as f64) * u.coeff(k).norm_sqr())
            .sum();
        assert!((u.truncated_h1_norm(20).unwrap() - brute.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = make_grid(1, 10).unwrap();
        let coeffs: Vec<_> = (0..g.len())
            .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let u = FourierField::new(g, coeffs).unwrap();
        let samples = u.to_physical();
        let back = FourierField::from_physical(g, &samples).unwrap();
        assert!(u.max_abs_diff(&back).unwrap() <= 1e-13);
        let sample_norm = (samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / g.len() as f64).sqrt();
        assert!((sample_norm - u.l2_norm()).abs() <= 1e-13);
    }

    #[test]
    fn synthesis_convention_is_e_plus_ikx() {
        let g = make_grid(1, 3).unwrap();
        let u = FourierField::unit_mode(g, 1, c(1.0, 0.0)).unwrap();
        for (s, x) in u.to_physical().iter().zip(g.collocation_points()) {
            assert!((s - Complex64::from_polar(1.0, x)).norm() < 1e-14);
        }
    }

    fn field_strategy(cutoff: usize) -> impl Strategy<Value = FourierField> {
        let g = make_grid(1, cutoff).unwrap();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len())
            .prop_map(move |v| FourierField::new(g, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval_holds(u in field_strategy(12)) {
            let samples = u.to_physical();
            let n = u.grid().len() as f64;
            let sample_sq = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n;
            let norm_sq = u.l2_norm().powi(2);
            prop_assert!((sample_sq - norm_sq).abs() <= 1e-12 * norm_sq.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn sobolev_norm_monotone_in_s(u in field_strategy(10), s in -2.0f64..3.0, ds in 0.0f64..2.0) {
            prop_assert!(u.sobolev_norm(s) <= u.sobolev_norm(s + ds) * (1.0 + 1e-15));
        }

        #[test]
        fn truncated_h1_nondecreasing_in_band(u in field_strategy(10), band in 0usize..10) {
            prop_assert!(u.truncated_h1_norm(band).unwrap() <= u.truncated_h1_norm(band + 1).unwrap());
        }
    }
}

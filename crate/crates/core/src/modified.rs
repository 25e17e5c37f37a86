//! Modified energy of the midpoint-resolvent splitting `exp(ihV) R(-ihΔ)`.
//!
//! The one-step map is written as `exp(ih S(h))` with
//! `h S(h) = Z₀ + h Z₁ + h² Z₂ + …`, where
//!
//! * `Z₀ = diag(λ_k)`, `λ_k = 2 atan(h|k|²/2)`,
//! * `Z₁ = Σ_k (B_k/k!) i^k ad_{Z₀}^k(V)`, summed in closed form entrywise as
//!   `V_{kℓ} · f(λ_k - λ_ℓ)` with `f(x) = ix/(e^{ix} - 1)`,
//! * `(ℓ+1) Z_{ℓ+1} = Σ_k (B_k/k!) i^k Σ_{ℓ₁+…+ℓ_k=ℓ} ad_{Z_{ℓ₁}}⋯ad_{Z_{ℓ_k}}(V)`.
//!
//! Because `λ_k ∈ [0, π)`, `ad_{Z₀}` has α-norm at most π and the series in
//! `Z₁` converges geometrically (the Bernoulli series has radius 2π).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bernoulli::BernoulliTable;
use crate::error::{Error, Result};
use crate::fourier::{FourierField, SpectralGrid};
use crate::operator::{product_constant, DiagonalOperator, SpectralOperator};

/// Below this `|x|` the Taylor branch of `ix/(e^{ix} - 1)` is used.
pub const PHASE_TAYLOR_THRESHOLD: f64 = 1e-4;
/// Default truncation order of the modified generator.
pub const DEFAULT_L_MAX: usize = 4;
/// Default number of Bernoulli terms in the recursion.
pub const DEFAULT_K_MAX: usize = 20;
/// Default cap on operator products spent by the recursion.
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Bernoulli terms used for the majorant constants.
const MAJORANT_TERMS: usize = 60;

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStepSize(h));
    }
    Ok(())
}

/// `Z₀ = diag(2 atan(h|k|²/2))`.
pub fn z0_diagonal(h: f64, grid: SpectralGrid) -> Result<DiagonalOperator> {
    check_step(h)?;
    DiagonalOperator::from_symbol(grid, |k| 2.0 * (h * (k * k) as f64 / 2.0).atan())
}

/// `G(x) = Σ_j 2 atan(γ_j x)`: the phase of `Π_j R(iγ_j 2x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionPhase {
    gammas: Vec<f64>,
}

impl CompositionPhase {
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.gammas.iter().map(|g| 2.0 * (g * x).atan()).sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.gammas.iter().map(|g| 2.0 * g / (1.0 + (g * x).powi(2))).sum()
    }
}

/// Phase function of a composition of resolvent stages.
pub fn composition_phase_fn(gammas: &[f64]) -> CompositionPhase {
    CompositionPhase {
        gammas: gammas.to_vec(),
    }
}

/// `Z₀ = diag(Σ_j 2 atan(γ_j h|k|²/2))` for a product of resolvent stages.
pub fn z0_composition(gammas: &[f64], h: f64, grid: SpectralGrid) -> Result<DiagonalOperator> {
    check_step(h)?;
    let sum: f64 = gammas.iter().sum();
    if (sum - 1.0).abs() > crate::scheme::CONSISTENCY_TOL {
        return Err(Error::InvalidScheme(format!("gammas sum to {sum}, expected 1")));
    }
    let g = composition_phase_fn(gammas);
    DiagonalOperator::from_symbol(grid, |k| g.eval(h * (k * k) as f64 / 2.0))
}

/// `f(x) = ix/(e^{ix} - 1)` with the removable singularity at 0 filled in.
pub fn phase_factor(x: f64) -> Complex64 {
    if x.abs() < PHASE_TAYLOR_THRESHOLD {
        // 1 - ix/2 - x²/12 + x⁴/720
        let x2 = x * x;
        Complex64::new(1.0 - x2 / 12.0 + x2 * x2 / 720.0, -x / 2.0)
    } else {
        let ix = Complex64::new(0.0, x);
        ix / (ix.exp() - 1.0)
    }
}

/// Closed form `(Z₁)_{kℓ} = V_{kℓ} f(λ_k - λ_ℓ)`.
pub fn z1_closed_form(v_op: &SpectralOperator, z0: &DiagonalOperator) -> Result<SpectralOperator> {
    v_op.grid().ensure_same(z0.grid())?;
    let lambda = z0.diag();
    let n = lambda.len();
    let m = DMatrix::from_fn(n, n, |i, j| v_op.matrix()[(i, j)] * phase_factor(lambda[i] - lambda[j]));
    Ok(SpectralOperator::from_matrix_unchecked(*v_op.grid(), m, true))
}

/// `c_k = B_k i^k / k!`.
fn series_coefficients(table: &BernoulliTable, kmax: usize) -> Vec<Complex64> {
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    (0..=kmax).map(|k| i_pow[k % 4] * table.over_factorial(k)).collect()
}

/// Partial sum `V + Σ_{k=1}^{kmax} (B_k/k!) i^k ad_{Z₀}^k(V)`.
pub fn z1_series(v_op: &SpectralOperator, z0: &DiagonalOperator, kmax: usize) -> Result<SpectralOperator> {
    v_op.grid().ensure_same(z0.grid())?;
    let table = BernoulliTable::new(kmax.max(1));
    let coeffs = series_coefficients(&table, kmax);
    let mut term = v_op.matrix().clone();
    let mut sum = term.clone();
    for c in coeffs.iter().skip(1) {
        term = z0
            .ad(&SpectralOperator::from_matrix_unchecked(*v_op.grid(), term, false))?
            .into_matrix();
        sum += &term * *c;
    }
    Ok(SpectralOperator::from_matrix_unchecked(*v_op.grid(), sum, true))
}

/// Truncation and cost limits for [`z_ell_recursion_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecursionConfig {
    pub l_max: usize,
    pub k_max: usize,
    pub budget: u64,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        Self {
            l_max: DEFAULT_L_MAX,
            k_max: DEFAULT_K_MAX,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl RecursionConfig {
    /// Dense operator products spent by the recursion: each `ad_{Z_j}` with `j >= 1`
    /// costs two; `ad_{Z₀}` is applied entrywise.
    pub fn product_count(&self) -> u64 {
        let levels: u64 = (1..self.l_max.max(1) as u64).sum();
        2 * self.k_max as u64 * levels
    }
}

/// `[Z₂, …, Z_{l_max}]` with default `k_max` and budget.
pub fn z_ell_recursion(
    v_op: &SpectralOperator,
    z0: &DiagonalOperator,
    l_max: usize,
    k_max: usize,
) -> Result<Vec<SpectralOperator>> {
    z_ell_recursion_with(
        v_op,
        z0,
        RecursionConfig {
            l_max,
            k_max,
            budget: DEFAULT_BUDGET,
        },
    )
}

/// Solves the recursion for `Z₂..=Z_{l_max}` (with `Z₁` from the closed form).
///
/// Compositions `ℓ₁ + … + ℓ_k = ℓ` are summed by dynamic programming: writing
/// `A(t) = Σ_j t^j ad_{Z_j}`, the table `T[k][m]` holds the `t^m` coefficient of
/// `A(t)^k (V)` and satisfies `T[k][m] = Σ_{j<=m} ad_{Z_j} T[k-1][m-j]`.
pub fn z_ell_recursion_with(
    v_op: &SpectralOperator,
    z0: &DiagonalOperator,
    config: RecursionConfig,
) -> Result<Vec<SpectralOperator>> {
    let RecursionConfig { l_max, k_max, budget } = config;
    if l_max < 2 {
        return Err(Error::TruncationOrder {
            requested: l_max,
            available: 2,
        });
    }
    let needed = config.product_count();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let grid = *v_op.grid();
    grid.ensure_same(z0.grid())?;
    let n = grid.len();
    let table = BernoulliTable::new(k_max.max(1));
    let coeffs = series_coefficients(&table, k_max);
    let lambda = z0.diag();
    let ad0 = |w: &DMatrix<Complex64>| DMatrix::from_fn(n, n, |i, j| w[(i, j)] * (lambda[i] - lambda[j]));
    let ad = |z: &DMatrix<Complex64>, w: &DMatrix<Complex64>| z * w - w * z;

    // z[j] for j >= 1; z[0] is unused (Z₀ is applied entrywise)
    let mut z: Vec<DMatrix<Complex64>> = vec![DMatrix::zeros(n, n)];
    z.push(z1_closed_form(v_op, z0)?.into_matrix());

    // t[k][m], m <= current level
    let mut t: Vec<Vec<DMatrix<Complex64>>> = vec![vec![v_op.matrix().clone()]];
    for _ in 1..=k_max {
        t.push(Vec::new());
    }
    // level m = 0: T[k][0] = ad_{Z₀}^k V
    for k in 1..=k_max {
        let next = ad0(&t[k - 1][0]);
        t[k].push(next);
    }
    t[0].extend((1..l_max).map(|_| DMatrix::zeros(n, n)));

    let mut out = Vec::with_capacity(l_max - 1);
    for level in 1..l_max {
        let mut rhs = DMatrix::zeros(n, n);
        for k in 1..=k_max {
            let mut acc = ad0(&t[k - 1][level]);
            for j in 1..=level {
                acc += ad(&z[j], &t[k - 1][level - j]);
            }
            rhs += &acc * coeffs[k];
            t[k].push(acc);
        }
        let z_next = rhs / Complex64::new((level + 1) as f64, 0.0);
        let op = SpectralOperator::from_matrix_unchecked(grid, z_next, false);
        if !op.is_symmetric(1e-9) {
            return Err(Error::NotSymmetric(op.hermitian_defect()));
        }
        let op = op.symmetrized();
        z.push(op.matrix().clone());
        out.push(op);
    }
    Ok(out)
}

/// `S = (1/h)(Z₀ + Σ_{ℓ=1}^{L} h^ℓ Z_ℓ)` where `corrections = [Z₁, Z₂, …]`.
pub fn assemble_s(
    h: f64,
    z0: &DiagonalOperator,
    corrections: &[SpectralOperator],
    order: usize,
) -> Result<SpectralOperator> {
    check_step(h)?;
    if order > corrections.len() {
        return Err(Error::TruncationOrder {
            requested: order,
            available: corrections.len(),
        });
    }
    let mut m = z0.to_operator().into_matrix() / Complex64::new(h, 0.0);
    for (ell, z) in corrections.iter().take(order).enumerate() {
        z0.grid().ensure_same(z.grid())?;
        m += z.matrix() * Complex64::new(h.powi(ell as i32), 0.0);
    }
    SpectralOperator::from_matrix_unchecked(*z0.grid(), m, false).into_symmetric()
}

/// `Z₀` together with corrections `Z₁..=Z_L` for one step size.
#[derive(Debug, Clone)]
pub struct ModifiedEnergy {
    h: f64,
    z0: DiagonalOperator,
    corrections: Vec<SpectralOperator>,
}

impl ModifiedEnergy {
    /// Builds `Z₁..=Z_{config.l_max}` for the midpoint splitting with potential operator `v_op`.
    pub fn build(v_op: &SpectralOperator, h: f64, config: RecursionConfig) -> Result<Self> {
        let z0 = z0_diagonal(h, *v_op.grid())?;
        Self::build_with_z0(v_op, h, z0, config)
    }

    /// Same construction for an arbitrary diagonal `Z₀` (e.g. from [`z0_composition`]).
    ///
    /// For composition schemes this is an extrapolation of the midpoint theory
    /// and carries no conservation guarantee.
    pub fn build_with_z0(
        v_op: &SpectralOperator,
        h: f64,
        z0: DiagonalOperator,
        config: RecursionConfig,
    ) -> Result<Self> {
        check_step(h)?;
        let mut corrections = Vec::with_capacity(config.l_max);
        if config.l_max >= 1 {
            corrections.push(z1_closed_form(v_op, &z0)?);
        }
        if config.l_max >= 2 {
            corrections.extend(z_ell_recursion_with(v_op, &z0, config)?);
        }
        Ok(Self { h, z0, corrections })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn z0(&self) -> &DiagonalOperator {
        &self.z0
    }

    /// `[Z₁, …, Z_L]`.
    pub fn corrections(&self) -> &[SpectralOperator] {
        &self.corrections
    }

    pub fn truncation_order(&self) -> usize {
        self.corrections.len()
    }

    /// `S_L` for `L <= truncation_order()`.
    pub fn assemble(&self, order: usize) -> Result<SpectralOperator> {
        assemble_s(self.h, &self.z0, &self.corrections, order)
    }
}

/// `⟨u|-Δ + V|u⟩ = Σ |k|²|u_k|² + ⟨u|V|u⟩`.
pub fn exact_energy(u: &FourierField, v_op: &SpectralOperator) -> Result<f64> {
    u.grid().ensure_same(v_op.grid())?;
    let kinetic: f64 = u
        .grid()
        .modes()
        .zip(u.coeffs())
        .map(|(k, c)| (k * k) as f64 * c.norm_sqr())
        .sum();
    Ok(kinetic + v_op.quadratic_form(u)?)
}

/// `|⟨u|S|u⟩ - ⟨u|-Δ + V|u⟩|`.
pub fn energy_gap(u: &FourierField, s: &SpectralOperator, v_op: &SpectralOperator) -> Result<f64> {
    Ok((s.quadratic_form(u)? - exact_energy(u, v_op)?).abs())
}

/// `M = max_k |B_k| ρ^k / k!` for `ρ = 3π/2`, over `k <= 60`.
pub fn bernoulli_majorant() -> f64 {
    BernoulliTable::new(MAJORANT_TERMS).majorant_constant(1.5 * PI)
}

/// `Σ_k (|B_k|/k!) π^k` over `k <= 60`: bounds `‖Z₁‖_α / ‖V‖_α`.
pub fn z1_norm_constant() -> f64 {
    BernoulliTable::new(MAJORANT_TERMS).absolute_series(PI)
}

/// Convergence radius estimate `h₀ = π / (32 M C_α ‖V‖_α)`; infinite for `V = 0`.
pub fn h0_estimate(v_op: &SpectralOperator, alpha: f64) -> Result<f64> {
    let v_norm = v_op.alpha_norm(alpha)?;
    let c_alpha = product_constant(alpha, v_op.grid())?;
    if v_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(PI / (32.0 * bernoulli_majorant() * c_alpha * v_norm))
}

//! Dense operators on the truncated Fourier lattice.
//!
//! An operator `A = (A_{kℓ})` acts on coefficient vectors; rows and columns are
//! indexed by modes in storage order `-K..=K`. The α-norm
//! `‖A‖_α = sup_{k,ℓ} |A_{kℓ}| (1 + |k - ℓ|^α)` measures off-diagonal decay.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierField, PotentialSpec, SpectralGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance used to verify `A_{kℓ} = conj(A_{ℓk})`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Tolerance for `‖U*U - I‖_op` when taking a unitary logarithm.
pub const UNITARY_TOL: f64 = 1e-10;
/// Eigenphases closer than this to ±π are refused by [`unitary_log_generator`].
pub const BRANCH_MARGIN: f64 = 1e-6;

/// Dense complex `N×N` operator on a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    grid: SpectralGrid,
    entries: DMatrix<Complex64>,
    symmetric_hint: bool,
}

impl SpectralOperator {
    /// Wraps a matrix. When `symmetric_hint` is set the Hermitian property is verified.
    pub fn new(grid: SpectralGrid, entries: DMatrix<Complex64>, symmetric_hint: bool) -> Result<Self> {
        let n = grid.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        if entries.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        let op = Self {
            grid,
            entries,
            symmetric_hint,
        };
        if symmetric_hint {
            op.check_symmetric()?;
        }
        Ok(op)
    }

    pub(crate) fn from_matrix_unchecked(grid: SpectralGrid, entries: DMatrix<Complex64>, symmetric_hint: bool) -> Self {
        Self {
            grid,
            entries,
            symmetric_hint,
        }
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        let n = grid.len();
        Self::from_matrix_unchecked(grid, DMatrix::zeros(n, n), true)
    }

    pub fn identity(grid: SpectralGrid) -> Self {
        let n = grid.len();
        Self::from_matrix_unchecked(grid, DMatrix::identity(n, n), true)
    }

    /// Builds `A_{kℓ} = f(k, ℓ)` over modes.
    pub fn from_fn(grid: SpectralGrid, mut f: impl FnMut(i64, i64) -> Complex64) -> Result<Self> {
        let n = grid.len();
        let entries = DMatrix::from_fn(n, n, |i, j| f(grid.mode(i), grid.mode(j)));
        Self::new(grid, entries, false)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn symmetric_hint(&self) -> bool {
        self.symmetric_hint
    }

    /// Entry `A_{kℓ}` addressed by modes.
    pub fn entry(&self, k: i64, l: i64) -> Complex64 {
        match (self.grid.index_of(k), self.grid.index_of(l)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => ZERO,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max_{k,ℓ} |A_{kℓ} - conj(A_{ℓk})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// True when the Hermitian defect is within `tol` relative to the largest entry.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol * self.max_abs().max(1.0)
    }

    fn check_symmetric(&self) -> Result<()> {
        if self.is_symmetric(SYMMETRY_TOL) {
            Ok(())
        } else {
            Err(Error::NotSymmetric(self.hermitian_defect()))
        }
    }

    /// Marks the operator symmetric after verifying it.
    pub fn into_symmetric(mut self) -> Result<Self> {
        self.check_symmetric()?;
        self.symmetric_hint = true;
        Ok(self)
    }

    /// Replaces `A` by `(A + A*)/2` and sets the symmetric hint.
    pub fn symmetrized(&self) -> Self {
        let sym = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        Self::from_matrix_unchecked(self.grid, sym, true)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.grid, self.entries.adjoint(), self.symmetric_hint)
    }

    /// `‖A‖_α = sup |A_{kℓ}| (1 + |k - ℓ|^α)` over the truncated lattice; requires `α > d`.
    pub fn alpha_norm(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha, &self.grid)?;
        let n = self.grid.len();
        let mut sup = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let dist = (i as f64 - j as f64).abs();
                sup = sup.max(self.entries[(i, j)].norm() * (1.0 + dist.powf(alpha)));
            }
        }
        Ok(sup)
    }

    /// Matrix product `AB`.
    pub fn compose(&self, other: &SpectralOperator) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_matrix_unchecked(
            self.grid,
            &self.entries * &other.entries,
            false,
        ))
    }

    /// `ad_A(B) = AB - BA`.
    pub fn commutator(&self, other: &SpectralOperator) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let ab = &self.entries * &other.entries;
        let ba = &other.entries * &self.entries;
        Ok(Self::from_matrix_unchecked(self.grid, ab - ba, false))
    }

    pub fn add(&self, other: &SpectralOperator) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_matrix_unchecked(
            self.grid,
            &self.entries + &other.entries,
            self.symmetric_hint && other.symmetric_hint,
        ))
    }

    pub fn sub(&self, other: &SpectralOperator) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_matrix_unchecked(
            self.grid,
            &self.entries - &other.entries,
            self.symmetric_hint && other.symmetric_hint,
        ))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let keeps_symmetry = self.symmetric_hint && factor.im == 0.0;
        Self::from_matrix_unchecked(self.grid, &self.entries * factor, keeps_symmetry)
    }

    /// Matrix-vector product.
    pub fn apply(&self, u: &FourierField) -> Result<FourierField> {
        self.grid.ensure_same(u.grid())?;
        let v = DVector::from_column_slice(u.coeffs());
        let w = &self.entries * v;
        FourierField::new(self.grid, w.iter().copied().collect())
    }

    /// `⟨u|A|u⟩ = Σ conj(u_k) A_{kℓ} u_ℓ` for symmetric `A`.
    pub fn quadratic_form(&self, u: &FourierField) -> Result<f64> {
        self.grid.ensure_same(u.grid())?;
        self.check_symmetric()?;
        let value = self.raw_quadratic_form(u.coeffs());
        debug_assert!(
            value.im.abs() <= 1e-10 * (value.re.abs() + self.max_abs() * u.l2_norm().powi(2)).max(1e-300),
            "imaginary part {} in quadratic form",
            value.im
        );
        Ok(value.re)
    }

    pub(crate) fn raw_quadratic_form(&self, coeffs: &[Complex64]) -> Complex64 {
        let n = self.grid.len();
        let mut total = ZERO;
        for j in 0..n {
            let mut col = ZERO;
            for i in 0..n {
                col += coeffs[i].conj() * self.entries[(i, j)];
            }
            total += col * coeffs[j];
        }
        total
    }

    /// Largest singular value by power iteration on `A*A`.
    pub fn op_norm(&self) -> f64 {
        op_norm(&self.entries)
    }
}

/// Largest singular value of `m` via power iteration on `m* m`
/// (relative tolerance 1e-10, at most `10·N` iterations).
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    // deterministic start vector with no special structure
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v = DVector::from_fn(n, |_, _| Complex64::new(next(), next()));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= Complex64::new(norm, 0.0);
    let adj = m.adjoint();
    let mut estimate = 0.0;
    for _ in 0..(10 * n).max(1) {
        let w = &adj * (m * &v);
        let lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(lambda, 0.0);
        let converged = (lambda - estimate).abs() <= 1e-10 * lambda;
        estimate = lambda;
        if converged {
            break;
        }
    }
    estimate.sqrt()
}

fn check_alpha(alpha: f64, grid: &SpectralGrid) -> Result<()> {
    let min = grid.dimension() as f64;
    if !(alpha > min) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha { alpha, min });
    }
    Ok(())
}

fn lattice_weight_sum(alpha: f64, grid: &SpectralGrid) -> f64 {
    grid.modes().map(|p| 1.0 / (1.0 + (p.abs() as f64).powf(alpha))).sum()
}

/// Upper-bound surrogate for the product constant: `‖AB‖_α <= C_α ‖A‖_α ‖B‖_α`
/// with `C_α = 2^α Σ_{|p|<=K} 1/(1 + |p|^α)`.
pub fn product_constant(alpha: f64, grid: &SpectralGrid) -> Result<f64> {
    check_alpha(alpha, grid)?;
    Ok(2f64.powf(alpha) * lattice_weight_sum(alpha, grid))
}

/// `M_α = Σ_{|p|<=K} 1/(1 + |p|^α)`, so that `|⟨u|B|u⟩| <= M_α ‖B‖_α ‖u‖²`.
pub fn quadratic_form_constant(alpha: f64, grid: &SpectralGrid) -> Result<f64> {
    check_alpha(alpha, grid)?;
    Ok(lattice_weight_sum(alpha, grid))
}

/// Real diagonal operator `diag(λ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    grid: SpectralGrid,
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(grid: SpectralGrid, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: diag.len(),
            });
        }
        if diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("diagonal entries"));
        }
        Ok(Self { grid, diag })
    }

    /// Diagonal with entries `f(k)`.
    pub fn from_symbol(grid: SpectralGrid, f: impl Fn(i64) -> f64) -> Result<Self> {
        Self::new(grid, grid.modes().map(f).collect())
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `λ_k` for mode `k`.
    pub fn value(&self, k: i64) -> f64 {
        self.grid.index_of(k).map_or(0.0, |i| self.diag[i])
    }

    pub fn to_operator(&self) -> SpectralOperator {
        let n = self.grid.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.diag[i], 0.0)
            } else {
                ZERO
            }
        });
        SpectralOperator::from_matrix_unchecked(self.grid, m, true)
    }

    /// `ad_Λ(W)` computed entrywise as `(λ_k - λ_ℓ) W_{kℓ}`.
    pub fn ad(&self, w: &SpectralOperator) -> Result<SpectralOperator> {
        self.grid.ensure_same(w.grid())?;
        let n = self.grid.len();
        let m = DMatrix::from_fn(n, n, |i, j| w.matrix()[(i, j)] * (self.diag[i] - self.diag[j]));
        Ok(SpectralOperator::from_matrix_unchecked(self.grid, m, false))
    }

    /// Applies `Λ` to a field.
    pub fn apply(&self, u: &FourierField) -> Result<FourierField> {
        self.grid.ensure_same(u.grid())?;
        FourierField::new(
            self.grid,
            u.coeffs().iter().zip(&self.diag).map(|(c, d)| c * *d).collect(),
        )
    }
}

/// Toeplitz operator `W_{kℓ} = W_{k-ℓ}` of multiplication by a real potential.
pub fn toeplitz_from_potential(v: &PotentialSpec, grid: SpectralGrid) -> SpectralOperator {
    let n = grid.len();
    let m = DMatrix::from_fn(n, n, |i, j| v.coeff(grid.mode(i) - grid.mode(j)));
    SpectralOperator::from_matrix_unchecked(grid, m, true)
}

/// Circulant operator of pointwise multiplication on the collocation grid:
/// `C_{kℓ} = W_{alias(k-ℓ)}`. Equal to the Toeplitz operator when no product
/// frequency leaves the band.
pub fn collocation_potential(v: &PotentialSpec, grid: SpectralGrid) -> Result<SpectralOperator> {
    v.check_grid(&grid)?;
    let n = grid.len();
    let m = DMatrix::from_fn(n, n, |i, j| v.coeff(grid.alias(grid.mode(i) - grid.mode(j))));
    Ok(SpectralOperator::from_matrix_unchecked(grid, m, true))
}

/// `‖U*U - I‖_op`.
pub fn unitary_defect(u: &SpectralOperator) -> f64 {
    let n = u.grid().len();
    let gram = u.matrix().adjoint() * u.matrix() - DMatrix::<Complex64>::identity(n, n);
    op_norm(&gram)
}

/// `exp(i t S)` for symmetric `S`, via Hermitian eigendecomposition.
pub fn hermitian_exp(s: &SpectralOperator, t: f64) -> Result<SpectralOperator> {
    s.check_symmetric()?;
    let sym = s.symmetrized();
    let eig = SymmetricEigen::new(sym.into_matrix());
    let q = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, t * l)),
    ));
    let m = q * phases * q.adjoint();
    Ok(SpectralOperator::from_matrix_unchecked(*s.grid(), m, false))
}

/// Generator `S = (1/(ih)) log U` of a unitary `U`, principal branch.
///
/// Uses the complex Schur form `U = Q T Q*`, which is diagonal for normal
/// matrices. Refuses eigenphases within [`BRANCH_MARGIN`] of ±π.
pub fn unitary_log_generator(u: &SpectralOperator, h: f64) -> Result<SpectralOperator> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStepSize(h));
    }
    let defect = unitary_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let n = u.grid().len();
    let schur = Schur::try_new(u.matrix().clone(), f64::EPSILON, 100 * n).ok_or(Error::NoConvergence)?;
    let (q, t) = schur.unpack();
    let mut phases = Vec::with_capacity(n);
    for i in 0..n {
        let phase = t[(i, i)].arg();
        if std::f64::consts::PI - phase.abs() < BRANCH_MARGIN {
            return Err(Error::BranchAmbiguity {
                phase,
                margin: BRANCH_MARGIN,
            });
        }
        phases.push(Complex64::new(phase / h, 0.0));
    }
    let d = DMatrix::from_diagonal(&DVector::from_vec(phases));
    let s = &q * d * q.adjoint();
    let s = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(SpectralOperator::from_matrix_unchecked(*u.grid(), s, true))
}

/// Dense DFT matrices `(F, F⁻¹)` with `coeffs = F · samples`, `samples = F⁻¹ · coeffs`.
pub(crate) fn dft_matrices(grid: &SpectralGrid) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = grid.len();
    let xs = grid.collocation_points();
    let analysis = DMatrix::from_fn(n, n, |i, j| {
        Complex64::from_polar(1.0 / n as f64, -(grid.mode(i) as f64) * xs[j])
    });
    let synthesis = DMatrix::from_fn(n, n, |j, i| Complex64::from_polar(1.0, grid.mode(i) as f64 * xs[j]));
    (analysis, synthesis)
}

/// Dense matrix of "multiply pointwise by `f(x_j)`" acting on coefficients.
pub(crate) fn pointwise_matrix(grid: &SpectralGrid, values: &[Complex64]) -> DMatrix<Complex64> {
    let (analysis, synthesis) = dft_matrices(grid);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    analysis * d * synthesis
}

pub(crate) fn identity_matrix(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::make_grid;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_operator(grid: SpectralGrid, bandwidth: i64, rng: &mut StdRng) -> SpectralOperator {
        SpectralOperator::from_fn(grid, |k, l| {
            if (k - l).abs() <= bandwidth {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                ZERO
            }
        })
        .unwrap()
    }

    fn random_symmetric(grid: SpectralGrid, rng: &mut StdRng) -> SpectralOperator {
        random_operator(grid, grid.cutoff() as i64 * 2, rng).symmetrized()
    }

    fn random_field(grid: SpectralGrid, rng: &mut StdRng) -> FourierField {
        FourierField::new(
            grid,
            (0..grid.len())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn alpha_norm_examples() {
        let g = make_grid(1, 6).unwrap();
        let id = SpectralOperator::identity(g);
        for alpha in [1.5, 2.0, 3.0] {
            assert_eq!(id.alpha_norm(alpha).unwrap(), 1.0);
        }
        let single = SpectralOperator::from_fn(g, |k, l| if (k, l) == (2, 0) { ONE } else { ZERO }).unwrap();
        assert_eq!(single.alpha_norm(2.0).unwrap(), 5.0);
        assert!(matches!(id.alpha_norm(1.0), Err(Error::InvalidAlpha { .. })));

        let v = toeplitz_from_potential(&PotentialSpec::paper(), g);
        assert!((v.alpha_norm(2.0).unwrap() - 18.5).abs() < 1e-14);
    }

    #[test]
    fn commutator_identities() {
        let g = make_grid(1, 5).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_operator(g, 3, &mut rng);
        assert_eq!(a.commutator(&a).unwrap().max_abs(), 0.0);

        let lambda = DiagonalOperator::from_symbol(g, |k| (k as f64).powi(2) * 0.3 - 1.0).unwrap();
        let w = random_operator(g, 10, &mut rng);
        let dense = lambda.to_operator().commutator(&w).unwrap();
        let entrywise = lambda.ad(&w).unwrap();
        for k in g.modes() {
            for l in g.modes() {
                let expected = (lambda.value(k) - lambda.value(l)) * w.entry(k, l);
                assert!((dense.entry(k, l) - expected).norm() < 1e-13);
                assert!((entrywise.entry(k, l) - expected).norm() == 0.0);
            }
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = SpectralOperator::identity(make_grid(1, 3).unwrap());
        let b = SpectralOperator::identity(make_grid(1, 4).unwrap());
        assert!(matches!(a.compose(&b), Err(Error::GridMismatch { .. })));
        assert!(matches!(a.commutator(&b), Err(Error::GridMismatch { .. })));
        let u = FourierField::zeros(make_grid(1, 4).unwrap());
        assert!(a.apply(&u).is_err());
    }

    #[test]
    fn quadratic_form_examples() {
        let g = make_grid(1, 4).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let u = random_field(g, &mut rng);
        let id = SpectralOperator::identity(g);
        assert!((id.quadratic_form(&u).unwrap() - u.l2_norm().powi(2)).abs() < 1e-13);

        let lap = DiagonalOperator::from_symbol(g, |k| (k * k) as f64)
            .unwrap()
            .to_operator();
        let e1 = FourierField::unit_mode(g, 1, ONE).unwrap();
        assert_eq!(lap.quadratic_form(&e1).unwrap(), 1.0);

        let skew = SpectralOperator::from_fn(g, |k, l| if k - l == 1 { ONE } else { ZERO }).unwrap();
        assert!(matches!(skew.quadratic_form(&u), Err(Error::NotSymmetric(_))));
        assert!(SpectralOperator::new(g, skew.matrix().clone(), true).is_err());
    }

    #[test]
    fn toeplitz_structure_and_constant_potential() {
        let g = make_grid(1, 8).unwrap();
        let constant = toeplitz_from_potential(&PotentialSpec::constant(2.5), g);
        assert_eq!(
            constant
                .sub(&SpectralOperator::identity(g).scale(c(2.5, 0.0)))
                .unwrap()
                .max_abs(),
            0.0
        );
        let v = toeplitz_from_potential(&PotentialSpec::paper(), g);
        assert!(v.is_symmetric(0.0));
        for k in g.modes() {
            for l in g.modes() {
                let nonzero = v.entry(k, l) != ZERO;
                assert_eq!(nonzero, matches!((k - l).abs(), 1 | 6), "({k}, {l})");
            }
        }
    }

    #[test]
    fn multiplication_operators_match_collocation() {
        let g = make_grid(1, 16).unwrap();
        let v = PotentialSpec::paper();
        let samples = v.samples(&g).unwrap();
        // u supported on |k| <= 4: V u stays inside the band, so Toeplitz is exact
        let u = FourierField::from_modes(
            g,
            (-4..=4).map(|k| (k, c(1.0 / (1.0 + (k * k) as f64), 0.1 * k as f64))),
        )
        .unwrap();
        let colloc = |u: &FourierField| {
            let phys: Vec<_> = u.to_physical().iter().zip(&samples).map(|(a, b)| a * *b).collect();
            FourierField::from_physical(g, &phys).unwrap()
        };
        let toeplitz = toeplitz_from_potential(&v, g).apply(&u).unwrap();
        assert!(toeplitz.max_abs_diff(&colloc(&u)).unwrap() <= 1e-12);

        // with wraparound, the circulant operator is the one that matches
        let mut rng = StdRng::seed_from_u64(11);
        let w = random_field(g, &mut rng);
        let circulant = collocation_potential(&v, g).unwrap().apply(&w).unwrap();
        assert!(circulant.max_abs_diff(&colloc(&w)).unwrap() <= 1e-12);
        let plain = toeplitz_from_potential(&v, g).apply(&w).unwrap();
        assert!(plain.max_abs_diff(&colloc(&w)).unwrap() > 1e-3);
    }

    #[test]
    fn apply_examples() {
        let g = make_grid(1, 6).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let u = random_field(g, &mut rng);
        assert!(
            SpectralOperator::identity(g)
                .apply(&u)
                .unwrap()
                .max_abs_diff(&u)
                .unwrap()
                == 0.0
        );
        let lambda = DiagonalOperator::from_symbol(g, |k| 1.0 + k as f64).unwrap();
        let e3 = FourierField::unit_mode(g, 3, ONE).unwrap();
        let out = lambda.to_operator().apply(&e3).unwrap();
        assert_eq!(out.coeff(3), c(4.0, 0.0));
        assert_eq!(out.l2_norm(), 4.0);
        for _ in 0..20 {
            let a = random_operator(g, 4, &mut rng);
            let b = random_operator(g, 4, &mut rng);
            let w = random_field(g, &mut rng);
            let lhs = a.compose(&b).unwrap().apply(&w).unwrap();
            let rhs = a.apply(&b.apply(&w).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn op_norm_of_known_matrices() {
        let g = make_grid(1, 5).unwrap();
        let d = DiagonalOperator::from_symbol(g, |k| k as f64).unwrap().to_operator();
        assert!((d.op_norm() - 5.0).abs() < 1e-8);
        assert_eq!(SpectralOperator::zeros(g).op_norm(), 0.0);
    }

    #[test]
    fn unitary_log_of_scalar_phase() {
        let g = make_grid(1, 4).unwrap();
        let (lambda, h) = (1.3, 0.25);
        let u = SpectralOperator::identity(g).scale(Complex64::from_polar(1.0, lambda));
        let s = unitary_log_generator(&u, h).unwrap();
        let expected = SpectralOperator::identity(g).scale(c(lambda / h, 0.0));
        assert!(s.sub(&expected).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn unitary_log_refuses_bad_input() {
        let g = make_grid(1, 3).unwrap();
        let not_unitary = SpectralOperator::identity(g).scale(c(1.1, 0.0));
        assert!(matches!(
            unitary_log_generator(&not_unitary, 0.1),
            Err(Error::NotUnitary(_))
        ));
        let near_pi = SpectralOperator::identity(g).scale(Complex64::from_polar(1.0, std::f64::consts::PI - 1e-8));
        assert!(matches!(
            unitary_log_generator(&near_pi, 0.1),
            Err(Error::BranchAmbiguity { .. })
        ));
        let id = SpectralOperator::identity(g);
        assert!(matches!(
            unitary_log_generator(&id, 0.0),
            Err(Error::InvalidStepSize(_))
        ));
    }

    #[test]
    fn exp_log_round_trip_on_random_hermitian() {
        let g = make_grid(1, 6).unwrap();
        let mut rng = StdRng::seed_from_u64(21);
        let s = random_symmetric(g, &mut rng);
        let h = 0.05;
        let u = hermitian_exp(&s, h).unwrap();
        assert!(unitary_defect(&u) < 1e-12);
        let back = unitary_log_generator(&u, h).unwrap();
        assert!(back.sub(&s).unwrap().op_norm() < 1e-9);
        let rebuilt = hermitian_exp(&back, h).unwrap();
        assert!(rebuilt.sub(&u).unwrap().op_norm() < 1e-9);
    }

    #[test]
    fn quadratic_form_conserved_by_own_flow() {
        let g = make_grid(1, 6).unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let s = random_symmetric(g, &mut rng);
        let u_op = hermitian_exp(&s, 0.3).unwrap();
        let u = random_field(g, &mut rng);
        let before = s.quadratic_form(&u).unwrap();
        let after = s.quadratic_form(&u_op.apply(&u).unwrap()).unwrap();
        let scale = s.op_norm() * u.l2_norm().powi(2);
        assert!((before - after).abs() <= 1e-9 * scale);
    }

    #[test]
    fn dense_pointwise_matrix_matches_fft_path() {
        let g = make_grid(1, 7).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        let u = random_field(g, &mut rng);
        let values: Vec<_> = (0..g.len())
            .map(|j| Complex64::from_polar(1.0, 0.3 * j as f64))
            .collect();
        let m = pointwise_matrix(&g, &values);
        let dense = SpectralOperator::from_matrix_unchecked(g, m, false).apply(&u).unwrap();
        let phys: Vec<_> = u.to_physical().iter().zip(&values).map(|(a, b)| a * b).collect();
        let fft = FourierField::from_physical(g, &phys).unwrap();
        assert!(dense.max_abs_diff(&fft).unwrap() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn product_bound_holds(seed in any::<u64>(), alpha in prop::sample::select(vec![1.5, 2.0, 3.0]), band in 0i64..6) {
            let g = make_grid(1, 6).unwrap();
            let mut rng = StdRng::seed_from_u64(seed);
            let a = random_operator(g, band, &mut rng);
            let b = random_operator(g, band, &mut rng);
            let lhs = a.compose(&b).unwrap().alpha_norm(alpha).unwrap();
            let rhs = product_constant(alpha, &g).unwrap() * a.alpha_norm(alpha).unwrap() * b.alpha_norm(alpha).unwrap();
            prop_assert!(lhs <= rhs, "{lhs} > {rhs}");
        }

        #[test]
        fn quadratic_form_bound_holds(seed in any::<u64>(), alpha in prop::sample::select(vec![1.5, 2.0, 3.0])) {
            let g = make_grid(1, 5).unwrap();
            let mut rng = StdRng::seed_from_u64(seed);
            let b = random_symmetric(g, &mut rng);
            let u = random_field(g, &mut rng);
            let lhs = b.quadratic_form(&u).unwrap().abs();
            let rhs = quadratic_form_constant(alpha, &g).unwrap() * b.alpha_norm(alpha).unwrap() * u.l2_norm().powi(2);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

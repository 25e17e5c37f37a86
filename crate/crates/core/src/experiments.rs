//! Step-size sweeps, long-time diagnostics, resonance prediction and order measurements.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{make_grid, paper_initial, FourierField, PotentialSpec, SpectralGrid};
use crate::modified::exact_energy;
use crate::operator::{collocation_potential, hermitian_exp, DiagonalOperator, SpectralOperator};
use crate::scheme::{evolve, Propagator, Scheme};

/// Frozen constants of the reference experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperSetup {
    pub cutoff: usize,
    pub band: usize,
    pub final_time: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_count: usize,
}

impl Default for PaperSetup {
    fn default() -> Self {
        Self {
            cutoff: 64,
            band: 20,
            final_time: 50.0,
            h_min: 0.01,
            h_max: 0.1,
            h_count: 200,
        }
    }
}

impl PaperSetup {
    pub fn grid(&self) -> Result<SpectralGrid> {
        make_grid(1, self.cutoff)
    }

    pub fn initial(&self) -> Result<FourierField> {
        Ok(paper_initial(self.grid()?))
    }

    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec::paper()
    }

    pub fn h_grid(&self) -> Result<Vec<f64>> {
        log_spaced(self.h_min, self.h_max, self.h_count)
    }
}

/// `count` points log-spaced in `[min, max]`, endpoints included.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !min.is_finite() {
        return Err(Error::InvalidStepSize(min));
    }
    if !(max >= min) || !max.is_finite() {
        return Err(Error::InvalidStepSize(max));
    }
    Ok(match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        min
                    } else if i == count - 1 {
                        max
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    })
}

/// `round(T/h)`, rejecting non-positive `h` and negative `T`.
pub fn step_count(final_time: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStepSize(h));
    }
    if !(final_time >= 0.0) || !final_time.is_finite() {
        return Err(Error::NonFinite("final time"));
    }
    Ok((final_time / h).round() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    /// `max - min` of the truncated H¹ norm over every step.
    pub oscillation: f64,
    /// `|‖u^N‖ - ‖u⁰‖| / ‖u⁰‖`.
    pub l2_drift: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scheme: String,
    pub rows: Vec<SweepRow>,
}

/// Relative thresholds for spike and flat detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeCriteria {
    pub spike_factor: f64,
    pub flat_factor: f64,
}

impl Default for SpikeCriteria {
    fn default() -> Self {
        Self {
            spike_factor: 10.0,
            flat_factor: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub median: f64,
    pub max: f64,
    /// `h` values with oscillation `>= spike_factor * median`.
    pub spikes: Vec<f64>,
    /// `max <= flat_factor * median`.
    pub flat: bool,
    pub criteria: SpikeCriteria,
}

impl SweepSummary {
    pub fn max_over_median(&self) -> f64 {
        if self.median > 0.0 {
            self.max / self.median
        } else if self.max == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }

    pub fn line(&self) -> String {
        let spikes: Vec<String> = self.spikes.iter().map(|h| format!("{h:?}")).collect();
        format!(
            "# median={:?} max={:?} ratio={:?} spike_factor={:?} flat_factor={:?} flat={} spikes={} spike_h=[{}]",
            self.median,
            self.max,
            self.max_over_median(),
            self.criteria.spike_factor,
            self.criteria.flat_factor,
            self.flat,
            self.spikes.len(),
            spikes.join(";"),
        )
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl SweepResult {
    pub fn oscillations(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.oscillation).collect()
    }

    pub fn summary(&self, criteria: SpikeCriteria) -> SweepSummary {
        let osc = self.oscillations();
        let med = median(&osc);
        let max = osc.iter().copied().fold(0.0, f64::max);
        let spikes = self
            .rows
            .iter()
            .filter(|r| r.oscillation > 0.0 && r.oscillation >= criteria.spike_factor * med)
            .map(|r| r.h)
            .collect();
        SweepSummary {
            median: med,
            max,
            spikes,
            flat: max <= criteria.flat_factor * med,
            criteria,
        }
    }

    /// CSV with header `h,oscillation,l2_drift,seconds`; `seconds` is wall time and the
    /// only column that varies between identical runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,oscillation,l2_drift,seconds\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:?},{:?},{:?},{:?}", r.h, r.oscillation, r.l2_drift, r.seconds);
        }
        out
    }
}

fn sweep_one(
    scheme: &Scheme,
    h: f64,
    final_time: f64,
    u0: &FourierField,
    v: &PotentialSpec,
    band: usize,
) -> Result<SweepRow> {
    let start = Instant::now();
    let nsteps = step_count(final_time, h)?;
    let mut prop = Propagator::new(scheme, h, *u0.grid(), v)?;
    let mut u = u0.clone();
    let first = u.truncated_h1_norm(band)?;
    let (mut lo, mut hi) = (first, first);
    for _ in 0..nsteps {
        prop.step_in_place(&mut u)?;
        let value = u.truncated_h1_norm(band)?;
        lo = lo.min(value);
        hi = hi.max(value);
    }
    let norm0 = u0.l2_norm();
    let l2_drift = if norm0 > 0.0 {
        (u.l2_norm() - norm0).abs() / norm0
    } else {
        0.0
    };
    Ok(SweepRow {
        h,
        oscillation: hi - lo,
        l2_drift,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs one simulation per `h` (in parallel on the current rayon pool), rows in `h_grid` order.
pub fn oscillation_sweep(
    scheme: &Scheme,
    h_grid: &[f64],
    final_time: f64,
    u0: &FourierField,
    v: &PotentialSpec,
    band: usize,
) -> Result<SweepResult> {
    if band > u0.grid().cutoff() {
        return Err(Error::BandTooLarge {
            band,
            cutoff: u0.grid().cutoff(),
        });
    }
    v.check_grid(u0.grid())?;
    let rows = h_grid
        .par_iter()
        .map(|&h| sweep_one(scheme, h, final_time, u0, v, band))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        scheme: scheme.name().to_string(),
        rows,
    })
}

/// `Σ_{|k| <= 1/√h} |k|²|u_k|² + (1/h) Σ_{|k| > 1/√h} |u_k|²`.
pub fn frequency_split(u: &FourierField, h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStepSize(h));
    }
    let threshold = 1.0 / h;
    let (mut low, mut high) = (0.0, 0.0);
    for (k, c) in u.grid().modes().zip(u.coeffs()) {
        let k2 = (k * k) as f64;
        if k2 <= threshold {
            low += k2 * c.norm_sqr();
        } else {
            high += c.norm_sqr();
        }
    }
    Ok(low + high / h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub h: f64,
    /// `frequency_split(uⁿ, h)` for `n = 0..=N`.
    pub series: Vec<f64>,
    pub first_half_max: f64,
    pub second_half_max: f64,
    pub factor: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn ratio(&self) -> f64 {
        if self.first_half_max > 0.0 {
            self.second_half_max / self.first_half_max
        } else if self.second_half_max == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

/// Tracks the frequency-split quantity and compares the maxima over `n <= N/2` and `n > N/2`.
pub fn uniform_bound_check(
    scheme: &Scheme,
    u0: &FourierField,
    v: &PotentialSpec,
    h: f64,
    final_time: f64,
    factor: f64,
) -> Result<BoundReport> {
    let nsteps = step_count(final_time, h)?;
    let mut series = Vec::with_capacity(nsteps + 1);
    let mut failure = None;
    let mut record = |_: usize, u: &FourierField| match frequency_split(u, h) {
        Ok(value) => series.push(value),
        Err(e) => failure = Some(e),
    };
    evolve(scheme, u0, h, nsteps, v, &mut [&mut record])?;
    if let Some(e) = failure {
        return Err(e);
    }
    let half = nsteps / 2;
    let first_half_max = series[..=half].iter().copied().fold(0.0, f64::max);
    let second_half_max = series[half + 1..].iter().copied().fold(0.0, f64::max);
    Ok(BoundReport {
        h,
        series,
        first_half_max,
        second_half_max,
        factor,
        pass: second_half_max <= factor * first_half_max,
    })
}

/// Distinct positive gaps `k² - ℓ²` for `0 <= ℓ < k <= cutoff`.
pub fn mode_gaps(cutoff: usize) -> Vec<u64> {
    let c = cutoff as u64;
    let set: BTreeSet<u64> = (1..=c).flat_map(|k| (0..k).map(move |l| k * k - l * l)).collect();
    set.into_iter().collect()
}

/// `min_{gap, m >= 1} |h·gap - 2πm|`.
pub fn resonance_residual(h: f64, cutoff: usize) -> f64 {
    mode_gaps(cutoff)
        .into_iter()
        .map(|d| {
            let x = h * d as f64;
            let m = (x / (2.0 * PI)).round().max(1.0);
            (x - 2.0 * PI * m).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// The `h` in `h_grid` with `|h(k² - ℓ²) - 2πm| < tol` for some `k, ℓ <= cutoff`, `m >= 1`.
pub fn resonance_predict(h_grid: &[f64], cutoff: usize, tol: f64) -> Vec<f64> {
    h_grid
        .iter()
        .copied()
        .filter(|&h| resonance_residual(h, cutoff) < tol)
        .collect()
}

/// Exact resonant steps `2πm / (k² - ℓ²)` inside `[h_min, h_max]`, sorted and deduplicated.
pub fn resonant_steps(cutoff: usize, h_min: f64, h_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for d in mode_gaps(cutoff) {
        let base = 2.0 * PI / d as f64;
        let first = (h_min / base).ceil().max(1.0) as u64;
        let mut m = first;
        while base * m as f64 <= h_max {
            out.push(base * m as f64);
            m += 1;
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    out
}

/// Distance from `h` to the nearest value in the sorted list `steps`.
pub fn distance_to_nearest(h: f64, steps: &[f64]) -> f64 {
    let idx = steps.partition_point(|&s| s < h);
    let mut best = f64::INFINITY;
    if idx < steps.len() {
        best = best.min(steps[idx] - h);
    }
    if idx > 0 {
        best = best.min(h - steps[idx - 1]);
    }
    best
}

/// Collocation Hamiltonian `-Δ + V` on the grid.
pub fn collocation_hamiltonian(grid: SpectralGrid, v: &PotentialSpec) -> Result<SpectralOperator> {
    let laplacian = DiagonalOperator::from_symbol(grid, |k| (k * k) as f64)?.to_operator();
    laplacian.add(&collocation_potential(v, grid)?)?.into_symmetric()
}

/// `exp(iT(-Δ + V)) u⁰` by eigendecomposition of the collocation Hamiltonian.
pub fn reference_solution(u0: &FourierField, v: &PotentialSpec, time: f64) -> Result<FourierField> {
    let hamiltonian = collocation_hamiltonian(*u0.grid(), v)?;
    hermitian_exp(&hamiltonian, time)?.apply(u0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`.
    pub order: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// L² error at time `round(T/h)·h` against [`reference_solution`] for each `h`.
pub fn convergence_order(
    scheme: &Scheme,
    h_list: &[f64],
    final_time: f64,
    u0: &FourierField,
    v: &PotentialSpec,
) -> Result<ConvergenceReport> {
    if h_list.len() < 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: h_list.len(),
        });
    }
    let hamiltonian = collocation_hamiltonian(*u0.grid(), v)?;
    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let nsteps = step_count(final_time, h)?;
        let u = evolve(scheme, u0, h, nsteps, v, &mut [])?;
        let reference = hermitian_exp(&hamiltonian, nsteps as f64 * h)?.apply(u0)?;
        errors.push(u.l2_distance(&reference)?);
    }
    let lx: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(ConvergenceReport {
        steps: h_list.to_vec(),
        order: fit_slope(&lx, &ly),
        errors,
    })
}

/// Observables sampled along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            steps: Vec::new(),
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, step: usize, time: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.steps.push(step);
        self.times.push(time);
        self.values.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.values.iter().map(|row| row[idx]).collect())
    }

    /// `max_n |c_n - c_0| / |c_0|` (absolute if `c_0 = 0`).
    pub fn relative_drift(&self, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        let first = *col.first()?;
        let scale = if first != 0.0 { first.abs() } else { 1.0 };
        Some(col.iter().map(|c| (c - first).abs() / scale).fold(0.0, f64::max))
    }

    /// `max_n c_n - min_n c_n`.
    pub fn oscillation(&self, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        Some(if col.is_empty() { 0.0 } else { hi - lo })
    }

    /// Header `step,time,<columns>` and one LF-terminated row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,time");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for ((step, time), row) in self.steps.iter().zip(&self.times).zip(&self.values) {
            let _ = write!(out, "{step},{time:?}");
            for value in row {
                let _ = write!(out, ",{value:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// `⟨uⁿ|S|uⁿ⟩` and `⟨uⁿ|-Δ+V|uⁿ⟩` every `stride` steps (and at the last step).
pub fn energy_drift_series(
    scheme: &Scheme,
    s: &SpectralOperator,
    u0: &FourierField,
    v: &PotentialSpec,
    h: f64,
    nsteps: usize,
    stride: usize,
) -> Result<TimeSeries> {
    let v_op = collocation_potential(v, *u0.grid())?;
    let stride = stride.max(1);
    let mut series = TimeSeries::new(["modified_energy", "exact_energy"]);
    let mut failure = None;
    let mut record = |n: usize, u: &FourierField| {
        if !n.is_multiple_of(stride) && n != nsteps {
            return;
        }
        let row = s
            .quadratic_form(u)
            .and_then(|m| Ok(vec![m, exact_energy(u, &v_op)?]))
            .and_then(|row| series.push(n, n as f64 * h, row));
        if let Err(e) = row {
            failure.get_or_insert(e);
        }
    };
    evolve(scheme, u0, h, nsteps, v, &mut [&mut record])?;
    match failure {
        Some(e) => Err(e),
        None => Ok(series),
    }
}

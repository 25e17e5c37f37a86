use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;

use modenergy::experiments::{frequency_split, log_spaced, oscillation_sweep, step_count};
use modenergy::fourier::synthesize_initial;
use modenergy::modified::{exact_energy, h0_estimate, z0_composition};
use modenergy::operator::{collocation_potential, hermitian_exp, unitary_log_generator};
use modenergy::scheme::scheme_matrix;
use modenergy::{
    builtin_catalog, evolve, make_grid, Error, FourierField, ModifiedEnergy, RecursionConfig, StageKind, TimeSeries,
};

use crate::config::{ConfigError, RunConfig};

/// Largest cutoff accepted by `bch-check` (dense `N x N` work).
pub const BCH_MAX_CUTOFF: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(Error),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("resonant h: {0}")]
    Resonant(Error),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) | CliError::Resonant(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BranchAmbiguity { .. } => CliError::Resonant(e),
            e if e.is_numerical() => CliError::Numerical(e),
            e => CliError::Input(e),
        }
    }
}

fn emit(config: &RunConfig, text: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output {
                path: "stdout".into(),
                message: e.to_string(),
            }),
    }
}

/// Time series CSV: `step,time,l2,h1_band,exact_energy,modified_energy_L,freq_split`.
pub fn evolve_csv(config: &RunConfig) -> Result<String, CliError> {
    config.validate()?;
    let scheme = config.resolve_scheme()?;
    let grid = make_grid(1, config.cutoff)?;
    let v = config.potential.resolve()?;
    let u0 = synthesize_initial(&config.initial, grid)?;
    let v_op = collocation_potential(&v, grid)?;
    let recursion = RecursionConfig {
        l_max: config.truncation,
        ..RecursionConfig::default()
    };
    let s = ModifiedEnergy::build(&v_op, config.h, recursion)?.assemble(config.truncation)?;
    let nsteps = step_count(config.final_time, config.h)?;

    let mut series = TimeSeries::new(["l2", "h1_band", "exact_energy", "modified_energy_L", "freq_split"]);
    let mut failure = None;
    let h = config.h;
    let mut record = |n: usize, u: &FourierField| {
        let row = (|| {
            Ok::<_, Error>(vec![
                u.l2_norm(),
                u.truncated_h1_norm(config.band)?,
                exact_energy(u, &v_op)?,
                s.quadratic_form(u)?,
                frequency_split(u, h)?,
            ])
        })()
        .and_then(|row| series.push(n, n as f64 * h, row));
        if let Err(e) = row {
            failure.get_or_insert(e);
        }
    };
    evolve(&scheme, &u0, h, nsteps, &v, &mut [&mut record])?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(series.to_csv())
}

pub fn cmd_evolve(config: &RunConfig) -> Result<(), CliError> {
    let csv = evolve_csv(config)?;
    emit(config, &csv)
}

/// Sweep CSV and the summary line.
pub fn sweep_report(config: &RunConfig) -> Result<(String, String), CliError> {
    config.validate()?;
    let scheme = config.resolve_scheme()?;
    let grid = make_grid(1, config.cutoff)?;
    let v = config.potential.resolve()?;
    let u0 = synthesize_initial(&config.initial, grid)?;
    let hs = log_spaced(config.h_min, config.h_max, config.h_count)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = config.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let result = pool.install(|| oscillation_sweep(&scheme, &hs, config.final_time, &u0, &v, config.band))?;
    let summary = result.summary(config.criteria());
    Ok((result.to_csv(), summary.line()))
}

pub fn cmd_sweep(config: &RunConfig) -> Result<(), CliError> {
    let (csv, summary) = sweep_report(config)?;
    emit(config, &csv)?;
    eprintln!("{summary}");
    Ok(())
}

/// Report comparing the truncated generators with the unitary logarithm of the step.
pub fn bch_report(config: &RunConfig) -> Result<String, CliError> {
    config.validate()?;
    if config.cutoff > BCH_MAX_CUTOFF {
        return Err(
            ConfigError::Invalid(format!("bch-check needs K <= {BCH_MAX_CUTOFF}, got {}", config.cutoff)).into(),
        );
    }
    let scheme = config.resolve_scheme()?;
    let stages = scheme.stages();
    let shape_ok = stages
        .first()
        .is_some_and(|s| s.kind == StageKind::PotentialPhase && s.scale == 1.0)
        && stages[1..].iter().all(|s| s.kind == StageKind::ResolventLaplacian);
    if !shape_ok {
        return Err(ConfigError::Invalid(format!(
            "bch-check needs a scheme of the form P:1 followed by R stages, got `{}`",
            scheme.stage_string()
        ))
        .into());
    }
    let h = config.h;
    let grid = make_grid(1, config.cutoff)?;
    let v = config.potential.resolve()?;
    let v_op = collocation_potential(&v, grid)?;
    let u = scheme_matrix(&scheme, h, grid, &v)?;
    let oracle = unitary_log_generator(&u, h)?;
    let z0 = z0_composition(&scheme.laplacian_scales(), h, grid)?;
    let recursion = RecursionConfig {
        l_max: config.truncation,
        ..RecursionConfig::default()
    };
    let me = ModifiedEnergy::build_with_z0(&v_op, h, z0, recursion)?;

    let mut out = String::new();
    let _ = writeln!(out, "scheme={}", scheme.name());
    let _ = writeln!(out, "K={}", config.cutoff);
    let _ = writeln!(out, "h={h:?}");
    let _ = writeln!(out, "h0={:?}", h0_estimate(&v_op, 2.0)?);
    let recon = hermitian_exp(&oracle, h)?.sub(&u)?.op_norm();
    let _ = writeln!(out, "oracle_reconstruction={recon:?}");
    for order in 0..=config.truncation {
        let s = me.assemble(order)?;
        let diff = s.sub(&oracle)?.op_norm();
        let recon = hermitian_exp(&s, h)?.sub(&u)?.op_norm();
        let _ = writeln!(out, "L={order} s_minus_oracle={diff:?} reconstruction={recon:?}");
    }
    for (idx, z) in me.corrections().iter().enumerate() {
        let _ = writeln!(out, "alpha_norm_Z{}={:?}", idx + 1, z.alpha_norm(2.0)?);
    }
    Ok(out)
}

pub fn cmd_bch_check(config: &RunConfig) -> Result<(), CliError> {
    let report = bch_report(config)?;
    emit(config, &report)
}

fn fixed12(values: &[f64]) -> String {
    values.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(",")
}

pub fn scheme_listing(machine: bool) -> String {
    let catalog = builtin_catalog();
    let mut out = String::new();
    if machine {
        let _ = writeln!(out, "count={}", catalog.len());
    }
    for s in &catalog {
        if machine {
            let name = s.name();
            let _ = writeln!(out, "{name}.order={}", s.declared_order());
            let _ = writeln!(out, "{name}.stages={}", s.stage_string());
            let _ = writeln!(out, "{name}.gammas={}", fixed12(&s.laplacian_scales()));
            let _ = writeln!(out, "{name}.thetas={}", fixed12(&s.potential_scales()));
        } else {
            let _ = writeln!(
                out,
                "{:<22} order {}  gammas [{}]\n    {}",
                s.name(),
                s.declared_order(),
                fixed12(&s.laplacian_scales()),
                s.stage_string()
            );
        }
    }
    out
}

pub fn cmd_list_schemes(config: &RunConfig, machine: bool) -> Result<(), CliError> {
    emit(config, &scheme_listing(machine))
}

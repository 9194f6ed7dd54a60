use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortlab_core::diagnostics::{
    blowup_indicator, decay_envelope_table, decay_growth_over_k, divergence_growth, divergence_growth_pointwise, fingerprint, kink_order_probe,
    moment_bound_check, sup_ratios, viscosity_sweep, DiagnosticsReport, ManufacturedCase, Refinement, Table,
};
use vortlab_core::field::snapshot::{write_snapshot, SnapshotMeta};
use vortlab_core::iteration::{run_picard, vorticity_increment_recursion, IterationTrace};
use vortlab_core::{CompletionMode, Error, NormKind, RadialProfile, ScalarField3};

use crate::config::ExperimentConfig;

/// Why a run could not produce its artifacts.
#[derive(Debug)]
pub enum RunError {
    Core(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

const CONTRACTION_LIMIT: f64 = 0.9;
const DECAY_LIMIT: f64 = 2.0;
const DIV_GROWTH_LIMIT: f64 = 1.1;
const RECURSION_LIMIT: f64 = 1e-8;
const MANUFACTURED_LIMIT: f64 = 0.1;
const SWEEP_SPREAD_LIMIT: f64 = 0.25;

/// Runs every enabled diagnostic and writes the artifact set into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<DiagnosticsReport, RunError> {
    let canonical = cfg.canonical();
    let fp = fingerprint(&canonical);
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), &canonical)?;
    fs::write(out.join("fingerprint.txt"), format!("{fp}\n"))?;
    let mut report = DiagnosticsReport::new(fp.clone());

    let needs_trace = cfg.contraction || cfg.decay || cfg.incompressibility || cfg.recursion || cfg.snapshots;
    if needs_trace {
        log::info!("running Picard iteration: n = {}, K = {}", cfg.n, cfg.k_max);
        let trace = run_picard(&cfg.iteration_config())?;
        let preamble = vec![
            format!("fingerprint={fp}"),
            "units: k=iteration index, t=time, value=dimensionless grid norm".to_string(),
        ];
        trace.write_norm_csv(BufWriter::new(fs::File::create(out.join("norms.csv"))?), &preamble)?;
        trace_diagnostics(cfg, &trace, &mut report)?;
        if cfg.snapshots {
            write_final_snapshot(cfg, &trace, out)?;
        }
    }
    if cfg.blowup {
        blowup(cfg, &mut report)?;
    }
    if cfg.moment {
        moment(cfg, &mut report)?;
    }
    if cfg.manufactured {
        manufactured(cfg, &mut report)?;
    }
    if !cfg.nu_sweep.is_empty() {
        sweep(cfg, &mut report)?;
    }

    report.validate()?;
    for t in &report.tables {
        t.write_csv(BufWriter::new(fs::File::create(out.join(format!("{}.csv", t.name)))?), &fp)?;
    }
    fs::write(out.join("summary.txt"), report.summary())?;
    Ok(report)
}

fn trace_diagnostics(cfg: &ExperimentConfig, trace: &IterationTrace, report: &mut DiagnosticsReport) -> Result<(), RunError> {
    let singular = cfg.radial_profile().is_singular();
    if cfg.contraction {
        let mut t = Table::new(
            "contraction",
            &[("k", "index"), ("norm_order", "index"), ("origin_excluded", "bool"), ("ratio", "1")],
        );
        for m in [2usize, 3] {
            for ex in [false, true] {
                if ex && !singular {
                    continue;
                }
                for r in sup_ratios(trace, NormKind::HmCm(m), ex) {
                    t.push(vec![r.k as f64, m as f64, ex as u8 as f64, r.ratio]);
                }
            }
        }
        let checked: Vec<f64> = sup_ratios(trace, NormKind::HmCm(2), singular)
            .into_iter()
            .filter(|r| r.k >= 3)
            .map(|r| r.ratio)
            .collect();
        let worst = checked.iter().cloned().fold(0.0, f64::max);
        report.contract(
            "contraction",
            worst < CONTRACTION_LIMIT,
            format!("max H2C2 ratio for k >= 3: {worst:.4} over {} ratios (limit {CONTRACTION_LIMIT})", checked.len()),
        );
        report.tables.push(t);
    }
    if cfg.decay {
        let rows = decay_envelope_table(trace, 8.0)?;
        let mut t = Table::new(
            "decay",
            &[("k", "index"), ("t", "time"), ("order", "index"), ("envelope", "velocity * length^8 / length^order")],
        );
        for r in &rows {
            t.push(vec![r.k as f64, r.t, r.order as f64, r.value]);
        }
        let growth = decay_growth_over_k(&rows, 3);
        let worst = growth.iter().map(|g| g.1).fold(0.0, f64::max);
        report.contract(
            "decay_envelope",
            worst <= DECAY_LIMIT,
            format!("max over orders of envelope(k) / envelope(3): {worst:.4} (limit {DECAY_LIMIT})"),
        );
        report.tables.push(t);
    }
    if cfg.incompressibility {
        let mut t = Table::new("divergence", &[("k", "index"), ("t", "time"), ("div_c0", "1 / time")]);
        for &(k, time, v) in trace.divergence_table() {
            t.push(vec![k as f64, time, v]);
        }
        report.tables.push(t);
        if cfg.mode == CompletionMode::ProjectedDivFree {
            let g = divergence_growth(trace);
            let gp = divergence_growth_pointwise(trace);
            report.contract(
                "incompressibility",
                g <= DIV_GROWTH_LIMIT,
                format!(
                    "max step-to-step growth of sup_t div residual: {g:.4} (limit {DIV_GROWTH_LIMIT}); per time node {gp:.4}"
                ),
            );
        }
    }
    if cfg.recursion {
        let res = vorticity_increment_recursion(trace)?;
        let mut t = Table::new("recursion", &[("k", "index"), ("residual", "1 / time")]);
        for &(k, r) in &res {
            t.push(vec![k as f64, r]);
        }
        let worst = res.iter().map(|r| r.1).fold(0.0, f64::max);
        report.contract(
            "vorticity_recursion",
            worst <= RECURSION_LIMIT,
            format!("max residual {worst:.3e} over {} steps (limit {RECURSION_LIMIT:e})", res.len()),
        );
        report.tables.push(t);
    }
    Ok(())
}

fn write_final_snapshot(cfg: &ExperimentConfig, trace: &IterationTrace, out: &Path) -> Result<(), RunError> {
    let dir = out.join("snapshots");
    fs::create_dir_all(&dir)?;
    let state = trace.state(trace.last_k()).expect("last state retained");
    let last = state.v.len() - 1;
    let v = state.v.slice(last);
    let fields: Vec<&ScalarField3> = v.components().iter().collect();
    let meta = SnapshotMeta {
        time: state.v.time(last),
        nu: cfg.nu,
        components: vec!["v1".into(), "v2".into(), "v3".into()],
    };
    write_snapshot(&dir.join(format!("v_k{}", trace.last_k())), &fields, &meta)?;
    Ok(())
}

fn blowup(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> Result<(), RunError> {
    let levels = Refinement {
        extent: 2.0,
        n0: cfg.blowup_n0,
        levels: cfg.blowup_levels,
    };
    let spec = cfg.data_spec();
    let fit = blowup_indicator(&spec, &levels)?;
    let mut t = Table::new("blowup", &[("h", "length"), ("sup_vorticity", "1 / time")]);
    for (h, s) in fit.h.iter().zip(&fit.sup) {
        t.push(vec![*h, *s]);
    }
    report.tables.push(t);
    let e = fit.growth_exponent();
    match spec.profile {
        RadialProfile::Singular(p) if p.k >= 2 => {
            let kink = kink_order_probe(&spec.profile, &levels)?;
            let mut kt = Table::new("kink", &[("derivative_order", "index"), ("exponent", "1")]);
            for (m, f) in &kink.derivatives {
                kt.push(vec![*m as f64, f.fit.slope]);
            }
            report.tables.push(kt);
            let expected = p.kink_order() as usize;
            let got = kink.kink_order();
            report.contract(
                "kink_order",
                got == Some(expected),
                format!("measured kink order {got:?}, expected {expected}"),
            );
        }
        RadialProfile::Singular(p) => {
            let expected = p.first_derivative_exponent().min(0.0);
            let tol = if expected == 0.0 { 0.01 } else { 0.03 };
            report.contract(
                "blowup_exponent",
                (e - expected).abs() <= tol,
                format!(
                    "growth exponent {e:.4} (raw slope {:.4}, residual {:.2e}), expected {expected:.4} +- {tol}",
                    fit.fit.slope, fit.fit.residual
                ),
            );
        }
        _ => {
            report.contract(
                "blowup_exponent",
                e.abs() <= 0.01,
                format!("growth exponent {e:.4} for regular data, expected 0 +- 0.01"),
            );
        }
    }
    Ok(())
}

/// `a min(1, |x - c|) + b sin(w . x + phi)`, Lipschitz with constant
/// `|a| + |b| |w|`.
pub fn random_lipschitz_field(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> (ScalarField3, f64) {
    let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
    let a = rng.gen_range(-2.0..2.0);
    let b = rng.gen_range(-1.0..1.0);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let f = ScalarField3::from_fn(cfg.grid(), |p| {
        let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt();
        a * r.min(1.0) + b * (w[0] * p[0] + w[1] * p[1] + w[2] * p[2] + phi).sin()
    });
    let wn = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    (f, a.abs() + b.abs() * wn)
}

fn moment(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> Result<(), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new(
        "moment",
        &[("field", "index"), ("axis", "index"), ("nu", "length^2 / time"), ("t", "time"), ("lhs", "1"), ("rhs", "1")],
    );
    let mut failures = 0;
    let linear = ScalarField3::from_fn(cfg.grid(), |p| p[0]);
    let t_lin = cfg.t_final.min(0.5);
    let c = moment_bound_check(&linear, Some(1.0), cfg.nu, t_lin, 0)?;
    failures += usize::from(!c.holds());
    t.push(vec![0.0, 0.0, cfg.nu, t_lin, c.lhs, c.rhs]);
    for i in 1..=cfg.moment_fields {
        let (f, l) = random_lipschitz_field(cfg, &mut rng);
        let axis = rng.gen_range(0..3);
        let nu = rng.gen_range(0.02..0.1);
        let time = rng.gen_range(0.1..0.5);
        let c = moment_bound_check(&f, Some(l), nu, time, axis)?;
        failures += usize::from(!c.holds());
        t.push(vec![i as f64, axis as f64, nu, time, c.lhs, c.rhs]);
    }
    let worst = t.rows.iter().map(|r| r[4] / r[5]).fold(0.0, f64::max);
    report.contract(
        "moment_bound",
        failures == 0,
        format!(
            "{failures} violations in {} fields; max lhs / rhs = {worst:.4}",
            cfg.moment_fields + 1
        ),
    );
    report.tables.push(t);
    Ok(())
}

fn manufactured(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> Result<(), RunError> {
    let case = ManufacturedCase {
        grid: cfg.grid(),
        nu: cfg.nu,
        t_final: cfg.t_final,
        n_steps: cfg.n_steps,
        k_max: cfg.k_max.max(8),
    };
    let signs = cfg.iteration_config().signs;
    let r = case.run(signs)?;
    let mut t = Table::new(
        "manufactured",
        &[("flip_burgers", "bool"), ("flip_leray", "bool"), ("rel_error", "1"), ("k", "index")],
    );
    t.push(vec![
        signs.flip_burgers as u8 as f64,
        signs.flip_leray as u8 as f64,
        r.rel_error,
        r.k_reached as f64,
    ]);
    report.tables.push(t);
    report.contract(
        "manufactured_solution",
        r.rel_error <= MANUFACTURED_LIMIT,
        format!("relative error {:.4e} (limit {MANUFACTURED_LIMIT})", r.rel_error),
    );
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, report: &mut DiagnosticsReport) -> Result<(), RunError> {
    let s = viscosity_sweep(&cfg.iteration_config(), &cfg.nu_sweep)?;
    let mut t = Table::new("nu_sweep", &[("nu_p", "length^2 / time"), ("nu_q", "length^2 / time"), ("c1_distance", "velocity")]);
    for p in 0..s.nus.len() {
        for q in 0..s.nus.len() {
            t.push(vec![s.nus[p], s.nus[q], s.cauchy[p][q]]);
        }
    }
    report.tables.push(t);
    let mut rt = Table::new("nu_sweep_ratios", &[("nu", "length^2 / time"), ("k", "index"), ("ratio", "1")]);
    for (nu, rs) in s.nus.iter().zip(&s.ratios) {
        for r in rs {
            rt.push(vec![*nu, r.k as f64, r.ratio]);
        }
    }
    report.tables.push(rt);
    report.contract(
        "viscosity_limit",
        s.strictly_decreasing(),
        format!("consecutive C1 distances {:?}", s.consecutive()),
    );
    let spreads: Vec<(usize, f64)> = (1..cfg.k_max).filter_map(|k| s.ratio_spread(k).map(|v| (k, v))).collect();
    let worst = spreads.iter().map(|x| x.1).fold(0.0, f64::max);
    report.contract(
        "nu_uniform_contraction",
        !spreads.is_empty() && worst < SWEEP_SPREAD_LIMIT,
        format!("max over k of max/min - 1 of H2C2 ratios across nu: {worst:.4} (limit {SWEEP_SPREAD_LIMIT})"),
    );
    Ok(())
}

/// Output directory: the environment override if set, else the config key.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(crate::OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

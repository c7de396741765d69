//! The five commands: simulate, lyapunov, bounds, verify and selftest.
//!
//! Each command writes its artifacts under `CommandOptions::out` and returns
//! an [`Outcome`] whose lines form a pass/fail table.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{parse_config, RunSpec};
use super::snapshot::{load_snapshot, save_snapshot, Snapshot};
use crate::bounds::{self, BoundVariant, BoundsReport, Physical};
use crate::dynamics::{BardinaSystem, ForcingNorms, ModelParams};
use crate::error::{Error, Result};
use crate::estimates::{
    check_trajectory, energy_record, identity_suite, spectral_residuals, tangent_consistency, time_average_check,
    DiagnosticsRecord, EnvelopeTrack, IdentityOptions, IdentityTable, Slack, ViolationReport,
};
use crate::hodge::VelocityState;
use crate::integrator::{integrate, run, steps_to, Scheme, SchemeConfig};
use crate::lyapunov::{benettin_run, compare_bound, trace_bound, trace_qn, ExponentReport};
use crate::spectral::{BasisPlan, Geometry, SpectralIndex};

pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const FINAL_SNAPSHOT: &str = "final.snap";
pub const EXPONENTS_CSV: &str = "exponents.csv";
pub const EXPONENT_REPORT: &str = "exponent_report.json";
pub const BOUNDS_JSON: &str = "bounds.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const VERIFY_JSON: &str = "verify.json";
pub const SELFTEST_JSON: &str = "selftest.json";

const DIAGNOSTICS_HEADER: &str =
    "t,norm_u_l2,norm_u_v,norm_Au,norm_u2,norm_v,E1,E2,env1,env2,energy_residual,violations";

/// Energy-law residual tolerated at every recorded sample.
pub const ENERGY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default)]
pub struct CommandOptions {
    pub out: PathBuf,
    pub resume: Option<PathBuf>,
}

/// Result of a command: overall status plus one line per check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub success: bool,
    pub lines: Vec<String>,
}

impl Outcome {
    fn push(&mut self, name: &str, pass: bool, detail: impl AsRef<str>) {
        self.success &= pass;
        self.lines.push(format!("{} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref()));
    }

    fn info(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

/// Run `f` inside a rayon pool of `threads` workers, or the global pool.
pub fn run_with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Read a configuration file and apply a seed override.
pub fn load_spec(path: &Path, seed: Option<u64>) -> Result<RunSpec> {
    let mut spec = parse_config(&fs::read_to_string(path)?)?;
    if seed.is_some() {
        spec.seed = seed;
        spec.validate()?;
    }
    Ok(spec)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn record_row(r: &DiagnosticsRecord) -> String {
    let vals = [r.t, r.norm_u_l2, r.norm_u_v, r.norm_au, r.norm_u2, r.norm_v, r.e1, r.e2, r.env1, r.env2, r.energy_residual];
    let mut s: Vec<String> = vals.iter().map(|v| num(*v)).collect();
    s.push(r.violations.to_string());
    s.join(",")
}

fn parse_record(line: &str) -> Option<DiagnosticsRecord> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 12 {
        return None;
    }
    let v = |i: usize| f[i].trim().parse::<f64>().ok();
    Some(DiagnosticsRecord {
        t: v(0)?,
        norm_u_l2: v(1)?,
        norm_u_v: v(2)?,
        norm_au: v(3)?,
        norm_u2: v(4)?,
        norm_v: v(5)?,
        e1: v(6)?,
        e2: v(7)?,
        env1: v(8)?,
        env2: v(9)?,
        energy_residual: v(10)?,
        violations: f[11].trim().parse().ok()?,
    })
}

/// Read a diagnostics CSV written by [`cmd_simulate`].
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line).ok_or_else(|| Error::config(path.display().to_string(), format!("malformed row {}", i + 1)))?);
    }
    Ok(out)
}

fn resume_state(spec: &RunSpec, plan: &BasisPlan, path: &Path) -> Result<(VelocityState, f64)> {
    let snap = load_snapshot(path)?;
    let m = snap.meta;
    let p = &spec.params;
    if m.nu.to_bits() != p.nu.to_bits() || m.alpha.to_bits() != p.alpha.to_bits() || m.sigma.to_bits() != p.sigma.to_bits() {
        return Err(Error::SnapshotMismatch { reason: "physical parameters differ from the configuration".into() });
    }
    Ok((snap.state(plan)?, m.t))
}

/// Integrate the configured run, writing the diagnostics CSV and the final snapshot.
///
/// Rows are written for every `stride`-th step after the start; a resumed
/// run continues the step count of the snapshot and anchors its envelopes at
/// the configured initial state, so its rows equal the tail of an unbroken run.
pub fn cmd_simulate(spec: &RunSpec, opts: &CommandOptions) -> Result<Outcome> {
    let plan = spec.plan()?;
    let params = spec.model_params(&plan)?;
    let state0 = spec.initial_state(&plan)?;
    let (start, t0) = match &opts.resume {
        Some(path) => resume_state(spec, &plan, path)?,
        None => (state0.clone(), 0.0),
    };
    let k0 = steps_to(t0, spec.scheme.dt);
    if k0 > spec.scheme.total_steps() {
        return Err(Error::config("scheme.t_end", format!("ends before the snapshot time {t0}")));
    }
    let track = EnvelopeTrack::new(&plan, &params, &state0, Slack::new(spec.scheme.dt))?;
    fs::create_dir_all(&opts.out)?;
    let mut csv = BufWriter::new(File::create(opts.out.join(DIAGNOSTICS_CSV))?);
    writeln!(csv, "{DIAGNOSTICS_HEADER}")?;
    let system = BardinaSystem::new(&plan, &params)?;
    let mut y = start.to_flat();
    let (mut samples, mut violations, mut worst_residual) = (0usize, 0u64, 0.0f64);
    let result = integrate(&system, &mut y, k0, &spec.scheme, |_, t, y| {
        let state = VelocityState::from_flat(&plan, y)?;
        let rec = energy_record(&plan, &state, &params, t, Some(&track))?;
        writeln!(csv, "{}", record_row(&rec))?;
        samples += 1;
        violations += rec.violations as u64;
        worst_residual = worst_residual.max(rec.energy_residual);
        Ok(())
    });
    csv.flush()?;
    result?;
    let t_final = spec.scheme.total_steps().max(k0) as f64 * spec.scheme.dt;
    let final_state = VelocityState::from_flat(&plan, &y)?;
    let snap = Snapshot::new(&plan, &final_state, t_final, params.nu, params.alpha, params.sigma)?;
    save_snapshot(&opts.out.join(FINAL_SNAPSHOT), &snap)?;

    let mut out = Outcome { success: true, lines: Vec::new() };
    out.info(format!("{samples} samples from t = {t0} to t = {t_final}"));
    out.push("envelopes", violations == 0, format!("{violations} exceedances"));
    out.push(
        "energy law",
        worst_residual <= ENERGY_RESIDUAL_TOL,
        format!("max residual {worst_residual:.3e} (tol {ENERGY_RESIDUAL_TOL:.0e})"),
    );
    Ok(out)
}

/// Closed-form `N*` matching the plan's geometry.
pub fn closed_form_bound(spec: &RunSpec, norms: &ForcingNorms) -> Result<f64> {
    let variant = match spec.geometry {
        Geometry::Sphere => BoundVariant::Sphere,
        Geometry::Torus { .. } => BoundVariant::Torus,
    };
    bounds::attractor_bound(physical(spec), spec.geometry, norms, variant)
}

fn physical(spec: &RunSpec) -> Physical {
    Physical { nu: spec.params.nu, alpha: spec.params.alpha, sigma: spec.params.sigma }
}

/// Instantaneous trace inequality at the renormalisation instants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    /// False when the ensemble contains harmonic directions, where the
    /// inequality is not claimed.
    pub applicable: bool,
    pub instants: usize,
    pub violations: usize,
    /// Largest `trace - bound`, relative to the size of the terms.
    pub max_relative_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOutput {
    pub report: ExponentReport,
    pub trace_check: TraceCheck,
}

/// Tangent-ensemble exponents, written as `exponents.csv` and `exponent_report.json`.
pub fn cmd_lyapunov(spec: &RunSpec, opts: &CommandOptions) -> Result<Outcome> {
    let cfg = spec.lyapunov_config().ok_or_else(|| Error::config("lyapunov", "section required by this command"))?;
    let plan = spec.plan()?;
    let params = spec.model_params(&plan)?;
    let u0 = match &opts.resume {
        Some(path) => resume_state(spec, &plan, path)?.0,
        None => spec.initial_state(&plan)?,
    };
    let applicable = plan.geometry().harmonic_dim() == 0 || !cfg.include_harmonic;
    let mut check = TraceCheck { applicable, ..Default::default() };
    let mut report = benettin_run(&plan, &u0, &params, spec.scheme.kind, spec.scheme.dt, &cfg, |_, u, w| {
        if !applicable {
            return Ok(());
        }
        let tr = trace_qn(&plan, u, w, &params)?;
        let bound = trace_bound(&plan, u, &params, w.len());
        let scale = tr.abs() + bound.abs();
        check.instants += 1;
        let excess = (tr - bound) / scale.max(f64::MIN_POSITIVE);
        check.max_relative_excess = if check.instants == 1 { excess } else { check.max_relative_excess.max(excess) };
        if tr > bound + 1e-9 * scale {
            check.violations += 1;
        }
        Ok(())
    })?;
    let n_star = closed_form_bound(spec, &params.forcing.norms(&plan))?;
    report.n_star = Some(n_star);
    report.verdict = Some(compare_bound(&report.partial_sums, n_star));

    fs::create_dir_all(&opts.out)?;
    let mut csv = BufWriter::new(File::create(opts.out.join(EXPONENTS_CSV))?);
    let n = cfg.n;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("mu_{i}")))
        .chain((1..=n).map(|i| format!("q_{i}")))
        .collect();
    writeln!(csv, "{}", header.join(","))?;
    for row in &report.series {
        let cells: Vec<String> = std::iter::once(row.t).chain(row.mu.iter().copied()).chain(row.q.iter().copied()).map(num).collect();
        writeln!(csv, "{}", cells.join(","))?;
    }
    csv.flush()?;
    let output = LyapunovOutput { report, trace_check: check };
    fs::write(opts.out.join(EXPONENT_REPORT), serde_json::to_string_pretty(&output)?)?;

    let r = &output.report;
    let v = r.verdict.as_ref().expect("verdict set above");
    let mut out = Outcome { success: true, lines: Vec::new() };
    out.info(format!("exponents: {}", r.exponents.iter().map(|m| format!("{m:.6}")).collect::<Vec<_>>().join(" ")));
    out.info(format!(
        "Kaplan-Yorke {:.4}{}; N* = {:.6}; crossing = {}; consistent = {}",
        r.kaplan_yorke,
        if r.kaplan_yorke_saturated { " (lower bound)" } else { "" },
        n_star,
        v.crossing.map_or("none".into(), |c| c.to_string()),
        v.consistent
    ));
    if output.trace_check.applicable {
        let c = &output.trace_check;
        out.push("trace inequality", c.violations == 0, format!("{} of {} instants exceed", c.violations, c.instants));
    } else {
        out.info("trace inequality: not checked for ensembles with harmonic directions");
    }
    Ok(out)
}

/// One point of a bounds sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub nu: f64,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: f64,
    pub forcing: ForcingNorms,
}

/// A bounds sweep file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub geometry: Geometry,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "twenty")]
    pub n_max: usize,
    #[serde(default)]
    pub domain_area: Option<f64>,
    pub points: Vec<SweepPoint>,
}

fn one() -> f64 {
    1.0
}

fn twenty() -> usize {
    20
}

/// Input of [`cmd_bounds`]: a run configuration or a sweep file.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundsInput {
    Spec(Box<RunSpec>),
    Sweep(SweepSpec),
}

/// A document with a top-level `points` array is a sweep; anything else is a run configuration.
pub fn parse_bounds_input(text: &str) -> Result<BoundsInput> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::config("", e.to_string()))?;
    if value.get("points").is_some() {
        let spec: SweepSpec =
            serde_path_to_error::deserialize(value).map_err(|e| Error::config(e.path().to_string(), e.into_inner().to_string()))?;
        Ok(BoundsInput::Sweep(spec))
    } else {
        Ok(BoundsInput::Spec(Box::new(parse_config(text)?)))
    }
}

const SWEEP_HEADER: &str = "nu,alpha,sigma,a_inv_f,a_inv_half_f,f1,f2,lambda1,delta,delta_prime,L1,L2,rho0,rho1,rho1_tilde,rho2,rho,G,n_star,n_star_tight,average_enstrophy_bound";

fn sweep_row(r: &BoundsReport) -> String {
    let f = &r.forcing;
    let vals = [
        r.params.nu,
        r.params.alpha,
        r.params.sigma,
        f.a_inv,
        f.a_inv_half,
        f.f1,
        f.f2,
        r.lambda1,
        r.delta,
        r.delta_prime,
        r.l1,
        r.l2,
        r.radii.rho0,
        r.radii.rho1,
        r.radii.rho1_tilde,
        r.radii.rho2,
        r.radii.rho,
        r.grashof,
        r.n_star,
        r.n_star_tight.unwrap_or(f64::NAN),
        r.average_enstrophy_bound,
    ];
    vals.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

/// Closed-form bounds: `bounds.json` for a configuration, `sweep.csv` for a sweep.
pub fn cmd_bounds(input: &BoundsInput, opts: &CommandOptions) -> Result<Outcome> {
    fs::create_dir_all(&opts.out)?;
    let mut out = Outcome { success: true, lines: Vec::new() };
    match input {
        BoundsInput::Spec(spec) => {
            let plan = spec.plan()?;
            let params = spec.model_params(&plan)?;
            let o = &spec.bounds;
            let report = bounds::report(physical(spec), spec.geometry, &params.forcing.norms(&plan), o.c, o.n_max, o.domain_area)?;
            fs::write(opts.out.join(BOUNDS_JSON), serde_json::to_string_pretty(&report)?)?;
            out.info(format!("G = {:.6}, N* = {:.6}", report.grashof, report.n_star));
            if let Some(g) = &report.inertial {
                out.info(format!(
                    "gap crossing n = {} (lipschitz {:.4e}, c = {})",
                    g.crossing.map_or("none".into(), |n| n.to_string()),
                    g.lipschitz,
                    g.c
                ));
            }
            for n in &report.notes {
                out.info(format!("note: {n}"));
            }
        }
        BoundsInput::Sweep(sweep) => {
            let mut csv = BufWriter::new(File::create(opts.out.join(SWEEP_CSV))?);
            writeln!(csv, "{SWEEP_HEADER}")?;
            for p in &sweep.points {
                let phys = Physical { nu: p.nu, alpha: p.alpha, sigma: p.sigma };
                let r = bounds::report(phys, sweep.geometry, &p.forcing, sweep.c, sweep.n_max, sweep.domain_area)?;
                writeln!(csv, "{}", sweep_row(&r))?;
            }
            csv.flush()?;
            out.info(format!("{} sweep points", sweep.points.len()));
            out.info(format!("note: {}", bounds::EXPONENT_NOTE));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub identities: IdentityTable,
    pub envelopes: ViolationReport,
    pub time_average_violations: usize,
    pub max_energy_residual: f64,
    /// Envelope check of an existing `diagnostics.csv` in the output directory.
    pub existing_run: Option<ViolationReport>,
}

fn identity_lines(out: &mut Outcome, table: &IdentityTable) {
    for row in &table.rows {
        out.push(
            &format!("{} {} {}", table.geometry.name(), table.truncation, row.name),
            row.pass,
            format!("{:.3e} (tol {:.0e})", row.max_residual, row.tolerance),
        );
    }
}

/// Identity suite, envelope, time-average and energy-law checks on the configured run.
pub fn cmd_verify(spec: &RunSpec, opts: &CommandOptions) -> Result<Outcome> {
    let plan = spec.plan()?;
    let params = spec.model_params(&plan)?;
    let seed = spec.seed.unwrap_or(0);
    let identities = identity_suite(&plan, seed, &IdentityOptions::default())?;
    let state0 = spec.initial_state(&plan)?;
    let slack = Slack::new(spec.scheme.dt);
    let track = EnvelopeTrack::new(&plan, &params, &state0, slack)?;
    let mut records = Vec::new();
    run(&plan, &state0, &params, &spec.scheme, |t, s| {
        records.push(energy_record(&plan, s, &params, t, Some(&track))?);
        Ok(())
    })?;
    let envelopes = check_trajectory(&records, &slack);
    let averages = time_average_check(&plan, &params, &records, &slack)?;
    let max_energy_residual = records.iter().map(|r| r.energy_residual).fold(0.0, f64::max);
    let csv = opts.out.join(DIAGNOSTICS_CSV);
    let existing_run = if csv.exists() { Some(check_trajectory(&read_diagnostics(&csv)?, &slack)) } else { None };
    let report = VerifyReport {
        identities,
        envelopes,
        time_average_violations: averages.violations,
        max_energy_residual,
        existing_run,
    };
    fs::create_dir_all(&opts.out)?;
    fs::write(opts.out.join(VERIFY_JSON), serde_json::to_string_pretty(&report)?)?;

    let mut out = Outcome { success: true, lines: Vec::new() };
    identity_lines(&mut out, &report.identities);
    out.push("envelopes", report.envelopes.is_clean(), format!("{} violations in {} samples", report.envelopes.violations.len(), report.envelopes.checked));
    out.push("time average", report.time_average_violations == 0, format!("{} violations", report.time_average_violations));
    out.push(
        "energy law",
        report.max_energy_residual <= ENERGY_RESIDUAL_TOL,
        format!("max residual {:.3e}", report.max_energy_residual),
    );
    if let Some(e) = &report.existing_run {
        out.push("existing run envelopes", e.is_clean(), format!("{} violations in {} samples", e.violations.len(), e.checked));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    /// Sphere degree and torus wavenumber truncation of the suites.
    pub truncation: usize,
    pub seed: u64,
    /// Sign of one trilinear term; `-1.0` deliberately breaks the identities.
    pub trilinear_sign: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { truncation: 21, seed: 0, trilinear_sign: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Built-in suites on both geometries at the default truncation.
pub fn cmd_selftest(options: &SelftestOptions, opts: &CommandOptions) -> Result<Outcome> {
    let mut rows: Vec<SelftestRow> = Vec::new();
    let mut push = |name: String, value: f64, tolerance: f64| rows.push(SelftestRow { name, value, tolerance, pass: value <= tolerance });
    let geometries = [Geometry::Sphere, Geometry::Torus { length: 2.0 * std::f64::consts::PI }];
    for g in geometries {
        let plan = BasisPlan::new(g, options.truncation)?;
        let name = g.name();
        let sr = spectral_residuals(&plan, options.seed, 3)?;
        push(format!("{name} transform roundtrip"), sr.roundtrip, 1e-12);
        push(format!("{name} parseval"), sr.parseval, 1e-12);
        let id = identity_suite(&plan, options.seed, &IdentityOptions { sign: options.trilinear_sign, ..Default::default() })?;
        for r in id.rows {
            push(format!("{name} {}", r.name), r.max_residual, r.tolerance);
        }
        let sigma = if g.harmonic_dim() > 0 { 0.1 } else { 0.0 };
        let unforced = ModelParams::unforced(&plan, 0.05, 0.3, sigma);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(options.seed);
        let mut energy = 0.0f64;
        for _ in 0..20 {
            let u = VelocityState::random(&plan, &mut rng, 2.0, true);
            energy = energy.max(crate::dynamics::energy_residual(&plan, &u, &unforced)?);
        }
        push(format!("{name} energy law"), energy, 1e-12);
        push(format!("{name} tangent consistency"), tangent_consistency(&plan, &unforced, options.seed, 20, 1e-6)?, 1e-6);

        // Short forced run on a coarser plan with envelope checks.
        let small = BasisPlan::new(g, 10)?;
        let mut forced = ModelParams::unforced(&small, 0.1, 0.5, sigma);
        let ix = match g {
            Geometry::Sphere => SpectralIndex::Sphere { degree: 3, order: 1 },
            Geometry::Torus { .. } => SpectralIndex::Torus { k1: 2, k2: 1 },
        };
        forced.forcing.f1[small.position(&ix)?] = 1.0;
        let cfg = SchemeConfig::new(Scheme::IfRk4, 5e-3, 2.0, 10);
        let slack = Slack::new(cfg.dt);
        let u0 = VelocityState::random(&small, &mut rng, 3.0, true);
        let track = EnvelopeTrack::new(&small, &forced, &u0, slack)?;
        let mut records = Vec::new();
        run(&small, &u0, &forced, &cfg, |t, s| {
            records.push(energy_record(&small, s, &forced, t, Some(&track))?);
            Ok(())
        })?;
        push(format!("{name} forced-run envelope violations"), check_trajectory(&records, &slack).violations.len() as f64, 0.0);
    }
    let mut out = Outcome { success: true, lines: Vec::new() };
    for r in &rows {
        out.push(&r.name, r.pass, format!("{:.3e} (tol {:.0e})", r.value, r.tolerance));
    }
    fs::create_dir_all(&opts.out)?;
    fs::write(opts.out.join(SELFTEST_JSON), serde_json::to_string_pretty(&rows)?)?;
    Ok(out)
}

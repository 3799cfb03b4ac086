//! Command-line front end. Every subcommand loads a config, computes its
//! tables in memory, then writes CSVs and a `manifest.json` into `--out-dir`.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::chain::{dimer_idle_fluxes, pairwise_idle_scan, ChainAnalyzer, ChainModel, ChainSpec};
use crate::circuit::{DimerModel, ModeKind, DIMER_C};
use crate::config::{parse_truncation, Config};
use crate::coupler::spectrum_vs_flux;
use crate::crosstalk::{geff_zero_full, geff_zeros, CrosstalkReport, DimerAnalyzer};
use crate::error::{Error, Result};
use crate::fock::{dimer_computational_labels, label_states, TruncationPolicy};
use crate::gate::{flattop, optimize_pulse, GateReport, GateScheme, GateSimulator};
use crate::idle::{error_grid, find_idle_flux, linspace, robustness_grid, zero_zz_manifold, IdleObjective, IdleSearchResult};
use crate::output::{sha256_hex, write_manifest, Cell, CsvTable, RunManifest, Staged};
use crate::units::{angular_to_ghz, angular_to_khz, angular_to_mhz, flux_quanta_to_rad, rad_to_flux_quanta};

/// Environment variable with the default worker thread count.
pub const THREADS_ENV: &str = "ZZCOUPLER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "zzcoupler", version, about = "Tunable-coupler crosstalk and gate simulator")]
pub struct Cli {
    /// TOML config; the bundled reference config when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Levels per mode `N`, optionally with excitation cutoff as `N/M`.
    #[arg(long, global = true)]
    pub truncation: Option<String>,
    /// Config override, e.g. `--set coupler.EJc_GHz=42`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Charging energies, mode parameters and couplings at the configured bias.
    DeviceParams,
    /// Coupler frequency and anharmonicity over the flux sweep.
    CouplerSpectrum,
    /// Lowest dimer levels with their dominant bare states.
    Spectrum {
        /// Also write every listed eigenvector.
        #[arg(long)]
        dump_vectors: bool,
    },
    /// Exact and perturbative ZZ and delocalization.
    Crosstalk {
        /// Evaluate over the flux sweep instead of the configured bias.
        #[arg(long)]
        sweep: bool,
    },
    /// Flux that minimizes delocalization (or |ZZ|).
    IdleSearch,
    /// ZZ at the idle flux over coupler junction parameters.
    ZzMap,
    /// Idle-point quality under coupler fabrication errors.
    Robustness,
    /// Simulate a CZ gate.
    Gate {
        #[arg(long, value_enum, default_value = "cz40")]
        scheme: SchemeArg,
        /// Optimize pulse parameters before reporting.
        #[arg(long)]
        optimize: bool,
    },
    /// Pairwise ZZ and delocalization in a qubit chain.
    ChainScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Cz40,
    CzFast,
}

impl From<SchemeArg> for GateScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Cz40 => GateScheme::Cz40,
            SchemeArg::CzFast => GateScheme::CzFast,
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DeviceParams => "device-params",
            Command::CouplerSpectrum => "coupler-spectrum",
            Command::Spectrum { .. } => "spectrum",
            Command::Crosstalk { .. } => "crosstalk",
            Command::IdleSearch => "idle-search",
            Command::ZzMap => "zz-map",
            Command::Robustness => "robustness",
            Command::Gate { .. } => "gate",
            Command::ChainScan => "chain-scan",
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// Short human-readable result lines.
    pub summary: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a Config,
    command: &'static str,
    config_digest: String,
    staged: Staged,
    summary: Vec<String>,
    settings: serde_json::Value,
}

impl Ctx<'_> {
    fn table<S: AsRef<str>>(&self, columns: &[S], what: &str) -> CsvTable {
        let mut t = CsvTable::new(columns);
        t.meta("generator", format!("zzcoupler {}", env!("CARGO_PKG_VERSION")))
            .meta("command", self.command)
            .meta("config_sha256", &self.config_digest)
            .meta("contents", what);
        t
    }
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let started = Instant::now();
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p, &cli.overrides)?,
        None => Config::from_toml_str(crate::config::PAPER_CONFIG, &cli.overrides)?,
    };
    if let Some(t) = &cli.truncation {
        let t = parse_truncation(t)?;
        match cli.command {
            Command::ZzMap => cfg.zz_map.levels = t.levels,
            Command::Robustness => cfg.robustness.levels = t.levels,
            Command::Gate { .. } => {
                cfg.gate.levels = t.levels;
                cfg.gate.cutoff = t.cutoff;
            }
            Command::ChainScan => {
                cfg.chain.levels = t.levels;
                cfg.chain.cutoff = t.cutoff;
            }
            _ => cfg.truncation = t,
        }
        cfg.validate()?;
    }
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let config_json = serde_json::to_value(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let mut ctx = Ctx {
        cfg: &cfg,
        command: cli.command.name(),
        config_digest: sha256_hex(config_json.to_string().as_bytes()),
        staged: Staged::new(),
        summary: Vec::new(),
        settings: json!({}),
    };
    pool.install(|| dispatch(&cli.command, &mut ctx))?;
    let outputs = ctx.staged.write(&cli.out_dir)?;
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        arguments: std::env::args().skip(1).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config_json,
        settings: ctx.settings,
        threads: pool.current_num_threads(),
        started_unix_s: started_unix_s.saturating_sub(started.elapsed().as_secs()),
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs,
    };
    let manifest_path = write_manifest(&cli.out_dir, &manifest)?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
        summary: ctx.summary,
    })
}

/// Parse `args` (including the program name), run, print, and return the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => crate::ErrorCategory::Config.exit_code(),
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            println!("manifest: {}", out.manifest_path.display());
            0
        }
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{}]: {e}", cat.as_str());
            cat.exit_code()
        }
    }
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<()> {
    match cmd {
        Command::DeviceParams => device_params(ctx),
        Command::CouplerSpectrum => coupler_spectrum(ctx),
        Command::Spectrum { dump_vectors } => spectrum(ctx, *dump_vectors),
        Command::Crosstalk { sweep } => crosstalk(ctx, *sweep),
        Command::IdleSearch => idle_search(ctx),
        Command::ZzMap => zz_map(ctx),
        Command::Robustness => robustness(ctx),
        Command::Gate { scheme, optimize } => gate(ctx, (*scheme).into(), *optimize),
        Command::ChainScan => chain_scan(ctx),
    }
}

fn dimer_model(cfg: &Config) -> Result<DimerModel> {
    let spec = cfg.circuit_spec();
    spec.validate()?;
    DimerModel::new(&spec)
}

fn truncation_json(t: &TruncationPolicy) -> serde_json::Value {
    json!({ "levels": t.levels, "cutoff": t.cutoff })
}

fn label_str(l: &[u8]) -> String {
    l.iter().map(|d| d.to_string()).collect()
}

fn device_params(ctx: &mut Ctx) -> Result<()> {
    let model = dimer_model(ctx.cfg)?;
    let p = model.params_at(ctx.cfg.phi_ext())?;
    let mut modes = ctx.table(
        &["mode", "kind", "omega_GHz", "anharmonicity_MHz", "cubic_MHz", "n_zpf", "phi_zpf"],
        "quantized modes, order Q1 C Q2",
    );
    modes.meta("phi_ext_Phi0", ctx.cfg.coupler.phi_ext);
    for (i, m) in p.modes.iter().enumerate() {
        let kind = match m.kind {
            ModeKind::Qubit => "qubit",
            ModeKind::Coupler => "coupler",
        };
        modes.row(vec![
            i.into(),
            kind.into(),
            angular_to_ghz(m.omega).into(),
            angular_to_mhz(m.anharmonicity).into(),
            angular_to_mhz(m.cubic).into(),
            m.n_zpf.into(),
            m.phi_zpf.into(),
        ]);
    }
    let mut couplings = ctx.table(&["a", "b", "g_MHz"], "capacitive couplings g/2pi");
    for c in &p.couplings {
        couplings.row(vec![c.a.into(), c.b.into(), angular_to_mhz(c.g).into()]);
    }
    let mut charging = ctx.table(&["i", "j", "E_GHz"], "charging energies, node order Q1 + - Q2 after rotation");
    let n = model.charging.matrix.nrows();
    for i in 0..n {
        for j in 0..n {
            charging.row(vec![i.into(), j.into(), model.charging.get(i, j).into()]);
        }
    }
    ctx.staged.csv("modes.csv", &modes);
    ctx.staged.csv("couplings.csv", &couplings);
    ctx.staged.csv("charging.csv", &charging);
    ctx.summary.push(format!(
        "g12/2pi = {:.4} MHz, g1c/2pi = {:.4} MHz, g2c/2pi = {:.4} MHz, omega_c/2pi = {:.5} GHz",
        angular_to_mhz(p.g12()),
        angular_to_mhz(p.g1c()),
        angular_to_mhz(p.g2c()),
        angular_to_ghz(p.modes[DIMER_C].omega)
    ));
    ctx.summary.extend(p.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(())
}

fn coupler_spectrum(ctx: &mut Ctx) -> Result<()> {
    let model = dimer_model(ctx.cfg)?;
    let fluxes = ctx.cfg.sweep_fluxes();
    let points = spectrum_vs_flux(&model.coupler_spec(0.0), &fluxes);
    let mut t = ctx.table(
        &["phi_ext_Phi0", "omega_c_GHz", "E2_GHz", "E3_GHz", "U_c_MHz", "K_c_MHz", "phi_min", "ec_over_ej"],
        "coupler levels above its ground state, Duffing model",
    );
    let mut valid = 0;
    for pt in &points {
        let phi = rad_to_flux_quanta(pt.phi_ext);
        match pt.params {
            Some(c) => {
                valid += 1;
                let w = angular_to_ghz(c.omega);
                let u = angular_to_ghz(c.anharmonicity);
                t.row(vec![
                    phi.into(),
                    w.into(),
                    (2.0 * w + u).into(),
                    (3.0 * w + 3.0 * u).into(),
                    (1e3 * u).into(),
                    angular_to_mhz(c.cubic).into(),
                    c.phi_min.into(),
                    c.ec_over_ej.into(),
                ]);
            }
            None => {
                t.row(vec![phi.into(), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]);
            }
        }
    }
    ctx.staged.csv("coupler_spectrum.csv", &t);
    ctx.summary.push(format!("{valid}/{} flux points in the single-well regime", points.len()));
    Ok(())
}

fn spectrum(ctx: &mut Ctx, dump_vectors: bool) -> Result<()> {
    let model = dimer_model(ctx.cfg)?;
    let trunc = ctx.cfg.truncation.policy();
    let analyzer = DimerAnalyzer::new(&trunc)?;
    let p = model.params_at(ctx.cfg.phi_ext())?;
    let s = analyzer.spectrum(&p)?;
    let comp = label_states(s.clone(), &dimer_computational_labels(), &analyzer.labels).ok();
    let count = ctx.cfg.spectrum.count.min(s.values.len());
    let mut t = ctx.table(
        &["index", "energy_GHz", "dominant_state", "dominant_weight", "computational_label"],
        "lowest levels relative to the ground state",
    );
    t.meta("truncation", format!("{trunc:?}"));
    let mut dump = String::new();
    for k in 0..count {
        let (row, w) = (0..s.vectors.nrows())
            .map(|r| (r, s.vectors[(r, k)].powi(2)))
            .fold((0, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        let label = comp
            .as_ref()
            .and_then(|l| l.assignments.iter().find(|a| a.eigen_index == k))
            .map(|a| Cell::Text(label_str(&a.label)))
            .unwrap_or(Cell::Missing);
        t.row(vec![
            k.into(),
            angular_to_ghz(s.values[k] - s.values[0]).into(),
            label_str(s.basis.state(row)).into(),
            w.into(),
            label,
        ]);
        if dump_vectors {
            dump.push_str(&format!("# eigenvector {k}\n"));
            for r in 0..s.vectors.nrows() {
                dump.push_str(&format!("{r} {:e} {:e}\n", s.vectors[(r, k)], 0.0));
            }
        }
    }
    ctx.staged.csv("spectrum.csv", &t);
    if dump_vectors {
        ctx.staged.text("eigenvectors.txt", dump);
    }
    ctx.settings = json!({ "truncation": truncation_json(&trunc), "dim": s.values.len() });
    ctx.summary.push(format!("{count} levels of a {}-dimensional space", s.values.len()));
    Ok(())
}

fn crosstalk_row(phi: f64, omega_c: f64, r: &Result<CrosstalkReport>) -> Vec<Cell> {
    let mut row = vec![rad_to_flux_quanta(phi).into(), angular_to_ghz(omega_c).into()];
    match r {
        Ok(r) => {
            let z = r.zeta_pert;
            row.extend([
                angular_to_khz(r.zeta_exact).into(),
                r.epsilon_exact.into(),
                z.map(|z| angular_to_khz(z.sum())).into(),
                z.map(|z| angular_to_khz(z.second)).into(),
                z.map(|z| angular_to_khz(z.third)).into(),
                z.map(|z| angular_to_khz(z.fourth)).into(),
                r.epsilon_pert.into(),
                r.g_eff.map(|g| angular_to_mhz(g.full)).into(),
                r.g_eff.map(|g| angular_to_mhz(g.rwa)).into(),
                "ok".into(),
            ]);
        }
        Err(e) => {
            row.extend((0..9).map(|_| Cell::Missing));
            row.push(e.category().as_str().into());
        }
    }
    row
}

const CROSSTALK_COLUMNS: [&str; 12] = [
    "phi_ext_Phi0",
    "omega_c_GHz",
    "zeta_exact_kHz",
    "eps_exact",
    "zeta_pert_kHz",
    "zeta2_kHz",
    "zeta3_kHz",
    "zeta4_kHz",
    "eps_pert",
    "g_eff_MHz",
    "g_eff_rwa_MHz",
    "status",
];

fn crosstalk(ctx: &mut Ctx, sweep: bool) -> Result<()> {
    let model = dimer_model(ctx.cfg)?;
    let trunc = ctx.cfg.truncation.policy();
    let analyzer = DimerAnalyzer::new(&trunc)?;
    let fluxes = if sweep { ctx.cfg.sweep_fluxes() } else { vec![ctx.cfg.phi_ext()] };
    let rows: Vec<(f64, f64, Result<CrosstalkReport>)> = fluxes
        .par_iter()
        .map(|&phi| match model.params_at(phi) {
            Ok(p) => (phi, p.modes[DIMER_C].omega, analyzer.report(&p)),
            Err(e) => (phi, f64::NAN, Err(e)),
        })
        .collect();
    if !sweep {
        if let Some((_, _, Err(e))) = rows.first() {
            return Err(Error::Convergence(format!("crosstalk at the configured bias: {e}")));
        }
    }
    let mut t = ctx.table(&CROSSTALK_COLUMNS, "ZZ and delocalization, exact and perturbative");
    t.meta("truncation", format!("{trunc:?}"));
    for (phi, w, r) in &rows {
        t.row(crosstalk_row(*phi, *w, r));
    }
    let name = if sweep { "crosstalk_sweep.csv" } else { "crosstalk.csv" };
    ctx.staged.csv(name, &t);
    ctx.settings = json!({ "truncation": truncation_json(&trunc), "sweep": sweep });
    if let (false, Some((_, w, Ok(r)))) = (sweep, rows.first()) {
        ctx.summary.push(format!(
            "omega_c/2pi = {:.5} GHz: zeta/2pi = {:.4} kHz, eps = {:.3e}",
            angular_to_ghz(*w),
            angular_to_khz(r.zeta_exact),
            r.epsilon_exact
        ));
    } else {
        let ok = rows.iter().filter(|r| r.2.is_ok()).count();
        ctx.summary.push(format!("{ok}/{} sweep points evaluated", rows.len()));
    }
    Ok(())
}

fn idle_row(r: &Option<IdleSearchResult>) -> Vec<Cell> {
    match r {
        Some(r) => vec![
            rad_to_flux_quanta(r.phi_ext).into(),
            angular_to_ghz(r.omega_c).into(),
            angular_to_khz(r.zeta).into(),
            r.epsilon.into(),
            r.at_edge.into(),
        ],
        None => (0..5).map(|_| Cell::Missing).collect(),
    }
}

fn idle_search(ctx: &mut Ctx) -> Result<()> {
    let model = dimer_model(ctx.cfg)?;
    let trunc = ctx.cfg.truncation.policy();
    let analyzer = DimerAnalyzer::new(&trunc)?;
    let opts = ctx.cfg.idle.options();
    let r = find_idle_flux(&model, &analyzer, &opts)?;
    let idle_params = model.params_at(r.phi_ext)?;
    let seed = geff_zeros(&idle_params).ok();
    let seed_full = geff_zero_full(&idle_params).ok();
    let mut t = ctx.table(
        &["phi_ext_Phi0", "omega_c_GHz", "zeta_kHz", "eps", "at_edge", "omega_geff_zero_rwa_GHz", "omega_geff_zero_GHz", "evaluations"],
        "idle point",
    );
    t.meta("objective", format!("{:?}", opts.objective));
    t.meta("truncation", format!("{trunc:?}"));
    let mut row = idle_row(&Some(r));
    row.push(seed.map(|z| angular_to_ghz(z.chosen())).into());
    row.push(seed_full.map(angular_to_ghz).into());
    row.push(r.evaluations.into());
    t.row(row);
    ctx.staged.csv("idle.csv", &t);
    ctx.settings = json!({ "truncation": truncation_json(&trunc), "grid_points": opts.grid_points, "xtol": opts.xtol });
    ctx.summary.push(format!(
        "idle at phi_ext = {:.6} Phi0: omega_c/2pi = {:.5} GHz, zeta/2pi = {:.4} kHz, eps = {:.3e}",
        rad_to_flux_quanta(r.phi_ext),
        angular_to_ghz(r.omega_c),
        angular_to_khz(r.zeta),
        r.epsilon
    ));
    Ok(())
}

fn zz_map(ctx: &mut Ctx) -> Result<()> {
    let z = &ctx.cfg.zz_map;
    let base = ctx.cfg.circuit_spec();
    base.validate()?;
    let trunc = TruncationPolicy::new(z.levels);
    let ej = linspace(z.ej_min, z.ej_max, z.ej_points);
    let alpha = linspace(z.alpha_min, z.alpha_max, z.alpha_points);
    let mut opts = ctx.cfg.idle.options();
    opts.objective = IdleObjective::MinEpsilon;
    let m = zero_zz_manifold(&base, &ej, &alpha, &trunc, &opts, z.bisection_steps)?;
    let mut cells = ctx.table(
        &["EJc_GHz", "alpha", "phi_ext_Phi0", "omega_c_GHz", "zeta_kHz", "eps", "at_edge"],
        "ZZ at the delocalization-minimizing flux",
    );
    for c in &m.cells {
        let mut row = vec![c.ej.into(), c.alpha.into()];
        row.extend(idle_row(&c.result));
        cells.row(row);
    }
    let mut contour = ctx.table(&["EJc_GHz", "alpha"], "zero-ZZ contour");
    for &(e, a) in &m.contour {
        contour.row(vec![e.into(), a.into()]);
    }
    ctx.staged.csv("zz_map.csv", &cells);
    ctx.staged.csv("zz_contour.csv", &contour);
    ctx.settings = json!({ "truncation": truncation_json(&trunc), "bisection_steps": z.bisection_steps });
    ctx.summary.push(format!("{} cells, {} contour points", m.cells.len(), m.contour.len()));
    Ok(())
}

fn robustness(ctx: &mut Ctx) -> Result<()> {
    let r = &ctx.cfg.robustness;
    let base = ctx.cfg.circuit_spec();
    base.validate()?;
    let trunc = TruncationPolicy::new(r.levels);
    let axis = linspace(-r.span, r.span, r.points);
    let errors = error_grid(&axis, &axis);
    let mut opts = ctx.cfg.idle.options();
    opts.objective = r.objective;
    let cells = robustness_grid(&base, &errors, &trunc, &opts)?;
    let mut t = ctx.table(
        &["dEC", "dEJ", "phi_ext_Phi0", "omega_c_GHz", "zeta_kHz", "eps", "at_edge", "decoupled"],
        "idle point under coupler fabrication errors",
    );
    t.meta("decoupled", "|zeta|/2pi < 1 kHz and eps < 5e-4");
    let mut good = 0;
    for c in &cells {
        let ok = c
            .result
            .is_some_and(|r| angular_to_khz(r.zeta).abs() < 1.0 && r.epsilon < 5e-4);
        good += ok as usize;
        let mut row = vec![c.error.d_ec.into(), c.error.d_ej.into()];
        row.extend(idle_row(&c.result));
        row.push(ok.into());
        t.row(row);
    }
    ctx.staged.csv("robustness.csv", &t);
    ctx.settings = json!({ "truncation": truncation_json(&trunc), "objective": r.objective });
    ctx.summary.push(format!(
        "{good}/{} cells decoupled ({:.1}%)",
        cells.len(),
        100.0 * good as f64 / cells.len() as f64
    ));
    Ok(())
}

fn gate_summary(ctx: &Ctx, r: &GateReport, x: &[f64]) -> CsvTable {
    let mut t = ctx.table(
        &[
            "scheme",
            "t_gate_ns",
            "coupler_idle_GHz",
            "coupler_int_GHz",
            "coupler_tau_ns",
            "qubit1_idle_GHz",
            "qubit1_int_GHz",
            "qubit1_tau_ns",
            "infidelity",
            "leakage",
            "unitarity_defect",
            "conditional_phase_rad",
            "decoherence",
            "evaluations",
            "converged",
        ],
        "CZ gate after virtual-Z compensation",
    );
    t.meta("dt_ns", r.dt);
    t.meta("parameters", format!("{x:?}"));
    let p = &r.pulses;
    let q = p.qubit1;
    t.row(vec![
        format!("{:?}", r.scheme).into(),
        p.coupler.t_gate.into(),
        angular_to_ghz(p.coupler.omega_idle).into(),
        angular_to_ghz(p.coupler.omega_int).into(),
        p.coupler.tau.into(),
        q.map(|q| angular_to_ghz(q.omega_idle)).into(),
        q.map(|q| angular_to_ghz(q.omega_int)).into(),
        q.map(|q| q.tau).into(),
        r.infidelity.into(),
        r.leakage.into(),
        r.unitarity_defect.into(),
        r.conditional_phase.into(),
        r.decoherence.into(),
        r.optimizer_evaluations.into(),
        r.optimizer_converged.into(),
    ]);
    t
}

fn gate(ctx: &mut Ctx, scheme: GateScheme, optimize: bool) -> Result<()> {
    let cfg = ctx.cfg;
    let model = dimer_model(cfg)?;
    let analyzer = DimerAnalyzer::new(&cfg.truncation.policy())?;
    let mut idle_opts = cfg.idle.options();
    idle_opts.objective = IdleObjective::MinEpsilon;
    let idle = find_idle_flux(&model, &analyzer, &idle_opts)?;
    let trunc = cfg.gate.truncation();
    let mut sim = GateSimulator::new(model, idle.phi_ext, &trunc, cfg.gate.dt)?;
    sim.coherence_time_us = cfg.gate.coherence;
    let search = cfg.gate.search(scheme);
    let (report, x, trace) = if optimize {
        let o = optimize_pulse(&sim, &search)?;
        (o.report, o.x, o.trace)
    } else {
        let pulses = search.initial_pulses(&sim);
        let mut x = vec![angular_to_ghz(pulses.coupler.omega_int), pulses.coupler.tau];
        if let Some(q) = pulses.qubit1 {
            x.extend([angular_to_ghz(q.omega_int), q.tau]);
        }
        (sim.simulate(scheme, &pulses)?, x, Vec::new())
    };
    let pulses = report.pulses;

    let mut unitary = ctx.table(&["row", "col", "re", "im", "re_compensated", "im_compensated"], "computational unitary, order 000 001 100 101");
    for r in 0..4 {
        for c in 0..4 {
            let (a, b) = (report.unitary[r][c], report.unitary_compensated[r][c]);
            unitary.row(vec![r.into(), c.into(), a.0.into(), a.1.into(), b.0.into(), b.1.into()]);
        }
    }

    let n = (pulses.t_gate() / cfg.gate.sample).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=n).map(|k| pulses.t_gate() * k as f64 / n as f64).collect();
    let mut shape = ctx.table(&["t_ns", "omega_c_GHz", "phi_ext_Phi0", "omega_q1_GHz"], "pulse schedule");
    for &t in &times {
        let w = flattop(&pulses.coupler, t);
        let phi = sim.branch().invert(w)?;
        let q = pulses.qubit1.map(|q| angular_to_ghz(flattop(&q, t))).unwrap_or(angular_to_ghz(sim.idle_omega_q1()));
        shape.row(vec![t.into(), angular_to_ghz(w).into(), rad_to_flux_quanta(phi).into(), q.into()]);
    }

    let tracked: Vec<Vec<u8>> = [[1, 0, 1], [2, 0, 0], [0, 0, 2], [1, 1, 0], [0, 1, 1], [0, 2, 0]]
        .iter()
        .map(|l| l.to_vec())
        .collect();
    let pop = sim.population_trace(&pulses, &[1, 0, 1], &tracked, cfg.gate.sample)?;
    let cols: Vec<String> = std::iter::once("t_ns".to_string())
        .chain(tracked.iter().map(|l| format!("P_{}", label_str(l))))
        .collect();
    let mut pops = ctx.table(&cols, "populations of idle eigenstates starting from 101");
    for (t, p) in pop.times.iter().zip(&pop.populations) {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(p.iter().map(|&v| v.into()));
        pops.row(row);
    }

    ctx.staged.csv("gate_summary.csv", &gate_summary(ctx, &report, &x));
    ctx.staged.csv("gate_unitary.csv", &unitary);
    ctx.staged.csv("gate_pulse.csv", &shape);
    ctx.staged.csv("gate_populations.csv", &pops);
    if optimize {
        let mut tr = ctx.table(&["evaluation", "objective", "parameters"], "optimizer trace");
        for (i, (x, f)) in trace.iter().enumerate() {
            tr.row(vec![i.into(), (*f).into(), format!("{x:?}").into()]);
        }
        ctx.staged.csv("gate_trace.csv", &tr);
    }
    ctx.settings = json!({
        "truncation": truncation_json(&trunc),
        "dt_ns": cfg.gate.dt,
        "idle_phi_ext_Phi0": rad_to_flux_quanta(idle.phi_ext),
        "optimize": optimize,
    });
    ctx.summary.push(format!(
        "{:?}: infidelity {:.3e}, leakage {:.3e}, decoherence estimate {:.3e}, conditional phase {:.5} rad",
        scheme, report.infidelity, report.leakage, report.decoherence, report.conditional_phase
    ));
    Ok(())
}

fn chain_scan(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let spec = cfg.chain_spec();
    let model = ChainModel::new(&spec)?;
    let dimer_trunc = TruncationPolicy::new(cfg.chain.dimer_levels);
    let chain_trunc = cfg.chain.truncation();
    let idle_window = (flux_quanta_to_rad(cfg.idle.window_min), flux_quanta_to_rad(cfg.idle.window_max));
    let idle = dimer_idle_fluxes(&spec, &dimer_trunc, idle_window)?;
    let analyzer = ChainAnalyzer::new(spec.len(), &chain_trunc)?;
    let sweep = cfg.chain_fluxes();
    let mut summary = ctx.table(
        &[
            "pair",
            "dimer_phi_Phi0",
            "dimer_omega_c_GHz",
            "dimer_zeta_kHz",
            "dimer_eps",
            "chain_epsmin_omega_c_GHz",
            "chain_epsmin_zeta_kHz",
            "chain_epsmin_eps",
            "chain_zero_phi_Phi0",
            "chain_zero_omega_c_GHz",
            "chain_zero_zeta_kHz",
            "chain_zero_eps",
        ],
        "pair idle points in the chain and in isolation",
    );
    let shunts = model.shunts.iter().map(|c| format!("{c:.6}")).collect::<Vec<_>>().join(" ");
    summary.meta("adjusted_shunts_fF", shunts);
    for k in 0..spec.links.len() {
        let r = pairwise_idle_scan(&model, &analyzer, &dimer_trunc, k, &idle, &sweep)?;
        let pair = format!("Q{}-Q{}", k, k + 1);
        let mut t = ctx.table(
            &["phi_ext_Phi0", "omega_c_GHz", "zeta_chain_kHz", "zeta_dimer_kHz", "eps_chain", "eps_dimer"],
            &format!("pair {pair}, other couplers at their isolated idle points"),
        );
        for p in &r.points {
            t.row(vec![
                rad_to_flux_quanta(p.phi_ext).into(),
                angular_to_ghz(p.omega_c).into(),
                p.zeta_chain.map(angular_to_khz).into(),
                p.zeta_dimer.map(angular_to_khz).into(),
                p.eps_chain.into(),
                p.eps_dimer.into(),
            ]);
        }
        ctx.staged.csv(&format!("chain_pair_{}{}.csv", k, k + 1), &t);
        let z = r.chain_zero;
        summary.row(vec![
            pair.clone().into(),
            rad_to_flux_quanta(r.dimer_idle_phi).into(),
            angular_to_ghz(r.dimer_idle_omega_c).into(),
            angular_to_khz(r.dimer_idle_zeta).into(),
            r.dimer_idle_eps.into(),
            angular_to_ghz(r.chain_idle_omega_c).into(),
            angular_to_khz(r.chain_idle_zeta).into(),
            r.chain_idle_eps.into(),
            z.map(|z| rad_to_flux_quanta(z.phi_ext)).into(),
            z.map(|z| angular_to_ghz(z.omega_c)).into(),
            z.map(|z| angular_to_khz(z.zeta)).into(),
            z.map(|z| z.epsilon).into(),
        ]);
        ctx.summary.push(format!(
            "{pair}: isolated idle {:.5} GHz, chain eps-min {:.5} GHz (zeta {:.3} kHz), chain zeta-zero {}",
            angular_to_ghz(r.dimer_idle_omega_c),
            angular_to_ghz(r.chain_idle_omega_c),
            angular_to_khz(r.chain_idle_zeta),
            z.map_or("none".to_string(), |z| format!("{:.5} GHz", angular_to_ghz(z.omega_c)))
        ));
    }
    ctx.staged.csv("chain_idle.csv", &summary);
    ctx.settings = json!({
        "chain_truncation": truncation_json(&chain_trunc),
        "dimer_truncation": truncation_json(&dimer_trunc),
        "dim": analyzer.dim(),
        "eigenpairs": analyzer.eigen_count,
        "modes": ChainSpec::qubit_mode(spec.len() - 1) + 1,
    });
    Ok(())
}

/// Read a CSV written by this tool, skipping the `#` header, as rows of fields.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} has no header", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    Ok((header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect()))
}

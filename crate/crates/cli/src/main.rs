use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fanocav::config::{LdosConfig, SimConfig};
use fanocav::ldos::{Cavity, SpectralCurve};
use fanocav::mapping::{fit, fit_lorentzian, mapped_spectral_density, FitReport, MappedPair};
use fanocav::observables::{
    bulk_spectrum, fano_setup, fp_single_mode, one_colour_spectrum, point_with_pair, prepare, resolved_peaks, sweep_fano,
    sweep_fp, SweepMap,
};
use fanocav::par;
use fanocav::phonons::PhononCorrelations;
use fanocav::quad::{linspace, trapezoid};
use fanocav::scattering::{fp_green_function, green_function, ConstantMirror, FanoMirror};
use fanocav::{Complex64 as C64, Error, Result};

#[derive(Parser)]
#[command(name = "fanocav", version, about = "Fano-cavity emitter simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for parallel stages.
    #[arg(long)]
    threads: Option<usize>,
    /// Optimizer seed; overrides `fit.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// LDOS curve, or a (frequency, γ_F) map with --gammaF-range.
    Ldos {
        #[command(flatten)]
        common: Common,
        /// Emitter position x̃ in [-1, 1].
        #[arg(long)]
        position: Option<f64>,
        /// Frequency range `lo..hi` in meV.
        #[arg(long, value_parser = parse_range)]
        range: Option<(f64, f64)>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long = "gammaF-range", value_parser = parse_range)]
        gamma_f_range: Option<(f64, f64)>,
        #[arg(long = "gammaF-points", default_value_t = 41)]
        gamma_f_points: usize,
        /// Replace the Fano mirror by a constant reflectivity R.
        #[arg(long = "bare-fp", allow_negative_numbers = true)]
        bare_fp: Option<f64>,
    },
    /// Two-mode network fit of the LDOS (or of `target`).
    Fit {
        #[command(flatten)]
        common: Common,
    },
    /// Filtered emission spectrum and indistinguishability at one emitter frequency.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Use a Fabry-Perot cavity with constant reflectivity R instead of the Fano mirror.
        #[arg(long = "bare-fp")]
        bare_fp: Option<f64>,
    },
    /// Indistinguishability map over (emitter detuning, γ_F).
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fabry-Perot baseline map over (emitter detuning, r).
    Fp {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok((lo, hi))
}

struct Run {
    cfg: SimConfig,
    hash: String,
    out: PathBuf,
}

impl Run {
    fn comments(&self) -> Vec<String> {
        vec![format!("config_hash={}", self.hash)]
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let mut f = self.create(name)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    fn write_csv(&self, name: &str, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
        let mut f = self.create(name)?;
        for c in self.comments() {
            writeln!(f, "# {c}")?;
        }
        writeln!(f, "{header}")?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()?;
        Ok(())
    }

    fn write_map(&self, stem: &str, map: &SweepMap) -> Result<()> {
        let mut f = self.create(&format!("{stem}.csv"))?;
        map.write_csv(&mut f, &self.comments())?;
        f.flush()?;
        let mut t = self.create(&format!("{stem}_trace.csv"))?;
        map.write_trace_csv(&mut t, &self.comments())?;
        t.flush()?;
        Ok(())
    }
}

/// Load the configuration, apply command-line overrides and prepare the output directory.
fn start(common: &Common, edit: impl FnOnce(&mut SimConfig)) -> Result<Run> {
    let mut cfg = SimConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.fit.seed = seed;
    }
    edit(&mut cfg);
    cfg.validate()?;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        par::set_threads(n).map_err(Error::Config)?;
    }
    std::fs::create_dir_all(&common.out)?;
    let hash = cfg.hash();
    let run = Run { cfg, hash, out: common.out.clone() };
    run.write_text("effective_config.json", &run.cfg.to_json()?)?;
    Ok(run)
}

fn correlations(cfg: &SimConfig) -> Result<PhononCorrelations> {
    PhononCorrelations::tabulate(&cfg.phonon_env()?, cfg.phonons.dtau, cfg.phonons.decay_tol)
}

fn ldos_grid(cfg: &SimConfig) -> Result<Vec<f64>> {
    let l = cfg.ldos.as_ref().ok_or_else(|| Error::Config("no ldos section and no --range/--points given".into()))?;
    Ok(linspace(l.range[0], l.range[1], l.points))
}

fn cmd_ldos(
    common: &Common,
    position: Option<f64>,
    range: Option<(f64, f64)>,
    points: Option<usize>,
    gamma_f_range: Option<(f64, f64)>,
    gamma_f_points: usize,
    bare_fp: Option<f64>,
) -> Result<()> {
    let run = start(common, |c| {
        if let Some(x) = position {
            c.geometry.x_tilde = x;
        }
        if range.is_some() || points.is_some() {
            let old = c.ldos.clone();
            let range = range.map(|(a, b)| [a, b]).or(old.as_ref().map(|l| l.range)).unwrap_or([0.0, 0.0]);
            let points = points.or(old.as_ref().map(|l| l.points)).unwrap_or(0);
            c.ldos = Some(LdosConfig { range, points });
        }
    })?;
    let cfg = &run.cfg;
    let geometry = cfg.geometry()?;
    let gamma_0 = cfg.emitter.gamma_0;
    let x = cfg.geometry.x_tilde;
    let omega = ldos_grid(cfg)?;

    if let Some((lo, hi)) = gamma_f_range {
        if bare_fp.is_some() {
            return Err(Error::Config("--gammaF-range and --bare-fp are exclusive".into()));
        }
        if gamma_f_points == 0 || !(hi >= lo) {
            return Err(Error::Config("--gammaF-range needs lo <= hi and --gammaF-points > 0".into()));
        }
        let base = cfg.mirror()?;
        let gammas = if gamma_f_points == 1 { vec![lo] } else { linspace(lo, hi, gamma_f_points) };
        let curves: Result<Vec<SpectralCurve>> = par::map(&gammas, |&g| {
            let m = FanoMirror::symmetric(base.r_b, g, base.gamma_0, base.omega_f, base.parity)?;
            Cavity::new(m.response()?, geometry, gamma_0).ldos_curve(x, &omega)
        })
        .into_iter()
        .collect();
        let curves = curves?;
        let rows = gammas
            .iter()
            .zip(&curves)
            .flat_map(|(&g, c)| c.omega.iter().zip(&c.values).map(move |(&w, &j)| vec![w, g, j / gamma_0]));
        return run.write_csv("ldos_map.csv", "omega_meV,gammaF_meV,J_over_Gamma0", rows);
    }

    let curve = match bare_fp {
        Some(r) => Cavity::new(ConstantMirror::new(r)?, geometry, gamma_0).ldos_curve(x, &omega)?,
        None => Cavity::new(cfg.mirror()?.response()?, geometry, gamma_0).ldos_curve(x, &omega)?,
    };
    let mut f = run.create("ldos.csv")?;
    curve.write_csv(&mut f, gamma_0, &run.comments())?;
    f.flush()?;
    Ok(())
}

fn cmd_fit(common: &Common) -> Result<()> {
    let run = start(common, |_| {})?;
    let cfg = &run.cfg;
    let settings = cfg.fit_settings();
    let gamma_0 = cfg.emitter.gamma_0;
    let (report, target): (FitReport, Box<dyn Fn(f64) -> Result<f64>>) = match cfg.target {
        Some(t) => {
            let truth = MappedPair::single_mode(t.g, t.omega, t.kappa);
            let r = fit_lorentzian(t.g, t.omega, t.kappa, settings.window, &settings)?;
            (r, Box::new(move |w| Ok(mapped_spectral_density(&truth, w))))
        }
        None => {
            let cavity = Cavity::new(cfg.mirror()?.response()?, cfg.geometry()?, gamma_0);
            let r = fit(&cavity, &settings)?;
            let x = cfg.geometry.x_tilde;
            (r, Box::new(move |w| cavity.ldos(x, w)))
        }
    };
    run.write_text("fit.json", &report.to_json(Some(&run.hash))?)?;
    let n = cfg.ldos.as_ref().map_or(4001, |l| l.points.max(2));
    let omega = linspace(report.window.lo, report.window.hi, n);
    let rows: Result<Vec<Vec<f64>>> = omega
        .iter()
        .map(|&w| Ok(vec![w, target(w)? / gamma_0, mapped_spectral_density(&report.pair, w) / gamma_0]))
        .collect();
    run.write_csv("fit_overlay.csv", "omega_meV,J_over_Gamma0,Jfit_over_Gamma0", rows?.into_iter())?;
    println!("epsilon_rel = {:.6e}", report.epsilon_rel);
    Ok(())
}

type Filter = Box<dyn Fn(f64) -> Result<C64> + Sync>;
type Density = Box<dyn Fn(f64) -> Result<f64> + Sync>;

fn unit_area(values: &[f64], h: f64) -> Vec<f64> {
    let area = trapezoid(values, h);
    values.iter().map(|v| if area > 0.0 { v / area } else { 0.0 }).collect()
}

fn cmd_spectrum(common: &Common, bare_fp: Option<f64>) -> Result<()> {
    let run = start(common, |_| {})?;
    let cfg = &run.cfg;
    let settings = cfg.pipeline_settings();
    let geometry = cfg.geometry()?;
    let corr = correlations(cfg)?;
    let mut emitter = cfg.emitter;
    let gamma_0 = emitter.gamma_0;
    let x = cfg.geometry.x_tilde;

    let (pair, filter, density, marks, peak, dip): (MappedPair, Filter, Density, Vec<f64>, f64, Option<f64>) = match bare_fp {
        Some(r) => {
            let near = cfg.fp.as_ref().map_or(emitter.omega_eg, |f| f.near);
            let (pair, z) = fp_single_mode(r, geometry, gamma_0, near, &settings.fit)?;
            let cavity = Cavity::new(ConstantMirror::new(r)?, geometry, gamma_0);
            (pair, Box::new(move |w| fp_green_function(r, &geometry, w)), Box::new(move |w| cavity.ldos(x, w)), vec![z.re], z.re, None)
        }
        None => {
            let setup = fano_setup(&cfg.mirror()?, geometry, gamma_0, &settings.fit)?;
            let marks = setup.landmarks();
            let (peak, dip, pair) = (setup.peak, setup.dip, setup.fit.pair);
            let cavity = setup.cavity;
            let response = cavity.mirror;
            let filter: Filter = Box::new(move |w| green_function(&response, &geometry, w));
            (pair, filter, Box::new(move |w| cavity.ldos(x, w)), marks, peak, dip)
        }
    };
    if let Some(offset) = cfg.spectrum.peak_offset {
        emitter.omega_eg = peak + offset;
    }

    let result = point_with_pair(&pair, &emitter, &corr, |w| filter(w), &marks, &settings)?;
    let (_, model, _) = prepare(&pair, &emitter, &corr, &marks, &settings)?;
    let hw = cfg.spectrum.half_width;
    let omega = linspace(emitter.omega_eg - hw, emitter.omega_eg + hw, cfg.spectrum.points);
    let h = omega[1] - omega[0];
    let s = one_colour_spectrum(&model, |w| filter(w), &omega)?;
    let bulk = bulk_spectrum(&emitter, &corr, &omega)?;
    let j: Result<Vec<f64>> = omega.iter().map(|&w| density(w)).collect();
    let (s_norm, bulk_norm) = (unit_area(&s, h), unit_area(&bulk, h));
    let j = j?;
    let peaks: Vec<f64> = resolved_peaks(&s, 0.05).into_iter().map(|i| omega[i]).collect();

    let summary = serde_json::json!({
        "config_hash": run.hash,
        "omega_eg": emitter.omega_eg,
        "I": result.indistinguishability,
        "delta": result.delta,
        "P_emit": result.p_emit,
        "ldos_peak": peak,
        "anti_resonance": dip,
        "spectrum_peaks": peaks,
        "diagnostics": result.diagnostics,
    });
    run.write_text("spectrum.json", &serde_json::to_string_pretty(&summary)?)?;
    let rows = (0..omega.len()).map(|i| vec![omega[i], s_norm[i], j[i] / gamma_0, bulk_norm[i]]);
    run.write_csv("spectrum.csv", "omega_meV,S_norm,J_over_Gamma0,bulk_norm", rows)?;
    println!("I = {:.6}  delta = {:.6}  P_emit = {:.6e}", result.indistinguishability, result.delta, result.p_emit);
    Ok(())
}

fn report_map(map: &SweepMap) {
    if let Some(b) = map.best() {
        let r = b.result.as_ref().map_or(f64::NAN, |r| r.delta);
        println!("min delta = {r:.6} at {} = {:.6}, omega_eg = {:.6} meV", map.param_name, b.param, b.omega_eg);
    }
    if map.failures() > 0 {
        eprintln!("{} of {} points failed", map.failures(), map.points.len());
    }
}

fn cmd_sweep(common: &Common) -> Result<()> {
    let run = start(common, |_| {})?;
    let cfg = &run.cfg;
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Config("configuration has no sweep section".into()))?;
    let corr = correlations(cfg)?;
    let map = sweep_fano(&cfg.mirror()?, cfg.geometry()?, &cfg.emitter, &corr, &sweep.gamma_f, &sweep.offset, &cfg.pipeline_settings())?;
    run.write_map("sweep", &map)?;
    report_map(&map);
    Ok(())
}

fn cmd_fp(common: &Common) -> Result<()> {
    let run = start(common, |_| {})?;
    let cfg = &run.cfg;
    let fp = cfg.fp.as_ref().ok_or_else(|| Error::Config("configuration has no fp section".into()))?;
    let corr = correlations(cfg)?;
    let map = sweep_fp(cfg.geometry()?, &cfg.emitter, &corr, fp.near, &fp.r, &fp.offset, &cfg.pipeline_settings())?;
    run.write_map("fp", &map)?;
    report_map(&map);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ldos { common, position, range, points, gamma_f_range, gamma_f_points, bare_fp } => {
            cmd_ldos(&common, position, range, points, gamma_f_range, gamma_f_points, bare_fp)
        }
        Command::Fit { common } => cmd_fit(&common),
        Command::Spectrum { common, bare_fp } => cmd_spectrum(&common, bare_fp),
        Command::Sweep { common } => cmd_sweep(&common),
        Command::Fp { common } => cmd_fp(&common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fanocav: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! End-to-end pipelines (Fano mirror and Fabry-Perot baseline) and parameter sweeps.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::resolvent::{indistinguishability_resolvent, EmissionModel, SpectrumSettings};
use super::IndistResult;
use crate::dynamics::{trajectory_sanity, Liouvillian, Op, SystemBasis};
use crate::error::{Error, Result};
use crate::ldos::{refine_extremum, Cavity, EmitterCoupling};
use crate::mapping::{default_contour_radius, fit, fp_pole, residue_contour, FitReport, FitSettings, MappedPair};
use crate::par;
use crate::phonons::PhononCorrelations;
use crate::quad::linspace;
use crate::scattering::{fp_green_function, green_function, CavityGeometry, ConstantMirror, FanoMirror, FanoResponse, Mirror};

#[derive(Clone, Debug)]
pub struct PipelineSettings {
    pub fit: FitSettings,
    pub spectrum: SpectrumSettings,
    /// Number of sampled times in the density-matrix sanity check; 0 disables it.
    pub sanity_samples: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self { fit: FitSettings::default(), spectrum: SpectrumSettings::default(), sanity_samples: 12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::Config("sweep axis needs at least one point".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::Config(format!("invalid sweep range [{}, {}]", self.min, self.max)));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        Ok(linspace(self.min, self.max, self.points))
    }
}

/// LDOS maximum near `pole`, searched within ten half widths.
pub fn ldos_peak<M: Mirror>(cavity: &Cavity<M>, pole: C64) -> f64 {
    let half = (10.0 * pole.im.abs()).max(0.05).min(0.5 * std::f64::consts::PI * cavity.geometry.fsr);
    let x = cavity.geometry.x_tilde;
    refine_extremum(|w| cavity.ldos(x, w).unwrap_or(f64::NEG_INFINITY), pole.re - half, pole.re + half, 4001, true)
}

/// LDOS minimum strictly between the two poles, if any.
pub fn anti_resonance<M: Mirror>(cavity: &Cavity<M>, poles: [C64; 2]) -> Option<f64> {
    let (lo, hi) = (poles[0].re.min(poles[1].re), poles[0].re.max(poles[1].re));
    if !(hi > lo) {
        return None;
    }
    let x = cavity.geometry.x_tilde;
    let w = refine_extremum(|w| cavity.ldos(x, w).unwrap_or(f64::INFINITY), lo, hi, 4001, false);
    let edge = 1e-6 * (hi - lo);
    (w > lo + edge && w < hi - edge).then_some(w)
}

/// A Fano cavity together with its fitted network and landmark frequencies.
#[derive(Clone, Debug)]
pub struct FanoSetup {
    pub cavity: Cavity<FanoResponse>,
    pub fit: FitReport,
    /// Pole with the smaller linewidth.
    pub narrow: C64,
    pub peak: f64,
    pub dip: Option<f64>,
}

pub fn fano_setup(mirror: &FanoMirror, geometry: CavityGeometry, gamma_0: f64, settings: &FitSettings) -> Result<FanoSetup> {
    let cavity = Cavity::new(mirror.response()?, geometry, gamma_0);
    let report = fit(&cavity, settings)?;
    let [a, b] = [report.target[0].z, report.target[1].z];
    let narrow = if a.im.abs() <= b.im.abs() { a } else { b };
    let peak = ldos_peak(&cavity, narrow);
    let dip = anti_resonance(&cavity, [a, b]);
    Ok(FanoSetup { cavity, fit: report, narrow, peak, dip })
}

fn excited_state() -> Op {
    SystemBasis::excited()
}

/// Generator, resolvent model and quadrature settings for one emitter.
pub fn prepare(pair: &MappedPair, emitter: &EmitterCoupling, corr: &PhononCorrelations, breakpoints: &[f64], settings: &PipelineSettings) -> Result<(Liouvillian, EmissionModel, SpectrumSettings)> {
    let l = Liouvillian::assemble(pair, emitter, corr, emitter.omega_eg)?;
    let mut spec = settings.spectrum.clone();
    spec.breakpoints.extend_from_slice(breakpoints);
    spec.breakpoints.push(emitter.omega_eg);
    let model = EmissionModel::new(&l, corr, &spec)?;
    Ok((l, model, spec))
}

/// `I` for a given network and filter, with the master-equation sanity check.
pub fn point_with_pair<F>(pair: &MappedPair, emitter: &EmitterCoupling, corr: &PhononCorrelations, filter: F, breakpoints: &[f64], settings: &PipelineSettings) -> Result<IndistResult>
where
    F: Fn(f64) -> Result<C64>,
{
    let (l, model, spec) = prepare(pair, emitter, corr, breakpoints, settings)?;
    let mut r = indistinguishability_resolvent(&model, filter, emitter.gamma_0, &spec)?;
    if settings.sanity_samples > 0 {
        let slow = model.lambda.iter().map(|v| -v.re).fold(f64::INFINITY, f64::min);
        let t_max = 1e6_f64.ln() / slow;
        let s = trajectory_sanity(&l, &excited_state(), t_max, settings.sanity_samples)?;
        if !s.ok() {
            r.diagnostics.warnings.push("density matrix sanity check failed".into());
        }
        r.diagnostics.sanity = Some(s.into());
    }
    Ok(r)
}

impl FanoSetup {
    pub fn landmarks(&self) -> Vec<f64> {
        let mut marks = vec![self.fit.target[0].z.re, self.fit.target[1].z.re, self.peak];
        marks.extend(self.dip);
        marks
    }

    pub fn filter(&self, w: f64) -> Result<C64> {
        green_function(&self.cavity.mirror, &self.cavity.geometry, w)
    }

    pub fn point(&self, emitter: &EmitterCoupling, corr: &PhononCorrelations, settings: &PipelineSettings) -> Result<IndistResult> {
        point_with_pair(&self.fit.pair, emitter, corr, |w| self.filter(w), &self.landmarks(), settings)
    }
}

/// Single-mode network for a Fabry-Perot cavity, from its pole nearest `near`.
pub fn fp_single_mode(r: f64, geometry: CavityGeometry, gamma_0: f64, near: f64, settings: &FitSettings) -> Result<(MappedPair, C64)> {
    let cavity = Cavity::new(ConstantMirror::new(r)?, geometry, gamma_0);
    let z = fp_pole(&cavity, near, &settings.poles)?;
    let radius = default_contour_radius(z, None, geometry.fsr);
    let res = residue_contour(|s| cavity.ldos_analytic(s), z, radius, settings.contour_points)?;
    if !(res.im > 0.0) {
        return Err(Error::Domain(format!("Fabry-Perot residue {res} has no positive weight")));
    }
    Ok((MappedPair::single_mode(res.im.sqrt(), z.re, -2.0 * z.im), z))
}

pub fn fp_baseline(r: f64, geometry: CavityGeometry, emitter: &EmitterCoupling, corr: &PhononCorrelations, near: f64, settings: &PipelineSettings) -> Result<IndistResult> {
    let (pair, z) = fp_single_mode(r, geometry, emitter.gamma_0, near, &settings.fit)?;
    point_with_pair(&pair, emitter, corr, |w| fp_green_function(r, &geometry, w), &[z.re], settings)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Swept cavity parameter: `γ_F` (meV) or the Fabry-Perot reflectivity.
    pub param: f64,
    pub omega_eg: f64,
    /// Emitter detuning from the LDOS peak, meV.
    pub offset: f64,
    pub result: Option<IndistResult>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub param: f64,
    pub peak: f64,
    pub dip: Option<f64>,
    pub fit_relative_l2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMap {
    pub param_name: String,
    pub points: Vec<SweepPoint>,
    pub trace: Vec<TracePoint>,
}

fn status_of(e: &Error) -> String {
    format!("error: {e}").replace([',', '\n', '\r'], ";")
}

impl SweepMap {
    /// Point with the smallest `δ` among successful points.
    pub fn best(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .filter(|p| p.result.is_some())
            .min_by(|a, b| a.result.as_ref().unwrap().delta.total_cmp(&b.result.as_ref().unwrap().delta))
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_none()).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "omega_eg_meV,{},I,delta,P_emit,status", self.param_name)?;
        for p in &self.points {
            match &p.result {
                Some(r) => writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                    p.omega_eg, p.param, r.indistinguishability, r.delta, r.p_emit, p.status
                )?,
                None => writeln!(w, "{:.12e},{:.12e},,,,{}", p.omega_eg, p.param, p.status)?,
            }
        }
        Ok(())
    }
}

impl SweepMap {
    /// Landmark trace: header `{param_name},peak_meV,dip_meV,fit_relative_l2`; absent values are empty.
    pub fn write_trace_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{},peak_meV,dip_meV,fit_relative_l2", self.param_name)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for t in &self.trace {
            writeln!(w, "{:.12e},{:.12e},{},{}", t.param, t.peak, opt(t.dip), opt(t.fit_relative_l2))?;
        }
        Ok(())
    }
}

fn run_points<S, F>(rows: &[(f64, Result<S>)], offsets: &[f64], centre: impl Fn(&S) -> f64 + Sync, eval: F) -> Vec<SweepPoint>
where
    S: Sync,
    F: Fn(&S, f64) -> Result<IndistResult> + Sync,
{
    let tasks: Vec<(usize, f64)> = (0..rows.len()).flat_map(|i| offsets.iter().map(move |&o| (i, o))).collect();
    par::map(&tasks, |&(i, offset)| {
        let (param, row) = &rows[i];
        match row {
            Ok(s) => {
                let w = centre(s) + offset;
                match eval(s, w) {
                    Ok(r) => SweepPoint { param: *param, omega_eg: w, offset, result: Some(r), status: "ok".into() },
                    Err(e) => SweepPoint { param: *param, omega_eg: w, offset, result: None, status: status_of(&e) },
                }
            }
            Err(e) => SweepPoint { param: *param, omega_eg: f64::NAN, offset, result: None, status: status_of(e) },
        }
    })
}

/// Sweep `γ_F` and the emitter detuning from the LDOS peak. Per-point failures
/// are recorded in the map.
pub fn sweep_fano(
    base: &FanoMirror,
    geometry: CavityGeometry,
    emitter: &EmitterCoupling,
    corr: &PhononCorrelations,
    gamma_f: &AxisSpec,
    offsets: &AxisSpec,
    settings: &PipelineSettings,
) -> Result<SweepMap> {
    let gammas = gamma_f.values()?;
    let offsets = offsets.values()?;
    let setups: Vec<(f64, Result<FanoSetup>)> = par::map(&gammas, |&g| {
        let s = FanoMirror::symmetric(base.r_b, g, base.gamma_0, base.omega_f, base.parity)
            .and_then(|m| fano_setup(&m, geometry, emitter.gamma_0, &settings.fit));
        (g, s)
    });
    let trace = setups
        .iter()
        .filter_map(|(g, s)| {
            s.as_ref()
                .ok()
                .map(|s| TracePoint { param: *g, peak: s.peak, dip: s.dip, fit_relative_l2: Some(s.fit.relative_l2()) })
        })
        .collect();
    let points = run_points(&setups, &offsets, |s: &FanoSetup| s.peak, |s, w| {
        let em = EmitterCoupling { omega_eg: w, ..*emitter };
        s.point(&em, corr, settings)
    });
    Ok(SweepMap { param_name: "gammaF_meV".into(), points, trace })
}

/// Sweep the Fabry-Perot reflectivity and the emitter detuning from the cavity
/// resonance nearest `near`.
pub fn sweep_fp(
    geometry: CavityGeometry,
    emitter: &EmitterCoupling,
    corr: &PhononCorrelations,
    near: f64,
    reflectivity: &AxisSpec,
    offsets: &AxisSpec,
    settings: &PipelineSettings,
) -> Result<SweepMap> {
    let rs = reflectivity.values()?;
    let offsets = offsets.values()?;
    let rows: Vec<(f64, Result<(MappedPair, C64)>)> =
        rs.iter().map(|&r| (r, fp_single_mode(r, geometry, emitter.gamma_0, near, &settings.fit))).collect();
    let trace = rows
        .iter()
        .filter_map(|(r, s)| s.as_ref().ok().map(|(_, z)| TracePoint { param: *r, peak: z.re, dip: None, fit_relative_l2: None }))
        .collect();
    let rows_ref: Vec<(f64, Result<(f64, MappedPair, C64)>)> =
        rows.into_iter().map(|(r, s)| (r, s.map(|(p, z)| (r, p, z)))).collect();
    let points = run_points(&rows_ref, &offsets, |s: &(f64, MappedPair, C64)| s.2.re, |(r, pair, z), w| {
        let em = EmitterCoupling { omega_eg: w, ..*emitter };
        point_with_pair(pair, &em, corr, |x| fp_green_function(*r, &geometry, x), &[z.re], settings)
    });
    Ok(SweepMap { param_name: "r".into(), points, trace })
}

//! Two-colour emission spectra and indistinguishability.
//!
//! The spectrum is `S0(ω, ω') = ∫∫ e^{-i(ωt - ω't')} C(t, t') dt dt'` with
//! `C(t, t') = <σ†(t) σ(t')>`, and the filtered spectrum is
//! `S(ω, ω') = G(ω)* G(ω') S0(ω, ω')`. The indistinguishability is
//! `I = ∫∫ |S|^2 / (∫ S(ω, ω) dω)^2`.
//!
//! Two routes are provided: a grid route (2D FFT of the tabulated correlation)
//! and a resolvent route that evaluates `S0` at arbitrary frequency pairs for
//! adaptive quadrature.

mod resolvent;
mod sweep;

pub use resolvent::{indistinguishability_resolvent, EmissionModel, SpectrumSettings};
pub use sweep::{
    anti_resonance, fano_setup, fp_baseline, fp_single_mode, ldos_peak, point_with_pair, prepare, sweep_fano, sweep_fp,
    AxisSpec, FanoSetup, PipelineSettings, SweepMap, SweepPoint, TracePoint,
};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Liouvillian, Sanity, TwoTimeGrid};
use crate::error::{Error, Result};
use crate::ldos::EmitterCoupling;
use crate::mapping::MappedPair;
use crate::phonons::PhononCorrelations;

/// Spectrum on a square grid of lab-frame frequencies, row-major in `(ω, ω')`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum2D {
    pub omega: Vec<f64>,
    pub d_omega: f64,
    pub values: Vec<C64>,
}

impl Spectrum2D {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.omega.len() + j]
    }

    /// Diagonal `S(ω, ω)`, real up to round-off.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.at(i, i).re).collect()
    }

    pub fn max_hermiticity_dev(&self) -> f64 {
        let n = self.n();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                d = d.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        d
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub route: String,
    pub evaluations: usize,
    /// Estimated absolute error of `I`.
    pub error: f64,
    pub tail_ratio: Option<f64>,
    pub grid_points: Option<usize>,
    pub sanity: Option<SanityRecord>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SanityRecord {
    pub max_trace_dev: f64,
    pub max_hermiticity_dev: f64,
    pub min_eigenvalue: f64,
}

impl From<Sanity> for SanityRecord {
    fn from(s: Sanity) -> Self {
        Self { max_trace_dev: s.max_trace_dev, max_hermiticity_dev: s.max_hermiticity_dev, min_eigenvalue: s.min_eigenvalue }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistResult {
    pub indistinguishability: f64,
    /// `1 - I`.
    pub delta: f64,
    /// Emitted energy `(Γ0/2) ∫ S(ω, ω) dω`.
    pub p_emit: f64,
    pub diagnostics: Diagnostics,
}

impl IndistResult {
    pub fn new(i: f64, p_emit: f64, mut diagnostics: Diagnostics) -> Self {
        if !(-1e-6..=1.0 + 1e-6).contains(&i) {
            diagnostics.warnings.push(format!("indistinguishability {i} outside [0, 1]"));
        }
        Self { indistinguishability: i, delta: 1.0 - i, p_emit, diagnostics }
    }
}

fn shifted_index(k: usize, n: usize) -> i64 {
    let half = n.div_ceil(2);
    if k < half {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// 2D Fourier transform of the two-time correlation, with trapezoid weights on
/// the `t = 0` and `t' = 0` edges. The frequency axis is `frame + 2π k/(n dt)`,
/// sorted ascending.
pub fn dipole_spectrum(c: &TwoTimeGrid) -> Result<Spectrum2D> {
    let n = c.n;
    if n < 2 || c.values.len() != n * n {
        return Err(Error::Domain("two-time grid must be square with n >= 2".into()));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // transform over t (rows) for each fixed t', then over t' with the opposite sign
    let mut cols = vec![C64::new(0.0, 0.0); n * n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let wj = if j == 0 { 0.5 } else { 1.0 };
        for i in 0..n {
            let wi = if i == 0 { 0.5 } else { 1.0 };
            buf[i] = c.values[i * n + j] * (wi * wj);
        }
        fwd.process(&mut buf);
        for k in 0..n {
            cols[k * n + j] = buf[k];
        }
    }
    for k in 0..n {
        inv.process(&mut cols[k * n..(k + 1) * n]);
    }
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * c.dt);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| shifted_index(k, n));
    let omega: Vec<f64> = order.iter().map(|&k| c.frame + dw * shifted_index(k, n) as f64).collect();
    let scale = c.dt * c.dt;
    let mut values = Vec::with_capacity(n * n);
    for &a in &order {
        for &b in &order {
            values.push(cols[a * n + b] * scale);
        }
    }
    Ok(Spectrum2D { omega, d_omega: dw, values })
}

/// `S(ω, ω') = G(ω)* G(ω') S0(ω, ω')` with the filter evaluated on the lab-frame axis.
pub fn filter_spectrum<F: Fn(f64) -> Result<C64>>(s0: &Spectrum2D, filter: F) -> Result<Spectrum2D> {
    let g: Vec<C64> = s0.omega.iter().map(|&w| filter(w)).collect::<Result<_>>()?;
    let n = s0.n();
    let mut values = s0.values.clone();
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] *= g[i].conj() * g[j];
        }
    }
    Ok(Spectrum2D { omega: s0.omega.clone(), d_omega: s0.d_omega, values })
}

/// `(Γ0/2) ∫ S̄(ω) dω` on a uniform axis.
pub fn emitted_energy(sbar: &[f64], d_omega: f64, gamma_0: f64) -> f64 {
    0.5 * gamma_0 * sbar.iter().sum::<f64>() * d_omega
}

/// `I = (2P/Γ0)^-2 ∫∫ |S|^2`, by the rectangle rule on the periodic FFT grid.
pub fn indistinguishability(s: &Spectrum2D, p_emit: f64, gamma_0: f64) -> Result<f64> {
    let norm = 2.0 * p_emit / gamma_0;
    if !(norm > 0.0) {
        return Err(Error::Domain("emitted energy must be positive".into()));
    }
    let num: f64 = s.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * s.d_omega * s.d_omega;
    Ok(num / (norm * norm))
}

/// Grid route end to end: spectrum, filter, energy and `I`.
pub fn indistinguishability_grid<F: Fn(f64) -> Result<C64>>(c: &TwoTimeGrid, filter: F, gamma_0: f64) -> Result<IndistResult> {
    let s0 = dipole_spectrum(c)?;
    let s = filter_spectrum(&s0, filter)?;
    let p = emitted_energy(&s.diagonal(), s.d_omega, gamma_0);
    let i = indistinguishability(&s, p, gamma_0)?;
    let mut diagnostics = Diagnostics {
        route: "grid".into(),
        evaluations: s.values.len(),
        tail_ratio: Some(c.tail_ratio),
        grid_points: Some(c.n),
        ..Default::default()
    };
    if !c.is_decayed() {
        diagnostics.warnings.push(format!("correlation not decayed at grid end (tail ratio {:.2e})", c.tail_ratio));
    }
    Ok(IndistResult::new(i, p, diagnostics))
}

/// One-colour spectrum `|G(ω)|^2 S0(ω, ω)` at lab-frame frequencies.
pub fn one_colour_spectrum<F: Fn(f64) -> Result<C64>>(model: &EmissionModel, filter: F, omega: &[f64]) -> Result<Vec<f64>> {
    omega.iter().map(|&w| Ok(filter(w)?.norm_sqr() * model.s0_diagonal(w - model.frame)?)).collect()
}

/// Emission spectrum of the same emitter without a cavity: total decay rate
/// `Γ0 + Γ_R`, unfiltered.
pub fn bulk_spectrum(emitter: &EmitterCoupling, corr: &PhononCorrelations, omega: &[f64]) -> Result<Vec<f64>> {
    let bare = EmitterCoupling { gamma_r: emitter.gamma_0 + emitter.gamma_r, ..*emitter };
    let pair = MappedPair::single_mode(0.0, emitter.omega_eg, 0.0);
    let l = Liouvillian::assemble(&pair, &bare, corr, emitter.omega_eg)?;
    let model = EmissionModel::new(&l, corr, &SpectrumSettings::default())?;
    one_colour_spectrum(&model, |_| Ok(C64::new(1.0, 0.0)), omega)
}

/// Indices of local maxima whose prominence exceeds `min_prominence` times the global maximum.
pub fn resolved_peaks(values: &[f64], min_prominence: f64) -> Vec<usize> {
    let top = values.iter().copied().fold(0.0, f64::max);
    let n = values.len();
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(values[i] > values[i - 1] && values[i] >= values[i + 1]) {
            continue;
        }
        // prominence: drop to the lower of the two bounding minima before a higher point
        let mut left = values[i];
        for j in (0..i).rev() {
            if values[j] > values[i] {
                break;
            }
            left = left.min(values[j]);
        }
        let mut right = values[i];
        for &v in &values[i + 1..] {
            if v > values[i] {
                break;
            }
            right = right.min(v);
        }
        if values[i] - left.max(right) > min_prominence * top {
            peaks.push(i);
        }
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz_grid(gamma: f64, w0: f64, dt: f64, n: usize) -> TwoTimeGrid {
        // C(t, t') = exp(i w0 (t - t') - γ (t + t')/2): a single spontaneously emitted photon
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let (t, tp) = (i as f64 * dt, j as f64 * dt);
                values[i * n + j] = C64::from_polar((-0.5 * gamma * (t + tp)).exp(), w0 * (t - tp));
            }
        }
        TwoTimeGrid { dt, n, values, frame: 100.0, tail_ratio: 0.0 }
    }

    #[test]
    fn peak_finder() {
        let x: Vec<f64> = (0..400).map(|i| i as f64 * 0.01).collect();
        let two: Vec<f64> = x.iter().map(|&w| 1.0 / (1.0 + ((w - 1.0) / 0.1).powi(2)) + 0.6 / (1.0 + ((w - 3.0) / 0.1).powi(2))).collect();
        assert_eq!(resolved_peaks(&two, 0.1).len(), 2);
        let one: Vec<f64> = x.iter().map(|&w| 1.0 / (1.0 + ((w - 2.0) / 0.5).powi(2))).collect();
        assert_eq!(resolved_peaks(&one, 0.1), vec![200]);
    }

    #[test]
    fn pure_state_is_indistinguishable() {
        let c = lorentz_grid(1.0, 0.5, 0.05, 400);
        let s0 = dipole_spectrum(&c).unwrap();
        let p = emitted_energy(&s0.diagonal(), s0.d_omega, 2.0);
        let i = indistinguishability(&s0, p, 2.0).unwrap();
        assert!((i - 1.0).abs() < 1e-10, "{i}");
        assert!(s0.max_hermiticity_dev() < 1e-10);
    }

    #[test]
    fn spectrum_peaks_at_emission_frequency() {
        let c = lorentz_grid(0.5, 0.5, 0.05, 512);
        let s0 = dipole_spectrum(&c).unwrap();
        let d = s0.diagonal();
        let k = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert!((s0.omega[k] - 100.5).abs() <= s0.d_omega);
    }

    #[test]
    fn parseval_total_energy() {
        // ∫ S̄ dω = 2π ∫ C(t, t) dt
        let (g, dt, n) = (1.0, 0.05, 400);
        let c = lorentz_grid(g, 0.0, dt, n);
        let s0 = dipole_spectrum(&c).unwrap();
        let lhs: f64 = s0.diagonal().iter().sum::<f64>() * s0.d_omega;
        let w = |i: usize| if i == 0 { 0.25 } else { 1.0 };
        let rhs: f64 = 2.0 * std::f64::consts::PI * (0..n).map(|i| w(i) * c.at(i, i).re).sum::<f64>() * dt;
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }
}

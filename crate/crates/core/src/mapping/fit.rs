use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::poles::{default_contour_radius, locate_fano_poles, residue_contour, PoleSettings};
use super::simplex::{nelder_mead, SimplexSettings};
use super::{constrained_pair, mapped_spectral_density, ComplexPole, MappedPair};
use crate::error::{Error, Result};
use crate::ldos::Cavity;
use crate::par;
use crate::quad::{linspace, trapezoid};
use crate::scattering::Mirror;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, w: f64) -> bool {
        (self.lo..=self.hi).contains(&w)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FitSettings {
    /// Fit window; defaults to one free spectral range centred on the pole pair.
    pub window: Option<Window>,
    pub points_per_linewidth: f64,
    pub min_points: usize,
    pub max_points: usize,
    pub grid_kappa: usize,
    pub grid_delta: usize,
    pub contour_points: usize,
    /// Also try the exact minimiser of the (quadratic) objective.
    pub least_squares_polish: bool,
    pub simplex: SimplexSettings,
    pub poles: PoleSettings,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            window: None,
            points_per_linewidth: 40.0,
            min_points: 2001,
            max_points: 400_001,
            grid_kappa: 24,
            grid_delta: 49,
            contour_points: 256,
            least_squares_polish: true,
            simplex: SimplexSettings::default(),
            poles: PoleSettings::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub re: f64,
    pub im: f64,
    pub res_re: f64,
    pub res_im: f64,
}

impl From<ComplexPole> for PoleRecord {
    fn from(p: ComplexPole) -> Self {
        Self { re: p.z.re, im: p.z.im, res_re: p.residue.re, res_im: p.residue.im }
    }
}

impl From<PoleRecord> for ComplexPole {
    fn from(p: PoleRecord) -> Self {
        Self { z: C64::new(p.re, p.im), residue: C64::new(p.res_re, p.res_im) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub pair: MappedPair,
    /// ∫_W (J - J')^2 dω, meV^3.
    pub epsilon: f64,
    /// epsilon / ∫_W J^2 dω.
    pub epsilon_rel: f64,
    pub window: Window,
    pub grid_points: usize,
    /// Poles and residues of the target spectral density.
    pub target: [ComplexPole; 2],
    /// Poles of the fitted network.
    pub achieved: [C64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitReportJson {
    g: f64,
    omega1: f64,
    omega2: f64,
    #[serde(rename = "V0")]
    v0: f64,
    varphi: f64,
    kappa1: f64,
    kappa2: f64,
    epsilon: f64,
    epsilon_rel: f64,
    window: [f64; 2],
    grid_points: usize,
    poles: [PoleRecord; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

impl FitReport {
    /// Relative L2 misfit `sqrt(epsilon_rel)`.
    pub fn relative_l2(&self) -> f64 {
        self.epsilon_rel.sqrt()
    }

    pub fn to_json(&self, config_hash: Option<&str>) -> Result<String> {
        let j = FitReportJson {
            g: self.pair.g,
            omega1: self.pair.omega_1,
            omega2: self.pair.omega_2,
            v0: self.pair.v0,
            varphi: self.pair.varphi,
            kappa1: self.pair.kappa_1,
            kappa2: self.pair.kappa_2,
            epsilon: self.epsilon,
            epsilon_rel: self.epsilon_rel,
            window: [self.window.lo, self.window.hi],
            grid_points: self.grid_points,
            poles: [self.target[0].into(), self.target[1].into()],
            config_hash: config_hash.map(str::to_owned),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: FitReportJson = serde_json::from_str(s)?;
        let pair = MappedPair::new(j.g, j.omega1, j.omega2, j.v0, j.varphi, j.kappa1, j.kappa2)?;
        Ok(Self {
            pair,
            epsilon: j.epsilon,
            epsilon_rel: j.epsilon_rel,
            window: Window { lo: j.window[0], hi: j.window[1] },
            grid_points: j.grid_points,
            target: [j.poles[0].into(), j.poles[1].into()],
            achieved: pair.poles(),
        })
    }
}

/// `J'` for fixed poles and `g` is affine in `(Δm, κ2)`:
/// `J' = b(ω) + Δm c1(ω) + κ2 c2(ω)` (with `ω2 = Ω + Δm/2`), so the misfit is a
/// quadratic form whose moments are accumulated once.
struct Quadratic {
    sbb: f64,
    sb: [f64; 2],
    s: [[f64; 2]; 2],
}

impl Quadratic {
    fn eval(&self, x: [f64; 2]) -> f64 {
        let lin = self.sb[0] * x[0] + self.sb[1] * x[1];
        let quad = self.s[0][0] * x[0] * x[0] + 2.0 * self.s[0][1] * x[0] * x[1] + self.s[1][1] * x[1] * x[1];
        (self.sbb + 2.0 * lin + quad).max(0.0)
    }

    fn minimiser(&self) -> Option<[f64; 2]> {
        let det = self.s[0][0] * self.s[1][1] - self.s[0][1] * self.s[0][1];
        if !(det.abs() > 1e-300) {
            return None;
        }
        let x0 = (-self.sb[0] * self.s[1][1] + self.sb[1] * self.s[0][1]) / det;
        let x1 = (-self.sb[1] * self.s[0][0] + self.sb[0] * self.s[0][1]) / det;
        Some([x0, x1])
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Fit the two-mode network to samples of `target` over `window`, with the
/// poles and residues pinned to `poles`.
pub fn fit_target<F>(target: F, poles: [ComplexPole; 2], window: Window, settings: &FitSettings) -> Result<FitReport>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let [pa, pb] = poles;
    for p in [pa, pb] {
        if !window.contains(p.z.re) {
            return Err(Error::Infeasible(format!(
                "fit window [{}, {}] excludes the pole at Re z = {}",
                window.lo, window.hi, p.z.re
            )));
        }
    }
    let res_im = (pa.residue + pb.residue).im;
    if res_im < 0.0 {
        return Err(Error::Infeasible(format!("Im(R+ + R-) = {res_im:.3e} < 0, no real coupling g")));
    }
    let g2 = res_im;
    let omega_c = 0.5 * (pa.z.re + pb.z.re);
    let kappa_sum = -2.0 * (pa.z.im + pb.z.im);

    // a pole on the real axis (a decoupled lossless mode) carries no linewidth
    let narrow = 2.0 * [pa.z.im.abs(), pb.z.im.abs()].into_iter().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if !narrow.is_finite() {
        return Err(Error::Infeasible("both poles lie on the real axis".into()));
    }
    let span = window.hi - window.lo;
    let wanted = (span / narrow * settings.points_per_linewidth).ceil() as usize + 1;
    let n = wanted.clamp(settings.min_points, settings.max_points);
    let omega = linspace(window.lo, window.hi, n);
    let h = span / (n - 1) as f64;
    let samples: Result<Vec<f64>> = par::map(&omega, |&w| target(w)).into_iter().collect();
    let j = samples?;
    let weights = trapezoid_weights(n, h);

    // moments of the affine decomposition
    let mut q = Quadratic { sbb: 0.0, sb: [0.0; 2], s: [[0.0; 2]; 2] };
    for ((&w, &jw), &wt) in omega.iter().zip(&j).zip(&weights) {
        let z = C64::new(w, 0.0);
        let qd = 2.0 * (z - pa.z) * (z - pb.z);
        let a0 = 2.0 * g2 * (2.0 * I * z / qd).re;
        let a1 = 2.0 * g2 * (2.0 * I / qd).re;
        let a2 = 2.0 * g2 * (1.0 / qd).re;
        // J' = a0 - ω2 a1 - κ2 a2,  ω2 = Ω + Δm/2
        let b = jw - (a0 - omega_c * a1);
        let c = [0.5 * a1, a2];
        q.sbb += wt * b * b;
        for r in 0..2 {
            q.sb[r] += wt * b * c[r];
            for s in 0..2 {
                q.s[r][s] += wt * c[r] * c[s];
            }
        }
    }
    let objective = |x: [f64; 2]| -> f64 {
        match constrained_pair(pb.z, pa.z, pb.residue, pa.residue, x[0], x[1]) {
            Ok(_) => q.eval(x),
            Err(_) => f64::INFINITY,
        }
    };

    // coarse probe
    let m = 2.0 * (pa.z.re - pb.z.re).abs() + kappa_sum;
    let kappas: Vec<f64> = (0..settings.grid_kappa)
        .map(|k| kappa_sum * 10f64.powf(-4.0 * (1.0 - k as f64 / (settings.grid_kappa - 1).max(1) as f64)) * 0.999)
        .collect();
    let deltas = linspace(-m, m, settings.grid_delta);
    let mut cells: Vec<[f64; 2]> = deltas.iter().flat_map(|&d| kappas.iter().map(move |&k| [d, k])).collect();
    // decoupled-mode limits (κ1 κ2 V0 = 0) are isolated points of the feasible set
    let skew = ((pb.z - pa.z) * (pb.z - pa.z)).im / kappa_sum;
    cells.extend([[skew, 0.0], [-skew, kappa_sum]]);
    let values = par::map(&cells, |&x| objective(x));
    let (best_i, best_v) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap_or((0, f64::INFINITY));
    if !best_v.is_finite() {
        return Err(Error::Infeasible("no feasible (Delta_m, kappa_2) on the search grid".into()));
    }
    let start = cells[best_i];
    let step = [2.0 * m / settings.grid_delta as f64, 0.25 * start[1].max(1e-3 * kappa_sum)];
    let nm = nelder_mead(|x| objective([x[0], x[1]]), &start, &step, &settings.simplex);
    let mut best = ([nm.x[0], nm.x[1]], nm.f);
    if settings.least_squares_polish {
        if let Some(x) = q.minimiser() {
            let v = objective(x);
            if v <= best.1 {
                best = (x, v);
            }
        }
    }
    let x = best.0;
    let pair = constrained_pair(pb.z, pa.z, pb.residue, pa.residue, x[0], x[1])
        .map_err(|e| Error::Infeasible(e.to_string()))?;

    let resid: Vec<f64> = omega.iter().zip(&j).map(|(&w, &jw)| (jw - mapped_spectral_density(&pair, w)).powi(2)).collect();
    let epsilon = trapezoid(&resid, h);
    let norm = trapezoid(&j.iter().map(|v| v * v).collect::<Vec<_>>(), h);
    Ok(FitReport {
        pair,
        epsilon,
        epsilon_rel: epsilon / norm,
        window,
        grid_points: n,
        target: poles,
        achieved: pair.poles(),
    })
}

/// Locate the Fano pole pair of `cavity`, extract residues of its LDOS by
/// contour quadrature and fit the two-mode network.
pub fn fit<M: Mirror + Sync>(cavity: &Cavity<M>, settings: &FitSettings) -> Result<FitReport> {
    let [a, b] = locate_fano_poles(cavity, &settings.poles)?;
    let fsr = cavity.geometry.fsr;
    let j = |z: C64| cavity.ldos_analytic(z);
    let ra = residue_contour(j, a, default_contour_radius(a, Some(b), fsr), settings.contour_points)?;
    let rb = residue_contour(j, b, default_contour_radius(b, Some(a), fsr), settings.contour_points)?;
    let poles = [ComplexPole { z: a, residue: ra }, ComplexPole { z: b, residue: rb }];
    let centre = 0.5 * (a.re + b.re);
    let window = settings
        .window
        .unwrap_or(Window { lo: centre - 0.5 * PI * fsr, hi: centre + 0.5 * PI * fsr });
    let x = cavity.geometry.x_tilde;
    fit_target(|w| cavity.ldos(x, w), poles, window, settings)
}

/// Fit to a single Lorentzian `g^2 κ / ((ω - ω_c)^2 + κ^2/4)`. The second
/// network pole sits on the real axis with zero residue, halfway to the window edge.
pub fn fit_lorentzian(g: f64, omega_c: f64, kappa: f64, window: Option<Window>, settings: &FitSettings) -> Result<FitReport> {
    let truth = MappedPair::single_mode(g, omega_c, kappa);
    truth.validate()?;
    let window = window.unwrap_or(Window { lo: omega_c - 20.0 * kappa, hi: omega_c + 20.0 * kappa });
    let z = C64::new(omega_c, -0.5 * kappa);
    let partner = C64::new(0.5 * (omega_c + window.hi), 0.0);
    let poles = [ComplexPole { z, residue: C64::new(0.0, g * g) }, ComplexPole { z: partner, residue: C64::new(0.0, 0.0) }];
    fit_target(|w| Ok(mapped_spectral_density(&truth, w)), poles, window, settings)
}

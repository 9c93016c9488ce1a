use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ldos::{refine_extremum, Cavity};
use crate::scattering::{ConstantMirror, Mirror};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug)]
pub struct PoleSettings {
    pub max_iter: usize,
    /// Required modulus of the round-trip denominator at a root.
    pub tol: f64,
    /// Largest Newton step, meV.
    pub max_step: f64,
    /// Roots closer than this are treated as coincident, meV.
    pub min_separation: f64,
}

impl Default for PoleSettings {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-12, max_step: 2.0, min_separation: 1e-8 }
    }
}

/// Damped Newton iteration on `f`, which returns value and derivative.
pub fn newton_root<F: Fn(C64) -> (C64, C64)>(f: F, seed: C64, settings: &PoleSettings) -> Result<C64> {
    let mut z = seed;
    for _ in 0..settings.max_iter {
        let (v, dv) = f(z);
        if !(v.is_finite() && dv.is_finite()) || dv.norm() == 0.0 {
            break;
        }
        let mut step = v / dv;
        if step.norm() > settings.max_step {
            step *= settings.max_step / step.norm();
        }
        z -= step;
        if step.norm() <= 1e-14 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::Convergence { what: "Newton pole search", iterations: settings.max_iter })
}

fn polish<M: Mirror>(cavity: &Cavity<M>, seed: C64, settings: &PoleSettings) -> Result<C64> {
    let z = newton_root(|z| cavity.regular_denominator(z), seed, settings)?;
    let d = cavity.denominator(z);
    if !(d.norm() < settings.tol) {
        return Err(Error::Convergence { what: "Newton pole search (|D| above tolerance)", iterations: settings.max_iter });
    }
    Ok(z)
}

/// Two distinct roots of `D(z) = 1 - r0 r(z) exp(2iz/Δ)` from two seeds, sorted by real part.
pub fn find_poles<M: Mirror>(cavity: &Cavity<M>, seeds: [C64; 2], settings: &PoleSettings) -> Result<[C64; 2]> {
    let a = polish(cavity, seeds[0], settings)?;
    let b = polish(cavity, seeds[1], settings)?;
    let sep = (a - b).norm();
    if sep < settings.min_separation {
        return Err(Error::CoincidentPoles(sep));
    }
    Ok(if a.re <= b.re { [a, b] } else { [b, a] })
}

/// Seeds for the Fano pair: the LDOS peak shifted down by its half width, and
/// the bare nanocavity pole.
pub fn default_seeds<M: Mirror>(cavity: &Cavity<M>) -> Result<[C64; 2]> {
    let own = cavity
        .mirror
        .own_pole()
        .ok_or_else(|| Error::Domain("default seeds need a resonant mirror".into()))?;
    let half = 0.5 * PI * cavity.geometry.fsr;
    let x = cavity.geometry.x_tilde;
    let j = |w: f64| cavity.ldos(x, w).unwrap_or(0.0);
    let (lo, hi) = (own.re - half, own.re + half);
    let peak = refine_extremum(j, lo, hi, 8001, true);
    let jmax = j(peak);
    // half maximum on the blue side by bisection
    let mut a = peak;
    let mut b = (peak + 1.0).min(hi);
    let hw = if j(b) < 0.5 * jmax {
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if j(m) > 0.5 * jmax {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b) - peak
    } else {
        0.5
    };
    Ok([C64::new(peak, -hw), own])
}

/// Pair of poles bracketing the Fano resonance. Falls back to a seed scan when
/// the default seeds do not produce two distinct roots.
pub fn locate_fano_poles<M: Mirror>(cavity: &Cavity<M>, settings: &PoleSettings) -> Result<[C64; 2]> {
    if let Ok(seeds) = default_seeds(cavity) {
        if let Ok(p) = find_poles(cavity, seeds, settings) {
            return Ok(p);
        }
    }
    let own = cavity
        .mirror
        .own_pole()
        .ok_or_else(|| Error::Domain("Fano pole search needs a resonant mirror".into()))?;
    let half = 0.5 * PI * cavity.geometry.fsr;
    let gt = -own.im;
    let mut roots: Vec<C64> = Vec::new();
    for k in -4..=4 {
        for s in [0.005, 0.25, 0.5, 1.0, 2.0] {
            let seed = C64::new(own.re + 0.25 * half * k as f64, -s * gt);
            if let Ok(z) = polish(cavity, seed, settings) {
                if roots.iter().all(|r| (r - z).norm() > settings.min_separation.max(1e-6)) {
                    roots.push(z);
                }
            }
        }
    }
    roots.sort_by(|a, b| (a.re - own.re).abs().total_cmp(&(b.re - own.re).abs()));
    if roots.len() < 2 {
        return Err(Error::Convergence { what: "Fano pole seed scan", iterations: roots.len() });
    }
    let (a, b) = (roots[0], roots[1]);
    Ok(if a.re <= b.re { [a, b] } else { [b, a] })
}

/// Round-trip pole of a Fabry-Perot cavity nearest to `near` in real part.
pub fn fp_pole(cavity: &Cavity<ConstantMirror>, near: f64, settings: &PoleSettings) -> Result<C64> {
    let prod = cavity.geometry.r0 * cavity.mirror.r;
    if prod.norm() == 0.0 {
        return Err(Error::Domain("no cavity resonance for r = 0".into()));
    }
    let fsr = cavity.geometry.fsr;
    let base = 0.5 * I * fsr * prod.ln();
    let k = ((near - base.re) / (PI * fsr)).round();
    let seed = base + PI * fsr * k;
    polish(cavity, seed, settings)
}

/// Default contour radius: a quarter of the distance to the nearest other
/// singularity, counting the partner pole, the mirror-image pole in the upper
/// half plane and the neighbouring free-spectral-range pole.
pub fn default_contour_radius(z: C64, partner: Option<C64>, fsr: f64) -> f64 {
    let mut d = (2.0 * z.im.abs()).min(PI * fsr);
    if let Some(p) = partner {
        d = d.min((z - p).norm());
    }
    0.25 * d
}

/// Residue at `z` by the trapezoidal rule on a circle of radius `z0`.
pub fn residue_contour<F: Fn(C64) -> C64>(f: F, z: C64, z0: f64, n: usize) -> Result<C64> {
    if n < 64 {
        return Err(Error::Domain(format!("contour needs at least 64 points, got {n}")));
    }
    if !(z0 > 0.0) {
        return Err(Error::Domain("contour radius must be positive".into()));
    }
    let ring = |radius: f64| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..n {
            let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            s += f(z + radius * e) * e;
        }
        s * (radius / n as f64)
    };
    let r = ring(z0);
    let r_half = ring(0.5 * z0);
    let diff = (r - r_half).norm() / r.norm().max(f64::MIN_POSITIVE);
    if diff > 1e-6 {
        return Err(Error::Enclosure(diff));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{CavityGeometry, FanoMirror, Parity};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn lorentzian_residue() {
        let (g, w1, k) = (0.2, 3.0, 0.4);
        let f = |z: C64| g * g * k / ((z - w1) * (z - w1) + 0.25 * k * k);
        let z = C64::new(w1, -0.5 * k);
        let r = residue_contour(f, z, 0.1, 256).unwrap();
        assert!((r - C64::new(0.0, g * g)).norm() < 1e-14);
        let r512 = residue_contour(f, z, 0.1, 512).unwrap();
        assert!((r512 - r).norm() < 1e-10 * r.norm());
    }

    #[test]
    fn enclosure_violation_detected() {
        let f = |z: C64| 1.0 / (z - 1.0) + 1.0 / (z - 1.3);
        assert!(matches!(residue_contour(f, C64::new(1.0, 0.0), 0.5, 256), Err(Error::Enclosure(_))));
    }

    #[test]
    fn fp_root_matches_logarithm() {
        let fsr = 10.0;
        let cav = Cavity::new(ConstantMirror::new(0.99).unwrap(), CavityGeometry::standard(fsr), 6e-4);
        let z = fp_pole(&cav, 3173.0, &PoleSettings::default()).unwrap();
        assert!((z.im - 0.5 * fsr * 0.99f64.ln()).abs() < 1e-12);
        assert!(((z.re / (PI * fsr)) - ((z.re / (PI * fsr)).floor() + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn fano_pair_found() {
        let fsr = 10.0;
        let w0 = 101.0 * PI * fsr;
        let m = FanoMirror::symmetric(-FRAC_1_SQRT_2, 1.5, 0.01, w0 - 0.02 * PI * fsr, Parity::Even)
            .unwrap()
            .response()
            .unwrap();
        let cav = Cavity::new(m, CavityGeometry::standard(fsr), 6e-4);
        let [a, b] = locate_fano_poles(&cav, &PoleSettings::default()).unwrap();
        assert!((b.re - a.re) < PI * fsr);
        assert!(a.im < 0.0 && b.im < 0.0);
        assert!(cav.denominator(a).norm() < 1e-12 && cav.denominator(b).norm() < 1e-12);
    }
}

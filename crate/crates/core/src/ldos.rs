//! Local density of states seen by an emitter inside the cavity.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::scattering::{CavityGeometry, ConstantMirror, Mirror, DENOMINATOR_FLOOR};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterCoupling {
    /// Spontaneous emission rate into the bare waveguide, meV.
    pub gamma_0: f64,
    /// Emission rate into radiation modes, meV.
    pub gamma_r: f64,
    /// Emitter transition frequency (polaron frame), meV.
    pub omega_eg: f64,
}

impl EmitterCoupling {
    pub fn new(gamma_0: f64, gamma_r: f64, omega_eg: f64) -> Result<Self> {
        if !(gamma_0 > 0.0) {
            return Err(Error::Domain("Gamma_0 must be positive".into()));
        }
        if !(gamma_r >= 0.0) {
            return Err(Error::Domain("Gamma_R must be non-negative".into()));
        }
        if !(omega_eg > 0.0) {
            return Err(Error::Domain("omega_eg must be positive".into()));
        }
        Ok(Self { gamma_0, gamma_r, omega_eg })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub omega: Vec<f64>,
    /// Samples in meV.
    pub values: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::Domain("grid and values differ in length".into()));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("frequency grid must increase monotonically".into()));
        }
        Ok(Self { omega, values })
    }

    pub fn argmax(&self) -> Option<usize> {
        (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
    }

    /// CSV with header `omega_meV,J_over_Gamma0`, preceded by `# comment` lines.
    pub fn write_csv<W: Write>(&self, mut w: W, gamma_0: f64, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "omega_meV,J_over_Gamma0")?;
        for (o, v) in self.omega.iter().zip(&self.values) {
            writeln!(w, "{:.12e},{:.12e}", o, v / gamma_0)?;
        }
        Ok(())
    }
}

/// A cavity formed by the conventional left mirror and a (Fano or constant)
/// right mirror, probed by an emitter coupled to the waveguide at rate `gamma_0`.
#[derive(Clone, Copy, Debug)]
pub struct Cavity<M> {
    pub mirror: M,
    pub geometry: CavityGeometry,
    pub gamma_0: f64,
}

impl<M: Mirror> Cavity<M> {
    pub fn new(mirror: M, geometry: CavityGeometry, gamma_0: f64) -> Self {
        Self { mirror, geometry, gamma_0 }
    }

    /// `(1 + r1)(1 + r2) / (1 - r1 r2)` at position `x`; analytic in `z`.
    fn kernel(&self, x: f64, z: C64) -> (C64, C64) {
        let d = self.geometry.fsr;
        let r1 = self.geometry.r0 * (I * (1.0 + x) * z / d).exp();
        let r2 = self.mirror.reflect(z) * (I * (1.0 - x) * z / d).exp();
        ((1.0 + r1) * (1.0 + r2), 1.0 - r1 * r2)
    }

    pub fn ldos(&self, x: f64, omega: f64) -> Result<f64> {
        let (num, den) = self.kernel(x, omega.into());
        if den.norm() < DENOMINATOR_FLOOR {
            return Err(Error::Degenerate { omega, modulus: den.norm() });
        }
        Ok(self.gamma_0 * (num / den).re)
    }

    /// Analytic continuation `J(z) = Γ0/2 [f(z) + conj f(conj z)]` of the LDOS at
    /// the configured emitter position.
    pub fn ldos_analytic(&self, z: C64) -> C64 {
        let x = self.geometry.x_tilde;
        let (n1, d1) = self.kernel(x, z);
        let (n2, d2) = self.kernel(x, z.conj());
        0.5 * self.gamma_0 * (n1 / d1 + (n2 / d2).conj())
    }

    pub fn ldos_curve(&self, x: f64, omega: &[f64]) -> Result<SpectralCurve> {
        let values: Result<Vec<f64>> = par::map(omega, |&w| self.ldos(x, w)).into_iter().collect();
        SpectralCurve::new(omega.to_vec(), values?)
    }

    pub fn denominator(&self, z: C64) -> C64 {
        self.geometry.denominator(&self.mirror, z)
    }

    /// Round-trip denominator multiplied by the mirror's own pole factor, so
    /// that it is entire, together with its derivative.
    pub fn regular_denominator(&self, z: C64) -> (C64, C64) {
        let d = self.geometry.fsr;
        let e = self.geometry.round_trip(z);
        let r = self.mirror.reflect(z);
        let den = 1.0 - self.geometry.r0 * r * e;
        let dden = -self.geometry.r0 * e * (self.mirror.reflect_derivative(z) + 2.0 * I / d * r);
        match self.mirror.own_pole() {
            Some(p) => (den * (z - p), dden * (z - p) + den),
            None => (den, dden),
        }
    }
}

/// LDOS at position `x_tilde` (meV).
pub fn ldos_at<M: Mirror + Copy>(mirror: &M, geometry: &CavityGeometry, coupling: &EmitterCoupling, x_tilde: f64, omega: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x_tilde) {
        return Err(Error::Domain(format!("x_tilde = {x_tilde} outside [-1, 1]")));
    }
    Cavity::new(*mirror, *geometry, coupling.gamma_0).ldos(x_tilde, omega)
}

/// Midpoint LDOS, written out directly in the symmetric-position form.
pub fn ldos_midpoint<M: Mirror>(mirror: &M, geometry: &CavityGeometry, coupling: &EmitterCoupling, omega: f64) -> Result<f64> {
    let e = (I * omega / geometry.fsr).exp();
    let r_f = mirror.reflect(omega.into());
    let den = 1.0 - geometry.r0 * r_f * e * e;
    if den.norm() < DENOMINATOR_FLOOR {
        return Err(Error::Degenerate { omega, modulus: den.norm() });
    }
    Ok(coupling.gamma_0 * ((1.0 + geometry.r0 * e) * (1.0 + r_f * e) / den).re)
}

/// Midpoint LDOS of the Fabry-Perot cavity with constant right mirror `r`.
pub fn fp_ldos(r: f64, geometry: &CavityGeometry, coupling: &EmitterCoupling, omega: f64) -> Result<f64> {
    ldos_midpoint(&ConstantMirror::new(r)?, geometry, coupling, omega)
}

/// Locate the maximum of `f` inside `[lo, hi]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Scan `[lo, hi]` on `n` points and refine the best sample with golden section.
pub fn refine_extremum<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, maximize: bool) -> f64 {
    let s = if maximize { 1.0 } else { -1.0 };
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = s * f(lo + h * i as f64);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    let a = (lo + h * (best as f64 - 1.0)).max(lo);
    let b = (lo + h * (best as f64 + 1.0)).min(hi);
    golden_max(|w| s * f(w), a, b, 1e-10 * (1.0 + b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{FanoMirror, Parity};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn coupling() -> EmitterCoupling {
        EmitterCoupling::new(6e-4, 3e-5, 1000.0).unwrap()
    }

    #[test]
    fn bare_left_mirror() {
        let g = CavityGeometry::standard(10.0);
        let c = coupling();
        let w = 10.0 * PI;
        let j = fp_ldos(0.0, &g, &c, w).unwrap();
        assert!((j - 2.0 * c.gamma_0).abs() < 1e-15);
        let w = 3.7;
        let j = fp_ldos(0.0, &g, &c, w).unwrap();
        assert!((j - c.gamma_0 * (1.0 - (w / 10.0).cos())).abs() < 1e-16);
    }

    #[test]
    fn no_mirrors_is_flat() {
        let g = CavityGeometry::new(10.0, C64::new(0.0, 0.0), 0.3).unwrap();
        let c = coupling();
        for w in [0.1, 5.0, 123.0] {
            assert!((ldos_at(&ConstantMirror::new(0.0).unwrap(), &g, &c, 0.3, w).unwrap() - c.gamma_0).abs() < 1e-16);
        }
    }

    #[test]
    fn midpoint_equals_position_form() {
        let m = FanoMirror::symmetric(-FRAC_1_SQRT_2, 1.5, 0.01, 1000.0, Parity::Even).unwrap().response().unwrap();
        let g = CavityGeometry::standard(10.0);
        let c = coupling();
        for k in 0..2000 {
            let w = 980.0 + 0.02 * k as f64;
            let a = ldos_midpoint(&m, &g, &c, w).unwrap();
            let b = ldos_at(&m, &g, &c, 0.0, w).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(c.gamma_0));
        }
    }

    #[test]
    fn analytic_continuation_matches_real_axis() {
        let m = FanoMirror::symmetric(-FRAC_1_SQRT_2, 1.5, 0.01, 1000.0, Parity::Even).unwrap().response().unwrap();
        let cav = Cavity::new(m, CavityGeometry::standard(10.0), 6e-4);
        for w in [990.0, 1001.3, 1003.27] {
            let a = cav.ldos_analytic(C64::new(w, 0.0));
            assert!(a.im.abs() < 1e-18);
            assert!((a.re - cav.ldos(0.0, w).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = refine_extremum(|w| -(w - 0.3).powi(2), -1.0, 1.0, 21, true);
        assert!((x - 0.3).abs() < 1e-8);
    }
}

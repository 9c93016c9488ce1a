//! Two-mode network reproducing the cavity LDOS.
//!
//! The LDOS near the Fano resonance is dominated by two complex poles. Fixing
//! both poles and the total residue pins five of the seven network parameters;
//! the remaining two (mode splitting `Δm` and `κ2`) are fitted.

mod fit;
mod poles;
mod simplex;

pub use fit::{fit, fit_lorentzian, fit_target, FitReport, FitSettings, PoleRecord, Window};
pub use poles::{
    default_contour_radius, find_poles, fp_pole, locate_fano_poles, newton_root, residue_contour, PoleSettings,
};
pub use simplex::{nelder_mead, SimplexResult, SimplexSettings};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPole {
    pub z: C64,
    pub residue: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedPair {
    pub g: f64,
    pub omega_1: f64,
    pub omega_2: f64,
    pub v0: f64,
    pub varphi: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Infeasible {
    NegativeKappa,
    NegativeCoupling(f64),
    CosineOutOfRange(f64),
    NegativeResidueSum(f64),
    DegenerateMismatch(f64),
}

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasible::NegativeKappa => write!(f, "kappa_2 outside [0, kappa_1 + kappa_2]"),
            Infeasible::NegativeCoupling(v) => write!(f, "V0^2 = {v:.3e} < 0"),
            Infeasible::CosineOutOfRange(c) => write!(f, "|cos varphi| = {:.6} > 1", c.abs()),
            Infeasible::NegativeResidueSum(s) => write!(f, "Im(R+ + R-) = {s:.3e} < 0"),
            Infeasible::DegenerateMismatch(t) => write!(f, "degenerate coupling but phase equation target {t:.3e} != 0"),
        }
    }
}

impl MappedPair {
    pub fn new(g: f64, omega_1: f64, omega_2: f64, v0: f64, varphi: f64, kappa_1: f64, kappa_2: f64) -> Result<Self> {
        let p = Self { g, omega_1, omega_2, v0, varphi, kappa_1, kappa_2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0 && self.kappa_1 >= 0.0 && self.kappa_2 >= 0.0 && self.v0 >= 0.0) {
            return Err(Error::Domain("g, kappa_1, kappa_2, V0 must be non-negative".into()));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.varphi) {
            return Err(Error::Domain(format!("varphi = {} outside [0, pi]", self.varphi)));
        }
        Ok(())
    }

    /// Single lossy mode: mode 2 decoupled and lossless.
    pub fn single_mode(g: f64, omega: f64, kappa: f64) -> Self {
        Self { g, omega_1: omega, omega_2: omega, v0: 0.0, varphi: 0.0, kappa_1: kappa, kappa_2: 0.0 }
    }

    pub fn is_single_mode(&self) -> bool {
        self.v0 == 0.0 && self.kappa_2 == 0.0
    }

    pub fn kappa_sum(&self) -> f64 {
        self.kappa_1 + self.kappa_2
    }

    fn cross(&self) -> C64 {
        // i V0 sqrt(k1 k2) cos(varphi) - V0^2
        C64::new(-self.v0 * self.v0, self.v0 * (self.kappa_1 * self.kappa_2).sqrt() * self.varphi.cos())
    }

    /// Denominator `Q(z)` of the network response (leading coefficient 2).
    pub fn denominator(&self, z: C64) -> C64 {
        let (w1, w2) = (self.omega_1, self.omega_2);
        2.0 * (z - w2) * (z - w1) + I * self.kappa_1 * (z - w2) + I * self.kappa_2 * (z - w1) + 2.0 * self.cross()
    }

    fn numerator(&self, z: C64) -> C64 {
        2.0 * I * (z - self.omega_2) - self.kappa_2
    }

    /// Poles from the complex mode frequencies `w̃_j = ω_j - i κ_j / 2`:
    /// `z = (w̃1 + w̃2)/2 ± sqrt(((w̃1 - w̃2)/2)^2 + W^2)`, sorted by real part.
    pub fn poles(&self) -> [C64; 2] {
        let w1 = C64::new(self.omega_1, -0.5 * self.kappa_1);
        let w2 = C64::new(self.omega_2, -0.5 * self.kappa_2);
        let w_sq = -self.cross() - 0.25 * self.kappa_1 * self.kappa_2;
        let h = 0.5 * (w1 - w2);
        let root = (h * h + w_sq).sqrt();
        let m = 0.5 * (w1 + w2);
        let (a, b) = (m - root, m + root);
        if a.re <= b.re {
            [a, b]
        } else {
            [b, a]
        }
    }

    /// Residues of the analytic continuation of J' at its lower-half-plane poles.
    pub fn residues(&self) -> [C64; 2] {
        let p = self.poles();
        let res = |z: C64, other: C64| self.g * self.g * self.numerator(z) / (2.0 * (z - other));
        [res(p[0], p[1]), res(p[1], p[0])]
    }

    pub fn complex_poles(&self) -> [ComplexPole; 2] {
        let p = self.poles();
        let r = self.residues();
        [ComplexPole { z: p[0], residue: r[0] }, ComplexPole { z: p[1], residue: r[1] }]
    }
}

impl MappedPair {
    /// `N/Q`, with the common factor cancelled when mode 2 is decoupled.
    fn response(&self, z: C64) -> C64 {
        if self.is_single_mode() {
            2.0 * I / (2.0 * (z - self.omega_1) + I * self.kappa_1)
        } else {
            self.numerator(z) / self.denominator(z)
        }
    }
}

/// Network spectral density on the real axis (meV).
pub fn mapped_spectral_density(pair: &MappedPair, omega: f64) -> f64 {
    2.0 * pair.g * pair.g * pair.response(C64::new(omega, 0.0)).re
}

/// Analytic continuation `g^2 [N/Q (z) + conj(N/Q (conj z))]`.
pub fn mapped_spectral_density_complex(pair: &MappedPair, z: C64) -> C64 {
    pair.g * pair.g * (pair.response(z) + pair.response(z.conj()).conj())
}

/// Tolerance on the phase-equation target when the coupling degenerates.
const DEGENERATE_TOL: f64 = 1e-9;

/// Solve the pole and residue constraints for given `(Δm, κ2)`.
pub fn constrained_pair(
    z_plus: C64,
    z_minus: C64,
    r_plus: C64,
    r_minus: C64,
    delta_m: f64,
    kappa_2: f64,
) -> std::result::Result<MappedPair, Infeasible> {
    let sum = z_plus + z_minus;
    let diff_sq = (z_plus - z_minus) * (z_plus - z_minus);
    let omega_c = 0.5 * sum.re;
    let kappa_sum = -2.0 * sum.im;
    if !(kappa_2 >= 0.0 && kappa_2 <= kappa_sum) {
        return Err(Infeasible::NegativeKappa);
    }
    let kappa_1 = (kappa_sum - kappa_2).max(0.0);
    let res_im = (r_plus + r_minus).im;
    if res_im < 0.0 {
        return Err(Infeasible::NegativeResidueSum(res_im));
    }
    let g = res_im.sqrt();
    let v0_sq = 0.25 * diff_sq.re + (kappa_sum / 4.0).powi(2) - 0.25 * delta_m * delta_m;
    let scale = diff_sq.norm() + kappa_sum * kappa_sum + delta_m * delta_m;
    if v0_sq < -DEGENERATE_TOL * scale {
        return Err(Infeasible::NegativeCoupling(v0_sq));
    }
    let v0 = v0_sq.max(0.0).sqrt();
    let target = 0.25 * delta_m * (kappa_1 - kappa_2) - 0.25 * diff_sq.im;
    let denom = (kappa_1 * kappa_2).sqrt() * v0;
    let varphi = if denom <= 1e-12 * scale {
        if target.abs() > DEGENERATE_TOL * scale {
            return Err(Infeasible::DegenerateMismatch(target));
        }
        0.0
    } else {
        let c = target / denom;
        if c.abs() > 1.0 + 1e-12 {
            return Err(Infeasible::CosineOutOfRange(c));
        }
        c.clamp(-1.0, 1.0).acos()
    };
    Ok(MappedPair {
        g,
        omega_1: omega_c - 0.5 * delta_m,
        omega_2: omega_c + 0.5 * delta_m,
        v0,
        varphi,
        kappa_1,
        kappa_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MappedPair {
        MappedPair::new(0.078, 999.2, 998.1, 3.7, 2.9, 3.2, 2.6).unwrap()
    }

    #[test]
    fn single_mode_is_lorentzian() {
        let p = MappedPair::single_mode(0.05, 10.0, 0.2);
        for w in [9.5, 10.0, 10.07, 11.0] {
            let lor = p.g * p.g * p.kappa_1 / ((w - 10.0_f64).powi(2) + 0.01);
            assert!((mapped_spectral_density(&p, w) - lor).abs() < 1e-14 * lor.max(1.0));
        }
        assert!((mapped_spectral_density(&p, 10.0) - 4.0 * 0.0025 / 0.2).abs() < 1e-14);
    }

    #[test]
    fn poles_are_roots_of_denominator() {
        let p = sample();
        for z in p.poles() {
            assert!(p.denominator(z).norm() < 1e-10 * (1.0 + z.norm_sqr()));
            assert!(z.im < 0.0);
        }
    }

    #[test]
    fn residue_sum_is_i_g_squared() {
        let p = sample();
        let r = p.residues();
        let s = r[0] + r[1];
        assert!((s - C64::new(0.0, p.g * p.g)).norm() < 1e-12);
    }

    #[test]
    fn round_trip_with_true_parameters() {
        let p = sample();
        let [zm, zp] = p.complex_poles();
        let q = constrained_pair(zp.z, zm.z, zp.residue, zm.residue, p.omega_2 - p.omega_1, p.kappa_2).unwrap();
        for (a, b) in [
            (q.g, p.g),
            (q.omega_1, p.omega_1),
            (q.omega_2, p.omega_2),
            (q.v0, p.v0),
            (q.varphi, p.varphi),
            (q.kappa_1, p.kappa_1),
            (q.kappa_2, p.kappa_2),
        ] {
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn swap_symmetry() {
        let p = sample();
        let [a, b] = p.complex_poles();
        let x = constrained_pair(a.z, b.z, a.residue, b.residue, -1.1, 2.6).unwrap();
        let y = constrained_pair(b.z, a.z, b.residue, a.residue, -1.1, 2.6).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn lorentzian_limit_accepts_any_phase() {
        // single pole plus a lossless, uncoupled mode on the real axis
        let z = C64::new(5.0, -0.1);
        let far = C64::new(25.0, 0.0);
        let g = 0.3;
        let q = constrained_pair(z, far, C64::new(0.0, g * g), C64::new(0.0, 0.0), 20.0, 0.0).unwrap();
        assert!((q.kappa_1 - 0.2).abs() < 1e-14);
        assert!(q.v0.abs() < 1e-6);
        assert!((q.g - g).abs() < 1e-15);
        let lor = |w: f64| g * g * 0.2 / ((w - 5.0).powi(2) + 0.01);
        for w in [4.0, 5.0, 5.3] {
            assert!((mapped_spectral_density(&q, w) - lor(w)).abs() < 1e-9 * lor(w));
        }
    }

    #[test]
    fn infeasible_is_a_value() {
        let p = sample();
        let [a, b] = p.complex_poles();
        assert!(matches!(
            constrained_pair(a.z, b.z, a.residue, b.residue, 1e3, 1.0),
            Err(Infeasible::NegativeCoupling(_))
        ));
        assert!(matches!(
            constrained_pair(a.z, b.z, -a.residue, -b.residue, 0.0, 1.0),
            Err(Infeasible::NegativeResidueSum(_))
        ));
    }
}

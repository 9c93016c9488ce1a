//! Coupled-mode scattering of the Fano mirror and Green's functions of the
//! composite cavity.
//!
//! The mirror response is written in pole form,
//! `r_F(z) = r_B + q_r / d(z)`, `t_F(z) = -i t_B + q_t / d(z)` with
//! `d(z) = -i (z - omega_F) + gamma_t`, which holds for real and complex `z`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible modulus of a cavity round-trip denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(p: i32) -> Result<Self> {
        match p {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            _ => Err(Error::Domain(format!("parity must be +1 or -1, got {p}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Reflection and transmission of a two-port mirror, valid off the real axis.
pub trait Mirror: Sync {
    fn reflect(&self, z: C64) -> C64;
    fn transmit(&self, z: C64) -> C64;
    fn reflect_derivative(&self, z: C64) -> C64;
    /// Pole of the mirror response itself, if it has one.
    fn own_pole(&self) -> Option<C64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanoMirror {
    pub r_b: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub gamma_0: f64,
    pub omega_f: f64,
    pub parity: Parity,
}

impl FanoMirror {
    pub fn new(r_b: f64, gamma_1: f64, gamma_2: f64, gamma_0: f64, omega_f: f64, parity: Parity) -> Result<Self> {
        if !(-1.0..=1.0).contains(&r_b) {
            return Err(Error::Domain(format!("r_B = {r_b} outside [-1, 1]")));
        }
        if !(gamma_1 > 0.0 && gamma_2 > 0.0) {
            return Err(Error::Domain("gamma_1 and gamma_2 must be positive".into()));
        }
        if !(gamma_0 >= 0.0) {
            return Err(Error::Domain("gamma_0 must be non-negative".into()));
        }
        if !omega_f.is_finite() {
            return Err(Error::Domain("omega_F must be finite".into()));
        }
        Ok(Self { r_b, gamma_1, gamma_2, gamma_0, omega_f, parity })
    }

    pub fn symmetric(r_b: f64, gamma_f: f64, gamma_0: f64, omega_f: f64, parity: Parity) -> Result<Self> {
        Self::new(r_b, gamma_f, gamma_f, gamma_0, omega_f, parity)
    }

    /// Asymmetric couplings parameterised by `gamma_1` and `chi = gamma_2 / gamma_1`.
    pub fn with_chi(r_b: f64, gamma_1: f64, chi: f64, gamma_0: f64, omega_f: f64, parity: Parity) -> Result<Self> {
        Self::new(r_b, gamma_1, chi * gamma_1, gamma_0, omega_f, parity)
    }

    pub fn t_b(&self) -> f64 {
        (1.0 - self.r_b * self.r_b).max(0.0).sqrt()
    }

    pub fn chi(&self) -> f64 {
        self.gamma_2 / self.gamma_1
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma_1 + self.gamma_2 + self.gamma_0
    }

    pub fn phases(&self) -> Result<MirrorPhases> {
        mirror_phases(self.r_b, self.chi(), self.parity)
    }

    /// Resolve the phase relations once and return the pole-form response.
    pub fn response(&self) -> Result<FanoResponse> {
        let ph = self.phases()?;
        let t_b = self.t_b();
        let q_r = 2.0 * self.gamma_1 * C64::from_polar(1.0, 2.0 * ph.theta_1);
        let q_t = 2.0 * (I * t_b * self.gamma_2 - self.r_b * (self.gamma_1 * self.gamma_2).sqrt() * ph.phase_factor.conj());
        Ok(FanoResponse { r_b: self.r_b, t_b, omega_f: self.omega_f, gamma_t: self.gamma_t(), q_r, q_t })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorPhases {
    pub theta_1: f64,
    /// `exp(i (theta_1 - theta_2))`
    pub phase_factor: C64,
}

/// Phase relations of the Fano mirror for asymmetry ratio `chi = gamma_2 / gamma_1`.
///
/// The sine relation uses `|r_B|` in its denominator so that `chi = 1` reduces to
/// `cos 2θ1 = -r_B`, `sin 2θ1 = P t_B` for either sign of `r_B`.
pub fn mirror_phases(r_b: f64, chi: f64, parity: Parity) -> Result<MirrorPhases> {
    if r_b == 0.0 {
        return Err(Error::Domain("phase relations undefined for r_B = 0".into()));
    }
    if !(chi > 0.0) {
        return Err(Error::Domain(format!("asymmetry ratio chi = {chi} must be positive")));
    }
    let t_b = (1.0 - r_b * r_b).max(0.0).sqrt();
    let disc = 4.0 * chi - t_b * t_b * (1.0 + chi) * (1.0 + chi);
    // allow roundoff at the symmetric boundary r_B = 0 is excluded above
    if disc < -1e-14 {
        return Err(Error::Domain(format!("no real phase solution: 4chi - t_B^2 (1+chi)^2 = {disc:.3e}")));
    }
    let s = disc.max(0.0).sqrt();
    let p = parity.sign();
    let cos2 = t_b * t_b * (chi - 1.0) / (2.0 * r_b) - r_b;
    let sin2 = p * t_b * s / (2.0 * r_b.abs());
    let theta_1 = 0.5 * sin2.atan2(cos2);
    let phase_factor = C64::new(r_b.signum() * t_b * (chi - 1.0), p * s) / (I * 2.0 * r_b.abs() * chi.sqrt());
    Ok(MirrorPhases { theta_1, phase_factor })
}

/// Precomputed pole form of a Fano mirror.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanoResponse {
    pub r_b: f64,
    pub t_b: f64,
    pub omega_f: f64,
    pub gamma_t: f64,
    pub q_r: C64,
    pub q_t: C64,
}

impl FanoResponse {
    fn d(&self, z: C64) -> C64 {
        -I * (z - self.omega_f) + self.gamma_t
    }
}

impl Mirror for FanoResponse {
    fn reflect(&self, z: C64) -> C64 {
        self.r_b + self.q_r / self.d(z)
    }

    fn transmit(&self, z: C64) -> C64 {
        -I * self.t_b + self.q_t / self.d(z)
    }

    fn reflect_derivative(&self, z: C64) -> C64 {
        let d = self.d(z);
        I * self.q_r / (d * d)
    }

    fn own_pole(&self) -> Option<C64> {
        Some(C64::new(self.omega_f, -self.gamma_t))
    }
}

/// Frequency-independent mirror with real reflectivity `r` and `t = sqrt(1 - r^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantMirror {
    pub r: f64,
}

impl ConstantMirror {
    pub fn new(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("mirror reflectivity r = {r} outside [0, 1]")));
        }
        Ok(Self { r })
    }
}

impl Mirror for ConstantMirror {
    fn reflect(&self, _z: C64) -> C64 {
        C64::new(self.r, 0.0)
    }

    fn transmit(&self, _z: C64) -> C64 {
        C64::new((1.0 - self.r * self.r).max(0.0).sqrt(), 0.0)
    }

    fn reflect_derivative(&self, _z: C64) -> C64 {
        C64::new(0.0, 0.0)
    }

    fn own_pole(&self) -> Option<C64> {
        None
    }
}

/// Symmetric-coupling closed form, kept separate from the general pole form so
/// the two can be checked against each other.
pub fn symmetric_reflectivity(r_b: f64, gamma_f: f64, gamma_0: f64, omega_f: f64, parity: Parity, z: C64) -> C64 {
    let t_b = (1.0 - r_b * r_b).sqrt();
    let d = -I * (z - omega_f) + 2.0 * gamma_f + gamma_0;
    r_b + 2.0 * gamma_f * (-r_b + I * parity.sign() * t_b) / d
}

pub fn symmetric_transmittivity(r_b: f64, gamma_f: f64, gamma_0: f64, omega_f: f64, parity: Parity, z: C64) -> C64 {
    let t_b = (1.0 - r_b * r_b).sqrt();
    let d = -I * (z - omega_f) + 2.0 * gamma_f + gamma_0;
    -I * t_b + 2.0 * gamma_f * (I * t_b - parity.sign() * r_b) / d
}

pub fn fano_reflectivity(mirror: &FanoMirror, z: C64) -> Result<C64> {
    Ok(mirror.response()?.reflect(z))
}

pub fn fano_transmittivity(mirror: &FanoMirror, z: C64) -> Result<C64> {
    Ok(mirror.response()?.transmit(z))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringAmplitudes {
    pub omega: Vec<f64>,
    pub r: Vec<C64>,
    pub t: Vec<C64>,
}

pub fn amplitudes<M: Mirror>(mirror: &M, omega: &[f64]) -> ScatteringAmplitudes {
    ScatteringAmplitudes {
        omega: omega.to_vec(),
        r: omega.iter().map(|&w| mirror.reflect(w.into())).collect(),
        t: omega.iter().map(|&w| mirror.transmit(w.into())).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// Free-spectral-range parameter Δ = c / (n L), meV.
    pub fsr: f64,
    /// Reflectivity of the conventional left mirror.
    pub r0: C64,
    /// Emitter position in units of the half length, in [-1, 1].
    pub x_tilde: f64,
}

impl CavityGeometry {
    pub fn new(fsr: f64, r0: C64, x_tilde: f64) -> Result<Self> {
        if !(fsr > 0.0) {
            return Err(Error::Domain(format!("free spectral range {fsr} must be positive")));
        }
        if !(r0.norm() <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!("|r0| = {} exceeds 1", r0.norm())));
        }
        if !(-1.0..=1.0).contains(&x_tilde) {
            return Err(Error::Domain(format!("x_tilde = {x_tilde} outside [-1, 1]")));
        }
        Ok(Self { fsr, r0, x_tilde })
    }

    /// Perfect metallic left mirror (r0 = -1), emitter at the midpoint.
    pub fn standard(fsr: f64) -> Self {
        Self { fsr, r0: C64::new(-1.0, 0.0), x_tilde: 0.0 }
    }

    pub fn phi_1(&self) -> f64 {
        self.r0.arg()
    }

    pub fn round_trip(&self, z: C64) -> C64 {
        (2.0 * I * z / self.fsr).exp()
    }

    /// `D(z) = 1 - r0 r(z) exp(2 i z / Δ)`
    pub fn denominator<M: Mirror>(&self, mirror: &M, z: C64) -> C64 {
        1.0 - self.r0 * mirror.reflect(z) * self.round_trip(z)
    }
}

fn green_with<M: Mirror>(mirror: &M, geometry: &CavityGeometry, omega: f64) -> Result<C64> {
    let z = C64::new(omega, 0.0);
    let den = geometry.denominator(mirror, z);
    if den.norm() < DENOMINATOR_FLOOR {
        return Err(Error::Degenerate { omega, modulus: den.norm() });
    }
    let half = (I * z / geometry.fsr).exp();
    Ok((1.0 + geometry.r0 * half) * mirror.transmit(z) / den)
}

/// Green's function from the emitter to the output port of the Fano mirror.
pub fn green_function<M: Mirror>(mirror: &M, geometry: &CavityGeometry, omega: f64) -> Result<C64> {
    green_with(mirror, geometry, omega)
}

/// Fabry-Perot Green's function with a frequency-independent right mirror.
pub fn fp_green_function(r: f64, geometry: &CavityGeometry, omega: f64) -> Result<C64> {
    green_with(&ConstantMirror::new(r)?, geometry, omega)
}

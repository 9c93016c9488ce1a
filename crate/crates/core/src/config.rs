//! JSON run configuration.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ldos::EmitterCoupling;
use crate::mapping::{FitSettings, MappedPair, Window};
use crate::observables::{AxisSpec, PipelineSettings, SpectrumSettings};
use crate::phonons::PhononEnv;
use crate::scattering::{CavityGeometry, FanoMirror, Parity};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Free spectral range parameter Δ, meV.
    pub fsr: f64,
    /// Left mirror reflectivity `[re, im]`.
    #[serde(default = "default_r0")]
    pub r0: [f64; 2],
    #[serde(default)]
    pub x_tilde: f64,
}

fn default_r0() -> [f64; 2] {
    [-1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorConfig {
    pub r_b: f64,
    /// Symmetric coupling `γ_F = γ1 = γ2`; ignored when both `gamma_1` and `gamma_2` are set.
    #[serde(default)]
    pub gamma_f: Option<f64>,
    #[serde(default)]
    pub gamma_1: Option<f64>,
    #[serde(default)]
    pub gamma_2: Option<f64>,
    /// Intrinsic loss rate of the nanocavity, meV.
    #[serde(default)]
    pub gamma_0: f64,
    pub omega_f: f64,
    /// Mode parity, +1 or -1.
    pub parity: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhononConfig {
    pub alpha: f64,
    pub nu_c: f64,
    pub temperature: f64,
    #[serde(default = "default_dtau")]
    pub dtau: f64,
    #[serde(default = "default_decay_tol")]
    pub decay_tol: f64,
}

fn default_dtau() -> f64 {
    0.01
}

fn default_decay_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_points_per_linewidth")]
    pub points_per_linewidth: f64,
    #[serde(default = "default_contour_points")]
    pub contour_points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_points_per_linewidth() -> f64 {
    40.0
}

fn default_contour_points() -> usize {
    256
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { window: None, points_per_linewidth: 40.0, contour_points: 256, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_spectrum_points")]
    pub points: usize,
    #[serde(default = "default_sanity_samples")]
    pub sanity_samples: usize,
    /// When set, the emitter is placed this far from the LDOS peak (meV) and
    /// `emitter.omega_eg` is ignored.
    #[serde(default)]
    pub peak_offset: Option<f64>,
}

fn default_half_width() -> f64 {
    20.0
}

fn default_rel_tol() -> f64 {
    1e-7
}

fn default_spectrum_points() -> usize {
    4001
}

fn default_sanity_samples() -> usize {
    12
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { half_width: 20.0, rel_tol: 1e-7, points: 4001, sanity_samples: 12, peak_offset: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdosConfig {
    pub range: [f64; 2],
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma_f: AxisSpec,
    /// Emitter detuning from the LDOS peak, meV.
    pub offset: AxisSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpConfig {
    pub r: AxisSpec,
    /// Emitter detuning from the cavity resonance, meV.
    pub offset: AxisSpec,
    /// The resonance nearest this frequency is used, meV.
    pub near: f64,
}

/// Single Lorentzian mode fitted instead of the Fano mirror.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianTarget {
    pub g: f64,
    pub omega: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub mirror: Option<MirrorConfig>,
    pub emitter: EmitterCoupling,
    pub phonons: PhononConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub ldos: Option<LdosConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub fp: Option<FpConfig>,
    #[serde(default)]
    pub target: Option<LorentzianTarget>,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", self.schema_version)));
        }
        self.geometry().map_err(config_err)?;
        if let Some(m) = &self.mirror {
            Self::build_mirror(m).map_err(config_err)?;
        }
        EmitterCoupling::new(self.emitter.gamma_0, self.emitter.gamma_r, self.emitter.omega_eg).map_err(config_err)?;
        self.phonon_env().map_err(config_err)?;
        if !(self.phonons.dtau > 0.0 && self.phonons.decay_tol > 0.0) {
            return Err(Error::Config("phonon dtau and decay_tol must be positive".into()));
        }
        if self.fit.contour_points < 64 {
            return Err(Error::Config("fit.contour_points must be at least 64".into()));
        }
        if let Some([lo, hi]) = self.fit.window {
            if !(hi > lo) {
                return Err(Error::Config("fit.window must satisfy lo < hi".into()));
            }
        }
        if !(self.spectrum.half_width > 0.0 && self.spectrum.rel_tol > 0.0) {
            return Err(Error::Config("spectrum half_width and rel_tol must be positive".into()));
        }
        if self.spectrum.points < 2 {
            return Err(Error::Config("spectrum.points must be at least 2".into()));
        }
        if let Some(l) = &self.ldos {
            if l.points == 0 || !(l.range[1] > l.range[0]) {
                return Err(Error::Config("ldos needs points > 0 and an increasing range".into()));
            }
        }
        if let Some(s) = &self.sweep {
            s.gamma_f.values()?;
            s.offset.values()?;
        }
        if let Some(f) = &self.fp {
            f.r.values()?;
            f.offset.values()?;
        }
        if let Some(t) = &self.target {
            MappedPair::new(t.g, t.omega, t.omega, 0.0, 0.0, t.kappa, 0.0).map_err(config_err)?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<CavityGeometry> {
        CavityGeometry::new(self.geometry.fsr, C64::new(self.geometry.r0[0], self.geometry.r0[1]), self.geometry.x_tilde)
    }

    fn build_mirror(m: &MirrorConfig) -> Result<FanoMirror> {
        let parity = Parity::from_sign(m.parity)?;
        let (g1, g2) = match (m.gamma_1, m.gamma_2, m.gamma_f) {
            (Some(a), Some(b), _) => (a, b),
            (_, _, Some(g)) => (g, g),
            _ => return Err(Error::Config("mirror needs gamma_f or both gamma_1 and gamma_2".into())),
        };
        FanoMirror::new(m.r_b, g1, g2, m.gamma_0, m.omega_f, parity)
    }

    pub fn mirror(&self) -> Result<FanoMirror> {
        let m = self.mirror.as_ref().ok_or_else(|| Error::Config("configuration has no mirror section".into()))?;
        Self::build_mirror(m)
    }

    pub fn phonon_env(&self) -> Result<PhononEnv> {
        PhononEnv::new(self.phonons.alpha, self.phonons.nu_c, self.phonons.temperature)
    }

    pub fn fit_settings(&self) -> FitSettings {
        let mut s = FitSettings {
            window: self.fit.window.map(|[lo, hi]| Window { lo, hi }),
            points_per_linewidth: self.fit.points_per_linewidth,
            contour_points: self.fit.contour_points,
            ..Default::default()
        };
        s.simplex.seed = self.fit.seed;
        s
    }

    pub fn pipeline_settings(&self) -> PipelineSettings {
        PipelineSettings {
            fit: self.fit_settings(),
            spectrum: SpectrumSettings { half_width: self.spectrum.half_width, rel_tol: self.spectrum.rel_tol, ..Default::default() },
            sanity_samples: self.spectrum.sanity_samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "geometry": {"fsr": 10.0},
        "mirror": {"r_b": -0.7071067811865476, "gamma_f": 1.5, "gamma_0": 0.0314, "omega_f": 3172.4, "parity": 1},
        "emitter": {"gamma_0": 6e-4, "gamma_r": 3e-5, "omega_eg": 3173.0},
        "phonons": {"alpha": 0.069, "nu_c": 1.45, "temperature": 4.0}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = SimConfig::from_json(MINIMAL).unwrap();
        let again = SimConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
        assert_eq!(c.geometry.r0, [-1.0, 0.0]);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let bad = MINIMAL.replace("\"fsr\": 10.0", "\"fsr\": 10.0, \"extra\": 1");
        assert!(matches!(SimConfig::from_json(&bad), Err(Error::Config(_))));
        let v2 = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(SimConfig::from_json(&v2), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_domain_violations() {
        let bad = MINIMAL.replace("\"r_b\": -0.7071067811865476", "\"r_b\": 1.5");
        assert!(matches!(SimConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("\"parity\": 1", "\"parity\": 0");
        assert!(matches!(SimConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = SimConfig::from_json(MINIMAL).unwrap();
        let b = SimConfig::from_json(&MINIMAL.replace("4.0}", "4.5}")).unwrap();
        assert_ne!(a.hash(), b.hash());
    }
}

//! Phonon bath with super-ohmic spectral density `J_P(ν) = α ν^3 exp(-ν^2/ν_c^2)`.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadSettings};
use crate::units::{time_to_ps, KB_MEV_PER_K};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhononEnv {
    /// Coupling strength, meV^-2.
    pub alpha: f64,
    /// Cutoff frequency, meV.
    pub nu_c: f64,
    /// Temperature, K.
    pub temperature: f64,
}

impl PhononEnv {
    pub fn new(alpha: f64, nu_c: f64, temperature: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Domain("alpha must be non-negative".into()));
        }
        if !(nu_c > 0.0) {
            return Err(Error::Domain("nu_c must be positive".into()));
        }
        if !(temperature >= 0.0) {
            return Err(Error::Domain("temperature must be non-negative".into()));
        }
        Ok(Self { alpha, nu_c, temperature })
    }

    /// Inverse thermal energy in 1/meV; `None` at zero temperature.
    pub fn beta(&self) -> Option<f64> {
        if self.temperature > 0.0 {
            Some(1.0 / (KB_MEV_PER_K * self.temperature))
        } else {
            None
        }
    }

    /// `ν coth(βν/2)`, with its finite `ν -> 0` limit and the `T = 0` branch.
    fn nu_coth(&self, nu: f64) -> f64 {
        match self.beta() {
            None => nu,
            Some(b) => {
                let x = 0.5 * b * nu;
                if x < 1e-4 {
                    (2.0 / b) * (1.0 + x * x / 3.0)
                } else {
                    nu / x.tanh()
                }
            }
        }
    }

    fn upper_limit(&self) -> f64 {
        8.0 * self.nu_c
    }

    fn quad_points(&self, tau: f64) -> Vec<f64> {
        // one panel per oscillation period, at least 16
        let top = self.upper_limit();
        let panels = ((top * tau.abs() / (2.0 * std::f64::consts::PI)).ceil() as usize).max(16);
        (0..=panels).map(|k| top * k as f64 / panels as f64).collect()
    }
}

fn quad_settings() -> QuadSettings {
    QuadSettings { abs_tol: 1e-16, rel_tol: 1e-13, max_intervals: 20_000 }
}

pub fn phonon_sd(env: &PhononEnv, nu: f64) -> f64 {
    env.alpha * nu.powi(3) * (-(nu * nu) / (env.nu_c * env.nu_c)).exp()
}

/// `φ(τ) = ∫ J_P(ν)/ν^2 [coth(βν/2) cos ντ - i sin ντ] dν`, with `φ(-τ) = φ(τ)*`.
pub fn phi(env: &PhononEnv, tau: f64) -> Result<C64> {
    if env.alpha == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if tau < 0.0 {
        return Ok(phi(env, -tau)?.conj());
    }
    let nc2 = env.nu_c * env.nu_c;
    let f = |nu: f64| {
        let g = env.alpha * (-(nu * nu) / nc2).exp();
        let (s, c) = (nu * tau).sin_cos();
        C64::new(g * env.nu_coth(nu) * c, -g * nu * s)
    };
    Ok(integrate(f, &env.quad_points(tau), &quad_settings())?.value)
}

pub fn franck_condon(env: &PhononEnv) -> Result<f64> {
    Ok((-0.5 * phi(env, 0.0)?.re).exp())
}

fn lambdas(b0: f64, p: C64) -> (C64, C64) {
    let (ep, em) = (p.exp(), (-p).exp());
    let b2 = b0 * b0;
    (0.5 * b2 * (ep + em - 2.0), 0.5 * b2 * (ep - em))
}

pub fn lambda_x(env: &PhononEnv, tau: f64) -> Result<C64> {
    Ok(lambdas(franck_condon(env)?, phi(env, tau)?).0)
}

pub fn lambda_y(env: &PhononEnv, tau: f64) -> Result<C64> {
    Ok(lambdas(franck_condon(env)?, phi(env, tau)?).1)
}

/// Polaron shift `∫ J_P(ν)/ν dν` by quadrature, meV.
pub fn polaron_shift(env: &PhononEnv) -> Result<f64> {
    let nc2 = env.nu_c * env.nu_c;
    let f = |nu: f64| env.alpha * nu * nu * (-(nu * nu) / nc2).exp();
    Ok(integrate(f, &env.quad_points(0.0), &quad_settings())?.value)
}

pub fn polaron_shift_closed_form(env: &PhononEnv) -> f64 {
    env.alpha * env.nu_c.powi(3) * std::f64::consts::PI.sqrt() / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correlation {
    Phi,
    LambdaX,
    LambdaY,
}

/// `φ(τ)` tabulated on a uniform grid `τ_k = k dτ` until it has decayed.
#[derive(Clone, Debug, PartialEq)]
pub struct PhononCorrelations {
    pub env: PhononEnv,
    pub b0: f64,
    pub dtau: f64,
    pub phi: Vec<C64>,
}

impl PhononCorrelations {
    /// Tabulate until `|φ(τ)| < tol |φ(0)|` holds over a stretch of `5/ν_c`,
    /// and at least up to `20/ν_c`.
    pub fn tabulate(env: &PhononEnv, dtau: f64, tol: f64) -> Result<Self> {
        if !(dtau > 0.0) {
            return Err(Error::Domain("tau step must be positive".into()));
        }
        let p0 = phi(env, 0.0)?;
        let b0 = (-0.5 * p0.re).exp();
        if env.alpha == 0.0 {
            return Ok(Self { env: *env, b0, dtau, phi: vec![C64::new(0.0, 0.0); 2] });
        }
        let min_len = (20.0 / env.nu_c / dtau).ceil() as usize;
        let stretch = (5.0 / env.nu_c / dtau).ceil() as usize;
        let mut table = vec![p0];
        let mut quiet = 0;
        let mut k = 1;
        while k <= min_len || quiet < stretch {
            let v = phi(env, k as f64 * dtau)?;
            if v.norm() < tol * p0.norm() {
                quiet += 1;
            } else {
                quiet = 0;
            }
            table.push(v);
            k += 1;
            if k > 50_000_000 {
                return Err(Error::Convergence { what: "phonon correlation decay", iterations: k });
            }
        }
        Ok(Self { env: *env, b0, dtau, phi: table })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn tau_max(&self) -> f64 {
        (self.phi.len() - 1) as f64 * self.dtau
    }

    pub fn tau(&self, k: usize) -> f64 {
        k as f64 * self.dtau
    }

    pub fn lambda_x_at(&self, k: usize) -> C64 {
        lambdas(self.b0, self.phi[k]).0
    }

    pub fn lambda_y_at(&self, k: usize) -> C64 {
        lambdas(self.b0, self.phi[k]).1
    }

    /// `φ(τ)` by cubic interpolation of the table; zero beyond the table.
    pub fn phi_at(&self, tau: f64) -> C64 {
        if tau < 0.0 {
            return self.phi_at(-tau).conj();
        }
        let x = tau / self.dtau;
        let n = self.phi.len();
        if x >= (n - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        let get = |j: isize| -> C64 {
            if j < 0 {
                self.phi[(-j) as usize].conj()
            } else if (j as usize) < n {
                self.phi[j as usize]
            } else {
                C64::new(0.0, 0.0)
            }
        };
        let i = i as isize;
        let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        // Catmull-Rom
        p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
    }

    pub fn write_csv<W: Write>(&self, mut w: W, which: Correlation, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "tau_ps,re,im")?;
        for k in 0..self.phi.len() {
            let v = match which {
                Correlation::Phi => self.phi[k],
                Correlation::LambdaX => self.lambda_x_at(k),
                Correlation::LambdaY => self.lambda_y_at(k),
            };
            writeln!(w, "{:.12e},{:.12e},{:.12e}", time_to_ps(self.tau(k)), v.re, v.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantum_dot(t: f64) -> PhononEnv {
        PhononEnv::new(0.069, 1.45, t).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let e = quantum_dot(4.0);
        assert_eq!(phonon_sd(&e, 0.0), 0.0);
        // oracle: 0.069 * exp(-1/2.1025)
        assert!((phonon_sd(&e, 1.0) - 0.042_883_290_351_412_06).abs() < 1e-15);
        let peak = 1.45 * 1.5f64.sqrt();
        assert!(phonon_sd(&e, peak) > phonon_sd(&e, peak * 1.001));
        assert!(phonon_sd(&e, peak) > phonon_sd(&e, peak * 0.999));
    }

    #[test]
    fn zero_temperature_closed_forms() {
        let e = quantum_dot(0.0);
        let p0 = phi(&e, 0.0).unwrap();
        assert!((p0.re - 0.069 * 1.45 * 1.45 / 2.0).abs() < 1e-13);
        assert_eq!(p0.im, 0.0);
        let b0 = franck_condon(&e).unwrap();
        assert!((b0 - (-0.069 * 1.45f64.powi(2) / 4.0).exp()).abs() < 1e-13);
        let lx = lambda_x(&e, 0.0).unwrap();
        assert!((lx.re - b0 * b0 * (p0.re.cosh() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn shift_quadrature_matches_closed_form() {
        let e = quantum_dot(4.0);
        let q = polaron_shift(&e).unwrap();
        let c = polaron_shift_closed_form(&e);
        assert!((q - c).abs() < 1e-10 * c);
        assert!((c - 0.093_213).abs() < 1e-5);
    }

    #[test]
    fn decay_and_symmetry() {
        let e = quantum_dot(4.0);
        let p0 = phi(&e, 0.0).unwrap().re;
        assert!(phi(&e, 20.0 / 1.45).unwrap().norm() < 1e-6 * p0);
        let a = phi(&e, 0.7).unwrap();
        let b = phi(&e, -0.7).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn franck_condon_decreases_with_temperature() {
        let b = [0.0, 4.0, 10.0].map(|t| franck_condon(&quantum_dot(t)).unwrap());
        assert!(b[0] > b[1] && b[1] > b[2]);
    }

    #[test]
    fn lambda_identity() {
        let e = quantum_dot(4.0);
        let b0 = franck_condon(&e).unwrap();
        for tau in [0.0, 0.3, 2.0] {
            let p = phi(&e, tau).unwrap();
            let s = lambda_x(&e, tau).unwrap() + lambda_y(&e, tau).unwrap();
            assert!((s - b0 * b0 * (p.exp() - 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn no_coupling_no_correlations() {
        let e = PhononEnv::new(0.0, 1.45, 4.0).unwrap();
        assert_eq!(franck_condon(&e).unwrap(), 1.0);
        assert_eq!(lambda_x(&e, 0.5).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(lambda_y(&e, 0.5).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(polaron_shift(&e).unwrap(), 0.0);
    }

    #[test]
    fn table_interpolation() {
        let e = quantum_dot(4.0);
        let t = PhononCorrelations::tabulate(&e, 0.02, 1e-10).unwrap();
        for tau in [0.013, 0.51, 3.333] {
            assert!((t.phi_at(tau) - phi(&e, tau).unwrap()).norm() < 1e-7);
        }
        assert!(t.tau_max() >= 20.0 / 1.45);
    }
}

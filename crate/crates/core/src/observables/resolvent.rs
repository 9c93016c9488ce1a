//! Frequency-domain evaluation of the two-colour spectrum.
//!
//! With `ρ0 = |e><e|`, quantum regression gives
//! `S0(ω, ω') = Σ_b f_b(ω) ρ̂_eb(ω - ω') + Σ_b f_b(ω')* ρ̂_be(ω - ω')`, where
//! `ρ̂(s) = (is - L1)^-1 vec ρ0` is the Laplace transform of the single-excitation
//! block and `f_b(ω) = B0^2 ∫_0^∞ e^{-iωτ} e^{φ(τ)} [e^{Lc τ}]_{e b} dτ` uses the
//! ground-to-single-excitation coherence block `Lc`. The phonon part
//! `(e^φ - 1)` has finite support and is tabulated by FFT.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use super::{Diagnostics, IndistResult};
use crate::dynamics::{Liouvillian, SystemBasis};
use crate::error::{Error, Result};
use crate::phonons::PhononCorrelations;
use crate::quad::{integrate, simpson_weights, QuadSettings};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const MAX_ACTIVE: usize = 3;
const MAX_BLOCK: usize = MAX_ACTIVE * MAX_ACTIVE;

#[derive(Clone, Debug)]
pub struct SpectrumSettings {
    /// Integration window `frame ± half_width`, meV.
    pub half_width: f64,
    /// Target relative accuracy of `I`.
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Frequency step of the tabulated phonon sideband, meV.
    pub sideband_step: f64,
    /// Extra lab-frame breakpoints (cavity resonances, anti-resonances).
    pub breakpoints: Vec<f64>,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self { half_width: 20.0, rel_tol: 1e-7, max_intervals: 4000, sideband_step: 0.004, breakpoints: Vec::new() }
    }
}

#[derive(Clone, Debug)]
struct Sideband {
    start: f64,
    step: f64,
    /// `values[b][k]` at `start + k step`.
    values: Vec<Vec<C64>>,
}

impl Sideband {
    fn at(&self, b: usize, w: f64) -> C64 {
        let v = &self.values[b];
        let x = (w - self.start) / self.step;
        if !(x >= 1.0 && x < (v.len() - 2) as f64) {
            return ZERO;
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
        p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

/// Precomputed resolvent data for one Liouvillian.
#[derive(Clone, Debug)]
pub struct EmissionModel {
    pub frame: f64,
    b2: f64,
    /// Basis states reachable from `|e>`, with `E00` first.
    pub active: Vec<usize>,
    /// Hessenberg form `L1 = Q H Q†`, row-major.
    h: Vec<C64>,
    q_eb: Vec<Vec<C64>>,
    q_be: Vec<Vec<C64>>,
    qv0: Vec<C64>,
    lc: Vec<C64>,
    /// Eigenvalues of the single-excitation and coherence blocks.
    pub lambda: Vec<C64>,
    pub mu: Vec<C64>,
    sideband: Option<Sideband>,
    /// `ρ̂_eb(0)`, giving the one-colour spectrum.
    rho_hat_zero: Vec<C64>,
}

fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    m.clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or(Error::Convergence { what: "Schur decomposition", iterations: 0 })
}

/// Gaussian elimination with partial pivoting on a small dense system, row-major `a`.
fn solve_dense(a: &mut [C64], b: &mut [C64], n: usize) -> Result<()> {
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap_or(k);
        if a[p * n + k].norm() == 0.0 {
            return Err(Error::Degenerate { omega: f64::NAN, modulus: 0.0 });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let inv = ONE / a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] * inv;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let t = a[k * n + j];
                a[i * n + j] -= f * t;
            }
            let t = b[k];
            b[i] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k * n + j] * b[j];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(())
}

impl EmissionModel {
    pub fn new(l: &Liouvillian, corr: &PhononCorrelations, settings: &SpectrumSettings) -> Result<Self> {
        use SystemBasis as B;
        let d = B::DIM;
        let lm = &l.matrix;
        // states coupled to |e><e| through the generator, ground state excluded
        let mut reached = vec![false; d * d];
        let start = d * B::E00 + B::E00;
        reached[start] = true;
        let mut stack = vec![start];
        while let Some(j) = stack.pop() {
            for i in 0..d * d {
                let (a, b) = (i / d, i % d);
                if a == B::G00 || b == B::G00 || reached[i] || lm[(i, j)] == ZERO {
                    continue;
                }
                reached[i] = true;
                stack.push(i);
            }
        }
        let mut active = vec![B::E00];
        for s in [B::G10, B::G01] {
            if (0..d).any(|o| reached[d * s + o] || reached[d * o + s]) {
                active.push(s);
            }
        }
        let n = active.len();
        let m = n * n;
        let l1 = DMatrix::from_fn(m, m, |i, j| lm[(d * active[i / n] + active[i % n], d * active[j / n] + active[j % n])]);
        let lc_m = DMatrix::from_fn(n, n, |i, j| lm[(d * B::G00 + active[i], d * B::G00 + active[j])]);
        // the blocks must be closed under the generator
        let scale = lm.camax();
        for &sj in &active {
            for i in 0..d {
                if !active.contains(&i) && lm[(d * B::G00 + i, d * B::G00 + sj)].norm() > 1e-14 * scale {
                    return Err(Error::Domain("coherence block is not closed".into()));
                }
            }
        }
        let lambda = eigenvalues(&l1)?;
        let mu = eigenvalues(&lc_m)?;
        if lambda.iter().any(|v| v.re >= 0.0) {
            return Err(Error::Domain("single-excitation block has a non-decaying mode".into()));
        }
        let (q, hm) = l1.clone().hessenberg().unpack();
        let h: Vec<C64> = (0..m * m).map(|k| hm[(k / m, k % m)]).collect();
        let q_eb = (0..n).map(|b| (0..m).map(|k| q[(b, k)]).collect()).collect();
        let q_be = (0..n).map(|b| (0..m).map(|k| q[(b * n, k)]).collect()).collect();
        let qv0 = (0..m).map(|k| q[(0, k)].conj()).collect();
        let lc: Vec<C64> = (0..n * n).map(|k| lc_m[(k / n, k % n)]).collect();
        let b2 = corr.b0 * corr.b0;
        let mut model = Self {
            frame: l.params.frame,
            b2,
            active,
            h,
            q_eb,
            q_be,
            qv0,
            lc,
            lambda,
            mu,
            sideband: None,
            rho_hat_zero: Vec::new(),
        };
        let (rz, _) = model.rho_hat(0.0)?;
        model.rho_hat_zero = rz[..n].to_vec();
        if corr.env.alpha > 0.0 {
            model.sideband = Some(Self::tabulate_sideband(&lc_m, corr, settings.sideband_step, n)?);
        }
        Ok(model)
    }

    fn tabulate_sideband(lc: &DMatrix<C64>, corr: &PhononCorrelations, step: f64, n: usize) -> Result<Sideband> {
        let dt = corr.dtau;
        let len = corr.len();
        let target = (2.0 * std::f64::consts::PI / (step * dt)).ceil() as usize;
        let nfft = target.max(4 * len).next_power_of_two();
        let p = (lc * C64::new(dt, 0.0)).exp();
        let w = simpson_weights(len, dt);
        let mut rows = vec![vec![ZERO; nfft]; n];
        let mut r: Vec<C64> = (0..n).map(|b| if b == 0 { ONE } else { ZERO }).collect();
        for k in 0..len {
            let f = (corr.phi[k].exp() - ONE) * w[k];
            for b in 0..n {
                rows[b][k] = f * r[b];
            }
            r = (0..n).map(|c| (0..n).map(|a| r[a] * p[(a, c)]).sum()).collect();
        }
        let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
        let dw = 2.0 * std::f64::consts::PI / (nfft as f64 * dt);
        // keep |ω| up to 40 cutoffs, well past where the sideband is negligible
        let keep = ((40.0 * corr.env.nu_c / dw).ceil() as usize).min(nfft / 2 - 2);
        let mut values = Vec::with_capacity(n);
        for mut row in rows {
            fft.process(&mut row);
            let mut v = Vec::with_capacity(2 * keep + 1);
            for j in (1..=keep).rev() {
                v.push(row[nfft - j]);
            }
            v.extend_from_slice(&row[..=keep]);
            values.push(v);
        }
        Ok(Sideband { start: -(keep as f64) * dw, step: dw, values })
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    /// `(ρ̂_eb(s), ρ̂_be(s))` for the active states `b`.
    pub fn rho_hat(&self, s: f64) -> Result<([C64; MAX_ACTIVE], [C64; MAX_ACTIVE])> {
        let n = self.active.len();
        let m = n * n;
        let mut a = [ZERO; MAX_BLOCK * MAX_BLOCK];
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] = -self.h[i * m + j];
            }
            a[i * m + i] += C64::new(0.0, s);
        }
        let mut y = [ZERO; MAX_BLOCK];
        y[..m].copy_from_slice(&self.qv0);
        // upper Hessenberg: only the subdiagonal needs elimination
        for k in 0..m.saturating_sub(1) {
            if a[(k + 1) * m + k].norm() > a[k * m + k].norm() {
                for j in k..m {
                    a.swap(k * m + j, (k + 1) * m + j);
                }
                y.swap(k, k + 1);
            }
            let piv = a[k * m + k];
            if piv == ZERO {
                return Err(Error::Degenerate { omega: s, modulus: 0.0 });
            }
            let f = a[(k + 1) * m + k] / piv;
            if f != ZERO {
                for j in k..m {
                    let t = a[k * m + j];
                    a[(k + 1) * m + j] -= f * t;
                }
                let t = y[k];
                y[k + 1] -= f * t;
            }
        }
        for k in (0..m).rev() {
            let mut acc = y[k];
            for j in k + 1..m {
                acc -= a[k * m + j] * y[j];
            }
            let d = a[k * m + k];
            if d == ZERO {
                return Err(Error::Degenerate { omega: s, modulus: 0.0 });
            }
            y[k] = acc / d;
        }
        let mut eb = [ZERO; MAX_ACTIVE];
        let mut be = [ZERO; MAX_ACTIVE];
        for b in 0..n {
            eb[b] = (0..m).map(|k| self.q_eb[b][k] * y[k]).sum();
            be[b] = (0..m).map(|k| self.q_be[b][k] * y[k]).sum();
        }
        Ok((eb, be))
    }

    /// `f_b(ω)` for the active states, rotating-frame frequency.
    pub fn emission_kernel(&self, w: f64) -> Result<[C64; MAX_ACTIVE]> {
        let n = self.active.len();
        // row e of (iω - Lc)^-1: solve (iω - Lc)^T x = e_0
        let mut a = [ZERO; MAX_ACTIVE * MAX_ACTIVE];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = -self.lc[j * n + i];
            }
            a[i * n + i] += C64::new(0.0, w);
        }
        let mut x = [ZERO; MAX_ACTIVE];
        x[0] = ONE;
        solve_dense(&mut a[..n * n], &mut x[..n], n)?;
        if let Some(sb) = &self.sideband {
            for (b, xb) in x.iter_mut().enumerate().take(n) {
                *xb += sb.at(b, w);
            }
        }
        for xb in x.iter_mut() {
            *xb *= self.b2;
        }
        Ok(x)
    }

    /// `S0(ω, ω')`, rotating-frame frequencies.
    pub fn s0(&self, w: f64, wp: f64) -> Result<C64> {
        let f = self.emission_kernel(w)?;
        let fp = self.emission_kernel(wp)?;
        let (eb, be) = self.rho_hat(w - wp)?;
        Ok(Self::combine(&f, &fp, &eb, &be, self.active.len()))
    }

    fn combine(f: &[C64], fp: &[C64], eb: &[C64], be: &[C64], n: usize) -> C64 {
        (0..n).map(|b| f[b] * eb[b] + fp[b].conj() * be[b]).sum()
    }

    /// One-colour spectrum `S0(ω, ω)`.
    pub fn s0_diagonal(&self, w: f64) -> Result<f64> {
        let f = self.emission_kernel(w)?;
        Ok(2.0 * (0..self.active.len()).map(|b| (f[b] * self.rho_hat_zero[b]).re).sum::<f64>())
    }
}

fn sorted_points(mut p: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    p.retain(|x| x.is_finite() && *x > lo && *x < hi);
    p.push(lo);
    p.push(hi);
    p.sort_by(f64::total_cmp);
    p.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    p
}

/// `I` and `P` by nested adaptive quadrature. `filter` maps a lab-frame
/// frequency to `G(ω)`.
pub fn indistinguishability_resolvent<F>(model: &EmissionModel, filter: F, gamma_0: f64, settings: &SpectrumSettings) -> Result<IndistResult>
where
    F: Fn(f64) -> Result<C64>,
{
    let frame = model.frame;
    let (lo, hi) = (-settings.half_width, settings.half_width);
    let mut outer_pts: Vec<f64> = model.mu.iter().map(|m| m.im).collect();
    outer_pts.extend(settings.breakpoints.iter().map(|b| b - frame));
    let outer_pts = sorted_points(outer_pts, lo, hi);
    let g2 = |w: f64| -> Result<f64> { Ok(filter(frame + w)?.norm_sqr()) };

    let mut failure: Option<Error> = None;
    let mut guard = |r: Result<f64>| -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let den_settings = QuadSettings { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: settings.max_intervals };
    let den = integrate(|w| guard(g2(w).and_then(|g| Ok(g * model.s0_diagonal(w)?))), &outer_pts, &den_settings)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let d = den.value;
    if !(d > 0.0) {
        return Err(Error::Domain("no emission inside the integration window".into()));
    }
    let n = model.n_active();
    let width = hi - lo;
    let inner_settings = QuadSettings {
        abs_tol: 1e-3 * settings.rel_tol * d * d / width,
        rel_tol: 1e-3 * settings.rel_tol,
        max_intervals: settings.max_intervals,
    };
    let outer_settings = QuadSettings { abs_tol: 0.1 * settings.rel_tol * d * d, rel_tol: 0.1 * settings.rel_tol, max_intervals: settings.max_intervals };
    let mut evaluations = den.evaluations;
    let mut inner_error = 0.0_f64;
    let mut outer_f = |w: f64| -> Result<f64> {
        let gw = g2(w)?;
        if gw == 0.0 {
            return Ok(0.0);
        }
        let f = model.emission_kernel(w)?;
        let mut pts: Vec<f64> = outer_pts.clone();
        pts.extend(model.lambda.iter().map(|l| w - l.im));
        let pts = sorted_points(pts, lo, hi);
        let mut err: Option<Error> = None;
        let inner = integrate(
            |wp: f64| -> f64 {
                let r = (|| -> Result<f64> {
                    let gp = g2(wp)?;
                    let fp = model.emission_kernel(wp)?;
                    let (eb, be) = model.rho_hat(w - wp)?;
                    Ok(gp * EmissionModel::combine(&f, &fp, &eb, &be, n).norm_sqr())
                })();
                r.unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    0.0
                })
            },
            &pts,
            &inner_settings,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        evaluations += inner.evaluations;
        inner_error = inner_error.max(inner.error);
        Ok(gw * inner.value)
    };
    let mut failure: Option<Error> = None;
    let num = integrate(
        |w| match outer_f(w) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &outer_pts,
        &outer_settings,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let i = num.value / (d * d);
    let error = (num.error + width * inner_error) / (d * d) + 2.0 * i * den.error / d;
    let diagnostics = Diagnostics { route: "resolvent".into(), evaluations: evaluations + num.evaluations, error, ..Default::default() };
    Ok(IndistResult::new(i, 0.5 * gamma_0 * d, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{two_time_dipole, SystemBasis, TimeGrid};
    use crate::ldos::EmitterCoupling;
    use crate::mapping::MappedPair;
    use crate::observables::indistinguishability_grid;
    use crate::phonons::PhononEnv;

    fn corr(alpha: f64) -> PhononCorrelations {
        PhononCorrelations::tabulate(&PhononEnv::new(alpha, 1.45, 4.0).unwrap(), 0.01, 1e-10).unwrap()
    }

    #[test]
    fn bare_emitter_is_indistinguishable() {
        let l = Liouvillian::assemble(&MappedPair::single_mode(0.0, 1000.0, 0.0), &EmitterCoupling::new(6e-4, 0.05, 1000.0).unwrap(), &corr(0.0), 1000.0).unwrap();
        let m = EmissionModel::new(&l, &corr(0.0), &SpectrumSettings::default()).unwrap();
        assert_eq!(m.active, vec![SystemBasis::E00]);
        let r = indistinguishability_resolvent(&m, |_| Ok(ONE), 6e-4, &SpectrumSettings::default()).unwrap();
        // the window truncates the Lorentzian tails at the 1e-3 level
        assert!((r.indistinguishability - 1.0).abs() < 2e-3, "{}", r.indistinguishability);
    }

    #[test]
    fn matches_grid_route_without_phonons() {
        let pair = MappedPair::single_mode(0.05, 1000.1, 0.4);
        let em = EmitterCoupling::new(6e-4, 0.1, 1000.0).unwrap();
        let c = corr(0.0);
        let l = Liouvillian::assemble(&pair, &em, &c, 1000.0).unwrap();
        let m = EmissionModel::new(&l, &c, &SpectrumSettings::default()).unwrap();
        // spectrum values against the time-domain grid at a few points
        let mut rho0 = crate::dynamics::Op::zeros();
        rho0[(SystemBasis::E00, SystemBasis::E00)] = ONE;
        let grid = TimeGrid { dt: 0.1, n: 2048 };
        let tt = two_time_dipole(&l, &rho0, &c, grid);
        let s = super::super::dipole_spectrum(&tt).unwrap();
        let k0 = s.omega.iter().position(|&w| (w - 1000.0).abs() < 1e-12).unwrap();
        for (di, dj) in [(0i64, 0i64), (3, -2), (10, 4)] {
            let (i, j) = ((k0 as i64 + di) as usize, (k0 as i64 + dj) as usize);
            let exact = m.s0(s.omega[i] - 1000.0, s.omega[j] - 1000.0).unwrap();
            assert!((exact - s.at(i, j)).norm() < 1e-3 * exact.norm().max(1.0), "{exact} {}", s.at(i, j));
        }
        let wide = SpectrumSettings { half_width: 200.0, ..Default::default() };
        let a = indistinguishability_resolvent(&m, |_| Ok(ONE), 6e-4, &wide).unwrap();
        let b = indistinguishability_grid(&tt, |_| Ok(ONE), 6e-4).unwrap();
        assert!((a.indistinguishability - b.indistinguishability).abs() < 1e-3, "{} {}", a.indistinguishability, b.indistinguishability);
    }

    #[test]
    fn one_colour_matches_two_colour_diagonal() {
        let pair = MappedPair::new(0.08, 1000.5, 999.0, 1.0, 0.3, 0.5, 2.0).unwrap();
        let c = corr(0.069);
        let l = Liouvillian::assemble(&pair, &EmitterCoupling::new(6e-4, 3e-5, 1000.0).unwrap(), &c, 1000.0).unwrap();
        let m = EmissionModel::new(&l, &c, &SpectrumSettings::default()).unwrap();
        assert_eq!(m.n_active(), 3);
        for w in [-3.0, -0.2, 0.0, 0.7, 2.5] {
            let a = m.s0(w, w).unwrap();
            let b = m.s0_diagonal(w).unwrap();
            assert!((a.re - b).abs() < 1e-10 * b.abs().max(1e-6) && a.im.abs() < 1e-10 * b.abs().max(1e-6));
            // Hermiticity in the frequency pair
            let x = m.s0(w, 0.3).unwrap();
            let y = m.s0(0.3, w).unwrap();
            assert!((x - y.conj()).norm() < 1e-12 * x.norm().max(1e-9));
        }
    }
}

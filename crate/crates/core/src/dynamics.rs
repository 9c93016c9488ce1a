//! Polaron-frame master equation on the single-excitation space
//! `{|g,0,0>, |e,0,0>, |g,1,0>, |g,0,1>}`.
//!
//! Density operators are vectorised row-major, `vec(ρ)[4i + j] = ρ_ij`, so that
//! `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`. All frequencies are taken relative to a
//! rotating frame `frame` (meV), applied uniformly to every excitation.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ldos::EmitterCoupling;
use crate::mapping::MappedPair;
use crate::phonons::PhononCorrelations;
use crate::quad::simpson_weights;

pub type Op = SMatrix<C64, 4, 4>;
pub type Super = SMatrix<C64, 16, 16>;
pub type VecOp = SVector<C64, 16>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Basis labels.
pub struct SystemBasis;

impl SystemBasis {
    pub const DIM: usize = 4;
    pub const G00: usize = 0;
    pub const E00: usize = 1;
    pub const G10: usize = 2;
    pub const G01: usize = 3;

    pub fn ket_bra(i: usize, j: usize) -> Op {
        let mut m = Op::zeros();
        m[(i, j)] = ONE;
        m
    }

    pub fn excited() -> Op {
        Self::ket_bra(Self::E00, Self::E00)
    }
}

pub fn sigma() -> Op {
    SystemBasis::ket_bra(SystemBasis::G00, SystemBasis::E00)
}

pub fn a1() -> Op {
    SystemBasis::ket_bra(SystemBasis::G00, SystemBasis::G10)
}

pub fn a2() -> Op {
    SystemBasis::ket_bra(SystemBasis::G00, SystemBasis::G01)
}

/// `σ† a1 = |e,0,0><g,1,0|`. Built directly: in the truncated basis the
/// product `σ a1†` would pass through a state outside the space.
fn swap_up() -> Op {
    SystemBasis::ket_bra(SystemBasis::E00, SystemBasis::G10)
}

/// `X = σ† a1 + σ a1†`
pub fn x_op() -> Op {
    swap_up() + swap_up().adjoint()
}

/// `Y = i (σ† a1 - σ a1†)`
pub fn y_op() -> Op {
    (swap_up() - swap_up().adjoint()) * I
}

pub fn vec_op(rho: &Op) -> VecOp {
    VecOp::from_fn(|k, _| rho[(k / 4, k % 4)])
}

pub fn unvec_op(v: &VecOp) -> Op {
    Op::from_fn(|i, j| v[4 * i + j])
}

/// Superoperator of `ρ -> a ρ b`.
pub fn sandwich(a: &Op, b: &Op) -> Super {
    a.kronecker(&b.transpose())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian {
    pub matrix: Op,
    /// Rotating-frame frequency, meV.
    pub frame: f64,
}

/// `H0 = ω_eg σ†σ + Σ ω_i a_i† a_i + B0 g X + (V a1† a2 + h.c.)`, `V = V0 e^{iφ}`.
pub fn build_h0(pair: &MappedPair, emitter: &EmitterCoupling, b0: f64, frame: f64) -> Hamiltonian {
    use SystemBasis as B;
    let mut h = Op::zeros();
    h[(B::E00, B::E00)] = C64::new(emitter.omega_eg - frame, 0.0);
    h[(B::G10, B::G10)] = C64::new(pair.omega_1 - frame, 0.0);
    h[(B::G01, B::G01)] = C64::new(pair.omega_2 - frame, 0.0);
    h += x_op() * C64::new(b0 * pair.g, 0.0);
    let v = C64::from_polar(pair.v0, pair.varphi);
    h[(B::G10, B::G01)] += v;
    h[(B::G01, B::G10)] += v.conj();
    Hamiltonian { matrix: h, frame }
}

/// `Θ_ζ = ∫_0^∞ ζ(-τ) Λ_ζ(τ) dτ` for `ζ ∈ {X, Y}`, evaluated in the eigenbasis of `H0`.
pub fn theta_ops(h0: &Hamiltonian, corr: &PhononCorrelations) -> Result<(Op, Op)> {
    if corr.env.alpha == 0.0 {
        return Ok((Op::zeros(), Op::zeros()));
    }
    let eig = h0.matrix.symmetric_eigen();
    let u = eig.eigenvectors;
    let e = eig.eigenvalues;
    let n = corr.len();
    let w = simpson_weights(n, corr.dtau);
    let lx: Vec<C64> = (0..n).map(|k| corr.lambda_x_at(k) * w[k]).collect();
    let ly: Vec<C64> = (0..n).map(|k| corr.lambda_y_at(k) * w[k]).collect();
    let mut kx = Op::zeros();
    let mut ky = Op::zeros();
    for m in 0..4 {
        for l in 0..4 {
            let de = e[m] - e[l];
            let step = C64::from_polar(1.0, -de * corr.dtau);
            let mut ph = ONE;
            let (mut sx, mut sy) = (ZERO, ZERO);
            for k in 0..n {
                sx += ph * lx[k];
                sy += ph * ly[k];
                ph *= step;
                if k % 64 == 63 {
                    // re-anchor the phase to avoid drift from repeated products
                    ph = C64::from_polar(1.0, -de * corr.dtau * (k + 1) as f64);
                }
            }
            kx[(m, l)] = sx;
            ky[(m, l)] = sy;
        }
    }
    let ud = u.adjoint();
    let xt = ud * x_op() * u;
    let yt = ud * y_op() * u;
    let tx = u * xt.component_mul(&kx) * ud;
    let ty = u * yt.component_mul(&ky) * ud;
    Ok((tx, ty))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvillianParams {
    pub pair: MappedPair,
    pub emitter: EmitterCoupling,
    pub b0: f64,
    pub frame: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Liouvillian {
    pub matrix: Super,
    pub params: LiouvillianParams,
}

fn dissipator(c: &Op) -> Super {
    let id = Op::identity();
    let cdc = c.adjoint() * c;
    sandwich(c, &c.adjoint()) - (sandwich(&cdc, &id) + sandwich(&id, &cdc)) * C64::new(0.5, 0.0)
}

/// `L ρ = -i[H0, ρ] + D[√κ1 a1 + √κ2 a2] ρ + Γ_R D[σ] ρ
///        + g^2 Σ_ζ ([ζ, ρ Θ_ζ†] - [ζ, Θ_ζ ρ])`.
pub fn build_liouvillian(h0: &Hamiltonian, pair: &MappedPair, emitter: &EmitterCoupling, theta: (&Op, &Op), b0: f64) -> Liouvillian {
    let id = Op::identity();
    let h = &h0.matrix;
    let mut l = (sandwich(h, &id) - sandwich(&id, h)) * (-I);
    let c = a1() * C64::new(pair.kappa_1.sqrt(), 0.0) + a2() * C64::new(pair.kappa_2.sqrt(), 0.0);
    l += dissipator(&c);
    l += dissipator(&sigma()) * C64::new(emitter.gamma_r, 0.0);
    let g2 = C64::new(pair.g * pair.g, 0.0);
    for (z, t) in [(x_op(), theta.0), (y_op(), theta.1)] {
        let td = t.adjoint();
        let term = sandwich(&z, &td) - sandwich(&id, &(td * z)) - sandwich(&(z * t), &id) + sandwich(t, &z);
        l += term * g2;
    }
    // make Tr L(ρ) = 0 exact in floating point; rounding drift otherwise grows linearly in t
    let g = 5 * SystemBasis::G00;
    for j in 0..16 {
        l[(g, j)] = -(1..SystemBasis::DIM).map(|i| l[(5 * i, j)]).sum::<C64>();
    }
    Liouvillian { matrix: l, params: LiouvillianParams { pair: *pair, emitter: *emitter, b0, frame: h0.frame } }
}

impl Liouvillian {
    /// Assemble the full generator from model parameters.
    pub fn assemble(pair: &MappedPair, emitter: &EmitterCoupling, corr: &PhononCorrelations, frame: f64) -> Result<Self> {
        let h0 = build_h0(pair, emitter, corr.b0, frame);
        let (tx, ty) = theta_ops(&h0, corr)?;
        Ok(build_liouvillian(&h0, pair, emitter, (&tx, &ty), corr.b0))
    }

    pub fn apply(&self, rho: &Op) -> Op {
        unvec_op(&(self.matrix * vec_op(rho)))
    }

    pub fn propagator(&self, t: f64) -> Super {
        (self.matrix * C64::new(t, 0.0)).exp()
    }

    /// Largest decay rate among the generator's eigenvalues, meV.
    pub fn fastest_rate(&self) -> f64 {
        self.eigenvalues().iter().map(|l| -l.re).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.matrix
            .clone_owned()
            .schur()
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default()
    }
}

pub fn evolve(l: &Liouvillian, rho0: &Op, t: f64) -> Result<Op> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolution time {t} must be non-negative")));
    }
    Ok(unvec_op(&(l.propagator(t) * vec_op(rho0))))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    /// Step `min(2π/max|E_m - E_n|, 1/κ_max, 1/(4ν_c))/20` (the phonon term bounds
    /// the step through the sideband width), and enough steps for the excited
    /// population to drop below `pop_tol`.
    pub fn for_dynamics(l: &Liouvillian, h0: &Hamiltonian, nu_c: f64, pop_tol: f64) -> Self {
        let e = h0.matrix.symmetric_eigen().eigenvalues;
        let mut spread: f64 = 0.0;
        for a in e.iter() {
            for b in e.iter() {
                spread = spread.max((a - b).abs());
            }
        }
        let kmax = l.params.pair.kappa_sum().max(l.params.emitter.gamma_r);
        let mut scale = f64::INFINITY;
        if spread > 0.0 {
            scale = scale.min(2.0 * std::f64::consts::PI / spread);
        }
        if kmax > 0.0 {
            scale = scale.min(1.0 / kmax);
        }
        scale = scale.min(1.0 / (4.0 * nu_c));
        let dt = scale / 20.0;
        let slow = l.eigenvalues().iter().map(|v| -v.re).filter(|r| *r > 1e-12).fold(f64::INFINITY, f64::min);
        let t_max = if slow.is_finite() { pop_tol.recip().ln() / slow } else { 100.0 };
        Self { dt, n: (t_max / dt).ceil() as usize + 1 }
    }
}

/// `C(t, t') = <σ†(t) σ(t')>` on a uniform grid, lab-frame up to the
/// rotating-frame phase `exp(i frame (t - t'))`, which is restored on the
/// frequency axis of the spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTimeGrid {
    pub dt: f64,
    pub n: usize,
    /// Row-major, `values[i n + j] = C(t_i, t_j)`.
    pub values: Vec<C64>,
    pub frame: f64,
    /// `max_j |C(t_last, t_j)| / max |C|`; large values mean the grid is too short.
    pub tail_ratio: f64,
}

impl TwoTimeGrid {
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.n + j]
    }

    pub fn is_decayed(&self) -> bool {
        self.tail_ratio <= 1e-4
    }
}

/// Quantum-regression two-time dipole correlation, dressed with the phonon
/// factor `B0^2 exp(φ(t - t'))`.
pub fn two_time_dipole(l: &Liouvillian, rho0: &Op, corr: &PhononCorrelations, grid: TimeGrid) -> TwoTimeGrid {
    let n = grid.n;
    let p = l.propagator(grid.dt);
    let pt = p.transpose();
    let s = sigma();
    let mut v = Vec::with_capacity(n);
    let mut rho = vec_op(rho0);
    for _ in 0..n {
        v.push(vec_op(&(s * unvec_op(&rho))));
        rho = p * rho;
    }
    // row vectors e_(g,e)^T P^m
    let mut w = Vec::with_capacity(n);
    let mut r = VecOp::zeros();
    r[4 * SystemBasis::G00 + SystemBasis::E00] = ONE;
    for _ in 0..n {
        w.push(r);
        r = pt * r;
    }
    let b2 = corr.b0 * corr.b0;
    let dress: Vec<C64> = (0..n).map(|m| b2 * corr.phi_at(m as f64 * grid.dt).exp()).collect();
    let mut values = vec![ZERO; n * n];
    for j in 0..n {
        for m in 0..n - j {
            let c = dress[m] * w[m].dot(&v[j]);
            values[(j + m) * n + j] = c;
            values[j * n + j + m] = c.conj();
        }
    }
    let peak = values.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tail = (0..n).map(|j| values[(n - 1) * n + j].norm()).fold(0.0, f64::max);
    TwoTimeGrid {
        dt: grid.dt,
        n,
        values,
        frame: l.params.frame,
        tail_ratio: if peak > 0.0 { tail / peak } else { 0.0 },
    }
}

/// Trace, Hermiticity and positivity of `ρ(t)` sampled along a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sanity {
    pub max_trace_dev: f64,
    pub max_hermiticity_dev: f64,
    pub min_eigenvalue: f64,
}

impl Sanity {
    pub fn merge(self, o: Sanity) -> Sanity {
        Sanity {
            max_trace_dev: self.max_trace_dev.max(o.max_trace_dev),
            max_hermiticity_dev: self.max_hermiticity_dev.max(o.max_hermiticity_dev),
            min_eigenvalue: self.min_eigenvalue.min(o.min_eigenvalue),
        }
    }

    pub fn ok(&self) -> bool {
        self.max_trace_dev < 1e-12 && self.max_hermiticity_dev < 1e-12 && self.min_eigenvalue >= -1e-6
    }
}

pub fn density_sanity(rho: &Op) -> Sanity {
    let tr = rho.trace();
    let herm = (rho - rho.adjoint()).camax();
    let hs = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let min_eig = hs.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Sanity { max_trace_dev: (tr - ONE).norm(), max_hermiticity_dev: herm, min_eigenvalue: min_eig }
}

/// Check `ρ(t)` on `samples` times spread geometrically up to `t_max`.
pub fn trajectory_sanity(l: &Liouvillian, rho0: &Op, t_max: f64, samples: usize) -> Result<Sanity> {
    let mut s = density_sanity(rho0);
    let t0 = (t_max * 1e-4).max(1e-6);
    for k in 0..samples {
        let t = t0 * (t_max / t0).powf(k as f64 / (samples - 1).max(1) as f64);
        s = s.merge(density_sanity(&evolve(l, rho0, t)?));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonons::PhononEnv;

    fn emitter(w: f64) -> EmitterCoupling {
        EmitterCoupling::new(6e-4, 3e-5, w).unwrap()
    }

    fn no_phonons() -> PhononCorrelations {
        PhononCorrelations::tabulate(&PhononEnv::new(0.0, 1.45, 4.0).unwrap(), 0.01, 1e-10).unwrap()
    }

    #[test]
    fn jaynes_cummings_block() {
        let pair = MappedPair::single_mode(0.1, 5.0, 0.2);
        let h = build_h0(&pair, &emitter(5.0), 1.0, 5.0);
        assert!((h.matrix - h.matrix.adjoint()).camax() < 1e-15);
        let mut e: Vec<f64> = h.matrix.symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        // 0 (ground), -g, 0 (mode 2 at detuning 0), +g
        assert!((e[0] + 0.1).abs() < 1e-14 && (e[3] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn operators_stay_in_basis() {
        // every operator maps the single-excitation space into itself by construction;
        // check that lowering operators annihilate the ground state
        let g = SystemBasis::ket_bra(SystemBasis::G00, SystemBasis::G00);
        for op in [sigma(), a1(), a2()] {
            assert_eq!(op * g, Op::zeros());
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        let env = PhononEnv::new(0.069, 1.45, 4.0).unwrap();
        let corr = PhononCorrelations::tabulate(&env, 0.01, 1e-10).unwrap();
        let pair = MappedPair::new(0.078, 999.9, 998.4, 3.7, 2.9, 3.2, 2.6).unwrap();
        let l = Liouvillian::assemble(&pair, &emitter(1000.0), &corr, 1000.0).unwrap();
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..100 {
            let a = Op::from_fn(|_, _| C64::new(rnd(), rnd()));
            let rho = a + a.adjoint();
            let d = l.apply(&rho);
            assert!(d.trace().norm() < 1e-12);
            assert!((d - d.adjoint()).camax() < 1e-12);
        }
    }

    #[test]
    fn radiative_decay() {
        let pair = MappedPair::single_mode(0.0, 5.0, 0.2);
        let em = EmitterCoupling::new(6e-4, 0.05, 5.0).unwrap();
        let l = Liouvillian::assemble(&pair, &em, &no_phonons(), 5.0).unwrap();
        let rho = evolve(&l, &SystemBasis::excited(), 7.0).unwrap();
        assert!((rho[(1, 1)].re - (-0.05f64 * 7.0).exp()).abs() < 1e-13);
        assert_eq!(evolve(&l, &SystemBasis::excited(), 0.0).unwrap(), SystemBasis::excited());
    }

    #[test]
    fn degenerate_theta_is_scalar_times_operator() {
        // g = 0, V0 = 0 and all frequencies equal: every level sits at zero
        let env = PhononEnv::new(0.069, 1.45, 4.0).unwrap();
        let corr = PhononCorrelations::tabulate(&env, 0.01, 1e-10).unwrap();
        let pair = MappedPair::single_mode(0.0, 7.0, 0.1);
        let h = build_h0(&pair, &emitter(7.0), corr.b0, 7.0);
        let (tx, _) = theta_ops(&h, &corr).unwrap();
        let w = simpson_weights(corr.len(), corr.dtau);
        let s: C64 = (0..corr.len()).map(|k| corr.lambda_x_at(k) * w[k]).sum();
        assert!((tx - x_op() * s).camax() < 1e-14);
    }

    #[test]
    fn collective_decay_super_and_subradiant() {
        // with κ1 = κ2 the symmetric one-photon state decays, the antisymmetric one is dark
        let pair = MappedPair::new(0.0, 3.0, 3.0, 0.0, 0.0, 0.4, 0.4).unwrap();
        let l = Liouvillian::assemble(&pair, &emitter(3.0), &no_phonons(), 3.0).unwrap();
        let s = 0.5f64.sqrt();
        let ket = |sign: f64| {
            let mut m = Op::zeros();
            let v = [0.0, 0.0, s, sign * s];
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] = C64::new(v[i] * v[j], 0.0);
                }
            }
            m
        };
        let pop = |rho: &Op| (rho[(2, 2)] + rho[(3, 3)]).re;
        let t = 2.0;
        let sym = evolve(&l, &ket(1.0), t).unwrap();
        let anti = evolve(&l, &ket(-1.0), t).unwrap();
        assert!((pop(&sym) - (-0.8f64 * t).exp()).abs() < 1e-12);
        assert!((pop(&anti) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_level_correlation() {
        let gr = 0.2;
        let pair = MappedPair::single_mode(0.0, 5.0, 0.2);
        let em = EmitterCoupling::new(6e-4, gr, 5.3).unwrap();
        let l = Liouvillian::assemble(&pair, &em, &no_phonons(), 5.0).unwrap();
        let c = two_time_dipole(&l, &SystemBasis::excited(), &no_phonons(), TimeGrid { dt: 0.05, n: 200 });
        for (i, j) in [(0, 0), (10, 3), (3, 10), (150, 20)] {
            let (t, tp) = (i as f64 * 0.05, j as f64 * 0.05);
            // rotating frame at 5.0, emitter at 5.3
            let exact = C64::from_polar((-gr * (t + tp) / 2.0).exp(), 0.3 * (t - tp));
            assert!((c.at(i, j) - exact).norm() < 1e-12, "{i},{j}");
        }
        for i in 0..50 {
            let d = c.at(i, i);
            assert!(d.im.abs() < 1e-15 && d.re >= 0.0 && d.re <= 1.0);
        }
    }
}

//! Unit conventions: energies and rates in meV with hbar = 1, times in 1/meV.

/// Reduced Planck constant in meV ps, used only to display times in ps.
pub const HBAR_MEV_PS: f64 = 0.65821;

/// Boltzmann constant in meV/K.
pub const KB_MEV_PER_K: f64 = 0.086_173_3;

pub fn time_to_ps(t: f64) -> f64 {
    t * HBAR_MEV_PS
}

pub fn ps_to_time(ps: f64) -> f64 {
    ps / HBAR_MEV_PS
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct SimplexSettings {
    pub max_evals: usize,
    /// Stop when the simplex values and vertices agree to these tolerances.
    pub f_tol: f64,
    pub x_tol: f64,
    /// Number of restarts from a fresh, randomly oriented simplex around the best point.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-15, x_tol: 1e-12, restarts: 2, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Downhill simplex minimisation. Non-finite objective values are treated as +∞,
/// which confines the search to the feasible region.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], settings: &SimplexSettings) -> SimplexResult {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0);
    let mut evals = 1;
    for round in 0..=settings.restarts {
        let mut pts: Vec<Vec<f64>> = vec![best_x.clone()];
        for i in 0..n {
            let mut p = best_x.clone();
            let s = if round == 0 { 1.0 } else { 0.5 + rng.random::<f64>() };
            let sign = if round > 0 && rng.random::<bool>() { -1.0 } else { 1.0 };
            p[i] += sign * s * step[i] / (1 << round.min(20)) as f64;
            pts.push(p);
        }
        let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
        evals += n;
        while evals < settings.max_evals {
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = idx.iter().map(|&i| pts[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            let spread = (0..n)
                .map(|j| pts.iter().map(|p| (p[j] - pts[0][j]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let fspread = (vals[n] - vals[0]).abs();
            if vals[n].is_finite() && fspread <= settings.f_tol * vals[0].abs().max(1e-300) && spread <= settings.x_tol {
                break;
            }
            if spread <= settings.x_tol * 1e-3 {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
            let xr = along(-1.0);
            let fr = eval(&xr);
            evals += 1;
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = eval(&xe);
                evals += 1;
                if fe < fr {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let x = along(-0.5);
                    let v = eval(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = eval(&x);
                    (x, v)
                };
                evals += 1;
                if fc < vals[n].min(fr) {
                    pts[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        let p: Vec<f64> = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
                        vals[i] = eval(&p);
                        pts[i] = p;
                    }
                    evals += n;
                }
            }
        }
        let (i, &v) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if v <= best_f {
            best_f = v;
            best_x = pts[i].clone();
        }
    }
    SimplexResult { x: best_x, f: best_f, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], &SimplexSettings { max_evals: 20000, ..Default::default() });
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_infinite_barrier() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::INFINITY } else { x[0] * x[0] + x[1] * x[1] };
        let r = nelder_mead(f, &[2.0, 1.0], &[0.3, 0.3], &SimplexSettings::default());
        assert!(r.x[0] >= 0.5);
        assert!((r.x[0] - 0.5).abs() < 1e-4 && r.x[1].abs() < 1e-4);
    }

    #[test]
    fn deterministic_for_seed() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2);
        let s = SimplexSettings { seed: 7, ..Default::default() };
        let a = nelder_mead(f, &[1.0, 1.0], &[0.1, 0.1], &s);
        let b = nelder_mead(f, &[1.0, 1.0], &[0.1, 0.1], &s);
        assert_eq!(a.x, b.x);
    }
}

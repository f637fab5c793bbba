//! Multi-start quasi-Newton minimization over products of unitary charts.
//!
//! Each block is parameterized as `U = U_seed exp(i sum_k theta_k G_k)` with
//! `G_k` the phase-0 Pauli strings on the block, so a `m x m` block carries
//! `m^2` real parameters and `theta = 0` reproduces the seed.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{expm_i_hermitian, matmul, C64};
use crate::operator::haar_random_unitary;
use crate::pauli::enumerate_all;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Central finite-difference step.
    pub fd_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 500,
            tolerance: 1e-8,
            seed: 0,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalUnitarySearchReport {
    pub best_value: f64,
    /// Chart coordinates of the best point, one vector per block.
    pub best_parameters: Vec<Vec<f64>>,
    /// The unitaries at the best point.
    pub best_unitaries: Vec<DMatrix<C64>>,
    /// Objective at the all-identity point.
    pub identity_value: f64,
    pub restarts_used: usize,
    pub converged: bool,
}

struct Chart {
    dims: Vec<usize>,
    generators: Vec<Vec<DMatrix<C64>>>,
}

impl Chart {
    fn new(dims: &[usize]) -> Result<Self> {
        let mut generators = Vec::with_capacity(dims.len());
        for &m in dims {
            if m == 0 || !m.is_power_of_two() {
                return Err(Error::InvalidDimensions(format!("block dimension {m}")));
            }
            let n = m.trailing_zeros() as usize;
            let gens = if n == 0 {
                vec![DMatrix::from_element(1, 1, C64::new(1.0, 0.0))]
            } else {
                enumerate_all(n)?
                    .map(|p| p.to_dense().map(|d| d.into_matrix()))
                    .collect::<Result<Vec<_>>>()?
            };
            generators.push(gens);
        }
        Ok(Self {
            dims: dims.to_vec(),
            generators,
        })
    }

    fn n_params(&self) -> usize {
        self.dims.iter().map(|m| m * m).sum()
    }

    fn split<'a>(&self, theta: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.dims.len());
        let mut off = 0;
        for m in &self.dims {
            out.push(&theta[off..off + m * m]);
            off += m * m;
        }
        out
    }

    fn unitaries(&self, seeds: &[DMatrix<C64>], theta: &[f64]) -> Vec<DMatrix<C64>> {
        self.split(theta)
            .into_iter()
            .enumerate()
            .map(|(j, th)| {
                let m = self.dims[j];
                let mut h = DMatrix::<C64>::zeros(m, m);
                for (g, t) in self.generators[j].iter().zip(th) {
                    if *t != 0.0 {
                        h += g * C64::new(*t, 0.0);
                    }
                }
                matmul(&seeds[j], &expm_i_hermitian(&h))
            })
            .collect()
    }
}

struct Outcome {
    value: f64,
    theta: Vec<f64>,
    seeds: Vec<DMatrix<C64>>,
    converged: bool,
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let orig = xp[k];
        xp[k] = orig + h;
        let fp = f(&xp);
        xp[k] = orig - h;
        let fm = f(&xp);
        xp[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}

/// BFGS on the inverse Hessian with Armijo backtracking.
fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: Vec<f64>, cfg: &SearchConfig) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    let mut fx = f(x.as_slice());
    let mut g = fd_gradient(f, x.as_slice(), cfg.fd_step);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    for _ in 0..cfg.max_iterations {
        if g.amax() < 1e-12 {
            return (x.as_slice().to_vec(), fx, true);
        }
        let mut p = -(&hinv * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            hinv = DMatrix::identity(n, n);
            p = -g.clone();
            slope = g.dot(&p);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &p * alpha;
            let ft = f(trial.as_slice());
            if ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent along a direction the gradient says descends: the
            // finite-difference gradient is at its noise floor.
            return (x.as_slice().to_vec(), fx, true);
        };
        let s = &x_new - &x;
        let g_new = fd_gradient(f, x_new.as_slice(), cfg.fd_step);
        let y = &g_new - &g;
        let df = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        g = g_new;
        if s.amax() < cfg.tolerance && df < cfg.tolerance {
            return (x.as_slice().to_vec(), fx, true);
        }
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            hinv += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
    }
    (x.as_slice().to_vec(), fx, false)
}

/// Minimizes `objective` over unitaries of the given block dimensions.
///
/// Restart 0 starts from identities, then one restart per warm start, then
/// Haar-random starting points up to `config.restarts` in total. Restarts run
/// in parallel with private RNG streams; ties go to the lowest restart index.
pub fn minimize_over_unitaries<F>(
    dims: &[usize],
    objective: F,
    config: &SearchConfig,
    warm_starts: &[Vec<DMatrix<C64>>],
) -> Result<LocalUnitarySearchReport>
where
    F: Fn(&[DMatrix<C64>]) -> f64 + Sync,
{
    let chart = Chart::new(dims)?;
    for w in warm_starts {
        if w.len() != dims.len() || w.iter().zip(dims).any(|(u, m)| u.nrows() != *m || u.ncols() != *m) {
            return Err(Error::InvalidDimensions("warm start does not match block dimensions".into()));
        }
    }
    let identities: Vec<DMatrix<C64>> = dims.iter().map(|m| DMatrix::identity(*m, *m)).collect();
    let total = config.restarts.max(1 + warm_starts.len());
    let n_params = chart.n_params();

    let outcomes: Vec<Outcome> = (0..total)
        .into_par_iter()
        .map(|r| {
            let seeds = if r == 0 {
                identities.clone()
            } else if r <= warm_starts.len() {
                warm_starts[r - 1].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(r as u64);
                dims.iter()
                    .map(|m| haar_random_unitary(*m, &mut rng).expect("positive dim").into_matrix())
                    .collect()
            };
            let f = |theta: &[f64]| objective(&chart.unitaries(&seeds, theta));
            let (theta, value, converged) = bfgs(&f, vec![0.0; n_params], config);
            Outcome {
                value,
                theta,
                seeds,
                converged,
            }
        })
        .collect();

    let identity_value = objective(&identities);
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(_, o)| o)
        .expect("at least one restart");
    Ok(LocalUnitarySearchReport {
        best_value: best.value,
        best_parameters: chart.split(&best.theta).into_iter().map(|s| s.to_vec()).collect(),
        best_unitaries: chart.unitaries(&best.seeds, &best.theta),
        identity_value,
        restarts_used: total,
        converged: best.converged,
    })
}

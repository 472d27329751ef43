//! Semidefinite relaxation of the per-iteration quadratic problem
//!
//! ```text
//! minimize  tr(B X)  subject to  X_ii + X_{i+m,i+m} <= c_i,  X >= 0
//! ```
//!
//! solved with a dense primal-dual interior-point method (HKM direction,
//! Mehrotra predictor-corrector), followed by rank-one recovery.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::rng::rng_from;
use crate::{Error, Result};

/// `B` is `2m x 2m` and symmetric; `caps` has length `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrProblem {
    pub b: DMatrix<f64>,
    pub caps: Vec<f64>,
}

impl SdrProblem {
    pub fn new(b: DMatrix<f64>, caps: Vec<f64>) -> Result<Self> {
        let m = caps.len();
        if m == 0 || b.nrows() != 2 * m || b.ncols() != 2 * m {
            return Err(Error::InvalidInput(format!(
                "B is {}x{} but {m} caps were given",
                b.nrows(),
                b.ncols()
            )));
        }
        if let Some(i) = caps.iter().position(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cap {} must be positive, got {}",
                i + 1,
                caps[i]
            )));
        }
        let asym = (&b - b.transpose()).amax();
        if asym > 1e-12 * b.amax().max(1.0) {
            return Err(Error::InvalidInput(format!("B is not symmetric ({asym:.3e})")));
        }
        Ok(Self { b, caps })
    }

    pub fn sources(&self) -> usize {
        self.caps.len()
    }

    pub fn quadratic(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.b * x))
    }

    /// Largest `d` with `d x` inside every paired cap; infinite for `x = 0`.
    pub fn max_scale(&self, x: &DVector<f64>) -> f64 {
        let m = self.sources();
        (0..m)
            .map(|i| {
                let p = x[i] * x[i] + x[i + m] * x[i + m];
                if p > 0.0 {
                    (self.caps[i] / p).sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Relative duality gap and scaled residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrSolution {
    pub x: DMatrix<f64>,
    /// `tr(B X)`.
    pub objective: f64,
    /// Dual objective, a lower bound on the relaxation optimum.
    pub lower_bound: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

fn paired_diag(x: &DMatrix<f64>, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| x[(i, i)] + x[(i + m, i + m)])
}

fn paired_adjoint(y: &DVector<f64>) -> DMatrix<f64> {
    let m = y.len();
    DMatrix::from_diagonal(&DVector::from_fn(2 * m, |i, _| y[i % m]))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest step `alpha` keeping `x + alpha dx` positive semidefinite.
fn psd_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let l = x.clone().cholesky()?.l();
    let a = l.solve_lower_triangular(dx)?;
    let m = l.solve_lower_triangular(&a.transpose())?;
    let lambda = SymmetricEigen::new(symmetrize(&m)).eigenvalues.min();
    Some(if lambda < 0.0 { -1.0 / lambda } else { f64::INFINITY })
}

fn vec_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

struct Direction {
    dx: DMatrix<f64>,
    ds: DVector<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
}

/// Solves the unit-cap problem `min <C, X>` with `X_ii + X_{i+m,i+m} <= 1`.
///
/// Dual: `max 1^T y` with `Z = C - A*(y) >= 0` and `w = -y >= 0`; `w` is kept
/// equal to `-y` so its residual is identically zero.
fn solve_unit_caps(c: &DMatrix<f64>, m: usize, opts: &SdpOptions) -> Result<(DMatrix<f64>, f64, [f64; 3], usize)> {
    let n = 2 * m;
    let nu = (n + m) as f64;
    let c_norm = c.norm();
    let zeta = 1.0 + c_norm;

    let mut x = DMatrix::identity(n, n) * 0.25;
    let mut s = DVector::from_element(m, 0.5);
    let mut y = DVector::from_element(m, -zeta);
    let mut z = c + DMatrix::identity(n, n) * zeta;

    let mut last = [f64::INFINITY; 3];
    for iter in 0..=opts.max_iter {
        let w = -&y;
        let rp = DVector::from_element(m, 1.0) - paired_diag(&x, m) - &s;
        let rd = c - paired_adjoint(&y) - &z;
        let pobj = c.dot(&x);
        let dobj = y.sum();
        let gap = z.dot(&x) + w.dot(&s);
        let rel_gap = gap / (1.0 + pobj.abs() + dobj.abs());
        let pres = rp.norm() / (1.0 + (m as f64).sqrt());
        let dres = rd.norm() / (1.0 + c_norm);
        last = [rel_gap, pres, dres];
        if rel_gap <= opts.tol && pres <= opts.tol && dres <= opts.tol {
            return Ok((x, dobj, last, iter));
        }
        if iter == opts.max_iter {
            break;
        }
        let mu = gap / nu;

        let solver_error = || Error::Solver {
            iterations: iter,
            primal_residual: pres,
            dual_residual: dres,
            gap: rel_gap,
        };
        let zinv = symmetrize(&z.clone().cholesky().ok_or_else(solver_error)?.inverse());
        let schur = DMatrix::from_fn(m, m, |i, j| {
            let mut v = 0.0;
            for p in [i, i + m] {
                for q in [j, j + m] {
                    v += zinv[(p, q)] * x[(q, p)];
                }
            }
            if i == j {
                v += s[i] / w[i];
            }
            v
        });
        let schur = symmetrize(&schur).cholesky().ok_or_else(solver_error)?;
        let zinv_rd_x = &zinv * &rd * &x;

        let direction = |rc: &DMatrix<f64>, rc_vec: &DVector<f64>| -> Direction {
            let zinv_rc = &zinv * rc;
            let g = &zinv_rc - &x - &zinv_rd_x;
            let comp = DVector::from_fn(m, |i, _| rc_vec[i] / w[i] - s[i]);
            let rhs = &rp - paired_diag(&g, m) - &comp;
            let dy = schur.solve(&rhs);
            let dz = &rd - paired_adjoint(&dy);
            let dx = symmetrize(&(&zinv_rc - &x - &zinv * &dz * &x));
            let ds = DVector::from_fn(m, |i, _| comp[i] + s[i] / w[i] * dy[i]);
            Direction { dx, ds, dy, dz }
        };
        let steps = |d: &Direction| -> Option<(f64, f64)> {
            let ap = psd_step(&x, &d.dx)?.min(vec_step(&s, &d.ds));
            let ad = psd_step(&z, &d.dz)?.min(vec_step(&w, &(-&d.dy)));
            Some((ap, ad))
        };

        let pred = direction(&DMatrix::zeros(n, n), &DVector::zeros(m));
        let (ap, ad) = steps(&pred).ok_or_else(solver_error)?;
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let x_a = &x + &pred.dx * ap;
        let z_a = &z + &pred.dz * ad;
        let s_a = &s + &pred.ds * ap;
        let w_a = &w - &pred.dy * ad;
        let mu_aff = (z_a.dot(&x_a) + w_a.dot(&s_a)) / nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let rc = DMatrix::identity(n, n) * (sigma * mu) - &pred.dz * &pred.dx;
        let rc_vec = DVector::from_fn(m, |i, _| sigma * mu + pred.ds[i] * pred.dy[i]);
        let corr = direction(&rc, &rc_vec);
        let (ap, ad) = steps(&corr).ok_or_else(solver_error)?;
        let tau = 0.98;
        let (ap, ad) = ((tau * ap).min(1.0), (tau * ad).min(1.0));

        x += &corr.dx * ap;
        x = symmetrize(&x);
        s += &corr.ds * ap;
        y += &corr.dy * ad;
        z += &corr.dz * ad;
        z = symmetrize(&z);
    }
    Err(Error::Solver {
        iterations: opts.max_iter,
        primal_residual: last[1],
        dual_residual: last[2],
        gap: last[0],
    })
}

pub fn solve_sdr(problem: &SdrProblem, opts: &SdpOptions) -> Result<SdrSolution> {
    let m = problem.sources();
    let n = 2 * m;
    let d = DVector::from_fn(n, |i, _| problem.caps[i % m].sqrt());
    let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * problem.b[(i, j)] * d[j]);
    let norm = scaled.norm();
    if norm == 0.0 {
        return Ok(SdrSolution {
            x: DMatrix::zeros(n, n),
            objective: 0.0,
            lower_bound: 0.0,
            gap: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
        });
    }
    let c = symmetrize(&(scaled / norm));
    let (mut xs, dobj, [gap, pres, dres], iterations) = solve_unit_caps(&c, m, opts)?;

    // Pull any residual cap excess back onto the boundary; congruence keeps X PSD.
    let load = paired_diag(&xs, m);
    let f = DVector::from_fn(n, |i, _| {
        let l = load[i % m];
        if l > 1.0 {
            1.0 / l.sqrt()
        } else {
            1.0
        }
    });
    xs = DMatrix::from_fn(n, n, |i, j| f[i] * xs[(i, j)] * f[j] * d[i] * d[j]);
    let x = symmetrize(&xs);
    let objective = problem.b.dot(&x);
    Ok(SdrSolution {
        x,
        objective,
        lower_bound: dobj * norm,
        gap,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub eta_ext: DVector<f64>,
    /// `eta_ext^T B eta_ext`.
    pub objective: f64,
    /// Whether the top eigenvector was used directly.
    pub rank_one: bool,
    /// Total magnitude of negative eigenvalues clipped before sampling.
    pub clipped: f64,
}

/// Second-to-first eigenvalue ratio below which `X` is treated as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

/// Rank-one point from an SDR solution.
///
/// A numerically rank-one `X` yields its scaled top eigenvector. Otherwise
/// `rounds` Gaussian samples with covariance `X` are drawn (seeded per round)
/// and each contributes the candidates `{0, d_max x}`; `-d_max x` has the
/// same quadratic value. The first minimizer wins ties.
pub fn recover_rank1(solution: &SdrSolution, problem: &SdrProblem, rounds: usize, seed: u64) -> Recovery {
    let n = 2 * problem.sources();
    let zero = Recovery {
        eta_ext: DVector::zeros(n),
        objective: 0.0,
        rank_one: true,
        clipped: 0.0,
    };
    let eig = SymmetricEigen::new(solution.x.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]];
    if !(l1 > 0.0) {
        return zero;
    }
    let l2 = if n > 1 { eig.eigenvalues[order[1]] } else { 0.0 };

    if l2 <= RANK_ONE_RATIO * l1 {
        let mut x: DVector<f64> = eig.eigenvectors.column(order[0]) * l1.sqrt();
        let d = problem.max_scale(&x);
        if d < 1.0 {
            x *= d;
        }
        let objective = problem.quadratic(&x);
        return Recovery {
            eta_ext: x,
            objective,
            rank_one: true,
            clipped: 0.0,
        };
    }

    let clipped: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    if clipped > 0.0 {
        log::debug!("clipped {clipped:.3e} of negative eigenvalue mass before sampling");
    }
    let root = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt());
    let mut best = zero;
    best.rank_one = false;
    best.clipped = clipped;
    for round in 0..rounds {
        let mut rng = rng_from(seed, &[round as u64]);
        let g = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let x = &root * g;
        let d = problem.max_scale(&x);
        if !d.is_finite() {
            continue;
        }
        let x = x * d;
        let value = problem.quadratic(&x);
        if value < best.objective {
            best.eta_ext = x;
            best.objective = value;
        }
    }
    best
}

//! Support vector machine trained with sequential minimal optimization.
//!
//! The binary solver minimizes the standard dual
//!     0.5 * a' Q a - sum(a),   Q_st = y_s y_t K(x_s, x_t),
//! subject to 0 <= a_t <= C and sum(y_t a_t) = 0, picking the maximal
//! violating pair each iteration and stopping once the violation gap
//! drops to `tol`. Multiclass is one-vs-rest; a class with no training
//! rows gets a constant machine whose decision value is -1 everywhere.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_row, Kernel, SvmParams};
use crate::error::{Error, Result};

/// Larger eta floor would distort steps; this matches common practice for
/// non-positive curvature directions.
const TAU: f64 = 1e-12;

/// Kernel row cache budget in bytes. Rows are recomputed on miss, so this
/// only trades time for memory.
const CACHE_BYTES: usize = 32 << 20;

fn kernel_eval(kernel: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        Kernel::Linear => a.iter().zip(b).map(|(u, v)| u * v).sum(),
        Kernel::Rbf => {
            let d2: f64 = a
                .iter()
                .zip(b)
                .map(|(u, v)| {
                    let d = u - v;
                    d * d
                })
                .sum();
            (-gamma * d2).exp()
        }
    }
}

/// Least-recently-used cache of full kernel rows K(x_i, .).
struct RowCache<'a> {
    x: &'a [Vec<f64>],
    kernel: Kernel,
    gamma: f64,
    rows: HashMap<usize, (u64, Vec<f64>)>,
    stamp: u64,
    cap: usize,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel, gamma: f64) -> RowCache<'a> {
        let row_bytes = 8 * x.len().max(1);
        RowCache {
            x,
            kernel,
            gamma,
            rows: HashMap::new(),
            stamp: 0,
            cap: (CACHE_BYTES / row_bytes).max(2),
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.stamp += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.0 = self.stamp;
        } else {
            if self.rows.len() >= self.cap {
                let oldest = self
                    .rows
                    .iter()
                    .min_by_key(|(_, (stamp, _))| *stamp)
                    .map(|(&k, _)| k)
                    .expect("cache is non-empty");
                self.rows.remove(&oldest);
            }
            let xi = &self.x[i];
            let row: Vec<f64> = self
                .x
                .iter()
                .map(|xj| kernel_eval(self.kernel, self.gamma, xi, xj))
                .collect();
            self.rows.insert(i, (self.stamp, row));
        }
        &self.rows[&i].1
    }
}

/// One binary soft-margin problem. Labels must be exactly +1.0 or -1.0.
pub struct BinaryProblem<'a> {
    pub x: &'a [Vec<f64>],
    pub labels: &'a [f64],
    pub kernel: Kernel,
    pub gamma: f64,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// Final dual objective 0.5 a'Qa - sum(a).
    pub objective: f64,
    pub iterations: usize,
}

/// Solve one binary dual by SMO with maximal-violating-pair selection.
pub fn solve_binary(problem: &BinaryProblem) -> Result<DualSolution> {
    let n = problem.x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty SVM problem".into()));
    }
    let y = problem.labels;
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument(
            "SVM labels must be +1 or -1".into(),
        ));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::InvalidArgument(
            "SVM problem needs both a positive and a negative example".into(),
        ));
    }
    let c = problem.c;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameterValue {
            name: "C".into(),
            message: format!("must be a positive finite number, got {c}"),
        });
    }
    if problem.kernel == Kernel::Rbf && !(problem.gamma > 0.0 && problem.gamma.is_finite()) {
        return Err(Error::InvalidParameterValue {
            name: "gamma".into(),
            message: format!("must be positive for the rbf kernel, got {}", problem.gamma),
        });
    }
    if !(problem.tol > 0.0) {
        return Err(Error::InvalidParameterValue {
            name: "tol".into(),
            message: format!("must be positive, got {}", problem.tol),
        });
    }

    let mut cache = RowCache::new(problem.x, problem.kernel, problem.gamma);
    let diag: Vec<f64> = problem
        .x
        .iter()
        .map(|xi| kernel_eval(problem.kernel, problem.gamma, xi, xi))
        .collect();

    let mut alpha = vec![0.0f64; n];
    // Gradient of the dual at alpha = 0 is -1 everywhere.
    let mut g = vec![-1.0f64; n];
    let snap = c * 1e-12;

    let mut iterations = 0;
    loop {
        // Maximal violating pair over the index sets that may still move.
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        for t in 0..n {
            let v = -y[t] * g[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > m_up {
                m_up = v;
                i = t;
            }
            if in_low && v < m_low {
                m_low = v;
                j = t;
            }
        }
        let gap = m_up - m_low;
        if gap <= problem.tol {
            break;
        }
        if iterations >= problem.max_iter {
            return Err(Error::SvmNonConvergence {
                cap: problem.max_iter,
                gap,
            });
        }
        iterations += 1;

        // Feasible direction: alpha_i moves by y_i*d, alpha_j by -y_j*d.
        let k_ij = cache.row(i)[j];
        let mut eta = diag[i] + diag[j] - 2.0 * k_ij;
        if eta <= 0.0 {
            eta = TAU;
        }
        let mut d = gap / eta;
        let cap_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let cap_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        d = d.min(cap_i).min(cap_j);

        let delta_i = y[i] * d;
        let delta_j = -y[j] * d;
        alpha[i] += delta_i;
        alpha[j] += delta_j;
        for t in [i, j] {
            if alpha[t] < snap {
                alpha[t] = 0.0;
            } else if alpha[t] > c - snap {
                alpha[t] = c;
            }
        }

        {
            let row_i = cache.row(i);
            for t in 0..n {
                g[t] += y[t] * y[i] * delta_i * row_i[t];
            }
        }
        {
            let row_j = cache.row(j);
            for t in 0..n {
                g[t] += y[t] * y[j] * delta_j * row_j[t];
            }
        }
    }

    let rho = calculate_rho(&alpha, &g, y, c);
    let objective = 0.5
        * alpha
            .iter()
            .zip(&g)
            .map(|(a, gt)| a * (gt - 1.0))
            .sum::<f64>();
    Ok(DualSolution {
        alpha,
        rho,
        objective,
        iterations,
    })
}

/// Offset so that the decision function is sum(alpha_t y_t K(x_t, x)) - rho.
/// Free support vectors pin it exactly; otherwise the midpoint of the
/// feasible interval is used.
fn calculate_rho(alpha: &[f64], g: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (upper + lower) / 2.0
    }
}

/// One trained one-vs-rest machine: decision(x) = sum(coef_t K(sv_t, x)) - rho.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BinaryMachine {
    support: Vec<Vec<f64>>,
    /// alpha_t * y_t for each support vector.
    coef: Vec<f64>,
    rho: f64,
}

impl BinaryMachine {
    fn decision(&self, kernel: Kernel, gamma: f64, row: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (sv, &w) in self.support.iter().zip(&self.coef) {
            acc += w * kernel_eval(kernel, gamma, sv, row);
        }
        acc - self.rho
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    machines: Vec<BinaryMachine>,
    kernel: Kernel,
    gamma: f64,
    n_features: usize,
    n_classes: usize,
}

impl SvmModel {
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_classes: usize, p: &SvmParams) -> Result<SvmModel> {
        let mut machines = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            let labels: Vec<f64> = y
                .iter()
                .map(|&t| if usize::from(t) == class { 1.0 } else { -1.0 })
                .collect();
            if !labels.contains(&1.0) {
                // No positive examples: a constant machine that votes against.
                machines.push(BinaryMachine {
                    support: Vec::new(),
                    coef: Vec::new(),
                    rho: 1.0,
                });
                continue;
            }
            if !labels.contains(&-1.0) {
                return Err(Error::SingleClass);
            }
            let solution = solve_binary(&BinaryProblem {
                x,
                labels: &labels,
                kernel: p.kernel,
                gamma: p.gamma,
                c: p.c,
                tol: p.tol,
                max_iter: p.max_iter,
            })?;
            let mut support = Vec::new();
            let mut coef = Vec::new();
            for (t, &a) in solution.alpha.iter().enumerate() {
                if a > 0.0 {
                    support.push(x[t].clone());
                    coef.push(a * labels[t]);
                }
            }
            machines.push(BinaryMachine {
                support,
                coef,
                rho: solution.rho,
            });
        }
        Ok(SvmModel {
            machines,
            kernel: p.kernel,
            gamma: p.gamma,
            n_features: x[0].len(),
            n_classes,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_support(&self) -> usize {
        self.machines.iter().map(|m| m.support.len()).sum()
    }

    /// Raw one-vs-rest decision values, one per class. These are margins,
    /// not probabilities, and are used directly as ranking scores.
    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        Ok(self
            .machines
            .iter()
            .map(|m| m.decision(self.kernel, self.gamma, row))
            .collect())
    }
}

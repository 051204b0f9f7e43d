//! Box-constrained limited-memory BFGS.
//!
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the iteration; the two-loop recursion runs on the free set and the step
//! is projected back onto the box during a backtracking Armijo search.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient's infinity norm drops below this.
    pub gradient_tolerance: f64,
    /// Relative function-decrease stopping threshold.
    pub function_tolerance: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-7,
            function_tolerance: 1e7 * f64::EPSILON,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

fn fixed_mask(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))
        .collect()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    fixed_mask(x, g, lower, upper)
        .iter()
        .zip(g)
        .map(|(f, gi)| if *f { 0.0 } else { gi.abs() })
        .fold(0.0, f64::max)
}

fn dot_free(a: &[f64], b: &[f64], fixed: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(fixed)
        .filter(|(_, f)| !**f)
        .map(|((x, y), _)| x * y)
        .sum()
}

/// Minimizes `f` over the box `[lower, upper]`. `f` returns the value and
/// writes the gradient into its second argument.
pub fn minimize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], config: &LbfgsConfig) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LbfgsResult {
            x,
            value: fx,
            iterations: 0,
            converged: false,
        };
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::with_capacity(config.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        if projected_gradient_norm(&x, &g, lower, upper) < config.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let fixed = fixed_mask(&x, &g, lower, upper);
        let mut d = two_loop(&g, &history, &fixed);
        let mut slope = dot_free(&d, &g, &fixed);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().zip(&fixed).map(|(gi, f)| if *f { 0.0 } else { -gi }).collect();
            slope = dot_free(&d, &g, &fixed);
            if !(slope < 0.0) {
                converged = true;
                break;
            }
        }
        // Without curvature information, scale the first step to unit length.
        let mut step = if history.is_empty() {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            (1.0 / norm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            project(&mut x_new, lower, upper);
            let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            if x_new == x {
                break;
            }
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite()
                && g_new.iter().all(|v| v.is_finite())
                && f_new <= fx + 1e-4 * decrease
            {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-10 * (ss * yy).sqrt() {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y));
        }
        let f_old = fx;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if (f_old - fx) <= config.function_tolerance * f_old.abs().max(fx.abs()).max(1.0) {
            converged = true;
            break;
        }
    }
    LbfgsResult {
        x,
        value: fx,
        iterations,
        converged,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>, fixed: &[bool]) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().zip(fixed).map(|(gi, f)| if *f { 0.0 } else { *gi }).collect();
    let mut alphas = Vec::with_capacity(history.len());
    let mut rhos = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let sy = dot_free(s, y, fixed);
        if sy <= 0.0 {
            alphas.push(0.0);
            rhos.push(0.0);
            continue;
        }
        let rho = 1.0 / sy;
        let a = rho * dot_free(s, &q, fixed);
        for i in 0..q.len() {
            if !fixed[i] {
                q[i] -= a * y[i];
            }
        }
        alphas.push(a);
        rhos.push(rho);
    }
    let gamma = history
        .back()
        .map(|(s, y)| {
            let sy = dot_free(s, y, fixed);
            let yy = dot_free(y, y, fixed);
            if sy > 0.0 && yy > 0.0 {
                sy / yy
            } else {
                1.0
            }
        })
        .unwrap_or(1.0);
    q.iter_mut().for_each(|v| *v *= gamma);
    for (idx, (s, y)) in history.iter().enumerate() {
        let k = history.len() - 1 - idx;
        let rho = rhos[k];
        if rho == 0.0 {
            continue;
        }
        let b = rho * dot_free(y, &q, fixed);
        for i in 0..q.len() {
            if !fixed[i] {
                q[i] += (alphas[k] - b) * s[i];
            }
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Maximizes `f` over the box; `f` returns the value and its gradient.
pub fn maximize<F>(mut f: F, x0: &[f64], lower: &[f64], upper: &[f64], config: &LbfgsConfig) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut res = minimize(
        |x, g| {
            let v = f(x, g);
            g.iter_mut().for_each(|gi| *gi = -*gi);
            -v
        },
        x0,
        lower,
        upper,
        config,
    );
    res.value = -res.value;
    res
}

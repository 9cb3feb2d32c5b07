//! Derivative-free Nelder-Mead simplex minimizer.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Initial simplex edge length along each axis.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop when the spread of vertex values is below
    /// `f_tol_abs + f_tol_rel * |f_best|` and the simplex is smaller than `x_tol`.
    pub f_tol_rel: f64,
    pub f_tol_abs: f64,
    pub x_tol: f64,
    /// Fresh simplices built around the best point after convergence.
    pub polish_rounds: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            step: 0.5,
            max_iterations: 20_000,
            f_tol_rel: 1e-14,
            f_tol_abs: 1e-24,
            x_tol: 1e-10,
            polish_rounds: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best vertex value after every iteration; never increases.
    pub trace: Vec<f64>,
    /// False when the iteration budget ran out first.
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn sanitize(v: f64) -> f64 {
    if v.is_nan() { f64::INFINITY } else { v }
}

struct Run<'a, F> {
    f: &'a F,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Run<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        sanitize((self.f)(x))
    }
}

/// Minimizes `f` starting from `x0`.
pub fn minimize<F>(f: &F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut run = Run { f, evaluations: 0 };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut best_x = x0.to_vec();
    let mut best_f = run.eval(x0);
    let mut converged = false;

    for round in 0..=opts.polish_rounds {
        let before = best_f;
        let (x, fx, ok) = descend(&mut run, &best_x, best_f, opts, &mut iterations, &mut trace);
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        if !ok || iterations >= opts.max_iterations {
            break;
        }
        let gain = before - best_f;
        if round > 0 && gain <= opts.f_tol_abs + opts.f_tol_rel * best_f.abs() {
            break;
        }
    }

    SimplexResult {
        x: best_x,
        value: best_f,
        iterations,
        evaluations: run.evaluations,
        trace,
        converged,
    }
}

fn descend<F: Fn(&[f64]) -> f64>(
    run: &mut Run<'_, F>,
    start: &[f64],
    f_start: f64,
    opts: &SimplexOptions,
    iterations: &mut usize,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, bool) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f_start));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += opts.step;
        let fv = run.eval(&v);
        simplex.push((v, fv));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);

        let spread = f_worst - f_best;
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol_abs + opts.f_tol_rel * f_best.abs() && size <= opts.x_tol {
            return (simplex[0].0.clone(), f_best, true);
        }
        // A collapsed simplex cannot move any further.
        if size == 0.0 || (spread == 0.0 && f_best.is_infinite()) {
            return (simplex[0].0.clone(), f_best, true);
        }
        if *iterations >= opts.max_iterations {
            return (simplex[0].0.clone(), f_best, false);
        }
        *iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let f_reflected = run.eval(&reflected);
        if f_reflected < f_best {
            let expanded = along(EXPAND);
            let f_expanded = run.eval(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
        } else {
            let outside = f_reflected < f_worst;
            let contracted = along(if outside { CONTRACT } else { -CONTRACT });
            let f_contracted = run.eval(&contracted);
            if f_contracted < f_reflected.min(f_worst) {
                simplex[n] = (contracted, f_contracted);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (x, b) in vertex.0.iter_mut().zip(&best) {
                        *x = b + SHRINK * (*x - b);
                    }
                    vertex.1 = run.eval(&vertex.0);
                }
            }
        }
        let current = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        trace.push(current.min(trace.last().copied().unwrap_or(f64::INFINITY)));
    }
}

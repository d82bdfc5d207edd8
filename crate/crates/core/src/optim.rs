//! Nelder-Mead simplex minimization with the standard coefficients
//! (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

#[derive(Debug, Clone)]
pub struct NmOptions {
    pub max_iterations: usize,
    /// Stop when the objective spread over the simplex falls below this.
    pub objective_tolerance: f64,
    /// ... or when every vertex sits within this distance of the best one.
    pub param_tolerance: f64,
    /// Offset added to each coordinate of the start point to seed the simplex.
    pub initial_step: f64,
    /// Record the best objective value after every iteration.
    pub record_history: bool,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            objective_tolerance: 1e-9,
            param_tolerance: 1e-8,
            initial_step: 0.25,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult<const N: usize> {
    pub x: [f64; N],
    pub fx: f64,
    pub iterations: usize,
    /// Whether a tolerance was met before the iteration cap.
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Minimize `f` starting from `x0`. Deterministic: the same function and
/// options always walk the same simplex path.
pub fn nelder_mead<const N: usize, F: FnMut(&[f64; N]) -> f64>(
    mut f: F,
    x0: [f64; N],
    opts: &NmOptions,
) -> NmResult<N> {
    let fx0 = f(&x0);
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, fx0));
    for i in 0..N {
        let mut v = x0;
        v[i] += opts.initial_step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let best = simplex[0];
        let spread = simplex[N].1 - best.1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(best.0.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread <= opts.objective_tolerance || diameter <= opts.param_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (v, _) in &simplex[..N] {
            for i in 0..N {
                centroid[i] += v[i];
            }
        }
        for c in centroid.iter_mut() {
            *c /= N as f64;
        }
        let worst = simplex[N];

        let mut reflected = [0.0; N];
        for i in 0..N {
            reflected[i] = centroid[i] + (centroid[i] - worst.0[i]);
        }
        let fr = f(&reflected);

        let replacement = if fr < simplex[0].1 {
            let mut expanded = [0.0; N];
            for i in 0..N {
                expanded[i] = centroid[i] + 2.0 * (reflected[i] - centroid[i]);
            }
            let fe = f(&expanded);
            if fe < fr {
                Some((expanded, fe))
            } else {
                Some((reflected, fr))
            }
        } else if fr < simplex[N - 1].1 {
            Some((reflected, fr))
        } else if fr < worst.1 {
            // outside contraction
            let mut contracted = [0.0; N];
            for i in 0..N {
                contracted[i] = centroid[i] + 0.5 * (reflected[i] - centroid[i]);
            }
            let fc = f(&contracted);
            (fc <= fr).then_some((contracted, fc))
        } else {
            // inside contraction
            let mut contracted = [0.0; N];
            for i in 0..N {
                contracted[i] = centroid[i] + 0.5 * (worst.0[i] - centroid[i]);
            }
            let fc = f(&contracted);
            (fc < worst.1).then_some((contracted, fc))
        };

        match replacement {
            Some(vertex) => simplex[N] = vertex,
            None => {
                // shrink towards the best vertex
                let anchor = simplex[0].0;
                for (v, fv) in simplex[1..].iter_mut() {
                    for i in 0..N {
                        v[i] = anchor[i] + 0.5 * (v[i] - anchor[i]);
                    }
                    *fv = f(v);
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if opts.record_history {
            history.push(simplex[0].1);
        }
    }

    NmResult {
        x: simplex[0].0,
        fx: simplex[0].1,
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64; 3]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64; 2]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn minimizes_sphere() {
        let r = nelder_mead(sphere, [1.0, -2.0, 0.5], &NmOptions::default());
        assert!(r.converged);
        assert!(r.fx < 1e-8, "fx = {}", r.fx);
        for v in r.x {
            assert!(v.abs() < 1e-4);
        }
    }

    #[test]
    fn minimizes_rosenbrock() {
        let opts = NmOptions {
            max_iterations: 5000,
            ..NmOptions::default()
        };
        let r = nelder_mead(rosenbrock, [-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-3, "x = {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn best_value_is_monotone() {
        let opts = NmOptions {
            record_history: true,
            ..NmOptions::default()
        };
        let r = nelder_mead(rosenbrock, [2.0, -1.5], &opts);
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0], "best objective increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let opts = NmOptions {
            max_iterations: 3,
            objective_tolerance: 0.0,
            param_tolerance: 0.0,
            ..NmOptions::default()
        };
        let r = nelder_mead(rosenbrock, [-1.2, 1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn mirrored_starts_walk_mirrored_paths() {
        // an even function must yield exactly mirrored minimizers
        let f = |x: &[f64; 2]| (x[0] * x[0] - 1.0).powi(2) + x[1] * x[1] * (x[0] * x[0] + 1.0);
        let a = nelder_mead(f, [0.9, 0.4], &NmOptions::default());
        let neg = nelder_mead(f, [-0.9, -0.4], &NmOptions { initial_step: -0.25, ..NmOptions::default() });
        assert_eq!(a.fx, neg.fx);
        assert_eq!(a.x[0], -neg.x[0]);
        assert_eq!(a.x[1], -neg.x[1]);
    }
}

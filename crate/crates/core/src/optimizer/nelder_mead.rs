//! Deterministic Nelder–Mead simplex minimizer.

use rayon::prelude::*;
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset added to each coordinate in turn to build the first simplex.
    pub initial_spread: f64,
    /// Stop once max f - min f over the simplex is below this.
    pub f_tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_spread: 1.0,
            f_tolerance: 1e-8,
            max_evaluations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    /// The spread criterion was met (as opposed to running out of budget).
    pub converged: bool,
    /// Value of every evaluation in order; used to spot degenerate objectives.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Order by value, then lexicographically by coordinates so ties never
/// depend on insertion order. NaN sorts as +inf.
fn vertex_order(a: &Vertex, b: &Vertex) -> Ordering {
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    key(a.f).total_cmp(&key(b.f)).then_with(|| {
        a.x.iter()
            .zip(&b.x)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Evaluations that happen together (the first
    /// simplex, a shrink) run in parallel; results do not depend on it.
    pub fn minimize<E, F>(&self, f: F, x0: &[f64]) -> Result<Minimum, E>
    where
        F: Fn(&[f64]) -> Result<f64, E> + Sync,
        E: Send,
    {
        let n = x0.len();
        let mut history = Vec::new();
        let mut evals = 0usize;
        let record = |values: &[f64], history: &mut Vec<f64>, evals: &mut usize| {
            *evals += values.len();
            history.extend_from_slice(values);
        };

        let mut points = vec![x0.to_vec()];
        for k in 0..n {
            let mut p = x0.to_vec();
            p[k] += self.initial_spread;
            points.push(p);
        }
        let values = points
            .par_iter()
            .map(|p| f(p))
            .collect::<Result<Vec<_>, E>>()?;
        record(&values, &mut history, &mut evals);
        let mut simplex: Vec<Vertex> = points
            .into_iter()
            .zip(values)
            .map(|(x, f)| Vertex { x, f })
            .collect();
        if n == 0 {
            let v = &simplex[0];
            return Ok(Minimum {
                x: v.x.clone(),
                f: v.f,
                evaluations: 1,
                converged: true,
                history,
            });
        }

        let mut converged = false;
        loop {
            simplex.sort_by(vertex_order);
            let spread = simplex[n].f - simplex[0].f;
            if spread.is_finite() && spread < self.f_tolerance {
                converged = true;
                break;
            }
            if evals >= self.max_evaluations {
                break;
            }

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(&v.x) {
                    *c += x / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].x)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let eval = |x: Vec<f64>| -> Result<Vertex, E> {
                let fx = f(&x)?;
                Ok(Vertex { x, f: fx })
            };
            let better = |a: &Vertex, b: &Vertex| vertex_order(a, b) == Ordering::Less;

            let reflected = eval(along(self.reflection))?;
            record(&[reflected.f], &mut history, &mut evals);
            if better(&reflected, &simplex[0]) {
                let expanded = eval(along(self.reflection * self.expansion))?;
                record(&[expanded.f], &mut history, &mut evals);
                simplex[n] = if better(&expanded, &reflected) {
                    expanded
                } else {
                    reflected
                };
                continue;
            }
            if better(&reflected, &simplex[n - 1]) {
                simplex[n] = reflected;
                continue;
            }
            let outside = better(&reflected, &simplex[n]);
            let contracted = if outside {
                eval(along(self.reflection * self.contraction))?
            } else {
                eval(along(-self.contraction))?
            };
            record(&[contracted.f], &mut history, &mut evals);
            let target = if outside { &reflected } else { &simplex[n] };
            if better(&contracted, target)
                || (!outside && vertex_order(&contracted, target).is_eq())
            {
                simplex[n] = contracted;
                continue;
            }

            let best = simplex[0].x.clone();
            let shrunk: Vec<Vec<f64>> = simplex[1..]
                .iter()
                .map(|v| {
                    best.iter()
                        .zip(&v.x)
                        .map(|(b, x)| b + self.shrink * (x - b))
                        .collect()
                })
                .collect();
            let values = shrunk
                .par_iter()
                .map(|p| f(p))
                .collect::<Result<Vec<_>, E>>()?;
            record(&values, &mut history, &mut evals);
            for (v, (x, fx)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(values)) {
                *v = Vertex { x, f: fx };
            }
        }

        simplex.sort_by(vertex_order);
        Ok(Minimum {
            x: simplex[0].x.clone(),
            f: simplex[0].f,
            evaluations: evals,
            converged,
            history,
        })
    }
}

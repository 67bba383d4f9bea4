//! Mass-spring placement of a room's objects.
//!
//! Every pair of objects is joined by a spring whose rest length is
//! proportional to their summed per-dimension distance. Positions start
//! uniformly at random and relax by damped gradient descent on the spring
//! potential; a step is accepted only if it does not raise the energy, so
//! the accepted energy sequence is non-increasing. Several seeded starts are
//! relaxed and the lowest-energy one is kept, since a single start can settle
//! in a local minimum. The relaxed layout is then mapped into the unit square
//! by one uniform scale and a translation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_space::{Catalog, ObjectIdx};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    pub spring_constant: f64,
    /// Momentum retained between steps.
    pub damping: f64,
    pub step: f64,
    /// Convergence threshold on the largest per-step displacement.
    pub tol: f64,
    pub max_iters: usize,
    /// Rest length per unit of object distance.
    pub rest_scale: f64,
    /// Independent random starts; the lowest final energy wins.
    pub restarts: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            spring_constant: 1.0,
            damping: 0.9,
            step: 0.05,
            tol: 1e-4,
            max_iters: 2000,
            rest_scale: 0.1,
            restarts: 8,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [self.spring_constant, self.step, self.tol, self.rest_scale];
        if positive.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err("spring_constant, step, tol and rest_scale must be positive".into());
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err("damping must lie in [0, 1)".into());
        }
        if self.restarts == 0 {
            return Err("restarts must be at least 1".into());
        }
        Ok(())
    }
}

pub type Point = [f64; 2];

/// Outcome of a relaxation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub converged: bool,
    pub iterations: usize,
    /// Energy before the first step and after every accepted step.
    pub energies: Vec<f64>,
}

/// Complete graph of springs with given rest lengths.
#[derive(Debug, Clone)]
pub struct SpringSystem {
    n: usize,
    rest: Vec<f64>,
    k: f64,
}

impl SpringSystem {
    /// `rest` is a row-major `n x n` symmetric matrix.
    pub fn new(n: usize, rest: Vec<f64>, spring_constant: f64) -> Self {
        assert_eq!(rest.len(), n * n);
        Self {
            n,
            rest,
            k: spring_constant,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rest_length(&self, i: usize, j: usize) -> f64 {
        self.rest[i * self.n + j]
    }

    pub fn energy(&self, pos: &[Point]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let stretch = dist(pos[i], pos[j]) - self.rest_length(i, j);
                e += 0.5 * self.k * stretch * stretch;
            }
        }
        e
    }

    fn gradient(&self, pos: &[Point], grad: &mut [Point]) {
        grad.iter_mut().for_each(|g| *g = [0.0, 0.0]);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                let d = (dx * dx + dy * dy).sqrt();
                if d < 1e-12 {
                    continue;
                }
                let f = self.k * (d - self.rest_length(i, j)) / d;
                grad[i][0] += f * dx;
                grad[i][1] += f * dy;
                grad[j][0] -= f * dx;
                grad[j][1] -= f * dy;
            }
        }
    }

    /// Relaxes `pos` in place until the largest accepted displacement drops
    /// below `tol` or `max_iters` steps have been taken.
    pub fn relax(&self, pos: &mut [Point], params: &LayoutParams) -> Relaxation {
        let n = self.n;
        let mut velocity = vec![[0.0; 2]; n];
        let mut grad = vec![[0.0; 2]; n];
        let mut trial = vec![[0.0; 2]; n];
        let mut energy = self.energy(pos);
        let mut energies = vec![energy];
        let mut converged = false;
        let mut iterations = 0;

        while iterations < params.max_iters {
            iterations += 1;
            self.gradient(pos, &mut grad);
            for i in 0..n {
                for c in 0..2 {
                    velocity[i][c] = params.damping * velocity[i][c] - params.step * grad[i][c];
                    trial[i][c] = pos[i][c] + velocity[i][c];
                }
            }
            let mut trial_energy = self.energy(&trial);
            if trial_energy > energy {
                // overshoot: drop momentum and backtrack along the gradient
                velocity.iter_mut().for_each(|v| *v = [0.0, 0.0]);
                let mut s = params.step;
                loop {
                    for i in 0..n {
                        for c in 0..2 {
                            trial[i][c] = pos[i][c] - s * grad[i][c];
                        }
                    }
                    trial_energy = self.energy(&trial);
                    if trial_energy <= energy || s < 1e-12 {
                        break;
                    }
                    s *= 0.5;
                }
                if trial_energy > energy {
                    converged = true;
                    break;
                }
            }
            let max_disp = pos.iter().zip(&trial).map(|(a, b)| dist(*a, *b)).fold(0.0, f64::max);
            pos.copy_from_slice(&trial);
            energy = trial_energy;
            energies.push(energy);
            if max_disp < params.tol {
                converged = true;
                break;
            }
        }
        Relaxation {
            converged,
            iterations,
            energies,
        }
    }
}

/// Placement result in unit-square coordinates, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub positions: Vec<Point>,
    pub converged: bool,
    pub iterations: usize,
}

/// Spring system for `objects` with rest lengths `rest_scale * object_distance`.
pub fn spring_system(objects: &[ObjectIdx], catalog: &Catalog, params: &LayoutParams) -> SpringSystem {
    let n = objects.len();
    let mut rest = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let l = params.rest_scale * f64::from(catalog.object_distance_of(objects[i], objects[j]));
            rest[i * n + j] = l;
            rest[j * n + i] = l;
        }
    }
    SpringSystem::new(n, rest, params.spring_constant)
}

pub fn layout_objects(objects: &[ObjectIdx], catalog: &Catalog, seed: u64, params: &LayoutParams) -> Layout {
    let system = spring_system(objects, catalog, params);
    match objects.len() {
        0 => Layout {
            positions: vec![],
            converged: true,
            iterations: 0,
        },
        1 => Layout {
            positions: vec![[0.5, 0.5]],
            converged: true,
            iterations: 0,
        },
        2 => {
            let half = system.rest_length(0, 1).min(1.0) / 2.0;
            Layout {
                positions: vec![[0.5 - half, 0.5], [0.5 + half, 0.5]],
                converged: true,
                iterations: 0,
            }
        }
        n => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<(f64, Vec<Point>, Relaxation)> = None;
            for _ in 0..params.restarts.max(1) {
                let mut pos: Vec<Point> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
                let relaxation = system.relax(&mut pos, params);
                let energy = system.energy(&pos);
                if best.as_ref().is_none_or(|(e, _, _)| energy < *e) {
                    best = Some((energy, pos, relaxation));
                }
            }
            let (_, mut pos, relaxation) = best.expect("at least one start");
            normalize(&mut pos);
            Layout {
                positions: pos,
                converged: relaxation.converged,
                iterations: relaxation.iterations,
            }
        }
    }
}

/// Fits points into the unit square with one uniform scale (aspect kept),
/// centering the shorter axis. Coincident points land on the center.
pub fn normalize(pos: &mut [Point]) {
    if pos.is_empty() {
        return;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pos.iter() {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let extent = [hi[0] - lo[0], hi[1] - lo[1]];
    let span = extent[0].max(extent[1]);
    if span < 1e-12 {
        pos.iter_mut().for_each(|p| *p = [0.5, 0.5]);
        return;
    }
    let scale = 1.0 / span;
    for p in pos.iter_mut() {
        for c in 0..2 {
            let offset = (1.0 - extent[c] * scale) / 2.0;
            p[c] = ((p[c] - lo[c]) * scale + offset).clamp(0.0, 1.0);
        }
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

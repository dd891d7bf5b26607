//! Seeded derivative-free box-constrained minimizer.
//!
//! Search runs in the unit cube; each coordinate maps to its bound linearly
//! or logarithmically. A Latin hypercube picks the starting elite, then a
//! full-covariance evolution strategy refines it, restarting locally
//! around the incumbent once its steps collapse.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBound {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Search in log space (requires lower > 0).
    #[serde(default)]
    pub log: bool,
}

impl ParamBound {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), lower, upper, log: false }
    }

    pub fn log(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), lower, upper, log: true }
    }

    /// Degenerate bounds pin the parameter.
    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, value)
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.lower == self.upper {
            return self.lower;
        }
        let v = if self.log {
            (self.lower.ln() + u * (self.upper.ln() - self.lower.ln())).exp()
        } else {
            self.lower + u * (self.upper - self.lower)
        };
        v.clamp(self.lower, self.upper)
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        if self.lower == self.upper {
            return 0.5;
        }
        let v = v.clamp(self.lower, self.upper);
        if self.log {
            (v.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln())
        } else {
            (v - self.lower) / (self.upper - self.lower)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptBudget {
    /// Maximum number of objective evaluations.
    pub evaluations: usize,
    pub seed: u64,
    pub bounds: Vec<ParamBound>,
    /// Candidates per generation; 0 picks `4 + 3 ln d` rounded up to even.
    #[serde(default)]
    pub population: usize,
    /// Space-filling samples before the first generation; 0 picks `max(2d + 2, 10)`.
    #[serde(default)]
    pub initial_samples: usize,
}

impl OptBudget {
    pub fn new(evaluations: usize, seed: u64, bounds: Vec<ParamBound>) -> Self {
        Self { evaluations, seed, bounds, population: 0, initial_samples: 0 }
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.evaluations == 0 {
            return Err(Error::invalid("budget needs at least one evaluation"));
        }
        if self.bounds.is_empty() {
            return Err(Error::invalid("budget has no parameters"));
        }
        for b in &self.bounds {
            if !b.lower.is_finite() || !b.upper.is_finite() || b.lower > b.upper {
                return Err(Error::invalid(format!("bound `{}` needs finite lower <= upper", b.name)));
            }
            if b.log && b.lower <= 0.0 {
                return Err(Error::invalid(format!("log-scaled bound `{}` needs lower > 0", b.name)));
            }
        }
        Ok(())
    }

    fn population_size(&self) -> usize {
        if self.population > 0 {
            return self.population;
        }
        let d = self.dims() as f64;
        let l = (4.0 + 3.0 * d.ln()).ceil() as usize;
        (l + l % 2).max(6)
    }

    fn initial_size(&self) -> usize {
        if self.initial_samples > 0 {
            return self.initial_samples;
        }
        (2 * self.dims() + 2).max(10)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub index: usize,
    pub params: Vec<f64>,
    /// `None` when the objective failed or returned a non-finite value.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub seed: u64,
    pub trace: Vec<Evaluation>,
}

impl OptResult {
    /// Running minimum of the trace, one entry per evaluation.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut m = f64::INFINITY;
        self.trace
            .iter()
            .map(|e| {
                if let Some(v) = e.value {
                    m = m.min(v);
                }
                m
            })
            .collect()
    }
}

/// Black-box minimization contract.
pub trait Minimizer {
    fn minimize(&self, objective: &(dyn Fn(&[f64]) -> f64 + Sync), budget: &OptBudget, start: Option<&[f64]>) -> Result<OptResult>;
}

/// Default minimizer (see module docs).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EliteSearch;

fn latin_hypercube(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let k = rng.gen_range(0..=i);
            perm.swap(i, k);
        }
        for i in 0..n {
            pts[i][j] = (perm[i] as f64 + rng.gen::<f64>()) / n as f64;
        }
    }
    pts
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller, one draw per call
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn reflect(u: f64) -> f64 {
    let mut u = u;
    for _ in 0..4 {
        if u < 0.0 {
            u = -u;
        } else if u > 1.0 {
            u = 2.0 - u;
        } else {
            return u;
        }
    }
    u.clamp(0.0, 1.0)
}

/// Covariance-matrix-adapting evolution strategy state with cumulative
/// step-size control.
struct Strategy {
    n: usize,
    lambda: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: usize,
}

impl Strategy {
    fn new(mean: Vec<f64>, sigma: f64, lambda: usize) -> Self {
        let n = mean.len();
        let nf = n as f64;
        let mu = (lambda / 2).max(1);
        let raw: Vec<f64> = (0..mu).map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff)).clamp(0.0, 1.0 - c_1);
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            n,
            lambda,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            mean: DVector::from_vec(mean),
            sigma,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                let z = DVector::from_fn(self.n, |j, _| self.scales[j] * normal(rng));
                let y = &self.basis * z;
                (0..self.n).map(|j| reflect(self.mean[j] + self.sigma * y[j])).collect()
            })
            .collect()
    }

    /// `ranked` holds the generation's points, best first.
    fn update(&mut self, ranked: &[&Vec<f64>]) {
        let n = self.n;
        let mut y_w = DVector::zeros(n);
        let mut ys = Vec::with_capacity(self.weights.len());
        for (w, x) in self.weights.iter().zip(ranked) {
            let y = DVector::from_fn(n, |j, _| (x[j] - self.mean[j]) / self.sigma);
            y_w += &y * *w;
            ys.push(y);
        }
        self.mean += &y_w * self.sigma;
        self.mean.apply(|v| *v = v.clamp(0.0, 1.0));

        // C^(-1/2) y_w
        let inv_half = &self.basis * DMatrix::from_diagonal(&self.scales.map(|d| 1.0 / d)) * self.basis.transpose();
        let cs = (self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff).sqrt();
        self.p_sigma = &self.p_sigma * (1.0 - self.c_sigma) + inv_half * &y_w * cs;
        self.generation += 1;
        let ps_norm = self.p_sigma.norm();
        let decay = 1.0 - (1.0 - self.c_sigma).powi(2 * self.generation as i32);
        let h_sigma = if ps_norm / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * self.chi_n { 1.0 } else { 0.0 };
        let cc = (self.c_c * (2.0 - self.c_c) * self.mu_eff).sqrt();
        self.p_c = &self.p_c * (1.0 - self.c_c) + &y_w * (h_sigma * cc);

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in self.weights.iter().zip(&ys) {
            rank_mu += y * y.transpose() * *w;
        }
        let rank_one = &self.p_c * self.p_c.transpose() + &self.cov * ((1.0 - h_sigma) * self.c_c * (2.0 - self.c_c));
        self.cov = &self.cov * (1.0 - self.c_1 - self.c_mu) + rank_one * self.c_1 + rank_mu * self.c_mu;
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;

        self.sigma = (self.sigma * ((self.c_sigma / self.d_sigma) * (ps_norm / self.chi_n - 1.0)).exp()).clamp(1e-14, 1.0);

        let eig = self.cov.clone().symmetric_eigen();
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(|v| v.max(1e-20).sqrt());
    }

    fn converged(&self) -> bool {
        self.sigma * self.scales.max() < 1e-10 || self.scales.max() / self.scales.min().max(1e-300) > 1e7
    }
}

impl Minimizer for EliteSearch {
    fn minimize(&self, objective: &(dyn Fn(&[f64]) -> f64 + Sync), budget: &OptBudget, start: Option<&[f64]>) -> Result<OptResult> {
        budget.validate()?;
        let d = budget.dims();
        if let Some(s) = start {
            if s.len() != d {
                return Err(Error::ShapeMismatch(format!("start point has {} values for {d} parameters", s.len())));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mut trace: Vec<Evaluation> = Vec::with_capacity(budget.evaluations);
        let mut best: Option<(f64, Vec<f64>, usize)> = None;

        let to_params = |u: &[f64]| -> Vec<f64> { budget.bounds.iter().zip(u).map(|(b, &x)| b.from_unit(x)).collect() };
        type Best = Option<(f64, Vec<f64>, usize)>;
        let evaluate = |batch: &[Vec<f64>], trace: &mut Vec<Evaluation>, best: &mut Best| -> Vec<f64> {
            let params: Vec<Vec<f64>> = batch.iter().map(|u| to_params(u)).collect();
            let values: Vec<f64> = params.par_iter().map(|p| objective(p)).collect();
            let mut out = Vec::with_capacity(values.len());
            for ((u, p), v) in batch.iter().zip(params).zip(values) {
                let ok = v.is_finite();
                let score = if ok { v } else { f64::INFINITY };
                if ok && best.as_ref().map_or(true, |b| v < b.0) {
                    *best = Some((v, u.clone(), trace.len()));
                }
                trace.push(Evaluation { index: trace.len(), params: p, value: ok.then_some(v) });
                out.push(score);
            }
            out
        };

        let n0 = budget.initial_size().min(budget.evaluations);
        let mut first = latin_hypercube(&mut rng, n0, d);
        first[0] = match start {
            Some(s) => budget.bounds.iter().zip(s).map(|(b, &v)| b.to_unit(v)).collect(),
            None => vec![0.5; d],
        };
        evaluate(&first, &mut trace, &mut best);

        let lambda = budget.population_size();
        let center = |best: &Best| best.as_ref().map_or(vec![0.5; d], |b| b.1.clone());
        let mut es = Strategy::new(center(&best), 0.2, lambda);
        while trace.len() < budget.evaluations {
            let count = es.lambda.min(budget.evaluations - trace.len());
            let batch = es.sample(&mut rng, count);
            let values = evaluate(&batch, &mut trace, &mut best);
            if count < es.lambda {
                break;
            }
            let mut order: Vec<usize> = (0..count).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            if values[order[0]].is_infinite() {
                // whole generation failed: shrink toward the incumbent
                es = Strategy::new(center(&best), es.sigma * 0.5, lambda);
                continue;
            }
            let ranked: Vec<&Vec<f64>> = order.iter().map(|&i| &batch[i]).collect();
            es.update(&ranked);
            if es.converged() {
                // restart locally around the incumbent
                es = Strategy::new(center(&best), 0.05, lambda);
            }
        }

        match best {
            Some((v, _, idx)) => Ok(OptResult { best: trace[idx].params.clone(), best_value: v, seed: budget.seed, trace }),
            None => Err(Error::AllEvaluationsFailed(trace.len())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_budget(evals: usize, seed: u64) -> OptBudget {
        OptBudget::new(evals, seed, vec![ParamBound::new("a", -2.0, 3.0), ParamBound::log("b", 0.01, 10.0), ParamBound::new("c", 0.0, 1.0)])
    }

    fn sphere(p: &[f64]) -> f64 {
        (p[0] - 1.0).powi(2) + (p[1].ln() - 0.5f64.ln()).powi(2) + (p[2] - 0.25).powi(2)
    }

    #[test]
    fn finds_minimum_of_a_bowl() {
        let r = EliteSearch.minimize(&sphere, &sphere_budget(300, 3), None).unwrap();
        assert!(r.best_value < 1e-3, "{}", r.best_value);
        assert_eq!(r.trace.len(), 300);
    }

    #[test]
    fn same_seed_same_sequence() {
        let a = EliteSearch.minimize(&sphere, &sphere_budget(80, 11), None).unwrap();
        let b = EliteSearch.minimize(&sphere, &sphere_budget(80, 11), None).unwrap();
        assert_eq!(a, b);
        let c = EliteSearch.minimize(&sphere, &sphere_budget(80, 12), None).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn single_evaluation_returns_that_candidate() {
        let r = EliteSearch.minimize(&sphere, &sphere_budget(1, 5), Some(&[0.0, 1.0, 0.5])).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.best, r.trace[0].params);
        assert_eq!(r.best, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn degenerate_bounds_pin_parameters() {
        let b = OptBudget::new(20, 1, vec![ParamBound::fixed("x", 1.0), ParamBound::new("y", 0.0, 1.0)]);
        let r = EliteSearch.minimize(&|p: &[f64]| (p[1] - 0.3).abs(), &b, None).unwrap();
        assert!(r.trace.iter().all(|e| e.params[0] == 1.0));
    }

    #[test]
    fn failing_objective_is_reported() {
        let err = EliteSearch.minimize(&|_: &[f64]| f64::NAN, &sphere_budget(5, 0), None).unwrap_err();
        assert!(matches!(err, Error::AllEvaluationsFailed(5)));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let b = OptBudget::new(5, 0, vec![ParamBound::new("x", 1.0, 0.0)]);
        assert!(b.validate().is_err());
    }
}

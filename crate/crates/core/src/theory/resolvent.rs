//! Self-consistent resolvent of the correlated Wishart ensemble and the
//! density recovered from it by ε-broadened inversion.
//!
//! G solves G = ⟨1/(z − (σ²/κ)(κ − 1 + zG)ξ)⟩ where ⟨·⟩ averages over the
//! spectrum of ξ. The physical branch has Im G < 0 for Im z > 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
pub const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventQuery {
    pub z: Complex64,
    pub epsilon: f64,
    pub xi_spectrum: Vec<f64>,
    pub kappa: f64,
    pub variance: f64,
}

impl ResolventQuery {
    pub fn new(lambda: f64, epsilon: f64, xi_spectrum: Vec<f64>, kappa: f64, variance: f64) -> Self {
        Self {
            z: Complex64::new(lambda, epsilon),
            epsilon,
            xi_spectrum,
            kappa,
            variance,
        }
    }

    pub fn solver(&self) -> Result<CwoeResolvent> {
        CwoeResolvent::new(&self.xi_spectrum, self.kappa, self.variance)
    }
}

/// Converged root together with how it was found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSolution {
    pub g: Complex64,
    pub iterations: usize,
    pub residual: f64,
    /// True when the direct iteration failed and ε-continuation was used.
    pub continued: bool,
}

/// Solver bound to one ξ spectrum. Repeated ξ eigenvalues are merged into
/// weights so the per-iteration cost is the number of distinct values.
#[derive(Debug, Clone)]
pub struct CwoeResolvent {
    values: Vec<f64>,
    weights: Vec<f64>,
    kappa: f64,
    variance: f64,
    mean_xi: f64,
}

impl CwoeResolvent {
    pub fn new(xi_spectrum: &[f64], kappa: f64, variance: f64) -> Result<Self> {
        if xi_spectrum.is_empty() {
            return Err(Error::Empty("xi spectrum"));
        }
        if let Some(&bad) = xi_spectrum.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!("xi eigenvalue {bad} is not positive")));
        }
        if !(kappa > 0.0) || !(variance > 0.0) {
            return Err(Error::InvalidArgument("kappa and variance must be positive".into()));
        }
        let mut sorted = xi_spectrum.to_vec();
        sorted.sort_by(f64::total_cmp);
        let total = sorted.len() as f64;
        let mut values: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for x in sorted {
            match values.last() {
                Some(&last) if (x - last).abs() <= 1e-13 * last => *weights.last_mut().unwrap() += 1.0,
                _ => {
                    values.push(x);
                    weights.push(1.0);
                }
            }
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let mean_xi = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
        Ok(Self {
            values,
            weights,
            kappa,
            variance,
            mean_xi,
        })
    }

    pub fn distinct_values(&self) -> usize {
        self.values.len()
    }

    /// Upper edge σ²⟨ξ⟩(1 + κ^{-1/2})², used as the spectral scale.
    pub fn spectral_scale(&self) -> f64 {
        self.variance * self.mean_xi * (1.0 + self.kappa.powf(-0.5)).powi(2)
    }

    /// Default broadening 1e-4 times the spectral scale.
    pub fn default_epsilon(&self) -> f64 {
        1e-4 * self.spectral_scale()
    }

    fn map(&self, z: Complex64, g: Complex64) -> Complex64 {
        let a = self.variance / self.kappa;
        let shift = (z * g + (self.kappa - 1.0)) * a;
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w / (z - shift * x))
            .sum()
    }

    /// Value and derivative of F(h) = h − (κ − 1) − ⟨z/(z − (σ²/κ)hξ)⟩ with
    /// h = κ − 1 + zG. Near the zero-eigenvalue atom G ~ (1 − κ)/z and h stays
    /// O(1), so Newton in h is well conditioned where Newton in G is not.
    fn newton_terms(&self, z: Complex64, h: Complex64) -> (Complex64, Complex64) {
        let a = self.variance / self.kappa;
        let mut m = Complex64::new(0.0, 0.0);
        let mut dm = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.values.iter().zip(&self.weights) {
            let inv = 1.0 / (z - h * (a * x));
            m += inv * w;
            dm += inv * inv * (w * a * x);
        }
        (h - (self.kappa - 1.0) - z * m, 1.0 - z * dm)
    }

    fn herglotz(z: Complex64, g: Complex64) -> bool {
        g.is_finite() && (z.im <= 0.0 || g.im < 0.0)
    }

    /// Herglotz sign plus |G|² ≤ −Im G / Im z, which every Stieltjes
    /// transform of a probability measure obeys. The second test rejects the
    /// nearly real spurious root outside the support.
    pub fn is_physical(z: Complex64, g: Complex64) -> bool {
        Self::herglotz(z, g) && (z.im <= 0.0 || g.norm_sqr() * z.im <= -g.im * (1.0 + 1e-9))
    }

    /// Damped fixed-point iteration from `start`.
    pub fn iterate(&self, z: Complex64, start: Complex64) -> Result<ResolventSolution> {
        let mut g = start;
        let mut residual = f64::INFINITY;
        for it in 1..=MAX_ITERATIONS {
            let next = self.map(z, g);
            residual = (next - g).norm();
            g = g * (1.0 - DAMPING) + next * DAMPING;
            if !g.is_finite() {
                break;
            }
            if residual <= RESIDUAL_TOL * g.norm().max(1.0) {
                return Ok(ResolventSolution {
                    g,
                    iterations: it,
                    residual,
                    continued: false,
                });
            }
        }
        Err(Error::ResolventNoConvergence {
            residual,
            iterations: MAX_ITERATIONS,
        })
    }

    /// Newton in h from `h`; returns (G, h, iterations, residual in G).
    fn newton(&self, z: Complex64, mut h: Complex64) -> Option<(Complex64, Complex64, usize, f64)> {
        let to_g = |h: Complex64| (h + (1.0 - self.kappa)) / z;
        for it in 1..=100 {
            let (f, df) = self.newton_terms(z, h);
            let step = f / df;
            if !step.is_finite() {
                return None;
            }
            h -= step;
            let g = to_g(h);
            let residual = (g - self.map(z, g)).norm();
            // the second test accepts roots limited by rounding in the map
            if residual <= RESIDUAL_TOL * g.norm().max(1.0) || step.norm() <= 1e-15 * h.norm().max(1.0) {
                return Self::is_physical(z, g).then_some((g, h, it, residual));
            }
        }
        None
    }

    /// Track the physical root from a large broadening down to Im z, carrying
    /// h = κ − 1 + zG between stages since it varies slowly where G ~ 1/z.
    /// The shrink factor adapts: a failed stage is retried closer to the last
    /// solved broadening.
    fn continuation(&self, z: Complex64) -> Result<ResolventSolution> {
        let target = z.im;
        let mut solved_eps = self.spectral_scale().max(target);
        let z0 = Complex64::new(z.re, solved_eps);
        let (mut g, mut h, mut total, mut residual) =
            self.newton(z0, Complex64::new(1.0, 0.0) * self.kappa).ok_or(Error::ResolventNoConvergence {
                residual: f64::INFINITY,
                iterations: 0,
            })?;
        let mut ratio: f64 = 0.5;
        let mut failures = 0;
        while solved_eps > target {
            let eps = (solved_eps * ratio).max(target);
            match self.newton(Complex64::new(z.re, eps), h) {
                Some((g_new, h_new, its, res)) => {
                    g = g_new;
                    h = h_new;
                    total += its;
                    residual = res;
                    solved_eps = eps;
                    ratio = (ratio * ratio).max(0.05);
                }
                None => {
                    failures += 1;
                    if failures > 200 {
                        return Err(Error::ResolventNoConvergence {
                            residual,
                            iterations: total,
                        });
                    }
                    ratio = ratio.sqrt();
                }
            }
        }
        Ok(ResolventSolution {
            g,
            iterations: total,
            residual,
            continued: true,
        })
    }

    /// Physical root at `z`, starting the iteration from `start`.
    pub fn solve_from(&self, z: Complex64, start: Complex64) -> Result<ResolventSolution> {
        match self.iterate(z, start) {
            Ok(s) if Self::is_physical(z, s.g) => Ok(s),
            _ => self.continuation(z),
        }
    }

    pub fn solve(&self, z: Complex64) -> Result<ResolventSolution> {
        self.solve_from(z, z.inv())
    }

    /// −Im G(λ + iε)/π.
    pub fn density(&self, lambda: f64, epsilon: f64) -> Result<f64> {
        let g = self.solve(Complex64::new(lambda, epsilon))?.g;
        Ok((-g.im / PI).max(0.0))
    }

    /// Broadened contribution (1 − κ)₊ ε / (π(λ² + ε²)) of the atom at zero,
    /// to subtract when only the continuous part is wanted.
    pub fn zero_atom_density(&self, lambda: f64, epsilon: f64) -> f64 {
        (1.0 - self.kappa).max(0.0) * epsilon / (PI * (lambda * lambda + epsilon * epsilon))
    }

    /// Density on a grid, warm-starting each point from its neighbour.
    pub fn density_grid(&self, lambdas: &[f64], epsilon: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(lambdas.len());
        let mut prev: Option<Complex64> = None;
        for &lambda in lambdas {
            let z = Complex64::new(lambda, epsilon);
            let sol = self.solve_from(z, prev.unwrap_or_else(|| z.inv()))?;
            prev = Some(sol.g);
            out.push((-sol.g.im / PI).max(0.0));
        }
        Ok(out)
    }
}

/// Resolvent at the query's z.
pub fn cwoe_resolvent(q: &ResolventQuery) -> Result<Complex64> {
    if !(q.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    Ok(q.solver()?.solve(q.z)?.g)
}

/// Density at `lambda` with the template's ε, spectrum and shape.
pub fn cwoe_density(lambda: f64, template: &ResolventQuery) -> Result<f64> {
    if !(template.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    template.solver()?.density(lambda, template.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::mp::{mp_density, mp_edges};
    use crate::theory::oneblock::oneblock_density;

    /// Root of (σ²z/κ)G² − (z − σ²(κ − 1)/κ)G + 1 = 0 with Im G < 0.
    fn mp_stieltjes(z: Complex64, kappa: f64, variance: f64) -> Complex64 {
        let a = z * (variance / kappa);
        let b = -(z - variance * (kappa - 1.0) / kappa);
        let disc = (b * b - a * 4.0).sqrt();
        let r1 = (-b + disc) / (a * 2.0);
        let r2 = (-b - disc) / (a * 2.0);
        if r1.im < r2.im {
            r1
        } else {
            r2
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CwoeResolvent::new(&[], 1.0, 1.0).is_err());
        assert!(CwoeResolvent::new(&[1.0, -0.1], 1.0, 1.0).is_err());
        assert!(CwoeResolvent::new(&[1.0], 0.0, 1.0).is_err());
        let q = ResolventQuery::new(1.0, 0.0, vec![1.0], 1.0, 1.0);
        assert!(cwoe_resolvent(&q).is_err());
    }

    #[test]
    fn merges_repeated_eigenvalues() {
        let s = CwoeResolvent::new(&[0.5, 0.5, 0.5, 2.0], 0.5, 1.0).unwrap();
        assert_eq!(s.distinct_values(), 2);
        assert_eq!(s.weights, vec![0.75, 0.25]);
    }

    #[test]
    fn identity_matches_closed_form_root() {
        for &kappa in &[0.5, 1.0, 2.0] {
            let s = CwoeResolvent::new(&vec![1.0; 16], kappa, 1.0).unwrap();
            let (lo, hi) = mp_edges(kappa, 1.0);
            for &lambda in &[0.05, lo + 0.1, 0.5 * (lo + hi), hi - 0.1, hi + 1.0] {
                let z = Complex64::new(lambda, 1e-3);
                let g = s.solve(z).unwrap().g;
                let want = mp_stieltjes(z, kappa, 1.0);
                assert!((g - want).norm() < 1e-8 * want.norm().max(1.0), "κ={kappa} λ={lambda}: {g} vs {want}");
                assert!(g.im < 0.0);
            }
        }
    }

    #[test]
    fn far_field() {
        let s = CwoeResolvent::new(&[0.5, 1.0, 1.5], 0.5, 1.0).unwrap();
        let z = Complex64::new(100.0 * s.spectral_scale(), 1e-3);
        let g = s.solve(z).unwrap().g;
        assert!((g * z - 1.0).norm() < 0.02);
    }

    #[test]
    fn mp_reduction_at_square_shape() {
        // at κ = 1 the broadening error is second order in ε on the support
        let s = CwoeResolvent::new(&[1.0], 1.0, 1.0).unwrap();
        let (lo, hi) = mp_edges(1.0, 1.0);
        let eps = 1e-6 * hi;
        let grid: Vec<f64> = (0..200).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 200.0).collect();
        let dens = s.density_grid(&grid, eps).unwrap();
        for (l, d) in grid.iter().zip(&dens) {
            assert!((d - mp_density(*l, 1.0, 1.0)).abs() <= 3.0 * eps / PI, "λ={l}");
        }
    }

    #[test]
    fn mp_point_value_rectangular() {
        let q = ResolventQuery::new(1.0, 1e-4, vec![1.0; 4], 2.0, 1.0);
        let d = cwoe_density(1.0, &q).unwrap();
        assert!((d - mp_density(1.0, 2.0, 1.0)).abs() <= 3.0 * 1e-4, "{d}");
    }

    #[test]
    fn small_kappa_lower_edge_stays_physical() {
        // cold starts near the lower edge at κ < 1 need continuation
        let s = CwoeResolvent::new(&[1.0], 0.5, 1.0).unwrap();
        let (lo, hi) = mp_edges(0.5, 1.0);
        let eps = s.default_epsilon();
        for &lambda in &[0.02, lo * 0.9, lo * 1.05, 1.0, hi * 0.99] {
            let z = Complex64::new(lambda, eps);
            let sol = s.solve(z).unwrap();
            assert!(sol.g.im < 0.0);
            let want = mp_stieltjes(z, 0.5, 1.0);
            assert!((sol.g - want).norm() < 1e-7 * want.norm().max(1.0), "λ={lambda}");
        }
    }

    #[test]
    fn far_tail_is_small() {
        let s = CwoeResolvent::new(&[1.0], 2.0, 1.0).unwrap();
        let eps = 1e-3;
        let d = s.density(50.0, eps).unwrap();
        assert!(d <= eps / PI * s.spectral_scale());
    }

    #[test]
    fn one_block_bulk() {
        let (n, kappa, c) = (2000usize, 0.5, 0.5);
        let mut xi = vec![1.0 - c; n - 1];
        xi.push(1.0 - c + n as f64 * c);
        let s = CwoeResolvent::new(&xi, kappa, 1.0).unwrap();
        let eps = 1e-4;
        for &lambda in &[0.3, 1.0, 2.0] {
            let got = s.density(lambda, eps).unwrap();
            let (want, sep) = oneblock_density(lambda, n, kappa, c);
            assert!(sep.is_some());
            assert!((got - want).abs() < 2e-3 + 1e-2 * want, "λ={lambda}: {got} vs {want}");
        }
    }

    #[test]
    fn herglotz_over_grid() {
        let xi: Vec<f64> = (0..64).map(|i| 0.2 + 0.05 * i as f64).collect();
        let s = CwoeResolvent::new(&xi, 0.5, 1.0).unwrap();
        let grid: Vec<f64> = (0..100).map(|i| -1.0 + 0.2 * i as f64).collect();
        for &lambda in &grid {
            let g = s
                .solve(Complex64::new(lambda, s.default_epsilon()))
                .unwrap_or_else(|e| panic!("λ={lambda}: {e:?}"))
                .g;
            assert!(g.im < 0.0, "λ={lambda}: {g}");
        }
    }
}

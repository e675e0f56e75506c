//! Graded radial discretization of ℝⁿ: quadrature, norms, radial difference
//! operators, the trace at a sphere, and the test-function library.
//!
//! The mesh is geometric on (r_min, 1] (resolving power-law singularities at
//! the origin) and uniform on [1, R_max] (resolving exponential tails). All
//! integrals over ℝⁿ reduce to ∫ g(r) dr with g(r) = σ_{n-1} f(r) r^{n-1};
//! the node weights integrate the piecewise-quadratic interpolant of g
//! exactly. Profiles that blow up at the origin carry an analytic power-law
//! extension on (0, r_min] whose closed-form contribution is added to every
//! norm.

use crate::specfun;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{0}")]
    Domain(String),
    #[error("norm diverges: {0}")]
    Divergent(String),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("extension mismatch: |v1 - c r1^g| = {0:.3e} exceeds tolerance {1:.3e}")]
    ExtensionMismatch(f64, f64),
    #[error(transparent)]
    SpecFun(#[from] specfun::SpecFunError),
}

/// Construction parameters of a graded radial grid.
///
/// The uniform tail spacing is derived from the geometric end-step
/// 1 - 10^{-1/nodes_per_decade}, which keeps the mesh grading C¹ across the
/// junction at r = 1 and all difference stencils uniformly second order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridParams {
    pub n: usize,
    pub r_min: f64,
    pub nodes_per_decade: usize,
    pub r_max: f64,
    /// radii that must appear as nodes (gluing spheres, fit anchors)
    pub pins: Vec<f64>,
}

impl GridParams {
    pub fn standard(n: usize) -> Self {
        Self {
            n,
            r_min: 1e-6,
            nodes_per_decade: 300,
            r_max: 40.0,
            pins: Vec::new(),
        }
    }

    pub fn with_pin(mut self, r: f64) -> Self {
        self.pins.push(r);
        self
    }

    /// tail spacing matched to the geometric end-step (≈ ln10 / per-decade)
    pub fn h_tail(&self) -> f64 {
        1.0 - 10f64.powf(-1.0 / self.nodes_per_decade as f64)
    }

    /// One refinement level: doubled node density in both mesh regions.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_decade: self.nodes_per_decade * 2,
            ..self.clone()
        }
    }
}

#[derive(Debug)]
pub struct RadialGrid {
    pub params: GridParams,
    pub n: usize,
    nodes: Vec<f64>,
    /// weights for ∫_0^{R_max} g(r) dr ≈ Σ w_i g(r_i) (g carries the r^{n-1})
    weights: Vec<f64>,
    /// volume weights q_i = σ_{n-1} w_i r_i^{n-1}
    vol_weights: Vec<f64>,
    /// exact cell moments σ_{n-1} ∫_{r_i}^{r_{i+1}} r^{n-1} dr
    cell_moments: Vec<f64>,
    sphere_area: f64,
}

impl RadialGrid {
    pub fn new(params: GridParams) -> Arc<Self> {
        assert!(params.n >= 1 && params.r_min > 0.0 && params.r_max > 1.0);
        let mut nodes = Vec::new();
        let decades = (1.0 / params.r_min).log10();
        let m = (decades * params.nodes_per_decade as f64).round() as usize;
        let lg_min = params.r_min.log10();
        for k in 0..=m {
            let lg = lg_min * (1.0 - k as f64 / m as f64);
            nodes.push(10f64.powf(lg));
        }
        let tail_cells = ((params.r_max - 1.0) / params.h_tail()).ceil() as usize;
        let h = (params.r_max - 1.0) / tail_cells as f64;
        for k in 1..=tail_cells {
            nodes.push(1.0 + k as f64 * h);
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * a.max(1.0));
        // pins replace the nearest node and the two neighbors are smoothed,
        // keeping interval ratios below 2 (positive quadrature weights)
        for &p in &params.pins {
            assert!(p > params.r_min && p < params.r_max);
            let j = match nodes.binary_search_by(|v| v.partial_cmp(&p).unwrap()) {
                Ok(_) => continue,
                Err(j) => j,
            };
            let j = if (nodes[j] - p).abs() < (p - nodes[j - 1]).abs() { j } else { j - 1 };
            if (nodes[j] - p).abs() < 1e-12 * p.max(1.0) {
                continue;
            }
            nodes[j] = p;
            if j >= 2 {
                nodes[j - 1] = 0.5 * (nodes[j - 2] + p);
            }
            if j + 2 < nodes.len() {
                nodes[j + 1] = 0.5 * (p + nodes[j + 2]);
            }
        }

        let weights = composite_weights(&nodes);
        let nf = params.n as f64;
        let sphere_area = crate::unit_sphere_area(params.n);
        let vol_weights: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(r, w)| sphere_area * w * r.powf(nf - 1.0))
            .collect();
        let cell_moments: Vec<f64> = nodes
            .windows(2)
            .map(|p| sphere_area * (p[1].powf(nf) - p[0].powf(nf)) / nf)
            .collect();
        assert!(weights.iter().all(|&w| w > 0.0), "non-positive quadrature weight");
        Arc::new(Self {
            n: params.n,
            params,
            nodes,
            weights,
            vol_weights,
            cell_moments,
            sphere_area,
        })
    }

    pub fn standard(n: usize) -> Arc<Self> {
        Self::new(GridParams::standard(n))
    }

    pub fn refine(self: &Arc<Self>) -> Arc<Self> {
        Self::new(self.params.refined())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// σ_{n-1} w_i r_i^{n-1}: the weight of node i in ∫_{ℝⁿ} · dx.
    pub fn vol_weights(&self) -> &[f64] {
        &self.vol_weights
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tag(&self) -> String {
        format!(
            "n{}:rmin{:.0e}:pd{}:R{}",
            self.n, self.params.r_min, self.params.nodes_per_decade, self.params.r_max
        )
    }

    /// largest node index with r_i <= r (nodes are sorted)
    pub fn index_at_or_below(&self, r: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|v| v.partial_cmp(&r).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    pub fn node_index(&self, r: f64) -> Option<usize> {
        let i = self.index_at_or_below(r);
        ((self.nodes[i] - r).abs() < 1e-11 * r.max(1.0)).then_some(i)
    }

    /// Node weights for ∫ over the shell {a <= |x| <= b}, with the composite
    /// rule rebuilt on the node subrange so region splits are clean. a and b
    /// must be nodes.
    pub fn volume_weights_between(&self, a: f64, b: f64) -> Vec<(usize, f64)> {
        let i0 = self.node_index(a).expect("region boundary must be a node");
        let i1 = self.node_index(b).expect("region boundary must be a node");
        let sub = &self.nodes[i0..=i1];
        let w = composite_weights(sub);
        let nf = self.n as f64;
        sub.iter()
            .zip(&w)
            .enumerate()
            .map(|(k, (r, wk))| (i0 + k, self.sphere_area * wk * r.powf(nf - 1.0)))
            .collect()
    }

    /// ∫ f dx over the shell {a <= |x| <= b}; a, b must be nodes.
    pub fn integrate_shell(&self, values: &[f64], a: f64, b: f64) -> f64 {
        self.volume_weights_between(a, b)
            .iter()
            .map(|(i, w)| w * values[*i])
            .sum()
    }

    /// Quadratic-fit first derivative at every node (one-sided fits at ends).
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(v.len(), n);
        let mut d = vec![0.0; n];
        for i in 0..n {
            let j = i.clamp(1, n - 2);
            let (x0, x1, x2) = (self.nodes[j - 1], self.nodes[j], self.nodes[j + 1]);
            let (f0, f1, f2) = (v[j - 1], v[j], v[j + 1]);
            d[i] = lagrange3_d1(x0, x1, x2, f0, f1, f2, self.nodes[i]);
        }
        d
    }

    /// Quadratic-fit second derivative at every node.
    pub fn second_derivative(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(v.len(), n);
        let mut d = vec![0.0; n];
        for i in 0..n {
            let j = i.clamp(1, n - 2);
            let (x0, x1, x2) = (self.nodes[j - 1], self.nodes[j], self.nodes[j + 1]);
            let (f0, f1, f2) = (v[j - 1], v[j], v[j + 1]);
            d[i] = lagrange3_d2(x0, x1, x2, f0, f1, f2);
        }
        d
    }

    /// -Δu = -(u'' + (n-1)/r u') at every node.
    pub fn neg_laplacian_values(&self, v: &[f64]) -> Vec<f64> {
        let d1 = self.derivative(v);
        let d2 = self.second_derivative(v);
        let nf = self.n as f64;
        (0..self.len())
            .map(|i| -(d2[i] + (nf - 1.0) / self.nodes[i] * d1[i]))
            .collect()
    }

    /// Stiffness form σ_{n-1} ∫ u' v' r^{n-1} dr with midpoint gradients and
    /// exact cell moments; symmetric positive semidefinite tridiagonal.
    pub fn stiffness(&self) -> crate::linalg::SymTridiag {
        let n = self.len();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n - 1];
        for i in 0..n - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            let k = self.cell_moments[i] / (h * h);
            diag[i] += k;
            diag[i + 1] += k;
            sub[i] -= k;
        }
        crate::linalg::SymTridiag { diag, sub }
    }

    /// diag(q_i c(r_i)) as a tridiagonal (for pencils against the stiffness)
    pub fn weighted_mass(&self, c: impl Fn(f64) -> f64) -> crate::linalg::SymTridiag {
        crate::linalg::SymTridiag {
            diag: self
                .nodes
                .iter()
                .zip(&self.vol_weights)
                .map(|(r, q)| q * c(*r))
                .collect(),
            sub: vec![0.0; self.len() - 1],
        }
    }

    /// ⟨u,v⟩_V = ∫ (∇u·∇v + V u v) dx on the discrete space.
    pub fn inner_v(&self, u: &[f64], v: &[f64], pot: impl Fn(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            s += self.cell_moments[i] * (u[i + 1] - u[i]) * (v[i + 1] - v[i]) / (h * h);
        }
        for i in 0..self.len() {
            s += self.vol_weights[i] * pot(self.nodes[i]) * u[i] * v[i];
        }
        s
    }

    pub fn norm_v(&self, u: &[f64], pot: impl Fn(f64) -> f64) -> f64 {
        self.inner_v(u, u, pot).sqrt()
    }

    /// H¹ inner product (V ≡ 1).
    pub fn inner_h1(&self, u: &[f64], v: &[f64]) -> f64 {
        self.inner_v(u, v, |_| 1.0)
    }

    pub fn norm_h1(&self, u: &[f64]) -> f64 {
        self.inner_h1(u, u).sqrt()
    }

    pub fn norm_l2(&self, u: &[f64]) -> f64 {
        self.vol_weights
            .iter()
            .zip(u)
            .map(|(q, v)| q * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Interpolated value at radius rho (cubic Lagrange through the 4
    /// nearest nodes; exact nodal value when rho is a node).
    pub fn trace(&self, v: &[f64], rho: f64) -> Result<f64, GridError> {
        if rho < self.r_min() || rho > self.r_max() {
            return Err(GridError::Domain(format!("trace radius {rho} outside grid")));
        }
        if let Some(i) = self.node_index(rho) {
            return Ok(v[i]);
        }
        let i = self.index_at_or_below(rho).clamp(1, self.len() - 3);
        let idx = [i - 1, i, i + 1, i + 2];
        let mut s = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (rho - self.nodes[idx[b]]) / (self.nodes[idx[a]] - self.nodes[idx[b]]);
                }
            }
            s += l * v[idx[a]];
        }
        Ok(s)
    }

    /// One-sided radial derivatives at rho: interior-sided (limit from
    /// within B_ρ) and exterior-sided, each a quadratic fit through three
    /// nodes on that side (including rho itself when it is a node).
    pub fn one_sided_derivatives(&self, v: &[f64], rho: f64) -> Result<(f64, f64), GridError> {
        if rho < self.r_min() || rho > self.r_max() {
            return Err(GridError::Domain(format!("radius {rho} outside grid")));
        }
        let i = self.index_at_or_below(rho);
        if i < 2 || i + 3 >= self.len() {
            return Err(GridError::Domain(format!(
                "one-sided stencils need interior radius, got {rho}"
            )));
        }
        let (ins, out) = if self.node_index(rho).is_some() {
            ([i - 2, i - 1, i], [i, i + 1, i + 2])
        } else {
            ([i - 2, i - 1, i], [i + 1, i + 2, i + 3])
        };
        let d_at = |idx: [usize; 3]| {
            lagrange3_d1(
                self.nodes[idx[0]],
                self.nodes[idx[1]],
                self.nodes[idx[2]],
                v[idx[0]],
                v[idx[1]],
                v[idx[2]],
                rho,
            )
        };
        Ok((d_at(ins), d_at(out)))
    }
}

/// Derivative of the Newton-form quadratic through (x0,f0),(x1,f1),(x2,f2)
/// at x. Built from divided differences so constants differentiate to
/// exactly zero (no large-abscissa cancellation).
fn lagrange3_d1(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64, x: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    let d1 = (f1 - f0) / h0;
    let d2 = ((f2 - f1) / h1 - d1) / (h0 + h1);
    d1 + d2 * ((x - x0) + (x - x1))
}

fn lagrange3_d2(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    let d1 = (f1 - f0) / h0;
    2.0 * ((f2 - f1) / h1 - d1) / (h0 + h1)
}

/// Node weights integrating the piecewise-quadratic interpolant exactly:
/// quadratics through node triples over interval pairs, plus a one-interval
/// closing rule when the interval count is odd.
fn composite_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert!(n >= 3, "need at least 3 nodes");
    let mut w = vec![0.0; n];
    let mut i = 0;
    while i + 2 < n {
        let tw = quadratic_weights(nodes[i], nodes[i + 1], nodes[i + 2], nodes[i], nodes[i + 2]);
        w[i] += tw[0];
        w[i + 1] += tw[1];
        w[i + 2] += tw[2];
        i += 2;
    }
    if i + 1 < n {
        // odd interval count: close with the quadratic through the last triple
        let tw = quadratic_weights(
            nodes[n - 3],
            nodes[n - 2],
            nodes[n - 1],
            nodes[n - 2],
            nodes[n - 1],
        );
        w[n - 3] += tw[0];
        w[n - 2] += tw[1];
        w[n - 1] += tw[2];
    }
    w
}

/// ∫_A^B of the three quadratic Lagrange basis polynomials on (x0, x1, x2),
/// computed in the frame shifted to x1 so cell-sized results never come from
/// differences of abscissa-cubed terms.
fn quadratic_weights(x0: f64, x1: f64, x2: f64, a: f64, b: f64) -> [f64; 3] {
    let (t0, t2) = (x0 - x1, x2 - x1);
    let (ta, tb) = (a - x1, b - x1);
    let pair = |u: f64, v: f64| -> f64 {
        // ∫ (t-u)(t-v) dt over [ta, tb]
        let part = |t: f64| t * t * t / 3.0 - (u + v) * t * t / 2.0 + u * v * t;
        part(tb) - part(ta)
    };
    [
        pair(0.0, t2) / (t0 * (t0 - t2)),
        pair(t0, t2) / (t0 * t2),
        pair(t0, 0.0) / ((t2 - t0) * t2),
    ]
}

/// Analytic power-law continuation c r^g on (0, r_min], carried by singular
/// profiles so norms and functionals can add the un-meshed origin mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerExtension {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerExtension {
    /// ∫_0^{r1} |c r^g|^q σ r^{n-1} dr, or None when it diverges.
    pub fn lq_mass(&self, q: f64, n: usize, r1: f64, sphere_area: f64) -> Option<f64> {
        let e = self.exponent * q + n as f64;
        (e > 0.0).then(|| sphere_area * self.coef.abs().powf(q) * r1.powf(e) / e)
    }
}

/// Sampled radial function plus optional origin extension.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    extension: Option<PowerExtension>,
}

impl GridFunction {
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        assert!(values.iter().all(|v| v.is_finite()), "non-finite value");
        Self { grid, values, extension: None }
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::from_values(grid.clone(), values)
    }

    /// Attach an analytic origin extension; the first node value must match
    /// the power law to `tol` (relative).
    pub fn with_extension(mut self, ext: PowerExtension, tol: f64) -> Result<Self, GridError> {
        let predicted = ext.coef * self.grid.r_min().powf(ext.exponent);
        let err = (self.values[0] - predicted).abs() / predicted.abs().max(1e-300);
        if err > tol {
            return Err(GridError::ExtensionMismatch(err, tol));
        }
        self.extension = Some(ext);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> Option<PowerExtension> {
        self.extension
    }

    /// L^q(ℝⁿ) norm; q = ∞ returns the max of the sampled |values|.
    pub fn norm_lq(&self, q: f64) -> Result<f64, GridError> {
        if !(q >= 1.0) {
            return Err(GridError::Domain(format!("need q >= 1, got {q}")));
        }
        if q.is_infinite() {
            return Ok(self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        let mut s: f64 = self
            .grid
            .vol_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs().powf(q))
            .sum();
        match self.extension {
            Some(ext) => {
                match ext.lq_mass(q, self.grid.n, self.grid.r_min(), self.grid.sphere_area()) {
                    Some(m) => s += m,
                    None => {
                        return Err(GridError::Divergent(format!(
                            "origin power r^{} not in L^{q}",
                            ext.exponent
                        )))
                    }
                }
            }
            None => s += self.smooth_origin_sliver(self.values[0].abs().powf(q)),
        }
        Ok(s.powf(1.0 / q))
    }

    /// ∫ over the un-meshed ball B_{r_min} for profiles smooth at the
    /// origin, approximating the integrand by its first-node value. Only
    /// n = 1 sees this at a relevant scale (no r^{n-1} damping).
    fn smooth_origin_sliver(&self, integrand_at_r1: f64) -> f64 {
        let n = self.grid.n as f64;
        self.grid.sphere_area() * integrand_at_r1 * self.grid.r_min().powf(n) / n
    }

    /// Weighted norm (∫ |u|^q e^{-√ω |x|} dx)^{1/q}.
    pub fn weighted_norm(&self, q: f64, omega: f64) -> Result<f64, GridError> {
        if !(q >= 1.0) || !(omega > 0.0) {
            return Err(GridError::Domain("need q >= 1 and omega > 0".into()));
        }
        let sw = omega.sqrt();
        let mut s: f64 = self
            .grid
            .vol_weights()
            .iter()
            .zip(self.grid.nodes())
            .zip(&self.values)
            .map(|((w, r), v)| w * v.abs().powf(q) * (-sw * r).exp())
            .sum();
        match self.extension {
            // e^{-√ω r} = 1 + O(r_min) on the extension range
            Some(ext) => {
                match ext.lq_mass(q, self.grid.n, self.grid.r_min(), self.grid.sphere_area()) {
                    Some(m) => s += m,
                    None => return Err(GridError::Divergent("origin power".into())),
                }
            }
            None => s += self.smooth_origin_sliver(self.values[0].abs().powf(q)),
        }
        Ok(s.powf(1.0 / q))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("r,value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!("{r},{v}\n"));
        }
        out
    }

    pub fn extension_sidecar_json(&self) -> String {
        match self.extension {
            Some(e) => serde_json::to_string_pretty(&e).unwrap(),
            None => "null".to_string(),
        }
    }
}

/// Compactly supported C² (or C^{1,1}) radial test function: sampled values
/// plus analytic first/second derivative samples and the origin data needed
/// by the distributional pairing.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub f: GridFunction,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    /// support radius: f ≡ 0 for r >= support
    pub support: f64,
    /// φ(0) and φ''(0) (radial), for the analytic origin pieces
    pub value_at_origin: f64,
    pub d2_at_origin: f64,
}

impl TestFunction {
    pub fn new(
        grid: &Arc<RadialGrid>,
        support: f64,
        f: impl Fn(f64) -> f64,
        d1: impl Fn(f64) -> f64,
        d2: impl Fn(f64) -> f64,
    ) -> Self {
        let fv = GridFunction::from_fn(grid, |r| if r < support { f(r) } else { 0.0 });
        let d1v = grid.nodes().iter().map(|&r| if r < support { d1(r) } else { 0.0 }).collect();
        let d2v = grid.nodes().iter().map(|&r| if r < support { d2(r) } else { 0.0 }).collect();
        Self {
            f: fv,
            d1: d1v,
            d2: d2v,
            support,
            value_at_origin: f(0.0),
            d2_at_origin: d2(0.0),
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.f.grid()
    }

    /// -Δφ from the analytic derivative descriptors.
    pub fn neg_laplacian(&self) -> Vec<f64> {
        let g = self.grid();
        let nf = g.n as f64;
        g.nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| -(self.d2[i] + (nf - 1.0) / r * self.d1[i]))
            .collect()
    }

    /// -Δφ at the origin (radial): -n φ''(0).
    pub fn neg_laplacian_at_origin(&self) -> f64 {
        -(self.grid().n as f64) * self.d2_at_origin
    }

    /// sup(|φ| + |φ'| + |φ''|), the C² scale used in residual tolerances.
    pub fn c2_norm(&self) -> f64 {
        self.f
            .values()
            .iter()
            .zip(&self.d1)
            .zip(&self.d2)
            .map(|((a, b), c)| a.abs() + b.abs() + c.abs())
            .fold(self.value_at_origin.abs() + self.d2_at_origin.abs(), f64::max)
    }

    /// (∫ u²/|x|² dx) / (∫ |∇u|² dx), with the gradient from the analytic
    /// descriptor. None when the gradient vanishes identically.
    pub fn hardy_quotient(&self) -> Option<f64> {
        let g = self.grid();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..g.len() {
            let r = g.r(i);
            let q = g.vol_weights()[i];
            let v = self.f.values()[i];
            num += q * v * v / (r * r);
            den += q * self.d1[i] * self.d1[i];
        }
        (den > 0.0).then(|| num / den)
    }
}

/// Compact C³ bump (1 - (r/radius)²)⁴ supported in B_radius, value 1 at the
/// origin. Polynomial edges keep the derivative scales ~1/radius² without
/// the boundary layers of the exponential mollifier, so the pairing
/// quadrature resolves it; W^{2,∞} test functions are admissible for the
/// distributional pairing.
pub fn smooth_bump(grid: &Arc<RadialGrid>, radius: f64) -> TestFunction {
    let ir = 1.0 / radius;
    let g0 = move |r: f64| {
        let t = r * ir;
        if t >= 1.0 {
            return 0.0;
        }
        (1.0 - t * t).powi(4)
    };
    let d1 = move |r: f64| {
        let t = r * ir;
        if t >= 1.0 {
            return 0.0;
        }
        -8.0 * t * (1.0 - t * t).powi(3) * ir
    };
    let d2 = move |r: f64| {
        let t = r * ir;
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t * t;
        (-8.0 * s.powi(3) + 48.0 * t * t * s * s) * ir * ir
    };
    TestFunction::new(grid, radius, g0, d1, d2)
}

/// Compact C³ annular bump (1 - s²)⁴, s = (r - center)/width, supported in
/// {|r - center| < width}. Requires center > width (support away from 0).
pub fn annulus_bump(grid: &Arc<RadialGrid>, center: f64, width: f64) -> TestFunction {
    assert!(center > width, "annulus bump support must avoid the origin");
    let g0 = move |r: f64| {
        let s = (r - center) / width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        (1.0 - s * s).powi(4)
    };
    let d1 = move |r: f64| {
        let s = (r - center) / width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        -8.0 * s * (1.0 - s * s).powi(3) / width
    };
    let d2 = move |r: f64| {
        let s = (r - center) / width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - s * s;
        (-8.0 * q.powi(3) + 48.0 * s * s * q * q) / (width * width)
    };
    TestFunction::new(grid, center + width, g0, d1, d2)
}

/// The C^{1,1} Bessel bump φ_R: with v(r) = J_{(n-2)/2}(r) r^{(2-n)/2}
/// (the radial solution of -Δψ = ψ), r₀ the first critical radius where
/// v'(r₀) = 0 and κ = v(r₀) < 0,
///   φ_R(x) = (v(|x|/R) - κ) · 1_{|x| <= R r₀}.
/// Satisfies -Δφ_R + V φ_R = ((V + 1/R²) φ_R - |κ|/R²) 1_{|x| <= R r₀}.
pub struct BesselBump {
    pub phi: TestFunction,
    pub r0: f64,
    pub kappa: f64,
    pub scale: f64,
}

pub fn bessel_bump(grid: &Arc<RadialGrid>, scale: f64) -> Result<BesselBump, GridError> {
    let n = grid.n;
    let nu = (n as f64 - 2.0) / 2.0;
    let v = move |r: f64| -> f64 {
        match n {
            1 => (2.0 / std::f64::consts::PI).sqrt() * r.cos(),
            3 => {
                let c = (2.0 / std::f64::consts::PI).sqrt();
                if r < 1e-8 {
                    c * (1.0 - r * r / 6.0)
                } else {
                    c * r.sin() / r
                }
            }
            _ => {
                if r < 1e-8 {
                    2f64.powf(-nu) / crate::gamma(1.0 + nu)
                } else {
                    specfun::bessel_j(nu, r).unwrap() * r.powf(-nu)
                }
            }
        }
    };
    // v' = -J_{n/2}(r) r^{-(n-2)/2}
    let vp = move |r: f64| -> f64 {
        match n {
            1 => -(2.0 / std::f64::consts::PI).sqrt() * r.sin(),
            _ => {
                if r < 1e-10 {
                    0.0
                } else {
                    -specfun::bessel_j(nu + 1.0, r).unwrap() * r.powf(-nu)
                }
            }
        }
    };
    // from the radial equation: v'' = -v - (n-1)/r v', with v''(0) = -v(0)/n
    let vpp = move |r: f64| -> f64 {
        if r < 1e-10 {
            -v(0.0) / n as f64
        } else {
            -v(r) - (n as f64 - 1.0) / r * vp(r)
        }
    };
    // r0 = first positive zero of J_{n/2} = first critical radius of v
    let r0 = match n {
        1 => std::f64::consts::PI,
        _ => specfun::bessel_j_first_zero(n as f64 / 2.0)?,
    };
    let kappa = v(r0);
    if kappa >= 0.0 {
        return Err(GridError::Domain(format!("bump minimum not negative: {kappa}")));
    }
    let support = scale * r0;
    if support > grid.r_max() {
        return Err(GridError::Domain(format!(
            "bump support {support} exceeds grid radius {}",
            grid.r_max()
        )));
    }
    let phi = TestFunction::new(
        grid,
        support,
        move |r| v(r / scale) - kappa,
        move |r| vp(r / scale) / scale,
        move |r| vpp(r / scale) / (scale * scale),
    );
    Ok(BesselBump { phi, r0, kappa, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn small_grid(n: usize) -> Arc<RadialGrid> {
        RadialGrid::new(GridParams {
            n,
            r_min: 1e-6,
            nodes_per_decade: 60,
            r_max: 20.0,
            pins: vec![],
        })
    }

    #[test]
    fn quadrature_exact_on_low_powers() {
        // ∫_{ℝⁿ} r^k dx over B_{R_max} = σ R^{k+n}/(k+n), k = 0, 1, 2
        let g = small_grid(3);
        for k in 0..=2 {
            let f = GridFunction::from_fn(&g, |r| r.powi(k));
            let got: f64 = g
                .vol_weights()
                .iter()
                .zip(f.values())
                .map(|(w, v)| w * v)
                .sum();
            let e = k as f64 + 3.0;
            let want = g.sphere_area() * g.r_max().powf(e) / e;
            assert!(rel(got, want) < 1e-10, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn norm_lq_examples() {
        // u ≡ 1 restricted to B_1 (n=3), q=1 → 4π/3; the indicator region
        // boundary sits on a node so the split rule is exact
        let g = RadialGrid::new(GridParams::standard(3));
        let u = GridFunction::from_fn(&g, |_| 1.0);
        let got = g.integrate_shell(u.values(), g.r_min(), 1.0);
        assert!(
            (got - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-8,
            "{got}"
        );
        // u ≡ 0
        let z = GridFunction::from_fn(&g, |_| 0.0);
        assert_eq!(z.norm_lq(2.0).unwrap(), 0.0);
        // u = r^{-1} near 0 in n=3 is not in L³
        let s = GridFunction::from_fn(&g, |r| 1.0 / r)
            .with_extension(PowerExtension { coef: 1.0, exponent: -1.0 }, 1e-12)
            .unwrap();
        assert!(matches!(s.norm_lq(3.0), Err(GridError::Divergent(_))));
        assert!(s.norm_lq(2.0).is_ok());
    }

    #[test]
    fn weighted_norm_examples() {
        // u ≡ 1, n=1, q=1, ω=1 → ∫_ℝ e^{-|x|} dx = 2
        let g = RadialGrid::new(GridParams {
            n: 1,
            ..GridParams::standard(1)
        });
        let u = GridFunction::from_fn(&g, |_| 1.0);
        let got = u.weighted_norm(1.0, 1.0).unwrap();
        assert!((got - 2.0).abs() < 1e-9, "{got}");
        let z = GridFunction::from_fn(&g, |_| 0.0);
        assert_eq!(z.weighted_norm(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_inner_product_analytic() {
        // u = e^{-r²}, n = 3, V ≡ 1:
        // ∫ |∇u|² dx = 16π ∫ r⁴ e^{-2r²} dr = (3π/2)√(π/2)
        // ∫ u² dx = 4π ∫ r² e^{-2r²} dr = (π/2)√(π/2)
        let g = RadialGrid::new(GridParams::standard(3));
        let u = GridFunction::from_fn(&g, |r| (-r * r).exp());
        let got = g.inner_v(u.values(), u.values(), |_| 1.0);
        let sp2 = (std::f64::consts::PI / 2.0).sqrt();
        let want = 1.5 * std::f64::consts::PI * sp2 + 0.5 * std::f64::consts::PI * sp2;
        assert!(rel(got, want) < 1e-5, "{got} vs {want}, rel {:.2e}", rel(got, want));
        // O(h²): two refinements reach 1e-6
        let g2 = g.refine().refine();
        let u2 = GridFunction::from_fn(&g2, |r| (-r * r).exp());
        let got2 = g2.inner_v(u2.values(), u2.values(), |_| 1.0);
        assert!(rel(got2, want) < 1e-6, "refined rel {:.2e}", rel(got2, want));
        assert!(rel(got2, want) < 0.1 * rel(got, want));
        // zero function
        let z = vec![0.0; g.len()];
        assert_eq!(g.inner_v(&z, &z, |_| 1.0), 0.0);
    }

    #[test]
    fn inner_v_symmetric_bilinear() {
        let g = small_grid(3);
        let u = GridFunction::from_fn(&g, |r| (-r).exp() * (2.0 * r).sin());
        let v = GridFunction::from_fn(&g, |r| (-0.5 * r * r).exp());
        let w = GridFunction::from_fn(&g, |r| 1.0 / (1.0 + r * r));
        let pot = |r: f64| 1.0 + 0.3 * (-r).exp();
        let (a, b) = (0.7, -1.3);
        let uv = g.inner_v(u.values(), v.values(), pot);
        let vu = g.inner_v(v.values(), u.values(), pot);
        assert!((uv - vu).abs() <= 1e-12 * uv.abs());
        let lin: Vec<f64> = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let lhs = g.inner_v(&lin, w.values(), pot);
        let rhs = a * g.inner_v(u.values(), w.values(), pot)
            + b * g.inner_v(v.values(), w.values(), pot);
        assert!((lhs - rhs).abs() < 1e-12 * (lhs.abs().max(1.0)));
    }

    #[test]
    fn laplacian_of_r_squared() {
        // Δ r² = 2n, so -Δu = -6 in n=3
        let g = small_grid(3);
        let u = GridFunction::from_fn(&g, |r| r * r);
        let lap = g.neg_laplacian_values(u.values());
        for (i, l) in lap.iter().enumerate() {
            assert!((l + 6.0).abs() < 1e-6, "node {i}: {l}");
        }
        // constants map to zero
        let c = GridFunction::from_fn(&g, |_| 3.5);
        for l in g.neg_laplacian_values(c.values()) {
            assert!(l.abs() < 1e-9);
        }
    }

    #[test]
    fn hardy_quotient_bounded_by_hardy_constant() {
        for (n, bound) in [(3usize, 4.0), (5usize, 4.0 / 9.0)] {
            let g = small_grid(n);
            let b = smooth_bump(&g, 5.0);
            let q = b.hardy_quotient().unwrap();
            assert!(q <= bound + 1e-3, "n={n}: {q} > {bound}");
            assert!(q > 0.0);
        }
        let g = small_grid(3);
        let z = TestFunction::new(&g, 1.0, |_| 0.0, |_| 0.0, |_| 0.0);
        assert!(z.hardy_quotient().is_none());
    }

    #[test]
    fn trace_and_one_sided_derivatives() {
        let g = RadialGrid::new(GridParams::standard(3));
        // u = r: value rho, both one-sided derivatives 1
        let u = GridFunction::from_fn(&g, |r| r);
        let rho = 1.0;
        assert!(rel(g.trace(u.values(), rho).unwrap(), rho) < 1e-12);
        let (din, dout) = g.one_sided_derivatives(u.values(), rho).unwrap();
        assert!((din - 1.0).abs() < 1e-9 && (dout - 1.0).abs() < 1e-9);
        // piecewise-linear kink at rho: jump equals slope difference
        let k = GridFunction::from_fn(&g, |r| if r <= rho { r } else { rho + 2.0 * (r - rho) });
        let (din, dout) = g.one_sided_derivatives(k.values(), rho).unwrap();
        assert!((din - 1.0).abs() < 1e-9, "{din}");
        assert!((dout - 2.0).abs() < 1e-9, "{dout}");
        // non-node radius interpolates
        let t = g.trace(u.values(), 1.2345678).unwrap();
        assert!(rel(t, 1.2345678) < 1e-10);
        // out of range
        assert!(g.trace(u.values(), 100.0).is_err());
    }

    #[test]
    fn trace_is_linear() {
        let g = small_grid(3);
        let u = GridFunction::from_fn(&g, |r| (1.5 * r).sin());
        let v = GridFunction::from_fn(&g, |r| (-r).exp());
        let rho = 2.017;
        let lin: Vec<f64> = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| 2.0 * a - 0.5 * b)
            .collect();
        let lhs = g.trace(&lin, rho).unwrap();
        let rhs =
            2.0 * g.trace(u.values(), rho).unwrap() - 0.5 * g.trace(v.values(), rho).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn bessel_bump_n3() {
        let g = RadialGrid::new(GridParams::standard(3));
        let b = bessel_bump(&g, 1.0).unwrap();
        // r0 solves tan r = r; independent bisection oracle
        let f = |r: f64| r.tan() - r;
        let (mut lo, mut hi) = (4.2, 4.6);
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if f(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let r0_oracle = 0.5 * (lo + hi);
        assert!((b.r0 - r0_oracle).abs() < 1e-9, "{} vs {r0_oracle}", b.r0);
        // κ = √(2/π) sin(r0)/r0 < 0
        let kap = (2.0 / std::f64::consts::PI).sqrt() * b.r0.sin() / b.r0;
        assert!((b.kappa - kap).abs() < 1e-12);
        assert!(b.kappa < 0.0);
        assert!((b.kappa + 0.17332735803692353).abs() < 1e-10);
        // φ(0) = v(0) - κ > 0
        assert!(b.phi.value_at_origin > 0.0);
        // support radius
        assert!((b.phi.support - b.r0).abs() < 1e-12);
    }

    #[test]
    fn bessel_bump_identity() {
        // -Δφ_R from the grid stencils matches ((V + 1/R²)φ_R - |κ|/R²) with
        // V ≡ 0, inside the support, to O(h²)
        let g = RadialGrid::new(GridParams::standard(3));
        let scale = 2.0;
        let b = bessel_bump(&g, scale).unwrap();
        let lap = g.neg_laplacian_values(b.phi.f.values());
        let r2 = scale * scale;
        for (i, &r) in g.nodes().iter().enumerate() {
            if r < 0.95 * b.phi.support && r > 0.01 {
                let want = b.phi.f.values()[i] / r2 - b.kappa.abs() / r2;
                assert!(
                    (lap[i] - want).abs() < 5e-4,
                    "r={r}: {} vs {want}",
                    lap[i]
                );
            }
        }
        // and the analytic descriptor matches even more tightly
        let alap = b.phi.neg_laplacian();
        for (i, &r) in g.nodes().iter().enumerate() {
            if r < 0.999 * b.phi.support {
                let want = b.phi.f.values()[i] / r2 - b.kappa.abs() / r2;
                assert!((alap[i] - want).abs() < 1e-10, "r={r}");
            }
        }
    }

    #[test]
    fn bump_for_n1_uses_cosine() {
        let g = RadialGrid::new(GridParams {
            n: 1,
            r_max: 20.0,
            ..GridParams::standard(1)
        });
        let b = bessel_bump(&g, 1.0).unwrap();
        assert!((b.r0 - std::f64::consts::PI).abs() < 1e-12);
        let c = (2.0 / std::f64::consts::PI).sqrt();
        assert!((b.kappa + c).abs() < 1e-12);
    }

    #[test]
    fn extension_mismatch_rejected() {
        let g = small_grid(3);
        let u = GridFunction::from_fn(&g, |r| r.powf(-0.5));
        assert!(u
            .clone()
            .with_extension(PowerExtension { coef: 2.0, exponent: -0.5 }, 1e-8)
            .is_err());
        assert!(u
            .with_extension(PowerExtension { coef: 1.0, exponent: -0.5 }, 1e-8)
            .is_ok());
    }

    #[test]
    fn pinned_radius_becomes_node() {
        let g = RadialGrid::new(GridParams::standard(3).with_pin(1.1547));
        assert!(g.node_index(1.1547).is_some());
    }

    #[test]
    fn refinement_halves_quadrature_error() {
        // inexact quadrature on a smooth integrand: e^{-r}
        let g = small_grid(3);
        let integral = |g: &Arc<RadialGrid>| -> f64 {
            let u = GridFunction::from_fn(g, |r| (-r).exp());
            g.vol_weights()
                .iter()
                .zip(u.values())
                .map(|(w, v)| w * v)
                .sum()
        };
        // ∫ e^{-r} 4πr² dr over [0,20] = 8π (1 - e^{-20}·221)
        let want = 8.0 * std::f64::consts::PI * (1.0 - (-20.0f64).exp() * 221.0);
        let e1 = (integral(&g) - want).abs();
        let e2 = (integral(&g.refine()) - want).abs();
        assert!(e2 < e1 * 0.5, "e1={e1:.3e} e2={e2:.3e}");
    }

    #[test]
    fn region_split_weights_sum_to_full() {
        let g = RadialGrid::new(GridParams::standard(3));
        let inner = g.volume_weights_between(g.r_min(), 1.0);
        let outer = g.volume_weights_between(1.0, g.r_max());
        let u = GridFunction::from_fn(&g, |r| (-0.3 * r).exp());
        let full: f64 = g
            .vol_weights()
            .iter()
            .zip(u.values())
            .map(|(w, v)| w * v)
            .sum();
        let split: f64 = inner
            .iter()
            .chain(&outer)
            .map(|(i, w)| w * u.values()[*i])
            .sum();
        assert!(rel(split, full) < 1e-9, "{split} vs {full}");
    }
}

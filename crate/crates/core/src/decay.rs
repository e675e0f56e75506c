//! Exponential-decay verification: log-linear tail fits against √Σ and the
//! Agmon weighted-energy inequality as a computable diagnostic.

use crate::grid::{GridFunction, RadialGrid};
use crate::linalg::linear_fit;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecayError {
    #[error("{0}")]
    Domain(String),
    #[error("decay fit failed: {0}")]
    FitFailure(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub mu_hat: f64,
    pub c_mu: f64,
    pub window: (f64, f64),
    pub rms: f64,
    pub points: usize,
}

/// Least-squares line through (r, log|u|) on the window; mu_hat = -slope.
/// The window must end at least 5 below R_max to avoid boundary-condition
/// contamination.
pub fn fit_decay(u: &GridFunction, window: (f64, f64)) -> Result<DecayFit, DecayError> {
    let grid = u.grid();
    if window.1 > grid.r_max() - 5.0 {
        return Err(DecayError::Domain(format!(
            "window end {} too close to the grid edge {}",
            window.1,
            grid.r_max()
        )));
    }
    if window.0 >= window.1 {
        return Err(DecayError::Domain("empty fit window".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sign = 0.0f64;
    for (i, &r) in grid.nodes().iter().enumerate() {
        if r >= window.0 && r <= window.1 {
            let v = u.values()[i];
            if v == 0.0 {
                return Err(DecayError::FitFailure(format!("zero value at r = {r}")));
            }
            if sign == 0.0 {
                sign = v.signum();
            } else if v.signum() != sign {
                return Err(DecayError::FitFailure(format!("sign change at r = {r}")));
            }
            xs.push(r);
            ys.push(v.abs().ln());
        }
    }
    if xs.len() < 4 {
        return Err(DecayError::FitFailure("window resolves too few nodes".into()));
    }
    let (slope, intercept, rms) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        mu_hat: -slope,
        c_mu: intercept.exp(),
        window,
        rms,
        points: xs.len(),
    })
}

/// Quintic-smoothstep ramp: 0 for t <= 1, 1 for t >= 2, C² in between.
fn ramp_up(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        let s = t - 1.0;
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

fn ramp_up_deriv(t: f64) -> f64 {
    if !(1.0..2.0).contains(&t) {
        0.0
    } else {
        let s = t - 1.0;
        30.0 * s * s * (1.0 - 2.0 * s + s * s)
    }
}

/// The Agmon cutoff χ_{r,ρ} = χ_r (1 - χ_ρ): zero inside B_r, one on the
/// annulus 2r <= |x| <= ρ, zero outside B_{2ρ}.
pub fn agmon_cutoff(radius: f64, rho: f64, x: f64) -> f64 {
    ramp_up(x / radius) * (1.0 - ramp_up(x / rho))
}

pub fn agmon_cutoff_deriv(radius: f64, rho: f64, x: f64) -> f64 {
    ramp_up_deriv(x / radius) / radius * (1.0 - ramp_up(x / rho))
        - ramp_up(x / radius) * ramp_up_deriv(x / rho) / rho
}

#[derive(Debug, Clone, Serialize)]
pub struct AgmonSides {
    pub lhs: f64,
    pub rhs: f64,
    pub mu: f64,
    pub delta: f64,
    pub ratio: f64,
}

/// Both sides of the weighted-energy inequality with the weight
/// ξ = χ_{r,ρ} e^{μ|x|/(1+σ|x|)} and δ = (Σ - μ²)/4:
///   LHS = ∫ χ² u² e^{2μ|x|/(1+σ|x|)},
///   RHS = (1 + μ²/δ)/(Σ - μ² - 2δ) ∫ |∇χ|² u² e^{2μ|x|/(1+σ|x|)}.
/// For u solving the spectral problem below Σ the left side is controlled
/// by the right; a fat tail makes the ratio blow up.
pub fn agmon_weighted_norm(
    u: &GridFunction,
    mu: f64,
    radius: f64,
    rho: f64,
    sigma_reg: f64,
    spectral_bottom: f64,
) -> Result<AgmonSides, DecayError> {
    let grid = u.grid();
    if !(mu > 0.0 && mu * mu < spectral_bottom) {
        return Err(DecayError::Domain(format!(
            "need 0 < mu < sqrt(Sigma) = {}, got {mu}",
            spectral_bottom.sqrt()
        )));
    }
    if !(radius < rho) {
        return Err(DecayError::Domain("need r < rho".into()));
    }
    if 2.0 * rho > grid.r_max() {
        return Err(DecayError::Domain(format!(
            "cutoff support 2ρ = {} exceeds the grid radius",
            2.0 * rho
        )));
    }
    if sigma_reg < 0.0 {
        return Err(DecayError::Domain("sigma must be >= 0".into()));
    }
    let delta = (spectral_bottom - mu * mu) / 4.0;
    let mut lhs = 0.0;
    let mut grad_side = 0.0;
    for (i, &x) in grid.nodes().iter().enumerate() {
        let q = grid.vol_weights()[i];
        let uu = u.values()[i];
        let w = (2.0 * mu * x / (1.0 + sigma_reg * x)).exp();
        let chi = agmon_cutoff(radius, rho, x);
        let dchi = agmon_cutoff_deriv(radius, rho, x);
        lhs += q * chi * chi * uu * uu * w;
        grad_side += q * dchi * dchi * uu * uu * w;
    }
    let factor = (1.0 + mu * mu / delta) / (spectral_bottom - mu * mu - 2.0 * delta);
    let rhs = factor * grad_side;
    Ok(AgmonSides {
        lhs,
        rhs,
        mu,
        delta,
        ratio: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalBoundRow {
    pub center: f64,
    pub sup_inner: f64,
    pub l2_outer: f64,
    pub ratio: f64,
}

/// ‖u‖_{L^∞(B_1(z))} / ‖u‖_{L²(B_2(z))} per center: the uniformity behind
/// pointwise decay bounds. Centers with vanishing denominator are skipped.
pub fn local_bound_diag(
    u: &GridFunction,
    centers: &[f64],
) -> Result<Vec<LocalBoundRow>, DecayError> {
    let grid: &Arc<RadialGrid> = u.grid();
    let mut rows = Vec::new();
    for &z in centers {
        if z + 2.0 > grid.r_max() {
            return Err(DecayError::Domain(format!(
                "ball around {z} leaves the grid"
            )));
        }
        // sup over the radius interval [z-1, z+1]
        let mut sup = 0.0f64;
        for (i, &r) in grid.nodes().iter().enumerate() {
            if r >= z - 1.0 && r <= z + 1.0 {
                sup = sup.max(u.values()[i].abs());
            }
        }
        // true ball integral of u² via the angular reduction
        let usq = |r: f64| -> f64 {
            if r < grid.r_min() || r > grid.r_max() {
                return 0.0;
            }
            let v = grid.trace(u.values(), r).unwrap_or(0.0);
            v * v
        };
        let l2 = crate::quad::ball_integral_radial(&usq, grid.n, z, 2.0).max(0.0).sqrt();
        if l2 == 0.0 {
            continue;
        }
        rows.push(LocalBoundRow {
            center: z,
            sup_inner: sup,
            l2_outer: l2,
            ratio: sup / l2,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;

    fn grid40() -> Arc<RadialGrid> {
        RadialGrid::new(GridParams {
            nodes_per_decade: 120,
            ..GridParams::standard(3)
        })
    }

    #[test]
    fn fit_recovers_pure_exponentials() {
        let g = grid40();
        for mu in [0.5, 1.0, 2.0] {
            let u = GridFunction::from_fn(&g, |r| (-mu * r).exp());
            let fit = fit_decay(&u, (10.0, 30.0)).unwrap();
            assert!((fit.mu_hat - mu).abs() < 1e-10, "mu {mu}: {}", fit.mu_hat);
            assert!(fit.rms < 1e-10);
            assert!((fit.c_mu - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn kernel_shape_rate_approaches_one() {
        // u = e^{-r}/r: the log r correction biases the rate upward a little
        let g = grid40();
        let u = GridFunction::from_fn(&g, |r| (-r).exp() / r);
        let fit = fit_decay(&u, (15.0, 30.0)).unwrap();
        assert!((fit.mu_hat - 1.0).abs() < 0.05, "{}", fit.mu_hat);
        // moving the window outward purifies the tail
        let nearer = fit_decay(&u, (5.0, 15.0)).unwrap();
        assert!((fit.mu_hat - 1.0).abs() < (nearer.mu_hat - 1.0).abs());
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let g = grid40();
        let u = GridFunction::from_fn(&g, |r| (-r).exp());
        assert!(fit_decay(&u, (10.0, 39.0)).is_err());
        let osc = GridFunction::from_fn(&g, |r| (r).sin());
        assert!(fit_decay(&osc, (10.0, 30.0)).is_err());
    }

    #[test]
    fn cutoff_plateaus_and_support() {
        let (r, rho) = (3.0, 12.0);
        assert_eq!(agmon_cutoff(r, rho, 2.0), 0.0);
        assert_eq!(agmon_cutoff(r, rho, 7.0), 1.0);
        assert_eq!(agmon_cutoff(r, rho, 11.9), 1.0);
        assert_eq!(agmon_cutoff(r, rho, 25.0), 0.0);
        // C¹: derivative matches finite differences on the ramps
        for x in [3.5, 4.9, 13.0, 20.0] {
            let h = 1e-6;
            let fd = (agmon_cutoff(r, rho, x + h) - agmon_cutoff(r, rho, x - h)) / (2.0 * h);
            assert!((fd - agmon_cutoff_deriv(r, rho, x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn agmon_inequality_holds_for_a_true_solution() {
        // u = e^{-r}/r solves -Δu + u = 0 away from 0 with Σ = 1
        let g = grid40();
        let u = GridFunction::from_fn(&g, |r| (-r).exp() / r);
        let sides = agmon_weighted_norm(&u, 0.8, 5.0, 12.0, 0.0, 1.0).unwrap();
        assert!(sides.lhs <= sides.rhs * 1.1, "ratio {}", sides.ratio);
        assert!(sides.lhs > 0.0);
        // small sigma regularization changes the sides only slightly
        let reg = agmon_weighted_norm(&u, 0.8, 5.0, 12.0, 1e-3, 1.0).unwrap();
        assert!((reg.ratio - sides.ratio).abs() < 0.05);
    }

    #[test]
    fn agmon_flags_fat_tails() {
        // decay 0.5 against weight 0.8: the weighted mass explodes as the
        // outer cutoff moves out, unlike for genuinely decaying profiles
        let g = grid40();
        let fat = GridFunction::from_fn(&g, |r| (-0.5 * r).exp());
        let near = agmon_weighted_norm(&fat, 0.8, 3.0, 8.0, 0.0, 1.0).unwrap();
        let far = agmon_weighted_norm(&fat, 0.8, 3.0, 16.0, 0.0, 1.0).unwrap();
        assert!(far.lhs > 20.0 * near.lhs, "{} vs {}", far.lhs, near.lhs);
        // while a true solution's weighted mass stabilizes
        let ok = GridFunction::from_fn(&g, |r| (-r).exp() / r);
        let near = agmon_weighted_norm(&ok, 0.8, 3.0, 8.0, 0.0, 1.0).unwrap();
        let far = agmon_weighted_norm(&ok, 0.8, 3.0, 16.0, 0.0, 1.0).unwrap();
        assert!(far.lhs < 1.2 * near.lhs, "{} vs {}", far.lhs, near.lhs);
    }

    #[test]
    fn agmon_zero_function_and_domain_errors() {
        let g = grid40();
        let z = GridFunction::from_fn(&g, |_| 0.0);
        let sides = agmon_weighted_norm(&z, 0.5, 5.0, 12.0, 0.0, 1.0).unwrap();
        assert_eq!(sides.lhs, 0.0);
        assert_eq!(sides.rhs, 0.0);
        let u = GridFunction::from_fn(&g, |r| (-r).exp());
        assert!(agmon_weighted_norm(&u, 1.2, 5.0, 12.0, 0.0, 1.0).is_err());
        assert!(agmon_weighted_norm(&u, 0.5, 12.0, 5.0, 0.0, 1.0).is_err());
        assert!(agmon_weighted_norm(&u, 0.5, 5.0, 30.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn local_bound_rows() {
        let g = grid40();
        // constant: ratio = vol(B_2)^{-1/2}
        let c = 0.7;
        let u = GridFunction::from_fn(&g, |_| c);
        let rows = local_bound_diag(&u, &[3.0, 10.0, 20.0]).unwrap();
        let want = (crate::unit_ball_volume(3) * 8.0).powf(-0.5);
        for row in &rows {
            assert!((row.ratio - want).abs() < 1e-4, "{} vs {want}", row.ratio);
        }
        // e^{-r}: ratios uniformly bounded and drift-free within a factor 2
        let u = GridFunction::from_fn(&g, |r| (-r).exp());
        let rows = local_bound_diag(&u, &[5.0, 10.0, 15.0, 20.0, 25.0]).unwrap();
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
        assert!(hi / lo < 2.0, "drift {lo}..{hi}");
        // zero function skips all centers
        let z = GridFunction::from_fn(&g, |_| 0.0);
        assert!(local_bound_diag(&z, &[5.0]).unwrap().is_empty());
    }
}

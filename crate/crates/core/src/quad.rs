//! Standalone quadrature helpers used outside the radial grid: tanh-sinh for
//! endpoint singularities, composite Gauss–Legendre for smooth integrands,
//! and ball integrals of radial functions via the angular reduction.

/// Tanh-sinh (double exponential) quadrature of f over (a, b).
///
/// Handles integrable endpoint singularities like r^γ, γ > -1. Levels are
/// doubled until two successive refinements agree to `tol` (relative).
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (b - a);
    let g = |t: f64| -> f64 {
        // x = tanh(pi/2 sinh t), w = (pi/2) cosh t / cosh^2(pi/2 sinh t);
        // the distance to the endpoints, 1 ∓ x, is formed without
        // cancellation so singular-endpoint mass is kept
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch);
        let xx = if u >= 0.0 {
            let one_minus_x = 2.0 / ((2.0 * u).exp() + 1.0);
            b - c * one_minus_x
        } else {
            let one_plus_x = 2.0 / ((-2.0 * u).exp() + 1.0);
            a + c * one_plus_x
        };
        if xx <= a || xx >= b {
            return 0.0;
        }
        let v = f(xx);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let t_max = 6.5; // exp(-pi/2 sinh 6.5) is far below f64 underflow of the weight
    let mut h = 1.0;
    let mut sum = g(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        sum += g(t) + g(-t);
        k += 1;
    }
    let mut prev = c * h * sum;
    for _level in 0..12 {
        h *= 0.5;
        // add the new midpoints t = h, 3h, 5h, ...
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            sum += g(t) + g(-t);
            k += 2;
        }
        let cur = c * h * sum;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003_0,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_79,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

/// 16-point Gauss–Legendre on [a, b].
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for i in 0..8 {
        s += GL16_WEIGHTS[i] * (f(mid + c * GL16_NODES[i]) + f(mid - c * GL16_NODES[i]));
    }
    c * s
}

/// Composite 16-point Gauss–Legendre with `panels` equal panels on [a, b].
pub fn gauss_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| gauss16(f, a + k as f64 * h, a + (k + 1) as f64 * h))
        .sum()
}

/// ∫_{B_R(z)} w(|y|) dy for a radial integrand w, center at distance t = |z|
/// from the origin, in dimension n. Uses the reduction
///   ∫ = σ_{n-2} ∫_0^R u^{n-1} ∫_0^π w(√(t² + u² + 2tu cosθ)) sin^{n-2}θ dθ du
/// for n ≥ 2 and the direct interval integral for n = 1.
pub fn ball_integral_radial<F: Fn(f64) -> f64>(w: &F, n: usize, t: f64, radius: f64) -> f64 {
    match n {
        1 => {
            let f = |y: f64| w(y.abs());
            gauss_composite(&f, t - radius, t + radius, 24)
        }
        _ => {
            let sigma = crate::unit_sphere_area(n - 1);
            let inner = |u: f64| -> f64 {
                let f = |theta: f64| {
                    let r2 = t * t + u * u + 2.0 * t * u * theta.cos();
                    let r = r2.max(0.0).sqrt();
                    w(r) * theta.sin().powi(n as i32 - 2)
                };
                gauss_composite(&f, 0.0, std::f64::consts::PI, 12)
            };
            let g = |u: f64| u.powi(n as i32 - 1) * inner(u);
            sigma * gauss_composite(&g, 0.0, radius, 24)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_handles_power_singularity() {
        // ∫_0^1 r^{-1/2} dr = 2
        let v = tanh_sinh(|r| r.powf(-0.5), 0.0, 1.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-11, "{v}");
        // ∫_0^1 ln(r) dr = -1
        let v = tanh_sinh(|r| r.ln(), 0.0, 1.0, 1e-13);
        assert!((v + 1.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn gauss_exact_on_polynomials() {
        let v = gauss_composite(&|x: f64| x.powi(7) - 3.0 * x * x + 1.0, -1.0, 2.0, 2);
        let exact = (2.0f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn ball_integral_constant_is_volume() {
        // w ≡ 1 integrates to the ball volume, independent of the center
        for n in [1usize, 2, 3, 5] {
            let vol = crate::unit_ball_volume(n) * 2.0f64.powi(n as i32);
            for t in [0.3, 1.7, 4.0] {
                let v = ball_integral_radial(&|_| 1.0, n, t, 2.0);
                assert!(
                    (v - vol).abs() / vol < 1e-9,
                    "n={n} t={t}: {v} vs {vol}"
                );
            }
        }
    }

    #[test]
    fn ball_integral_centered_matches_radial_formula() {
        // center at origin: ∫_{B_1} |y| dy = σ_{n-1}/(n+1)
        let n = 3;
        let v = ball_integral_radial(&|r| r, n, 0.0, 1.0);
        let exact = crate::unit_sphere_area(n) / (n as f64 + 1.0);
        assert!((v - exact).abs() / exact < 1e-9);
    }
}

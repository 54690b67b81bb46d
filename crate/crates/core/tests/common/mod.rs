//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(&f, a, b, tol, 40)
}

/// Black–Scholes call with carry and discount rate `r`, evaluated by
/// integrating the payoff against the normal density.
pub fn bs_call_by_quadrature(s: f64, k: f64, t: f64, sigma: f64, r: f64) -> f64 {
    let v = sigma * t.sqrt();
    let m = (r - 0.5 * sigma * sigma) * t;
    let z_star = ((k / s).ln() - m) / v;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let payoff = |z: f64| (s * (m + v * z).exp() - k) * density(z);
    let lo = z_star.max(-40.0);
    let hi = lo.max(0.0) + 40.0;
    // split at the mode of the integrand to help the adaptive rule
    let mid = (v).clamp(lo, hi);
    (-r * t).exp() * (integrate(payoff, lo, mid, 1e-14) + integrate(payoff, mid, hi, 1e-14))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for `Re z > 0.5` (Lanczos, g = 7).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_complex(Complex64::new(x, 0.0)).re
}

/// One regime under the pricing measure, built from first principles.
#[derive(Debug, Clone, Copy)]
pub struct OracleState {
    pub sigma: f64,
    pub rd: f64,
    pub rf: f64,
    /// Intensity under the pricing measure.
    pub lambda: f64,
    /// Rate of the exponential jump size `Z`.
    pub theta: f64,
}

impl OracleState {
    /// Tilts an exponential law `Z ~ Exp(theta)` with jump intensity
    /// `lambda` by `Z^{theta_j}`.
    pub fn tilted(sigma: f64, rd: f64, rf: f64, lambda: f64, theta: f64, theta_j: f64) -> Self {
        // E[Z^a] = Γ(1 + a) θ^{-a}
        let m = (ln_gamma(1.0 + theta_j) - theta_j * theta.ln()).exp();
        OracleState { sigma, rd, rf, lambda: lambda * m, theta: theta / (1.0 + theta_j) }
    }

    fn mean_jump(&self) -> f64 {
        1.0 / self.theta - 1.0
    }
}

/// Characteristic exponent of `ln S_T/s - ∫(r^d - r^f)` given occupation
/// times `j`, at complex argument `z`.
fn char_exponent(states: &[OracleState], j: &[f64], z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let mut out = Complex64::new(0.0, 0.0);
    for (s, &tau) in states.iter().zip(j) {
        let drift = -s.lambda * s.mean_jump() - 0.5 * s.sigma * s.sigma;
        out += i * z * drift * tau - 0.5 * z * z * s.sigma * s.sigma * tau;
        // E[Z^{iz}] = Γ(1 + iz) θ^{-iz}
        let cf = (ln_gamma_complex(1.0 + i * z) - i * z * s.theta.ln()).exp();
        out += s.lambda * tau * (cf - 1.0);
    }
    out
}

/// Call price conditional on occupation times by Fourier inversion.
pub fn lewis_call(s: f64, k: f64, states: &[OracleState], j: &[f64]) -> f64 {
    let rt: f64 = states.iter().zip(j).map(|(st, t)| (st.rd - st.rf) * t).sum();
    let var: f64 = states.iter().zip(j).map(|(st, t)| st.sigma * st.sigma * t).sum();
    let x = (s / k).ln() + rt;
    let integrand = |u: f64| {
        let z = Complex64::new(u, -0.5);
        let phi = char_exponent(states, j, z).exp();
        let e = Complex64::new(0.0, u * x).exp();
        (e * phi).re / (u * u + 0.25)
    };
    let u_max = (2.0 * 40.0 / var).sqrt() + 10.0;
    let n = 64;
    let h = u_max / n as f64;
    let integral: f64 = (0..n).map(|p| integrate(integrand, p as f64 * h, (p + 1) as f64 * h, 1e-15)).sum();
    s - (s * k).sqrt() * (-0.5 * rt).exp() / std::f64::consts::PI * integral
}

/// Matrix exponential of a small dense matrix by scaling and squaring of a
/// long Taylor series.
pub fn expm_taylor(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm: f64 = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut sq = 0;
    while norm / 2f64.powi(sq) > 0.1 {
        sq += 1;
    }
    let scale = 2f64.powi(sq);
    let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x / scale).collect()).collect();
    let mul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|l| x[i][l] * y[l][j]).sum()).collect()).collect()
    };
    let mut term: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut sum = term.clone();
    for p in 1..30 {
        term = mul(&term, &b).into_iter().map(|r| r.into_iter().map(|x| x / p as f64).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..sq {
        sum = mul(&sum, &sum);
    }
    sum
}

/// EUR/USD up/down/sideway transition matrix on daily bars.
pub const EURUSD: [[f64; 3]; 3] = [[0.4408, 0.4527, 0.1065], [0.4818, 0.4149, 0.1033], [0.4820, 0.4119, 0.1061]];

/// Open prices whose bar-to-bar moves follow a Markov chain on
/// {up, down, sideway} with transition matrix `p`.
pub fn synthetic_opens(p: &[[f64; 3]; 3], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = 2;
    let mut x = 1.1;
    let mut out = vec![x];
    for _ in 0..n {
        let noise = rng.random_range(-0.0005..0.0005);
        x += match state {
            0 => 0.0020,
            1 => -0.0020,
            _ => 0.0,
        } + noise;
        out.push(x);
        let u: f64 = rng.random();
        state = if u < p[state][0] {
            0
        } else if u < p[state][0] + p[state][1] {
            1
        } else {
            2
        };
    }
    out
}

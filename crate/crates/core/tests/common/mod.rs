//! Closed-form references for square wells, written independently of the
//! library's solvers.
#![allow(dead_code)]

use std::f64::consts::PI;

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ground state of `½u'' + βu = λu` on the line, well `[-a, a]`.
#[derive(Clone, Copy, Debug)]
pub struct LineWell {
    pub beta: f64,
    pub a: f64,
    pub lambda: f64,
    k: f64,
    kappa: f64,
    norm: f64,
}

impl LineWell {
    pub fn new(beta: f64, a: f64) -> Self {
        // even state: k tan(ka) = κ with k = √(2(β-λ)), κ = √(2λ)
        let f = |l: f64| {
            let k = (2.0 * (beta - l)).sqrt();
            k * (k * a).tan() - (2.0 * l).sqrt()
        };
        let lo = (beta - (PI / (2.0 * a)).powi(2) / 2.0).max(0.0) + 1e-15;
        let lambda = bisect(lo, beta - 1e-15, f);
        let k = (2.0 * (beta - lambda)).sqrt();
        let kappa = (2.0 * lambda).sqrt();
        let n2 = a + (2.0 * k * a).sin() / (2.0 * k) + (k * a).cos().powi(2) / kappa;
        LineWell {
            beta,
            a,
            lambda,
            k,
            kappa,
            norm: n2.sqrt(),
        }
    }

    pub fn psi(&self, x: f64) -> f64 {
        let x = x.abs();
        let v = if x <= self.a {
            (self.k * x).cos()
        } else {
            (self.k * self.a).cos() * (-self.kappa * (x - self.a)).exp()
        };
        v / self.norm
    }

    /// `∫_lo^hi ψ` for `lo <= hi`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let s = x.signum();
        let x = x.abs();
        let (k, a, kappa) = (self.k, self.a, self.kappa);
        let v = if x <= a {
            (k * x).sin() / k
        } else {
            (k * a).sin() / k + (k * a).cos() * (1.0 - (-kappa * (x - a)).exp()) / kappa
        };
        s * v / self.norm
    }

    pub fn total(&self) -> f64 {
        2.0 * self.antiderivative(f64::INFINITY)
    }

    /// `ψ(x) = C e^{-κ|x|}` for `|x| >= a`.
    pub fn tail_prefactor(&self) -> f64 {
        (self.k * self.a).cos() * (self.kappa * self.a).exp() / self.norm
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Ground state of `½Δψ + βψ = λψ` in `R³` for the ball of radius `a`;
/// `u = rψ` solves the odd line problem.
#[derive(Clone, Copy, Debug)]
pub struct BallWell3 {
    pub beta: f64,
    pub a: f64,
    pub lambda: f64,
    k: f64,
    kappa: f64,
    norm: f64,
}

impl BallWell3 {
    /// `None` when the well is subcritical (`βa² <= π²/8`).
    pub fn new(beta: f64, a: f64) -> Option<Self> {
        if beta * a * a <= PI * PI / 8.0 {
            return None;
        }
        // k cot(ka) = -κ
        let f = |l: f64| {
            let k = (2.0 * (beta - l)).sqrt();
            k / (k * a).tan() + (2.0 * l).sqrt()
        };
        let lo = (beta - (PI / a).powi(2) / 2.0).max(0.0) + 1e-15;
        let lambda = bisect(lo, beta - (PI / (2.0 * a)).powi(2) / 2.0, f);
        let k = (2.0 * (beta - lambda)).sqrt();
        let kappa = (2.0 * lambda).sqrt();
        let s = (k * a).sin();
        let n2 = 4.0 * PI * (a / 2.0 - (2.0 * k * a).sin() / (4.0 * k) + s * s / (2.0 * kappa));
        Some(BallWell3 {
            beta,
            a,
            lambda,
            k,
            kappa,
            norm: n2.sqrt(),
        })
    }

    pub fn psi(&self, r: f64) -> f64 {
        let u = if r <= self.a {
            if r == 0.0 {
                return self.k / self.norm;
            }
            (self.k * r).sin()
        } else {
            (self.k * self.a).sin() * (-self.kappa * (r - self.a)).exp()
        };
        u / (r * self.norm)
    }

    pub fn total(&self) -> f64 {
        let (k, a, kappa) = (self.k, self.a, self.kappa);
        let inside = ((k * a).sin() - k * a * (k * a).cos()) / (k * k);
        let outside = (k * a).sin() * (a / kappa + 1.0 / (kappa * kappa));
        4.0 * PI * (inside + outside) / self.norm
    }
}

/// `u(t, x) = E_x exp(-∫_0^t v(B_s) ds)` for `v = β 1_{|x| <= a}` on the
/// line: backward Euler with Richardson extrapolation in time, uniform
/// grid on `[-L, L]` with `u = 1` at the ends.
pub fn no_branch_probability_line(beta: f64, a: f64, t: f64, x0: f64) -> f64 {
    let solve = |steps: usize| {
        let l = 12.0 + 6.0 * t.sqrt() + x0.abs();
        let n = 4800;
        let h = 2.0 * l / n as f64;
        let dt = t / steps as f64;
        let x: Vec<f64> = (0..=n).map(|i| -l + i as f64 * h).collect();
        let rate: Vec<f64> = x
            .iter()
            .map(|&y| {
                // cell average of the indicator
                let lo = (y - h / 2.0).max(-a);
                let hi = (y + h / 2.0).min(a);
                beta * ((hi - lo).max(0.0) / h)
            })
            .collect();
        let c = 0.5 * dt / (h * h);
        let mut u = vec![1.0; n + 1];
        for _ in 0..steps {
            // (1 + 2c + dt v_i) u_i - c u_{i-1} - c u_{i+1} = u_i^old
            let m = n - 1;
            let mut cp = vec![0.0; m];
            let mut dp = vec![0.0; m];
            for j in 0..m {
                let i = j + 1;
                let b = 1.0 + 2.0 * c + dt * rate[i];
                let mut d = u[i];
                if i == 1 {
                    d += c * u[0];
                }
                if i == n - 1 {
                    d += c * u[n];
                }
                let denom = if j == 0 { b } else { b + c * cp[j - 1] };
                cp[j] = -c / denom;
                dp[j] = if j == 0 { d / denom } else { (d + c * dp[j - 1]) / denom };
            }
            for j in (0..m).rev() {
                u[j + 1] = if j == m - 1 { dp[j] } else { dp[j] - cp[j] * u[j + 2] };
            }
        }
        let pos = (x0 + l) / h;
        let i = (pos.floor() as usize).min(n - 1);
        let w = pos - i as f64;
        (1.0 - w) * u[i] + w * u[i + 1]
    };
    let coarse = solve(2000);
    let fine = solve(4000);
    2.0 * fine - coarse
}

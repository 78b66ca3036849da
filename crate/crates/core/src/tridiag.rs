//! Symmetric tridiagonal kernels: products, shifted solves, Sturm counts.

/// Symmetric tridiagonal matrix: `diag[i]` on the diagonal, `off[i]` at
/// `(i, i+1)` and `(i+1, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        SymTridiag { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// Number of eigenvalues strictly greater than `x`, from the inertia of
    /// `T - x I` (LDL^T pivots).
    pub fn count_above(&self, x: f64) -> usize {
        let n = self.diag.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut above = 0;
        let mut d = 1.0;
        for i in 0..n {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = (self.diag[i] - x) - e2 / d;
            if d == 0.0 {
                d = -tiny;
            }
            if d > 0.0 {
                above += 1;
            }
        }
        above
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th largest eigenvalue (`k = 0` is the top) by bisection on
    /// Sturm counts.
    pub fn eigenvalue_from_top(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        lo -= 1e-12 * scale;
        hi += 1e-12 * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_above(mid) > k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// LU factorization of `shift I - T` without pivoting. Valid (and
/// sign-preserving) when `shift I - T` is an M-matrix, i.e. when the shift
/// lies above the spectrum and the off-diagonals of `T` are non-negative.
#[derive(Clone, Debug)]
pub struct ShiftedFactor {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    upper: Vec<f64>,
}

impl ShiftedFactor {
    /// Returns `None` when a non-positive pivot shows the shift is not above
    /// the spectrum.
    pub fn new(t: &SymTridiag, shift: f64) -> Option<Self> {
        Self::general(&t.diag, &t.off, &t.off, shift, -1.0)
    }

    /// Factorizes `alpha * I + beta * T` for a possibly non-symmetric
    /// tridiagonal `T` given by its three bands. Fails on a non-positive
    /// pivot.
    pub fn general(diag: &[f64], sub: &[f64], sup: &[f64], alpha: f64, beta: f64) -> Option<Self> {
        let n = diag.len();
        let b = beta;
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut pivots = vec![0.0; n];
        let upper: Vec<f64> = sup.iter().map(|&u| b * u).collect();
        let mut p = alpha + b * diag[0];
        if !(p > 0.0) {
            return None;
        }
        pivots[0] = p;
        for i in 1..n {
            let l = b * sub[i - 1] / p;
            lower[i - 1] = l;
            p = alpha + b * diag[i] - l * upper[i - 1];
            if !(p > 0.0) {
                return None;
            }
            pivots[i] = p;
        }
        Some(ShiftedFactor { lower, pivots, upper })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 1..n {
            x[i] -= self.lower[i - 1] * x[i - 1];
        }
        x[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.upper[i] * x[i + 1]) / self.pivots[i];
        }
    }
}

/// Solves `(shift I - T) x = rhs` by Gaussian elimination with partial
/// pivoting (the `gtsv` scheme); works for any shift that is not an
/// eigenvalue.
pub fn solve_shifted_pivoting(t: &SymTridiag, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut b = rhs.to_vec();
    if n == 1 {
        b[0] /= shift - t.diag[0];
        return b;
    }
    // dl doubles as storage for the second superdiagonal after elimination
    let mut dl: Vec<f64> = t.off.iter().map(|&e| -e).collect();
    let mut d: Vec<f64> = t.diag.iter().map(|&v| shift - v).collect();
    let mut du: Vec<f64> = t.off.iter().map(|&e| -e).collect();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = f64::MIN_POSITIVE;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            }
            du[i] = temp;
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = f64::MIN_POSITIVE;
    }
    b[n - 1] /= d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    b
}

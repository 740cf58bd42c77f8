//! Shared numerical primitives: deterministic reductions, adaptive trapezoid
//! quadrature, golden-section refinement, cubic splines and small least-squares
//! fits.

/// Deterministic pairwise (fixed-index) summation.
///
/// The reduction tree depends only on the slice length, so results are
/// bit-reproducible across runs and thread counts.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise reduction of `f(i)` over `0..n` without materializing the vector
/// for small blocks.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        const BLOCK: usize = 32;
        if hi - lo <= BLOCK {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, &f)
}

/// Result of an adaptive quadrature: value plus an error estimate combining the
/// last doubling increment and any domain-truncation bound supplied by the
/// caller.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub nodes: usize,
}

/// Trapezoid rule with interval doubling on `[a, b]`, sharpened by one
/// Richardson step per level (removes the O(h²) boundary term that dominates
/// radially weighted integrands).
///
/// Starts from `n0` panels and doubles until the change between extrapolated
/// levels drops below `max(rel_tol·|value|, abs_tol)` on two consecutive
/// doublings, or the panel count exceeds 2^20.
pub fn quad_trapezoid<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    n0: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> QuadResult {
    assert!(b > a && n0 >= 1);
    let max_panels: usize = 1 << 20;
    let mut n = n0.next_power_of_two().max(16);
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + i as f64 * h);
    }
    let mut trap = acc * h;
    let mut value = f64::NAN; // extrapolated estimate of the previous level
    let mut streak = 0usize;
    let mut last_change = f64::INFINITY;
    loop {
        // midpoints of the current panels refine the trapezoid level
        let h = (b - a) / n as f64;
        let mut mid = 0.0;
        for i in 0..n {
            mid += f(a + (i as f64 + 0.5) * h);
        }
        let refined = 0.5 * trap + 0.5 * h * mid;
        let extrap = (4.0 * refined - trap) / 3.0;
        let change = (extrap - value).abs();
        n *= 2;
        trap = refined;
        value = extrap;
        if change <= (rel_tol * value.abs()).max(abs_tol) {
            streak += 1;
            if streak >= 2 {
                return QuadResult { value, error: change.max(last_change), converged: true, nodes: n + 1 };
            }
        } else {
            streak = 0;
        }
        last_change = change;
        if n >= max_panels {
            return QuadResult { value, error: change, converged: false, nodes: n + 1 };
        }
    }
}

/// Golden-section minimization of a unimodal objective on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Natural cubic spline through strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() == ys.len() && xs.len() >= 2);
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "spline abscissae must increase");
        let n = xs.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the natural-spline tridiagonal system.
            let mut sub = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut sup = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                sub[i] = h0;
                diag[i] = 2.0 * (h0 + h1);
                sup[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
            }
        }
        CubicSpline { xs, ys, m }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Evaluate inside the knot range; callers handle extrapolation.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Least-squares fit of `y ~ c0 + c1/x (+ c2/x^2 with >= 4 points)`.
/// Returns (extrapolated value `c0`, rms residual).
pub fn fit_inverse_extents(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len();
    let terms: usize = if n >= 4 { 3 } else { 2 };
    // normal equations for the tiny Vandermonde system in 1/x
    let basis = |x: f64, j: usize| (1.0 / x).powi(j as i32);
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for i in 0..n {
        for r in 0..terms {
            for c in 0..terms {
                ata[r][c] += basis(xs[i], r) * basis(xs[i], c);
            }
            atb[r] += basis(xs[i], r) * ys[i];
        }
    }
    let coef = solve_small(&mut ata, &mut atb, terms);
    let mut ss = 0.0;
    for i in 0..n {
        let mut pred = 0.0;
        for (j, c) in coef.iter().enumerate().take(terms) {
            pred += c * basis(xs[i], j);
        }
        ss += (ys[i] - pred).powi(2);
    }
    (coef[0], (ss / n as f64).sqrt())
}

fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], n: usize) -> [f64; 3] {
    // Gaussian elimination with partial pivoting on an n x n block.
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / d;
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

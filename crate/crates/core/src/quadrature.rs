//! Composite Gauss-Legendre quadrature on panels graded toward both ends of
//! the interval.
//!
//! The travel-time integrand of the Ritz problem varies on the scale of the
//! initial radius near `x0` and on the scale `delta * |q_apogee|` near `x_f`;
//! halving panel widths toward both ends resolves both layers with a fixed
//! node count.

/// Default number of Gauss points per panel.
pub const DEFAULT_ORDER: usize = 16;
/// Default number of halvings toward each endpoint.
pub const DEFAULT_LEVELS: usize = 30;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Absolute nodes and weights for integrating over a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub breakpoints: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    /// Composite rule over the given panel breakpoints (monotone, either direction).
    pub fn from_breakpoints(breakpoints: Vec<f64>, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breakpoints.len());
        let mut weights = Vec::with_capacity(order * breakpoints.len());
        for pair in breakpoints.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self {
            breakpoints,
            nodes,
            weights,
            order,
        }
    }

    /// Panels halving toward both `a` and `b`, `levels` times on each side.
    pub fn graded(a: f64, b: f64, levels: usize, order: usize) -> Self {
        let half = 0.5 * (b - a);
        let mut left: Vec<f64> = (0..=levels).map(|k| a + half * 0.5f64.powi(k as i32)).collect();
        left.push(a);
        left.reverse();
        let mut bp = left;
        let right = (1..=levels).map(|k| b - half * 0.5f64.powi(k as i32));
        bp.extend(right);
        bp.push(b);
        Self::from_breakpoints(bp, order)
    }

    pub fn default_for(a: f64, b: f64) -> Self {
        Self::graded(a, b, DEFAULT_LEVELS, DEFAULT_ORDER)
    }

    /// Same interval with every panel split in two.
    pub fn refined(&self) -> Self {
        let mut bp = Vec::with_capacity(2 * self.breakpoints.len());
        for pair in self.breakpoints.windows(2) {
            bp.push(pair[0]);
            bp.push(0.5 * (pair[0] + pair[1]));
        }
        bp.extend(self.breakpoints.last());
        Self::from_breakpoints(bp, self.order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

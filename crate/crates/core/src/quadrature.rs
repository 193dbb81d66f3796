//! Gauss–Legendre rules and composite panel quadrature.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// `\int_a^b f` with this rule.
    pub fn integrate<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = T::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            s = s + f(c + h * x) * (w * h);
        }
        s
    }

    /// Appends the mapped nodes and weights for `[a, b]`.
    pub fn push_panel(&self, a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            xs.push(c + h * x);
            ws.push(w * h);
        }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: `[a, b]` split into `panels` equal panels.
pub fn composite(rule: &GaussLegendre, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = panels.max(1);
    let mut xs = Vec::with_capacity(panels * rule.nodes.len());
    let mut ws = Vec::with_capacity(panels * rule.nodes.len());
    let h = (b - a) / panels as f64;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        rule.push_panel(lo, lo + h, &mut xs, &mut ws);
    }
    (xs, ws)
}

/// Composite rule over consecutive breakpoints, `panels[i]` panels on
/// `[breaks[i], breaks[i+1]]`.
pub fn composite_breaks(rule: &GaussLegendre, breaks: &[f64], panels: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (w, &p) in breaks.windows(2).zip(panels) {
        let (x, v) = composite(rule, w[0], w[1], p);
        xs.extend(x);
        ws.extend(v);
    }
    (xs, ws)
}

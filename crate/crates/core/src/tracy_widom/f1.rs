//! The Tracy-Widom distribution for the real (beta = 1) ensemble.
//!
//! `F1(x) = exp(-1/2 int_x^inf [u(s) + (s - x) u(s)^2] ds)` where `u` solves
//! Painleve II, `u'' = 2u^3 + s u`, with `u(s) ~ Ai(s)` as `s -> inf`. The
//! equation is integrated right to left with RK4 together with
//! `A = int_s^inf u`, `Q = int_s^inf u^2`, `R = int_s^inf (t - s) u^2`, so that
//! `F1 = exp(-(A + R)/2)` and `F1' = F1 (u + Q)/2`.

use std::sync::OnceLock;

use super::airy::{airy_ai, airy_tail};

pub const TABLE_LO: f64 = -10.0;
pub const TABLE_HI: f64 = 6.0;
pub const TABLE_NODES: usize = 2000;
const START: f64 = 8.0;
const SUBSTEPS: usize = 8;

type State = [f64; 5];

fn rhs(s: f64, y: &State) -> State {
    let [u, up, _, q, _] = *y;
    [up, 2.0 * u * u * u + s * u, -u, -u * u, -q]
}

fn rk4(s: f64, y: &State, h: f64) -> State {
    let add = |y: &State, k: &State, c: f64| -> State { std::array::from_fn(|i| y[i] + c * k[i]) };
    let k1 = rhs(s, y);
    let k2 = rhs(s + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = rhs(s + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = rhs(s + h, &add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// State at `START`, where the solution agrees with Ai to far below double
/// precision; `Q` and `R` use closed forms of the Airy integrals.
fn initial_state() -> State {
    let s = START;
    let (f, fp) = airy_ai(s);
    let q = fp * fp - s * f * f;
    let r = 2.0 / 3.0 * s * s * f * f - 2.0 / 3.0 * s * fp * fp - f * fp / 3.0;
    [f, fp, airy_tail(s), q, r]
}

pub(crate) fn node(i: usize) -> f64 {
    TABLE_LO + (TABLE_HI - TABLE_LO) * i as f64 / (TABLE_NODES - 1) as f64
}

/// States at the table nodes, integrating with `substeps` RK4 steps per node
/// spacing.
fn solve(substeps: usize) -> Vec<State> {
    let spacing = (TABLE_HI - TABLE_LO) / (TABLE_NODES - 1) as f64;
    let h = spacing / substeps as f64;
    let mut y = initial_state();
    let lead = ((START - TABLE_HI) / h).ceil() as usize;
    let lead_h = (START - TABLE_HI) / lead as f64;
    let mut s = START;
    for _ in 0..lead {
        y = rk4(s, &y, -lead_h);
        s -= lead_h;
    }
    let mut out = vec![[0.0; 5]; TABLE_NODES];
    out[TABLE_NODES - 1] = y;
    for i in (0..TABLE_NODES - 1).rev() {
        let top = node(i + 1);
        for k in 0..substeps {
            y = rk4(top - k as f64 * h, &y, -h);
        }
        out[i] = y;
    }
    out
}

fn cdf_and_density(y: &State) -> (f64, f64) {
    let [u, _, a, q, r] = *y;
    let f = (-(a + r) / 2.0).exp();
    (f, f * (u + q) / 2.0)
}

pub struct TracyWidomTable {
    x: Vec<f64>,
    cdf: Vec<f64>,
    slope: Vec<f64>,
    /// Largest change in F1 at a node between the two step sizes.
    step_discrepancy: f64,
}

impl TracyWidomTable {
    fn build() -> Self {
        let coarse = solve(SUBSTEPS);
        let fine = solve(2 * SUBSTEPS);
        let mut cdf = Vec::with_capacity(TABLE_NODES);
        let mut dens = Vec::with_capacity(TABLE_NODES);
        let mut step_discrepancy: f64 = 0.0;
        for (c, f) in coarse.iter().zip(&fine) {
            let (fc, dc) = cdf_and_density(c);
            let (ff, df) = cdf_and_density(f);
            step_discrepancy = step_discrepancy.max((fc - ff).abs());
            // RK4 error is fourth order in the step: extrapolate.
            cdf.push(((16.0 * ff - fc) / 15.0).clamp(0.0, 1.0));
            dens.push(((16.0 * df - dc) / 15.0).max(0.0));
        }
        for i in 1..cdf.len() {
            cdf[i] = cdf[i].max(cdf[i - 1]);
        }
        let x: Vec<f64> = (0..TABLE_NODES).map(node).collect();
        let slope = monotone_slopes(&x, &cdf, &dens);
        TracyWidomTable {
            x,
            cdf,
            slope,
            step_discrepancy,
        }
    }

    pub fn global() -> &'static TracyWidomTable {
        static TABLE: OnceLock<TracyWidomTable> = OnceLock::new();
        TABLE.get_or_init(TracyWidomTable::build)
    }

    pub fn grid(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn step_discrepancy(&self) -> f64 {
        self.step_discrepancy
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= TABLE_LO {
            return 0.0;
        }
        if x >= TABLE_HI {
            return (1.0 - airy_tail(x) / 2.0).min(1.0);
        }
        let spacing = self.x[1] - self.x[0];
        let i = (((x - TABLE_LO) / spacing) as usize).min(TABLE_NODES - 2);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * self.cdf[i]
            + (t3 - 2.0 * t2 + t) * h * self.slope[i]
            + (-2.0 * t3 + 3.0 * t2) * self.cdf[i + 1]
            + (t3 - t2) * h * self.slope[i + 1];
        v.clamp(self.cdf[i], self.cdf[i + 1])
    }

    /// Inverse of the tabulated CDF by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (TABLE_LO, TABLE_HI);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Hermite slopes limited by the Fritsch-Carlson condition so that the
/// interpolant is monotone on every interval.
fn monotone_slopes(x: &[f64], y: &[f64], d: &[f64]) -> Vec<f64> {
    let mut m = d.to_vec();
    for i in 0..x.len() - 1 {
        let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if delta == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let (a, b) = (m[i] / delta, m[i + 1] / delta);
        let norm = a * a + b * b;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            m[i] = tau * a * delta;
            m[i + 1] = tau * b * delta;
        }
    }
    m
}

/// Tracy-Widom (beta = 1) distribution function.
pub fn f1_cdf(x: f64) -> f64 {
    TracyWidomTable::global().cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_and_known_quantiles() {
        assert!(f1_cdf(-10.0) <= 1e-6);
        assert!((f1_cdf(0.0) - 0.831_908_066_2).abs() < 1e-8);
        // Right tail: 1 - F1(x) ~ exp(-2/3 x^(3/2)) / (4 sqrt(pi) x^(3/4)).
        let tail = |x: f64| {
            (-2.0 / 3.0 * x.powf(1.5)).exp() / (4.0 * std::f64::consts::PI.sqrt() * x.powf(0.75))
        };
        for x in [5.0, 6.0, 8.0] {
            let ratio = (1.0 - f1_cdf(x)) / tail(x);
            assert!((ratio - 1.0).abs() < 0.1, "x={x}: {ratio}");
        }
        assert!(f1_cdf(8.0) >= 1.0 - 1e-6);
        assert!((f1_cdf(0.9793) - 0.95).abs() < 5e-3);
        let t = TracyWidomTable::global();
        assert!((t.quantile(0.95) - 0.9793).abs() < 1e-3);
        assert!((t.quantile(0.99) - 2.0234).abs() < 1e-3);
    }

    #[test]
    fn moments_match_known_values() {
        let t = TracyWidomTable::global();
        let (x, f) = (t.grid(), t.values());
        let (mut mean, mut second) = (0.0, 0.0);
        for i in 0..x.len() - 1 {
            let mid = 0.5 * (x[i] + x[i + 1]);
            let mass = f[i + 1] - f[i];
            mean += mid * mass;
            second += mid * mid * mass;
        }
        assert!((mean + 1.2065).abs() < 1e-3, "{mean}");
        assert!((second - mean * mean - 1.6078).abs() < 2e-3);
    }

    #[test]
    fn step_sizes_agree() {
        assert!(TracyWidomTable::global().step_discrepancy() < 1e-8);
    }

    #[test]
    fn table_is_a_valid_cdf() {
        let t = TracyWidomTable::global();
        assert!(t.values().windows(2).all(|w| w[0] <= w[1]));
        assert!(t.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let mut prev = 0.0;
        for k in 0..=20_000 {
            let c = f1_cdf(-12.0 + 20.0 * k as f64 / 20_000.0);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn continuous_at_table_edge() {
        assert!((f1_cdf(TABLE_HI - 1e-9) - f1_cdf(TABLE_HI)).abs() < 1e-9);
    }
}

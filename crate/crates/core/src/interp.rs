//! Shape-preserving piecewise cubic Hermite interpolation (PCHIP).
//!
//! Interior slopes use the weighted harmonic mean of the neighbouring secant
//! slopes (zero at local extrema), which keeps the interpolant monotone on
//! monotone data. End slopes use the one-sided three-point formula with the
//! Fritsch-Carlson limiter.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("interpolation needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node abscissae must be strictly increasing (violated at index {0})")]
    UnsortedNodes(usize),
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite node value at index {0}")]
    NonFinite(usize),
    #[error("query {query} outside node span [{lo}, {hi}]")]
    OutOfSpan { query: f64, lo: f64, hi: f64 },
}

/// Monotone cubic interpolant over strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        if x.len() != y.len() {
            return Err(InterpError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(InterpError::TooFewNodes(x.len()));
        }
        for (i, (a, b)) in x.iter().zip(&y).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(InterpError::NonFinite(i));
            }
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(InterpError::UnsortedNodes(i + 1));
        }
        let d = slopes(&x, &y);
        Ok(Self { x, y, d })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, InterpError> {
        let (x, y) = points.iter().copied().unzip();
        Self::new(x, y)
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    pub fn span(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, q: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.span();
        if !(q >= lo && q <= hi) {
            return Err(InterpError::OutOfSpan { query: q, lo, hi });
        }
        Ok(self.eval_in_span(q))
    }

    /// Evaluates without the span check; queries outside the span follow the
    /// end cubic.
    pub(crate) fn eval_in_span(&self, q: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= q) {
            0 => 0,
            k if k >= n => {
                if q == self.x[n - 1] {
                    return self.y[n - 1];
                }
                n - 2
            }
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (q - self.x[i]) / h;
        let s = 1.0 - t;
        // increment form: flat segments reproduce their value exactly
        let h10 = t * s * s;
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        self.y[i] + h01 * (self.y[i + 1] - self.y[i]) + h * (h10 * self.d[i] + h11 * self.d[i + 1])
    }

    /// First derivative of the interpolant.
    pub fn derivative(&self, q: f64) -> Result<f64, InterpError> {
        let (lo, hi) = self.span();
        if !(q >= lo && q <= hi) {
            return Err(InterpError::OutOfSpan { query: q, lo, hi });
        }
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= q).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let t = (q - self.x[i]) / h;
        let dh00 = 6.0 * t * t - 6.0 * t;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -6.0 * t * t + 6.0 * t;
        let dh11 = 3.0 * t * t - 2.0 * t;
        Ok((dh00 * self.y[i] + dh01 * self.y[i + 1]) / h + dh10 * self.d[i] + dh11 * self.d[i + 1])
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![m[0], m[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (m0, m1) = (m[k - 1], m[k]);
        if m0 == 0.0 || m1 == 0.0 || m0.signum() != m1.signum() {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / m0 + w2 / m1);
    }
    d[0] = edge_slope(h[0], h[1], m[0], m[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
    d
}

fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Trapezoid integral of node values over node coordinates.
pub fn trapezoid(z: &[f64], v: &[f64]) -> f64 {
    z.windows(2)
        .zip(v.windows(2))
        .map(|(zw, vw)| 0.5 * (vw[0] + vw[1]) * (zw[1] - zw[0]))
        .sum()
}

/// Relative overshoot of the node span that [`linear_within`] folds back
/// onto the end nodes; matches the mesh-length tolerance of the data files.
pub const SPAN_SLACK: f64 = 1e-3;

/// As [`linear`], but queries within `SPAN_SLACK` of the span (relative to
/// its width) are clamped onto the nearest end node, and queries a rounding
/// error away from a node take the node value.
pub fn linear_within(x: &[f64], y: &[f64], q: f64) -> Option<f64> {
    let (&lo, &hi) = (x.first()?, x.last()?);
    let slack = SPAN_SLACK * (hi - lo);
    if q < lo - slack || q > hi + slack {
        return None;
    }
    let q = q.clamp(lo, hi);
    // snap onto a node that differs only by accumulated rounding
    let i = x.partition_point(|&v| v < q);
    let near = [i.saturating_sub(1), i.min(x.len() - 1)]
        .into_iter()
        .min_by(|&a, &b| (x[a] - q).abs().total_cmp(&(x[b] - q).abs()))
        .expect("non-empty");
    if (x[near] - q).abs() <= 1e-12 * (hi - lo) {
        return linear(x, y, x[near]);
    }
    linear(x, y, q)
}

/// Linear interpolation over sorted nodes; `None` outside the node span.
pub fn linear(x: &[f64], y: &[f64], q: f64) -> Option<f64> {
    let n = x.len();
    if n == 0 || q < x[0] || q > x[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(y[0]);
    }
    let i = x.partition_point(|&v| v <= q).clamp(1, n - 1) - 1;
    let h = x[i + 1] - x[i];
    if h == 0.0 {
        return Some(y[i + 1]);
    }
    let t = (q - x[i]) / h;
    Some(y[i] + t * (y[i + 1] - y[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_straight_line() {
        let p = Pchip::new(vec![0.0, 0.5, 2.0, 3.0], vec![1.0, 2.0, 5.0, 7.0]).unwrap();
        for k in 0..=30 {
            let q = k as f64 * 0.1;
            assert!((p.eval(q).unwrap() - (1.0 + 2.0 * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_at_nodes() {
        let x = vec![0.0, 0.3, 1.1, 1.7, 2.0];
        let y = vec![3.0, -1.0, 4.0, 4.0, 0.5];
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(p.eval(*a).unwrap(), *b);
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert_eq!(Pchip::new(vec![0.0], vec![1.0]), Err(InterpError::TooFewNodes(1)));
        assert_eq!(
            Pchip::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]),
            Err(InterpError::UnsortedNodes(2))
        );
        let p = Pchip::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(p.eval(1.5), Err(InterpError::OutOfSpan { .. })));
        assert!(p.eval(f64::NAN).is_err());
    }

    #[test]
    fn flat_segments_stay_flat() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        for k in 0..=10 {
            let q = 1.0 + k as f64 * 0.1;
            assert!((p.eval(q).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_helper() {
        let x = [0.0, 1.0, 1.0, 2.0];
        let y = [0.0, 2.0, 1.0, 1.0];
        assert_eq!(linear(&x, &y, 0.5), Some(1.0));
        assert_eq!(linear(&x, &y, 1.5), Some(1.0));
        assert_eq!(linear(&x, &y, 2.5), None);
        assert!((trapezoid(&[0.0, 1.0, 3.0], &[1.0, 1.0, 2.0]) - 4.0).abs() < 1e-15);
    }
}

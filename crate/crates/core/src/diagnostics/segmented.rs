//! Least-squares straight line and continuous two-segment (hinge) fits.
//!
//! The hinge fit is computed as an update of the straight-line fit: the
//! hinge regressor `max(x - x_k, 0)` is residualized against `[1, x]`, so
//! `sse_two_segment = sse_single - gain` with `gain >= 0`. Nesting holds in
//! floating point, not only in exact arithmetic.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeFit {
    /// Index of the knot in `x` (zero-based).
    pub knot: usize,
    pub left_slope: f64,
    pub right_slope: f64,
    pub sse: f64,
}

struct Centered {
    x_mean: f64,
    sxx: f64,
    line: LineFit,
    residuals: Vec<f64>,
}

fn center(x: &[f64], y: &[f64]) -> Centered {
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - x_mean).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - x_mean) * (b - y_mean)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - y_mean - slope * (a - x_mean))
        .collect();
    let sse = residuals.iter().map(|r| r * r).sum();
    Centered {
        x_mean,
        sxx,
        line: LineFit {
            intercept: y_mean - slope * x_mean,
            slope,
            sse,
        },
        residuals,
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len(), "x and y lengths differ");
    assert!(!x.is_empty(), "empty fit");
    center(x, y).line
}

/// Best continuous two-segment fit with the knot at one of `x[knots]`.
/// Returns the single-line fit alongside. Ties in SSE keep the earliest knot.
pub fn fit_hinge(
    x: &[f64],
    y: &[f64],
    knots: std::ops::RangeInclusive<usize>,
) -> Option<(LineFit, HingeFit)> {
    assert_eq!(x.len(), y.len(), "x and y lengths differ");
    if x.len() < 3 || knots.is_empty() || *knots.end() >= x.len() {
        return None;
    }
    let c = center(x, y);
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for k in knots {
        let at = x[k];
        let h: Vec<f64> = x.iter().map(|v| (v - at).max(0.0)).collect();
        let h_mean = h.iter().sum::<f64>() / h.len() as f64;
        let sxh: f64 = x.iter().zip(&h).map(|(a, b)| (a - c.x_mean) * (b - h_mean)).sum();
        let g = if c.sxx > 0.0 { sxh / c.sxx } else { 0.0 };
        let h_res: Vec<f64> = x
            .iter()
            .zip(&h)
            .map(|(a, b)| b - h_mean - g * (a - c.x_mean))
            .collect();
        let hh: f64 = h_res.iter().map(|v| v * v).sum();
        if !(hh > 0.0) {
            continue;
        }
        let rh: f64 = c.residuals.iter().zip(&h_res).map(|(r, v)| r * v).sum();
        let gain = rh * rh / hh;
        if best.map_or(true, |(g0, ..)| gain > g0) {
            best = Some((gain, k, rh / hh, g));
        }
    }
    let (gain, knot, coef, g) = best?;
    let left_slope = c.line.slope - coef * g;
    Some((
        c.line,
        HingeFit {
            knot,
            left_slope,
            right_slope: left_slope + coef,
            sse: (c.line.sse - gain).max(0.0),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 0.5 * v).collect();
        let f = fit_line(&x, &y);
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-12);
        assert!(f.sse < 1e-24);
    }

    #[test]
    fn recovers_exact_hinge() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v <= 7.0 { 1.0 } else { 1.0 + 3.0 * (v - 7.0) }).collect();
        let (line, hinge) = fit_hinge(&x, &y, 1..=18).unwrap();
        assert_eq!(hinge.knot, 7);
        assert!(hinge.left_slope.abs() < 1e-10);
        assert!((hinge.right_slope - 3.0).abs() < 1e-10);
        assert!(hinge.sse < 1e-18);
        assert!(line.sse > 1.0);
    }

    #[test]
    fn brute_force_normal_equations_agree() {
        // solve the 3-parameter least squares directly for each knot
        let x: Vec<f64> = (1..=30).map(|i| i as f64 / 31.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| (v * 7.3).sin() * 0.2 + v * v).collect();
        let (_, hinge) = fit_hinge(&x, &y, 1..=28).unwrap();
        let mut best = f64::INFINITY;
        for k in 1..=28 {
            let cols = |i: usize| [1.0, x[i], (x[i] - x[k]).max(0.0)];
            let mut a = [[0.0; 3]; 3];
            let mut b = [0.0; 3];
            for i in 0..x.len() {
                let c = cols(i);
                for r in 0..3 {
                    b[r] += c[r] * y[i];
                    for s in 0..3 {
                        a[r][s] += c[r] * c[s];
                    }
                }
            }
            let beta = solve3(a, b);
            let sse: f64 = (0..x.len())
                .map(|i| {
                    let c = cols(i);
                    (y[i] - beta[0] * c[0] - beta[1] * c[1] - beta[2] * c[2]).powi(2)
                })
                .sum();
            best = best.min(sse);
        }
        assert!((hinge.sse - best).abs() < 1e-10, "{} vs {}", hinge.sse, best);
    }

    fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
        for col in 0..3 {
            let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..3 {
                let f = a[r][col] / a[col][col];
                for c in col..3 {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut out = [0.0; 3];
        for r in (0..3).rev() {
            let s: f64 = (r + 1..3).map(|c| a[r][c] * out[c]).sum();
            out[r] = (b[r] - s) / a[r][r];
        }
        out
    }
}

use serde::{Deserialize, Serialize};

use crate::model::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    PvalueRank,
    Expectation,
    Volcano,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefKind {
    /// Line `y = parameters[0] + parameters[1] * x`.
    ExpectedOrder,
    /// Horizontal line at `y = parameters[0]`, the -log10 of `1/(n+1)`.
    SmallestPMarker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub kind: RefKind,
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Source row of the study behind this point.
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub kind: PlotKind,
    pub points: Vec<Point>,
    pub reference_lines: Vec<ReferenceLine>,
    pub n: usize,
}

/// `-log10(v)`, with `+0.0` rather than `-0.0` at `v = 1`.
pub(crate) fn neg_log10(v: f64) -> f64 {
    0.0 - v.log10()
}

/// Expected value of the smallest of `n` uniform(0, 1) draws, `1/(n+1)`.
pub fn smallest_p_expectation(n: usize) -> f64 {
    1.0 / (n as f64 + 1.0)
}

fn smallest_p_marker(n: usize) -> ReferenceLine {
    ReferenceLine {
        kind: RefKind::SmallestPMarker,
        parameters: vec![neg_log10(smallest_p_expectation(n))],
    }
}

/// Sorted p-values against their ranks 1..n.
pub fn pvalue_plot(ds: &Dataset) -> Result<PlotSeries> {
    let derived = ds.ranked()?;
    let points = ds
        .rank_order()?
        .into_iter()
        .map(|row| Point {
            x: derived[row].rank.expect("ranked") as f64,
            y: derived[row].p,
            row,
        })
        .collect();
    Ok(PlotSeries {
        kind: PlotKind::PvalueRank,
        points,
        reference_lines: Vec::new(),
        n: ds.len(),
    })
}

/// `-log10 p_(i)` against `-log10(i/(n+1))`, ordered by ascending expected value.
pub fn expectation_plot(ds: &Dataset) -> Result<PlotSeries> {
    let derived = ds.ranked()?;
    let n = ds.len();
    let order = ds.rank_order()?;
    let points = order
        .into_iter()
        .rev()
        .map(|row| {
            let rank = derived[row].rank.expect("ranked");
            Point {
                x: neg_log10(rank as f64 / (n as f64 + 1.0)),
                y: neg_log10(derived[row].p),
                row,
            }
        })
        .collect();
    Ok(PlotSeries {
        kind: PlotKind::Expectation,
        points,
        // the expected order statistics fitted against themselves: the identity
        reference_lines: vec![
            ReferenceLine {
                kind: RefKind::ExpectedOrder,
                parameters: vec![0.0, 1.0],
            },
            smallest_p_marker(n),
        ],
        n,
    })
}

/// `-log10 p` against `rr` for every record not in `exclude`, in row order.
pub fn volcano_plot(ds: &Dataset, exclude: &[usize]) -> Result<PlotSeries> {
    let derived = ds.derived()?;
    if let Some(bad) = exclude.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::Domain(format!(
            "exclusion index {bad} out of range for {} records",
            ds.len()
        )));
    }
    let points: Vec<Point> = ds
        .records
        .iter()
        .zip(derived)
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(row, (r, d))| Point {
            x: r.rr,
            y: neg_log10(d.p),
            row,
        })
        .collect();
    let n = points.len();
    Ok(PlotSeries {
        kind: PlotKind::Volcano,
        points,
        reference_lines: vec![smallest_p_marker(n)],
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StudyRecord;
    use crate::stats::{derive_and_rank, Conversion};

    fn from_pvalues(ps: &[f64]) -> Dataset {
        // build records whose linear-scale p equals the target
        let crit = 1.96;
        let records = ps
            .iter()
            .map(|&p| {
                let z = crate::stats::normal_isf(p / 2.0).unwrap();
                let se = 0.05;
                let rr = 1.0 - z * se;
                StudyRecord {
                    author: "S".into(),
                    year: 2000,
                    comment: None,
                    ref_id: 1,
                    rr,
                    cl_low: rr - crit * se,
                    cl_high: rr + crit * se,
                }
            })
            .collect();
        derive_and_rank(&Dataset::new("t", records), &Conversion::default()).unwrap()
    }

    #[test]
    fn uniform_grid_plot() {
        let ds = from_pvalues(&[0.75, 0.25, 0.5]);
        let s = pvalue_plot(&ds).unwrap();
        let xy: Vec<(f64, f64)> = s.points.iter().map(|p| (p.x, p.y)).collect();
        for (got, want) in xy.iter().zip([(1.0, 0.25), (2.0, 0.5), (3.0, 0.75)]) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-12);
        }
        assert_eq!(s.points[0].row, 1);
        assert!(s.reference_lines.is_empty());
    }

    #[test]
    fn plots_need_ranks() {
        let ds = Dataset::new("t", Vec::new());
        assert!(matches!(pvalue_plot(&ds), Err(Error::State(_))));
        assert!(matches!(expectation_plot(&ds), Err(Error::State(_))));
        assert!(matches!(volcano_plot(&ds, &[]), Err(Error::State(_))));
    }

    #[test]
    fn expectation_markers() {
        for (n, want) in [(50usize, 1.7075701760979363), (43, 1.6434526764861874)] {
            let ps: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let s = expectation_plot(&from_pvalues(&ps)).unwrap();
            let marker = s
                .reference_lines
                .iter()
                .find(|l| l.kind == RefKind::SmallestPMarker)
                .unwrap();
            assert!((marker.parameters[0] - want).abs() < 1e-12);
            // points sit on the identity line
            for p in &s.points {
                assert!((p.x - p.y).abs() < 1e-9, "{p:?}");
            }
            assert!(s.points.windows(2).all(|w| w[0].x < w[1].x));
        }
    }

    #[test]
    fn volcano_exclusions() {
        let ds = from_pvalues(&[0.1, 0.2, 0.3, 0.4]);
        let all = volcano_plot(&ds, &[]).unwrap();
        assert_eq!(all.n, 4);
        let some = volcano_plot(&ds, &[1, 3]).unwrap();
        assert_eq!(some.n, 2);
        assert_eq!(some.points.iter().map(|p| p.row).collect::<Vec<_>>(), vec![0, 2]);
        assert!((some.reference_lines[0].parameters[0] + (1.0f64 / 3.0).log10()).abs() < 1e-15);
        assert!(volcano_plot(&ds, &[4]).is_err());
    }

    #[test]
    fn volcano_null_point() {
        let ds = derive_and_rank(
            &Dataset::new(
                "t",
                vec![StudyRecord {
                    author: "A".into(),
                    year: 1,
                    comment: None,
                    ref_id: 1,
                    rr: 1.0,
                    cl_low: 0.9,
                    cl_high: 1.1,
                }],
            ),
            &Conversion::default(),
        )
        .unwrap();
        let s = volcano_plot(&ds, &[]).unwrap();
        assert_eq!((s.points[0].x, s.points[0].y), (1.0, 0.0));
        assert!(s.points[0].y.is_sign_positive());
    }
}

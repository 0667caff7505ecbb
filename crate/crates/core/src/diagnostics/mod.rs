//! P-value plot series and their automated interpretation.

mod ks;
mod outliers;
mod plots;
mod segmented;
mod shape;

pub use ks::{kolmogorov_sf, ks_uniform, KsResult};
pub use outliers::{flag_outliers, Flag, FlagReason, OutlierReport, OutlierRules};
pub use plots::{
    expectation_plot, pvalue_plot, smallest_p_expectation, volcano_plot, PlotKind, PlotSeries, Point,
    RefKind, ReferenceLine,
};
pub use segmented::{fit_hinge, fit_line, HingeFit, LineFit};
pub use shape::{classify_pvalues, classify_shape, ShapeRules, ShapeVerdict, Verdict};

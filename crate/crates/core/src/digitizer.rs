//! Cleanup and resampling of digitized axial heat-flux curves.

use thiserror::Error;

use crate::dataset::{AxialProfile, Shape};
use crate::interp::{InterpError, Pchip};

pub const DEFAULT_NODES: usize = 40;
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DigitizerError {
    #[error("curve has {found} points, at least {MIN_POINTS} required")]
    TooFewPoints { found: usize },
    #[error("curve covers {covered:.1}% of the heated length, at least {required:.1}% required")]
    SpanError { covered: f64, required: f64 },
    #[error("point z = {z} m outside [0, {limit}] m")]
    PointOutsideTube { z: f64, limit: f64 },
    #[error("segment [{start}, {end}) m has no points")]
    EmptySegment { start: f64, end: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// Digitized points `(z [m], q / q_av)` for one tube.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCurve {
    pub points: Vec<(f64, f64)>,
    /// W
    pub declared_power: Option<f64>,
    /// m
    pub perimeter: f64,
    /// m
    pub length: f64,
    /// Axial positions of flux discontinuities, strictly inside the tube.
    pub breakpoints: Vec<f64>,
    pub shape: Shape,
    /// Points already dropped by [`filter_outliers`]; they count toward the
    /// removal cap so that filtering twice removes nothing more.
    pub removed: usize,
}

impl RawCurve {
    pub fn new(points: Vec<(f64, f64)>, perimeter: f64, length: f64) -> Self {
        Self { points, declared_power: None, perimeter, length, breakpoints: Vec::new(), shape: Shape::Uniform, removed: 0 }
    }

    /// Reads `z, q_norm` lines (comma or whitespace separated). Blank lines,
    /// `#` comments and a non-numeric header line are skipped.
    pub fn parse_points(text: &str) -> Result<Vec<(f64, f64)>, DigitizerError> {
        let mut points = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => points.push((v[0], v[1])),
                Err(_) if points.is_empty() && idx == 0 => continue,
                _ => return Err(DigitizerError::Parse { line: idx + 1, message: format!("expected `z, q_norm`, got {line:?}") }),
            }
        }
        Ok(points)
    }

    fn check(&self) -> Result<(), DigitizerError> {
        if self.points.len() < MIN_POINTS {
            return Err(DigitizerError::TooFewPoints { found: self.points.len() });
        }
        let limit = self.length * 1.01;
        if let Some(&(z, _)) = self.points.iter().find(|(z, _)| !(*z >= 0.0 && *z <= limit)) {
            return Err(DigitizerError::PointOutsideTube { z, limit });
        }
        Ok(())
    }

    /// Segment index of `z` given the sorted breakpoints; a point on a
    /// breakpoint belongs to the downstream segment.
    fn segment_of(&self, z: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierPolicy {
    /// Residual threshold in units of the median absolute deviation.
    pub k: f64,
    /// Moving-median half window (points on each side).
    pub half_window: usize,
    /// Largest fraction of points that may be removed.
    pub max_fraction: f64,
}

impl Default for OutlierPolicy {
    fn default() -> Self {
        Self { k: 3.5, half_window: 2, max_fraction: 0.2 }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sorts by z and averages points with exactly equal z within a segment.
fn sort_and_merge(curve: &RawCurve) -> Vec<(f64, f64)> {
    let mut pts = curve.points.clone();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    let mut count = 0usize;
    for (z, q) in pts {
        match out.last_mut() {
            Some(last) if last.0 == z => {
                count += 1;
                last.1 += (q - last.1) / count as f64;
            }
            _ => {
                out.push((z, q));
                count = 1;
            }
        }
    }
    out
}

/// Residuals against a centered moving median. Windows shrink symmetrically
/// near the ends and never cross a breakpoint, so end points of a segment
/// act as anchors.
fn residuals(curve: &RawCurve, pts: &[(f64, f64)], half: usize) -> Vec<f64> {
    let seg: Vec<usize> = pts.iter().map(|p| curve.segment_of(p.0)).collect();
    let mut buf = Vec::with_capacity(2 * half + 1);
    (0..pts.len())
        .map(|i| {
            let mut lo = i;
            let mut hi = i;
            for _ in 0..half {
                if lo == 0 || hi + 1 >= pts.len() || seg[lo - 1] != seg[i] || seg[hi + 1] != seg[i] {
                    break;
                }
                lo -= 1;
                hi += 1;
            }
            buf.clear();
            buf.extend(pts[lo..=hi].iter().map(|p| p.1));
            pts[i].1 - median(&mut buf)
        })
        .collect()
}

/// Removes spurious points: repeatedly drops the point with the largest
/// moving-median residual while it exceeds `k * MAD`, up to the removal cap.
pub fn filter_outliers(curve: &RawCurve, policy: &OutlierPolicy) -> Result<RawCurve, DigitizerError> {
    curve.check()?;
    let mut pts = sort_and_merge(curve);
    if pts.len() < MIN_POINTS {
        return Err(DigitizerError::TooFewPoints { found: pts.len() });
    }
    let original = pts.len() + curve.removed;
    let cap = ((policy.max_fraction * original as f64).floor() as usize).saturating_sub(curve.removed);
    let mut removed = 0;
    let scale = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    for _ in 0..cap {
        if pts.len() <= MIN_POINTS {
            break;
        }
        let r = residuals(curve, &pts, policy.half_window);
        let center = median(&mut r.clone());
        let mad = median(&mut r.iter().map(|v| (v - center).abs()).collect::<Vec<_>>());
        let (worst, dev) = r
            .iter()
            .map(|v| (v - center).abs())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        // ignore deviations at rounding level
        if dev <= policy.k * mad || dev <= 1e-12 * scale {
            break;
        }
        pts.remove(worst);
        removed += 1;
    }
    Ok(RawCurve { points: pts, removed: curve.removed + removed, ..curve.clone() })
}

/// PCHIP value through `nodes` at `query`.
pub fn pchip_eval(nodes: &[(f64, f64)], query: f64) -> Result<f64, DigitizerError> {
    Ok(Pchip::from_points(nodes)?.eval(query)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplePolicy {
    pub n_nodes: usize,
    /// Smallest fraction of the heated length the points must cover.
    pub min_coverage: f64,
}

impl Default for ResamplePolicy {
    fn default() -> Self {
        Self { n_nodes: DEFAULT_NODES, min_coverage: 0.95 }
    }
}

/// One interpolant per continuous segment; values outside a segment's point
/// span are held at the nearest end value.
enum SegmentFit {
    Constant(f64),
    Curve(Pchip),
}

impl SegmentFit {
    fn eval(&self, z: f64) -> Result<f64, DigitizerError> {
        match self {
            SegmentFit::Constant(v) => Ok(*v),
            SegmentFit::Curve(p) => {
                let (lo, hi) = p.span();
                Ok(p.eval(z.clamp(lo, hi))?)
            }
        }
    }
}

/// Evaluates the (filtered, sorted) curve on a uniform mesh over
/// `[0, length]` and rescales to unit mean.
pub fn resample_profile(curve: &RawCurve, policy: &ResamplePolicy) -> Result<AxialProfile, DigitizerError> {
    curve.check()?;
    let pts = sort_and_merge(curve);
    let covered = (pts.last().unwrap().0 - pts[0].0) / curve.length;
    if covered < policy.min_coverage {
        return Err(DigitizerError::SpanError { covered: 100.0 * covered, required: 100.0 * policy.min_coverage });
    }
    let mut breaks = curve.breakpoints.clone();
    breaks.sort_by(f64::total_cmp);
    let bounds: Vec<f64> = std::iter::once(0.0).chain(breaks.iter().copied()).chain(std::iter::once(curve.length)).collect();
    let mut fits = Vec::with_capacity(bounds.len() - 1);
    for s in 0..bounds.len() - 1 {
        let seg: Vec<(f64, f64)> = pts.iter().copied().filter(|p| curve.segment_of(p.0) == s).collect();
        fits.push(match seg.len() {
            0 => return Err(DigitizerError::EmptySegment { start: bounds[s], end: bounds[s + 1] }),
            1 => SegmentFit::Constant(seg[0].1),
            _ => SegmentFit::Curve(Pchip::from_points(&seg)?),
        });
    }
    let n = policy.n_nodes.max(2);
    let dz = curve.length / (n - 1) as f64;
    let z: Vec<f64> = (0..n).map(|i| if i == n - 1 { curve.length } else { i as f64 * dz }).collect();
    let mut values = z.iter().map(|&zi| fits[curve.segment_of(zi)].eval(zi)).collect::<Result<Vec<_>, _>>()?;
    // trapezoid mean on a uniform mesh, free of the spacing's rounding
    let interior: f64 = values[1..n - 1].iter().sum();
    let mean = (interior + 0.5 * (values[0] + values[n - 1])) / (n - 1) as f64;
    values.iter_mut().for_each(|v| *v /= mean);
    Ok(AxialProfile::on_uniform_mesh(values, curve.length, curve.shape, curve.breakpoints.is_empty()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceCheck {
    pub discrepancy: f64,
    pub pass: bool,
}

pub const DEFAULT_BALANCE_THRESHOLD: f64 = 0.02;

/// Relative mismatch between the power implied by the profile and the
/// declared power; passes when at or below `threshold`.
pub fn energy_balance_check(
    profile: &AxialProfile,
    heat_flux_avg: f64,
    perimeter: f64,
    declared_power: f64,
    threshold: f64,
) -> BalanceCheck {
    let implied = heat_flux_avg * perimeter * profile.integral();
    let discrepancy = (implied - declared_power).abs() / declared_power;
    // the comparison is inclusive; allow for rounding in the quotient
    BalanceCheck { discrepancy, pass: discrepancy <= threshold * (1.0 + 1e-12) }
}

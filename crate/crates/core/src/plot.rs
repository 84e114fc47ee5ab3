//! SVG figures rendered from run artifacts. Output depends only on the
//! input data: coordinates are printed at fixed precision and nothing time-
//! or environment-dependent is embedded, so reruns are byte-identical.

use std::fmt::Write;

use crate::distributions::{DistributionSnapshot, DrDistribution, SupportBox};
use crate::error::{Error, Result};
use crate::eval::{Band, GridSweepResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
/// Line colors, cycled per series.
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Linear map from a data rectangle to the plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (xp, yp) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{y0:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 4.0,
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{x0:.2}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            yp + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// White to dark blue.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Matrix heatmap: `rows[r][c]` fills the cell at column `c` of row `r`,
/// row 0 at the bottom. Colors scale between the matrix min and max; a
/// constant matrix renders in a single color.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    x_range: (f64, f64),
    y_range: (f64, f64),
    rows: &[Vec<f64>],
) -> Result<String> {
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 {
        return Err(Error::Empty("heatmap data".into()));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config("heatmap rows differ in length".into()));
    }
    let (lo, hi) = rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let frame = Frame::new(x_range, y_range);
    let mut s = open(title);
    let cw = (frame.x.1 - frame.x.0) / cols as f64;
    let rh = (frame.y.1 - frame.y.0) / rows.len() as f64;
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let (x0, x1) = (frame.px(frame.x.0 + c as f64 * cw), frame.px(frame.x.0 + (c + 1) as f64 * cw));
            let (y0, y1) = (frame.py(frame.y.0 + (r + 1) as f64 * rh), frame.py(frame.y.0 + r as f64 * rh));
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x1 - x0,
                y1 - y0,
                color(t)
            );
        }
    }
    axes(&mut s, &frame, x_label, y_label);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">scale {} .. {}</text>"#,
        WIDTH - RIGHT,
        TOP - 4.0,
        tick(lo),
        tick(hi)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Bin probabilities of a 1-D discrete distribution over snapshots
/// (x: context value, y: epoch).
pub fn distribution_heatmap(snapshots: &[DistributionSnapshot]) -> Result<String> {
    let first = snapshots.first().ok_or_else(|| Error::Empty("distribution history".into()))?;
    let DrDistribution::Discrete(d0) = &first.distribution else {
        return Err(Error::Unsupported("heatmaps need the discrete family".into()));
    };
    let rows = snapshots
        .iter()
        .map(|s| match &s.distribution {
            DrDistribution::Discrete(d) if d.bin_count() == d0.bin_count() => Ok(d.probabilities()),
            _ => Err(Error::Config("snapshots mix families or bin counts".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let last = snapshots.last().map_or(0, |s| s.epoch);
    heatmap(
        "Learned distribution over training",
        &d0.support().names()[0],
        "epoch",
        (d0.lower(), d0.upper()),
        (first.epoch as f64, last.max(first.epoch + 1) as f64),
        &rows,
    )
}

/// Confidence ellipses at 1, 2 and 3 standard deviations for each Gaussian
/// snapshot, projected on `dims`; later snapshots are drawn darker.
pub fn ellipse_plot(snapshots: &[DistributionSnapshot], dims: (usize, usize)) -> Result<String> {
    let gaussians = snapshots
        .iter()
        .map(|s| match &s.distribution {
            DrDistribution::Gaussian(g) => Ok(g),
            _ => Err(Error::Unsupported("ellipses need the Gaussian family".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let first = gaussians.first().ok_or_else(|| Error::Empty("distribution history".into()))?;
    let support: &SupportBox = first.support();
    let (i, j) = dims;
    if i == j || j >= support.dim() || i >= support.dim() {
        return Err(Error::Config(format!("cannot project on dimensions {i} and {j}")));
    }
    let pad = |d: usize| 0.25 * support.width(d);
    let frame = Frame::new(
        (support.lower()[i] - pad(i), support.upper()[i] + pad(i)),
        (support.lower()[j] - pad(j), support.upper()[j] + pad(j)),
    );
    let mut s = open("Learned Gaussian: 1, 2 and 3 standard deviations");
    let (bx0, by0) = (frame.px(support.lower()[i]), frame.py(support.upper()[j]));
    let _ = writeln!(
        s,
        r#"<rect x="{bx0:.2}" y="{by0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="gray" stroke-dasharray="4 3"/>"#,
        frame.px(support.upper()[i]) - bx0,
        frame.py(support.lower()[j]) - by0
    );
    let n = gaussians.len();
    for (idx, g) in gaussians.iter().enumerate() {
        let shade = if n > 1 { 0.25 + 0.75 * idx as f64 / (n - 1) as f64 } else { 1.0 };
        for k in [1.0, 2.0, 3.0] {
            let ellipse = g
                .confidence_region(k)?
                .into_iter()
                .find(|e| e.dims == (i.min(j), i.max(j)))
                .ok_or_else(|| Error::Missing(format!("ellipse for dims {i}, {j}")))?;
            let points = (0..64).map(|p| {
                let [a, b] = ellipse.point(std::f64::consts::TAU * p as f64 / 64.0);
                let (x, y) = if i < j { (a, b) } else { (b, a) };
                (frame.px(x), frame.py(y))
            });
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="{:.1}"/>"#,
                polyline(points),
                color(shade),
                2.0 - 0.4 * k
            );
        }
    }
    axes(&mut s, &frame, &support.names()[i], &support.names()[j]);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Mean and `±k` standard deviation bands of a 1-D Gaussian over epochs.
pub fn gaussian_band_plot(snapshots: &[DistributionSnapshot]) -> Result<String> {
    let mut rows = Vec::new();
    for snap in snapshots {
        let DrDistribution::Gaussian(g) = &snap.distribution else {
            return Err(Error::Unsupported("bands need the Gaussian family".into()));
        };
        rows.push((snap.epoch as f64, g.mean()[0], g.std_devs()[0]));
    }
    let first = snapshots.first().ok_or_else(|| Error::Empty("distribution history".into()))?;
    let support = first.distribution.support();
    let epochs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let series: Vec<(String, Band)> = [3.0, 2.0, 1.0]
        .iter()
        .map(|k| {
            (
                format!("{k} std"),
                Band {
                    mean: rows.iter().map(|r| r.1).collect(),
                    min: rows.iter().map(|r| r.1 - k * r.2).collect(),
                    max: rows.iter().map(|r| r.1 + k * r.2).collect(),
                },
            )
        })
        .collect();
    curve_plot(
        "Learned Gaussian over training",
        "epoch",
        &support.names()[0],
        &epochs,
        &series,
    )
}

/// Mean lines with shaded min/max bands, one per series.
pub fn curve_plot(title: &str, x_label: &str, y_label: &str, x: &[f64], series: &[(String, Band)]) -> Result<String> {
    if x.is_empty() || series.is_empty() {
        return Err(Error::Empty("curve data".into()));
    }
    for (name, band) in series {
        if band.mean.len() != x.len() || band.min.len() != x.len() || band.max.len() != x.len() {
            return Err(Error::Config(format!("series `{name}` does not match the x axis")));
        }
    }
    let values = series.iter().flat_map(|(_, b)| b.min.iter().chain(&b.max).chain(&b.mean));
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let frame = Frame::new((x[0], x[x.len() - 1]), (lo, hi));
    let mut s = open(title);
    for (idx, (name, band)) in series.iter().enumerate() {
        let c = PALETTE[idx % PALETTE.len()];
        let upper = x.iter().zip(&band.max).map(|(&a, &b)| (frame.px(a), frame.py(b)));
        let lower = x.iter().zip(&band.min).rev().map(|(&a, &b)| (frame.px(a), frame.py(b)));
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#,
            polyline(upper.chain(lower))
        );
        let mean = x.iter().zip(&band.mean).map(|(&a, &b)| (frame.px(a), frame.py(b)));
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
            polyline(mean)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{c}">{}</text>"#,
            LEFT + 10.0,
            TOP + 14.0 * (idx + 1) as f64,
            escape(name)
        );
    }
    axes(&mut s, &frame, x_label, y_label);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Best return per grid cell for 1-D or 2-D sweeps.
pub fn sweep_heatmap(result: &GridSweepResult) -> Result<String> {
    let d = result.support.dim();
    let n = result.cells_per_dim;
    let rows = match d {
        1 => vec![result.cells.iter().map(|c| c.best_return).collect()],
        2 => {
            let mut rows = vec![vec![0.0; n]; n];
            for cell in &result.cells {
                rows[cell.index[1]][cell.index[0]] = cell.best_return;
            }
            rows
        }
        _ => return Err(Error::Unsupported(format!("sweep heatmaps cover 1 or 2 dimensions, got {d}"))),
    };
    let names = result.support.names();
    let (y_label, y_range) = if d == 2 {
        (names[1].as_str(), (result.support.lower()[1], result.support.upper()[1]))
    } else {
        ("", (0.0, 1.0))
    };
    heatmap(
        "Best return per grid cell",
        &names[0],
        y_label,
        (result.support.lower()[0], result.support.upper()[0]),
        y_range,
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{GaussianDistribution, UniformPrior};
    use crate::rng::SeedLineage;

    fn snapshot(distribution: DrDistribution, epoch: usize) -> DistributionSnapshot {
        DistributionSnapshot::new(distribution, epoch, SeedLineage::new(0, &[]))
    }

    #[test]
    fn uniform_history_is_one_color() {
        let prior = UniformPrior::new(SupportBox::interval(0.0, 1.0, "z").unwrap());
        let d = DrDistribution::initial(crate::Family::Discrete, &prior, 10, false).unwrap();
        let svg = distribution_heatmap(&[snapshot(d.clone(), 0), snapshot(d, 10)]).unwrap();
        let fills: std::collections::BTreeSet<_> = svg
            .lines()
            .filter(|l| l.starts_with("<rect x="))
            .filter_map(|l| l.split("fill=\"").nth(1))
            .collect();
        assert_eq!(fills.len(), 1, "{fills:?}");
    }

    #[test]
    fn identity_covariance_gives_concentric_circles() {
        let support = SupportBox::new(vec![-4.0; 2], vec![4.0; 2], vec!["a".into(), "b".into()]).unwrap();
        let g = GaussianDistribution::new(support, vec![0.0; 2], &[1.0, 0.0, 0.0, 1.0], false).unwrap();
        for k in [1.0, 2.0, 3.0] {
            let e = &g.confidence_region(k).unwrap()[0];
            assert!((e.semi_axes[0] - k).abs() < 1e-12 && (e.semi_axes[1] - k).abs() < 1e-12);
        }
        let svg = ellipse_plot(&[snapshot(DrDistribution::Gaussian(g), 0)], (0, 1)).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 3);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(distribution_heatmap(&[]).is_err());
        assert!(curve_plot("t", "x", "y", &[], &[]).is_err());
    }
}

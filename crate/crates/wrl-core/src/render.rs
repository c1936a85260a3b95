//! Self-contained SVG rendering for polygons and log-log charts, shared by
//! the command-line tool and the browser demo. No external assets, no
//! scripts: every function returns one complete `<svg>` document string.

use crate::geometry::{ConvexPolygon, Vec2};

/// Stroke/fill styling for one polygon in a scene.
#[derive(Debug, Clone)]
pub struct PolygonStyle {
    pub stroke: String,
    pub fill: String,
    pub stroke_width: f64,
    pub opacity: f64,
    pub label: Option<String>,
}

impl PolygonStyle {
    pub fn outline(color: &str) -> PolygonStyle {
        PolygonStyle {
            stroke: color.to_string(),
            fill: "none".to_string(),
            stroke_width: 2.0,
            opacity: 1.0,
            label: None,
        }
    }

    pub fn filled(stroke: &str, fill: &str) -> PolygonStyle {
        PolygonStyle {
            stroke: stroke.to_string(),
            fill: fill.to_string(),
            stroke_width: 1.5,
            opacity: 0.85,
            label: None,
        }
    }

    pub fn labeled(mut self, label: &str) -> PolygonStyle {
        self.label = Some(label.to_string());
        self
    }
}

fn fmt(x: f64) -> String {
    // Enough digits to be faithful at screen scale, short enough to read.
    format!("{:.4}", x)
}

/// Renders polygons into one square viewport. World coordinates are mapped
/// uniformly (equal scale on both axes) with the y axis pointing up.
pub fn polygon_scene(items: &[(&ConvexPolygon, PolygonStyle)], width: u32) -> String {
    let w = width.max(64) as f64;
    let mut min = Vec2::new(f64::MAX, f64::MAX);
    let mut max = Vec2::new(f64::MIN, f64::MIN);
    for (p, _) in items {
        for v in p.vertices() {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
    }
    if items.is_empty() {
        min = Vec2::new(-1.0, -1.0);
        max = Vec2::new(1.0, 1.0);
    }
    let span = (max.x - min.x).max(max.y - min.y).max(1e-12);
    let margin = 0.08 * span;
    let scale = w / (span + 2.0 * margin);
    let cx = 0.5 * (min.x + max.x);
    let cy = 0.5 * (min.y + max.y);
    let to_px = |v: Vec2| -> (f64, f64) {
        (
            0.5 * w + (v.x - cx) * scale,
            0.5 * w - (v.y - cy) * scale,
        )
    };
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {w}\" width=\"{w}\" height=\"{w}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let mut legend_y = 20.0;
    for (p, style) in items {
        let pts: Vec<String> = p
            .vertices()
            .iter()
            .map(|&v| {
                let (x, y) = to_px(v);
                format!("{},{}", fmt(x), fmt(y))
            })
            .collect();
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\" opacity=\"{}\"/>\n",
            pts.join(" "),
            style.fill,
            style.stroke,
            style.stroke_width,
            style.opacity
        ));
        if let Some(label) = &style.label {
            out.push_str(&format!(
                "<text x=\"12\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" fill=\"{}\">{}</text>\n",
                fmt(legend_y),
                style.stroke,
                xml_escape(label)
            ));
            legend_y += 18.0;
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Two-polygon overlay with default styling: the base outlined, the
/// comparison filled translucently.
pub fn overlay_svg(base: &ConvexPolygon, other: &ConvexPolygon, width: u32) -> String {
    polygon_scene(
        &[
            (base, PolygonStyle::outline("#1a4f8a").labeled("base")),
            (
                other,
                PolygonStyle::filled("#c2452d", "#e8a090").labeled("perturbed"),
            ),
        ],
        width,
    )
}

/// One curve of a log-log chart.
#[derive(Debug, Clone)]
pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub label: String,
    /// Draw straight segments between points (markers are always drawn).
    pub connect: bool,
}

/// Log-log scatter/line chart with decade grid lines. Points with a
/// nonpositive coordinate are skipped (they have no logarithm).
pub fn loglog_chart(
    series: &[Series],
    title: &str,
    x_label: &str,
    y_label: &str,
    width: u32,
    height: u32,
) -> String {
    let w = width.max(160) as f64;
    let h = height.max(120) as f64;
    let (ml, mr, mt, mb) = (64.0, 16.0, 36.0, 48.0);
    let usable: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (-1.0, 1.0, -1.0, 1.0);
    if !usable.is_empty() {
        x0 = usable.iter().map(|p| p.0).fold(f64::MAX, f64::min);
        x1 = usable.iter().map(|p| p.0).fold(f64::MIN, f64::max);
        y0 = usable.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        y1 = usable.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        if x1 - x0 < 1e-9 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-9 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad_x = 0.06 * (x1 - x0);
        let pad_y = 0.08 * (y1 - y0);
        x0 -= pad_x;
        x1 += pad_x;
        y0 -= pad_y;
        y1 += pad_y;
    }
    let px = |lx: f64| ml + (lx - x0) / (x1 - x0) * (w - ml - mr);
    let py = |ly: f64| h - mb - (ly - y0) / (y1 - y0) * (h - mt - mb);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        fmt(0.5 * w),
        xml_escape(title)
    ));
    // Decade grid.
    for d in (x0.floor() as i64)..=(x1.ceil() as i64) {
        let lx = d as f64;
        if lx < x0 || lx > x1 {
            continue;
        }
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{t}\" x2=\"{x}\" y2=\"{b}\" stroke=\"#ddd\"/>\n<text x=\"{x}\" y=\"{ly}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{d}</text>\n",
            x = fmt(px(lx)),
            t = fmt(mt),
            b = fmt(h - mb),
            ly = fmt(h - mb + 16.0),
        ));
    }
    for d in (y0.floor() as i64)..=(y1.ceil() as i64) {
        let ly = d as f64;
        if ly < y0 || ly > y1 {
            continue;
        }
        out.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#ddd\"/>\n<text x=\"{lx}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{d}</text>\n",
            l = fmt(ml),
            r = fmt(w - mr),
            y = fmt(py(ly)),
            lx = fmt(ml - 6.0),
        ));
    }
    // Axes frame and labels.
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        fmt(ml),
        fmt(mt),
        fmt(w - ml - mr),
        fmt(h - mt - mb)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        fmt(0.5 * w),
        fmt(h - 10.0),
        xml_escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fmt(0.5 * h),
        fmt(0.5 * h),
        xml_escape(y_label)
    ));
    // Series.
    let mut legend_y = mt + 16.0;
    for s in series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|&(x, y)| (px(x.log10()), py(y.log10())))
            .collect();
        if s.connect && pts.len() >= 2 {
            let path: Vec<String> =
                pts.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                path.join(" "),
                s.color
            ));
        }
        for (x, y) in &pts {
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                fmt(*x),
                fmt(*y),
                s.color
            ));
        }
        if !s.label.is_empty() {
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                fmt(ml + 10.0),
                fmt(legend_y),
                s.color,
                xml_escape(&s.label)
            ));
            legend_y += 16.0;
        }
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn polygon_scene_is_wellformed_and_contains_all_vertices() {
        let p = square();
        let svg = polygon_scene(&[(&p, PolygonStyle::outline("#123456").labeled("sq"))], 400);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("sq"));
        // One coordinate pair per vertex.
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 4);
    }

    #[test]
    fn overlay_draws_both_polygons() {
        let a = square();
        let b = square().translated(Vec2::new(0.2, 0.1));
        let svg = overlay_svg(&a, &b, 300);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains("base") && svg.contains("perturbed"));
    }

    #[test]
    fn loglog_chart_plots_positive_points_and_skips_invalid() {
        let s = Series {
            points: vec![(1e-3, 1e-6), (1e-2, 1e-4), (1e-1, 1e-2), (-1.0, 5.0)],
            color: "#aa2222".into(),
            label: "probe".into(),
            connect: true,
        };
        let svg = loglog_chart(&[s], "growth", "scale", "difference", 640, 480);
        assert!(svg.starts_with("<svg"));
        // Three valid markers, the negative-x point skipped.
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("polyline"));
        assert!(svg.contains("growth"));
    }

    #[test]
    fn xml_labels_are_escaped() {
        let p = square();
        let svg =
            polygon_scene(&[(&p, PolygonStyle::outline("#000").labeled("a<b & c"))], 200);
        assert!(svg.contains("a&lt;b &amp; c"));
        assert!(!svg.contains("a<b"));
    }

    #[test]
    fn empty_scene_still_renders() {
        let svg = polygon_scene(&[], 300);
        assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
    }
}

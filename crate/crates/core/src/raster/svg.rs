use std::fmt::Write;

use crate::camera::Vec2;

use super::coverage::fill_curve;
use super::{Canvas, Scene2D, Shape2D};

/// Opacity for elements annotated as not visible.
pub const LOW_OPACITY: f64 = 0.2;

fn num(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    // avoid "-0"
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn pt(p: &Vec2) -> String {
    format!("{} {}", num(p.x), num(p.y))
}

fn rgb(c: &[f64]) -> String {
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("rgb({},{},{})", q(c[0]), q(c[1]), q(c[2]))
}

/// SVG 1.1 document with one `path` per element, painted back to front.
///
/// `visible` holds one flag per element (empty means all visible); elements
/// flagged invisible are drawn at [`LOW_OPACITY`].
pub fn export_svg(scene: &Scene2D, canvas: &Canvas, visible: &[bool]) -> String {
    let mut s = String::new();
    let (w, h) = (canvas.width, canvas.height);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"  <rect x="0" y="0" width="{w}" height="{h}" fill="{}"/>"#,
        rgb(&canvas.background)
    );
    for i in scene.paint_order() {
        let e = &scene.elements[i];
        let multiplier = if visible.get(i).copied().unwrap_or(true) {
            e.opacity
        } else {
            LOW_OPACITY
        };
        let opacity = num((e.color[3] * multiplier).clamp(0.0, 1.0));
        match &e.shape {
            Shape2D::Stroke { curve, width } => {
                let p = &curve.points;
                let _ = writeln!(
                    s,
                    r#"  <path d="M {} C {} {} {}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="{}" stroke-linecap="round"/>"#,
                    pt(&p[0]),
                    pt(&p[1]),
                    pt(&p[2]),
                    pt(&p[3]),
                    rgb(&e.color),
                    num(*width),
                    opacity
                );
            }
            Shape2D::Fill { points } => {
                let mut d = format!("M {}", pt(&points[0]));
                for j in 0..4 {
                    let c = fill_curve(points, j);
                    let _ = write!(
                        d,
                        " C {} {} {}",
                        pt(&c.points[1]),
                        pt(&c.points[2]),
                        pt(&c.points[3])
                    );
                }
                d.push_str(" Z");
                let _ = writeln!(
                    s,
                    r#"  <path d="{d}" fill="{}" fill-opacity="{}" stroke="none"/>"#,
                    rgb(&e.color),
                    opacity
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::project::Cubic2D;
    use crate::raster::Element2D;

    fn stroke() -> Element2D {
        Element2D::stroke(
            Cubic2D {
                points: [
                    Vec2::new(1.0, 2.0),
                    Vec2::new(5.0, 9.0),
                    Vec2::new(12.0, 3.5),
                    Vec2::new(20.0, 8.0),
                ],
            },
            1.5,
            [0.0, 0.0, 0.0, 1.0],
        )
    }

    #[test]
    fn single_stroke_has_one_cubic() {
        let c = Canvas::new(32, 32).unwrap();
        let svg = export_svg(&Scene2D::new(vec![stroke()]), &c, &[]);
        assert_eq!(svg.matches("<path").count(), 1);
        let d = svg.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(d.matches('C').count(), 1);
        assert!(d.starts_with("M 1 2 C 5 9 12 3.5 20 8"));
        assert!(svg.contains(r#"stroke-opacity="1""#));
    }

    #[test]
    fn fill_is_closed() {
        let mut pts = [Vec2::zeros(); 12];
        for (i, p) in pts.iter_mut().enumerate() {
            let a = i as f64 * std::f64::consts::TAU / 12.0;
            *p = Vec2::new(16.0 + 8.0 * a.cos(), 16.0 + 8.0 * a.sin());
        }
        let e = Element2D::fill(pts, [0.2, 0.4, 0.6, 1.0]);
        let svg = export_svg(&Scene2D::new(vec![e]), &Canvas::new(32, 32).unwrap(), &[]);
        let d = svg.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
        assert!(d.ends_with('Z'));
        assert_eq!(d.matches('C').count(), 4);
        assert!(svg.contains(r#"fill="rgb(51,102,153)""#));
    }

    #[test]
    fn invisible_stroke_low_opacity() {
        let c = Canvas::new(32, 32).unwrap();
        let svg = export_svg(&Scene2D::new(vec![stroke()]), &c, &[false]);
        assert!(svg.contains(r#"stroke-opacity="0.2""#));
    }
}

//! Soft coverage of strokes and fills by distance to a flattened outline.

use crate::camera::Vec2;
use crate::geometry::bernstein;
use crate::geometry::IconLoop;
use crate::project::Cubic2D;

use super::{Element2D, Shape2D};

/// Flattening tolerance in pixels.
pub const FLATTEN_TOLERANCE: f64 = 0.25;
pub const MAX_SEGMENTS: usize = 64;

/// Quintic smoothstep on [0, 1]; C2 at both ends of the band.
#[inline]
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (u * (6.0 * u - 15.0) + 10.0)
    }
}

#[inline]
pub fn smoothstep_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        let v = u * (1.0 - u);
        30.0 * v * v
    }
}

/// Segments needed to flatten `c` within [`FLATTEN_TOLERANCE`] (Wang's bound).
pub fn segment_count(c: &Cubic2D) -> usize {
    let p = &c.points;
    let dd = (p[0] - 2.0 * p[1] + p[2])
        .norm()
        .max((p[1] - 2.0 * p[2] + p[3]).norm());
    let n = (0.75 * dd / FLATTEN_TOLERANCE).sqrt().ceil();
    if n.is_finite() {
        (n as usize).clamp(1, MAX_SEGMENTS)
    } else {
        MAX_SEGMENTS
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Segment {
    pub a: Vec2,
    pub b: Vec2,
    /// Curve within the element (always 0 for strokes).
    pub curve: usize,
    pub t0: f64,
    pub t1: f64,
}

/// Geometry of one element prepared for per-pixel queries.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    pub segments: Vec<Segment>,
    pub is_fill: bool,
    pub half_width: f64,
    /// x0, y0, x1, y1 in pixels; coverage is zero outside.
    pub bbox: [f64; 4],
}

/// Result of a coverage query, with what the backward pass needs.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Hit {
    pub coverage: f64,
    /// d coverage / d (closest outline point), pixel units.
    pub dcov_dq: Vec2,
    pub dcov_dwidth: f64,
    pub segment: usize,
    pub s: f64,
}

fn flatten(c: &Cubic2D, curve: usize, out: &mut Vec<Segment>) {
    let n = segment_count(c);
    let mut prev = c.points[0];
    let mut t_prev = 0.0;
    for k in 1..=n {
        let t = k as f64 / n as f64;
        let next = c.eval_unchecked(t);
        out.push(Segment {
            a: prev,
            b: next,
            curve,
            t0: t_prev,
            t1: t,
        });
        prev = next;
        t_prev = t;
    }
}

pub(crate) fn fill_curve(points: &[Vec2; 12], j: usize) -> Cubic2D {
    Cubic2D {
        points: IconLoop::curve_indices(j).map(|i| points[i]),
    }
}

impl Prepared {
    pub fn new(e: &Element2D) -> Self {
        let mut segments = Vec::new();
        let (is_fill, half_width, pts): (bool, f64, &[Vec2]) = match &e.shape {
            Shape2D::Stroke { curve, width } => {
                flatten(curve, 0, &mut segments);
                (false, 0.5 * width, &curve.points)
            }
            Shape2D::Fill { points } => {
                for j in 0..4 {
                    flatten(&fill_curve(points, j), j, &mut segments);
                }
                (true, 0.0, points)
            }
        };
        // control polygon hull contains the curve; pad by the half width and band
        let pad = half_width + 1.0;
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in pts {
            bbox[0] = bbox[0].min(p.x - pad);
            bbox[1] = bbox[1].min(p.y - pad);
            bbox[2] = bbox[2].max(p.x + pad);
            bbox[3] = bbox[3].max(p.y + pad);
        }
        Self {
            segments,
            is_fill,
            half_width,
            bbox,
        }
    }

    #[inline]
    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.bbox[0] && p.x <= self.bbox[2] && p.y >= self.bbox[1] && p.y <= self.bbox[3]
    }

    /// Closest point on the outline: (distance, segment, s, unit direction q->p).
    fn closest(&self, p: &Vec2) -> (f64, usize, f64, Vec2) {
        let mut best = (f64::INFINITY, 0, 0.0, Vec2::zeros());
        let mut best_d2 = f64::INFINITY;
        for (k, seg) in self.segments.iter().enumerate() {
            let ab = seg.b - seg.a;
            let len2 = ab.norm_squared();
            let s = if len2 > 0.0 {
                ((p - seg.a).dot(&ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = seg.a + ab * s;
            let d2 = (p - q).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = (0.0, k, s, p - q);
            }
        }
        let d = best_d2.sqrt();
        let dir = if d > 0.0 { best.3 / d } else { Vec2::zeros() };
        (d, best.1, best.2, dir)
    }

    fn winding(&self, p: &Vec2) -> i32 {
        let mut w = 0;
        for seg in &self.segments {
            let (a, b) = (seg.a, seg.b);
            let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
            if a.y <= p.y {
                if b.y > p.y && cross > 0.0 {
                    w += 1;
                }
            } else if b.y <= p.y && cross < 0.0 {
                w -= 1;
            }
        }
        w
    }

    pub fn hit(&self, p: &Vec2) -> Hit {
        let (d, segment, s, dir) = self.closest(p);
        if self.is_fill {
            let inside = self.winding(p) != 0;
            let sd = if inside { d } else { -d };
            let u = sd + 0.5;
            let ds = smoothstep_deriv(u);
            // d sd / d q = -dir inside, +dir outside
            let dcov_dq = if inside { -dir * ds } else { dir * ds };
            Hit {
                coverage: smoothstep(u),
                dcov_dq,
                dcov_dwidth: 0.0,
                segment,
                s,
            }
        } else {
            let u = self.half_width - d + 0.5;
            let ds = smoothstep_deriv(u);
            Hit {
                coverage: smoothstep(u),
                dcov_dq: dir * ds,
                dcov_dwidth: 0.5 * ds,
                segment,
                s,
            }
        }
    }

    /// Weights of the element's curve control points in the closest point of `hit`.
    pub fn point_weights(&self, hit: &Hit) -> (usize, [f64; 4]) {
        let seg = &self.segments[hit.segment];
        let b0 = bernstein(seg.t0);
        let b1 = bernstein(seg.t1);
        let s = hit.s;
        (
            seg.curve,
            [0, 1, 2, 3].map(|i| (1.0 - s) * b0[i] + s * b1[i]),
        )
    }
}

/// Coverage of `element` at `pixel_center`, in [0, 1].
pub fn curve_coverage(element: &Element2D, pixel_center: &Vec2) -> f64 {
    let prep = Prepared::new(element);
    if !prep.contains(pixel_center) {
        return 0.0;
    }
    prep.hit(pixel_center).coverage
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hstroke(width: f64) -> Element2D {
        Element2D::stroke(
            Cubic2D {
                points: [
                    Vec2::new(4.0, 16.0),
                    Vec2::new(12.0, 16.0),
                    Vec2::new(20.0, 16.0),
                    Vec2::new(28.0, 16.0),
                ],
            },
            width,
            [0.0, 0.0, 0.0, 1.0],
        )
    }

    #[test]
    fn smoothstep_midpoint() {
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
    }

    #[test]
    fn far_pixel_uncovered() {
        let e = hstroke(2.0);
        assert_eq!(curve_coverage(&e, &Vec2::new(16.0, 16.0 + 5.0)), 0.0);
        assert_eq!(curve_coverage(&e, &Vec2::new(40.0, 16.0)), 0.0);
    }

    #[test]
    fn centerline_fully_covered() {
        for w in [2.0, 3.0, 6.0] {
            assert_eq!(curve_coverage(&hstroke(w), &Vec2::new(16.0, 16.0)), 1.0);
        }
    }

    #[test]
    fn half_width_is_half_covered() {
        // frozen from the smoothstep: S(0.5) = 0.5 at distance w/2
        let w = 3.0;
        let c = curve_coverage(&hstroke(w), &Vec2::new(16.0, 16.0 + w / 2.0));
        assert!((c - 0.5).abs() < 0.05, "{c}");
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coverage_monotone_in_width() {
        let p = Vec2::new(15.3, 17.4);
        let mut prev = 0.0;
        for i in 0..40 {
            let c = curve_coverage(&hstroke(0.1 + 0.1 * i as f64), &p);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn segment_count_bounds() {
        let straight = Cubic2D {
            points: [
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(2.0, 0.0),
                Vec2::new(3.0, 0.0),
            ],
        };
        assert_eq!(segment_count(&straight), 1);
        let wild = Cubic2D {
            points: [
                Vec2::new(0.0, 0.0),
                Vec2::new(1e4, 0.0),
                Vec2::new(-1e4, 1e4),
                Vec2::new(3.0, 0.0),
            ],
        };
        assert_eq!(segment_count(&wild), MAX_SEGMENTS);
    }

    #[test]
    fn fill_inside_outside() {
        let corners = [
            Vec2::new(8.0, 8.0),
            Vec2::new(24.0, 8.0),
            Vec2::new(24.0, 24.0),
            Vec2::new(8.0, 24.0),
        ];
        let mut pts = [Vec2::zeros(); 12];
        for j in 0..4 {
            let a = corners[j];
            let b = corners[(j + 1) % 4];
            pts[3 * j] = a;
            pts[3 * j + 1] = a + (b - a) / 3.0;
            pts[3 * j + 2] = a + (b - a) * (2.0 / 3.0);
        }
        let e = Element2D::fill(pts, [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(curve_coverage(&e, &Vec2::new(16.0, 16.0)), 1.0);
        assert_eq!(curve_coverage(&e, &Vec2::new(4.0, 16.0)), 0.0);
        let edge = curve_coverage(&e, &Vec2::new(8.0, 16.0));
        assert!((edge - 0.5).abs() < 1e-12);
    }
}

use curve3dvg::camera::Vec2;
use curve3dvg::project::Cubic2D;
use curve3dvg::raster::{backward, render_view, Canvas, Element2D, Image, Scene2D, Shape2D};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;

// kept off 0 and 1 so a nudge never crosses the output clamp
fn random_color(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.5..0.95)]
}

fn random_stroke(rng: &mut ChaCha8Rng) -> Element2D {
    let c = Vec2::new(rng.gen_range(12.0..52.0), rng.gen_range(12.0..52.0));
    let pts = std::array::from_fn(|_| {
        c + Vec2::new(rng.gen_range(-14.0..14.0), rng.gen_range(-14.0..14.0))
    });
    let color = random_color(rng);
    Element2D::stroke(Cubic2D { points: pts }, rng.gen_range(1.0..4.0), color)
}

// star-shaped loop, so the winding number never flips under small moves
fn random_fill(rng: &mut ChaCha8Rng) -> Element2D {
    let c = Vec2::new(rng.gen_range(18.0..46.0), rng.gen_range(18.0..46.0));
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut points = [Vec2::zeros(); 12];
    for j in 0..4 {
        let ang = phase + j as f64 * std::f64::consts::FRAC_PI_2;
        let r = rng.gen_range(7.0..14.0);
        let (s, co) = ang.sin_cos();
        let pos = c + Vec2::new(co, s) * r;
        let tangent = Vec2::new(-s, co) * r * rng.gen_range(0.4..0.6);
        points[3 * j] = pos;
        points[3 * j + 1] = pos + tangent;
        points[(3 * j + 11) % 12] = pos - tangent;
    }
    let color = random_color(rng);
    Element2D::fill(points, color)
}

fn random_scene(rng: &mut ChaCha8Rng) -> Scene2D {
    let n = rng.gen_range(2..6);
    let elements = (0..n)
        .map(|i| {
            let e = if rng.gen_bool(0.3) { random_fill(rng) } else { random_stroke(rng) };
            e.with_depth(i as f64).with_opacity(rng.gen_range(0.3..1.0))
        })
        .collect();
    Scene2D::new(elements)
}

fn random_weights(rng: &mut ChaCha8Rng) -> Image {
    let mut w = Image::zeros(64, 64, 4);
    for v in &mut w.data {
        *v = rng.gen_range(-1.0..1.0);
    }
    w
}

fn objective(scene: &Scene2D, canvas: &Canvas, w: &Image) -> f64 {
    let img = render_view(scene, canvas).image;
    img.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
}

fn central_difference<F: Fn(&mut Scene2D, f64)>(scene: &Scene2D, canvas: &Canvas, w: &Image, nudge: F) -> f64 {
    let mut p = scene.clone();
    nudge(&mut p, H);
    let mut q = scene.clone();
    nudge(&mut q, -H);
    (objective(&p, canvas, w) - objective(&q, canvas, w)) / (2.0 * H)
}

/// Worst relative error over every parameter of every element; entries
/// whose gradient is below 1e-6 are compared absolutely and must stay under it.
fn max_gradient_error(scene: &Scene2D, canvas: &Canvas, w: &Image) -> (f64, String) {
    let g = backward(scene, canvas, w);
    let mut worst = (0.0, String::new());
    let mut check = |fd: f64, an: f64, what: String| {
        let err = (fd - an).abs();
        let scale = fd.abs().max(an.abs());
        let rel = if scale < 1e-6 { err / 1e-6 * 1e-3 } else { err / scale };
        if rel > worst.0 {
            worst = (rel, format!("{what}: fd {fd:.6e} analytic {an:.6e}"));
        }
    };
    for (e, el) in scene.elements.iter().enumerate() {
        for m in 0..el.control_points().len() {
            for k in 0..2 {
                let fd = central_difference(scene, canvas, w, |s, h| {
                    s.elements[e].control_points_mut()[m][k] += h
                });
                check(fd, g[e].points[m][k], format!("element {e} point {m}.{k}"));
            }
        }
        if let Shape2D::Stroke { .. } = el.shape {
            let fd = central_difference(scene, canvas, w, |s, h| {
                if let Shape2D::Stroke { width, .. } = &mut s.elements[e].shape {
                    *width += h;
                }
            });
            check(fd, g[e].width, format!("element {e} width"));
        }
        for c in 0..4 {
            let fd = central_difference(scene, canvas, w, |s, h| s.elements[e].color[c] += h);
            check(fd, g[e].color[c], format!("element {e} color {c}"));
        }
        let fd = central_difference(scene, canvas, w, |s, h| s.elements[e].opacity += h);
        check(fd, g[e].opacity, format!("element {e} opacity"));
    }
    worst
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let canvas = Canvas::new(64, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for i in 0..20 {
        let scene = random_scene(&mut rng);
        let w = random_weights(&mut rng);
        let (err, what) = max_gradient_error(&scene, &canvas, &w);
        assert!(err < 1e-3, "scene {i}: relative error {err:.3e} at {what}");
    }
}

fn shifted(scene: &Scene2D, d: Vec2) -> Scene2D {
    let mut s = scene.clone();
    for e in &mut s.elements {
        for p in e.control_points_mut() {
            *p += d;
        }
    }
    s
}

fn seeded_scene(seed: u64) -> Scene2D {
    random_scene(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_pixel_shift_shifts_the_image(seed in 0u64..10_000, dx in -1i64..=1, dy in -1i64..=1) {
        let canvas = Canvas::new(64, 64).unwrap();
        let scene = seeded_scene(seed);
        let a = render_view(&scene, &canvas).image;
        let b = render_view(&shifted(&scene, Vec2::new(dx as f64, dy as f64)), &canvas).image;
        for y in 2..62usize {
            for x in 2..62usize {
                let (sx, sy) = ((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                for c in 0..4 {
                    prop_assert!((a.pixel(x, y)[c] - b.pixel(sx, sy)[c]).abs() < 0.02);
                }
            }
        }
    }

    #[test]
    fn storage_order_is_irrelevant(seed in 0u64..10_000, rot in 0usize..5) {
        let canvas = Canvas::new(48, 48).unwrap();
        let scene = seeded_scene(seed);
        let mut other = scene.clone();
        let r = rot % other.elements.len();
        other.elements.rotate_left(r);
        other.elements.reverse();
        prop_assert_eq!(render_view(&scene, &canvas).image, render_view(&other, &canvas).image);
    }

    #[test]
    fn coverage_grows_with_width(seed in 0u64..10_000, w0 in 0.2f64..6.0, dw in 0.0f64..4.0) {
        let canvas = Canvas::new(48, 48).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_stroke(&mut rng);
        let with_width = |w: f64| {
            let mut e = base.clone();
            e.color = [0.0, 0.0, 0.0, 1.0];
            if let Shape2D::Stroke { width, .. } = &mut e.shape {
                *width = w;
            }
            render_view(&Scene2D::new(vec![e]), &canvas).image
        };
        let (thin, thick) = (with_width(w0), with_width(w0 + dw));
        for (a, b) in thin.data.chunks(4).zip(thick.data.chunks(4)) {
            prop_assert!(b[3] >= a[3] - 1e-12);
        }
    }
}

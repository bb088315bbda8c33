//! Planar SVG plots: workspace, obstacles, level sets of f0, a quiver of a
//! vector field and trajectory polylines.

use std::fmt::Write as _;

use crate::error::{NavError, Result};
use crate::geometry::World;
use crate::integrate::Status;
use crate::Vector;

#[derive(Debug, Clone)]
pub struct SvgOptions {
    /// Image side in pixels.
    pub size: f64,
    /// Quiver arrows per axis; 0 disables the quiver.
    pub quiver_grid: usize,
    /// Number of f0 level sets.
    pub level_sets: usize,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            size: 800.0,
            quiver_grid: 25,
            level_sets: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotTrajectory {
    pub points: Vec<Vector>,
    pub status: Option<Status>,
}

struct Frame {
    lo: [f64; 2],
    span: f64,
    size: f64,
}

impl Frame {
    fn px(&self, x: &Vector) -> (f64, f64) {
        let s = self.size / self.span;
        ((x[0] - self.lo[0]) * s, self.size - (x[1] - self.lo[1]) * s)
    }
}

fn closed_path(frame: &Frame, points: impl Iterator<Item = Vector>) -> String {
    let mut d = String::new();
    for (i, p) in points.enumerate() {
        let (a, b) = frame.px(&p);
        let _ = write!(d, "{}{a:.2},{b:.2} ", if i == 0 { "M" } else { "L" });
    }
    d.push('Z');
    d
}

fn directions(count: usize) -> impl Iterator<Item = Vector> {
    (0..count).map(move |j| {
        let t = std::f64::consts::TAU * j as f64 / count as f64;
        Vector::from_column_slice(&[t.cos(), t.sin()])
    })
}

/// Renders a planar world. `field` is sampled on a grid over free space and
/// drawn as unit-length arrows.
pub fn render_svg<F>(w: &World, trajectories: &[PlotTrajectory], field: Option<F>, opts: &SvgOptions) -> Result<String>
where
    F: Fn(&Vector) -> Option<Vector>,
{
    if w.dim() != 2 {
        return Err(NavError::InvalidConfig("SVG output is only available in two dimensions".into()));
    }
    let ws = &w.workspace;
    let reach = ws.r0 / ws.a0.min_eigenvalue().sqrt();
    let frame = Frame {
        lo: [ws.center[0] - 1.05 * reach, ws.center[1] - 1.05 * reach],
        span: 2.1 * reach,
        size: opts.size,
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        opts.size
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let boundary = directions(256).map(|u| &ws.center + &u * (ws.r0 / ws.a0.quad_form(&u).sqrt()));
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        closed_path(&frame, boundary)
    );

    let f_max = (0..64)
        .map(|j| {
            let u = directions(64).nth(j).expect("in range");
            w.potential.q.quad_form(&(&ws.center + &u * reach - w.target()))
        })
        .fold(0.0, f64::max);
    for l in 1..=opts.level_sets {
        // levels evenly spaced in √f0
        let level = f_max * (l as f64 / (opts.level_sets + 1) as f64).powi(2);
        let ring = directions(128).map(|u| w.target() + &u * (level / w.potential.q.quad_form(&u)).sqrt());
        let _ = writeln!(
            s,
            r##"<path d="{}" fill="none" stroke="#9ab" stroke-width="0.8" stroke-dasharray="4 3"/>"##,
            closed_path(&frame, ring)
        );
    }

    for o in &w.obstacles {
        let ring = directions(128).map(|u| &o.center + &u * (o.radius / o.a.quad_form(&u).sqrt()));
        let _ = writeln!(
            s,
            r##"<path d="{}" fill="#bbb" stroke="#333" stroke-width="1"/>"##,
            closed_path(&frame, ring)
        );
    }

    if let Some(f) = field {
        let g = opts.quiver_grid;
        let arrow = 0.4 * frame.span / g.max(1) as f64;
        for a in 0..g {
            for b in 0..g {
                let x = Vector::from_column_slice(&[
                    frame.lo[0] + (a as f64 + 0.5) * frame.span / g as f64,
                    frame.lo[1] + (b as f64 + 0.5) * frame.span / g as f64,
                ]);
                if !w.in_free_space(&x) {
                    continue;
                }
                let Some(v) = f(&x) else { continue };
                let n = v.norm();
                if !(n > 0.0) || !n.is_finite() {
                    continue;
                }
                let tip = &x + &v * (arrow / n);
                let (x0, y0) = frame.px(&x);
                let (x1, y1) = frame.px(&tip);
                let _ = writeln!(
                    s,
                    r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#57a" stroke-width="0.8"/><circle cx="{x1:.2}" cy="{y1:.2}" r="1.2" fill="#57a"/>"##
                );
            }
        }
    }

    let (tx, ty) = frame.px(w.target());
    let _ = writeln!(s, r##"<circle cx="{tx:.2}" cy="{ty:.2}" r="6" fill="#2a2"/>"##);

    for t in trajectories {
        if t.points.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for p in &t.points {
            let (a, b) = frame.px(p);
            let _ = write!(pts, "{a:.2},{b:.2} ");
        }
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#24c" stroke-width="1.5"/>"##,
            pts.trim_end()
        );
        let (sx, sy) = frame.px(&t.points[0]);
        let _ = writeln!(s, r##"<circle cx="{sx:.2}" cy="{sy:.2}" r="4" fill="#24c"/>"##);
        let (ex, ey) = frame.px(t.points.last().expect("nonempty"));
        match t.status {
            Some(Status::Success) | None => {}
            Some(_) => {
                let _ = writeln!(
                    s,
                    r##"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="#d22"/>"##,
                    ex - 5.0,
                    ey - 5.0
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::g_new;
    use crate::worldgen::{gen_world_2d, GenConfig};

    #[test]
    fn renders_world_and_failed_endpoint() {
        let w = gen_world_2d(&GenConfig::new(3, 1)).unwrap();
        let t = PlotTrajectory {
            points: vec![Vector::from_column_slice(&[1.0, 1.0]), Vector::from_column_slice(&[2.0, 1.0])],
            status: Some(Status::LocalMinimum),
        };
        let svg = render_svg(&w, &[t], Some(|x: &Vector| g_new(&w, 20.0, x).ok()), &SvgOptions::default()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains(r##"fill="#d22""##));
        assert_eq!(svg.matches(r##"fill="#bbb""##).count(), 3);
    }
}

//! Minimal SVG writer for scatter plots, boundary traces and direction
//! fans.

use std::fmt::Write as _;

use crate::boundary::{BoundaryTrace, Window};

pub struct Plot {
    window: Window,
    size: f64,
    body: String,
}

impl Plot {
    pub fn new(window: Window, size: f64) -> Self {
        Plot {
            window,
            size,
            body: String::new(),
        }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let w = &self.window;
        let x = (p[0] - w.x_min) / (w.x_max - w.x_min) * self.size;
        let y = (w.y_max - p[1]) / (w.y_max - w.y_min) * self.size;
        (x, y)
    }

    fn inside(&self, p: [f64; 2]) -> bool {
        let w = &self.window;
        p[0] >= w.x_min && p[0] <= w.x_max && p[1] >= w.y_min && p[1] <= w.y_max
    }

    pub fn axes(&mut self) -> &mut Self {
        let w = self.window;
        self.polyline(&[[w.x_min, 0.0], [w.x_max, 0.0]], "#bbb", 1.0);
        self.polyline(&[[0.0, w.y_min], [0.0, w.y_max]], "#bbb", 1.0)
    }

    pub fn scatter(&mut self, points: impl IntoIterator<Item = [f64; 2]>, color: &str, radius: f64) -> &mut Self {
        for p in points {
            if !self.inside(p) {
                continue;
            }
            let (x, y) = self.px(p);
            let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{color}" fill-opacity="0.5"/>"#);
        }
        self
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], color: &str, width: f64) -> &mut Self {
        if points.len() < 2 {
            return self;
        }
        let mut d = String::new();
        for (i, p) in points.iter().enumerate() {
            let (x, y) = self.px(*p);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
        }
        let _ = writeln!(self.body, r#"<path d="{}" stroke="{color}" stroke-width="{width}" fill="none"/>"#, d.trim_end());
        self
    }

    pub fn boundary(&mut self, trace: &BoundaryTrace, color: &str) -> &mut Self {
        for line in &trace.polylines {
            self.polyline(line, color, 2.0);
        }
        self
    }

    /// Segments from the origin, e.g. neuron directions scaled by norm.
    pub fn rays(&mut self, tips: impl IntoIterator<Item = [f64; 2]>, color: &str) -> &mut Self {
        for t in tips {
            self.polyline(&[[0.0, 0.0], t], color, 0.6);
        }
        self
    }

    pub fn label(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.body, r#"<text x="6" y="16" font-family="sans-serif" font-size="13">{}</text>"#, escape(text));
        self
    }

    pub fn finish(&self) -> String {
        let s = self.size;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_is_well_formed() {
        let mut p = Plot::new(Window::square(1.0), 200.0);
        p.axes()
            .scatter([[0.5, 0.5], [5.0, 5.0]], "red", 2.0)
            .rays([[0.2, 0.1]], "black")
            .label("a < b");
        let s = p.finish();
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 1);
        assert!(s.contains("a &lt; b"));
        // (0.5, 0.5) maps to (150, 50)
        assert!(s.contains(r#"cx="150.00" cy="50.00""#));
    }
}

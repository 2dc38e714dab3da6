//! Zero level set of a 2-D scalar field by marching squares with bisection
//! refinement on each crossing edge.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn square(half_width: f64) -> Self {
        Window {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
        }
    }

    /// `[−3·max(μ1, μ3), 3·max(μ1, μ3)]²`.
    pub fn for_means(mu1: f64, mu3: f64) -> Self {
        Window::square(3.0 * mu1.abs().max(mu3.abs()))
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return Err(Error::invalid("window", format!("{self:?} is empty")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub resolution: usize,
    pub window: Window,
    pub polylines: Vec<Vec<[f64; 2]>>,
    /// Largest |f| over the grid nodes; refinement stops below `1e-9·scale`.
    pub scale: f64,
    /// The field had a single sign over the whole window.
    pub no_boundary: bool,
}

impl BoundaryTrace {
    pub fn vertices(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.polylines.iter().flatten()
    }
}

pub const MIN_RESOLUTION: usize = 64;

fn positive(v: f64) -> bool {
    v >= 0.0
}

fn refine(f: &dyn Fn(&[f64]) -> f64, mut a: [f64; 2], mut b: [f64; 2], fa: f64, tol: f64) -> [f64; 2] {
    let sa = positive(fa);
    let mut mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    for _ in 0..200 {
        mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let fm = f(&mid);
        if fm.abs() < tol || mid == a || mid == b {
            break;
        }
        if positive(fm) == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    mid
}

/// Traces `f = 0` over `window` on a `resolution × resolution` cell grid.
pub fn extract_boundary(f: &dyn Fn(&[f64]) -> f64, window: Window, resolution: usize) -> Result<BoundaryTrace> {
    window.validate()?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::invalid("resolution", format!("need >= {MIN_RESOLUTION}, got {resolution}")));
    }
    let n = resolution + 1;
    let dx = (window.x_max - window.x_min) / resolution as f64;
    let dy = (window.y_max - window.y_min) / resolution as f64;
    let node = |i: usize, j: usize| [window.x_min + i as f64 * dx, window.y_min + j as f64 * dy];
    let mut values = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            values[j * n + i] = f(&node(i, j));
        }
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let any_pos = values.iter().any(|&v| positive(v));
    let any_neg = values.iter().any(|&v| !positive(v));
    if !(any_pos && any_neg) {
        return Ok(BoundaryTrace {
            resolution,
            window,
            polylines: Vec::new(),
            scale,
            no_boundary: true,
        });
    }
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);

    // edges are keyed by their lower-left node and orientation
    let mut crossing: HashMap<(usize, usize, bool), [f64; 2]> = HashMap::new();
    let mut edge_point = |i: usize, j: usize, horizontal: bool| -> Option<(usize, usize, bool)> {
        let (i2, j2) = if horizontal { (i + 1, j) } else { (i, j + 1) };
        let (fa, fb) = (values[j * n + i], values[j2 * n + i2]);
        if positive(fa) == positive(fb) {
            return None;
        }
        let key = (i, j, horizontal);
        crossing.entry(key).or_insert_with(|| refine(f, node(i, j), node(i2, j2), fa, tol));
        Some(key)
    };

    let mut segments: Vec<((usize, usize, bool), (usize, usize, bool))> = Vec::new();
    for j in 0..resolution {
        for i in 0..resolution {
            // bottom, right, top, left
            let e = [
                edge_point(i, j, true),
                edge_point(i + 1, j, false),
                edge_point(i, j + 1, true),
                edge_point(i, j, false),
            ];
            let hits: Vec<_> = e.iter().flatten().copied().collect();
            match hits.len() {
                2 => segments.push((hits[0], hits[1])),
                4 => {
                    // saddle: resolve by the sign at the cell centre
                    let c = [window.x_min + (i as f64 + 0.5) * dx, window.y_min + (j as f64 + 0.5) * dy];
                    let centre_pos = positive(f(&c));
                    let corner_pos = positive(values[j * n + i]);
                    let [b, r, t, l] = [e[0].unwrap(), e[1].unwrap(), e[2].unwrap(), e[3].unwrap()];
                    if centre_pos == corner_pos {
                        segments.push((b, r));
                        segments.push((t, l));
                    } else {
                        segments.push((l, b));
                        segments.push((r, t));
                    }
                }
                _ => {}
            }
        }
    }

    Ok(BoundaryTrace {
        resolution,
        window,
        polylines: chain(&segments, &crossing),
        scale,
        no_boundary: false,
    })
}

type EdgeKey = (usize, usize, bool);

fn chain(segments: &[(EdgeKey, EdgeKey)], points: &HashMap<EdgeKey, [f64; 2]>) -> Vec<Vec<[f64; 2]>> {
    let mut adj: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(s);
        adj.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let other = |s: usize, k: EdgeKey| if segments[s].0 == k { segments[s].1 } else { segments[s].0 };
    // start from open ends first so lines are not split in the middle
    let mut starts: Vec<usize> = (0..segments.len()).collect();
    starts.sort_by_key(|&s| {
        let (a, b) = segments[s];
        usize::from(adj[&a].len() != 1 && adj[&b].len() != 1)
    });
    for s0 in starts {
        if used[s0] {
            continue;
        }
        used[s0] = true;
        let (a, b) = segments[s0];
        let (first, mut cur) = if adj[&b].len() == 1 { (b, a) } else { (a, b) };
        let mut keys = vec![first, cur];
        loop {
            let next = adj[&cur].iter().copied().find(|&s| !used[s]);
            match next {
                Some(s) => {
                    used[s] = true;
                    cur = other(s, cur);
                    keys.push(cur);
                }
                None => break,
            }
        }
        lines.push(keys.iter().map(|k| points[k]).collect());
    }
    // deterministic order
    lines.sort_by(|a: &Vec<[f64; 2]>, b| a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal));
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TwoLayerNet;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    #[test]
    fn opposite_axis_neurons_give_vertical_line() {
        let net = TwoLayerNet::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[1.0, -1.0]).unwrap();
        let tr = extract_boundary(&|x| net.forward(x), Window::square(1.0), 64).unwrap();
        assert!(!tr.no_boundary);
        assert_eq!(tr.polylines.len(), 1);
        assert!(tr.polylines[0].len() > 60);
        for p in tr.vertices() {
            assert!(p[0].abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn three_direction_net_gives_v_shape() {
        let r = FRAC_1_SQRT_2;
        let net = TwoLayerNet::from_rows(&[vec![r, r], vec![r, -r], vec![-1.0, 0.0]], &[1.0, 1.0, -1.0]).unwrap();
        let tr = extract_boundary(&|x| net.forward(x), Window::square(1.0), 128).unwrap();
        assert!(!tr.no_boundary);
        // for x1 < 0: (x1 + |x2|)/√2 + x1 = 0
        let slope = 1.0 / (1.0 + SQRT_2);
        let mut above = false;
        let mut below = false;
        for p in tr.vertices() {
            assert!((p[0] + p[1].abs() * slope).abs() < 1e-8, "{p:?}");
            above |= p[1] > 0.1;
            below |= p[1] < -0.1;
            assert!(net.forward(p).abs() < 1e-9 * tr.scale.max(1.0));
        }
        assert!(above && below);
    }

    #[test]
    fn constant_sign_is_flagged() {
        let tr = extract_boundary(&|x| 1.0 + x[0] * x[0], Window::square(1.0), 64).unwrap();
        assert!(tr.no_boundary);
        assert!(tr.polylines.is_empty());
        assert!(extract_boundary(&|x| x[0], Window::square(1.0), 10).is_err());
    }

    #[test]
    fn circle_closes_on_itself() {
        let tr = extract_boundary(&|x| x[0] * x[0] + x[1] * x[1] - 0.25, Window::square(1.0), 64).unwrap();
        assert_eq!(tr.polylines.len(), 1);
        let line = &tr.polylines[0];
        assert_eq!(line.first(), line.last());
        for p in line {
            assert!((p[0].hypot(p[1]) - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn default_window() {
        let w = Window::for_means(0.225, 0.375);
        assert!((w.x_max - 1.125).abs() < 1e-15 && w.y_min == -w.y_max);
    }
}

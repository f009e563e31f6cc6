//! Planar convex geometry and direction grids.
//!
//! Payoff sets for two players are carried around as counterclockwise convex
//! polygons; higher-dimensional sets only ever appear through their support
//! values on a direction grid, so everything vertex-shaped in here is 2D.

use crate::lp::{LinearProgram, LpStatus, Rel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use std::f64::consts::PI;

/// Cross products below this are treated as collinear.
const CROSS_TOL: f64 = 1e-12;

pub fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by monotone chain. Returns strictly convex vertices in
/// counterclockwise order; collinear interior points are dropped. Degenerate
/// inputs collapse to a point or a segment.
pub fn hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= CROSS_TOL && (a[1] - b[1]).abs() <= CROSS_TOL);
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let mut h: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= CROSS_TOL {
            h.pop();
        }
        h.push(p);
    }
    let lower_len = h.len() + 1;
    for &p in pts.iter().rev() {
        while h.len() >= lower_len && cross(h[h.len() - 2], h[h.len() - 1], p) <= CROSS_TOL {
            h.pop();
        }
        h.push(p);
    }
    h.pop();
    // A fully collinear cloud leaves the two chain endpoints.
    if h.len() == 2 && (h[0][0] - h[1][0]).abs() <= CROSS_TOL && (h[0][1] - h[1][1]).abs() <= CROSS_TOL
    {
        h.pop();
    }
    h
}

/// Clip a counterclockwise polygon against `normal . x <= offset`.
pub fn clip_halfplane(poly: &[[f64; 2]], normal: [f64; 2], offset: f64) -> Vec<[f64; 2]> {
    if poly.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let dc = dot2(normal, cur) - offset;
        let dn = dot2(normal, nxt) - offset;
        if dc <= CROSS_TOL {
            out.push(cur);
        }
        if (dc < -CROSS_TOL && dn > CROSS_TOL) || (dc > CROSS_TOL && dn < -CROSS_TOL) {
            let t = dc / (dc - dn);
            out.push([
                cur[0] + t * (nxt[0] - cur[0]),
                cur[1] + t * (nxt[1] - cur[1]),
            ]);
        }
    }
    // Re-hull to restore strict convexity after near-tangent cuts.
    if out.len() > 2 {
        hull(&out)
    } else {
        out
    }
}

/// Intersect halfplanes `normal . x <= offset`, starting from a box large
/// enough to contain the result. Returns the counterclockwise polygon, empty
/// when the intersection is empty.
pub fn intersect_halfplanes(
    halfplanes: &[([f64; 2], f64)],
    center: [f64; 2],
    radius: f64,
) -> Vec<[f64; 2]> {
    let mut poly = vec![
        [center[0] - radius, center[1] - radius],
        [center[0] + radius, center[1] - radius],
        [center[0] + radius, center[1] + radius],
        [center[0] - radius, center[1] + radius],
    ];
    for &(n, b) in halfplanes {
        poly = clip_halfplane(&poly, n, b);
        if poly.is_empty() {
            return poly;
        }
    }
    poly
}

/// Support value `max_{x in poly} dir . x`. Minus infinity on the empty set.
pub fn support(poly: &[[f64; 2]], dir: [f64; 2]) -> f64 {
    poly.iter()
        .map(|&v| dot2(dir, v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outward unit normals with offsets, one per polygon edge of positive
/// length. The polygon must be counterclockwise.
pub fn edge_halfplanes(poly: &[[f64; 2]]) -> Vec<([f64; 2], f64)> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if len <= CROSS_TOL {
            continue;
        }
        let normal = [d[1] / len, -d[0] / len];
        out.push((normal, dot2(normal, a)));
    }
    out
}

/// Whether `p` lies in the polygon, within `tol` measured along edge normals.
pub fn contains(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => distance(poly, p) <= tol,
        2 => distance(poly, p) <= tol,
        _ => edge_halfplanes(poly)
            .iter()
            .all(|&(n, b)| dot2(n, p) - b <= tol),
    }
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 <= CROSS_TOL * CROSS_TOL {
        0.0
    } else {
        ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2
    }
    .clamp(0.0, 1.0);
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Euclidean distance from `p` to the polygon, zero inside.
pub fn distance(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => ((p[0] - poly[0][0]).powi(2) + (p[1] - poly[0][1]).powi(2)).sqrt(),
        2 => segment_distance(poly[0], poly[1], p),
        n => {
            if contains(poly, p, 0.0) {
                return 0.0;
            }
            (0..n)
                .map(|i| segment_distance(poly[i], poly[(i + 1) % n], p))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Hausdorff distance between convex polygons. The directed part from a
/// convex set is attained at a vertex because point-to-set distance is
/// convex.
pub fn polygon_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let d_ab = a
        .iter()
        .map(|&v| distance(b, v))
        .fold(0.0f64, f64::max);
    let d_ba = b
        .iter()
        .map(|&v| distance(a, v))
        .fold(0.0f64, f64::max);
    d_ab.max(d_ba)
}

pub fn area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s / 2.0
}

pub fn diameter(poly: &[[f64; 2]]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            let dx = poly[i][0] - poly[j][0];
            let dy = poly[i][1] - poly[j][1];
            d = d.max((dx * dx + dy * dy).sqrt());
        }
    }
    d
}

/// `k` unit directions around the circle. Indices landing on a quarter turn
/// produce exact signed coordinate directions, so grids with `k` divisible
/// by four contain every `+-e^i` without rounding error.
pub fn circle_grid(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|i| {
            if (4 * i) % k == 0 {
                match (4 * i) / k {
                    0 => [1.0, 0.0],
                    1 => [0.0, 1.0],
                    2 => [-1.0, 0.0],
                    _ => [0.0, -1.0],
                }
            } else {
                let th = 2.0 * PI * (i as f64) / (k as f64);
                [th.cos(), th.sin()]
            }
        })
        .collect()
}

/// Unit directions in dimension `dim >= 3`: the signed coordinate directions
/// first (exact), then `k` quasi-uniform samples. Dimension three uses a
/// Fibonacci spiral; higher dimensions draw seeded Gaussian directions.
pub fn sphere_grid(k: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim >= 3, "planar grids come from circle_grid");
    let mut dirs = Vec::with_capacity(2 * dim + k);
    for i in 0..dim {
        let mut plus = vec![0.0; dim];
        plus[i] = 1.0;
        dirs.push(plus);
        let mut minus = vec![0.0; dim];
        minus[i] = -1.0;
        dirs.push(minus);
    }
    if dim == 3 {
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        for i in 0..k {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / (k as f64);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * (i as f64) / golden;
            dirs.push(vec![r * phi.cos(), r * phi.sin(), z]);
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut produced = 0;
        while produced < k {
            // Box-Muller pairs give an isotropic Gaussian to normalize.
            let mut v = vec![0.0; dim];
            for pair in v.chunks_mut(2) {
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let r = (-2.0 * u1.ln()).sqrt();
                pair[0] = r * (2.0 * PI * u2).cos();
                if pair.len() == 2 {
                    pair[1] = r * (2.0 * PI * u2).sin();
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for x in v.iter_mut() {
                    *x /= norm;
                }
                dirs.push(v);
                produced += 1;
            }
        }
    }
    dirs
}

/// Chebyshev center of the polytope `{x : a_i . x <= b_i}`: the deepest point
/// and its distance to the nearest face. None when the polytope is empty or
/// the radius is unbounded.
pub fn chebyshev_center(halfspaces: &[(Vec<f64>, f64)]) -> Option<(Vec<f64>, f64)> {
    let dim = halfspaces.first()?.0.len();
    let mut lp = LinearProgram::new(dim + 1);
    lp.objective[dim] = 1.0;
    lp.set_lower(dim, 0.0);
    for (a, b) in halfspaces {
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut coeffs = a.clone();
        coeffs.push(norm);
        lp.add_row(coeffs, Rel::Le, *b);
    }
    let res = lp.solve();
    if res.status != LpStatus::Optimal {
        return None;
    }
    let center = res.primal[..dim].to_vec();
    Some((center, res.primal[dim]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn hull_of_noisy_square() {
        let mut pts = SQUARE.to_vec();
        pts.push([0.5, 0.5]);
        pts.push([0.5, 0.0]); // collinear edge point
        pts.push([1.0, 1.0]); // duplicate
        let h = hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(area(&h) > 0.0, "counterclockwise");
        for v in SQUARE {
            assert!(h.iter().any(|&u| u == v));
        }
    }

    #[test]
    fn hull_degenerate() {
        assert_eq!(hull(&[[1.0, 2.0], [1.0, 2.0]]).len(), 1);
        let seg = hull(&[[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]);
        assert_eq!(seg.len(), 2);
        assert!(hull(&[]).is_empty());
    }

    #[test]
    fn clip_square() {
        let clipped = clip_halfplane(&SQUARE, [1.0, 0.0], 0.5);
        assert_eq!(clipped.len(), 4);
        assert!((area(&clipped) - 0.5).abs() <= 1e-12);
        assert!(clipped.iter().all(|v| v[0] <= 0.5 + 1e-12));
        assert!(clip_halfplane(&SQUARE, [1.0, 0.0], -1.0).is_empty());
    }

    #[test]
    fn intersection_from_halfplanes() {
        let hs = vec![
            ([1.0, 0.0], 1.0),
            ([-1.0, 0.0], 0.0),
            ([0.0, 1.0], 1.0),
            ([0.0, -1.0], 0.0),
        ];
        let poly = intersect_halfplanes(&hs, [0.0, 0.0], 10.0);
        assert!((area(&poly) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn support_and_contains() {
        assert!((support(&SQUARE, [1.0, 1.0]) - 2.0).abs() <= 1e-12);
        assert!((support(&SQUARE, [-1.0, 0.0]) - 0.0).abs() <= 1e-12);
        assert!(contains(&SQUARE, [0.5, 0.5], 0.0));
        assert!(contains(&SQUARE, [1.0 + 1e-10, 0.5], 1e-9));
        assert!(!contains(&SQUARE, [1.1, 0.5], 1e-9));
    }

    #[test]
    fn distances() {
        assert_eq!(distance(&SQUARE, [0.5, 0.5]), 0.0);
        assert!((distance(&SQUARE, [2.0, 0.5]) - 1.0).abs() <= 1e-12);
        assert!((distance(&SQUARE, [2.0, 2.0]) - 2.0f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn hausdorff_of_shifted_square() {
        let shifted: Vec<[f64; 2]> = SQUARE.iter().map(|v| [v[0] + 0.25, v[1]]).collect();
        assert!((polygon_hausdorff(&SQUARE.to_vec(), &shifted) - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn grid_axes_are_exact() {
        let g = circle_grid(360);
        assert_eq!(g[0], [1.0, 0.0]);
        assert_eq!(g[90], [0.0, 1.0]);
        assert_eq!(g[180], [-1.0, 0.0]);
        assert_eq!(g[270], [0.0, -1.0]);
        for d in &g {
            assert!((dot2(*d, *d) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sphere_grid_units_and_axes() {
        for dim in [3usize, 4] {
            let g = sphere_grid(50, dim, 7);
            assert_eq!(g.len(), 2 * dim + 50);
            for i in 0..dim {
                assert_eq!(g[2 * i][i], 1.0);
                assert_eq!(g[2 * i + 1][i], -1.0);
            }
            for d in &g {
                let n: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn chebyshev_of_square() {
        let hs: Vec<(Vec<f64>, f64)> = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, 1.0], 1.0),
            (vec![0.0, -1.0], 0.0),
        ];
        let (c, r) = chebyshev_center(&hs).expect("bounded");
        assert!((c[0] - 0.5).abs() <= 1e-8);
        assert!((c[1] - 0.5).abs() <= 1e-8);
        assert!((r - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn erosion_via_offsets() {
        let hs = edge_halfplanes(&SQUARE);
        assert_eq!(hs.len(), 4);
        let eroded: Vec<([f64; 2], f64)> =
            hs.iter().map(|&(n, b)| (n, b - 0.25)).collect();
        let poly = intersect_halfplanes(&eroded, [0.5, 0.5], 2.0);
        assert!((area(&poly) - 0.25).abs() <= 1e-9);
    }
}

//! Convex payoff-set representations and the decomposability operator.
//!
//! A set is carried as a direction grid with support values, a halfspace
//! description with unit outward normals, and, for two players, an explicit
//! counterclockwise polygon. The stored support values are always the true
//! support of the stored polytope on the grid: whenever halfspaces come from
//! evaluating a support function, the represented set is sandwiched between
//! the underlying convex body and the polytope, which pins the polytope's
//! support to the stored offsets on the grid.

use crate::deviation::{Closure, ReducedIncentives};
use crate::game::Game;
use crate::geom;
use crate::lp::{LinearProgram, LpStatus, Rel};
use crate::scoring::ScoreWitness;
use crate::{Error, Result, GEOM_TOL};

/// Construction record of a smoothed inner approximation: the set is an
/// erosion by `eps_in` inflated back by a ball of radius `ball_radius`, so
/// its boundary has curvature radius at least `ball_radius` everywhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothInfo {
    pub eps_in: f64,
    pub ball_radius: f64,
}

/// A nonempty bounded convex set.
#[derive(Clone, Debug)]
pub struct ConvexSetRep {
    pub dim: usize,
    /// Unit direction grid.
    pub grid: Vec<Vec<f64>>,
    /// Support of the set at each grid direction.
    pub grid_support: Vec<f64>,
    /// Halfspace description `normal . x <= offset`, unit normals.
    pub halfspaces: Vec<(Vec<f64>, f64)>,
    /// Counterclockwise polygon, two players only.
    pub vertices: Option<Vec<[f64; 2]>>,
    /// Present when the set was built by `smooth_inner`.
    pub smooth: Option<SmoothInfo>,
}

fn unit(normal: &[f64]) -> Option<(Vec<f64>, f64)> {
    let len = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
    (len > 1e-300).then(|| (normal.iter().map(|x| x / len).collect(), len))
}

/// Support of the polytope `{x : halfspaces}` in direction `dir` via LP.
fn support_lp(halfspaces: &[(Vec<f64>, f64)], dir: &[f64]) -> Result<f64> {
    let dim = dir.len();
    let mut lp = LinearProgram::new(dim);
    lp.objective = dir.to_vec();
    for (a, b) in halfspaces {
        lp.add_row(a.clone(), Rel::Le, *b);
    }
    let res = lp.solve();
    match res.status {
        LpStatus::Optimal => Ok(res.value),
        LpStatus::Unbounded => Err(Error::BadSet(format!(
            "halfspaces do not bound direction {dir:?}"
        ))),
        LpStatus::Infeasible => Err(Error::BadSet("halfspace system is empty".into())),
        LpStatus::NumericalFailure => {
            Err(Error::Numerical("support evaluation failed".into()))
        }
    }
}

impl ConvexSetRep {
    /// Build from halfspaces whose normals become the grid. The support
    /// values are recomputed from the intersection polytope, so redundant or
    /// slack halfspaces are represented faithfully.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let mut hs = Vec::with_capacity(halfspaces.len());
        for (a, b) in &halfspaces {
            if a.len() != dim {
                return Err(Error::BadSet("normal dimension mismatch".into()));
            }
            let (n, len) = unit(a).ok_or_else(|| {
                Error::BadSet("zero normal in halfspace description".into())
            })?;
            hs.push((n, b / len));
        }
        let grid: Vec<Vec<f64>> = hs.iter().map(|(a, _)| a.clone()).collect();
        let mut rep = ConvexSetRep {
            dim,
            grid,
            grid_support: Vec::new(),
            halfspaces: hs,
            vertices: None,
            smooth: None,
        };
        rep.rebuild_geometry()?;
        Ok(rep)
    }

    /// Build from a counterclockwise polygon; the halfspaces are its edges
    /// and the grid is a circle grid of `n_dirs`.
    pub fn from_polygon(poly: &[[f64; 2]], n_dirs: usize) -> Result<Self> {
        if poly.len() < 3 {
            return Err(Error::BadSet(format!(
                "polygon with {} vertices has no interior",
                poly.len()
            )));
        }
        let halfspaces: Vec<(Vec<f64>, f64)> = geom::edge_halfplanes(poly)
            .into_iter()
            .map(|(n, b)| (n.to_vec(), b))
            .collect();
        let grid: Vec<Vec<f64>> = geom::circle_grid(n_dirs)
            .into_iter()
            .map(|d| d.to_vec())
            .collect();
        let grid_support = grid
            .iter()
            .map(|d| geom::support(poly, [d[0], d[1]]))
            .collect();
        Ok(ConvexSetRep {
            dim: 2,
            grid,
            grid_support,
            halfspaces,
            vertices: Some(poly.to_vec()),
            smooth: None,
        })
    }

    /// Recompute polygon and grid support from the halfspace description.
    fn rebuild_geometry(&mut self) -> Result<()> {
        if self.dim == 2 {
            let radius = 10.0
                * (1.0
                    + self
                        .halfspaces
                        .iter()
                        .map(|(_, b)| b.abs())
                        .fold(0.0f64, f64::max));
            let hs2: Vec<([f64; 2], f64)> = self
                .halfspaces
                .iter()
                .map(|(a, b)| ([a[0], a[1]], *b))
                .collect();
            let poly = geom::intersect_halfplanes(&hs2, [0.0, 0.0], radius);
            if poly.is_empty() {
                return Err(Error::BadSet("halfspace intersection is empty".into()));
            }
            let touches_box = poly
                .iter()
                .any(|v| v[0].abs() >= radius - 1e-6 || v[1].abs() >= radius - 1e-6);
            if touches_box {
                return Err(Error::BadSet("halfspace intersection is unbounded".into()));
            }
            self.grid_support = self
                .grid
                .iter()
                .map(|d| geom::support(&poly, [d[0], d[1]]))
                .collect();
            self.vertices = Some(poly);
        } else {
            self.grid_support = self
                .grid
                .iter()
                .map(|d| support_lp(&self.halfspaces, d))
                .collect::<Result<Vec<f64>>>()?;
            self.vertices = None;
        }
        Ok(())
    }

    /// Support of the represented polytope in an arbitrary direction.
    pub fn support_at(&self, dir: &[f64]) -> Result<f64> {
        match &self.vertices {
            Some(poly) => Ok(geom::support(poly, [dir[0], dir[1]])),
            None => support_lp(&self.halfspaces, dir),
        }
    }

    /// Whether the point satisfies every stored halfspace within `margin`.
    pub fn contains(&self, point: &[f64], margin: f64) -> bool {
        self.halfspaces.iter().all(|(a, b)| {
            let d: f64 = a.iter().zip(point).map(|(x, y)| x * y).sum();
            d <= b + margin
        })
    }

    /// Exact polygon diameter for two players, a coordinate-width surrogate
    /// otherwise; only used to scale tolerances.
    pub fn diameter(&self) -> f64 {
        match &self.vertices {
            Some(poly) => geom::diameter(poly),
            None => {
                let mut sq = 0.0;
                for i in 0..self.dim {
                    let mut plus = vec![0.0; self.dim];
                    plus[i] = 1.0;
                    let mut minus = vec![0.0; self.dim];
                    minus[i] = -1.0;
                    let w = self.support_at(&plus).unwrap_or(0.0)
                        + self.support_at(&minus).unwrap_or(0.0);
                    sq += w * w;
                }
                sq.sqrt()
            }
        }
    }

    /// Check the representation invariants: unit normals, support values that
    /// match the stored polytope, vertices inside every halfspace.
    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.grid_support.len() {
            return Err(Error::BadSet("grid and support lengths differ".into()));
        }
        for (a, _) in &self.halfspaces {
            let len: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (len - 1.0).abs() > GEOM_TOL {
                return Err(Error::BadSet(format!("normal of length {len}")));
            }
        }
        let scale = 1.0
            + self
                .grid_support
                .iter()
                .fold(0.0f64, |s, v| s.max(v.abs()));
        if let Some(poly) = &self.vertices {
            for (k, d) in self.grid.iter().enumerate() {
                let h = geom::support(poly, [d[0], d[1]]);
                if (h - self.grid_support[k]).abs() > GEOM_TOL * scale {
                    return Err(Error::BadSet(format!(
                        "support mismatch at grid {k}: {h} vs {}",
                        self.grid_support[k]
                    )));
                }
            }
            for v in poly {
                for (a, b) in &self.halfspaces {
                    if a[0] * v[0] + a[1] * v[1] > b + GEOM_TOL * scale {
                        return Err(Error::BadSet(format!(
                            "vertex {v:?} violates a stored halfspace"
                        )));
                    }
                }
            }
        } else {
            for (k, d) in self.grid.iter().enumerate() {
                let h = support_lp(&self.halfspaces, d)?;
                if (h - self.grid_support[k]).abs() > GEOM_TOL * scale {
                    return Err(Error::BadSet(format!(
                        "support mismatch at grid {k}: {h} vs {}",
                        self.grid_support[k]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Move every face inward by `margin`; exact erosion of a polytope with
    /// unit normals. Fails when the erosion empties the set.
    pub fn erode(&self, margin: f64) -> Result<ConvexSetRep> {
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|(a, b)| (a.clone(), b - margin))
            .collect();
        let mut rep = ConvexSetRep {
            dim: self.dim,
            grid: self.grid.clone(),
            grid_support: Vec::new(),
            halfspaces,
            vertices: None,
            smooth: None,
        };
        rep.rebuild_geometry()?;
        Ok(rep)
    }

    /// Smoothed inner approximation: erode by `eps_in`, then inflate by a
    /// ball of radius `ball_radius < eps_in`. The result's support on the
    /// grid is exactly the eroded support plus the radius, and the stored
    /// polytope is the grid halfspace intersection at those offsets.
    pub fn smooth_inner(&self, eps_in: f64, ball_radius: f64) -> Result<ConvexSetRep> {
        if !(ball_radius > 0.0 && ball_radius < eps_in) {
            return Err(Error::BadSet(format!(
                "smoothing needs 0 < ball {ball_radius} < erosion {eps_in}"
            )));
        }
        let (_, radius) = self.chebyshev_center()?;
        if radius <= eps_in + ball_radius {
            return Err(Error::BadSet(format!(
                "empty interior: inradius {radius} does not clear {eps_in} + {ball_radius}"
            )));
        }
        let core = self.erode(eps_in)?;
        let halfspaces: Vec<(Vec<f64>, f64)> = self
            .grid
            .iter()
            .map(|d| -> Result<(Vec<f64>, f64)> {
                Ok((d.clone(), core.support_at(d)? + ball_radius))
            })
            .collect::<Result<_>>()?;
        let mut rep = ConvexSetRep {
            dim: self.dim,
            grid: self.grid.clone(),
            grid_support: Vec::new(),
            halfspaces,
            vertices: None,
            smooth: Some(SmoothInfo {
                eps_in,
                ball_radius,
            }),
        };
        rep.rebuild_geometry()?;
        Ok(rep)
    }

    /// Deepest point of the stored halfspace system.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        geom::chebyshev_center(&self.halfspaces)
            .ok_or_else(|| Error::BadSet("no Chebyshev center".into()))
    }
}

/// Grid Hausdorff distance: the two representations must carry the same
/// grid; the distance is the largest support gap across it.
pub fn hausdorff(a: &ConvexSetRep, b: &ConvexSetRep) -> Result<f64> {
    if a.grid.len() != b.grid.len() {
        return Err(Error::BadSet("grids differ in size".into()));
    }
    for (da, db) in a.grid.iter().zip(&b.grid) {
        if da.iter().zip(db).any(|(x, y)| (x - y).abs() > 1e-12) {
            return Err(Error::BadSet("grids differ in directions".into()));
        }
    }
    Ok(a
        .grid_support
        .iter()
        .zip(&b.grid_support)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max))
}

/// Membership certificate: the point decomposes on `profile` with these
/// continuations, which sit at least `eps_mem` inside the stored halfspace
/// description of the continuation set.
#[derive(Clone, Debug)]
pub struct BMembership {
    pub profile: Vec<usize>,
    /// continuations[joint_message][player]
    pub continuations: Vec<Vec<f64>>,
    pub eps_mem: f64,
}

/// Decide whether `v` lies in the strict decomposability image of `w_rep`:
/// some profile plus continuations drawn from `w_rep` reproduce `v` exactly
/// and deter the conservative deviation family with strictness `eta` at
/// discounting `delta`. Profiles are tried in index order and the first
/// feasible one wins. Assumes minmax-normalized payoffs.
pub fn b_operator_membership(
    game: &Game,
    w_rep: &ConvexSetRep,
    v: &[f64],
    delta: f64,
    eta: f64,
) -> Result<Option<BMembership>> {
    assert!(delta > 0.0 && delta < 1.0, "delta in (0,1)");
    let n = game.n_players();
    let n_messages = game.n_joint_messages();
    let eps_mem = 1e-6 * w_rep.diameter();
    for p in 0..game.stage.n_profiles() {
        let a = game.stage.profile_from_index(p);
        let incentives: Vec<ReducedIncentives> = (0..n)
            .map(|i| ReducedIncentives::build(game, &a, i, Closure::Conservative))
            .collect();
        let n_aux: usize = incentives
            .iter()
            .map(|inc| inc.aux_groups.iter().map(|g| g.t.len()).sum::<usize>())
            .sum();
        let mut lp = LinearProgram::new(n * n_messages + n_aux);
        let w_base = |i: usize| i * n_messages;
        // Promised value: v = (1 - delta) g(a) + delta E[w].
        for i in 0..n {
            let mut coeffs = vec![0.0; lp.n_vars()];
            for m in 0..n_messages {
                coeffs[w_base(i) + m] = delta * incentives[i].on_column[m];
            }
            lp.add_row(
                coeffs,
                Rel::Eq,
                v[i] - (1.0 - delta) * game.stage.payoff(&a)[i],
            );
        }
        let mut aux_cursor = n * n_messages;
        for inc in &incentives {
            let i = inc.player;
            for row in inc.lie_groups.iter().flatten() {
                let mut coeffs = vec![0.0; lp.n_vars()];
                for m in 0..n_messages {
                    coeffs[w_base(i) + m] = delta * row.coeffs[m];
                }
                lp.add_row(coeffs, Rel::Ge, (1.0 - delta) * (row.gain + eta));
            }
            for group in &inc.aux_groups {
                let u_base = aux_cursor;
                aux_cursor += group.t.len();
                for (s, per_signal) in group.t.iter().enumerate() {
                    for t_row in per_signal {
                        let mut coeffs = vec![0.0; lp.n_vars()];
                        coeffs[w_base(i)..w_base(i) + n_messages].copy_from_slice(t_row);
                        coeffs[u_base + s] = -1.0;
                        lp.add_row(coeffs, Rel::Le, 0.0);
                    }
                }
                let mut coeffs = vec![0.0; lp.n_vars()];
                for m in 0..n_messages {
                    coeffs[w_base(i) + m] = delta * inc.on_column[m];
                }
                for s in 0..group.t.len() {
                    coeffs[u_base + s] = -delta;
                }
                lp.add_row(coeffs, Rel::Ge, (1.0 - delta) * (group.gain + eta));
            }
        }
        // Continuations stay strictly inside the continuation set.
        for m in 0..n_messages {
            for (normal, offset) in &w_rep.halfspaces {
                let mut coeffs = vec![0.0; lp.n_vars()];
                for i in 0..n {
                    coeffs[w_base(i) + m] = normal[i];
                }
                lp.add_row(coeffs, Rel::Le, offset - eps_mem);
            }
        }
        let res = lp.solve();
        match res.status {
            LpStatus::Optimal => {
                let continuations = (0..n_messages)
                    .map(|m| (0..n).map(|i| res.primal[w_base(i) + m]).collect())
                    .collect();
                return Ok(Some(BMembership {
                    profile: a,
                    continuations,
                    eps_mem,
                }));
            }
            LpStatus::Infeasible => continue,
            _ => {
                return Err(Error::Numerical(format!(
                    "membership program did not terminate cleanly at profile {a:?}"
                )))
            }
        }
    }
    Ok(None)
}

/// Boundary test points with outward normals: face midpoints for polygons,
/// support-attaining points per grid direction otherwise.
pub fn boundary_mesh(rep: &ConvexSetRep) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    match &rep.vertices {
        Some(poly) => {
            let n = poly.len();
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                let d = [b[0] - a[0], b[1] - a[1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if len <= 1e-12 {
                    continue;
                }
                let normal = vec![d[1] / len, -d[0] / len];
                let mid = vec![(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                out.push((mid, normal));
            }
            Ok(out)
        }
        None => {
            let mut out: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
            for d in &rep.grid {
                let mut lp = LinearProgram::new(rep.dim);
                lp.objective = d.clone();
                for (a, b) in &rep.halfspaces {
                    lp.add_row(a.clone(), Rel::Le, *b);
                }
                let res = lp.solve();
                if res.status != LpStatus::Optimal {
                    return Err(Error::BadSet("boundary mesh needs a bounded set".into()));
                }
                let pt = res.primal;
                let dup = out.iter().any(|(q, _)| {
                    q.iter()
                        .zip(&pt)
                        .map(|(x, y)| (x - y).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        <= 1e-9
                });
                if !dup {
                    out.push((pt, d.clone()));
                }
            }
            Ok(out)
        }
    }
}

/// Result of testing a whole boundary mesh plus the deepest point.
#[derive(Clone, Debug)]
pub struct SelfDecomposability {
    pub delta: f64,
    pub eta: f64,
    pub certified: bool,
    /// Each tested point with whether it decomposed.
    pub points: Vec<(Vec<f64>, bool)>,
}

/// Certify `w_rep` inside its own decomposability image on a boundary mesh
/// and at its Chebyshev center. Assumes minmax-normalized payoffs.
pub fn self_decomposable(
    game: &Game,
    w_rep: &ConvexSetRep,
    delta: f64,
    eta: f64,
) -> Result<SelfDecomposability> {
    let mut points: Vec<Vec<f64>> = boundary_mesh(w_rep)?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let (center, _) = w_rep.chebyshev_center()?;
    points.push(center);
    let mut results = Vec::with_capacity(points.len());
    let mut certified = true;
    for p in points {
        let ok = b_operator_membership(game, w_rep, &p, delta, eta)?.is_some();
        certified &= ok;
        results.push((p, ok));
    }
    Ok(SelfDecomposability {
        delta,
        eta,
        certified,
        points: results,
    })
}

/// The geometric discount mesh `1 - 2^-k`, `k = 1..=k_max`.
pub fn delta_mesh(k_max: u32) -> Vec<f64> {
    (1..=k_max).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect()
}

/// Outcome of searching the discount mesh for the decomposability threshold.
#[derive(Clone, Debug)]
pub struct DeltaBar {
    /// Smallest mesh discount at which the set certifies, if any.
    pub delta_bar: Option<f64>,
    /// Every tested mesh point with its certification result.
    pub audit: Vec<(f64, bool)>,
    /// False when a tested pair violated monotonicity in the discount.
    pub monotone: bool,
}

/// Bisect the geometric discount mesh for the smallest certifying discount,
/// then audit the endpoints. Assumes certification is monotone in the
/// discount; the audit reports a violation instead of hiding it.
pub fn find_delta_bar(
    game: &Game,
    w_rep: &ConvexSetRep,
    eta: f64,
    k_max: u32,
) -> Result<DeltaBar> {
    let mesh = delta_mesh(k_max);
    let mut audit: Vec<(f64, bool)> = Vec::new();
    let test = |game: &Game, delta: f64, audit: &mut Vec<(f64, bool)>| -> Result<bool> {
        let ok = self_decomposable(game, w_rep, delta, eta)?.certified;
        audit.push((delta, ok));
        Ok(ok)
    };
    // The highest mesh discount decides whether anything certifies.
    if !test(game, mesh[mesh.len() - 1], &mut audit)? {
        return Ok(DeltaBar {
            delta_bar: None,
            audit,
            monotone: true,
        });
    }
    let mut lo = 0usize; // unknown below
    let mut hi = mesh.len() - 1; // known true
    while lo < hi {
        let mid = (lo + hi) / 2;
        if test(game, mesh[mid], &mut audit)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    // Audit: the neighbor below the threshold must fail.
    if hi > 0 && !audit.iter().any(|&(d, _)| d == mesh[hi - 1]) {
        test(game, mesh[hi - 1], &mut audit)?;
    }
    audit.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let monotone = audit.windows(2).all(|w| !w[0].1 || w[1].1);
    Ok(DeltaBar {
        delta_bar: Some(mesh[hi]),
        audit,
        monotone,
    })
}

/// A boundary decomposition certificate: continuations
/// `w(m) = w* + ((1 - delta) / delta) x'(m)` reproduce the boundary point
/// `w*` itself at every discount, inheriting the witness's incentive
/// margins scale-free. The tilt `x'` does not depend on the discount, so
/// `(delta / (1 - delta)) (w(m) - w*)` is a discount-invariant.
#[derive(Clone, Debug)]
pub struct BoundaryDecomposition {
    pub profile: Vec<usize>,
    pub lambda: Vec<f64>,
    /// The decomposed boundary point and anchor of every continuation.
    pub w_star: Vec<f64>,
    /// The witness payoff; scores at or above the support in `lambda`.
    pub witness_payoff: Vec<f64>,
    /// Tilted transfers `x'(m) = x(m) - (v_w - w*)` where `v_w` is the
    /// witness payoff, per player per message. Each tilt points strictly
    /// into the touching halfspace unless it vanishes.
    pub x_prime: Vec<Vec<f64>>,
    /// True when the tilted transfers vanish identically; then the
    /// decomposition is stationary and valid at every discount, with all
    /// continuations sitting at `w*` itself.
    pub stationary: bool,
    /// Exact supremum of discounts at which some continuation touches a
    /// face; every `delta` strictly above keeps all continuations strictly
    /// inside. Zero when stationary.
    pub delta_threshold_exact: f64,
    /// `delta_threshold_exact` snapped up to the `1 - 2^-k` mesh; the
    /// reported threshold. Zero when stationary.
    pub delta_threshold: f64,
}

impl BoundaryDecomposition {
    /// The decomposed point: `w*` at every discount.
    pub fn decomposed_point(&self) -> Vec<f64> {
        self.w_star.clone()
    }

    /// Continuations `w(m) = w* + ((1 - delta) / delta) x'(m)`, indexed
    /// [joint_message][player].
    pub fn continuations(&self, delta: f64) -> Vec<Vec<f64>> {
        let scale = (1.0 - delta) / delta;
        let n_messages = self.x_prime[0].len();
        (0..n_messages)
            .map(|m| {
                self.w_star
                    .iter()
                    .enumerate()
                    .map(|(i, &wi)| wi + scale * self.x_prime[i][m])
                    .collect()
            })
            .collect()
    }

    /// Largest violation of the promise identity
    /// `(1 - delta) g(a) + delta E[w] = w*`.
    pub fn equality_residual(&self, game: &Game, delta: f64) -> f64 {
        let on = game.message_distribution(&self.profile, &game.rho);
        let w = self.continuations(delta);
        let g = game.stage.payoff(&self.profile);
        (0..game.n_players())
            .map(|i| {
                let ew: f64 = on.iter().zip(&w).map(|(p, wm)| p * wm[i]).sum();
                ((1.0 - delta) * g[i] + delta * ew - self.w_star[i]).abs()
            })
            .fold(0.0f64, f64::max)
    }
}

/// Build the boundary decomposition of `w_star` at a scored direction.
/// `w_star` must lie on the boundary of `rep` in direction `lambda`, and
/// `witness` must be a certificate for that direction whose payoff scores
/// strictly above `lambda . w_star` (the directional value is not itself a
/// support function, so the witness payoff may exceed the set's support).
/// The tilted transfers `x'(m) = x(m) - (v_w - w*)` then satisfy
/// `E[x'|a,rho] = w* - g(a)`, so `w(m) = w* + ((1-delta)/delta) x'(m)`
/// reproduces `w*` exactly at every discount, and every tilt points
/// strictly into the touching halfspace. Incentive inheritance is checked
/// through the witness margins at strictness `eta`.
pub fn decompose_boundary(
    game: &Game,
    rep: &ConvexSetRep,
    lambda: &[f64],
    witness: &ScoreWitness,
    w_star: &[f64],
    eta: f64,
) -> Result<BoundaryDecomposition> {
    let scale = 1.0 + w_star.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let h = rep.support_at(lambda)?;
    let lw: f64 = lambda.iter().zip(w_star).map(|(l, x)| l * x).sum();
    if (lw - h).abs() > 1e-6 * scale {
        return Err(Error::NotCertified(format!(
            "point is not on the boundary: lambda.w* = {lw}, support = {h}"
        )));
    }
    if !rep.contains(w_star, GEOM_TOL * scale) {
        return Err(Error::NotCertified("point lies outside the set".into()));
    }
    let report = crate::scoring::verify_witness(game, lambda, eta, witness)?;
    if report.incentive_slack < -crate::FEAS_TOL {
        return Err(Error::NotCertified(format!(
            "witness margins fall short by {}",
            -report.incentive_slack
        )));
    }
    let n = game.n_players();
    let n_messages = game.n_joint_messages();
    let x_prime: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n_messages)
                .map(|m| witness.transfers[i][m] - (witness.v[i] - w_star[i]))
                .collect()
        })
        .collect();
    let stationary = x_prime
        .iter()
        .flatten()
        .all(|x| x.abs() <= 1e-12 * scale);
    if stationary {
        return Ok(BoundaryDecomposition {
            profile: witness.profile.clone(),
            lambda: lambda.to_vec(),
            w_star: w_star.to_vec(),
            witness_payoff: witness.v.clone(),
            x_prime,
            stationary: true,
            delta_threshold_exact: 0.0,
            delta_threshold: 0.0,
        });
    }
    let l_vw: f64 = lambda.iter().zip(&witness.v).map(|(l, x)| l * x).sum();
    if l_vw <= lw + 1e-9 * scale {
        return Err(Error::NotCertified(
            "witness value does not strictly improve on the boundary point".into(),
        ));
    }
    // Every tilt must point strictly into the touching halfspace: the
    // budget gives lambda . x(m) <= 0, so lambda . x'(m) <= -(lambda . v_w
    // - lambda . w*) < 0.
    for m in 0..n_messages {
        let tilt: f64 = (0..n).map(|i| lambda[i] * x_prime[i][m]).sum();
        if tilt >= 0.0 {
            return Err(Error::NotCertified(format!(
                "tilted transfer at message {m} does not point inward"
            )));
        }
    }
    // Containment threshold: for each halfspace with slack s at w* and
    // tilt c > 0, the continuation stays strictly inside exactly when
    // (1-delta)/delta < s/c, i.e. delta > c/(c+s). The touching face has
    // s = 0 but its tilts are all negative, so it never binds.
    let mut threshold = 0.0f64;
    for (normal, offset) in &rep.halfspaces {
        let s = offset - normal.iter().zip(w_star).map(|(a, x)| a * x).sum::<f64>();
        for m in 0..n_messages {
            let c: f64 = (0..n).map(|i| normal[i] * x_prime[i][m]).sum();
            if c > 1e-12 {
                if s <= 0.0 {
                    return Err(Error::NotCertified(
                        "boundary point sits on a second face the tilt crosses".into(),
                    ));
                }
                threshold = threshold.max(c / (c + s));
            }
        }
    }
    let snapped = delta_mesh(20)
        .into_iter()
        .find(|&d| d > threshold)
        .unwrap_or(threshold);
    Ok(BoundaryDecomposition {
        profile: witness.profile.clone(),
        lambda: lambda.to_vec(),
        w_star: w_star.to_vec(),
        witness_payoff: witness.v.clone(),
        x_prime,
        stationary: false,
        delta_threshold_exact: threshold,
        delta_threshold: snapped,
    })
}

/// Rescale a decomposition of `v` at discount `delta` to a higher discount
/// `delta_prime`: each continuation moves toward `v` along the convex
/// combination with weights `(dp - d) / (dp (1 - d))` on `v` and
/// `d (1 - dp) / (dp (1 - d))` on the old continuation. The promise identity
/// is reproduced exactly and every incentive margin carries over scale-free,
/// so no new program has to be solved. Continuations are indexed
/// [joint_message][player].
pub fn reconstruct_continuations(
    v: &[f64],
    continuations: &[Vec<f64>],
    delta: f64,
    delta_prime: f64,
) -> Vec<Vec<f64>> {
    assert!(
        delta > 0.0 && delta <= delta_prime && delta_prime < 1.0,
        "need 0 < delta <= delta' < 1"
    );
    let alpha = (delta_prime - delta) / (delta_prime * (1.0 - delta));
    let beta = delta * (1.0 - delta_prime) / (delta_prime * (1.0 - delta));
    continuations
        .iter()
        .map(|w| {
            v.iter()
                .zip(w)
                .map(|(vi, wi)| alpha * vi + beta * wi)
                .collect()
        })
        .collect()
}

/// Check that reconstructed continuations at a new discount inherit every
/// incentive requirement margin-free: for each player the conservative
/// margins of `delta' . (w as transfer)` must cover `(1 - delta') (gain +
/// eta)` within `tol`. The continuations are passed indexed
/// [joint_message][player].
pub fn verify_enforceability(
    game: &Game,
    a: &[usize],
    continuations: &[Vec<f64>],
    delta: f64,
    eta: f64,
    tol: f64,
) -> Result<()> {
    let n = game.n_players();
    for i in 0..n {
        let w_i: Vec<f64> = continuations.iter().map(|w| w[i]).collect();
        let inc = ReducedIncentives::build(game, a, i, Closure::Conservative);
        let margins = inc.margins(&w_i);
        if let Some(h) = margins.honest {
            if delta * h < (1.0 - delta) * eta - tol {
                return Err(Error::NotCertified(format!(
                    "player {i} misreport margin {h} too small at delta {delta}"
                )));
            }
        }
        for (action, m) in margins.actions {
            // margins() nets out the stage gain, so restore the raw drift.
            let gain = {
                let mut p = a.to_vec();
                p[i] = action;
                game.stage.payoff(&p)[i] - game.stage.payoff(a)[i]
            };
            let drift = m + gain;
            if delta * drift < (1.0 - delta) * (gain + eta) - tol {
                return Err(Error::NotCertified(format!(
                    "player {i} action {action} drift {drift} too small at delta {delta}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn unit_square_rep() -> ConvexSetRep {
        let poly = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        ConvexSetRep::from_polygon(&poly, 16).unwrap()
    }

    #[test]
    fn polygon_rep_invariants() {
        let rep = unit_square_rep();
        rep.validate().unwrap();
        assert!((rep.diameter() - 2.0f64.sqrt()).abs() <= 1e-12);
        assert!(rep.contains(&[0.5, 0.5], 0.0));
        assert!(!rep.contains(&[1.5, 0.5], 1e-9));
    }

    #[test]
    fn halfspace_rep_recomputes_true_support() {
        // A redundant halfspace must not inflate the stored support.
        let hs = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, 1.0], 1.0),
            (vec![0.0, -1.0], 0.0),
            (vec![1.0, 0.0], 5.0),
        ];
        let rep = ConvexSetRep::from_halfspaces(2, hs).unwrap();
        rep.validate().unwrap();
        let e1_support = rep.support_at(&[1.0, 0.0]).unwrap();
        assert!((e1_support - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn erosion_and_smoothing() {
        let rep = unit_square_rep();
        let eroded = rep.erode(0.2).unwrap();
        eroded.validate().unwrap();
        let poly = eroded.vertices.as_ref().unwrap();
        assert!((geom::area(poly) - 0.36).abs() <= 1e-9);

        let smooth = rep.smooth_inner(0.2, 0.1).unwrap();
        smooth.validate().unwrap();
        let info = smooth.smooth.unwrap();
        assert_eq!(info.eps_in, 0.2);
        assert_eq!(info.ball_radius, 0.1);
        // Support drops by exactly eps_in - ball at face normals.
        for (d, h) in [([1.0, 0.0], 1.0), ([0.0, -1.0], 0.0)] {
            let hs = smooth.support_at(&d.to_vec()).unwrap();
            assert!(
                (hs - (h - 0.1)).abs() <= 1e-9,
                "direction {d:?}: {hs} vs {}",
                h - 0.1
            );
        }
        // In the corner direction the drop is strictly larger than
        // eps_in - ball and at most eps_in.
        let corner = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let before = rep.support_at(&corner.to_vec()).unwrap();
        let after = smooth.support_at(&corner.to_vec()).unwrap();
        let drop = before - after;
        assert!(drop > 0.1 + 1e-6, "corner drop {drop}");
        assert!(drop <= 0.2 + 1e-9, "corner drop {drop}");
        // The smooth set sits inside the original.
        for k in 0..rep.grid.len() {
            assert!(smooth.grid_support[k] <= rep.grid_support[k] + 1e-12);
        }

        assert!(rep.erode(10.0).is_err(), "erosion empties the square");
        assert!(rep.smooth_inner(0.1, 0.2).is_err(), "ball exceeds erosion");
    }

    #[test]
    fn hausdorff_requires_matching_grids() {
        let a = unit_square_rep();
        let shifted: Vec<[f64; 2]> = [[0.25, 0.0], [1.25, 0.0], [1.25, 1.0], [0.25, 1.0]]
            .to_vec();
        let b = ConvexSetRep::from_polygon(&shifted, 16).unwrap();
        let d = hausdorff(&a, &b).unwrap();
        assert!((d - 0.25).abs() <= 1e-9);
        let c = ConvexSetRep::from_polygon(&shifted, 20).unwrap();
        assert!(hausdorff(&a, &c).is_err());
    }

    #[test]
    fn delta_mesh_shape() {
        let mesh = delta_mesh(4);
        assert_eq!(mesh, vec![0.5, 0.75, 0.875, 0.9375]);
    }

    #[test]
    fn boundary_mesh_of_square() {
        let rep = unit_square_rep();
        let mesh = boundary_mesh(&rep).unwrap();
        assert_eq!(mesh.len(), 4);
        for (p, d) in mesh {
            // Midpoints sit on the boundary with unit outward normals.
            let h = rep.support_at(&d).unwrap();
            let pd: f64 = p.iter().zip(&d).map(|(x, y)| x * y).sum();
            assert!((pd - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn membership_needs_room_for_reporting_incentives() {
        // Around the origin of the normalized stag hunt, a square of
        // half-side 0.1 leaves room to reward consistent reports, so the
        // origin decomposes at high discounting; a square of half-side 0.01
        // does not, because the strict misreport margins at the rare signals
        // need more spread than the set allows.
        let (game, _) = instances::noisy_stag_hunt(0.05).normalize_minmax();
        let poly = vec![[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]];
        let rep = ConvexSetRep::from_polygon(&poly, 8).unwrap();
        let hit = b_operator_membership(&game, &rep, &[0.0, 0.0], 0.99, 0.1)
            .unwrap()
            .expect("decomposes");
        for w in &hit.continuations {
            assert!(rep.contains(w, 0.0), "continuation {w:?} inside");
        }

        let tiny: Vec<[f64; 2]> = poly
            .iter()
            .map(|v| [v[0] / 10.0, v[1] / 10.0])
            .collect();
        let tiny_rep = ConvexSetRep::from_polygon(&tiny, 8).unwrap();
        let miss = b_operator_membership(&game, &tiny_rep, &[0.0, 0.0], 0.99, 0.1).unwrap();
        assert!(miss.is_none(), "no room for strict reporting incentives");
    }

    #[test]
    fn reconstruction_preserves_promise_and_margins() {
        let (game, _) = instances::noisy_stag_hunt(0.05).normalize_minmax();
        let poly = vec![[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]];
        let rep = ConvexSetRep::from_polygon(&poly, 8).unwrap();
        let delta = 0.99;
        let eta = 0.1;
        let v = vec![0.0, 0.0];
        let hit = b_operator_membership(&game, &rep, &v, delta, eta)
            .unwrap()
            .expect("decomposes");
        verify_enforceability(&game, &hit.profile, &hit.continuations, delta, eta, 1e-8)
            .unwrap();
        let on = game.message_distribution(&hit.profile, &game.rho);
        let g = game.stage.payoff(&hit.profile);
        for delta_prime in [0.995, 0.999, 0.9999] {
            let w = reconstruct_continuations(&v, &hit.continuations, delta, delta_prime);
            // Exact promise at the new discount.
            for i in 0..2 {
                let ew: f64 = on.iter().zip(&w).map(|(p, wm)| p * wm[i]).sum();
                let promised = (1.0 - delta_prime) * g[i] + delta_prime * ew;
                assert!(
                    (promised - v[i]).abs() <= 1e-12,
                    "promise residual {}",
                    (promised - v[i]).abs()
                );
            }
            // Margins carry over without any slack loss.
            verify_enforceability(&game, &hit.profile, &w, delta_prime, eta, 1e-8).unwrap();
            // Convex combinations of the point and old continuations stay in.
            for wm in &w {
                assert!(rep.contains(wm, 1e-12), "{wm:?}");
            }
        }
    }

    #[test]
    fn boundary_decomposition_replays() {
        let (game, _) = instances::noisy_prisoners_dilemma(0.05).normalize_minmax();
        let eta = 0.1;
        let out = crate::scoring::bounding_set(&game, eta, 40, 0).unwrap();
        let outer = out.rep.expect("nonempty");
        // Witness values sit at or above the outer support, so only a point
        // strictly inside it can be strictly improved on; decompose the
        // boundary of a smoothed inner set.
        let rep = outer.smooth_inner(0.2, 0.1).unwrap();
        let mut tested = 0;
        for (mid, normal) in boundary_mesh(&rep).unwrap() {
            // The face normal names the grid direction whose witness covers
            // this face.
            let s = out
                .scores
                .iter()
                .find(|s| {
                    s.lambda
                        .iter()
                        .zip(&normal)
                        .all(|(a, b)| (a - b).abs() <= 1e-9)
                })
                .expect("face normal comes from the grid");
            let w = match &s.witness {
                Some(w) if w.route == crate::scoring::Route::Conservative => w,
                _ => continue,
            };
            let dec = decompose_boundary(&game, &rep, &s.lambda, w, &mid, eta).unwrap();
            assert!(!dec.stationary);
            assert!(
                dec.delta_threshold < 1.0,
                "threshold {}",
                dec.delta_threshold
            );
            assert!(dec.delta_threshold > dec.delta_threshold_exact);
            assert_eq!(dec.decomposed_point(), mid);
            let thr = dec.delta_threshold;
            let da = thr;
            let db = thr + 0.9 * (1.0 - thr);
            for delta in [da, db] {
                // The promise identity lands on the boundary point itself.
                assert!(dec.equality_residual(&game, delta) <= 1e-8);
                for wm in dec.continuations(delta) {
                    // Strictly inside above the threshold.
                    assert!(rep.contains(&wm, -1e-12), "continuation {wm:?}");
                }
                verify_enforceability(
                    &game,
                    &dec.profile,
                    &dec.continuations(delta),
                    delta,
                    eta,
                    1e-8,
                )
                .unwrap();
            }
            // The rescaled displacement is the tilted transfer at any
            // discount: the decomposition is one object, not one per delta.
            let wa = dec.continuations(da);
            let wb = dec.continuations(db);
            for m in 0..wa.len() {
                for i in 0..2 {
                    let xa = da / (1.0 - da) * (wa[m][i] - mid[i]);
                    let xb = db / (1.0 - db) * (wb[m][i] - mid[i]);
                    assert!((xa - xb).abs() <= 1e-10, "scale identity {xa} vs {xb}");
                    assert!((xa - dec.x_prime[i][m]).abs() <= 1e-10);
                }
            }
            tested += 1;
            if tested == 6 {
                break;
            }
        }
        assert!(tested >= 4, "only {tested} directions had witnesses");

        // A witness payoff on or below the face cannot tilt anything inward;
        // the witness value itself sits above the support, so it is not a
        // boundary point either.
        let (mid, normal) = boundary_mesh(&rep).unwrap().into_iter().next().unwrap();
        let s = out
            .scores
            .iter()
            .find(|s| {
                s.lambda
                    .iter()
                    .zip(&normal)
                    .all(|(a, b)| (a - b).abs() <= 1e-9)
            })
            .unwrap();
        let w = s.witness.as_ref().unwrap();
        assert!(w.transfers.iter().flatten().any(|x| x.abs() > 1e-6));
        let err = decompose_boundary(&game, &rep, &s.lambda, w, &w.v, eta);
        assert!(matches!(err, Err(Error::NotCertified(_))), "{err:?}");
        let _ = mid;
    }

    #[test]
    fn stationary_boundary_decomposition_is_discount_free() {
        // Mutual hare of the stag hunt with zero transfers sits on the
        // boundary of the nonnegative square in direction -e1; decomposing
        // the witness payoff itself keeps the tilt zero, which is valid at
        // every discount.
        let (game, _) = instances::noisy_stag_hunt(0.05).normalize_minmax();
        let poly = vec![[0.0, 0.0], [0.2, 0.0], [0.2, 0.2], [0.0, 0.2]];
        let rep = ConvexSetRep::from_polygon(&poly, 8).unwrap();
        let lambda = vec![-1.0, 0.0];
        let s = crate::scoring::score_direction(&game, &lambda, 0.1).unwrap();
        let w = s.witness.as_ref().expect("witness");
        assert_eq!(w.route, crate::scoring::Route::Structural);
        let dec = decompose_boundary(&game, &rep, &lambda, w, &w.v, 0.1).unwrap();
        assert!(dec.stationary);
        assert_eq!(dec.delta_threshold, 0.0);
        for delta in [0.5, 0.9, 0.999] {
            assert!(dec.equality_residual(&game, delta) <= 1e-12);
            for wm in dec.continuations(delta) {
                assert!((wm[0] - w.v[0]).abs() <= 1e-12);
                assert!((wm[1] - w.v[1]).abs() <= 1e-12);
            }
        }

        // A boundary point the witness value does not strictly improve on
        // is refused: the witness sits inside the face, so the tilt would
        // point outward.
        let shifted = vec![[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]];
        let rep2 = ConvexSetRep::from_polygon(&shifted, 8).unwrap();
        let err = decompose_boundary(&game, &rep2, &lambda, w, &[-0.1, 0.0], 0.1);
        match err {
            Err(Error::NotCertified(msg)) => {
                assert!(msg.contains("strictly improve"), "{msg}")
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn delta_bar_search_audits_monotonicity() {
        // Without communication there are no reporting premiums, so a box
        // around the mutual-stag payoff decomposes its own boundary as soon
        // as the equality targets v + ((1-d)/d)(v - g) clear the walls; the
        // search brackets that discount.
        let (mut game, _) = instances::noisy_stag_hunt(0.05).normalize_minmax();
        game.message_counts = vec![1, 1];
        game.rho = vec![vec![0; 4], vec![0; 4]];
        game.candidate_rhos = vec![game.rho.clone()];
        game.validate().unwrap();
        let poly = vec![[1.1, 1.1], [1.9, 1.1], [1.9, 1.9], [1.1, 1.9]];
        let rep = ConvexSetRep::from_polygon(&poly, 8).unwrap();
        let res = find_delta_bar(&game, &rep, 0.1, 10).unwrap();
        let bar = res.delta_bar.expect("certifies at high discounting");
        assert!(res.monotone, "audit {:?}", res.audit);
        // Bottom midpoint via mutual hare needs 1.5 (1 + (1-d)/d) <= 1.9
        // less the membership margin, so the first certifying mesh point is
        // 0.875.
        assert!((bar - 0.875).abs() <= 1e-12, "bar {bar}");
        let below: Vec<&(f64, bool)> =
            res.audit.iter().filter(|(d, _)| *d < bar).collect();
        assert!(!below.is_empty());
        assert!(below.iter().all(|(_, ok)| !ok));

        // With rich messages the same box never certifies: the honest
        // premium for a rare signal is eta / p scaled, while the action
        // rows pin the rare diagonal near the on-path diagonal, and the
        // equality rows hold the on-path diagonal at the face itself; the
        // three couple into a contradiction at every discount.
        let (rich, _) = instances::noisy_stag_hunt(0.05).normalize_minmax();
        let res_rich = find_delta_bar(&rich, &rep, 0.1, 6).unwrap();
        assert!(res_rich.delta_bar.is_none(), "{:?}", res_rich.audit);
        assert!(res_rich.monotone);
    }
}


//! Stage games, private monitoring, and the public messaging round.
//!
//! Profiles, joint signals, and joint messages are all indexed mixed-radix
//! with player 0 as the most significant digit. The monitoring kernel must
//! have full-support marginals for every player at every action profile;
//! joint zeros are allowed, so perfectly correlated signals are a valid
//! structure.

use crate::lp::{LinearProgram, LpStatus, Rel};
use crate::{Error, Result, PROB_TOL};

/// Mixed-radix index of `digits` under `radix`.
pub fn index_of(radix: &[usize], digits: &[usize]) -> usize {
    debug_assert_eq!(radix.len(), digits.len());
    let mut idx = 0;
    for (r, d) in radix.iter().zip(digits) {
        debug_assert!(d < r);
        idx = idx * r + d;
    }
    idx
}

/// Inverse of `index_of`.
pub fn digits_of(radix: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for k in (0..radix.len()).rev() {
        out[k] = idx % radix[k];
        idx /= radix[k];
    }
    out
}

pub fn radix_size(radix: &[usize]) -> usize {
    radix.iter().product()
}

/// Iterate all digit tuples of `radix` in index order.
pub fn all_tuples(radix: &[usize]) -> Vec<Vec<usize>> {
    let total = radix_size(radix);
    (0..total).map(|i| digits_of(radix, i)).collect()
}

/// The one-shot game: player counts, action counts, and payoffs indexed by
/// action profile.
#[derive(Clone, Debug, PartialEq)]
pub struct StageGame {
    pub action_counts: Vec<usize>,
    /// payoffs[profile][player]
    pub payoffs: Vec<Vec<f64>>,
}

impl StageGame {
    pub fn n_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn n_profiles(&self) -> usize {
        radix_size(&self.action_counts)
    }

    pub fn profile_index(&self, profile: &[usize]) -> usize {
        index_of(&self.action_counts, profile)
    }

    pub fn profile_from_index(&self, idx: usize) -> Vec<usize> {
        digits_of(&self.action_counts, idx)
    }

    pub fn payoff(&self, profile: &[usize]) -> &[f64] {
        &self.payoffs[self.profile_index(profile)]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_players();
        if n < 2 {
            return Err(Error::InvalidGame("need at least two players".into()));
        }
        if self.action_counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidGame("empty action set".into()));
        }
        if self.payoffs.len() != self.n_profiles() {
            return Err(Error::InvalidGame(format!(
                "{} payoff rows for {} profiles",
                self.payoffs.len(),
                self.n_profiles()
            )));
        }
        for row in &self.payoffs {
            if row.len() != n {
                return Err(Error::InvalidGame("payoff row width mismatch".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame("non-finite payoff".into()));
            }
        }
        Ok(())
    }

    /// Opponent profiles of `player`, as full profiles with the player's own
    /// slot iterating fastest in the returned inner vector.
    fn opponent_radix(&self, player: usize) -> Vec<usize> {
        let mut r = self.action_counts.clone();
        r.remove(player);
        r
    }

    /// Pure-action minmax value per player: the opponents jointly pick the
    /// profile against which the player's best reply is worst.
    pub fn pure_minmax(&self) -> Vec<f64> {
        let n = self.n_players();
        let mut out = vec![f64::INFINITY; n];
        for i in 0..n {
            for others in all_tuples(&self.opponent_radix(i)) {
                let mut best = f64::NEG_INFINITY;
                for ai in 0..self.action_counts[i] {
                    let mut profile = others.clone();
                    profile.insert(i, ai);
                    best = best.max(self.payoff(&profile)[i]);
                }
                out[i] = out[i].min(best);
            }
        }
        out
    }

    /// The same game with payoffs shifted so every pure minmax is zero.
    pub fn normalize_minmax(&self) -> (StageGame, Vec<f64>) {
        let mm = self.pure_minmax();
        let payoffs = self
            .payoffs
            .iter()
            .map(|row| row.iter().zip(&mm).map(|(v, m)| v - m).collect())
            .collect();
        (
            StageGame {
                action_counts: self.action_counts.clone(),
                payoffs,
            },
            mm,
        )
    }
}

/// Private signal structure over joint signals, indexed like profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct Monitoring {
    pub signal_counts: Vec<usize>,
    /// kernel[profile][joint_signal]
    pub kernel: Vec<Vec<f64>>,
}

impl Monitoring {
    pub fn n_joint_signals(&self) -> usize {
        radix_size(&self.signal_counts)
    }

    pub fn validate(&self, stage: &StageGame) -> Result<()> {
        if self.signal_counts.len() != stage.n_players() {
            return Err(Error::InvalidGame("signal structure player count".into()));
        }
        if self.signal_counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidGame("empty signal set".into()));
        }
        if self.kernel.len() != stage.n_profiles() {
            return Err(Error::InvalidGame(format!(
                "{} kernel rows for {} profiles",
                self.kernel.len(),
                stage.n_profiles()
            )));
        }
        let width = self.n_joint_signals();
        for (p, row) in self.kernel.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidGame(format!("kernel row {p} width")));
            }
            let mut sum = 0.0;
            for &v in row {
                if !v.is_finite() || v < -PROB_TOL {
                    return Err(Error::InvalidGame(format!(
                        "kernel row {p} has entry {v}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidGame(format!(
                    "kernel row {p} sums to {sum}"
                )));
            }
        }
        // Full-support marginals: every private signal of every player has
        // positive probability at every profile.
        for (p, row) in self.kernel.iter().enumerate() {
            for i in 0..self.signal_counts.len() {
                let mut marg = vec![0.0; self.signal_counts[i]];
                for (js, &v) in row.iter().enumerate() {
                    let s = digits_of(&self.signal_counts, js);
                    marg[s[i]] += v;
                }
                if let Some((si, &m)) = marg
                    .iter()
                    .enumerate()
                    .find(|(_, &m)| m <= PROB_TOL)
                {
                    return Err(Error::InvalidGame(format!(
                        "signal {si} of player {i} has marginal {m} at profile {p}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A stage game with monitoring and a public messaging round. `rho` is the
/// operative reporting profile (per player, a map from private signal to
/// public message); `candidate_rhos` is the ordered list searched when a
/// shared profile must be found.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    pub stage: StageGame,
    pub monitoring: Monitoring,
    pub message_counts: Vec<usize>,
    pub rho: Vec<Vec<usize>>,
    pub candidate_rhos: Vec<Vec<Vec<usize>>>,
}

impl Game {
    pub fn n_players(&self) -> usize {
        self.stage.n_players()
    }

    pub fn n_joint_messages(&self) -> usize {
        radix_size(&self.message_counts)
    }

    fn validate_rho(&self, rho: &[Vec<usize>], what: &str) -> Result<()> {
        if rho.len() != self.n_players() {
            return Err(Error::InvalidGame(format!("{what} player count")));
        }
        for i in 0..self.n_players() {
            if rho[i].len() != self.monitoring.signal_counts[i] {
                return Err(Error::InvalidGame(format!(
                    "{what} for player {i} maps {} signals, expected {}",
                    rho[i].len(),
                    self.monitoring.signal_counts[i]
                )));
            }
            if let Some(&m) = rho[i].iter().find(|&&m| m >= self.message_counts[i]) {
                return Err(Error::InvalidGame(format!(
                    "{what} for player {i} sends unknown message {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.stage.validate()?;
        self.monitoring.validate(&self.stage)?;
        if self.message_counts.len() != self.n_players() {
            return Err(Error::InvalidGame("message structure player count".into()));
        }
        if self.message_counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidGame("empty message set".into()));
        }
        self.validate_rho(&self.rho, "reporting profile")?;
        for (k, cand) in self.candidate_rhos.iter().enumerate() {
            self.validate_rho(cand, &format!("candidate profile {k}"))?;
        }
        Ok(())
    }

    /// The same game over the minmax-normalized stage payoffs.
    pub fn normalize_minmax(&self) -> (Game, Vec<f64>) {
        let (stage, mm) = self.stage.normalize_minmax();
        let mut g = self.clone();
        g.stage = stage;
        (g, mm)
    }

    /// Message-profile radix with `player` removed.
    pub fn other_message_radix(&self, player: usize) -> Vec<usize> {
        let mut r = self.message_counts.clone();
        r.remove(player);
        r
    }

    /// On-path distribution over joint messages at each profile, under the
    /// operative reporting profile.
    pub fn induced_kernel(&self) -> Vec<Vec<f64>> {
        (0..self.stage.n_profiles())
            .map(|p| {
                let a = self.stage.profile_from_index(p);
                self.message_distribution(&a, &self.rho)
            })
            .collect()
    }

    /// Distribution over joint messages when profile `a` is played and every
    /// player reports through `rho`.
    pub fn message_distribution(&self, a: &[usize], rho: &[Vec<usize>]) -> Vec<f64> {
        let p = self.stage.profile_index(a);
        let mut out = vec![0.0; self.n_joint_messages()];
        for (js, &v) in self.monitoring.kernel[p].iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let s = digits_of(&self.monitoring.signal_counts, js);
            let m: Vec<usize> = (0..self.n_players()).map(|i| rho[i][s[i]]).collect();
            out[index_of(&self.message_counts, &m)] += v;
        }
        out
    }

    /// Distribution over joint messages when `player` unilaterally plays
    /// `a_dev` and reports through `rho_dev` while everyone else follows
    /// `(a, rho)`.
    pub fn deviation_distribution(
        &self,
        a: &[usize],
        player: usize,
        a_dev: usize,
        rho_dev: &[usize],
    ) -> Vec<f64> {
        let mut profile = a.to_vec();
        profile[player] = a_dev;
        let mut rho = self.rho.clone();
        rho[player] = rho_dev.to_vec();
        self.message_distribution(&profile, &rho)
    }

    /// For each private signal of `player` under the deviation action, the
    /// sub-distribution over the other players' joint messages:
    /// `block[s_i][m_other] = sum over s_other mapping to m_other of
    /// p(s_i, s_other | a_dev, a_-i)`. Rows sum to the signal marginals.
    pub fn lie_block(&self, a: &[usize], player: usize, a_dev: usize) -> Vec<Vec<f64>> {
        let mut profile = a.to_vec();
        profile[player] = a_dev;
        let p = self.stage.profile_index(&profile);
        let other_radix = self.other_message_radix(player);
        let width = radix_size(&other_radix);
        let mut block = vec![vec![0.0; width]; self.monitoring.signal_counts[player]];
        for (js, &v) in self.monitoring.kernel[p].iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let s = digits_of(&self.monitoring.signal_counts, js);
            let mut m_other = Vec::with_capacity(self.n_players() - 1);
            for i in 0..self.n_players() {
                if i != player {
                    m_other.push(self.rho[i][s[i]]);
                }
            }
            block[s[player]][index_of(&other_radix, &m_other)] += v;
        }
        block
    }

    /// Joint-message index assembled from `player`'s own message and the
    /// others' joint index.
    pub fn assemble_message(&self, player: usize, own: usize, others_idx: usize) -> usize {
        let other_radix = self.other_message_radix(player);
        let others = digits_of(&other_radix, others_idx);
        let mut m = Vec::with_capacity(self.n_players());
        let mut k = 0;
        for i in 0..self.n_players() {
            if i == player {
                m.push(own);
            } else {
                m.push(others[k]);
                k += 1;
            }
        }
        index_of(&self.message_counts, &m)
    }

    /// The identity reporting profile; valid only when every message set is
    /// at least as large as the matching signal set.
    pub fn truthful_rho(&self) -> Vec<Vec<usize>> {
        (0..self.n_players())
            .map(|i| (0..self.monitoring.signal_counts[i]).collect())
            .collect()
    }

    /// Reporting profiles worth trying, deduplicated: truthful first when
    /// the message sets admit it, then the declared candidates, then the
    /// operative profile.
    pub fn reporting_candidates(&self) -> Vec<Vec<Vec<usize>>> {
        let mut out: Vec<Vec<Vec<usize>>> = Vec::new();
        let truthful = self.truthful_rho();
        if truthful
            .iter()
            .zip(&self.message_counts)
            .all(|(r, &mc)| r.iter().all(|&m| m < mc))
        {
            out.push(truthful);
        }
        for r in &self.candidate_rhos {
            if !out.contains(r) {
                out.push(r.clone());
            }
        }
        if !out.contains(&self.rho) {
            out.push(self.rho.clone());
        }
        out
    }
}

/// The feasible payoff set and its extreme profiles.
#[derive(Clone, Debug)]
pub struct PayoffGeometry {
    /// Profile indices whose payoff vector is an extreme point of the
    /// feasible set.
    pub extreme_profiles: Vec<usize>,
    /// Extreme payoff vectors, deduplicated.
    pub extreme_points: Vec<Vec<f64>>,
    /// The nonnegative part of the feasible set as a polygon, two players
    /// only.
    pub vstar: Option<Vec<[f64; 2]>>,
}

/// Extreme-point structure of `co {g(a)}` and its individually rational
/// part. Assumes minmax-normalized payoffs, so the individually rational
/// part is the intersection with the nonnegative orthant.
pub fn payoff_geometry(stage: &StageGame) -> PayoffGeometry {
    let n = stage.n_players();
    let pts = &stage.payoffs;
    let mut extreme_profiles = Vec::new();
    let mut extreme_points: Vec<Vec<f64>> = Vec::new();
    for (p, v) in pts.iter().enumerate() {
        if in_hull_of_others(pts, p) {
            continue;
        }
        extreme_profiles.push(p);
        if !extreme_points
            .iter()
            .any(|q| q.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-12))
        {
            extreme_points.push(v.clone());
        }
    }
    let vstar = if n == 2 {
        let planar: Vec<[f64; 2]> = pts.iter().map(|v| [v[0], v[1]]).collect();
        let mut poly = crate::geom::hull(&planar);
        poly = crate::geom::clip_halfplane(&poly, [-1.0, 0.0], 0.0);
        poly = crate::geom::clip_halfplane(&poly, [0.0, -1.0], 0.0);
        Some(poly)
    } else {
        None
    };
    PayoffGeometry {
        extreme_profiles,
        extreme_points,
        vstar,
    }
}

/// Whether point `p` of `pts` lies in the convex hull of the others that
/// differ from it. Coinciding points do not absorb each other.
fn in_hull_of_others(pts: &[Vec<f64>], p: usize) -> bool {
    let n = pts[p].len();
    let others: Vec<&Vec<f64>> = pts
        .iter()
        .enumerate()
        .filter(|&(q, v)| {
            q != p && v.iter().zip(&pts[p]).any(|(a, b)| (a - b).abs() > 1e-12)
        })
        .map(|(_, v)| v)
        .collect();
    if others.is_empty() {
        return false;
    }
    // Feasibility of convex weights reproducing the point.
    let mut lp = LinearProgram::new(others.len());
    for w in 0..others.len() {
        lp.set_lower(w, 0.0);
    }
    lp.add_row(vec![1.0; others.len()], Rel::Eq, 1.0);
    for coord in 0..n {
        let coeffs: Vec<f64> = others.iter().map(|v| v[coord]).collect();
        lp.add_row(coeffs, Rel::Eq, pts[p][coord]);
    }
    lp.solve().status == LpStatus::Optimal
}

/// Support value of the individually rational payoff set in direction `dir`,
/// any number of players. Assumes minmax-normalized payoffs. None when the
/// set is empty.
pub fn vstar_support(stage: &StageGame, dir: &[f64]) -> Option<f64> {
    let n = stage.n_players();
    let pts = &stage.payoffs;
    // Variables: convex weights over profiles plus the point itself.
    let mut lp = LinearProgram::new(pts.len() + n);
    for w in 0..pts.len() {
        lp.set_lower(w, 0.0);
    }
    for coord in 0..n {
        lp.set_lower(pts.len() + coord, 0.0);
        lp.objective[pts.len() + coord] = dir[coord];
    }
    let mut ones = vec![0.0; lp.n_vars()];
    ones[..pts.len()].fill(1.0);
    lp.add_row(ones, Rel::Eq, 1.0);
    for coord in 0..n {
        let mut coeffs: Vec<f64> = pts.iter().map(|v| v[coord]).collect();
        coeffs.resize(lp.n_vars(), 0.0);
        coeffs[pts.len() + coord] = -1.0;
        lp.add_row(coeffs, Rel::Eq, 0.0);
    }
    let res = lp.solve();
    (res.status == LpStatus::Optimal).then_some(res.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn indexing_roundtrip() {
        let radix = vec![2, 3, 2];
        for i in 0..12 {
            assert_eq!(index_of(&radix, &digits_of(&radix, i)), i);
        }
        assert_eq!(all_tuples(&radix).len(), 12);
    }

    #[test]
    fn dilemma_minmax_and_normalization() {
        let game = instances::noisy_prisoners_dilemma(0.05);
        assert_eq!(game.stage.pure_minmax(), vec![1.0, 1.0]);
        let (norm, mm) = game.normalize_minmax();
        assert_eq!(mm, vec![1.0, 1.0]);
        assert_eq!(norm.stage.payoff(&[0, 0]), &[1.0, 1.0]);
        assert_eq!(norm.stage.payoff(&[1, 1]), &[0.0, 0.0]);
        assert_eq!(norm.stage.pure_minmax(), vec![0.0, 0.0]);
    }

    #[test]
    fn dilemma_geometry_all_profiles_extreme() {
        let (norm, _) = instances::noisy_prisoners_dilemma(0.05).normalize_minmax();
        let geo = payoff_geometry(&norm.stage);
        assert_eq!(geo.extreme_profiles, vec![0, 1, 2, 3]);
        let vstar = geo.vstar.expect("two players");
        let want = [[0.0, 0.0], [1.5, 0.0], [1.0, 1.0], [0.0, 1.5]];
        assert_eq!(vstar.len(), 4);
        for w in want {
            assert!(
                vstar
                    .iter()
                    .any(|v| (v[0] - w[0]).abs() <= 1e-9 && (v[1] - w[1]).abs() <= 1e-9),
                "missing vertex {w:?} in {vstar:?}"
            );
        }
    }

    #[test]
    fn stag_geometry_drops_mutual_hare() {
        let (norm, mm) = instances::noisy_stag_hunt(0.05).normalize_minmax();
        assert_eq!(mm, vec![1.0, 1.0]);
        let geo = payoff_geometry(&norm.stage);
        // Mutual hare is the midpoint of the two miscoordination payoffs.
        assert_eq!(geo.extreme_profiles, vec![0, 1, 2]);
        let vstar = geo.vstar.expect("two players");
        let want = [[0.0, 0.0], [4.0 / 3.0, 0.0], [2.0, 2.0], [0.0, 4.0 / 3.0]];
        assert_eq!(vstar.len(), 4);
        for w in want {
            assert!(
                vstar
                    .iter()
                    .any(|v| (v[0] - w[0]).abs() <= 1e-9 && (v[1] - w[1]).abs() <= 1e-9),
                "missing vertex {w:?} in {vstar:?}"
            );
        }
    }

    #[test]
    fn vstar_support_matches_polygon() {
        let (norm, _) = instances::noisy_prisoners_dilemma(0.05).normalize_minmax();
        let geo = payoff_geometry(&norm.stage);
        let poly = geo.vstar.unwrap();
        for dir in crate::geom::circle_grid(24) {
            let via_lp = vstar_support(&norm.stage, &dir).unwrap();
            let via_poly = crate::geom::support(&poly, dir);
            assert!(
                (via_lp - via_poly).abs() <= 1e-7,
                "dir {dir:?}: {via_lp} vs {via_poly}"
            );
        }
    }

    #[test]
    fn induced_kernel_matches_signals_under_truthful_reports() {
        let game = instances::noisy_prisoners_dilemma(0.05);
        let induced = game.induced_kernel();
        for p in 0..game.stage.n_profiles() {
            for (m, &v) in induced[p].iter().enumerate() {
                assert!((v - game.monitoring.kernel[p][m]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn pooling_reports_concentrate_mass() {
        let mut game = instances::noisy_prisoners_dilemma(0.05);
        game.rho = vec![vec![0; 4], vec![0; 4]];
        let induced = game.induced_kernel();
        for row in induced {
            assert!((row[0] - 1.0).abs() <= 1e-12);
            assert!(row[1..].iter().all(|&v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn deviation_distribution_consistency() {
        let game = instances::noisy_stag_hunt(0.05);
        let a = vec![0, 0];
        for a_dev in 0..2 {
            let block = game.lie_block(&a, 0, a_dev);
            let mass: f64 = block.iter().flatten().sum();
            assert!((mass - 1.0).abs() <= 1e-12);
            // Reassembling the block through a reporting map must reproduce
            // the deviation distribution.
            let rho_dev = vec![1, 1, 0, 2];
            let dist = game.deviation_distribution(&a, 0, a_dev, &rho_dev);
            let mut rebuilt = vec![0.0; game.n_joint_messages()];
            for (si, row) in block.iter().enumerate() {
                for (mo, &v) in row.iter().enumerate() {
                    rebuilt[game.assemble_message(0, rho_dev[si], mo)] += v;
                }
            }
            for (m, &v) in dist.iter().enumerate() {
                assert!((v - rebuilt[m]).abs() <= 1e-12, "message {m}");
            }
        }
    }

    #[test]
    fn validation_rejects_bad_structures() {
        let game = instances::noisy_prisoners_dilemma(0.05);
        game.validate().expect("fixture is valid");

        let mut bad = game.clone();
        bad.monitoring.kernel[0][0] += 0.5;
        assert!(bad.validate().is_err(), "row sum");

        let mut bad = game.clone();
        let mut row = vec![0.0; 16];
        row[0] = 1.2;
        row[1] = -0.2;
        bad.monitoring.kernel[1] = row;
        assert!(bad.validate().is_err(), "negative entry");

        let mut bad = game.clone();
        // Valid joint distribution but player 0 never sees signals 1..3.
        let mut row = vec![0.0; 16];
        row[0] = 0.7;
        row[1] = 0.3;
        bad.monitoring.kernel[2] = row;
        assert!(bad.validate().is_err(), "marginal support");

        let mut bad = game.clone();
        bad.rho[0] = vec![0, 5, 0, 0];
        assert!(bad.validate().is_err(), "unknown message");

        let mut bad = game;
        bad.rho[1] = vec![0];
        assert!(bad.validate().is_err(), "wrong rho arity");
    }

    #[test]
    fn correlated_kernels_pass_validation() {
        // Joint zeros with full-support marginals are legal.
        instances::noisy_stag_hunt(0.01).validate().expect("valid");
    }
}

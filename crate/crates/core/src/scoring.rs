//! Directional scores and the bounding payoff set.
//!
//! For a direction `lambda`, the score is the largest value of `lambda . v`
//! over payoff vectors `v = g(a) + E[x | (a, rho)]` supported by
//! budget-balanced transfers (`sum_i lambda_i x_i(m) <= 0` at every message)
//! that deter the deviation family with strictness `eta`. The family a
//! deviation must be deterred against depends on the transfers themselves:
//! a deviation that cannot move the distribution of `x(.)` is exempt. Two
//! computable closures bracket the resulting value:
//!
//! * the conservative closure deters every distribution-moving deviation,
//!   giving a certified lower value `k_lower`;
//! * the relaxed closure deters action deviations under every reporting map
//!   but exempts misreports, giving an upper value `k_upper`.
//!
//! Two more schemes feed the lower value where the LPs cannot reach. At a
//! profile where every player is `eta`-strict in pure payoffs, the zero
//! transfer scheme leaves nothing for any deviation to move, so the whole
//! family is exempt and `lambda . g(a)` is attainable in every direction:
//! repeating the profile is its own equilibrium. And at signed coordinate
//! directions the budget forces the scored player's transfer to be a pure
//! reward, which can never punish that player's misreports, so a structural
//! program closes the gap: the scored player's transfer is zero, the
//! others' transfers ignore the scored player's message, the scored
//! player's action incentives must hold in pure stage payoffs, and everyone
//! else is deterred on the kernel marginalized over the ignored message.
//!
//! Intersecting the grid halfspaces `lambda . v <= k(lambda)` yields a
//! proxy of the bounding set whose support on the grid equals the stored
//! offsets exactly: the attainable payoff hull is sandwiched between the
//! polytope and its own halfspaces.

use crate::deviation::{Closure, ReducedIncentives};
use crate::game::Game;
use crate::lp::{LinearProgram, LpStatus, Rel};
use crate::setops::ConvexSetRep;
use crate::{Error, Result, FEAS_TOL};

/// How a lower-score witness was produced; replay follows the same route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Conservative,
    Relaxed,
    Structural,
}

/// An attainability certificate for one direction: profile, reporting maps,
/// transfers, and the payoff vector they induce.
#[derive(Clone, Debug)]
pub struct ScoreWitness {
    pub route: Route,
    pub profile: Vec<usize>,
    /// rho[player][signal] = message sent on path.
    pub rho: Vec<Vec<usize>>,
    /// transfers[player][joint_message]
    pub transfers: Vec<Vec<f64>>,
    pub v: Vec<f64>,
}

/// Bracket of the directional score.
#[derive(Clone, Debug)]
pub struct DirectionalScore {
    pub lambda: Vec<f64>,
    /// Certified attainable value; minus infinity when no route reaches any
    /// profile.
    pub lower: f64,
    /// Relaxation value; the true score lies in `[lower, upper]`.
    pub upper: f64,
    pub witness: Option<ScoreWitness>,
}

/// Which bracket side feeds a set construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Signed coordinate structure of a direction: `Some((i, sign))` when only
/// coordinate `i` is materially nonzero. The 1e-12 floor absorbs grid
/// roundoff in directions meant as exact coordinates.
fn coordinate_form(lambda: &[f64]) -> Option<(usize, f64)> {
    let mut found = None;
    for (i, &l) in lambda.iter().enumerate() {
        if l.abs() > 1e-12 {
            if found.is_some() {
                return None;
            }
            found = Some((i, l));
        }
    }
    found
}

/// Profiles the LP routes try at `lambda`: every profile at signed
/// coordinate directions or when widened, otherwise the extreme profiles
/// plus the stage maximizer. Interior profiles cannot raise `lambda . v`
/// beyond the budget cap `lambda . g(a)`, which some extreme profile
/// dominates.
fn candidate_profiles(game: &Game, lambda: &[f64], widen: bool) -> Vec<usize> {
    let n_profiles = game.stage.n_profiles();
    if widen || coordinate_form(lambda).is_some() {
        return (0..n_profiles).collect();
    }
    let geom = crate::game::payoff_geometry(&game.stage);
    let mut out = geom.extreme_profiles.clone();
    if let Some(argmax) = (0..n_profiles).max_by(|&p, &q| {
        dot(lambda, &game.stage.payoffs[p])
            .partial_cmp(&dot(lambda, &game.stage.payoffs[q]))
            .unwrap()
    }) {
        if !out.contains(&argmax) {
            out.push(argmax);
        }
    }
    out.sort_unstable();
    out
}

/// Solve one directional program at a fixed profile under a closure, using
/// the game's operative reporting profile. Returns the value and the
/// transfer scheme, or None when infeasible.
fn profile_program(
    game: &Game,
    a: &[usize],
    lambda: &[f64],
    eta: f64,
    closure: Closure,
) -> Result<Option<(f64, Vec<Vec<f64>>)>> {
    let n = game.n_players();
    let n_messages = game.n_joint_messages();
    let incentives: Vec<ReducedIncentives> = (0..n)
        .map(|i| ReducedIncentives::build(game, a, i, closure))
        .collect();
    let n_aux: usize = incentives
        .iter()
        .map(|inc| inc.aux_groups.iter().map(|g| g.t.len()).sum::<usize>())
        .sum();
    let mut lp = LinearProgram::new(n * n_messages + n_aux);
    let x_base = |i: usize| i * n_messages;
    // Objective: lambda . E[x] on top of the constant lambda . g(a).
    for i in 0..n {
        if lambda[i] == 0.0 {
            continue;
        }
        for m in 0..n_messages {
            lp.objective[x_base(i) + m] = lambda[i] * incentives[i].on_column[m];
        }
    }
    let mut aux_cursor = n * n_messages;
    for inc in &incentives {
        let i = inc.player;
        for row in inc.lie_groups.iter().flatten() {
            let mut coeffs = vec![0.0; lp.n_vars()];
            coeffs[x_base(i)..x_base(i) + n_messages].copy_from_slice(&row.coeffs);
            lp.add_row(coeffs, Rel::Ge, row.gain + eta);
        }
        for group in &inc.aux_groups {
            let u_base = aux_cursor;
            aux_cursor += group.t.len();
            for (s, per_signal) in group.t.iter().enumerate() {
                for t_row in per_signal {
                    let mut coeffs = vec![0.0; lp.n_vars()];
                    coeffs[x_base(i)..x_base(i) + n_messages].copy_from_slice(t_row);
                    coeffs[u_base + s] = -1.0;
                    lp.add_row(coeffs, Rel::Le, 0.0);
                }
            }
            let mut coeffs = vec![0.0; lp.n_vars()];
            coeffs[x_base(i)..x_base(i) + n_messages]
                .copy_from_slice(&inc.on_column);
            for s in 0..group.t.len() {
                coeffs[u_base + s] = -1.0;
            }
            lp.add_row(coeffs, Rel::Ge, group.gain + eta);
        }
    }
    // Budget: the scored combination of transfers never pays out.
    for m in 0..n_messages {
        let mut coeffs = vec![0.0; lp.n_vars()];
        let mut nonzero = false;
        for i in 0..n {
            if lambda[i] != 0.0 {
                coeffs[x_base(i) + m] = lambda[i];
                nonzero = true;
            }
        }
        if nonzero {
            lp.add_row(coeffs, Rel::Le, 0.0);
        }
    }
    let res = lp.solve();
    match res.status {
        LpStatus::Optimal => {
            let base: f64 = dot(lambda, game.stage.payoff(a));
            let transfers = (0..n)
                .map(|i| res.primal[x_base(i)..x_base(i) + n_messages].to_vec())
                .collect();
            Ok(Some((base + res.value, transfers)))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Numerical(format!(
            "directional program unbounded at profile {a:?}, which the budget rows forbid"
        ))),
        LpStatus::NumericalFailure => Err(Error::Numerical(format!(
            "directional program failed at profile {a:?}"
        ))),
    }
}

/// The game with `player`'s public message collapsed to a constant, so
/// transfer schemes built on it cannot respond to that player's report.
pub(crate) fn marginalized_view(game: &Game, player: usize) -> Game {
    let mut g = game.clone();
    g.message_counts[player] = 1;
    g.rho[player] = vec![0; game.monitoring.signal_counts[player]];
    g.candidate_rhos = vec![g.rho.clone()];
    g
}

/// Whether `player`'s action deviations from `a` lose at least `eta` in
/// pure stage payoffs.
fn pure_strict(game: &Game, a: &[usize], player: usize, eta: f64) -> bool {
    let base = game.stage.payoff(a)[player];
    (0..game.stage.action_counts[player]).all(|a_dev| {
        if a_dev == a[player] {
            return true;
        }
        let mut profile = a.to_vec();
        profile[player] = a_dev;
        base - game.stage.payoff(&profile)[player] >= eta
    })
}

/// Structural feasibility of profile `a` when scoring coordinate `player`.
/// The scored player's transfer vanishes and must be deterred in pure stage
/// payoffs; everyone else is carried by transfers on the marginalized
/// kernel with conservative deterrence, which needs cross-checking reports
/// and so usually at least three players. Returns the transfers on the
/// marginalized message space.
fn structural_profile(
    game: &Game,
    a: &[usize],
    player: usize,
    eta: f64,
) -> Result<Option<Vec<Vec<f64>>>> {
    if !pure_strict(game, a, player, eta) {
        return Ok(None);
    }
    let view = marginalized_view(game, player);
    let n = view.n_players();
    let n_messages = view.n_joint_messages();
    let incentives: Vec<ReducedIncentives> = (0..n)
        .filter(|&j| j != player)
        .map(|j| ReducedIncentives::build(&view, a, j, Closure::Conservative))
        .collect();
    let n_aux: usize = incentives
        .iter()
        .map(|inc| inc.aux_groups.iter().map(|g| g.t.len()).sum::<usize>())
        .sum();
    let others: Vec<usize> = (0..n).filter(|&j| j != player).collect();
    let slot = |j: usize| others.iter().position(|&o| o == j).unwrap();
    let mut lp = LinearProgram::new(others.len() * n_messages + n_aux);
    let mut aux_cursor = others.len() * n_messages;
    for inc in &incentives {
        let x_base = slot(inc.player) * n_messages;
        for row in inc.lie_groups.iter().flatten() {
            let mut coeffs = vec![0.0; lp.n_vars()];
            coeffs[x_base..x_base + n_messages].copy_from_slice(&row.coeffs);
            lp.add_row(coeffs, Rel::Ge, row.gain + eta);
        }
        for group in &inc.aux_groups {
            let u_base = aux_cursor;
            aux_cursor += group.t.len();
            for (s, per_signal) in group.t.iter().enumerate() {
                for t_row in per_signal {
                    let mut coeffs = vec![0.0; lp.n_vars()];
                    coeffs[x_base..x_base + n_messages].copy_from_slice(t_row);
                    coeffs[u_base + s] = -1.0;
                    lp.add_row(coeffs, Rel::Le, 0.0);
                }
            }
            let mut coeffs = vec![0.0; lp.n_vars()];
            coeffs[x_base..x_base + n_messages].copy_from_slice(&inc.on_column);
            for s in 0..group.t.len() {
                coeffs[u_base + s] = -1.0;
            }
            lp.add_row(coeffs, Rel::Ge, group.gain + eta);
        }
    }
    let res = lp.solve();
    match res.status {
        LpStatus::Optimal => {
            let mut transfers = vec![vec![0.0; n_messages]; n];
            for &j in &others {
                let x_base = slot(j) * n_messages;
                transfers[j] = res.primal[x_base..x_base + n_messages].to_vec();
            }
            Ok(Some(transfers))
        }
        LpStatus::Infeasible => Ok(None),
        _ => Err(Error::Numerical(
            "structural coordinate program did not terminate cleanly".into(),
        )),
    }
}

/// Expand transfers on the marginalized message space to the full space,
/// constant in the ignored player's message.
fn expand_marginal_transfers(
    game: &Game,
    player: usize,
    marg: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let n_messages = game.n_joint_messages();
    let view_radix = {
        let mut r = game.message_counts.clone();
        r[player] = 1;
        r
    };
    (0..game.n_players())
        .map(|j| {
            (0..n_messages)
                .map(|m| {
                    let mut digits = crate::game::digits_of(&game.message_counts, m);
                    digits[player] = 0;
                    marg[j][crate::game::index_of(&view_radix, &digits)]
                })
                .collect()
        })
        .collect()
}

/// Bracket the directional score with the default profile candidates.
/// Assumes minmax-normalized payoffs.
pub fn score_direction(game: &Game, lambda: &[f64], eta: f64) -> Result<DirectionalScore> {
    score_direction_with(game, lambda, eta, false)
}

/// Bracket the directional score; `widen` forces the LP routes through
/// every profile instead of the default candidates. Assumes
/// minmax-normalized payoffs.
pub fn score_direction_with(
    game: &Game,
    lambda: &[f64],
    eta: f64,
    widen: bool,
) -> Result<DirectionalScore> {
    assert_eq!(lambda.len(), game.n_players());
    let n = game.n_players();
    let n_messages = game.n_joint_messages();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut witness: Option<ScoreWitness> = None;
    let candidates = candidate_profiles(game, lambda, widen);
    for rho in game.reporting_candidates() {
        let mut carrier = game.clone();
        carrier.rho = rho.clone();
        for &p in &candidates {
            let a = game.stage.profile_from_index(p);
            if let Some((value, transfers)) =
                profile_program(&carrier, &a, lambda, eta, Closure::Conservative)?
            {
                if value > lower {
                    lower = value;
                    let v = induced_payoff(game, &a, &rho, &transfers);
                    witness = Some(ScoreWitness {
                        route: Route::Conservative,
                        profile: a.clone(),
                        rho: rho.clone(),
                        transfers,
                        v,
                    });
                }
            }
            if let Some((value, _)) =
                profile_program(&carrier, &a, lambda, eta, Closure::Relaxed)?
            {
                upper = upper.max(value);
            }
        }
    }
    // Repeating a profile where every player is eta-strict in pure payoffs
    // needs no transfers: with x identically zero no deviation can move the
    // transfer distribution, so the whole family is exempt and the stage
    // payoff itself is attainable in every direction. The zero scheme is
    // also feasible for the relaxed programs, so the floor lifts both sides
    // and the bracket stays ordered.
    for p in 0..game.stage.n_profiles() {
        let a = game.stage.profile_from_index(p);
        if !(0..n).all(|l| pure_strict(game, &a, l, eta)) {
            continue;
        }
        let value = dot(lambda, game.stage.payoff(&a));
        upper = upper.max(value);
        if value > lower {
            lower = value;
            witness = Some(ScoreWitness {
                route: Route::Structural,
                profile: a.clone(),
                rho: game.rho.clone(),
                transfers: vec![vec![0.0; n_messages]; n],
                v: game.stage.payoff(&a).to_vec(),
            });
        }
    }
    if let Some((i, sign)) = coordinate_form(lambda) {
        for p in 0..game.stage.n_profiles() {
            let a = game.stage.profile_from_index(p);
            let value = sign.signum() * game.stage.payoff(&a)[i];
            if value <= lower {
                continue;
            }
            if let Some(marg) = structural_profile(game, &a, i, eta)? {
                let transfers = expand_marginal_transfers(game, i, &marg);
                let v = induced_payoff(game, &a, &game.rho, &transfers);
                lower = value;
                witness = Some(ScoreWitness {
                    route: Route::Structural,
                    profile: a,
                    rho: game.rho.clone(),
                    transfers,
                    v,
                });
            }
        }
    }
    Ok(DirectionalScore {
        lambda: lambda.to_vec(),
        lower,
        upper,
        witness,
    })
}

/// The payoff vector induced by a profile, reporting maps, and transfers.
pub fn induced_payoff(
    game: &Game,
    a: &[usize],
    rho: &[Vec<usize>],
    transfers: &[Vec<f64>],
) -> Vec<f64> {
    let on = game.message_distribution(a, rho);
    game.stage
        .payoff(a)
        .iter()
        .enumerate()
        .map(|(i, &g)| g + on.iter().zip(&transfers[i]).map(|(p, x)| p * x).sum::<f64>())
        .collect()
}

/// Everything `verify_witness` measured about a stored certificate.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    /// Worst incentive margin net of `eta`; nonnegative means deterred.
    pub incentive_slack: f64,
    /// Worst signed budget violation `sum_i lambda_i x_i(m)` over messages.
    pub budget_violation: f64,
    /// Absolute error between the claimed and recomputed payoff vectors.
    pub payoff_residual: f64,
    /// Certified value `lambda . v`.
    pub value: f64,
}

/// Replay a witness against the exact family margins of its route, without
/// enumerating reporting maps. Conservative and relaxed witnesses must pass
/// their closure's margins in full. Structural witnesses must deter every
/// action deviation, while a player's misreports count only when some
/// transfer actually responds to that player's message; otherwise a
/// misreport cannot move the transfer distribution and is exempt.
pub fn verify_witness(
    game: &Game,
    lambda: &[f64],
    eta: f64,
    witness: &ScoreWitness,
) -> Result<WitnessReport> {
    let n = game.n_players();
    let a = &witness.profile;
    let mut carrier = game.clone();
    carrier.rho = witness.rho.clone();
    let mut incentive_slack = f64::INFINITY;
    match witness.route {
        Route::Conservative | Route::Relaxed => {
            let closure = match witness.route {
                Route::Conservative => Closure::Conservative,
                _ => Closure::Relaxed,
            };
            for i in 0..n {
                let inc = ReducedIncentives::build(&carrier, a, i, closure);
                let m = inc.margins(&witness.transfers[i]);
                incentive_slack = incentive_slack.min(m.worst() - eta);
            }
        }
        Route::Structural => {
            for l in 0..n {
                let inc = ReducedIncentives::build(&carrier, a, l, Closure::Conservative);
                let m = inc.margins(&witness.transfers[l]);
                for &(_, action_margin) in &m.actions {
                    incentive_slack = incentive_slack.min(action_margin - eta);
                }
                if responds_to(&carrier, &witness.transfers, l) {
                    if let Some(h) = m.honest {
                        incentive_slack = incentive_slack.min(h - eta);
                    }
                }
            }
        }
    }
    let mut budget_violation = 0.0f64;
    for m in 0..game.n_joint_messages() {
        let paid: f64 = (0..n).map(|i| lambda[i] * witness.transfers[i][m]).sum();
        budget_violation = budget_violation.max(paid);
    }
    let v = induced_payoff(game, a, &witness.rho, &witness.transfers);
    let payoff_residual = v
        .iter()
        .zip(&witness.v)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let value = dot(lambda, &v);
    Ok(WitnessReport {
        incentive_slack,
        budget_violation,
        payoff_residual,
        value,
    })
}

/// Whether any player's transfer varies in `player`'s message coordinate.
fn responds_to(game: &Game, transfers: &[Vec<f64>], player: usize) -> bool {
    transfers.iter().any(|x| {
        (0..game.n_joint_messages()).any(|m| {
            let mut digits = crate::game::digits_of(&game.message_counts, m);
            if digits[player] == 0 {
                return false;
            }
            digits[player] = 0;
            let base = crate::game::index_of(&game.message_counts, &digits);
            (x[m] - x[base]).abs() > FEAS_TOL
        })
    })
}

/// Score every direction of a grid. Assumes minmax-normalized payoffs.
pub fn k_eta(game: &Game, grid: &[Vec<f64>], eta: f64) -> Result<Vec<DirectionalScore>> {
    grid.iter()
        .map(|lambda| score_direction(game, lambda, eta))
        .collect()
}

/// Unit-direction grid: a circle for two players, a seeded sphere sample
/// otherwise, always completed with the signed coordinate directions so the
/// individually rational caps are present exactly.
pub fn direction_grid(n: usize, n_dirs: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut grid: Vec<Vec<f64>> = if n == 2 {
        crate::geom::circle_grid(n_dirs)
            .into_iter()
            .map(|d| d.to_vec())
            .collect()
    } else {
        crate::geom::sphere_grid(n_dirs, n, seed)
    };
    for i in 0..n {
        for sign in [1.0f64, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            let dup = grid
                .iter()
                .any(|d| d.iter().zip(&e).all(|(a, b)| (a - b).abs() <= 1e-9));
            if !dup {
                grid.push(e);
            }
        }
    }
    grid
}

/// Outcome of intersecting the directional halfspaces.
#[derive(Clone, Debug)]
pub struct BoundOutcome {
    /// None when some direction scores minus infinity on the chosen side,
    /// making the set empty.
    pub rep: Option<ConvexSetRep>,
    pub scores: Vec<DirectionalScore>,
}

/// Bounding-set proxy on a direction grid: the intersection of the
/// halfspaces `lambda . v <= k(lambda)` with `k` read from the chosen
/// bracket side. The lower side is certified and safe to build on; the
/// upper side is diagnostic. Assumes minmax-normalized payoffs.
pub fn bounding_set(
    game: &Game,
    eta: f64,
    n_dirs: usize,
    seed: u64,
    side: Side,
) -> Result<BoundOutcome> {
    let n = game.n_players();
    let grid = direction_grid(n, n_dirs, seed);
    let scores = k_eta(game, &grid, eta)?;
    let pick = |s: &DirectionalScore| match side {
        Side::Lower => s.lower,
        Side::Upper => s.upper,
    };
    if scores.iter().any(|s| pick(s) == f64::NEG_INFINITY) {
        return Ok(BoundOutcome { rep: None, scores });
    }
    let halfspaces: Vec<(Vec<f64>, f64)> = scores
        .iter()
        .map(|s| (s.lambda.clone(), pick(s)))
        .collect();
    let rep = ConvexSetRep::from_halfspaces(n, halfspaces)?;
    Ok(BoundOutcome {
        rep: Some(rep),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn pd() -> Game {
        instances::noisy_prisoners_dilemma(0.05)
            .normalize_minmax()
            .0
    }

    fn stag() -> Game {
        instances::noisy_stag_hunt(0.05).normalize_minmax().0
    }

    fn team() -> Game {
        instances::team_monitor(0.05, 0.05).normalize_minmax().0
    }

    #[test]
    fn brackets_are_ordered() {
        let game = pd();
        for lambda in [
            vec![1.0, 0.0],
            vec![0.0, -1.0],
            vec![0.6, 0.8],
            vec![-0.6, 0.8],
            vec![-1.0 / 2.0f64.sqrt(), -1.0 / 2.0f64.sqrt()],
        ] {
            let s = score_direction(&game, &lambda, 0.1).unwrap();
            assert!(
                s.lower <= s.upper + 1e-7,
                "bracket out of order at {lambda:?}: [{}, {}]",
                s.lower,
                s.upper
            );
        }
    }

    #[test]
    fn scores_never_exceed_stage_hull() {
        // The budget forces lambda . v <= max_a lambda . g(a).
        let game = pd();
        for lambda in crate::geom::circle_grid(16) {
            let s = score_direction(&game, &lambda, 0.1).unwrap();
            let hull_max = (0..4)
                .map(|p| dot(&lambda, &game.stage.payoffs[p]))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(s.upper <= hull_max + 1e-7, "{lambda:?}");
        }
    }

    #[test]
    fn dilemma_coordinate_brackets_are_exact() {
        let game = pd();
        for i in 0..2 {
            let mut plus = vec![0.0, 0.0];
            plus[i] = 1.0;
            let s = score_direction(&game, &plus, 0.1).unwrap();
            assert!((s.lower - 2.0).abs() <= 1e-6, "k(+e{i}) lower {}", s.lower);
            assert!((s.upper - 2.0).abs() <= 1e-6, "k(+e{i}) upper {}", s.upper);
            let mut minus = vec![0.0, 0.0];
            minus[i] = -1.0;
            let s = score_direction(&game, &minus, 0.1).unwrap();
            assert!(s.lower.abs() <= 1e-6, "k(-e{i}) lower {}", s.lower);
            assert!(s.upper.abs() <= 1e-6, "k(-e{i}) upper {}", s.upper);
        }
    }

    #[test]
    fn mutual_defection_floors_every_direction() {
        // The all-strict profile pays (0,0), so no score drops below 0 in
        // directions where 0 beats the conservative programs.
        let game = pd();
        let diag = 1.0 / 2.0f64.sqrt();
        let s = score_direction(&game, &[-diag, -diag], 0.1).unwrap();
        assert!(s.lower.abs() <= 1e-6, "lower {}", s.lower);
        let w = s.witness.unwrap();
        assert_eq!(w.route, Route::Structural);
        assert_eq!(w.profile, vec![1, 1]);
        assert!(w.transfers.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn stag_coordinate_scores_hit_the_stage_extremes() {
        let game = stag();
        let plus = score_direction(&game, &[1.0, 0.0], 0.1).unwrap();
        assert!(
            (plus.lower - 2.0).abs() <= 1e-6,
            "k(+e1) lower {}",
            plus.lower
        );
        let minus = score_direction(&game, &[-1.0, 0.0], 0.1).unwrap();
        assert!(
            minus.lower.abs() <= 1e-6,
            "k(-e1) lower {} (mutual hare is a strict equilibrium)",
            minus.lower
        );
        let w = minus.witness.as_ref().unwrap();
        assert_eq!(w.route, Route::Structural);
        assert_eq!(w.profile, vec![1, 1]);
    }

    #[test]
    fn team_coordinate_brackets_match_the_stage_range() {
        let game = team();
        let best = [2.3, 1.9, 2.1];
        for i in 0..3 {
            let mut plus = vec![0.0; 3];
            plus[i] = 1.0;
            let s = score_direction(&game, &plus, 0.1).unwrap();
            assert!(
                (s.lower - best[i]).abs() <= 1e-6,
                "k(+e{i}) lower {}",
                s.lower
            );
            assert!(
                (s.upper - best[i]).abs() <= 1e-6,
                "k(+e{i}) upper {}",
                s.upper
            );
            let mut minus = vec![0.0; 3];
            minus[i] = -1.0;
            let s = score_direction(&game, &minus, 0.1).unwrap();
            assert!(s.lower.abs() <= 1e-6, "k(-e{i}) lower {}", s.lower);
            assert!(s.upper.abs() <= 1e-6, "k(-e{i}) upper {}", s.upper);
        }
    }

    #[test]
    fn witnesses_replay() {
        for game in [stag(), pd()] {
            for lambda in [
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.6, 0.8],
                vec![-0.6, -0.8],
            ] {
                let s = score_direction(&game, &lambda, 0.1).unwrap();
                let w = s.witness.as_ref().unwrap_or_else(|| {
                    panic!("no witness at {lambda:?}")
                });
                let rep = verify_witness(&game, &lambda, 0.1, w).unwrap();
                assert!(
                    rep.incentive_slack >= -1e-7,
                    "{lambda:?} via {:?}: slack {}",
                    w.route,
                    rep.incentive_slack
                );
                assert!(rep.budget_violation <= 1e-7);
                assert!(rep.payoff_residual <= 1e-9);
                assert!((rep.value - s.lower).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn scores_shrink_as_eta_grows() {
        let game = pd();
        for lambda in [vec![1.0, 0.0], vec![0.6, 0.8], vec![-0.6, 0.8]] {
            let loose = score_direction(&game, &lambda, 0.05).unwrap();
            let tight = score_direction(&game, &lambda, 0.4).unwrap();
            assert!(tight.lower <= loose.lower + 1e-7, "{lambda:?}");
            assert!(tight.upper <= loose.upper + 1e-7, "{lambda:?}");
        }
    }

    #[test]
    fn upper_respects_the_punishment_cap() {
        // k_upper(-e_i) never beats the negated strict floor.
        for game in [pd(), stag()] {
            let floors = crate::conditions::v_underbar(&game, 0.1);
            for i in 0..2 {
                let mut minus = vec![0.0, 0.0];
                minus[i] = -1.0;
                let s = score_direction(&game, &minus, 0.1).unwrap();
                assert!(
                    s.upper <= -floors.players[i].value + 1e-7,
                    "player {i}: upper {} floor {}",
                    s.upper,
                    floors.players[i].value
                );
            }
        }
    }

    #[test]
    fn widening_never_lowers_the_bracket() {
        let game = pd();
        for lambda in [vec![0.6, 0.8], vec![-0.6, 0.8]] {
            let narrow = score_direction(&game, &lambda, 0.1).unwrap();
            let wide = score_direction_with(&game, &lambda, 0.1, true).unwrap();
            assert!(wide.lower >= narrow.lower - 1e-9);
            assert!(wide.upper >= narrow.upper - 1e-9);
        }
    }

    #[test]
    fn dilemma_bounding_set_has_interior() {
        let out = bounding_set(&pd(), 0.1, 40, 0, Side::Lower).unwrap();
        let rep = out.rep.expect("nonempty");
        let poly = rep.vertices.as_ref().expect("two players");
        assert!(crate::geom::area(poly) > 0.1, "area {}", crate::geom::area(poly));
        // Mutual cooperation's payoff must be scorable in the cooperative
        // direction at full precision.
        let diag = score_direction(&pd(), &[0.5f64.sqrt(), 0.5f64.sqrt()], 0.1).unwrap();
        assert!(diag.lower >= 2.0f64.sqrt() - 1e-6, "diagonal lower {}", diag.lower);
    }

    #[test]
    fn grids_include_the_signed_coordinates() {
        for n in [2usize, 3] {
            let grid = direction_grid(n, 25, 7);
            for i in 0..n {
                for sign in [1.0f64, -1.0] {
                    assert!(grid.iter().any(|d| {
                        d.iter().enumerate().all(|(j, &x)| {
                            let want = if j == i { sign } else { 0.0 };
                            (x - want).abs() <= 1e-9
                        })
                    }));
                }
            }
        }
    }
}

//! Folk-theorem conditions: punishment floors, deterrence feasibility, and
//! the combined verdict.
//!
//! Strictness costs punishment power. The floor `v_underbar` is the lowest
//! payoff a player can be held to when every profile must leave deviators
//! at least `eta` behind; it is zero exactly when some pure minmax profile
//! is itself `eta`-strict. Detectability asks for transfers on joint
//! messages deterring one player's whole deviation family at a profile.
//! The starred variant deters everyone except one protected player while
//! staying blind to that player's message: the same per-player families,
//! with transfers and kernels marginalized over the protected report, so
//! continuation payoffs can single the player out without inviting the
//! others to cheat. Identifiability couples all players' families through
//! exactly budget-balanced transfers per direction: a feasible witness
//! transplants into the directional program and pins its value at the
//! stage maximum, which is what collapses the bounding set onto the
//! individually rational payoff set.

use crate::deviation::{Closure, DeviationSet, ReducedIncentives};
use crate::game::{payoff_geometry, Game, StageGame};
use crate::lp::{verify_farkas, LinearProgram, LpStatus, Rel};
use crate::scoring;
use crate::setops::ConvexSetRep;
use crate::{Error, Result, GEOM_TOL, PROB_TOL};
use nalgebra::DMatrix;

/// One player's punishment floor with the profiles witnessing strictness.
#[derive(Clone, Debug)]
pub struct PlayerMinmax {
    /// `min_a max(g_i(a), eta + best deviation payoff)`: the lowest payoff
    /// enforceable against the player by strict profiles. Nonnegative under
    /// minmax normalization.
    pub value: f64,
    /// Profile attaining the floor.
    pub argmin: Vec<usize>,
    /// A minmax profile where every own deviation loses at least `eta`,
    /// when one exists. Present exactly when `value` is zero.
    pub strict_minmax: Option<Vec<usize>>,
    /// A payoff-maximizing profile where every own deviation loses at least
    /// `eta`, when one exists.
    pub strict_best: Option<Vec<usize>>,
}

/// Punishment floors of every player at one strictness level.
#[derive(Clone, Debug)]
pub struct MinmaxProfileReport {
    pub eta: f64,
    pub per_player: Vec<PlayerMinmax>,
}

/// Strict punishment floors. Assumes minmax-normalized payoffs.
pub fn v_underbar(game: &Game, eta: f64) -> MinmaxProfileReport {
    let stage = &game.stage;
    let n = stage.n_players();
    let per_player = (0..n)
        .map(|i| {
            let best_payoff = (0..stage.n_profiles())
                .map(|p| stage.payoffs[p][i])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut value = f64::INFINITY;
            let mut argmin = Vec::new();
            let mut strict_minmax = None;
            let mut strict_best = None;
            for p in 0..stage.n_profiles() {
                let a = stage.profile_from_index(p);
                let own = stage.payoffs[p][i];
                let mut best_dev = f64::NEG_INFINITY;
                for a_dev in 0..stage.action_counts[i] {
                    if a_dev == a[i] {
                        continue;
                    }
                    let mut q = a.clone();
                    q[i] = a_dev;
                    best_dev = best_dev.max(stage.payoff(&q)[i]);
                }
                let ceiling = own.max(best_dev + eta);
                if ceiling < value {
                    value = ceiling;
                    argmin = a.clone();
                }
                let strict = own - best_dev >= eta;
                if strict && own.abs() <= GEOM_TOL && strict_minmax.is_none() {
                    strict_minmax = Some(a.clone());
                }
                if strict && (own - best_payoff).abs() <= GEOM_TOL && strict_best.is_none() {
                    strict_best = Some(a.clone());
                }
            }
            PlayerMinmax {
                value,
                argmin,
                strict_minmax,
                strict_best,
            }
        })
        .collect();
    MinmaxProfileReport { eta, per_player }
}

/// Existence, per player, of a strict payoff-maximizing profile and a
/// strict minmax profile. Both are needed before end-of-game play can
/// reward or punish a player without unraveling.
#[derive(Clone, Debug)]
pub struct BestResponseReport {
    pub eta: f64,
    pub holds: bool,
    pub floors: MinmaxProfileReport,
}

pub fn best_response_property(game: &Game, eta: f64) -> BestResponseReport {
    let floors = v_underbar(game, eta);
    let holds = floors
        .per_player
        .iter()
        .all(|p| p.strict_minmax.is_some() && p.strict_best.is_some());
    BestResponseReport { eta, holds, floors }
}

/// Feasibility of one deterrence program.
#[derive(Clone, Debug)]
pub enum FeasibilityOutcome {
    /// Transfers on joint messages deterring the whole family by `eta`.
    Feasible { transfers: Vec<f64> },
    /// Verified aggregation weights over the program rows with a strictly
    /// positive infeasibility margin.
    Infeasible { certificate: Vec<f64>, margin: f64 },
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityOutcome::Feasible { .. })
    }
}

/// Whether some misreport of the honest action at `a` leaves the induced
/// message distribution unchanged: a zero-mass own signal makes the lie
/// free, and no transfer deters a deviation nobody can see.
fn has_free_misreport(game: &Game, a: &[usize], player: usize) -> bool {
    game.message_counts[player] > 1
        && game
            .lie_block(a, player, a[player])
            .iter()
            .any(|row| row.iter().all(|&v| v.abs() <= PROB_TOL))
}

/// Auxiliary variables needed by `push_family` for one player.
fn aux_count(inc: &ReducedIncentives) -> usize {
    inc.aux_groups.iter().map(|g| g.t.len()).sum()
}

/// Append `player`'s reduced conservative family at `a` to `lp`: single-lie
/// rows, one sup-encoded group per deviation action, and an unsatisfiable
/// zero row when some misreport is free. Transfer variables sit at
/// `x_base`, auxiliary variables from `aux_base` on. Returns the next free
/// auxiliary slot.
fn push_family(
    lp: &mut LinearProgram,
    game: &Game,
    a: &[usize],
    inc: &ReducedIncentives,
    eta: f64,
    x_base: usize,
    mut aux_base: usize,
) -> usize {
    let n_messages = game.n_joint_messages();
    if has_free_misreport(game, a, inc.player) {
        lp.add_row(vec![0.0; lp.n_vars()], Rel::Ge, eta);
    }
    for row in inc.lie_groups.iter().flatten() {
        let mut coeffs = vec![0.0; lp.n_vars()];
        coeffs[x_base..x_base + n_messages].copy_from_slice(&row.coeffs);
        lp.add_row(coeffs, Rel::Ge, row.gain + eta);
    }
    for group in &inc.aux_groups {
        let u_base = aux_base;
        aux_base += group.t.len();
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
    aux_base
}

/// Feasibility of one already-built deterrence program: transfers on
/// success, a verified certificate on infeasibility.
fn settle(lp: &LinearProgram, n_transfers: usize, what: &str) -> Result<FeasibilityOutcome> {
    let res = lp.solve();
    match res.status {
        LpStatus::Optimal => Ok(FeasibilityOutcome::Feasible {
            transfers: res.primal[..n_transfers].to_vec(),
        }),
        LpStatus::Infeasible => {
            let y = res
                .farkas
                .ok_or_else(|| Error::Numerical(format!("{what}: no certificate returned")))?;
            let margin = verify_farkas(lp, &y).map_err(Error::Numerical)?;
            Ok(FeasibilityOutcome::Infeasible {
                certificate: y,
                margin,
            })
        }
        other => Err(Error::Numerical(format!(
            "{what}: {other:?} after {} pivots",
            res.iterations
        ))),
    }
}

/// Per-player deterrence of the full deviation family at one profile.
#[derive(Clone, Debug)]
pub struct DetectabilityReport {
    pub eta: f64,
    pub profile: Vec<usize>,
    pub rho: Vec<Vec<usize>>,
    pub holds: bool,
    pub per_player: Vec<FeasibilityOutcome>,
}

/// For each player, feasibility of transfers `x_i` on joint messages with
/// `E[x_i | a, rho] - E[x_i | deviation] >= gain + eta` across every action
/// deviation under every reporting map and every distribution-changing
/// misreport of the recommended action.
pub fn detectability(
    game: &Game,
    a: &[usize],
    rho: &[Vec<usize>],
    eta: f64,
) -> Result<DetectabilityReport> {
    let mut g = game.clone();
    g.rho = rho.to_vec();
    let n_messages = g.n_joint_messages();
    let mut per_player = Vec::with_capacity(g.n_players());
    for i in 0..g.n_players() {
        let inc = ReducedIncentives::build(&g, a, i, Closure::Conservative);
        let mut lp = LinearProgram::new(n_messages + aux_count(&inc));
        push_family(&mut lp, &g, a, &inc, eta, 0, n_messages);
        per_player.push(settle(
            &lp,
            n_messages,
            &format!("detectability at {a:?}, player {i}"),
        )?);
    }
    let holds = per_player.iter().all(FeasibilityOutcome::is_feasible);
    Ok(DetectabilityReport {
        eta,
        profile: a.to_vec(),
        rho: rho.to_vec(),
        holds,
        per_player,
    })
}

/// Deterrence of everyone but one protected player, blind to that player's
/// message.
#[derive(Clone, Debug)]
pub struct EtaStarReport {
    pub eta: f64,
    pub profile: Vec<usize>,
    pub protected: usize,
    pub holds: bool,
    /// One outcome per other player, in player order.
    pub per_other: Vec<(usize, FeasibilityOutcome)>,
}

/// For each player `j != protected`, feasibility of transfers on the
/// messages of everyone but `protected` deterring `j`'s whole deviation
/// family: the same per-player program as `detectability`, with variables
/// and kernels marginalized over the protected player's message.
pub fn eta_star_detectability(
    game: &Game,
    a: &[usize],
    rho: &[Vec<usize>],
    protected: usize,
    eta: f64,
) -> Result<EtaStarReport> {
    let mut g = game.clone();
    g.rho = rho.to_vec();
    let view = scoring::marginalized_view(&g, protected);
    let n_view = view.n_joint_messages();
    let mut per_other = Vec::new();
    for j in (0..view.n_players()).filter(|&j| j != protected) {
        let inc = ReducedIncentives::build(&view, a, j, Closure::Conservative);
        let mut lp = LinearProgram::new(n_view + aux_count(&inc));
        push_family(&mut lp, &view, a, &inc, eta, 0, n_view);
        per_other.push((
            j,
            settle(
                &lp,
                n_view,
                &format!("starred detectability at {a:?}, deviator {j}"),
            )?,
        ));
    }
    let holds = per_other.iter().all(|(_, o)| o.is_feasible());
    Ok(EtaStarReport {
        eta,
        profile: a.to_vec(),
        protected,
        holds,
        per_other,
    })
}

/// How identifiability was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentifiabilityMode {
    /// Every pair of players has jointly independent deviation directions,
    /// so no cross-player confusion is possible at any direction.
    RankSufficient,
    /// Budget-balanced deterrence was certified direction by direction.
    DualCertified,
    /// Some direction admits no budget-balanced deterrence; a verified
    /// certificate names the confusable deviation mixtures.
    Fails,
}

/// A direction where budget-balanced deterrence is impossible.
#[derive(Clone, Debug)]
pub struct IdentifiabilityFailure {
    pub lambda: Vec<f64>,
    /// Aggregation weights on the deterrence rows, in row order.
    pub incentive_weights: Vec<f64>,
    /// Weights on the per-message budget rows.
    pub budget_weights: Vec<f64>,
    /// Verified infeasibility margin, strictly positive.
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct IdentifiabilityReport {
    pub eta: f64,
    pub profile: Vec<usize>,
    pub mode: IdentifiabilityMode,
    /// Directions checked by the budget-balanced stage.
    pub checked: usize,
    pub failure: Option<IdentifiabilityFailure>,
}

impl IdentifiabilityReport {
    pub fn holds(&self) -> bool {
        self.mode != IdentifiabilityMode::Fails
    }
}

/// Stage one: for every pair of players, the stacked deviation difference
/// directions have full row rank, which rules out confusable mixtures
/// outright. Declines (returning false) when a family is too large to
/// enumerate or too large for the message space, or when a free misreport
/// hides a deviation from the ledger.
fn pairwise_rank_sufficient(game: &Game, a: &[usize]) -> Result<bool> {
    let n = game.n_players();
    let n_messages = game.n_joint_messages();
    if (0..n).any(|i| has_free_misreport(game, a, i)) {
        return Ok(false);
    }
    let on = game.message_distribution(a, &game.rho);
    let mut families = Vec::with_capacity(n);
    for i in 0..n {
        match DeviationSet::enumerate(game, a, i, Closure::Conservative) {
            Ok(set) => families.push(set),
            Err(Error::EnumerationCap { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let rows = families[i].deviations.len() + families[j].deviations.len();
            if rows == 0 {
                continue;
            }
            if rows > n_messages {
                return Ok(false);
            }
            let mut data = Vec::with_capacity(rows * n_messages);
            for d in families[i]
                .deviations
                .iter()
                .chain(families[j].deviations.iter())
            {
                data.extend(on.iter().zip(&d.column).map(|(o, c)| o - c));
            }
            let m = DMatrix::from_row_slice(rows, n_messages, &data);
            let min_sv = m
                .svd(false, false)
                .singular_values
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if !(min_sv > 1e-8) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Identifiability at one profile. Stage one certifies by pairwise rank.
/// Stage two runs, for every grid direction touching at least two players,
/// the joint program: all players' conservative families at strength `eta`
/// plus exact budget balance `sum_i lambda_i x_i(m) = 0` per message. The
/// first infeasible direction yields a verified failure certificate.
pub fn identifiability(
    game: &Game,
    a: &[usize],
    rho: &[Vec<usize>],
    eta: f64,
    grid: &[Vec<f64>],
) -> Result<IdentifiabilityReport> {
    let mut g = game.clone();
    g.rho = rho.to_vec();
    let report = |mode, checked, failure| {
        Ok(IdentifiabilityReport {
            eta,
            profile: a.to_vec(),
            mode,
            checked,
            failure,
        })
    };
    if pairwise_rank_sufficient(&g, a)? {
        return report(IdentifiabilityMode::RankSufficient, 0, None);
    }
    let n = g.n_players();
    let n_messages = g.n_joint_messages();
    let incentives: Vec<ReducedIncentives> = (0..n)
        .map(|i| ReducedIncentives::build(&g, a, i, Closure::Conservative))
        .collect();
    let n_aux: usize = incentives.iter().map(aux_count).sum();
    let mut checked = 0;
    for lambda in grid {
        if lambda.iter().filter(|&&l| l.abs() > GEOM_TOL).count() < 2 {
            continue;
        }
        checked += 1;
        let mut lp = LinearProgram::new(n * n_messages + n_aux);
        let mut aux_cursor = n * n_messages;
        for (i, inc) in incentives.iter().enumerate() {
            aux_cursor = push_family(&mut lp, &g, a, inc, eta, i * n_messages, aux_cursor);
        }
        let n_incentive_rows = lp.rows.len();
        for m in 0..n_messages {
            let mut coeffs = vec![0.0; lp.n_vars()];
            for i in 0..n {
                coeffs[i * n_messages + m] = lambda[i];
            }
            lp.add_row(coeffs, Rel::Eq, 0.0);
        }
        let res = lp.solve();
        match res.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                let y = res.farkas.ok_or_else(|| {
                    Error::Numerical(format!(
                        "identifiability at {a:?}, direction {lambda:?}: no certificate"
                    ))
                })?;
                let margin = verify_farkas(&lp, &y).map_err(Error::Numerical)?;
                return report(
                    IdentifiabilityMode::Fails,
                    checked,
                    Some(IdentifiabilityFailure {
                        lambda: lambda.clone(),
                        incentive_weights: y[..n_incentive_rows].to_vec(),
                        budget_weights: y[n_incentive_rows..].to_vec(),
                        margin,
                    }),
                );
            }
            other => {
                return Err(Error::Numerical(format!(
                    "identifiability at {a:?}, direction {lambda:?}: {other:?} after {} pivots",
                    res.iterations
                )))
            }
        }
    }
    report(IdentifiabilityMode::DualCertified, checked, None)
}

/// Whether the individually rational payoff set has nonempty interior: the
/// feasible payoffs span all coordinates and contain a strictly positive
/// point. Assumes minmax-normalized payoffs.
pub fn interior_nonempty(stage: &StageGame) -> bool {
    let n = stage.n_players();
    let pts = &stage.payoffs;
    if pts.len() < n + 1 {
        return false;
    }
    let base = &pts[0];
    let rows = pts.len() - 1;
    let mut data = Vec::with_capacity(rows * n);
    for v in &pts[1..] {
        data.extend(v.iter().zip(base).map(|(a, b)| a - b));
    }
    let m = DMatrix::from_row_slice(rows, n, &data);
    let rank = m
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-8)
        .count();
    if rank < n {
        return false;
    }
    // Best worst coordinate over the feasible set: positive iff some
    // feasible point is strictly positive.
    let mut lp = LinearProgram::new(pts.len() + 1);
    for w in 0..pts.len() {
        lp.set_lower(w, 0.0);
    }
    lp.objective[pts.len()] = 1.0;
    let mut ones = vec![1.0; pts.len()];
    ones.push(0.0);
    lp.add_row(ones, Rel::Eq, 1.0);
    for i in 0..n {
        let mut row: Vec<f64> = pts.iter().map(|v| v[i]).collect();
        row.push(-1.0);
        lp.add_row(row, Rel::Ge, 0.0);
    }
    let res = lp.solve();
    matches!(res.status, LpStatus::Optimal) && res.value > GEOM_TOL
}

/// Detectability and identifiability at one extreme profile, under the
/// first reporting profile passing both. On failure the reports describe
/// the last candidate tried.
#[derive(Clone, Debug)]
pub struct ExtremeCheck {
    pub profile: Vec<usize>,
    pub passing_rho: Option<Vec<Vec<usize>>>,
    pub detect: DetectabilityReport,
    pub ident: Option<IdentifiabilityReport>,
}

/// Starred detectability at the strict reward and punishment profiles of
/// one player, absent when the profile itself is missing.
#[derive(Clone, Debug)]
pub struct EtaStarCheck {
    pub player: usize,
    pub at_best: Option<EtaStarReport>,
    pub at_minmax: Option<EtaStarReport>,
}

/// Everything the folk theorem needs, in one pass.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub eta: f64,
    /// The individually rational payoff set has interior.
    pub interior: bool,
    pub best_response: BestResponseReport,
    pub extremes: Vec<ExtremeCheck>,
    pub eta_star: Vec<EtaStarCheck>,
    pub verdict: bool,
    /// Grid Hausdorff distance between the certified bounding set and the
    /// individually rational payoff set, computed when the verdict holds.
    pub hausdorff: Option<f64>,
}

/// Grid proxy for the Hausdorff distance between the lower bounding set and
/// the individually rational payoff set: the largest support gap across the
/// grid directions.
fn grid_hausdorff(game: &Game, eta: f64, grid: &[Vec<f64>]) -> Result<f64> {
    let scores = scoring::k_eta(game, grid, eta)?;
    if scores.iter().any(|s| s.lower == f64::NEG_INFINITY) {
        return Err(Error::NotCertified(
            "lower bounding set is empty on the grid".into(),
        ));
    }
    let halfspaces: Vec<(Vec<f64>, f64)> = scores
        .iter()
        .map(|s| (s.lambda.clone(), s.lower))
        .collect();
    let rep = ConvexSetRep::from_halfspaces(game.n_players(), halfspaces)?;
    let mut worst: f64 = 0.0;
    for (k, lambda) in rep.grid.iter().enumerate() {
        let hv = crate::game::vstar_support(&game.stage, lambda).ok_or_else(|| {
            Error::NotCertified("individually rational payoff set is empty".into())
        })?;
        worst = worst.max((rep.grid_support[k] - hv).abs());
    }
    Ok(worst)
}

/// The folk-theorem verdict: interior, best-response property, shared
/// detectability and identifiability at every extreme profile, and starred
/// detectability at each player's strict reward and punishment profiles.
/// When everything holds, the grid Hausdorff gap between the certified
/// bounding set and the individually rational payoff set is attached.
/// Assumes minmax-normalized payoffs.
pub fn folk_verdict(game: &Game, eta: f64, grid: &[Vec<f64>]) -> Result<ConditionReport> {
    let interior = interior_nonempty(&game.stage);
    let best_response = best_response_property(game, eta);
    let candidates = rho_candidates(game);
    let geometry = payoff_geometry(&game.stage);
    let mut extremes = Vec::new();
    let mut extremes_pass = true;
    for &p in &geometry.extreme_profiles {
        let a = game.stage.profile_from_index(p);
        let mut chosen = None;
        let mut last = None;
        for rho in &candidates {
            let detect = detectability(game, &a, rho, eta)?;
            if !detect.holds {
                last = Some((detect, None));
                continue;
            }
            let ident = identifiability(game, &a, rho, eta, grid)?;
            if ident.holds() {
                chosen = Some((rho.clone(), detect, ident));
                break;
            }
            last = Some((detect, Some(ident)));
        }
        match chosen {
            Some((rho, detect, ident)) => extremes.push(ExtremeCheck {
                profile: a,
                passing_rho: Some(rho),
                detect,
                ident: Some(ident),
            }),
            None => {
                extremes_pass = false;
                let (detect, ident) = last.expect("at least one reporting candidate");
                extremes.push(ExtremeCheck {
                    profile: a,
                    passing_rho: None,
                    detect,
                    ident,
                });
            }
        }
    }
    let mut eta_star = Vec::new();
    let mut eta_star_pass = true;
    for i in 0..game.n_players() {
        let floors = &best_response.floors.per_player[i];
        let run = |site: &Option<Vec<usize>>| -> Result<Option<EtaStarReport>> {
            match site {
                Some(a) => Ok(Some(eta_star_detectability(game, a, &game.rho, i, eta)?)),
                None => Ok(None),
            }
        };
        let at_best = run(&floors.strict_best)?;
        let at_minmax = run(&floors.strict_minmax)?;
        eta_star_pass &= at_best.as_ref().is_some_and(|r| r.holds)
            && at_minmax.as_ref().is_some_and(|r| r.holds);
        eta_star.push(EtaStarCheck {
            player: i,
            at_best,
            at_minmax,
        });
    }
    let verdict = interior && best_response.holds && extremes_pass && eta_star_pass;
    let hausdorff = if verdict {
        Some(grid_hausdorff(game, eta, grid)?)
    } else {
        None
    };
    Ok(ConditionReport {
        eta,
        interior,
        best_response,
        extremes,
        eta_star,
        verdict,
        hausdorff,
    })
}

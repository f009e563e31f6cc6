//! Unilateral deviation families at a recommended profile.
//!
//! A deviation for a player is a stage action together with a reporting map.
//! The literal family has `|A_i| * |M_i|^{|S_i|}` members and is only ever
//! materialized under a hard cap; the linear programs instead use an exact
//! reduction. Reporting enters the induced message distribution separately
//! signal by signal, so the all-reports quantifier collapses:
//!
//! * honest-action deviations are equivalent to the single-lie rows (one
//!   signal misreported, everything else truthful), because a multi-lie
//!   margin is the sum of its single-lie margins while the requirement is
//!   the same constant;
//! * for each deviation action, the adversarial report is chosen signal by
//!   signal, so one auxiliary variable per private signal carrying
//!   `max over messages` of the lie functional encodes the whole family.
//!
//! Misreports that do not change the induced distribution are excluded from
//! the honest-action family; they shift exactly zero probability mass, so
//! they cannot be (and need not be) deterred.

use crate::game::Game;
use crate::{Error, Result, ENUMERATION_CAP, PROB_TOL};

/// Which deviations the transfer scheme must deter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Every action deviation under every reporting map, plus every
    /// distribution-changing misreport of the recommended action.
    Conservative,
    /// Every action deviation under every reporting map; misreports of the
    /// recommended action are exempt.
    Relaxed,
}

/// One literal deviation.
#[derive(Clone, Debug)]
pub struct Deviation {
    pub action: usize,
    pub rho: Vec<usize>,
    /// Induced distribution over joint messages.
    pub column: Vec<f64>,
    /// Stage payoff gain over the recommended profile.
    pub gain: f64,
}

/// The literal deviation family of one player at one profile.
#[derive(Clone, Debug)]
pub struct DeviationSet {
    pub player: usize,
    pub deviations: Vec<Deviation>,
}

/// Size of the unreduced family: every action under every reporting map.
pub fn family_size(game: &Game, player: usize) -> usize {
    let maps = (game.message_counts[player] as u128)
        .checked_pow(game.monitoring.signal_counts[player] as u32)
        .unwrap_or(u128::MAX);
    let total = maps.saturating_mul(game.stage.action_counts[player] as u128);
    usize::try_from(total).unwrap_or(usize::MAX)
}

impl DeviationSet {
    /// Materialize the family, deduplicated by (action, induced column).
    /// Fails when the unreduced family exceeds the enumeration cap.
    pub fn enumerate(
        game: &Game,
        a: &[usize],
        player: usize,
        closure: Closure,
    ) -> Result<DeviationSet> {
        let size = family_size(game, player);
        if size > ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                player,
                size,
                cap: ENUMERATION_CAP,
            });
        }
        let on_column = game.message_distribution(a, &game.rho);
        let base = game.stage.payoff(a)[player];
        let mut deviations: Vec<Deviation> = Vec::new();
        let push_dedup = |deviations: &mut Vec<Deviation>, d: Deviation| {
            let dup = deviations.iter().any(|e| {
                e.action == d.action
                    && e.column
                        .iter()
                        .zip(&d.column)
                        .all(|(x, y)| (x - y).abs() <= PROB_TOL)
            });
            if !dup {
                deviations.push(d);
            }
        };
        for a_dev in 0..game.stage.action_counts[player] {
            let honest = a_dev == a[player];
            let mut profile = a.to_vec();
            profile[player] = a_dev;
            let gain = game.stage.payoff(&profile)[player] - base;
            if honest && closure == Closure::Relaxed {
                continue;
            }
            let rho_radix = vec![
                game.message_counts[player];
                game.monitoring.signal_counts[player]
            ];
            for rho in crate::game::all_tuples(&rho_radix) {
                let column = game.deviation_distribution(a, player, a_dev, &rho);
                if honest {
                    if rho == game.rho[player] {
                        continue;
                    }
                    let detectable = column
                        .iter()
                        .zip(&on_column)
                        .any(|(x, y)| (x - y).abs() > PROB_TOL);
                    if !detectable {
                        continue;
                    }
                }
                push_dedup(
                    &mut deviations,
                    Deviation {
                        action: a_dev,
                        rho,
                        column,
                        gain,
                    },
                );
            }
        }
        Ok(DeviationSet {
            player,
            deviations,
        })
    }
}

/// A single incentive row over one player's message-indexed transfer
/// component: require `coeffs . x >= gain + eta`.
#[derive(Clone, Debug)]
pub struct PlainRow {
    pub coeffs: Vec<f64>,
    pub gain: f64,
}

/// The whole reporting family of one deviation action, encoded with one
/// auxiliary variable per private signal: `u_s >= t[s][m_hat] . x` for every
/// message, and `on_column . x - sum_s u_s >= gain + eta`.
#[derive(Clone, Debug)]
pub struct AuxGroup {
    pub action: usize,
    pub gain: f64,
    /// t[s][m_hat][joint_message]
    pub t: Vec<Vec<Vec<f64>>>,
}

/// Exact reduced encoding of a player's deviation family at a profile. Works
/// regardless of the enumeration cap.
#[derive(Clone, Debug)]
pub struct ReducedIncentives {
    pub player: usize,
    pub on_column: Vec<f64>,
    /// Single-lie rows of the honest action, one group per detectable
    /// signal, one row per alternative message. Conservative closure only.
    pub lie_groups: Vec<Vec<PlainRow>>,
    /// One group per action deviation, either closure.
    pub aux_groups: Vec<AuxGroup>,
}

/// Worst-case incentive margins of a concrete transfer component. The family
/// is deterred at strength `eta` exactly when every margin is at least
/// `eta`.
#[derive(Clone, Debug)]
pub struct Margins {
    /// Minimum over distribution-changing misreports of the honest action.
    /// None when there is none to deter (or under the relaxed closure).
    pub honest: Option<f64>,
    /// Per deviation action, net of the stage payoff gain.
    pub actions: Vec<(usize, f64)>,
}

impl Margins {
    pub fn worst(&self) -> f64 {
        let a = self
            .actions
            .iter()
            .map(|&(_, m)| m)
            .fold(f64::INFINITY, f64::min);
        match self.honest {
            Some(h) => h.min(a),
            None => a,
        }
    }
}

impl ReducedIncentives {
    pub fn build(game: &Game, a: &[usize], player: usize, closure: Closure) -> Self {
        let n_messages = game.n_joint_messages();
        let on_column = game.message_distribution(a, &game.rho);
        let base = game.stage.payoff(a)[player];
        let rho_i = &game.rho[player];
        let n_own = game.message_counts[player];
        let mut lie_groups = Vec::new();
        let mut aux_groups = Vec::new();
        for a_dev in 0..game.stage.action_counts[player] {
            let honest = a_dev == a[player];
            let mut profile = a.to_vec();
            profile[player] = a_dev;
            let gain = game.stage.payoff(&profile)[player] - base;
            let block = game.lie_block(a, player, a_dev);
            if honest {
                if closure == Closure::Relaxed {
                    continue;
                }
                for (s, row) in block.iter().enumerate() {
                    if row.iter().all(|&v| v.abs() <= PROB_TOL) {
                        continue;
                    }
                    let mut group = Vec::with_capacity(n_own - 1);
                    for m_hat in 0..n_own {
                        if m_hat == rho_i[s] {
                            continue;
                        }
                        let mut coeffs = vec![0.0; n_messages];
                        for (mo, &v) in row.iter().enumerate() {
                            coeffs[game.assemble_message(player, rho_i[s], mo)] += v;
                            coeffs[game.assemble_message(player, m_hat, mo)] -= v;
                        }
                        group.push(PlainRow { coeffs, gain: 0.0 });
                    }
                    if !group.is_empty() {
                        lie_groups.push(group);
                    }
                }
            } else {
                let t = block
                    .iter()
                    .map(|row| {
                        (0..n_own)
                            .map(|m_hat| {
                                let mut coeffs = vec![0.0; n_messages];
                                for (mo, &v) in row.iter().enumerate() {
                                    coeffs[game.assemble_message(player, m_hat, mo)] += v;
                                }
                                coeffs
                            })
                            .collect()
                    })
                    .collect();
                aux_groups.push(AuxGroup {
                    action: a_dev,
                    gain,
                    t,
                });
            }
        }
        ReducedIncentives {
            player,
            on_column,
            lie_groups,
            aux_groups,
        }
    }

    /// Evaluate the margins of transfer component `x` (indexed by joint
    /// message) against the encoded family.
    pub fn margins(&self, x: &[f64]) -> Margins {
        let dot = |c: &[f64]| -> f64 { c.iter().zip(x).map(|(a, b)| a * b).sum() };
        // Honest action: a misreport picks, per signal, either the truth
        // (margin zero) or a lie; at least one lie must be picked. The family
        // minimum is the sum of the negative per-signal minima, or the single
        // cheapest lie when every lie costs.
        let honest = if self.lie_groups.is_empty() {
            None
        } else {
            let mins: Vec<f64> = self
                .lie_groups
                .iter()
                .map(|g| g.iter().map(|r| dot(&r.coeffs)).fold(f64::INFINITY, f64::min))
                .collect();
            let neg: f64 = mins.iter().map(|&d| d.min(0.0)).sum();
            Some(if neg < 0.0 {
                neg
            } else {
                mins.iter().copied().fold(f64::INFINITY, f64::min)
            })
        };
        let mut actions: Vec<(usize, f64)> = Vec::new();
        for g in &self.aux_groups {
            let worst: f64 = g
                .t
                .iter()
                .map(|per_signal| {
                    per_signal
                        .iter()
                        .map(|c| dot(c))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum();
            actions.push((g.action, dot(&self.on_column) - worst - g.gain));
        }
        Margins { honest, actions }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    /// Two players, two actions, one binary signal each: player 0 observes a
    /// noisy copy of player 1's action and vice versa.
    fn crossed_monitors() -> Game {
        let stage = crate::game::StageGame {
            action_counts: vec![2, 2],
            payoffs: vec![
                vec![2.0, 2.0],
                vec![0.0, 3.0],
                vec![3.0, 0.0],
                vec![1.0, 1.0],
            ],
        };
        let q0 = |s: usize, other: usize| if s == other { 0.9 } else { 0.1 };
        let q1 = |s: usize, other: usize| if s == other { 0.95 } else { 0.05 };
        let kernel = (0..4usize)
            .map(|p| {
                let (a0, a1) = (p / 2, p % 2);
                let mut row = Vec::with_capacity(4);
                for s0 in 0..2 {
                    for s1 in 0..2 {
                        row.push(q0(s0, a1) * q1(s1, a0));
                    }
                }
                row
            })
            .collect();
        let truthful = vec![vec![0, 1], vec![0, 1]];
        let game = Game {
            stage,
            monitoring: crate::game::Monitoring {
                signal_counts: vec![2, 2],
                kernel,
            },
            message_counts: vec![2, 2],
            rho: truthful.clone(),
            candidate_rhos: vec![truthful],
        };
        game.validate().unwrap();
        game
    }

    #[test]
    fn crossed_monitor_family_counts() {
        let game = crossed_monitors();
        assert_eq!(family_size(&game, 0), 8);
        let set =
            DeviationSet::enumerate(&game, &[0, 0], 0, Closure::Conservative).unwrap();
        // Of the 2 * 4 - 1 = 7 raw deviations all survive: three misreports
        // of the honest action with distinct columns, four defect maps whose
        // columns differ in the opponent coordinate.
        assert_eq!(set.deviations.len(), 7);
        let relaxed =
            DeviationSet::enumerate(&game, &[0, 0], 0, Closure::Relaxed).unwrap();
        assert_eq!(relaxed.deviations.len(), 4);
        assert!(relaxed.deviations.iter().all(|d| d.action == 1));
        assert!(relaxed
            .deviations
            .iter()
            .all(|d| (d.gain - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn exchangeable_signals_deduplicate() {
        // Player 0's signal is an independent fair coin at every profile, so
        // swapping its reports never changes the induced distribution.
        let mut game = crossed_monitors();
        for p in 0..4 {
            let good = [0.9, 0.6, 0.55, 0.2][p];
            game.monitoring.kernel[p] = vec![
                0.5 * good,
                0.5 * (1.0 - good),
                0.5 * good,
                0.5 * (1.0 - good),
            ];
        }
        game.validate().unwrap();
        let set =
            DeviationSet::enumerate(&game, &[0, 0], 0, Closure::Conservative).unwrap();
        // Honest action: the swap map is undetectable, pooling maps collapse
        // to two distinct columns. Defect maps: truthful and swap coincide,
        // the two pooling maps stay distinct, so three survive.
        let honest: Vec<_> = set.deviations.iter().filter(|d| d.action == 0).collect();
        let defect: Vec<_> = set.deviations.iter().filter(|d| d.action == 1).collect();
        assert_eq!(honest.len(), 2);
        assert_eq!(defect.len(), 3);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let mut game = instances::noisy_stag_hunt(0.05);
        game.message_counts = vec![9, 9];
        assert!(family_size(&game, 0) > crate::ENUMERATION_CAP);
        match DeviationSet::enumerate(&game, &[0, 0], 0, Closure::Conservative) {
            Err(Error::EnumerationCap { size, .. }) => {
                assert_eq!(size, 2 * 9usize.pow(4))
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    /// The reduced margins must agree with brute force over the literal
    /// family for arbitrary transfer components.
    fn cross_check(game: &Game, a: &[usize], player: usize, closure: Closure, seed: u64) {
        let set = DeviationSet::enumerate(game, a, player, closure).unwrap();
        let red = ReducedIncentives::build(game, a, player, closure);
        let on = game.message_distribution(a, &game.rho);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x: Vec<f64> = (0..game.n_joint_messages())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let m = red.margins(&x);
            let lit = |pred: &dyn Fn(&Deviation) -> bool| -> f64 {
                set.deviations
                    .iter()
                    .filter(|d| pred(d))
                    .map(|d| {
                        let drift: f64 = (0..x.len())
                            .map(|k| (on[k] - d.column[k]) * x[k])
                            .sum();
                        drift - d.gain
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            let lit_honest = lit(&|d| d.action == a[player]);
            match m.honest {
                Some(h) => assert!(
                    (h - lit_honest).abs() <= 1e-9,
                    "honest margin {h} vs literal {lit_honest}"
                ),
                None => assert_eq!(lit_honest, f64::INFINITY),
            }
            for &(action, margin) in &m.actions {
                let lit_a = lit(&|d| d.action == action);
                assert!(
                    (margin - lit_a).abs() <= 1e-9,
                    "action {action} margin {margin} vs literal {lit_a}"
                );
            }
        }
    }

    use crate::game::Game;

    #[test]
    fn reduced_margins_match_literal_enumeration() {
        let pd = instances::noisy_prisoners_dilemma(0.05);
        cross_check(&pd, &[0, 0], 0, Closure::Conservative, 11);
        cross_check(&pd, &[0, 1], 1, Closure::Conservative, 12);
        cross_check(&pd, &[0, 0], 0, Closure::Relaxed, 15);
        cross_check(&pd, &[1, 0], 1, Closure::Relaxed, 16);
        let stag = instances::noisy_stag_hunt(0.05);
        cross_check(&stag, &[0, 0], 0, Closure::Conservative, 13);
        cross_check(&stag, &[1, 1], 1, Closure::Conservative, 14);
        cross_check(&stag, &[0, 1], 0, Closure::Relaxed, 17);
        for seed in 0..6 {
            let g = instances::random_game(seed);
            let a = vec![0; g.n_players()];
            cross_check(&g, &a, 0, Closure::Conservative, 100 + seed);
            cross_check(&g, &a, g.n_players() - 1, Closure::Conservative, 200 + seed);
            cross_check(&g, &a, 0, Closure::Relaxed, 300 + seed);
        }
    }
}

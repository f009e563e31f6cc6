//! Canonical test instances.
//!
//! The dilemma and the stag hunt share one monitoring idea: both players
//! observe a single common label drawn around the realized profile, so the
//! joint signal distribution lives on the diagonal. Any misreport then
//! lands on an agreement-breaking cell that has zero probability on path,
//! which makes punishments for inconsistent reports free, while every
//! label keeps positive probability, so every misreport still moves
//! visible mass. The team game replaces the profile label with a monitor
//! that either stays silent or flags exactly one player, and shirking
//! raises only the shirker's own flag rate: one player's deviations never
//! touch another player's flag, so transfers that settle accounts at one
//! flag can be financed by the others at that same flag without disturbing
//! their incentives.

use crate::game::{Game, Monitoring, StageGame};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-player helper: the common-label kernel where both (or all) players
/// observe the same draw from `q`.
fn shared_label_kernel(n_players: usize, labels: usize, q: &[f64]) -> Vec<f64> {
    let n_joint = labels.pow(n_players as u32);
    let mut row = vec![0.0; n_joint];
    for (w, &mass) in q.iter().enumerate() {
        let mut cell = 0usize;
        for _ in 0..n_players {
            cell = cell * labels + w;
        }
        row[cell] = mass;
    }
    row
}

/// Noisy prisoner's dilemma. Both players observe one shared label: a
/// uniform draw over the four profiles with probability `1 - epsilon`,
/// the realized profile otherwise, so label `w` has probability
/// `(1 - epsilon)/4 + epsilon` when `w` is the realized profile and
/// `(1 - epsilon)/4` otherwise. A unilateral action change moves exactly
/// `epsilon` of mass between two labels; every label stays reachable.
/// Messages mirror signals, reports are truthful, and a pooling profile is
/// declared as the alternative candidate. Requires `0 < epsilon < 1`.
pub fn noisy_prisoners_dilemma(epsilon: f64) -> Game {
    assert!(epsilon > 0.0 && epsilon < 1.0);
    let stage = StageGame {
        action_counts: vec![2, 2],
        payoffs: vec![
            vec![2.0, 2.0],
            vec![0.0, 3.0],
            vec![3.0, 0.0],
            vec![1.0, 1.0],
        ],
    };
    let kernel = (0..4usize)
        .map(|p| {
            let q: Vec<f64> = (0..4)
                .map(|w| (1.0 - epsilon) / 4.0 + if w == p { epsilon } else { 0.0 })
                .collect();
            shared_label_kernel(2, 4, &q)
        })
        .collect();
    let truthful = vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]];
    let pooling = vec![vec![0, 0, 0, 0], vec![0, 0, 0, 0]];
    Game {
        stage,
        monitoring: Monitoring {
            signal_counts: vec![4, 4],
            kernel,
        },
        message_counts: vec![4, 4],
        rho: truthful.clone(),
        candidate_rhos: vec![truthful, pooling],
    }
}

/// Noisy stag hunt. The common label is the realized action profile,
/// observed correctly with probability `1 - epsilon` and as each other
/// profile with probability `epsilon / 3`. Both mutual stag and mutual hare
/// are strict equilibria with deviation loss 1. Requires
/// `0 < epsilon < 3/4`.
pub fn noisy_stag_hunt(epsilon: f64) -> Game {
    assert!(epsilon > 0.0 && epsilon < 0.75);
    let stage = StageGame {
        action_counts: vec![2, 2],
        payoffs: vec![
            vec![3.0, 3.0],
            vec![0.0, 2.0],
            vec![2.0, 0.0],
            vec![1.0, 1.0],
        ],
    };
    let kernel = (0..4usize)
        .map(|p| {
            let q: Vec<f64> = (0..4)
                .map(|w| if w == p { 1.0 - epsilon } else { epsilon / 3.0 })
                .collect();
            shared_label_kernel(2, 4, &q)
        })
        .collect();
    let truthful = vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]];
    let pooling = vec![vec![0, 0, 0, 0], vec![0, 0, 0, 0]];
    Game {
        stage,
        monitoring: Monitoring {
            signal_counts: vec![4, 4],
            kernel,
        },
        message_counts: vec![4, 4],
        rho: truthful.clone(),
        candidate_rhos: vec![truthful, pooling],
    }
}

/// Pairwise benefit of player `j`'s effort to player `i` in the team game.
const TEAM_BENEFIT: [[f64; 3]; 3] = [
    [0.0, 1.0, 1.3],
    [1.1, 0.0, 0.8],
    [0.9, 1.2, 0.0],
];

/// Private cost of effort per player. Each exceeds the strictness levels
/// used in tests, so shirking strictly dominates.
const TEAM_COST: [f64; 3] = [0.4, 0.5, 0.3];

/// Three-player team production under a flagging monitor. Action 0 is
/// effort, action 1 is shirking. Effort pays every teammate their benefit
/// from `TEAM_BENEFIT` and costs the worker their entry of `TEAM_COST`, so
/// shirking is strictly dominant, all-shirk is the unique strict
/// equilibrium, and the pure minmax is 0 for everyone: payoffs come
/// pre-normalized. All players observe a shared label: `0` means no flag,
/// `1 + i` flags player `i`. The baseline flag rate is `epsilon / 3` per
/// player and shirking adds `tau` to the shirker's own flag only, so one
/// player's deviations never move a teammate's flag rate. Requires
/// `epsilon > 0`, `tau > 0`, `epsilon + 3 tau < 1`.
pub fn team_monitor(epsilon: f64, tau: f64) -> Game {
    assert!(epsilon > 0.0 && tau > 0.0 && epsilon + 3.0 * tau < 1.0);
    let action_counts = vec![2usize, 2, 2];
    let n_profiles = 8usize;
    let profile = |p: usize| [(p >> 2) & 1, (p >> 1) & 1, p & 1];
    let payoffs = (0..n_profiles)
        .map(|p| {
            let a = profile(p);
            (0..3)
                .map(|i| {
                    let benefit: f64 = (0..3)
                        .filter(|&j| j != i)
                        .map(|j| TEAM_BENEFIT[i][j] * (1 - a[j]) as f64)
                        .sum();
                    benefit - TEAM_COST[i] * (1 - a[i]) as f64
                })
                .collect()
        })
        .collect();
    let kernel = (0..n_profiles)
        .map(|p| {
            let a = profile(p);
            let mut q = vec![0.0; 4];
            for i in 0..3 {
                q[1 + i] = epsilon / 3.0 + tau * a[i] as f64;
            }
            q[0] = 1.0 - q[1..].iter().sum::<f64>();
            shared_label_kernel(3, 4, &q)
        })
        .collect();
    let truthful = vec![vec![0, 1, 2, 3]; 3];
    Game {
        stage: StageGame {
            action_counts,
            payoffs,
        },
        monitoring: Monitoring {
            signal_counts: vec![4, 4, 4],
            kernel,
        },
        message_counts: vec![4, 4, 4],
        rho: truthful.clone(),
        candidate_rhos: vec![truthful],
    }
}

/// The same game with the communication channel removed: every player has a
/// single message, so reports carry no information.
pub fn muted(game: &Game) -> Game {
    let mut g = game.clone();
    g.message_counts = vec![1; g.n_players()];
    g.rho = g
        .monitoring
        .signal_counts
        .iter()
        .map(|&sc| vec![0; sc])
        .collect();
    g.candidate_rhos = vec![g.rho.clone()];
    g
}

/// A seeded random game: two or three players, two or three actions each,
/// payoffs uniform on [-3, 3], binary signals with a fully mixed joint
/// kernel, binary messages, truthful reports.
pub fn random_game(seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if rng.gen_bool(0.5) { 2 } else { 3 };
    let action_counts: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3usize)).collect();
    let n_profiles: usize = action_counts.iter().product();
    let payoffs = (0..n_profiles)
        .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    let n_joint = 1usize << n;
    let kernel = (0..n_profiles)
        .map(|_| {
            let mut row: Vec<f64> = (0..n_joint).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v /= sum;
            }
            row
        })
        .collect();
    let truthful: Vec<Vec<usize>> = vec![vec![0, 1]; n];
    Game {
        stage: StageGame {
            action_counts,
            payoffs,
        },
        monitoring: Monitoring {
            signal_counts: vec![2; n],
            kernel,
        },
        message_counts: vec![2; n],
        rho: truthful.clone(),
        candidate_rhos: vec![truthful],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        noisy_prisoners_dilemma(0.05).validate().unwrap();
        noisy_stag_hunt(0.05).validate().unwrap();
        team_monitor(0.05, 0.05).validate().unwrap();
        muted(&noisy_prisoners_dilemma(0.05)).validate().unwrap();
        for seed in 0..25 {
            random_game(seed).validate().unwrap();
        }
    }

    #[test]
    fn dilemma_labels_tilt_toward_the_realized_profile() {
        let eps = 0.05;
        let game = noisy_prisoners_dilemma(eps);
        for p in 0..4 {
            let row = &game.monitoring.kernel[p];
            let mut diag = 0.0;
            for s0 in 0..4 {
                for s1 in 0..4 {
                    let cell = row[s0 * 4 + s1];
                    if s0 == s1 {
                        diag += cell;
                        let want = (1.0 - eps) / 4.0 + if s0 == p { eps } else { 0.0 };
                        assert!((cell - want).abs() <= 1e-12);
                        // Full-support marginals: every misreport moves mass.
                        assert!(cell > 0.0);
                    } else {
                        // Disagreement is off path, so punishing it is free.
                        assert_eq!(cell, 0.0);
                    }
                }
            }
            assert!((diag - 1.0).abs() <= 1e-12);
        }
        // A unilateral action change moves exactly epsilon of label mass.
        for (p, q) in [(0usize, 1usize), (0, 2), (3, 1), (3, 2)] {
            let tv: f64 = (0..16)
                .map(|m| (game.monitoring.kernel[p][m] - game.monitoring.kernel[q][m]).abs())
                .sum();
            assert!((tv - 2.0 * eps).abs() <= 1e-12);
        }
    }

    #[test]
    fn stag_strict_equilibria() {
        let game = noisy_stag_hunt(0.05);
        // Mutual stag and mutual hare both punish unilateral deviation by 1.
        let g = &game.stage;
        assert_eq!(g.payoff(&[0, 0])[0] - g.payoff(&[1, 0])[0], 1.0);
        assert_eq!(g.payoff(&[0, 0])[1] - g.payoff(&[0, 1])[1], 1.0);
        assert_eq!(g.payoff(&[1, 1])[0] - g.payoff(&[0, 1])[0], 1.0);
        assert_eq!(g.payoff(&[1, 1])[1] - g.payoff(&[1, 0])[1], 1.0);
    }

    #[test]
    fn team_shirking_dominates_and_minmax_is_zero() {
        let game = team_monitor(0.05, 0.05);
        let g = &game.stage;
        for p in 0..8 {
            let a = g.profile_from_index(p);
            for i in 0..3 {
                let mut b = a.clone();
                b[i] = 1 - b[i];
                let diff = g.payoff(&a)[i] - g.payoff(&b)[i];
                // Deviating from shirk loses the effort cost; from effort,
                // gains it.
                let want = if a[i] == 1 { TEAM_COST[i] } else { -TEAM_COST[i] };
                assert!((diff - want).abs() <= 1e-12);
            }
        }
        // All-shirk pays zero: the pure minmax, already normalized.
        assert_eq!(g.payoff(&[1, 1, 1]), vec![0.0, 0.0, 0.0]);
        let (norm, shift) = game.normalize_minmax();
        assert!(shift.iter().all(|&s| s.abs() <= 1e-12));
        assert_eq!(norm.stage.payoffs, game.stage.payoffs);
    }

    #[test]
    fn team_flags_respond_only_to_the_shirker() {
        let eps = 0.05;
        let tau = 0.05;
        let game = team_monitor(eps, tau);
        let label_law = |p: usize| -> Vec<f64> {
            let row = &game.monitoring.kernel[p];
            (0..4)
                .map(|w| row[((w * 4) + w) * 4 + w])
                .collect()
        };
        for p in 0..8usize {
            let a = [(p >> 2) & 1, (p >> 1) & 1, p & 1];
            let q = label_law(p);
            for i in 0..3 {
                assert!((q[1 + i] - (eps / 3.0 + tau * a[i] as f64)).abs() <= 1e-12);
                // A deviation by i moves i's flag and the silence, nothing
                // else: the financing property.
                let dev = p ^ (1 << (2 - i));
                let qd = label_law(dev);
                for j in 0..3 {
                    if j != i {
                        assert!((q[1 + j] - qd[1 + j]).abs() <= 1e-12);
                    }
                }
                assert!(((q[1 + i] - qd[1 + i]).abs() - tau).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn muted_games_carry_no_information() {
        let game = muted(&noisy_prisoners_dilemma(0.05));
        assert_eq!(game.message_counts, vec![1, 1]);
        assert_eq!(game.n_joint_messages(), 1);
        for a in 0..4 {
            let p = game.stage.profile_from_index(a);
            let dist = game.message_distribution(&p, &game.rho);
            assert_eq!(dist, vec![1.0]);
        }
    }
}

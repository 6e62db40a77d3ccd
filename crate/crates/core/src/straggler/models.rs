//! Window conformance checks for the straggler models.

use serde::{Deserialize, Serialize};

use super::{ArbitraryModel, BurstyModel, PerRoundModel, StragglerPattern};

/// Straggler model a scheme is designed to tolerate. The simulator enforces
/// it through wait-outs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssumedModel {
    Bursty(BurstyModel),
    Arbitrary(ArbitraryModel),
    PerRound(PerRoundModel),
    /// Every `W`-window conforms either to the bursty model or to the
    /// `s`-per-round model (chosen per window).
    WindowMixture {
        bursty: BurstyModel,
        s: usize,
    },
    /// The whole pattern conforms to at least one of the listed models.
    AnyOf(Vec<AssumedModel>),
}

impl AssumedModel {
    fn window_len(&self) -> usize {
        match self {
            AssumedModel::Bursty(m) => m.window,
            AssumedModel::Arbitrary(m) => m.window,
            AssumedModel::PerRound(_) => 1,
            AssumedModel::WindowMixture { bursty, .. } => bursty.window,
            AssumedModel::AnyOf(ms) => ms.iter().map(Self::window_len).max().unwrap_or(1),
        }
    }

    /// Checks the rounds `[first, last]` (1-indexed, inclusive) as a single
    /// window. For `AnyOf` this is only meaningful per component.
    fn window_ok(&self, p: &StragglerPattern, first: usize, last: usize) -> bool {
        match self {
            AssumedModel::Bursty(m) => bursty_window_ok(p, first, last, m),
            AssumedModel::Arbitrary(m) => arbitrary_window_ok(p, first, last, m),
            AssumedModel::PerRound(m) => per_round_window_ok(p, first, last, m.s),
            AssumedModel::WindowMixture { bursty, s } => {
                bursty_window_ok(p, first, last, bursty) || per_round_window_ok(p, first, last, *s)
            }
            AssumedModel::AnyOf(ms) => ms.iter().any(|m| m.window_ok(p, first, last)),
        }
    }
}

/// Windows `[j, j+W-1]` fully inside `[1, R]`; a horizon shorter than one
/// window is checked as a single window.
fn windows(rounds: usize, w: usize) -> impl Iterator<Item = (usize, usize)> {
    let (count, len) = if rounds >= w {
        (rounds - w + 1, w)
    } else {
        (usize::from(rounds > 0), rounds)
    };
    (1..=count).map(move |j| (j, j + len - 1))
}

fn bursty_window_ok(p: &StragglerPattern, first: usize, last: usize, m: &BurstyModel) -> bool {
    let mut distinct = 0;
    for i in 0..p.n() {
        let mut span: Option<(usize, usize)> = None;
        for t in first..=last {
            if p.is_straggler(i, t) {
                span = Some(span.map_or((t, t), |(a, _)| (a, t)));
            }
        }
        if let Some((a, b)) = span {
            distinct += 1;
            if b - a + 1 > m.burst || distinct > m.lambda {
                return false;
            }
        }
    }
    true
}

fn arbitrary_window_ok(
    p: &StragglerPattern,
    first: usize,
    last: usize,
    m: &ArbitraryModel,
) -> bool {
    let mut distinct = 0;
    for i in 0..p.n() {
        let count = (first..=last).filter(|&t| p.is_straggler(i, t)).count();
        if count > 0 {
            distinct += 1;
            if count > m.max_per_worker || distinct > m.lambda {
                return false;
            }
        }
    }
    true
}

fn per_round_window_ok(p: &StragglerPattern, first: usize, last: usize, s: usize) -> bool {
    (first..=last).all(|t| p.stragglers_in(t) <= s)
}

/// True iff every window conforms to the `(B, W, lambda)`-bursty model.
pub fn check_bursty(p: &StragglerPattern, m: &BurstyModel) -> bool {
    windows(p.rounds(), m.window).all(|(a, b)| bursty_window_ok(p, a, b, m))
}

/// True iff every window conforms to the `(N, W', lambda')`-arbitrary model.
pub fn check_arbitrary(p: &StragglerPattern, m: &ArbitraryModel) -> bool {
    windows(p.rounds(), m.window).all(|(a, b)| arbitrary_window_ok(p, a, b, m))
}

/// True iff no round has more than `s` stragglers.
pub fn check_per_round(p: &StragglerPattern, m: &PerRoundModel) -> bool {
    (1..=p.rounds()).all(|t| p.stragglers_in(t) <= m.s)
}

/// Full conformance check of a pattern against an assumed model.
pub fn conforms(p: &StragglerPattern, model: &AssumedModel) -> bool {
    match model {
        AssumedModel::AnyOf(ms) => ms.iter().any(|m| conforms(p, m)),
        AssumedModel::PerRound(m) => check_per_round(p, m),
        other => windows(p.rounds(), other.window_len()).all(|(a, b)| other.window_ok(p, a, b)),
    }
}

/// Incremental conformance of a growing pattern.
///
/// After every accepted [`push`](Self::push) the stored prefix satisfies
/// [`conforms`]. Each admission test only inspects the window ending at the
/// new round, so a round costs `O(n * W)`.
#[derive(Debug, Clone)]
pub struct ConformanceTracker {
    model: AssumedModel,
    /// For `AnyOf`, components the prefix still conforms to.
    alive: Vec<bool>,
    prefix: StragglerPattern,
}

impl ConformanceTracker {
    pub fn new(n: usize, model: AssumedModel) -> Self {
        let alive = match &model {
            AssumedModel::AnyOf(ms) => vec![true; ms.len()],
            _ => vec![true],
        };
        Self {
            model,
            alive,
            prefix: StragglerPattern::empty(n, 0),
        }
    }

    pub fn model(&self) -> &AssumedModel {
        &self.model
    }

    /// Accepted pattern so far.
    pub fn pattern(&self) -> &StragglerPattern {
        &self.prefix
    }

    /// Checks the window ending at the candidate round, using only the last
    /// `W - 1` stored rounds.
    fn component_admits(m: &AssumedModel, prefix: &StragglerPattern, candidate: &[bool]) -> bool {
        match m {
            AssumedModel::AnyOf(ms) => ms
                .iter()
                .any(|c| Self::component_admits(c, prefix, candidate)),
            _ => {
                let start = prefix.rounds().saturating_sub(m.window_len() - 1);
                let mut columns = prefix.columns()[start..].to_vec();
                columns.push(candidate.to_vec());
                let tail =
                    StragglerPattern::from_columns(prefix.n(), columns).expect("candidate width");
                m.window_ok(&tail, 1, tail.rounds())
            }
        }
    }

    fn survivors(&self, candidate: &[bool]) -> Vec<bool> {
        match &self.model {
            AssumedModel::AnyOf(ms) => ms
                .iter()
                .zip(&self.alive)
                .map(|(m, &a)| a && Self::component_admits(m, &self.prefix, candidate))
                .collect(),
            m => vec![self.alive[0] && Self::component_admits(m, &self.prefix, candidate)],
        }
    }

    /// Whether appending `candidate` keeps the pattern conforming.
    pub fn admits(&self, candidate: &[bool]) -> bool {
        self.survivors(candidate).iter().any(|&a| a)
    }

    /// Appends `candidate` if admitted, otherwise an all-false round.
    /// Returns `true` when the candidate was admitted.
    pub fn push(&mut self, candidate: &[bool]) -> bool {
        let survivors = self.survivors(candidate);
        if survivors.iter().any(|&a| a) {
            self.alive = survivors;
            self.prefix.push_round(candidate.to_vec());
            true
        } else {
            // An empty round never breaks a model that held on the prefix.
            self.prefix.push_round(vec![false; self.prefix.n()]);
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bursty(b: usize, w: usize, l: usize) -> BurstyModel {
        BurstyModel::new(b, w, l).unwrap()
    }

    #[test]
    fn all_false_conforms_everywhere() {
        let p = StragglerPattern::empty(4, 7);
        assert!(check_bursty(&p, &bursty(1, 3, 0)));
        assert!(check_arbitrary(&p, &ArbitraryModel::new(0, 3, 0).unwrap()));
        assert!(check_per_round(&p, &PerRoundModel { s: 0 }));
    }

    #[test]
    fn worked_example_pattern_is_bursty() {
        let p = StragglerPattern::from_events(4, 5, &[(0, 2), (1, 2), (1, 3)]).unwrap();
        assert!(check_bursty(&p, &bursty(2, 3, 2)));
        assert!(!check_bursty(&p, &bursty(1, 3, 2)));
        assert!(!check_bursty(&p, &bursty(2, 3, 1)));
    }

    #[test]
    fn burst_span_violation() {
        let p = StragglerPattern::from_events(2, 3, &[(0, 1), (0, 3)]).unwrap();
        assert!(!check_bursty(&p, &bursty(1, 3, 2)));
        assert!(check_bursty(&p, &bursty(3, 3, 2)));
    }

    #[test]
    fn arbitrary_counts() {
        let p = StragglerPattern::from_events(3, 4, &[(0, 1), (0, 3)]).unwrap();
        assert!(check_arbitrary(&p, &ArbitraryModel::new(2, 4, 1).unwrap()));
        assert!(!check_arbitrary(&p, &ArbitraryModel::new(1, 4, 1).unwrap()));
    }

    #[test]
    fn per_round_column_sum() {
        let mut p = StragglerPattern::empty(4, 3);
        for w in 0..3 {
            p.set(w, 2, true);
        }
        assert!(!check_per_round(&p, &PerRoundModel { s: 2 }));
        assert!(check_per_round(&p, &PerRoundModel { s: 3 }));
        let alt = StragglerPattern::from_events(
            4,
            4,
            &[
                (0, 1),
                (1, 1),
                (2, 1),
                (3, 1),
                (0, 3),
                (1, 3),
                (2, 3),
                (3, 3),
            ],
        )
        .unwrap();
        assert!(!check_per_round(&alt, &PerRoundModel { s: 2 }));
    }

    #[test]
    fn tracker_rejects_second_burst_round() {
        let model = AssumedModel::Bursty(bursty(1, 2, 1));
        let mut tr = ConformanceTracker::new(2, model);
        assert!(tr.push(&[true, false]));
        assert!(!tr.admits(&[true, false]));
        assert!(!tr.push(&[true, false]));
        assert_eq!(tr.pattern().column(2), &[false, false]);
    }

    #[test]
    fn tracker_any_of_drops_components() {
        let model = AssumedModel::AnyOf(vec![
            AssumedModel::Bursty(bursty(2, 3, 1)),
            AssumedModel::Arbitrary(ArbitraryModel::new(1, 3, 2).unwrap()),
        ]);
        let mut tr = ConformanceTracker::new(3, model.clone());
        // Two stragglers in one round: only the arbitrary component survives.
        assert!(tr.push(&[true, true, false]));
        // A second straggling round for worker 0 breaks the arbitrary one too.
        assert!(!tr.push(&[true, false, false]));
        assert!(conforms(tr.pattern(), &model));
    }
}

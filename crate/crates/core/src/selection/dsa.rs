//! The discrete stochastic approximation recursion shared by relay selection
//! and transmit diversity selection.

use crate::{Error, Result};

/// Which extremum the tracked candidate follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Goal {
    /// Track the highest-cost candidate (relay selection: worst MSE).
    Maximize,
    /// Track the lowest-cost candidate (TDS: best MSE).
    Minimize,
}

impl Goal {
    /// Strict preference; ties keep the incumbent.
    pub fn prefers(self, challenger: f64, incumbent: f64) -> bool {
        match self {
            Goal::Maximize => challenger > incumbent,
            Goal::Minimize => challenger < incumbent,
        }
    }
}

/// State of one DSA engine over a candidate set indexed `0..len`.
///
/// `sop` is the state occupation probability vector. With step size
/// `1 / i` it equals the visit frequencies of the tracked candidate,
/// counting the initial occupation as the first visit.
#[derive(Clone, Debug, PartialEq)]
pub struct DsaState {
    sop: Vec<f64>,
    current: usize,
    tracked: usize,
    iteration: u64,
}

impl DsaState {
    /// Starts with all probability mass on `initial`, which is both the
    /// current optimum and the tracked candidate.
    pub fn new(len: usize, initial: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyCandidateSet("DSA over zero candidates".into()));
        }
        if initial >= len {
            return Err(Error::InvalidConfig(format!(
                "initial candidate {initial} outside a set of {len}"
            )));
        }
        let mut sop = vec![0.0; len];
        sop[initial] = 1.0;
        Ok(DsaState {
            sop,
            current: initial,
            tracked: initial,
            iteration: 1,
        })
    }

    pub fn sop(&self) -> &[f64] {
        &self.sop
    }

    /// Current optimum: the most occupied tracked state.
    pub fn current(&self) -> usize {
        self.current
    }

    /// Worst (maximize) or best (minimize) candidate seen so far.
    pub fn tracked(&self) -> usize {
        self.tracked
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// One iteration against `candidate`.
    ///
    /// `valid` restricts the usable candidates (set reduction). A tracked
    /// candidate that is no longer valid is replaced by `candidate`
    /// unconditionally, and an invalid current optimum is replaced by the
    /// tracked one. `candidate` itself must be valid.
    pub fn step<C, V>(&mut self, candidate: usize, goal: Goal, mut cost: C, valid: V) -> Result<()>
    where
        C: FnMut(usize) -> Result<f64>,
        V: Fn(usize) -> bool,
    {
        if candidate >= self.sop.len() {
            return Err(Error::DimensionMismatch(format!(
                "candidate {candidate} outside a set of {}",
                self.sop.len()
            )));
        }
        if !valid(self.tracked) {
            self.tracked = candidate;
        } else if candidate != self.tracked {
            let challenger = cost(candidate)?;
            let incumbent = cost(self.tracked)?;
            if goal.prefers(challenger, incumbent) {
                self.tracked = candidate;
            }
        }

        self.iteration += 1;
        self.absorb(self.tracked);

        if self.sop[self.tracked] > self.sop[self.current] || !valid(self.current) {
            self.current = self.tracked;
        }
        Ok(())
    }

    /// `sop <- sop + mu (e_k - sop)` with `mu = 1 / iteration`.
    fn absorb(&mut self, k: usize) {
        let mu = 1.0 / self.iteration as f64;
        for (i, p) in self.sop.iter_mut().enumerate() {
            let target = if i == k { 1.0 } else { 0.0 };
            *p += mu * (target - *p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn always(_: usize) -> bool {
        true
    }

    #[test]
    fn first_update_halves_mass() {
        let mut state = DsaState::new(2, 0).unwrap();
        state
            .step(1, Goal::Maximize, |k| Ok(k as f64), always)
            .unwrap();
        assert_eq!(state.sop(), &[0.5, 0.5]);
        // tie in sop keeps the current optimum
        assert_eq!(state.current(), 0);
        assert_eq!(state.tracked(), 1);
        state
            .step(0, Goal::Maximize, |k| Ok(k as f64), always)
            .unwrap();
        assert_eq!(state.current(), 1);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            DsaState::new(0, 0),
            Err(Error::EmptyCandidateSet(_))
        ));
        assert!(DsaState::new(3, 3).is_err());
    }

    #[test]
    fn invalid_incumbents_are_replaced() {
        let mut state = DsaState::new(4, 0).unwrap();
        state
            .step(2, Goal::Minimize, |_| Ok(1.0), |k| k >= 2)
            .unwrap();
        assert_eq!(state.tracked(), 2);
        assert_eq!(state.current(), 2);
    }

    #[test]
    fn sop_counts_visits() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let costs: Vec<f64> = (0..6).map(|_| rng.random()).collect();
        let mut state = DsaState::new(6, 0).unwrap();
        let mut visits = [0u64; 6];
        visits[0] += 1;
        for _ in 0..300 {
            let c = rng.random_range(0..6);
            // noisy costs so the tracked candidate moves around
            let noisy: Vec<f64> = costs.iter().map(|v| v + rng.random::<f64>()).collect();
            state
                .step(c, Goal::Maximize, |k| Ok(noisy[k]), always)
                .unwrap();
            visits[state.tracked()] += 1;
            let total = state.iteration() as f64;
            for (k, v) in visits.iter().enumerate() {
                assert!((state.sop()[k] - *v as f64 / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tracking_is_monotone_for_static_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let costs: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let mut state = DsaState::new(10, 3).unwrap();
        for _ in 0..200 {
            let before = costs[state.tracked()];
            let c = rng.random_range(0..10);
            state
                .step(c, Goal::Maximize, |k| Ok(costs[k]), always)
                .unwrap();
            assert!(costs[state.tracked()] >= before);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

        proptest! {
            #[test]
            fn sop_stays_a_distribution(seed in any::<u64>(), len in 1usize..12) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut state = DsaState::new(len, 0).unwrap();
                for _ in 0..500 {
                    let c = rng.random_range(0..len);
                    let noise: Vec<f64> = (0..len).map(|_| rng.random()).collect();
                    state.step(c, Goal::Minimize, |k| Ok(noise[k]), always).unwrap();
                    let sum: f64 = state.sop().iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                    prop_assert!(state.sop().iter().all(|p| (0.0..=1.0).contains(p)));
                    let max = state.sop().iter().cloned().fold(0.0, f64::max);
                    prop_assert_eq!(state.sop()[state.current()], max);
                }
            }
        }
    }
}

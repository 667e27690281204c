//! Candidate sets for relay selection (RS) and transmit diversity selection
//! (TDS), the exhaustive searches over them, and the DSA steps that replace
//! those searches at run time.

mod complexity;
mod dsa;

pub use complexity::{complexity_report, ComplexityReport, ComplexityRow, COUNTING_CONVENTION};
pub use dsa::{DsaState, Goal};

use itertools::Itertools;
use rand::Rng;

use crate::channel::ChannelView;
use crate::model::{binomial, SystemConfig};
use crate::receiver::{mmse_cost, stats_destination, stats_relay, RelayTransmission};
use crate::{Error, Result};

/// A member of the RS candidate set: the relays to remove, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelaySubset {
    removed: Vec<usize>,
}

impl RelaySubset {
    pub fn new(mut removed: Vec<usize>, n_r: usize) -> Result<Self> {
        removed.sort_unstable();
        if removed.windows(2).any(|w| w[0] == w[1]) || removed.iter().any(|r| *r >= n_r) {
            return Err(Error::InvalidConfig(format!(
                "relay subset {removed:?} is not a set of distinct relays below {n_r}"
            )));
        }
        Ok(RelaySubset { removed })
    }

    pub fn empty() -> Self {
        RelaySubset {
            removed: Vec::new(),
        }
    }

    pub fn removed(&self) -> &[usize] {
        &self.removed
    }

    pub fn contains(&self, relay: usize) -> bool {
        self.removed.binary_search(&relay).is_ok()
    }
}

/// A member of the TDS candidate set: the active stacked relay antennas,
/// sorted. The diagonal 0/1 matrix is materialized with [`TdsMatrix::mask`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TdsMatrix {
    active: Vec<usize>,
}

impl TdsMatrix {
    pub fn new(mut active: Vec<usize>, relay_antennas: usize) -> Result<Self> {
        active.sort_unstable();
        if active.windows(2).any(|w| w[0] == w[1]) || active.iter().any(|a| *a >= relay_antennas) {
            return Err(Error::InvalidConfig(format!(
                "antenna set {active:?} is not a set of distinct antennas below {relay_antennas}"
            )));
        }
        Ok(TdsMatrix { active })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn mask(&self, relay_antennas: usize) -> Vec<bool> {
        let mut mask = vec![false; relay_antennas];
        for a in &self.active {
            mask[*a] = true;
        }
        mask
    }

    /// Whether any active antenna belongs to a relay in `removed`.
    pub fn uses_any(&self, removed: &RelaySubset, n_ar: usize) -> bool {
        self.active.iter().any(|a| removed.contains(a / n_ar))
    }
}

fn guard(size: u128, limit: usize) -> Result<()> {
    if size > limit as u128 {
        return Err(Error::CandidateSetTooLarge { size, limit });
    }
    Ok(())
}

/// All ways of removing `n_rem` relays, in lexicographic order.
pub fn enumerate_omega_r(config: &SystemConfig) -> Result<Vec<RelaySubset>> {
    config.validate()?;
    guard(binomial(config.n_r, config.n_rem), config.max_candidates)?;
    Ok((0..config.n_r)
        .combinations(config.n_rem)
        .map(|removed| RelaySubset { removed })
        .collect())
}

/// TDS matrices with `n_asub` active antennas, none on a relay in
/// `removed`, in lexicographic order. An empty `removed` gives the full set.
pub fn enumerate_omega_t(config: &SystemConfig, removed: &RelaySubset) -> Result<Vec<TdsMatrix>> {
    config.validate()?;
    let kept = config.n_r - removed.removed().len();
    guard(
        binomial(config.n_ar * kept, config.n_asub),
        config.max_candidates,
    )?;
    Ok((0..config.relay_antennas())
        .filter(|a| !removed.contains(a / config.n_ar))
        .combinations(config.n_asub)
        .map(|active| TdsMatrix { active })
        .collect())
}

/// The immutable candidate sets of one configuration.
#[derive(Clone, Debug)]
pub struct CandidateSets {
    pub omega_r: Vec<RelaySubset>,
    pub omega_t: Vec<TdsMatrix>,
    n_r: usize,
    n_ar: usize,
    n_asub: usize,
}

impl CandidateSets {
    pub fn build(config: &SystemConfig) -> Result<Self> {
        Ok(CandidateSets {
            omega_r: enumerate_omega_r(config)?,
            omega_t: enumerate_omega_t(config, &RelaySubset::empty())?,
            n_r: config.n_r,
            n_ar: config.n_ar,
            n_asub: config.n_asub,
        })
    }

    /// The full TDS set, with no relay removed.
    pub fn full(&self) -> ReducedSet<'_> {
        self.reduced(None)
    }

    pub fn reduced<'a>(&'a self, removed: Option<&'a RelaySubset>) -> ReducedSet<'a> {
        set_reduction(self, removed)
    }
}

/// A view of the TDS candidates that do not use any removed relay. Indices
/// are positions in the full set, so DSA state survives changes of the RS
/// decision.
#[derive(Clone, Copy, Debug)]
pub struct ReducedSet<'a> {
    omega_t: &'a [TdsMatrix],
    removed: Option<&'a RelaySubset>,
    n_ar: usize,
    len: usize,
}

/// Filters the TDS set by the current RS decision without copying it.
pub fn set_reduction<'a>(
    sets: &'a CandidateSets,
    removed: Option<&'a RelaySubset>,
) -> ReducedSet<'a> {
    let n_removed = removed.map_or(0, |r| r.removed().len());
    let len = binomial(sets.n_ar * (sets.n_r - n_removed), sets.n_asub) as usize;
    ReducedSet {
        omega_t: &sets.omega_t,
        removed,
        n_ar: sets.n_ar,
        len,
    }
}

impl<'a> ReducedSet<'a> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, index: usize) -> bool {
        match (self.omega_t.get(index), self.removed) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(t), Some(removed)) => !t.uses_any(removed, self.n_ar),
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.omega_t.len()).filter(move |i| self.contains(*i))
    }

    pub fn get(&self, index: usize) -> &'a TdsMatrix {
        &self.omega_t[index]
    }

    /// Uniform draw over the view (rejection from the full set).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::EmptyCandidateSet("reduced TDS set".into()));
        }
        loop {
            let i = rng.random_range(0..self.omega_t.len());
            if self.contains(i) {
                return Ok(i);
            }
        }
    }
}

/// The MSE cost functions evaluated from one set of channel estimates.
pub struct CostModel<'a> {
    pub config: &'a SystemConfig,
    pub estimates: &'a dyn ChannelView,
    /// Stream carried by each stacked relay antenna.
    pub stream_of: &'a [usize],
    pub noise_var: f64,
}

impl<'a> CostModel<'a> {
    pub fn new(
        config: &'a SystemConfig,
        estimates: &'a dyn ChannelView,
        stream_of: &'a [usize],
        noise_var: f64,
    ) -> Self {
        CostModel {
            config,
            estimates,
            stream_of,
            noise_var,
        }
    }

    /// MMSE at one relay from its source-relay estimate.
    pub fn single_relay_cost(&self, relay: usize) -> Result<f64> {
        let stats = stats_relay(
            self.estimates.h_sr(relay),
            self.config.source_amplitude(),
            self.noise_var,
        );
        mmse_cost(&stats)
    }

    /// Summed relay MSE of a removal candidate (maximized by RS).
    pub fn relay_cost(&self, subset: &RelaySubset) -> Result<f64> {
        subset
            .removed()
            .iter()
            .map(|r| self.single_relay_cost(*r))
            .sum()
    }

    /// Destination MMSE under a TDS matrix (minimized by TDS).
    pub fn tds_cost(&self, tds: &TdsMatrix) -> Result<f64> {
        let mask = tds.mask(self.config.relay_antennas());
        let tx = RelayTransmission {
            active: &mask,
            stream_of: self.stream_of,
            amplitude: 1.0 / (self.config.n_asub as f64).sqrt(),
        };
        let stats = stats_destination(
            self.estimates.h_sd(),
            self.estimates.h_rd(),
            tx,
            self.config.source_amplitude(),
            self.noise_var,
        );
        mmse_cost(&stats)
    }
}

fn extremum<I>(indices: I, goal: Goal, mut cost: impl FnMut(usize) -> Result<f64>) -> Result<usize>
where
    I: Iterator<Item = usize>,
{
    let mut best: Option<(usize, f64)> = None;
    for i in indices {
        let c = cost(i)?;
        match best {
            Some((_, b)) if !goal.prefers(c, b) => {}
            _ => best = Some((i, c)),
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::EmptyCandidateSet("exhaustive search".into()))
}

/// Index in `omega_r` of the removal set with the largest summed relay MSE.
/// Ties go to the lower index.
pub fn exhaustive_rs(sets: &CandidateSets, model: &CostModel<'_>) -> Result<usize> {
    extremum(0..sets.omega_r.len(), Goal::Maximize, |i| {
        model.relay_cost(&sets.omega_r[i])
    })
}

/// Index in the full TDS set of the lowest destination-MSE member of the
/// view. Ties go to the lower index.
pub fn exhaustive_tds(view: &ReducedSet<'_>, model: &CostModel<'_>) -> Result<usize> {
    extremum(view.indices(), Goal::Minimize, |i| {
        model.tds_cost(view.get(i))
    })
}

/// One RS iteration: a uniform candidate from `omega_r` challenges the
/// worst relay subset found so far.
pub fn dsa_step_rs<R: Rng + ?Sized>(
    state: &mut DsaState,
    rng: &mut R,
    sets: &CandidateSets,
    model: &CostModel<'_>,
) -> Result<()> {
    if sets.omega_r.is_empty() {
        return Err(Error::EmptyCandidateSet("relay subsets".into()));
    }
    let candidate = rng.random_range(0..sets.omega_r.len());
    state.step(
        candidate,
        Goal::Maximize,
        |i| model.relay_cost(&sets.omega_r[i]),
        |_| true,
    )
}

/// One TDS iteration over the reduced set: a uniform candidate challenges
/// the best TDS matrix found so far.
pub fn dsa_step_tds<R: Rng + ?Sized>(
    state: &mut DsaState,
    rng: &mut R,
    view: &ReducedSet<'_>,
    model: &CostModel<'_>,
) -> Result<()> {
    let candidate = view.sample(rng)?;
    state.step(
        candidate,
        Goal::Minimize,
        |i| model.tds_cost(view.get(i)),
        |i| view.contains(i),
    )
}

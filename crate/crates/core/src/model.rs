//! Scenario configuration and the dimension bookkeeping shared by every other
//! module.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use nalgebra::Complex;
pub type C64 = Complex<f64>;

/// Dense complex matrix used for channels, filters and correlation matrices.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector (symbols, received samples).
pub type CVector = DVector<C64>;

/// Default upper bound on the size of an enumerated candidate set.
pub const DEFAULT_MAX_CANDIDATES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMode {
    /// Receivers know every channel exactly.
    Perfect,
    /// Receivers track every link with an exponentially weighted RLS
    /// estimator driven by the pilot symbols.
    Rls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Exhaustive,
    /// Discrete stochastic approximation (the iterative algorithm).
    Dsa,
}

/// One transmission scheme compared by the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    /// Direct source-destination transmission only.
    NonCooperative,
    /// Every relay antenna forwards; no selection.
    NoTds,
    /// Transmit diversity selection over the full candidate set.
    Tds(SelectionMethod),
    /// Relay selection followed by TDS over the reduced set.
    TdsRs(SelectionMethod),
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::NonCooperative,
        Scheme::NoTds,
        Scheme::Tds(SelectionMethod::Exhaustive),
        Scheme::Tds(SelectionMethod::Dsa),
        Scheme::TdsRs(SelectionMethod::Exhaustive),
        Scheme::TdsRs(SelectionMethod::Dsa),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::NonCooperative => "non_cooperative",
            Scheme::NoTds => "no_tds",
            Scheme::Tds(SelectionMethod::Exhaustive) => "exhaustive_tds",
            Scheme::Tds(SelectionMethod::Dsa) => "iterative_tds",
            Scheme::TdsRs(SelectionMethod::Exhaustive) => "exhaustive_tds_rs",
            Scheme::TdsRs(SelectionMethod::Dsa) => "iterative_tds_rs",
        }
    }

    /// Whether the relays transmit with a TDS matrix of `n_asub` antennas.
    pub fn uses_tds(self) -> bool {
        matches!(self, Scheme::Tds(_) | Scheme::TdsRs(_))
    }

    /// Stable small integer used to derive per-scheme random streams.
    pub(crate) fn tag(self) -> u64 {
        Scheme::ALL.iter().position(|s| *s == self).unwrap() as u64
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.label() == s)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.label().to_string()
    }
}

/// Every scenario parameter of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Source antennas (and independent data streams).
    pub n_as: usize,
    /// Antennas per relay; an integer multiple of `n_as`.
    pub n_ar: usize,
    /// Destination antennas.
    pub n_ad: usize,
    /// Relay count.
    pub n_r: usize,
    /// Active relay antennas under TDS.
    pub n_asub: usize,
    /// Relays removed by RS.
    pub n_rem: usize,
    /// Symbols per packet; the channel is constant over one packet.
    pub n_symbols: usize,
    /// Packets simulated per SNR point.
    pub n_packets: usize,
    pub snr_db_grid: Vec<f64>,
    /// Amplitude scale of the direct link relative to the relayed links.
    pub direct_gain: f64,
    /// RLS exponential forgetting factor.
    pub forgetting: f64,
    pub estimation_mode: EstimationMode,
    pub schemes: Vec<Scheme>,
    /// Index of the first candidate occupied by the DSA engines.
    pub initial_candidate: usize,
    /// Guard on enumerated candidate-set sizes.
    pub max_candidates: usize,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_as: 2,
            n_ar: 2,
            n_ad: 2,
            n_r: 3,
            n_asub: 2,
            n_rem: 1,
            n_symbols: 500,
            n_packets: 1000,
            snr_db_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            direct_gain: 0.5,
            forgetting: 0.9,
            estimation_mode: EstimationMode::Rls,
            schemes: Scheme::ALL.to_vec(),
            initial_candidate: 0,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            rng_seed: 1,
        }
    }
}

/// Closed-form quantities implied by a configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedLimits {
    /// Maximum spatial multiplexing gain.
    pub r_star: usize,
    /// Maximum diversity advantage with every relay antenna active.
    pub d_star_full: f64,
    /// Maximum diversity advantage under TDS with RS.
    pub d_star_sel: f64,
    pub omega_t_card: u128,
    pub omega_t_bar_card: u128,
    pub omega_r_card: u128,
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

impl SystemConfig {
    /// Total relay antennas, `n_ar * n_r`.
    pub fn relay_antennas(&self) -> usize {
        self.n_ar * self.n_r
    }

    /// Relay antennas left after RS removes `n_rem` relays.
    pub fn reduced_relay_antennas(&self) -> usize {
        self.n_ar * (self.n_r - self.n_rem)
    }

    /// Data stream forwarded by stacked relay antenna `antenna`.
    pub fn stream_of_antenna(&self, antenna: usize) -> usize {
        (antenna % self.n_ar) % self.n_as
    }

    /// Relay owning stacked relay antenna `antenna`.
    pub fn relay_of_antenna(&self, antenna: usize) -> usize {
        antenna / self.n_ar
    }

    /// Source amplitude; unit total transmit power over `n_as` antennas.
    pub fn source_amplitude(&self) -> f64 {
        1.0 / (self.n_as as f64).sqrt()
    }

    /// Relay amplitude; unit total power over the active relay antennas.
    pub fn relay_amplitude(&self, scheme: Scheme) -> f64 {
        let active = if scheme.uses_tds() {
            self.n_asub
        } else {
            self.relay_antennas()
        };
        1.0 / (active as f64).sqrt()
    }

    pub fn validate(&self) -> Result<DerivedLimits> {
        let counts = [
            ("n_as", self.n_as),
            ("n_ar", self.n_ar),
            ("n_ad", self.n_ad),
            ("n_r", self.n_r),
            ("n_asub", self.n_asub),
            ("n_symbols", self.n_symbols),
            ("n_packets", self.n_packets),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !self.n_ar.is_multiple_of(self.n_as) {
            return Err(Error::InvalidConfig(format!(
                "n_ar ({}) must be an integer multiple of n_as ({})",
                self.n_ar, self.n_as
            )));
        }
        if self.n_rem >= self.n_r {
            return Err(Error::InvalidConfig(format!(
                "n_rem ({}) must be smaller than n_r ({})",
                self.n_rem, self.n_r
            )));
        }
        if self.n_asub > self.reduced_relay_antennas() {
            return Err(Error::EmptyCandidateSet(format!(
                "n_asub ({}) exceeds the {} relay antennas left after removing {} relays",
                self.n_asub,
                self.reduced_relay_antennas(),
                self.n_rem
            )));
        }
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "forgetting factor {} outside (0, 1]",
                self.forgetting
            )));
        }
        if !(self.direct_gain > 0.0 && self.direct_gain <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "direct_gain {} outside (0, 1]",
                self.direct_gain
            )));
        }
        if let Some(bad) = self.snr_db_grid.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite SNR {bad}")));
        }

        let n_as = self.n_as as f64;
        let n_ar = self.n_ar as f64;
        let n_ad = self.n_ad as f64;
        Ok(DerivedLimits {
            r_star: self.n_as,
            d_star_full: n_ad * (1.0 + self.n_r as f64 * n_ar / n_as),
            d_star_sel: n_ad * (self.n_asub as f64 / n_ar + 1.0),
            omega_t_card: binomial(self.relay_antennas(), self.n_asub),
            omega_t_bar_card: binomial(self.reduced_relay_antennas(), self.n_asub),
            omega_r_card: binomial(self.n_r, self.n_rem),
        })
    }

    /// The `(n_ar * n_r) x n_as` 0/1 matrix mapping the source streams onto
    /// the stacked relay antennas: each relay repeats its decoded
    /// `n_as`-vector `n_ar / n_as` times.
    pub fn replication_matrix(&self) -> Result<CMatrix> {
        self.validate()?;
        let m = self.relay_antennas();
        Ok(CMatrix::from_fn(m, self.n_as, |row, col| {
            if self.stream_of_antenna(row) == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }
}

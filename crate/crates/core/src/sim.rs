//! Two-phase transmission per symbol and the Monte Carlo BER experiment.
//!
//! Every packet redraws the channels and restarts the RLS estimators and
//! DSA engines. All schemes of a packet see the same channels, data and
//! noise, and packet `p` uses the same physical random stream at every SNR
//! point, so scheme and SNR comparisons are paired.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    complex_gaussian, draw_channels, sounding_amplitude, ChannelSet, ChannelView, LinkEstimators,
};
use crate::model::{CVector, EstimationMode, Scheme, SelectionMethod, SystemConfig, C64};
use crate::receiver::{
    qpsk_demap, qpsk_map, stats_destination, stats_point_to_point, stats_relay, wiener,
    RelayTransmission,
};
use crate::selection::{
    dsa_step_rs, dsa_step_tds, exhaustive_rs, exhaustive_tds, CandidateSets, CostModel, DsaState,
};
use crate::{Error, Result};

/// White noise at every receive antenna.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub noise_var: f64,
}

impl NoiseModel {
    fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> CVector {
        let sigma = self.noise_var.sqrt();
        CVector::from_fn(len, |_, _| complex_gaussian(rng) * sigma)
    }
}

/// Each phase radiates unit total power, so the per-antenna noise variance
/// is `10^(-snr_db / 10)`.
pub fn snr_to_noise(snr_db: f64) -> Result<NoiseModel> {
    let noise_var = 10f64.powf(-snr_db / 10.0);
    if !snr_db.is_finite() || !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidConfig(format!("unusable SNR {snr_db} dB")));
    }
    Ok(NoiseModel { noise_var })
}

/// Bit error counts for one scheme at one SNR, either at one symbol index
/// of the packet or aggregated over the post burn-in window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    /// `None` for the aggregate record.
    pub symbol_index: Option<usize>,
    pub bit_errors: u64,
    pub bits_total: u64,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits_total as f64
    }
}

/// 32-byte ChaCha seed from the experiment seed and a purpose tag.
fn stream_rng(seed: u64, purpose: u64, stream: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&purpose.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(stream);
    rng
}

/// Immutable per-experiment data shared by all packet workers.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: SystemConfig,
    sets: CandidateSets,
    stream_of: Vec<usize>,
}

impl Simulator {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        if config.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes enabled".into()));
        }
        let sets = CandidateSets::build(&config)?;
        if config.initial_candidate >= sets.omega_r.len()
            || config.initial_candidate >= sets.omega_t.len()
        {
            return Err(Error::InvalidConfig(format!(
                "initial_candidate {} outside the candidate sets",
                config.initial_candidate
            )));
        }
        let stream_of = (0..config.relay_antennas())
            .map(|a| config.stream_of_antenna(a))
            .collect();
        Ok(Simulator {
            config,
            sets,
            stream_of,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn candidate_sets(&self) -> &CandidateSets {
        &self.sets
    }

    /// Physical random stream (channels, data, noise, pilots) of a packet.
    pub fn physical_rng(&self, packet: u64) -> ChaCha8Rng {
        stream_rng(self.config.rng_seed, 0, packet)
    }

    /// Starts a packet over `channels`, with fresh estimators and DSA state.
    pub fn start_packet(
        &self,
        channels: ChannelSet,
        noise: NoiseModel,
        packet: u64,
    ) -> Result<PacketState<'_>> {
        let init = self.config.initial_candidate;
        let schemes = self
            .config
            .schemes
            .iter()
            .map(|&scheme| {
                let (rs, tds) = match scheme {
                    Scheme::Tds(SelectionMethod::Dsa) => {
                        (None, Some(DsaState::new(self.sets.omega_t.len(), init)?))
                    }
                    Scheme::TdsRs(SelectionMethod::Dsa) => (
                        Some(DsaState::new(self.sets.omega_r.len(), init)?),
                        Some(DsaState::new(self.sets.omega_t.len(), init)?),
                    ),
                    _ => (None, None),
                };
                Ok(SchemeState {
                    scheme,
                    rs,
                    tds,
                    rng: stream_rng(self.config.rng_seed, 1 + scheme.tag(), packet),
                    selection: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let estimators = match self.config.estimation_mode {
            EstimationMode::Perfect => None,
            EstimationMode::Rls => Some(LinkEstimators::new(&self.config)),
        };
        Ok(PacketState {
            sim: self,
            channels,
            estimators,
            schemes,
            noise,
        })
    }

    /// Simulates one packet and returns the bit errors of every scheme at
    /// every symbol index.
    pub fn run_packet(&self, packet: u64, noise: NoiseModel) -> Result<PacketOutcome> {
        let mut rng = self.physical_rng(packet);
        let channels = draw_channels(&self.config, &mut rng);
        let mut state = self.start_packet(channels, noise, packet)?;
        let mut errors = vec![Vec::with_capacity(self.config.n_symbols); self.config.schemes.len()];
        for _ in 0..self.config.n_symbols {
            let outcome = state.simulate_symbol(&mut rng)?;
            for (acc, e) in errors.iter_mut().zip(&outcome.errors) {
                acc.push(*e);
            }
        }
        Ok(PacketOutcome { errors })
    }
}

/// Selection in force for one symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Selection {
    /// Index into the RS candidate set, for schemes with RS.
    pub removed: Option<usize>,
    /// Index into the full TDS candidate set.
    pub tds: usize,
}

#[derive(Clone, Debug)]
struct SchemeState {
    scheme: Scheme,
    rs: Option<DsaState>,
    tds: Option<DsaState>,
    rng: ChaCha8Rng,
    selection: Option<Selection>,
}

/// Mutable state of one packet.
pub struct PacketState<'a> {
    sim: &'a Simulator,
    channels: ChannelSet,
    estimators: Option<LinkEstimators>,
    schemes: Vec<SchemeState>,
    noise: NoiseModel,
}

/// Result of one symbol period.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolOutcome {
    pub bits: Vec<u8>,
    /// Detected bits per enabled scheme, in configuration order.
    pub detected: Vec<Vec<u8>>,
    pub errors: Vec<u32>,
    /// TDS/RS decision used by each scheme, `None` without selection.
    pub selections: Vec<Option<Selection>>,
}

/// Per-scheme, per-symbol bit errors of one packet.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketOutcome {
    pub errors: Vec<Vec<u32>>,
}

impl<'a> PacketState<'a> {
    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn estimators(&self) -> Option<&LinkEstimators> {
        self.estimators.as_ref()
    }

    pub fn dsa_states(&self, scheme: Scheme) -> Option<(Option<&DsaState>, Option<&DsaState>)> {
        self.schemes
            .iter()
            .find(|s| s.scheme == scheme)
            .map(|s| (s.rs.as_ref(), s.tds.as_ref()))
    }

    /// One symbol period: both transmission phases, detection for every
    /// scheme, selection updates and channel estimation updates.
    ///
    /// The selection used for symbol `i` is computed from the estimates
    /// available before symbol `i` is received.
    pub fn simulate_symbol<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SymbolOutcome> {
        let sim = self.sim;
        let cfg = &sim.config;
        let noise = self.noise;
        let relay_antennas = cfg.relay_antennas();

        // physical draws, always in the same order and amount
        let bits: Vec<u8> = (0..2 * cfg.n_as).map(|_| rng.random_range(0..2)).collect();
        let n_sd = noise.sample(cfg.n_ad, rng);
        let n_sr: Vec<CVector> = (0..cfg.n_r).map(|_| noise.sample(cfg.n_ar, rng)).collect();
        let n_rd = noise.sample(cfg.n_ad, rng);
        let pilot_bits: Vec<u8> = (0..2 * relay_antennas)
            .map(|_| rng.random_range(0..2))
            .collect();
        let n_sound = noise.sample(cfg.n_ad, rng);

        let a_s = cfg.source_amplitude();
        let s = qpsk_map(&bits)?;
        let tx_s = &s * C64::new(a_s, 0.0);

        // phase 1
        let ch = &self.channels;
        let r_sd = &ch.h_sd * &tx_s + n_sd;
        let r_sr: Vec<CVector> = ch
            .h_sr
            .iter()
            .zip(n_sr)
            .map(|(h, n)| h * &tx_s + n)
            .collect();

        let est: &dyn ChannelView = match &self.estimators {
            Some(e) => e,
            None => ch,
        };

        // decode-and-forward at each relay
        let decoded: Vec<CVector> = r_sr
            .iter()
            .enumerate()
            .map(|(n, r)| {
                let filter = wiener(&stats_relay(est.h_sr(n), a_s, noise.noise_var))?;
                Ok(filter.detect(r))
            })
            .collect::<Result<_>>()?;
        let forwarded: Vec<C64> = (0..relay_antennas)
            .map(|j| decoded[cfg.relay_of_antenna(j)][sim.stream_of[j]])
            .collect();

        let model = CostModel::new(cfg, est, &sim.stream_of, noise.noise_var);
        let mut detected = Vec::with_capacity(self.schemes.len());
        let mut errors = Vec::with_capacity(self.schemes.len());
        let mut selections = Vec::with_capacity(self.schemes.len());

        for state in &mut self.schemes {
            let selection = state.select(&sim.sets, &model)?;
            state.selection = selection;
            selections.push(selection);

            let soft = if state.scheme == Scheme::NonCooperative {
                let filter = wiener(&stats_point_to_point(est.h_sd(), a_s, noise.noise_var))?;
                filter.apply(&r_sd)
            } else {
                let mask = match selection {
                    Some(sel) => sim.sets.omega_t[sel.tds].mask(relay_antennas),
                    None => vec![true; relay_antennas],
                };
                let a_r = cfg.relay_amplitude(state.scheme);
                let x = CVector::from_fn(relay_antennas, |j, _| {
                    if mask[j] {
                        forwarded[j] * a_r
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                let r_rd = &ch.h_rd * x + &n_rd;
                let r_d =
                    CVector::from_iterator(cfg.n_ad * 2, r_sd.iter().chain(r_rd.iter()).copied());
                let tx = RelayTransmission {
                    active: &mask,
                    stream_of: &sim.stream_of,
                    amplitude: a_r,
                };
                let stats = stats_destination(est.h_sd(), est.h_rd(), tx, a_s, noise.noise_var);
                wiener(&stats)?.apply(&r_d)
            };
            let hat = qpsk_demap(&soft);
            errors.push(hat.iter().zip(&bits).filter(|(a, b)| a != b).count() as u32);
            detected.push(hat);
        }

        if let Some(est) = &mut self.estimators {
            est.sd.update(&tx_s, &r_sd)?;
            for (rls, r) in est.sr.iter_mut().zip(&r_sr) {
                rls.update(&tx_s, r)?;
            }
            let sounding = qpsk_map(&pilot_bits)? * C64::new(sounding_amplitude(cfg), 0.0);
            let observed = &ch.h_rd * &sounding + n_sound;
            est.rd.update(&sounding, &observed)?;
        }

        Ok(SymbolOutcome {
            bits,
            detected,
            errors,
            selections,
        })
    }
}

impl SchemeState {
    fn select(&mut self, sets: &CandidateSets, model: &CostModel<'_>) -> Result<Option<Selection>> {
        let selection = match self.scheme {
            Scheme::NonCooperative | Scheme::NoTds => None,
            Scheme::Tds(SelectionMethod::Exhaustive) => Some(Selection {
                removed: None,
                tds: exhaustive_tds(&sets.full(), model)?,
            }),
            Scheme::TdsRs(SelectionMethod::Exhaustive) => {
                let removed = exhaustive_rs(sets, model)?;
                let view = sets.reduced(Some(&sets.omega_r[removed]));
                Some(Selection {
                    removed: Some(removed),
                    tds: exhaustive_tds(&view, model)?,
                })
            }
            Scheme::Tds(SelectionMethod::Dsa) => {
                let tds = self.tds.as_mut().expect("TDS engine");
                dsa_step_tds(tds, &mut self.rng, &sets.full(), model)?;
                Some(Selection {
                    removed: None,
                    tds: tds.current(),
                })
            }
            Scheme::TdsRs(SelectionMethod::Dsa) => {
                let rs = self.rs.as_mut().expect("RS engine");
                dsa_step_rs(rs, &mut self.rng, sets, model)?;
                let removed = rs.current();
                let view = sets.reduced(Some(&sets.omega_r[removed]));
                let tds = self.tds.as_mut().expect("TDS engine");
                dsa_step_tds(tds, &mut self.rng, &view, model)?;
                Some(Selection {
                    removed: Some(removed),
                    tds: tds.current(),
                })
            }
        };
        Ok(selection)
    }
}

/// Errors of one scheme at one SNR point, kept per symbol index and per
/// packet so both curves and paired statistics can be derived.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    /// Errors summed over packets at each symbol index.
    pub symbol_errors: Vec<u64>,
    /// Errors of each packet within the aggregate window.
    pub packet_errors: Vec<u64>,
    pub bits_per_symbol: u64,
    pub window_start: usize,
}

impl SchemeResult {
    pub fn n_packets(&self) -> usize {
        self.packet_errors.len()
    }

    /// Bits per packet inside the aggregate window.
    pub fn window_bits(&self) -> u64 {
        (self.symbol_errors.len() - self.window_start) as u64 * self.bits_per_symbol
    }

    pub fn aggregate_errors(&self) -> u64 {
        self.packet_errors.iter().sum()
    }

    pub fn aggregate_bits(&self) -> u64 {
        self.window_bits() * self.n_packets() as u64
    }

    /// BER over the aggregate window (second half of the packet).
    pub fn ber(&self) -> f64 {
        self.aggregate_errors() as f64 / self.aggregate_bits() as f64
    }

    pub fn symbol_ber(&self, index: usize) -> f64 {
        self.symbol_errors[index] as f64 / (self.bits_per_symbol * self.n_packets() as u64) as f64
    }

    /// Pooled BER over a range of symbol indices.
    pub fn range_ber(&self, range: std::ops::Range<usize>) -> f64 {
        let len = range.len() as u64;
        let errors: u64 = self.symbol_errors[range].iter().sum();
        errors as f64 / (len * self.bits_per_symbol * self.n_packets() as u64) as f64
    }

    /// Per-packet BER inside the aggregate window.
    pub fn packet_bers(&self) -> impl Iterator<Item = f64> + '_ {
        let bits = self.window_bits() as f64;
        self.packet_errors.iter().map(move |e| *e as f64 / bits)
    }
}

/// Mean and standard error of the per-packet BER difference `a - b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedGap {
    pub mean: f64,
    pub std_error: f64,
}

pub fn paired_gap(a: &SchemeResult, b: &SchemeResult) -> PairedGap {
    let diffs: Vec<f64> = a
        .packet_bers()
        .zip(b.packet_bers())
        .map(|(x, y)| x - y)
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = if diffs.len() > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    PairedGap {
        mean,
        std_error: (var / n).sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub noise: NoiseModel,
    pub schemes: Vec<SchemeResult>,
}

impl SnrPoint {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeResult> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: SystemConfig,
    pub points: Vec<SnrPoint>,
}

impl ExperimentResult {
    pub fn point(&self, snr_db: f64) -> Option<&SnrPoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }

    /// Aggregate records (one per scheme and SNR) followed by per-symbol
    /// records, in configuration order.
    pub fn records(&self) -> Vec<BerRecord> {
        let mut out = Vec::new();
        for point in &self.points {
            for s in &point.schemes {
                out.push(BerRecord {
                    scheme: s.scheme,
                    snr_db: point.snr_db,
                    symbol_index: None,
                    bit_errors: s.aggregate_errors(),
                    bits_total: s.aggregate_bits(),
                });
            }
        }
        for point in &self.points {
            for s in &point.schemes {
                let bits = s.bits_per_symbol * s.n_packets() as u64;
                for (i, e) in s.symbol_errors.iter().enumerate() {
                    out.push(BerRecord {
                        scheme: s.scheme,
                        snr_db: point.snr_db,
                        symbol_index: Some(i),
                        bit_errors: *e,
                        bits_total: bits,
                    });
                }
            }
        }
        out
    }
}

/// Runs every enabled scheme over `n_packets` packets at each SNR point.
pub fn run_experiment(config: &SystemConfig) -> Result<ExperimentResult> {
    let sim = Simulator::new(config.clone())?;
    let window_start = config.n_symbols / 2;
    let bits_per_symbol = 2 * config.n_as as u64;
    let mut points = Vec::with_capacity(config.snr_db_grid.len());

    for &snr_db in &config.snr_db_grid {
        let noise = snr_to_noise(snr_db)?;
        let outcomes = (0..config.n_packets as u64)
            .into_par_iter()
            .map(|p| sim.run_packet(p, noise))
            .collect::<Result<Vec<_>>>()?;

        let schemes = config
            .schemes
            .iter()
            .enumerate()
            .map(|(k, &scheme)| {
                let mut symbol_errors = vec![0u64; config.n_symbols];
                let mut packet_errors = Vec::with_capacity(outcomes.len());
                for outcome in &outcomes {
                    let errs = &outcome.errors[k];
                    for (acc, e) in symbol_errors.iter_mut().zip(errs) {
                        *acc += *e as u64;
                    }
                    packet_errors.push(errs[window_start..].iter().map(|e| *e as u64).sum());
                }
                SchemeResult {
                    scheme,
                    symbol_errors,
                    packet_errors,
                    bits_per_symbol,
                    window_start,
                }
            })
            .collect();
        points.push(SnrPoint {
            snr_db,
            noise,
            schemes,
        });
    }
    Ok(ExperimentResult {
        config: config.clone(),
        points,
    })
}

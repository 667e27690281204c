//! QPSK mapping, linear MMSE (Wiener) receivers and the MSE cost functions
//! used by both selection problems.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::model::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Gray-mapped QPSK: bit pair `b1 b0` becomes `((1 - 2 b1) + j (1 - 2 b0)) / sqrt 2`.
pub fn qpsk_map(bits: &[u8]) -> Result<CVector> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::OddBitCount(bits.len()));
    }
    Ok(CVector::from_iterator(
        bits.len() / 2,
        bits.chunks_exact(2)
            .map(|pair| qpsk_symbol(pair[0], pair[1])),
    ))
}

fn qpsk_symbol(b1: u8, b0: u8) -> C64 {
    let level = |b: u8| if b == 0 { 1.0 } else { -1.0 };
    C64::new(level(b1), level(b0)) * FRAC_1_SQRT_2
}

fn sign(v: f64) -> f64 {
    // zero goes to the positive point
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Independent sign decisions on the real and imaginary parts.
pub fn qpsk_slice(soft: &CVector) -> CVector {
    soft.map(|v| C64::new(sign(v.re), sign(v.im)) * FRAC_1_SQRT_2)
}

/// Bits carried by each (soft or hard) symbol under the Gray map.
pub fn qpsk_demap(symbols: &CVector) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|v| [(v.re < 0.0) as u8, (v.im < 0.0) as u8])
        .collect()
}

/// Second-order statistics of a receive vector `r` and the symbol vector
/// `s` it carries.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderStats {
    /// `E[r r^H]`, `m x m`.
    pub r_auto: CMatrix,
    /// `E[r s^H]`, `m x n_as`.
    pub p_cross: CMatrix,
    /// `E[s^H s]`.
    pub sigma_s2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WienerFilter {
    pub w: CMatrix,
}

impl WienerFilter {
    /// Soft symbol estimates `W^H r`.
    pub fn apply(&self, received: &CVector) -> CVector {
        self.w.ad_mul(received)
    }

    /// Soft estimates followed by the QPSK slicer.
    pub fn detect(&self, received: &CVector) -> CVector {
        qpsk_slice(&self.apply(received))
    }
}

/// `W = R^{-1} P` by Cholesky solve.
pub fn wiener(stats: &SecondOrderStats) -> Result<WienerFilter> {
    if stats.r_auto.nrows() != stats.r_auto.ncols() || stats.r_auto.nrows() != stats.p_cross.nrows()
    {
        return Err(Error::DimensionMismatch(format!(
            "R is {:?} but P is {:?}",
            stats.r_auto.shape(),
            stats.p_cross.shape()
        )));
    }
    let chol = stats
        .r_auto
        .clone()
        .cholesky()
        .ok_or(Error::SingularAutocorrelation)?;
    let w = chol.solve(&stats.p_cross);
    if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularAutocorrelation);
    }
    Ok(WienerFilter { w })
}

/// Minimum mean square error `sigma_s^2 - trace(P^H R^{-1} P)` reached by
/// the Wiener filter.
pub fn mmse_cost(stats: &SecondOrderStats) -> Result<f64> {
    let filter = wiener(stats)?;
    Ok(cost_of(stats, &filter))
}

/// Filter and its MSE from one factorization.
pub fn wiener_with_cost(stats: &SecondOrderStats) -> Result<(WienerFilter, f64)> {
    let filter = wiener(stats)?;
    let cost = cost_of(stats, &filter);
    Ok((filter, cost))
}

fn cost_of(stats: &SecondOrderStats, filter: &WienerFilter) -> f64 {
    // trace(P^H W) without forming the product
    let captured: f64 = stats
        .p_cross
        .iter()
        .zip(filter.w.iter())
        .map(|(p, w)| (p.conj() * w).re)
        .sum();
    // rounding can push a near-perfect receiver slightly negative
    (stats.sigma_s2 - captured).max(0.0)
}

/// Statistics of `r = amplitude * H s + n` with unit-energy independent
/// streams and white noise of variance `noise_var` per antenna.
pub fn stats_point_to_point(h: &CMatrix, amplitude: f64, noise_var: f64) -> SecondOrderStats {
    let m = h.nrows();
    let scaled = h * C64::new(amplitude, 0.0);
    let mut r_auto = &scaled * scaled.adjoint();
    for i in 0..m {
        r_auto[(i, i)] += C64::new(noise_var, 0.0);
    }
    SecondOrderStats {
        r_auto,
        p_cross: scaled,
        sigma_s2: h.ncols() as f64,
    }
}

/// Statistics at relay `n` from its channel estimate `h_sr`:
/// `R = A_s^2 H H^H + sigma^2 I`, `P = A_s H`, `sigma_s^2 = n_as`.
pub fn stats_relay(h_sr: &CMatrix, a_s: f64, noise_var: f64) -> SecondOrderStats {
    stats_point_to_point(h_sr, a_s, noise_var)
}

/// Which relay antennas forward, and which stream each one carries.
#[derive(Clone, Copy, Debug)]
pub struct RelayTransmission<'a> {
    /// `active[j]` is true when stacked relay antenna `j` transmits.
    pub active: &'a [bool],
    /// `stream_of[j]` is the stream forwarded by antenna `j` (the position
    /// of the one in row `j` of the replication matrix).
    pub stream_of: &'a [usize],
    pub amplitude: f64,
}

/// Effective channel from the source streams to the stacked destination
/// observation `[r_sd; r_rd]`, assuming the relays decode correctly:
/// `[A_s H_sd ; A_r H_rd T G]`.
pub fn effective_destination_channel(
    h_sd: &CMatrix,
    h_rd: &CMatrix,
    tx: RelayTransmission<'_>,
    a_s: f64,
) -> CMatrix {
    let n_ad = h_sd.nrows();
    let n_as = h_sd.ncols();
    let mut eff = CMatrix::zeros(n_ad + h_rd.nrows(), n_as);
    eff.rows_mut(0, n_ad)
        .copy_from(&(h_sd * C64::new(a_s, 0.0)));
    let a_r = C64::new(tx.amplitude, 0.0);
    for (antenna, _) in tx.active.iter().enumerate().filter(|(_, on)| **on) {
        let stream = tx.stream_of[antenna];
        for row in 0..h_rd.nrows() {
            eff[(n_ad + row, stream)] += h_rd[(row, antenna)] * a_r;
        }
    }
    eff
}

/// Destination statistics for the stacked observation under the given relay
/// transmission, with `R = H_eff H_eff^H + sigma^2 I` and `P = H_eff`.
pub fn stats_destination(
    h_sd: &CMatrix,
    h_rd: &CMatrix,
    tx: RelayTransmission<'_>,
    a_s: f64,
    noise_var: f64,
) -> SecondOrderStats {
    let eff = effective_destination_channel(h_sd, h_rd, tx, a_s);
    stats_point_to_point(&eff, 1.0, noise_var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, gaussian_matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn scalar_stats(r: f64, p: f64, s2: f64) -> SecondOrderStats {
        SecondOrderStats {
            r_auto: CMatrix::from_element(1, 1, real(r)),
            p_cross: CMatrix::from_element(1, 1, real(p)),
            sigma_s2: s2,
        }
    }

    #[test]
    fn qpsk_constellation() {
        let s = qpsk_map(&[0, 0, 0, 1, 1, 0, 1, 1]).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_eq!(s[0], C64::new(h, h));
        assert_eq!(s[1], C64::new(h, -h));
        assert_eq!(s[2], C64::new(-h, h));
        assert_eq!(s[3], C64::new(-h, -h));
        assert_eq!(qpsk_slice(&s), s);
        assert_eq!(qpsk_demap(&s), vec![0, 0, 0, 1, 1, 0, 1, 1]);
        assert!(matches!(qpsk_map(&[0, 1, 1]), Err(Error::OddBitCount(3))));
    }

    #[test]
    fn slicer_sign_rule() {
        let soft = CVector::from_element(1, C64::new(0.3, -0.7));
        let h = FRAC_1_SQRT_2;
        assert_eq!(qpsk_slice(&soft)[0], C64::new(h, -h));
    }

    #[test]
    fn wiener_identity_and_scalar_cases() {
        let eye = CMatrix::identity(3, 3);
        let stats = SecondOrderStats {
            r_auto: eye.clone(),
            p_cross: eye.clone(),
            sigma_s2: 3.0,
        };
        assert!((wiener(&stats).unwrap().w - &eye).norm() < 1e-14);

        let stats = SecondOrderStats {
            r_auto: &eye * real(2.0),
            p_cross: eye.clone(),
            sigma_s2: 3.0,
        };
        assert!((wiener(&stats).unwrap().w - &eye * real(0.5)).norm() < 1e-14);

        assert!((mmse_cost(&scalar_stats(2.0, 1.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(mmse_cost(&scalar_stats(2.0, 0.0, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn wiener_solves_random_hermitian_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = gaussian_matrix(4, 4, &mut rng);
            let r = &a * a.adjoint() + CMatrix::identity(4, 4) * real(0.1);
            let p = gaussian_matrix(4, 2, &mut rng);
            let stats = SecondOrderStats {
                r_auto: r.clone(),
                p_cross: p.clone(),
                sigma_s2: 2.0,
            };
            let w = wiener(&stats).unwrap().w;
            // independent check through a general LU solve
            let lu = r.clone().lu().solve(&p).unwrap();
            assert!((&r * &w - &p).norm() < 1e-10);
            assert!((&w - lu).norm() < 1e-10);
        }
    }

    #[test]
    fn singular_autocorrelation_is_reported() {
        let stats = SecondOrderStats {
            r_auto: CMatrix::zeros(2, 2),
            p_cross: CMatrix::zeros(2, 1),
            sigma_s2: 1.0,
        };
        assert_eq!(wiener(&stats), Err(Error::SingularAutocorrelation));
        let bad = SecondOrderStats {
            r_auto: CMatrix::identity(2, 2),
            p_cross: CMatrix::zeros(3, 1),
            sigma_s2: 1.0,
        };
        assert!(matches!(wiener(&bad), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn relay_stats_examples() {
        let zero = CMatrix::zeros(2, 2);
        assert!((mmse_cost(&stats_relay(&zero, 0.7, 0.3)).unwrap() - 2.0).abs() < 1e-15);
        let one = CMatrix::identity(1, 1);
        assert!((mmse_cost(&stats_relay(&one, 1.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    fn all_on(m: usize) -> Vec<bool> {
        vec![true; m]
    }

    #[test]
    fn destination_scalar_relay_case() {
        let one = CMatrix::identity(1, 1);
        let active = all_on(1);
        let tx = RelayTransmission {
            active: &active,
            stream_of: &[0],
            amplitude: 1.0,
        };
        let stats = stats_destination(&one, &one, tx, 1.0, 1.0);
        assert_eq!(stats.p_cross, CMatrix::from_element(2, 1, real(1.0)));
        // h^H (h h^H + I)^{-1} h = |h|^2 / (1 + |h|^2) = 2/3
        let cost = mmse_cost(&stats).unwrap();
        assert!((cost - 1.0 / 3.0).abs() < 1e-14, "cost {cost}");
    }

    #[test]
    fn silent_relays_reduce_to_direct_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h_sd = gaussian_matrix(2, 2, &mut rng);
        let h_rd = gaussian_matrix(2, 6, &mut rng);
        let off = vec![false; 6];
        let tx = RelayTransmission {
            active: &off,
            stream_of: &[0, 1, 0, 1, 0, 1],
            amplitude: 1.0,
        };
        let a_s = FRAC_1_SQRT_2;
        let stacked = mmse_cost(&stats_destination(&h_sd, &h_rd, tx, a_s, 0.2)).unwrap();
        let direct = mmse_cost(&stats_point_to_point(&h_sd, a_s, 0.2)).unwrap();
        assert!((stacked - direct).abs() < 1e-12);
    }

    fn destination_cost(h_sd: &CMatrix, h_rd: &CMatrix, active: &[bool]) -> f64 {
        let tx = RelayTransmission {
            active,
            stream_of: &[0, 1, 0, 1, 0, 1],
            amplitude: 0.5,
        };
        mmse_cost(&stats_destination(h_sd, h_rd, tx, FRAC_1_SQRT_2, 0.1)).unwrap()
    }

    /// Relays share the destination antennas, so activating more of them is
    /// not monotone in the MSE: a second copy of a stream can cancel the first.
    #[test]
    fn same_stream_copies_can_cancel() {
        let h_sd = CMatrix::identity(2, 2) * real(0.5);
        let mut h_rd = CMatrix::zeros(2, 6);
        h_rd[(0, 0)] = real(1.0);
        h_rd[(0, 2)] = real(-1.0);
        let one = [true, false, false, false, false, false];
        let two = [true, false, true, false, false, false];
        assert!(destination_cost(&h_sd, &h_rd, &two) > destination_cost(&h_sd, &h_rd, &one));
    }

    /// Sample MSE of a filter over synthetic data drawn from the model
    /// `r = A H s + n`.
    fn sample_mse(
        h: &CMatrix,
        amplitude: f64,
        noise_var: f64,
        w: &CMatrix,
        draws: usize,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        let (m, k) = h.shape();
        let mut total = 0.0;
        for _ in 0..draws {
            let bits: Vec<u8> = (0..2 * k).map(|_| rng.random_range(0..2)).collect();
            let s = qpsk_map(&bits).unwrap();
            let noise = CVector::from_fn(m, |_, _| complex_gaussian(rng) * noise_var.sqrt());
            let r = h * &s * real(amplitude) + noise;
            total += (&s - w.ad_mul(&r)).norm_squared();
        }
        total / draws as f64
    }

    #[test]
    fn cost_matches_monte_carlo_mse() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..3 {
            let h = gaussian_matrix(3, 2, &mut rng);
            let stats = stats_relay(&h, FRAC_1_SQRT_2, 0.3);
            let (filter, cost) = wiener_with_cost(&stats).unwrap();
            let mse = sample_mse(&h, FRAC_1_SQRT_2, 0.3, &filter.w, 200_000, &mut rng);
            assert!((mse - cost).abs() / cost < 0.01, "mse {mse} vs cost {cost}");

            // scaled matched filter P / sigma_s^2 never beats the Wiener filter
            let matched = &stats.p_cross / real(stats.sigma_s2);
            let mf = sample_mse(&h, FRAC_1_SQRT_2, 0.3, &matched, 50_000, &mut rng);
            assert!(mf >= mse * 0.99);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cost_is_bounded(seed in any::<u64>(), noise in 1e-3f64..10.0, rows in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let h = gaussian_matrix(rows, 2, &mut rng);
                let cost = mmse_cost(&stats_relay(&h, FRAC_1_SQRT_2, noise)).unwrap();
                prop_assert!(cost > 0.0);
                prop_assert!(cost <= 2.0 + 1e-12);
            }
        }
    }
}

//! Block-fading channel realizations and RLS channel estimation.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{CMatrix, CVector, SystemConfig, C64};
use crate::{Error, Result};

/// Read access to a full set of link matrices, either the true channels or
/// the receivers' current estimates of them.
pub trait ChannelView {
    /// Source-destination channel, `n_ad x n_as`.
    fn h_sd(&self) -> &CMatrix;
    /// Source to relay `relay` channel, `n_ar x n_as`.
    fn h_sr(&self, relay: usize) -> &CMatrix;
    /// Stacked relay-destination channel, `n_ad x (n_ar * n_r)`, one column
    /// block per relay.
    fn h_rd(&self) -> &CMatrix;
}

/// One packet's channel realization. Constant for every symbol of the packet.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h_sd: CMatrix,
    pub h_sr: Vec<CMatrix>,
    pub h_rd: CMatrix,
}

impl ChannelView for ChannelSet {
    fn h_sd(&self) -> &CMatrix {
        &self.h_sd
    }

    fn h_sr(&self, relay: usize) -> &CMatrix {
        &self.h_sr[relay]
    }

    fn h_rd(&self) -> &CMatrix {
        &self.h_rd
    }
}

/// Circularly symmetric complex Gaussian sample with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill, fixed draw order
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Draws Rayleigh flat-fading channels for every link. Relayed links have
/// unit-variance entries; the direct link is scaled by `direct_gain`.
pub fn draw_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> ChannelSet {
    let h_sd = gaussian_matrix(config.n_ad, config.n_as, rng) * C64::new(config.direct_gain, 0.0);
    let h_sr = (0..config.n_r)
        .map(|_| gaussian_matrix(config.n_ar, config.n_as, rng))
        .collect();
    let h_rd = gaussian_matrix(config.n_ad, config.relay_antennas(), rng);
    ChannelSet { h_sd, h_sr, h_rd }
}

/// Exponentially weighted RLS estimator of a MIMO link `y = H x + n`.
///
/// All rows of `H` share the regressor `x`, so a single inverse correlation
/// matrix serves the whole link.
#[derive(Clone, Debug, PartialEq)]
pub struct RlsEstimator {
    h_hat: CMatrix,
    p_inv: CMatrix,
    forgetting: f64,
}

impl RlsEstimator {
    /// Zero channel estimate and identity inverse correlation.
    pub fn new(rows: usize, cols: usize, forgetting: f64) -> Self {
        RlsEstimator {
            h_hat: CMatrix::zeros(rows, cols),
            p_inv: CMatrix::identity(cols, cols),
            forgetting,
        }
    }

    pub fn estimate(&self) -> &CMatrix {
        &self.h_hat
    }

    pub fn inverse_correlation(&self) -> &CMatrix {
        &self.p_inv
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    /// Folds in one observation of `observed = H * regressor + noise`.
    pub fn update(&mut self, regressor: &CVector, observed: &CVector) -> Result<()> {
        if regressor.len() != self.h_hat.ncols() || observed.len() != self.h_hat.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "RLS for a {}x{} link got regressor of length {} and observation of length {}",
                self.h_hat.nrows(),
                self.h_hat.ncols(),
                regressor.len(),
                observed.len()
            )));
        }
        let lambda = self.forgetting;
        let px = &self.p_inv * regressor;
        let denom = lambda + regressor.dotc(&px).re;
        let gain = px / C64::new(denom, 0.0);
        let error = observed - &self.h_hat * regressor;
        self.h_hat += &error * gain.adjoint();

        // x^H P = (P x)^H since P is Hermitian
        let correction = &gain * (&self.p_inv * regressor).adjoint();
        self.p_inv -= correction;
        self.p_inv /= C64::new(lambda, 0.0);
        let hermitian = (&self.p_inv + self.p_inv.adjoint()) * C64::new(0.5, 0.0);
        self.p_inv = hermitian;
        Ok(())
    }
}

/// How second-phase pilots are presented to the destination's estimator of
/// the stacked relay-destination channel.
///
/// Each relay antenna sends an independent known QPSK sounding symbol at
/// amplitude `1 / sqrt(n_ar * n_r)`, so every column of the stacked channel
/// is excited regardless of which antennas currently forward data.
pub fn sounding_amplitude(config: &SystemConfig) -> f64 {
    1.0 / (config.relay_antennas() as f64).sqrt()
}

/// The per-packet set of RLS estimators, one per link. Relay `n` owns
/// `sr[n]`; the destination owns `sd` and `rd`.
#[derive(Clone, Debug)]
pub struct LinkEstimators {
    pub sd: RlsEstimator,
    pub sr: Vec<RlsEstimator>,
    pub rd: RlsEstimator,
}

impl LinkEstimators {
    pub fn new(config: &SystemConfig) -> Self {
        let lambda = config.forgetting;
        LinkEstimators {
            sd: RlsEstimator::new(config.n_ad, config.n_as, lambda),
            sr: (0..config.n_r)
                .map(|_| RlsEstimator::new(config.n_ar, config.n_as, lambda))
                .collect(),
            rd: RlsEstimator::new(config.n_ad, config.relay_antennas(), lambda),
        }
    }
}

impl ChannelView for LinkEstimators {
    fn h_sd(&self) -> &CMatrix {
        self.sd.estimate()
    }

    fn h_sr(&self, relay: usize) -> &CMatrix {
        self.sr[relay].estimate()
    }

    fn h_rd(&self) -> &CMatrix {
        self.rd.estimate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cvec(values: &[f64]) -> CVector {
        CVector::from_iterator(values.len(), values.iter().map(|v| C64::new(*v, 0.0)))
    }

    #[test]
    fn scalar_update_by_hand() {
        let mut rls = RlsEstimator::new(1, 1, 1.0);
        rls.update(&cvec(&[1.0]), &cvec(&[1.0])).unwrap();
        assert!((rls.estimate()[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        // P = (1 - 1/2) / 1
        assert!((rls.inverse_correlation()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_observations_keep_zero_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rls = RlsEstimator::new(2, 3, 0.9);
        for _ in 0..200 {
            let x = CVector::from_fn(3, |_, _| complex_gaussian(&mut rng));
            rls.update(&x, &CVector::zeros(2)).unwrap();
        }
        assert_eq!(rls.estimate().norm(), 0.0);
    }

    #[test]
    fn noiseless_link_identified_from_orthogonal_pilots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = gaussian_matrix(2, 2, &mut rng);
        let lambda: f64 = 0.9;
        let mut rls = RlsEstimator::new(2, 2, lambda);
        let pilots = [cvec(&[1.0, 1.0]), cvec(&[1.0, -1.0])];
        let steps = 50;
        for i in 0..steps {
            let x = &pilots[i % 2];
            rls.update(x, &(&h * x)).unwrap();
        }
        let rel = (rls.estimate() - &h).norm() / h.norm();
        assert!(rel < 1e-3, "relative error {rel}");

        // batch oracle: exponentially weighted LS regularized by the
        // identity initialization, (sum w y x^H)(sum w x x^H + lambda^n I)^{-1}
        let mut cross = CMatrix::zeros(2, 2);
        let mut gram = CMatrix::identity(2, 2) * C64::new(lambda.powi(steps as i32), 0.0);
        for i in 0..steps {
            let x = &pilots[i % 2];
            let w = C64::new(lambda.powi((steps - 1 - i) as i32), 0.0);
            cross += (&h * x) * x.adjoint() * w;
            gram += x * x.adjoint() * w;
        }
        let batch = cross * gram.try_inverse().unwrap();
        assert!((rls.estimate() - batch).norm() < 1e-10);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let mut rls = RlsEstimator::new(2, 2, 0.9);
        assert!(matches!(
            rls.update(&cvec(&[1.0]), &cvec(&[1.0, 1.0])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(rls.update(&cvec(&[1.0, 0.0]), &cvec(&[1.0])).is_err());
    }

    #[test]
    fn inverse_correlation_stays_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = gaussian_matrix(3, 4, &mut rng);
        let mut rls = RlsEstimator::new(3, 4, 0.9);
        for _ in 0..500 {
            let x = CVector::from_fn(4, |_, _| complex_gaussian(&mut rng));
            let noise = CVector::from_fn(3, |_, _| complex_gaussian(&mut rng) * 0.1);
            rls.update(&x, &(&h * &x + noise)).unwrap();
            let p = rls.inverse_correlation();
            assert_eq!(p, &p.adjoint());
            assert!(p.diagonal().iter().all(|d| d.re > 0.0));
        }
    }

    #[test]
    fn draws_are_seed_deterministic() {
        let cfg = SystemConfig::default();
        let a = draw_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = draw_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.h_sd.shape(), (cfg.n_ad, cfg.n_as));
        assert_eq!(a.h_sr.len(), cfg.n_r);
        assert_eq!(a.h_sr[0].shape(), (cfg.n_ar, cfg.n_as));
        assert_eq!(a.h_rd.shape(), (cfg.n_ad, cfg.relay_antennas()));
    }

    #[test]
    fn channel_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (gain, expected, tol) in [(1.0, 1.0, 0.02), (0.5, 0.25, 0.01)] {
            let cfg = SystemConfig {
                n_as: 1,
                n_ar: 1,
                n_ad: 1,
                n_r: 1,
                n_asub: 1,
                n_rem: 0,
                direct_gain: gain,
                ..SystemConfig::default()
            };
            let draws = 100_000;
            let (mut sd, mut sr) = (0.0, 0.0);
            for _ in 0..draws {
                let ch = draw_channels(&cfg, &mut rng);
                sd += ch.h_sd[(0, 0)].norm_sqr();
                sr += ch.h_sr[0][(0, 0)].norm_sqr();
            }
            let (sd, sr) = (sd / draws as f64, sr / draws as f64);
            assert!((sd - expected).abs() < tol, "direct power {sd}");
            assert!((sr - 1.0).abs() < 0.02, "relay power {sr}");
        }
    }

    #[test]
    fn estimation_error_non_increasing_once_excited() {
        // noiseless static link with random QPSK-like pilots
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = gaussian_matrix(2, 2, &mut rng);
            let mut rls = RlsEstimator::new(2, 2, 0.9);
            let mut last = f64::INFINITY;
            for step in 0..40 {
                let x = CVector::from_fn(2, |_, _| {
                    let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                });
                rls.update(&x, &(&h * &x)).unwrap();
                let err = (rls.estimate() - &h).norm();
                if step >= 2 {
                    assert!(
                        err <= last * (1.0 + 1e-9) + 1e-12,
                        "seed {seed} step {step}"
                    );
                }
                last = err;
            }
        }
    }
}

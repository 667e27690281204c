//! Analytic complex-multiplication counts per time instant.

use serde::Serialize;

use crate::model::{binomial, Scheme, SelectionMethod, SystemConfig};
use crate::Result;

/// How operations are charged. Reported alongside every count.
pub const COUNTING_CONVENTION: &str =
    "dense as-written algebra: an a x b by b x c product costs a*b*c, \
an n x n inversion costs n^3, scalar scalings are free; the relay transmit covariance \
T (G G^H) T^H is formed with dense M x M matrices, M being the relay antennas under \
consideration; each candidate evaluation is one Wiener synthesis plus its MSE trace; every \
scheme also pays MMSE reception (all relay filters, the destination filter and filtering)";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub scheme: Scheme,
    /// Candidate cost evaluations per time instant.
    pub evaluations: u128,
    pub multiplications: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub convention: &'static str,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityReport {
    pub fn get(&self, scheme: Scheme) -> Option<&ComplexityRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }
}

struct Dims {
    k: u128,
    n_ar: u128,
    n_ad: u128,
    n_r: u128,
    n_rem: u128,
    stacked: u128,
}

impl Dims {
    fn new(config: &SystemConfig) -> Self {
        Dims {
            k: config.n_as as u128,
            n_ar: config.n_ar as u128,
            n_ad: config.n_ad as u128,
            n_r: config.n_r as u128,
            n_rem: config.n_rem as u128,
            stacked: 2 * config.n_ad as u128,
        }
    }

    /// Wiener synthesis and MSE at one relay.
    fn relay_eval(&self) -> u128 {
        let (n, k) = (self.n_ar, self.k);
        n * k * n // H H^H
            + n * n * n // inversion
            + n * n * k // R^{-1} P
            + n * k // trace(P^H W)
    }

    /// One RS candidate: the summed MSE of `n_rem` relays.
    fn rs_eval(&self) -> u128 {
        self.n_rem * self.relay_eval()
    }

    /// One TDS candidate with `m` relay antennas under consideration.
    fn tds_eval(&self, m: u128) -> u128 {
        let (k, d, s) = (self.k, self.n_ad, self.stacked);
        m * k * m // G G^H
            + 2 * m * m * m // T (G G^H) T^H
            + d * m * m // H C
            + d * m * d // (H C) H^H
            + d * m * m + d * m * k // H T G
            + d * k * d // H_sd H_sd^H
            + d * k * d // cross block
            + s * s * s // inversion
            + s * s * k // R^{-1} P
            + s * k // trace(P^H W)
    }

    fn reception(&self, m: u128) -> u128 {
        self.n_r * (self.relay_eval() + self.n_ar * self.k)
            + self.tds_eval(m)
            + self.stacked * self.k
    }
}

/// Counts for exhaustive TDS, exhaustive TDS with RS, iterative TDS and
/// iterative TDS with RS, in that order.
pub fn complexity_report(config: &SystemConfig) -> Result<ComplexityReport> {
    let limits = config.validate()?;
    let dims = Dims::new(config);
    let full = config.relay_antennas() as u128;
    let reduced = config.reduced_relay_antennas() as u128;
    let omega_r = binomial(config.n_r, config.n_rem);

    let row = |scheme, evaluations, multiplications| ComplexityRow {
        scheme,
        evaluations,
        multiplications,
    };
    let rows = vec![
        row(
            Scheme::Tds(SelectionMethod::Exhaustive),
            limits.omega_t_card,
            dims.reception(full)
                .saturating_add(limits.omega_t_card.saturating_mul(dims.tds_eval(full))),
        ),
        row(
            Scheme::TdsRs(SelectionMethod::Exhaustive),
            omega_r + limits.omega_t_bar_card,
            dims.reception(reduced)
                .saturating_add(omega_r * dims.rs_eval())
                .saturating_add(
                    limits
                        .omega_t_bar_card
                        .saturating_mul(dims.tds_eval(reduced)),
                ),
        ),
        row(
            Scheme::Tds(SelectionMethod::Dsa),
            2,
            dims.reception(full) + 2 * dims.tds_eval(full),
        ),
        row(
            Scheme::TdsRs(SelectionMethod::Dsa),
            4,
            dims.reception(reduced) + 2 * dims.rs_eval() + 2 * dims.tds_eval(reduced),
        ),
    ];
    Ok(ComplexityReport {
        convention: COUNTING_CONVENTION,
        rows,
    })
}

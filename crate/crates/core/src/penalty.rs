//! Penalty regimes as explicit cumulative curves `P(k)`, `k = 1..=p`.

use serde::{Deserialize, Serialize};

use crate::chisq;
use crate::error::{Error, Result};
use crate::model::{DetectorConfig, Regime};

/// Cumulative penalty `P(k) = alpha + beta_1 + ... + beta_k` together with the
/// point penalty `beta'` and the lag penalty `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyFunction {
    alpha: f64,
    beta: Vec<f64>,
    cumulative: Vec<f64>,
    beta_prime: f64,
    gamma: f64,
    provenance: Regime,
    uniform_beta: bool,
}

impl PenaltyFunction {
    /// Penalty from `alpha` and the first differences `beta`.
    pub fn from_alpha_beta(
        alpha: f64,
        beta: Vec<f64>,
        beta_prime: f64,
        provenance: Regime,
    ) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Config("penalty needs at least one component".into()));
        }
        let cumulative = beta
            .iter()
            .scan(alpha, |acc, b| {
                *acc += b;
                Some(*acc)
            })
            .collect();
        let uniform_beta = beta.iter().all(|b| *b == beta[0]);
        let out = Self {
            alpha,
            beta,
            cumulative,
            beta_prime,
            gamma: 0.0,
            provenance,
            uniform_beta,
        };
        out.check()?;
        Ok(out)
    }

    /// Penalty stored directly as a cumulative curve; `alpha` is 0 and `beta`
    /// holds the first differences with `beta_1 = P(1)`.
    pub fn from_cumulative(
        cumulative: Vec<f64>,
        beta_prime: f64,
        provenance: Regime,
    ) -> Result<Self> {
        if cumulative.is_empty() {
            return Err(Error::Config("penalty needs at least one component".into()));
        }
        let beta = std::iter::once(cumulative[0])
            .chain(cumulative.windows(2).map(|w| w[1] - w[0]))
            .collect();
        let out = Self {
            alpha: 0.0,
            beta,
            cumulative,
            beta_prime,
            gamma: 0.0,
            provenance,
            uniform_beta: false,
        };
        out.check()?;
        Ok(out)
    }

    fn check(&self) -> Result<()> {
        let finite = self.alpha.is_finite()
            && self.beta_prime.is_finite()
            && self.gamma.is_finite()
            && self.cumulative.iter().all(|c| c.is_finite());
        if !finite {
            return Err(Error::Numerical("penalty curve is not finite".into()));
        }
        if self.beta_prime < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config(
                "point and lag penalties must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.cumulative.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `P(k)` for `k` in `1..=p`.
    pub fn at(&self, k: usize) -> f64 {
        self.cumulative[k - 1]
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta_prime
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn provenance(&self) -> Regime {
        self.provenance
    }

    /// The common `beta` when every `beta_i` is equal, which lets the penalised
    /// saving threshold savings instead of sorting them.
    pub fn uniform_beta(&self) -> Option<f64> {
        self.uniform_beta.then_some(self.beta[0])
    }

    /// Largest value of the curve; equals `P(p)` for nondecreasing curves.
    pub fn max_cumulative(&self) -> f64 {
        self.cumulative
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.cumulative.windows(2).all(|w| w[1] >= w[0])
    }

    /// Multiply `alpha`, every `beta_i` and `beta'` by `c`. `gamma` is unchanged.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha: self.alpha * c,
            beta: self.beta.iter().map(|b| b * c).collect(),
            cumulative: self.cumulative.iter().map(|v| v * c).collect(),
            beta_prime: self.beta_prime * c,
            ..self.clone()
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_beta_prime(mut self, beta_prime: f64) -> Self {
        self.beta_prime = beta_prime;
        self
    }
}

fn check_psi(psi: f64) -> Result<()> {
    if psi.is_finite() && psi >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("psi must be nonnegative, got {psi}")))
    }
}

fn check_p(p: usize) -> Result<()> {
    if p >= 1 {
        Ok(())
    } else {
        Err(Error::Config("need at least one component".into()))
    }
}

/// `beta' = 2 ln p + 2 psi`.
pub fn point_penalty(p: usize, psi: f64) -> f64 {
    2.0 * (p as f64).ln() + 2.0 * psi
}

/// Single global penalty: `alpha = p + 2 sqrt(p psi) + 2 psi`, `beta = 0`.
pub fn regime1(p: usize, psi: f64) -> Result<PenaltyFunction> {
    check_p(p)?;
    check_psi(psi)?;
    let pf = p as f64;
    let alpha = pf + 2.0 * (pf * psi).sqrt() + 2.0 * psi;
    PenaltyFunction::from_alpha_beta(alpha, vec![0.0; p], point_penalty(p, psi), Regime::R1)
}

/// Sparse regime: `alpha = 2 (1 + eps) psi`, `beta_m = 2 ln p`.
pub fn regime2(p: usize, psi: f64, epsilon: f64) -> Result<PenaltyFunction> {
    check_p(p)?;
    check_psi(psi)?;
    let alpha = 2.0 * (1.0 + epsilon) * psi;
    let beta = 2.0 * (p as f64).ln();
    PenaltyFunction::from_alpha_beta(alpha, vec![beta; p], point_penalty(p, psi), Regime::R2)
}

/// Intermediate regime built from chi-squared quantiles. The whole budget is
/// carried by `beta` (`alpha = 0`):
///
/// `P(m) = 2(psi + ln p) + m + 2p a f(a) + 2 sqrt((m + 2p a f(a)) (psi + ln p))`
/// with `P(chi2_1 > a) = m / p`.
pub fn regime3(p: usize, psi: f64) -> Result<PenaltyFunction> {
    check_p(p)?;
    check_psi(psi)?;
    let pf = p as f64;
    let budget = psi + pf.ln();
    let cumulative = (1..=p)
        .map(|m| {
            let a = chisq::quantile(m as f64 / pf)?;
            let inner = m as f64 + 2.0 * pf * chisq::x_pdf(a);
            Ok(2.0 * budget + inner + 2.0 * (inner * budget).sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    PenaltyFunction::from_cumulative(cumulative, point_penalty(p, psi), Regime::R3)
}

/// Pointwise minimum of regimes 1, 2 and 3.
pub fn composite(p: usize, psi: f64, epsilon: f64) -> Result<PenaltyFunction> {
    let r1 = regime1(p, psi)?;
    let r2 = regime2(p, psi, epsilon)?;
    let r3 = regime3(p, psi)?;
    let cumulative = (0..p)
        .map(|k| r1.cumulative[k].min(r2.cumulative[k]).min(r3.cumulative[k]))
        .collect();
    PenaltyFunction::from_cumulative(cumulative, point_penalty(p, psi), Regime::Composite)
}

/// Sparse regime corrected for lags up to `w`:
/// `alpha = 2 (1 + eps) psi`, `beta_m = 2 (1 + eps) (ln p + ln (w + 1))`.
pub fn regime2_lagged(p: usize, psi: f64, epsilon: f64, w: usize) -> Result<PenaltyFunction> {
    check_p(p)?;
    check_psi(psi)?;
    let alpha = 2.0 * (1.0 + epsilon) * psi;
    let beta = 2.0 * (1.0 + epsilon) * ((p as f64).ln() + ((w + 1) as f64).ln());
    PenaltyFunction::from_alpha_beta(alpha, vec![beta; p], point_penalty(p, psi), Regime::R2Lag)
}

/// Sparse/dense threshold `k* = sqrt(p) psi / ln p`.
pub fn theorem1_threshold(p: usize, psi: f64) -> f64 {
    let pf = p as f64;
    pf.sqrt() * psi / pf.ln()
}

/// Penalty of the consistency result:
/// `C psi + C m ln p` for `m <= k*`, and `p + C psi + C sqrt(p psi)` above.
/// The branches need not meet at `k*`, so the curve may decrease there.
pub fn theorem1_regime(p: usize, psi: f64, c: f64) -> Result<PenaltyFunction> {
    if p < 2 {
        return Err(Error::Config("theorem-1 penalty needs p >= 2".into()));
    }
    check_psi(psi)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("constant must be positive, got {c}")));
    }
    let pf = p as f64;
    let k_star = theorem1_threshold(p, psi);
    let dense = pf + c * psi + c * (pf * psi).sqrt();
    let cumulative = (1..=p)
        .map(|m| {
            if m as f64 <= k_star {
                c * psi + c * m as f64 * pf.ln()
            } else {
                dense
            }
        })
        .collect();
    PenaltyFunction::from_cumulative(cumulative, point_penalty(p, psi), Regime::Theorem1)
}

/// Jump of the theorem-1 curve at `k*`: dense branch minus sparse branch,
/// both evaluated at `m = k*`.
pub fn theorem1_continuity_gap(p: usize, psi: f64, c: f64) -> f64 {
    let pf = p as f64;
    let k_star = theorem1_threshold(p, psi);
    let sparse = c * psi + c * k_star * pf.ln();
    let dense = pf + c * psi + c * (pf * psi).sqrt();
    dense - sparse
}

/// Signal strength of a window with common shift `mu` on `affected`
/// components.
pub fn signal_strength(mu: f64, affected: usize, p: usize, psi: f64) -> f64 {
    let j = affected as f64;
    let pf = p as f64;
    if j <= theorem1_threshold(p, psi) {
        mu * mu / (pf.ln() + psi / j)
    } else {
        mu * mu / ((pf * psi).sqrt() / j + psi / j)
    }
}

/// `gamma = 2 (1 + eps) ln (w + 1)`, the lag penalty used alongside regime 2.
pub fn default_gamma(epsilon: f64, w: usize) -> f64 {
    2.0 * (1.0 + epsilon) * ((w + 1) as f64).ln()
}

/// Build the scaled penalty a configuration asks for.
pub fn build(cfg: &DetectorConfig, p: usize) -> Result<PenaltyFunction> {
    let base = match cfg.regime {
        Regime::R1 => regime1(p, cfg.psi)?,
        Regime::R2 => regime2(p, cfg.psi, cfg.epsilon)?,
        Regime::R3 => regime3(p, cfg.psi)?,
        Regime::Composite => composite(p, cfg.psi, cfg.epsilon)?,
        Regime::R2Lag => regime2_lagged(p, cfg.psi, cfg.epsilon, cfg.max_lag)?,
        Regime::Theorem1 => theorem1_regime(p, cfg.psi, cfg.theorem1_c)?,
    };
    let gamma = match (cfg.gamma, cfg.regime) {
        (Some(g), _) => g,
        (None, Regime::R2Lag) => 0.0,
        (None, _) if cfg.max_lag > 0 => default_gamma(cfg.epsilon, cfg.max_lag),
        (None, _) => 0.0,
    };
    Ok(base.scaled(cfg.penalty_scale).with_gamma(gamma))
}

//! Monte Carlo estimates of the transmission success probability, sampled
//! either from photon counts alone or from full register trajectories, and
//! compared against the closed forms.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::correction::{classify, CorrectionCase, QndReport};
use crate::encoding::{build_encoded_ghz, Basis, BornSampler, EncodingScheme};
use crate::error::{CkaError, Result};
use crate::protocol::{deliver, logical_readout, readout_consistent};
use crate::rates::{self, Protocol};
use crate::rng::{stream, worker_pool};

/// Agreement threshold in standard errors.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub eta: f64,
    pub n: usize,
    #[serde(serialize_with = "ser_scheme")]
    pub scheme: EncodingScheme,
    pub mode: Protocol,
}

fn ser_scheme<S: serde::Serializer>(s: &EncodingScheme, ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = ser.serialize_struct("EncodingScheme", 4)?;
    st.serialize_field("m", &s.m)?;
    st.serialize_field("q", &s.q)?;
    st.serialize_field("n", &s.n)?;
    st.serialize_field("q_a", &s.q_a)?;
    st.end()
}

impl McConfig {
    /// Two-photon blocks, two per lossy party.
    pub fn new(trials: u64, seed: u64, eta: f64, n: usize, mode: Protocol) -> Self {
        Self { trials, seed, eta, n, scheme: EncodingScheme::redundant(n), mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CkaError::InvalidParameter("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(CkaError::InvalidParameter(format!("eta {} outside [0, 1]", self.eta)));
        }
        if self.scheme.n != self.n {
            return Err(CkaError::InvalidParameter("scheme party count differs from n".into()));
        }
        self.scheme.validate()?;
        if self.mode == Protocol::Encoded && self.scheme.q < 2 && self.scheme.m > 1 {
            return Err(CkaError::UnsupportedLayout("correction needs q >= 2 for m > 1".into()));
        }
        Ok(())
    }

    /// Closed-form success probability for this configuration.
    pub fn analytic_p(&self) -> f64 {
        match self.mode {
            Protocol::Nonencoded => rates::p_transmit_nonenc(self.eta, self.n),
            Protocol::Encoded if self.scheme.m == 2 && self.scheme.q == 2 => rates::p_transmit_enc(self.eta, self.n),
            Protocol::Encoded => {
                let (m, q) = (self.scheme.m as i32, self.scheme.q as i32);
                let intact = (1.0 - self.eta).powi(m);
                let lost = self.eta.powi(m);
                let party = if m == 1 {
                    intact.powi(q)
                } else {
                    intact.powi(q) + f64::from(q) * (1.0 - intact - lost) * intact.powi(q - 1)
                };
                party.powi(self.n as i32)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub std_err: f64,
    pub analytic_p: f64,
    pub z_score: f64,
}

impl McEstimate {
    pub fn new(successes: u64, trials: u64, analytic_p: f64) -> Self {
        let t = trials as f64;
        let p_hat = successes as f64 / t;
        let std_err = (p_hat * (1.0 - p_hat) / t).sqrt();
        // a degenerate sample has no spread; fall back to the analytic one
        let sigma = if std_err > 0.0 { std_err } else { (analytic_p * (1.0 - analytic_p) / t).sqrt() };
        let diff = p_hat - analytic_p;
        let z_score = if diff.abs() < 1e-15 {
            0.0
        } else if sigma > 0.0 {
            diff / sigma
        } else {
            diff.signum() * f64::INFINITY
        };
        Self { successes, trials, p_hat, std_err, analytic_p, z_score }
    }

    pub fn passes(&self) -> bool {
        self.z_score.abs() < Z_THRESHOLD
    }
}

/// Difference of two estimates in units of their pooled standard error.
pub fn pooled_z(a: &McEstimate, b: &McEstimate) -> f64 {
    let diff = a.p_hat - b.p_hat;
    if diff.abs() < 1e-15 {
        return 0.0;
    }
    let mut se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    if se == 0.0 {
        let p = a.analytic_p;
        se = (p * (1.0 - p) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt();
    }
    if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    pub correlation: u64,
    pub x_parity: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateLevelEstimate {
    pub estimate: McEstimate,
    pub violations: Violations,
}

fn sample_success<R: Rng>(cfg: &McConfig, rng: &mut R) -> Result<bool> {
    match cfg.mode {
        Protocol::Nonencoded => Ok((0..cfg.n).all(|_| rng.random::<f64>() >= cfg.eta)),
        Protocol::Encoded => {
            let s = cfg.scheme;
            let mut counts = vec![vec![s.m; s.q_a]];
            for _ in 0..s.n {
                counts.push(
                    (0..s.q).map(|_| (0..s.m).filter(|_| rng.random::<f64>() >= cfg.eta).count()).collect(),
                );
            }
            Ok(classify(&QndReport { counts }, s.m)?.iter().all(|c| CorrectionCase::is_recoverable(*c)))
        }
    }
}

/// Samples photon losses and classifies them without touching any state.
pub fn estimate_transmission(cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let successes = worker_pool()?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| sample_success(cfg, &mut stream(cfg.seed, i)).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?;
    Ok(McEstimate::new(successes, cfg.trials, cfg.analytic_p()))
}

/// Full trajectories: build the resource, lose photons, correct, then read
/// out in both bases and check GHZ correlations on every success.
pub fn estimate_state_level(cfg: &McConfig) -> Result<StateLevelEstimate> {
    cfg.validate()?;
    let scheme = match cfg.mode {
        Protocol::Encoded => cfg.scheme,
        Protocol::Nonencoded => EncodingScheme::bare(cfg.n),
    };
    let (resource, _) = build_encoded_ghz(&scheme)?;
    let etas = vec![cfg.eta; cfg.n];
    let trial = |i: u64| -> Result<(u64, u64, u64)> {
        let mut rng = stream(cfg.seed, i);
        let Some((r, phase)) = deliver(&resource, scheme.m, &etas, Protocol::Encoded, &mut rng)? else {
            return Ok((0, 0, 0));
        };
        let z = logical_readout(&r, Basis::Z, &mut BornSampler(&mut rng))?;
        let x = logical_readout(&r, Basis::X, &mut BornSampler(&mut rng))?;
        Ok((
            1,
            u64::from(!readout_consistent(&z, Basis::Z, phase)),
            u64::from(!readout_consistent(&x, Basis::X, phase)),
        ))
    };
    let (s, c, x) = worker_pool()?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(trial)
            .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))
    })?;
    Ok(StateLevelEstimate {
        estimate: McEstimate::new(s, cfg.trials, cfg.analytic_p()),
        violations: Violations { correlation: c, x_parity: x },
    })
}

/// Serializable summary of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub config: McConfig,
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub std_err: f64,
    pub analytic_p: f64,
    pub z_score: f64,
    pub violations: Violations,
}

impl McReport {
    pub fn new(config: McConfig, e: &McEstimate, violations: Violations) -> Self {
        Self {
            config,
            successes: e.successes,
            trials: e.trials,
            p_hat: e.p_hat,
            std_err: e.std_err,
            analytic_p: e.analytic_p,
            z_score: e.z_score,
            violations,
        }
    }

    pub fn passes(&self) -> bool {
        self.z_score.abs() < Z_THRESHOLD && self.violations == Violations::default()
    }
}

//! N-BB84 rounds over the GHZ resource. Type-1 rounds are measured in the
//! logical Z basis and build the key; type-2 rounds are measured in the
//! logical X basis and test the GHZ phase.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::correction::{apply_loss, classify, correct, sample_loss_pattern, QndReport};
use crate::encoding::{build_encoded_ghz, Basis, BornSampler, EncodingScheme, OutcomeSource, QubitRegister, Sign};
use crate::error::{CkaError, Result};
use crate::rates::{self, LossModel, Protocol};
use crate::rng::{stream, worker_pool};

/// Stream index reserved for choosing the type-2 rounds.
const PLAN_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundType {
    Type1,
    Type2,
}

impl RoundType {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundType::Type1 => "type1",
            RoundType::Type2 => "type2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundPlan {
    pub rounds: usize,
    pub type2_fraction: f64,
    pub type2_rounds: BTreeSet<usize>,
    pub seed: u64,
}

impl RoundPlan {
    pub fn new(rounds: usize, type2_fraction: f64, seed: u64) -> Result<Self> {
        if rounds == 0 {
            return Err(CkaError::InvalidParameter("need at least one round".into()));
        }
        if !(type2_fraction > 0.0 && type2_fraction < 1.0) {
            return Err(CkaError::InvalidParameter(format!("type-2 fraction {type2_fraction} outside (0, 1)")));
        }
        let m = rates::type2_count(rounds, type2_fraction);
        let mut rng = stream(seed, PLAN_STREAM);
        let type2_rounds = rand::seq::index::sample(&mut rng, rounds, m).into_iter().collect();
        Ok(Self { rounds, type2_fraction, type2_rounds, seed })
    }

    pub fn round_type(&self, i: usize) -> RoundType {
        if self.type2_rounds.contains(&i) {
            RoundType::Type2
        } else {
            RoundType::Type1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub index: usize,
    pub round_type: RoundType,
    pub delivered: bool,
    /// One bit per party; empty when undelivered.
    pub bits: Vec<u8>,
    /// Broadcast GHZ sign, type-2 rounds only.
    pub phase_parity: Option<Sign>,
    /// Whether the round's consistency check held.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConferenceKey {
    pub key_bits: Vec<u8>,
    pub qber_estimate: f64,
    pub x_parity_violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRun {
    pub outcomes: Vec<RoundOutcome>,
    pub key: ConferenceKey,
    pub key_disagreements: usize,
}

impl ProtocolRun {
    pub fn delivered(&self) -> usize {
        self.outcomes.iter().filter(|o| o.delivered).count()
    }

    pub fn delivered_fraction(&self) -> f64 {
        self.delivered() as f64 / self.outcomes.len().max(1) as f64
    }

    pub fn round_log_csv(&self) -> String {
        let mut s = String::from("round_index,type,delivered,bits,phase_parity\n");
        for o in &self.outcomes {
            let bits: Vec<String> = o.bits.iter().map(u8::to_string).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                o.index,
                o.round_type.as_str(),
                u8::from(o.delivered),
                bits.join(";"),
                o.phase_parity.map_or("", Sign::symbol)
            );
        }
        s
    }

    pub fn summary_line(&self) -> String {
        format!(
            "key_length={} delivered_fraction={} qber={} x_parity_violations={}",
            self.key.key_bits.len(),
            rates::fmt_sig(self.delivered_fraction()),
            rates::fmt_sig(self.key.qber_estimate),
            self.key.x_parity_violations
        )
    }
}

/// Reads every nonempty block of every party in `basis`. Returns one bit per
/// block, grouped by party. Z decodes block parity; X requires all photons
/// of a block to agree (0 ↦ +, 1 ↦ −).
pub fn logical_readout<O: OutcomeSource + ?Sized>(
    r: &QubitRegister,
    basis: Basis,
    source: &mut O,
) -> Result<Vec<Vec<u8>>> {
    let mut owner: Vec<(usize, usize, usize)> = r
        .layout()
        .iter()
        .enumerate()
        .flat_map(|(p, l)| l.blocks.iter().enumerate().flat_map(move |(b, qs)| qs.iter().map(move |q| (*q, p, b))))
        .collect();
    owner.sort_unstable();
    let mut outcomes: Vec<Vec<Vec<u8>>> =
        r.layout().iter().map(|l| vec![Vec::new(); l.blocks.len()]).collect();
    let mut cur = r.clone();
    for (q, p, b) in owner.into_iter().rev() {
        let (o, next) = cur.measure_and_remove(q, basis, source)?;
        outcomes[p][b].push(o);
        cur = next;
    }
    outcomes
        .into_iter()
        .map(|blocks| {
            blocks
                .into_iter()
                .filter(|o| !o.is_empty())
                .map(|o| match basis {
                    Basis::Z => Ok(o.iter().fold(0, |a, b| a ^ b)),
                    Basis::X if o.iter().all(|x| *x == o[0]) => Ok(o[0]),
                    Basis::X => Err(CkaError::OutsideCodeSpace(0.0)),
                })
                .collect()
        })
        .collect()
}

/// One logical bit per party: the first block's Z value, or the product of
/// the party's block X values.
pub fn logical_measure<O: OutcomeSource + ?Sized>(r: &QubitRegister, basis: Basis, source: &mut O) -> Result<Vec<u8>> {
    Ok(fold_party_bits(&logical_readout(r, basis, source)?, basis))
}

fn fold_party_bits(blocks: &[Vec<u8>], basis: Basis) -> Vec<u8> {
    blocks
        .iter()
        .map(|b| match basis {
            Basis::Z => b.first().copied().unwrap_or(0),
            Basis::X => b.iter().fold(0, |a, x| a ^ x),
        })
        .collect()
}

/// Checks a readout: Z rounds need every block equal to `A`'s first bit, X
/// rounds need the product of all outcomes to match `phase`.
pub fn readout_consistent(blocks: &[Vec<u8>], basis: Basis, phase: Sign) -> bool {
    let all = blocks.iter().flatten();
    match basis {
        Basis::Z => {
            let reference = blocks.first().and_then(|b| b.first()).copied();
            all.clone().all(|b| Some(*b) == reference)
        }
        Basis::X => Sign::product(all.map(|b| Sign::from_bit(*b))) == phase,
    }
}

/// Resource, loss and correction for one round. Returns the delivered
/// register and its GHZ sign, or `None`.
pub(crate) fn deliver<R: Rng>(
    resource: &QubitRegister,
    m: usize,
    etas: &[f64],
    mode: Protocol,
    rng: &mut R,
) -> Result<Option<(QubitRegister, Sign)>> {
    match mode {
        Protocol::Nonencoded => {
            let p = rates::p_transmit_nonenc_parties(etas);
            Ok((rng.random::<f64>() < p).then(|| (resource.clone(), Sign::Plus)))
        }
        Protocol::Encoded => {
            let pattern = sample_loss_pattern(resource, etas, rng)?;
            let mut src = BornSampler(rng);
            let lost = apply_loss(resource, &pattern, &mut src)?;
            let cases = classify(&QndReport::read(&lost), m)?;
            let (r, out) = correct(&lost, &cases, &mut src)?;
            Ok(out.success.then(|| (r, out.phase())))
        }
    }
}

/// Runs every round of `plan`. Round `i` draws from substream `i` of the
/// plan seed, so the result does not depend on the number of workers.
pub fn run_protocol(plan: &RoundPlan, scheme: &EncodingScheme, loss: &LossModel, mode: Protocol) -> Result<ProtocolRun> {
    let etas = loss.party_etas(scheme.n)?;
    let resource_scheme = match mode {
        Protocol::Encoded => *scheme,
        Protocol::Nonencoded => EncodingScheme::bare(scheme.n),
    };
    let (resource, _) = build_encoded_ghz(&resource_scheme)?;
    let m = resource_scheme.m;
    let round = |i: usize| -> Result<RoundOutcome> {
        let mut rng = stream(plan.seed, i as u64);
        let round_type = plan.round_type(i);
        let Some((r, phase)) = deliver(&resource, m, &etas, mode, &mut rng)? else {
            return Ok(RoundOutcome { index: i, round_type, delivered: false, bits: Vec::new(), phase_parity: None, consistent: true });
        };
        let basis = match round_type {
            RoundType::Type1 => Basis::Z,
            RoundType::Type2 => Basis::X,
        };
        let blocks = logical_readout(&r, basis, &mut BornSampler(&mut rng))?;
        Ok(RoundOutcome {
            index: i,
            round_type,
            delivered: true,
            bits: fold_party_bits(&blocks, basis),
            phase_parity: (basis == Basis::X).then_some(phase),
            consistent: readout_consistent(&blocks, basis, phase),
        })
    };
    let outcomes = worker_pool()?.install(|| (0..plan.rounds).into_par_iter().map(round).collect::<Result<Vec<_>>>())?;
    let key_rounds: Vec<&RoundOutcome> =
        outcomes.iter().filter(|o| o.delivered && o.round_type == RoundType::Type1).collect();
    let key_disagreements = key_rounds.iter().filter(|o| !o.consistent).count();
    let x_parity_violations =
        outcomes.iter().filter(|o| o.delivered && o.round_type == RoundType::Type2 && !o.consistent).count();
    let key = ConferenceKey {
        key_bits: key_rounds.iter().map(|o| o.bits[0]).collect(),
        qber_estimate: if key_rounds.is_empty() { 0.0 } else { key_disagreements as f64 / key_rounds.len() as f64 },
        x_parity_violations,
    };
    Ok(ProtocolRun { outcomes, key, key_disagreements })
}

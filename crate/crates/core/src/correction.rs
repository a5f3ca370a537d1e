//! Photon loss as an unread computational-basis measurement, QND photon
//! counting per block, the four-case classifier and the diagonal-basis
//! correction that restores an encoded GHZ state.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;

use crate::encoding::{Basis, BlockRef, OutcomeSource, PartyLayout, QubitRegister, Sign};
use crate::error::{CkaError, Result};
use crate::linalg;

/// Physical qubits lost in transit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LossPattern {
    pub lost: BTreeSet<usize>,
}

impl LossPattern {
    pub fn new<I: IntoIterator<Item = usize>>(lost: I) -> Self {
        Self { lost: lost.into_iter().collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.lost.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lost.len()
    }
}

/// Qubits sent to the lossy parties (every party after `A`).
pub fn lossy_qubits(r: &QubitRegister) -> Vec<usize> {
    let mut qs: Vec<usize> = r.layout().iter().skip(1).flat_map(|p| p.blocks.iter().flatten().copied()).collect();
    qs.sort_unstable();
    qs
}

/// Draws an independent Bernoulli loss for every photon of lossy party
/// `i + 1` with probability `etas[i]`.
pub fn sample_loss_pattern<R: Rng + ?Sized>(r: &QubitRegister, etas: &[f64], rng: &mut R) -> Result<LossPattern> {
    let parties = &r.layout()[1.min(r.layout().len())..];
    if etas.len() != parties.len() {
        return Err(CkaError::InvalidParameter(format!(
            "{} loss probabilities for {} lossy parties",
            etas.len(),
            parties.len()
        )));
    }
    let mut lost = BTreeSet::new();
    for (party, eta) in parties.iter().zip(etas) {
        for q in party.blocks.iter().flatten() {
            if rng.random::<f64>() < *eta {
                lost.insert(*q);
            }
        }
    }
    Ok(LossPattern { lost })
}

/// Measures every lost qubit in the computational basis, discards the
/// outcome and removes the qubit.
pub fn apply_loss<O: OutcomeSource + ?Sized>(r: &QubitRegister, p: &LossPattern, source: &mut O) -> Result<QubitRegister> {
    if let Some(q) = p.lost.iter().find(|q| **q >= r.n_qubits()) {
        return Err(CkaError::QubitOutOfRange(*q));
    }
    let mut out = r.clone();
    for q in p.lost.iter().rev() {
        out = out.measure_and_remove(*q, Basis::Z, source)?.1;
    }
    Ok(out)
}

/// Surviving photon count of every block, per party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QndReport {
    pub counts: Vec<Vec<usize>>,
}

impl QndReport {
    /// Counts photons remaining in each block of a register after loss.
    pub fn read(r: &QubitRegister) -> Self {
        Self { counts: r.layout().iter().map(|p| p.blocks.iter().map(Vec::len).collect()).collect() }
    }

    /// Counts a pattern would leave behind in `r`.
    pub fn from_pattern(r: &QubitRegister, p: &LossPattern) -> Self {
        Self {
            counts: r
                .layout()
                .iter()
                .map(|party| party.blocks.iter().map(|b| b.iter().filter(|q| !p.lost.contains(q)).count()).collect())
                .collect(),
        }
    }
}

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorrectionCase {
    A_NoLoss,
    B_OneLossOneMode,
    C_TwoLossOneMode,
    D_OneLossEachMode,
}

impl CorrectionCase {
    pub fn is_recoverable(self) -> bool {
        matches!(self, CorrectionCase::A_NoLoss | CorrectionCase::B_OneLossOneMode)
    }
}

/// Classifies every party from its block counts. A party is `A` when all
/// blocks are intact, `C` when some block is empty, `B` when exactly one
/// block is damaged and `D` when several are.
pub fn classify(report: &QndReport, m: usize) -> Result<Vec<CorrectionCase>> {
    report
        .counts
        .iter()
        .map(|blocks| {
            if let Some(c) = blocks.iter().find(|c| **c > m) {
                return Err(CkaError::CountOutOfRange { count: *c, max: m });
            }
            let damaged = blocks.iter().filter(|c| **c < m).count();
            Ok(if damaged == 0 {
                CorrectionCase::A_NoLoss
            } else if blocks.contains(&0) {
                CorrectionCase::C_TwoLossOneMode
            } else if damaged == 1 {
                if damaged == blocks.len() {
                    return Err(CkaError::UnsupportedLayout(
                        "a damaged block needs an intact partner to be corrected".into(),
                    ));
                }
                CorrectionCase::B_OneLossOneMode
            } else {
                CorrectionCase::D_OneLossEachMode
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionOutcome {
    pub success: bool,
    pub surviving_layout: Vec<PartyLayout>,
    pub phase_flips: Vec<Sign>,
    pub excluded_parties: BTreeSet<usize>,
}

impl CorrectionOutcome {
    /// Relative GHZ sign implied by the recorded flips.
    pub fn phase(&self) -> Sign {
        Sign::product(self.phase_flips.iter().copied())
    }
}

/// Applies the correction for the given per-party cases. Case `B` parties
/// measure the survivors of their damaged block in the diagonal basis and
/// drop it; any `C` or `D` party makes the round fail.
pub fn correct<O: OutcomeSource + ?Sized>(
    r: &QubitRegister,
    cases: &[CorrectionCase],
    source: &mut O,
) -> Result<(QubitRegister, CorrectionOutcome)> {
    if cases.len() != r.layout().len() {
        return Err(CkaError::InvalidParameter(format!(
            "{} cases for {} parties",
            cases.len(),
            r.layout().len()
        )));
    }
    if cases.iter().any(|c| !c.is_recoverable()) {
        let excluded = cases
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == CorrectionCase::D_OneLossEachMode)
            .map(|(i, _)| i)
            .collect();
        return Ok((
            r.clone(),
            CorrectionOutcome {
                success: false,
                surviving_layout: r.layout().to_vec(),
                phase_flips: Vec::new(),
                excluded_parties: excluded,
            },
        ));
    }
    let mut out = r.clone();
    let mut flips = Vec::new();
    for (party, case) in cases.iter().enumerate() {
        if *case != CorrectionCase::B_OneLossOneMode {
            continue;
        }
        let blocks = &out.layout()[party].blocks;
        let full = blocks.iter().map(Vec::len).max().unwrap_or(0);
        let block = blocks
            .iter()
            .position(|b| b.len() < full)
            .ok_or_else(|| CkaError::InvalidLayout(format!("party {party} has no damaged block")))?;
        let b = BlockRef { party, block };
        let mut qubits = out.block_qubits(b)?.to_vec();
        qubits.sort_unstable();
        let mut sign = Sign::Plus;
        for q in qubits.iter().rev() {
            let (o, next) = out.measure_and_remove(*q, Basis::X, source)?;
            sign = sign * Sign::from_bit(o);
            out = next;
        }
        out = out.drop_empty_block(b)?;
        out.record_phase(sign);
        flips.push(sign);
    }
    Ok((
        out.clone(),
        CorrectionOutcome {
            success: true,
            surviving_layout: out.layout().to_vec(),
            phase_flips: flips,
            excluded_parties: BTreeSet::new(),
        },
    ))
}

/// `|⟨GHZ_sign|ψ⟩|²` with `GHZ_± = (|0_L⟩^⊗k ± |1_L⟩^⊗k)/√2` over the
/// nonempty blocks of `r`.
pub fn verify_ghz(r: &QubitRegister, sign: Sign) -> f64 {
    let n = r.n_qubits();
    let blocks: Vec<(u64, f64)> = r
        .layout()
        .iter()
        .flat_map(|p| p.blocks.iter())
        .filter(|b| !b.is_empty())
        .map(|b| {
            let mask = b.iter().fold(0u64, |m, q| m | (1u64 << (n - 1 - q)));
            (mask, 0.5f64.powf((b.len() as f64 - 1.0) / 2.0))
        })
        .collect();
    let weight: f64 = blocks.iter().map(|(_, w)| w).product::<f64>() * std::f64::consts::FRAC_1_SQRT_2;
    let mut overlap = Complex64::default();
    for (i, a) in r.amplitudes() {
        let parities: Vec<u32> = blocks.iter().map(|(m, _)| (i & m).count_ones() % 2).collect();
        let t = if parities.iter().all(|p| *p == 0) {
            weight
        } else if parities.iter().all(|p| *p == 1) {
            weight * sign.value()
        } else {
            0.0
        };
        overlap += a * t;
    }
    overlap.norm_sqr()
}

/// Schmidt rank of every nonempty block against the rest of the register.
pub fn block_cut_ranks(r: &QubitRegister) -> Vec<usize> {
    r.layout()
        .iter()
        .flat_map(|p| p.blocks.iter())
        .filter(|b| !b.is_empty())
        .map(|b| linalg::cut_rank(r.amplitudes(), r.n_qubits(), b, 1e-10))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_encoded_ghz, parity_zero, BornSampler, EncodingScheme, ScriptedOutcomes};
    use crate::rng::stream;
    use CorrectionCase::*;

    fn counts(v: &[&[usize]]) -> QndReport {
        QndReport { counts: v.iter().map(|b| b.to_vec()).collect() }
    }

    #[test]
    fn classifier_table() {
        let r = counts(&[&[2], &[2, 2], &[1, 2], &[2, 1], &[0, 2], &[2, 0], &[1, 1], &[0, 0], &[1, 0]]);
        assert_eq!(
            classify(&r, 2).unwrap(),
            vec![A_NoLoss, A_NoLoss, B_OneLossOneMode, B_OneLossOneMode, C_TwoLossOneMode, C_TwoLossOneMode, D_OneLossEachMode, C_TwoLossOneMode, C_TwoLossOneMode]
        );
        assert!(matches!(classify(&counts(&[&[3, 2]]), 2), Err(CkaError::CountOutOfRange { count: 3, max: 2 })));
        assert!(matches!(classify(&counts(&[&[1]]), 2), Err(CkaError::UnsupportedLayout(_))));
    }

    #[test]
    fn empty_pattern_is_identity() {
        let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(1)).unwrap();
        let mut rng = stream(3, 0);
        let out = apply_loss(&r, &LossPattern::default(), &mut BornSampler(&mut rng)).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn losing_one_qubit_of_parity_zero() {
        let z = parity_zero(2).unwrap();
        let trials = 10_000;
        let mut ones = 0;
        for i in 0..trials {
            let mut rng = stream(11, i);
            let out = apply_loss(&z, &LossPattern::new([1]), &mut BornSampler(&mut rng)).unwrap();
            assert_eq!(out.n_qubits(), 1);
            if out.amplitude(1).norm() > 0.5 {
                ones += 1;
            }
        }
        let p = ones as f64 / trials as f64;
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((p - 0.5).abs() < 5.0 * sigma, "{p}");
    }

    #[test]
    fn no_loss_is_plus_ghz() {
        let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
        let cases = classify(&QndReport::read(&r), 2).unwrap();
        assert!(cases.iter().all(|c| *c == A_NoLoss));
        let (out, o) = correct(&r, &cases, &mut ScriptedOutcomes::new([])).unwrap();
        assert!(o.success);
        assert!((verify_ghz(&out, Sign::Plus) - 1.0).abs() < 1e-12);
        assert!(verify_ghz(&out, Sign::Minus) < 1e-12);
    }

    #[test]
    fn single_loss_minus_outcome() {
        let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
        for z in 0..2u8 {
            let mut src = ScriptedOutcomes::new([z, 1]);
            let lost = apply_loss(&r, &LossPattern::new([2]), &mut src).unwrap();
            let cases = classify(&QndReport::read(&lost), 2).unwrap();
            assert_eq!(cases[1], B_OneLossOneMode);
            let (out, o) = correct(&lost, &cases, &mut src).unwrap();
            assert_eq!(o.phase_flips, vec![Sign::Minus]);
            assert_eq!(out.n_qubits(), 8);
            assert!((verify_ghz(&out, Sign::Minus) - 1.0).abs() < 1e-12);
            assert!(verify_ghz(&out, Sign::Plus) < 1e-12);
            assert!((src.weight - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_in_both_parties_leaves_three_blocks() {
        let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
        let mut src = ScriptedOutcomes::new([0, 1, 0, 1]);
        let lost = apply_loss(&r, &LossPattern::new([2, 6]), &mut src).unwrap();
        let cases = classify(&QndReport::read(&lost), 2).unwrap();
        let (out, o) = correct(&lost, &cases, &mut src).unwrap();
        assert!(o.success);
        assert_eq!(out.layout().iter().map(|p| p.blocks.len()).sum::<usize>(), 3);
        assert!((verify_ghz(&out, o.phase()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn case_d_excludes_party() {
        let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
        let pattern = LossPattern::new([6, 8]);
        let lost = apply_loss(&r, &pattern, &mut ScriptedOutcomes::new([0, 0])).unwrap();
        let cases = classify(&QndReport::read(&lost), 2).unwrap();
        assert_eq!(cases[2], D_OneLossEachMode);
        let (_, o) = correct(&lost, &cases, &mut ScriptedOutcomes::new([])).unwrap();
        assert!(!o.success);
        assert_eq!(o.excluded_parties, BTreeSet::from([2]));
    }

    #[test]
    fn qnd_read_matches_pattern() {
        let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
        let pattern = LossPattern::new([3, 6, 7]);
        let mut rng = stream(5, 1);
        let lost = apply_loss(&r, &pattern, &mut BornSampler(&mut rng)).unwrap();
        assert_eq!(QndReport::read(&lost), QndReport::from_pattern(&r, &pattern));
    }

    #[test]
    fn product_state_overlap_is_small() {
        let amps = (0u64..4).map(|i| (i, Complex64::new(0.5, 0.0))).collect();
        let r = QubitRegister::new(
            2,
            amps,
            vec![
                PartyLayout { name: "A".into(), blocks: vec![vec![0]] },
                PartyLayout { name: "B1".into(), blocks: vec![vec![1]] },
            ],
        )
        .unwrap();
        assert!(verify_ghz(&r, Sign::Plus) <= 0.5 + 1e-12);
        assert!(verify_ghz(&r, Sign::Minus) <= 0.5 + 1e-12);
    }
}

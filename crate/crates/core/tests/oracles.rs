//! Independent brute-force oracles for closed forms and constructions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use cka_core::correction::{apply_loss, block_cut_ranks, classify, correct, verify_ghz, CorrectionCase, LossPattern, QndReport};
use cka_core::encoding::{build_encoded_ghz, parity_one, parity_zero, EncodingScheme, ScriptedOutcomes, Sign};
use cka_core::fock::FockState;
use cka_core::rates;
use cka_core::sources::{pdc_state, PdcParams};
use cka_core::{CkaError, Complex64};

/// `|0⟩^(m)` and `|1⟩^(m)` from the one-qubit-shorter words:
/// `|x⟩^(m) = (|x⟩^(m−1)|0⟩ + |x̄⟩^(m−1)|1⟩)/√2`.
fn recursive_words(m: usize) -> (BTreeMap<u64, f64>, BTreeMap<u64, f64>) {
    if m == 1 {
        return (BTreeMap::from([(0, 1.0)]), BTreeMap::from([(1, 1.0)]));
    }
    let (z, o) = recursive_words(m - 1);
    let grow = |a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>| {
        let mut out = BTreeMap::new();
        for (i, v) in a {
            out.insert(i << 1, v * FRAC_1_SQRT_2);
        }
        for (i, v) in b {
            out.insert((i << 1) | 1, v * FRAC_1_SQRT_2);
        }
        out
    };
    (grow(&z, &o), grow(&o, &z))
}

#[test]
fn parity_words_match_recursive_form() {
    for m in 1..=4 {
        let (z, o) = recursive_words(m);
        for (built, oracle) in [(parity_zero(m).unwrap(), z), (parity_one(m).unwrap(), o)] {
            assert_eq!(built.amplitudes().len(), oracle.len());
            for (i, v) in oracle {
                assert!((built.amplitude(i) - Complex64::new(v, 0.0)).norm() < 1e-12, "m={m} i={i:b}");
            }
        }
    }
}

#[test]
fn encoded_ghz_matches_expansion() {
    // (|0_L⟩^⊗5 + |1_L⟩^⊗5)/√2, each |x_L⟩ = (|xx'⟩ ...) over two qubits
    let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
    let amp = FRAC_1_SQRT_2.powi(6);
    let mut expected = 0;
    for i in 0u64..1024 {
        let parities: Vec<u32> = (0..5).map(|b| ((i >> (8 - 2 * b)) & 0b11).count_ones() % 2).collect();
        let want = if parities.iter().all(|p| *p == parities[0]) { amp } else { 0.0 };
        if want > 0.0 {
            expected += 1;
        }
        assert!((r.amplitude(i) - Complex64::new(want, 0.0)).norm() < 1e-12, "{i:010b}");
    }
    assert_eq!(r.amplitudes().len(), expected);
    assert_eq!(expected, 64);
    assert!((r.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn party_success_by_enumeration() {
    for eta in [0.0f64, 0.1, 0.23, 0.5, 0.9, 1.0] {
        let mut p = 0.0;
        for mask in 0u32..16 {
            let lost = mask.count_ones() as i32;
            let block1 = (mask & 0b11).count_ones();
            let block2 = (mask >> 2).count_ones();
            let ok = matches!((block1, block2), (0, 0) | (1, 0) | (0, 1));
            if ok {
                p += eta.powi(lost) * (1.0 - eta).powi(4 - lost);
            }
        }
        assert!((rates::p_success_party_enc(eta) - p).abs() < 1e-12, "eta={eta}");
    }
    // equally likely patterns at η = 1/2: 1 intact + 4 single losses
    assert_eq!(rates::p_success_party_enc(0.5), 5.0 / 16.0);
}

#[test]
fn two_pdc_sector_weights() {
    let lam = 0.1f64;
    let a = pdc_state(&PdcParams::new(lam, 2, 1, 2).unwrap()).unwrap();
    let b = pdc_state(&PdcParams::new(lam, 2, 3, 4).unwrap()).unwrap();
    let ab = a.tensor(&b).unwrap();
    let mut sectors: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (basis, amp) in ab.terms() {
        let k1 = basis.spatial_count(1);
        let k2 = basis.spatial_count(3);
        *sectors.entry((k1, k2)).or_default() += amp.norm_sqr();
    }
    assert_eq!(sectors.len(), 9);
    let pre = (1.0 - lam * lam).powi(2);
    for ((k1, k2), w) in sectors {
        let want = pre * lam.powi(2 * (k1 + k2) as i32);
        assert!((w - want).abs() < 1e-15, "sector ({k1},{k2})");
    }
    let _: &FockState = &ab;
}

/// Runs loss then correction along every outcome branch. Returns
/// `(branch weight, corrected register, outcome)` for each branch with
/// nonzero weight.
fn branches(
    pattern: &LossPattern,
) -> Vec<(f64, cka_core::encoding::QubitRegister, cka_core::correction::CorrectionOutcome)> {
    let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
    let k = pattern.len() + 2;
    let mut out = Vec::new();
    for bits in 0u32..(1 << k) {
        let mut src = ScriptedOutcomes::new((0..k).map(|j| (bits >> j & 1) as u8));
        let lost = match apply_loss(&r, pattern, &mut src) {
            Ok(l) => l,
            Err(CkaError::ZeroProbability) => continue,
            Err(e) => panic!("{e}"),
        };
        let cases = classify(&QndReport::read(&lost), 2).unwrap();
        match correct(&lost, &cases, &mut src) {
            Ok((fixed, o)) => {
                // ignore unused trailing outcomes: count each branch once
                let used = k - src.remaining();
                if bits >> used == 0 {
                    out.push((src.weight, fixed, o));
                }
            }
            Err(CkaError::ZeroProbability) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    out
}

#[test]
fn every_recoverable_pattern_restores_ghz() {
    let singles = |base: usize| std::iter::once(None).chain((base..base + 4).map(Some)).collect::<Vec<_>>();
    let mut patterns = 0;
    for b in singles(2) {
        for c in singles(6) {
            let pattern = LossPattern::new(b.into_iter().chain(c));
            let all = branches(&pattern);
            let total: f64 = all.iter().map(|(w, _, _)| w).sum();
            assert!((total - 1.0).abs() < 1e-12, "{pattern:?}");
            for (_, fixed, o) in &all {
                assert!(o.success);
                assert_eq!(o.phase_flips.len(), pattern.len());
                assert!((verify_ghz(fixed, o.phase()) - 1.0).abs() < 1e-12);
                let other = if o.phase() == Sign::Plus { Sign::Minus } else { Sign::Plus };
                assert!(verify_ghz(fixed, other) < 1e-12);
            }
            patterns += 1;
        }
    }
    assert_eq!(patterns, 25);
}

#[test]
fn emptied_block_leaves_product_state() {
    let (r, _) = build_encoded_ghz(&EncodingScheme::redundant(2)).unwrap();
    let mut checked = 0;
    for mask in 0u32..256 {
        let pattern = LossPattern::new((0..8).filter(|j| mask >> j & 1 == 1).map(|j| j as usize + 2));
        let cases = classify(&QndReport::from_pattern(&r, &pattern), 2).unwrap();
        if !cases.contains(&CorrectionCase::C_TwoLossOneMode) {
            continue;
        }
        let k = pattern.len();
        for bits in 0u32..(1 << k) {
            let mut src = ScriptedOutcomes::new((0..k).map(|j| (bits >> j & 1) as u8));
            let lost = match apply_loss(&r, &pattern, &mut src) {
                Ok(l) => l,
                Err(CkaError::ZeroProbability) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(block_cut_ranks(&lost).iter().all(|r| *r == 1), "{pattern:?}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn crossover_root_is_closed_form() {
    // 3η³ − 8η² + 6η − 1 = (η − 1)(3η² − 5η + 1)
    let root = (5.0 - 13f64.sqrt()) / 6.0;
    let f = |e: f64| 3.0 * e.powi(3) - 8.0 * e.powi(2) + 6.0 * e - 1.0;
    assert!(f(root).abs() < 1e-14);
    let found = rates::transmission_crossover(0.05, 0.5, 1e-13).unwrap();
    assert!((found - root).abs() < 1e-9);
    assert!((root - 0.232408).abs() < 1e-6);
}

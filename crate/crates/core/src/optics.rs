//! Polarizing beam splitters and post-selected GHZ chains built from PDCs.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{CkaError, Result};
use crate::fock::{FockBasisState, FockState, ModeLabel};
use crate::linalg;
use crate::sources::{pdc_state, singlet, PdcParams};

/// A polarizing beam splitter: H is transmitted (`a → a′`, `b → b′`), V is
/// reflected (`a → b′`, `b → a′`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PbsElement {
    pub input_modes: (u32, u32),
    pub output_modes: (u32, u32),
}

impl PbsElement {
    pub fn new(input_modes: (u32, u32), output_modes: (u32, u32)) -> Result<Self> {
        if input_modes.0 == input_modes.1 || output_modes.0 == output_modes.1 {
            return Err(CkaError::InvalidParameter("PBS ports must be distinct spatial modes".into()));
        }
        Ok(Self { input_modes, output_modes })
    }

    /// Outputs reuse the input spatial indices.
    pub fn in_place(a: u32, b: u32) -> Result<Self> {
        Self::new((a, b), (a, b))
    }

    fn mode_map(&self) -> BTreeMap<ModeLabel, ModeLabel> {
        let (a, b) = self.input_modes;
        let (ao, bo) = self.output_modes;
        BTreeMap::from([
            (ModeLabel::h(a), ModeLabel::h(ao)),
            (ModeLabel::v(a), ModeLabel::v(bo)),
            (ModeLabel::h(b), ModeLabel::h(bo)),
            (ModeLabel::v(b), ModeLabel::v(ao)),
        ])
    }
}

/// Applies the PBS mode permutation. Photon number per polarization is
/// conserved and the norm is unchanged.
pub fn apply_pbs(s: &FockState, e: &PbsElement) -> Result<FockState> {
    let map = e.mode_map();
    for m in map.keys() {
        if !s.has_mode(*m) {
            return Err(CkaError::UnknownMode(*m));
        }
    }
    s.relabel(&map)
}

/// A post-selected GHZ chain.
#[derive(Clone, Debug)]
pub struct GhzChain {
    pub n_parties: usize,
    pub n_pdc: usize,
    pub n_pbs: usize,
    /// Spatial mode delivered to each party, in party order.
    pub party_modes: Vec<u32>,
    /// Heralding mode for odd party counts.
    pub herald_mode: Option<u32>,
    /// State after all PBS elements, before any detection.
    pub full: FockState,
    /// Renormalized state given one photon per output spatial mode (and, for
    /// odd party counts, a diagonal herald detection).
    pub post_selected: FockState,
    /// Probability of one photon in every output spatial mode.
    pub probability: f64,
    /// `probability / p_bell^n_pdc`: the PBS success given one pair per PDC.
    pub conditional_probability: f64,
}

/// Chains `⌈N/2⌉` PDCs; PDC `j` emits into spatial modes `2j+1` (signal) and
/// `2j+2` (idler), and a PBS mixes each idler with the next signal in place.
/// For odd `N` the last idler is a herald that is detected in the diagonal
/// polarization basis.
pub fn build_ghz_chain(n_parties: usize, lambda: f64, kmax: u32) -> Result<GhzChain> {
    if n_parties < 2 {
        return Err(CkaError::InvalidParameter("a GHZ chain needs at least two parties".into()));
    }
    let n_pdc = n_parties.div_ceil(2);
    let n_pbs = (n_parties - 1) / 2;
    let mut state = FockState::vacuum();
    for j in 0..n_pdc as u32 {
        let p = PdcParams::new(lambda, kmax, 2 * j + 1, 2 * j + 2)?;
        state = state.tensor(&pdc_state(&p)?)?;
    }
    for j in 0..n_pbs as u32 {
        state = apply_pbs(&state, &PbsElement::in_place(2 * j + 2, 2 * j + 3)?)?;
    }
    let all_modes: Vec<u32> = (1..=2 * n_pdc as u32).collect();
    let pattern: BTreeMap<u32, u32> = all_modes.iter().map(|s| (*s, 1)).collect();
    let (mut selected, probability) = state.post_select_spatial(&pattern)?;
    let mut party_modes = all_modes.clone();
    let mut herald_mode = None;
    if n_parties % 2 == 1 {
        let herald = *all_modes.last().expect("at least one PDC");
        party_modes.pop();
        herald_mode = Some(herald);
        if probability > 0.0 {
            // rotate to the diagonal basis and keep the + outcome
            let (h, v) = (ModeLabel::h(herald), ModeLabel::v(herald));
            let rotated = selected.apply_mode_unitary(&linalg::hadamard(), (h, v))?;
            selected = rotated.post_select(&BTreeMap::from([(h, 1), (v, 0)]))?.0;
        } else {
            selected = selected.post_select(&BTreeMap::from([(ModeLabel::h(herald), 1)]))?.0;
        }
    }
    let p_bell = lambda * lambda * (1.0 - lambda * lambda);
    let denom = p_bell.powi(n_pdc as i32);
    let conditional_probability = if denom > 0.0 { probability / denom } else { 0.0 };
    Ok(GhzChain {
        n_parties,
        n_pdc,
        n_pbs,
        party_modes,
        herald_mode,
        full: state,
        post_selected: selected,
        probability,
        conditional_probability,
    })
}

impl GhzChain {
    /// Post-selected state as polarization qubits over the party modes.
    pub fn party_qubits(&self) -> Result<BTreeMap<u64, Complex64>> {
        self.post_selected.polarization_qubits(&self.party_modes)
    }

    /// Schmidt rank across each single-party cut.
    pub fn single_party_ranks(&self) -> Result<Vec<usize>> {
        let q = self.party_qubits()?;
        let n = self.party_modes.len();
        Ok((0..n).map(|i| linalg::cut_rank(&q, n, &[i], 1e-10)).collect())
    }
}

/// Which published amplitude set the two-singlet PBS output agrees with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PbsDisplayCheck {
    /// |amplitude| of a bunched term such as `|H;0;HV;V⟩`.
    pub bunched: f64,
    /// |amplitude| of a coincidence term such as `|H;V;V;H⟩`.
    pub coincidence: f64,
    /// All four amplitudes have magnitude 1/2.
    pub matches_equal_halves: bool,
    /// Bunched amplitudes are 1/√3 and coincidence amplitudes 1/2.
    pub matches_root_third: bool,
}

/// Sends `|Φ₁⟩₁₂|Φ₁⟩₃₄` through a PBS on modes 2 and 3.
pub fn two_singlets_through_pbs() -> Result<FockState> {
    let input = singlet(1, 2)?.tensor(&singlet(3, 4)?)?;
    apply_pbs(&input, &PbsElement::in_place(2, 3)?)
}

pub fn check_pbs_display() -> Result<PbsDisplayCheck> {
    let out = two_singlets_through_pbs()?;
    let bunched = out
        .amplitude(&FockBasisState::from_counts([
            (ModeLabel::h(1), 1),
            (ModeLabel::h(3), 1),
            (ModeLabel::v(3), 1),
            (ModeLabel::v(4), 1),
        ]))
        .norm();
    let coincidence = out
        .amplitude(&FockBasisState::from_counts([
            (ModeLabel::h(1), 1),
            (ModeLabel::v(2), 1),
            (ModeLabel::v(3), 1),
            (ModeLabel::h(4), 1),
        ]))
        .norm();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let all_half = out.len() == 4 && out.terms().all(|(_, a)| close(a.norm(), 0.5));
    Ok(PbsDisplayCheck {
        bunched,
        coincidence,
        matches_equal_halves: all_half,
        matches_root_third: close(bunched, 1.0 / 3f64.sqrt()) && close(coincidence, 0.5),
    })
}

//! Sparse multimode Fock-space states.
//!
//! A [`FockState`] maps photon-number basis states to complex amplitudes over
//! an ordered set of polarization-resolved spatial modes. States may be
//! sub-normalized (post-selection keeps the branch weight), but their squared
//! norm never exceeds `1 + 1e-12`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use crate::error::{CkaError, Result};
use crate::linalg::{self, Matrix2};

/// Amplitudes with magnitude below this are dropped.
pub const DEFAULT_PRUNE: f64 = 1e-15;
/// Default per-mode photon-number cutoff.
pub const DEFAULT_CUTOFF: u32 = 4;
/// Slack allowed on the squared norm.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

/// A spatial mode index together with a polarization. Ordering is
/// (spatial, polarization) with `H < V`; this is the canonical mode order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub spatial: u32,
    pub polarization: Polarization,
}

impl ModeLabel {
    pub const fn new(spatial: u32, polarization: Polarization) -> Self {
        Self { spatial, polarization }
    }

    pub const fn h(spatial: u32) -> Self {
        Self::new(spatial, Polarization::H)
    }

    pub const fn v(spatial: u32) -> Self {
        Self::new(spatial, Polarization::V)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.spatial, self.polarization)
    }
}

/// Occupation numbers of a photon-number basis state. Only nonzero counts are
/// stored, so equality is equality of all occupations.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState {
    occupations: BTreeMap<ModeLabel, u32>,
}

impl FockBasisState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (ModeLabel, u32)>>(counts: I) -> Self {
        let mut s = Self::default();
        for (m, n) in counts {
            s.set(m, s.count(m) + n);
        }
        s
    }

    pub fn count(&self, mode: ModeLabel) -> u32 {
        self.occupations.get(&mode).copied().unwrap_or(0)
    }

    pub fn set(&mut self, mode: ModeLabel, count: u32) {
        if count == 0 {
            self.occupations.remove(&mode);
        } else {
            self.occupations.insert(mode, count);
        }
    }

    pub fn total(&self) -> u32 {
        self.occupations.values().sum()
    }

    /// Photons in a spatial mode, summed over polarizations.
    pub fn spatial_count(&self, spatial: u32) -> u32 {
        self.count(ModeLabel::h(spatial)) + self.count(ModeLabel::v(spatial))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeLabel, u32)> + '_ {
        self.occupations.iter().map(|(m, n)| (*m, *n))
    }

    fn merged(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, n) in other.iter() {
            out.set(m, n);
        }
        out
    }
}

/// Sparse superposition of photon-number basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    terms: BTreeMap<FockBasisState, Complex64>,
    modes: BTreeSet<ModeLabel>,
    prune: f64,
    cutoff: u32,
}

impl FockState {
    /// Vacuum with no modes and amplitude 1.
    pub fn vacuum() -> Self {
        Self::vacuum_on(std::iter::empty())
    }

    /// Vacuum over the given modes.
    pub fn vacuum_on<I: IntoIterator<Item = ModeLabel>>(modes: I) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(FockBasisState::vacuum(), Complex64::new(1.0, 0.0));
        Self {
            terms,
            modes: modes.into_iter().collect(),
            prune: DEFAULT_PRUNE,
            cutoff: DEFAULT_CUTOFF,
        }
    }

    /// The zero vector over the given modes.
    pub fn zero_on<I: IntoIterator<Item = ModeLabel>>(modes: I) -> Self {
        Self {
            terms: BTreeMap::new(),
            modes: modes.into_iter().collect(),
            prune: DEFAULT_PRUNE,
            cutoff: DEFAULT_CUTOFF,
        }
    }

    /// Builds a state from explicit terms. Repeated basis states are summed.
    pub fn from_terms<M, T>(modes: M, terms: T) -> Result<Self>
    where
        M: IntoIterator<Item = ModeLabel>,
        T: IntoIterator<Item = (FockBasisState, Complex64)>,
    {
        Self::from_terms_with_cutoff(modes, terms, DEFAULT_CUTOFF)
    }

    pub fn from_terms_with_cutoff<M, T>(modes: M, terms: T, cutoff: u32) -> Result<Self>
    where
        M: IntoIterator<Item = ModeLabel>,
        T: IntoIterator<Item = (FockBasisState, Complex64)>,
    {
        let mut s = Self::zero_on(modes);
        s.cutoff = cutoff;
        for (b, a) in terms {
            for (m, n) in b.iter() {
                if !s.modes.contains(&m) {
                    return Err(CkaError::UnknownMode(m));
                }
                if n > cutoff {
                    return Err(CkaError::CutoffExceeded { mode: m, count: n, cutoff });
                }
            }
            *s.terms.entry(b).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        s.prune_small();
        let n = s.norm_sqr();
        if !(0.0..=1.0 + NORM_EPS).contains(&n) {
            return Err(CkaError::BadNorm(n));
        }
        Ok(s)
    }

    pub fn with_prune_threshold(mut self, prune: f64) -> Self {
        self.prune = prune;
        self.prune_small();
        self
    }

    pub fn with_cutoff(mut self, cutoff: u32) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeLabel> + '_ {
        self.modes.iter().copied()
    }

    pub fn has_mode(&self, mode: ModeLabel) -> bool {
        self.modes.contains(&mode)
    }

    /// Distinct spatial indices in canonical order.
    pub fn spatial_modes(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.modes.iter().map(|m| m.spatial).collect();
        set.into_iter().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, Complex64)> + '_ {
        self.terms.iter().map(|(b, a)| (b, *a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, basis: &FockBasisState) -> Complex64 {
        self.terms.get(basis).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockState) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(b, a)| other.terms.get(b).map(|o| a.conj() * o))
            .sum()
    }

    /// Scaled to unit norm; the zero state is returned unchanged.
    pub fn normalized(&self) -> FockState {
        let n = self.norm_sqr();
        let mut out = self.clone();
        if n > 0.0 {
            let s = 1.0 / n.sqrt();
            for a in out.terms.values_mut() {
                *a *= s;
            }
        }
        out
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> FockState {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= factor;
        }
        out.prune_small();
        out
    }

    /// Terms whose total photon number equals `photons`.
    pub fn photon_sector(&self, photons: u32) -> FockState {
        let mut out = self.clone();
        out.terms.retain(|b, _| b.total() == photons);
        out
    }

    /// Tensor product over disjoint mode sets.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        if let Some(m) = self.modes.intersection(&other.modes).next() {
            return Err(CkaError::ModeCollision(*m));
        }
        let mut out = FockState::zero_on(self.modes.union(&other.modes).copied())
            .with_cutoff(self.cutoff.max(other.cutoff));
        out.prune = self.prune.min(other.prune);
        for (ba, aa) in &self.terms {
            for (bb, ab) in &other.terms {
                *out.terms.entry(ba.merged(bb)).or_default() += aa * ab;
            }
        }
        out.prune_small();
        Ok(out)
    }

    /// Applies a 2×2 unitary to the creation operators of two modes,
    /// `a_j† → Σ_i u[i][j] a_i†` with `j ∈ {first, second}`.
    pub fn apply_mode_unitary(&self, u: &Matrix2, modes: (ModeLabel, ModeLabel)) -> Result<FockState> {
        let dev = linalg::unitarity_deviation(u);
        if dev > 1e-12 {
            return Err(CkaError::NotUnitary { deviation: dev });
        }
        let (m1, m2) = modes;
        for m in [m1, m2] {
            if !self.modes.contains(&m) {
                return Err(CkaError::UnknownMode(m));
            }
        }
        if m1 == m2 {
            return Err(CkaError::InvalidParameter(format!("mode {m1} given twice")));
        }
        let mut out = FockState::zero_on(self.modes.iter().copied()).with_cutoff(self.cutoff);
        out.prune = self.prune;
        for (basis, amp) in &self.terms {
            let n1 = basis.count(m1);
            let n2 = basis.count(m2);
            let norm_in = (factorial(n1) * factorial(n2)).sqrt();
            for j in 0..=n1 {
                // j of the n1 first-mode photons stay in m1
                let cj = binomial(n1, j) * u[0][0].powu(j) * u[1][0].powu(n1 - j);
                if cj == Complex64::default() {
                    continue;
                }
                for k in 0..=n2 {
                    let ck = binomial(n2, k) * u[0][1].powu(k) * u[1][1].powu(n2 - k);
                    if ck == Complex64::default() {
                        continue;
                    }
                    let p = j + k;
                    let q = n1 + n2 - p;
                    if p > self.cutoff || q > self.cutoff {
                        let (mode, count) = if p > self.cutoff { (m1, p) } else { (m2, q) };
                        return Err(CkaError::CutoffExceeded { mode, count, cutoff: self.cutoff });
                    }
                    let coef = cj * ck * ((factorial(p) * factorial(q)).sqrt() / norm_in);
                    let mut b = basis.clone();
                    b.set(m1, p);
                    b.set(m2, q);
                    *out.terms.entry(b).or_default() += amp * coef;
                }
            }
        }
        out.prune_small();
        Ok(out)
    }

    /// Renames modes according to `map` (a bijection on the touched modes).
    /// Unlisted modes keep their labels. This is a passive permutation of
    /// modes, so amplitudes are unchanged.
    pub fn relabel(&self, map: &BTreeMap<ModeLabel, ModeLabel>) -> Result<FockState> {
        for m in map.keys() {
            if !self.modes.contains(m) {
                return Err(CkaError::UnknownMode(*m));
            }
        }
        let rename = |m: ModeLabel| map.get(&m).copied().unwrap_or(m);
        let new_modes: BTreeSet<ModeLabel> = self.modes.iter().map(|m| rename(*m)).collect();
        if new_modes.len() != self.modes.len() {
            return Err(CkaError::InvalidParameter("mode relabeling is not injective".into()));
        }
        let mut out = FockState::zero_on(new_modes).with_cutoff(self.cutoff);
        out.prune = self.prune;
        for (b, a) in &self.terms {
            let nb = FockBasisState::from_counts(b.iter().map(|(m, n)| (rename(m), n)));
            *out.terms.entry(nb).or_default() += a;
        }
        Ok(out)
    }

    /// Projects onto the exact occupation `pattern` on the listed modes and
    /// traces those modes out. Returns the renormalized remainder and the
    /// branch probability (squared norm of the kept component). A zero-
    /// probability branch yields the zero state and probability 0.
    pub fn post_select(&self, pattern: &BTreeMap<ModeLabel, u32>) -> Result<(FockState, f64)> {
        for m in pattern.keys() {
            if !self.modes.contains(m) {
                return Err(CkaError::UnknownMode(*m));
            }
        }
        let remaining = self.modes.iter().copied().filter(|m| !pattern.contains_key(m));
        let mut kept = FockState::zero_on(remaining).with_cutoff(self.cutoff);
        kept.prune = self.prune;
        for (b, a) in &self.terms {
            if pattern.iter().all(|(m, n)| b.count(*m) == *n) {
                let rest = FockBasisState::from_counts(b.iter().filter(|(m, _)| !pattern.contains_key(m)));
                *kept.terms.entry(rest).or_default() += a;
            }
        }
        Ok(kept.finish_projection())
    }

    /// Projects onto the subspace with the given total photon number in each
    /// listed spatial mode (summed over polarizations). Modes are retained.
    pub fn post_select_spatial(&self, pattern: &BTreeMap<u32, u32>) -> Result<(FockState, f64)> {
        for s in pattern.keys() {
            if !self.modes.iter().any(|m| m.spatial == *s) {
                return Err(CkaError::UnknownMode(ModeLabel::h(*s)));
            }
        }
        let mut kept = self.clone();
        kept.terms.retain(|b, _| pattern.iter().all(|(s, n)| b.spatial_count(*s) == *n));
        Ok(kept.finish_projection())
    }

    fn finish_projection(mut self) -> (FockState, f64) {
        let p = self.norm_sqr();
        if p <= 0.0 {
            self.terms.clear();
            return (self, 0.0);
        }
        (self.normalized(), p)
    }

    /// Dense polarization-qubit amplitudes for a state with exactly one
    /// photon in each of `spatial` (H ↦ 0, V ↦ 1, first listed mode is the
    /// most significant qubit). Terms with any other occupation are an error.
    pub fn polarization_qubits(&self, spatial: &[u32]) -> Result<BTreeMap<u64, Complex64>> {
        let mut out = BTreeMap::new();
        for (b, a) in &self.terms {
            if b.total() as usize != spatial.len() {
                return Err(CkaError::InvalidParameter("state is not one photon per listed mode".into()));
            }
            let mut idx = 0u64;
            for s in spatial {
                let (h, v) = (b.count(ModeLabel::h(*s)), b.count(ModeLabel::v(*s)));
                let bit = match (h, v) {
                    (1, 0) => 0,
                    (0, 1) => 1,
                    _ => return Err(CkaError::InvalidParameter(format!("spatial mode {s} not singly occupied"))),
                };
                idx = (idx << 1) | bit;
            }
            *out.entry(idx).or_default() += a;
        }
        Ok(out)
    }

    /// One line per term: `<mode:pol=count,...> <re> <im>`, modes in
    /// canonical order, amplitudes with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (b, a) in &self.terms {
            let occ: Vec<String> = self.modes.iter().map(|m| format!("{}={}", m, b.count(*m))).collect();
            let occ = if occ.is_empty() { "vac".to_string() } else { occ.join(",") };
            s.push_str(&format!("{} {:.16e} {:.16e}\n", occ, a.re, a.im));
        }
        s
    }

    fn prune_small(&mut self) {
        let t = self.prune;
        self.terms.retain(|_, a| a.norm() >= t);
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{beam_splitter_50_50, identity, pauli_x};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn single(mode: ModeLabel, extra: &[ModeLabel]) -> FockState {
        let modes: Vec<ModeLabel> = std::iter::once(mode).chain(extra.iter().copied()).collect();
        FockState::from_terms(modes, [(FockBasisState::from_counts([(mode, 1)]), c(1.0))]).unwrap()
    }

    #[test]
    fn vacuum_tensor_vacuum() {
        let v = FockState::vacuum_on([ModeLabel::h(0)]).tensor(&FockState::vacuum_on([ModeLabel::h(1)])).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.amplitude(&FockBasisState::vacuum()), c(1.0));
    }

    #[test]
    fn tensor_rejects_overlap() {
        let a = FockState::vacuum_on([ModeLabel::h(0), ModeLabel::v(0)]);
        let b = FockState::vacuum_on([ModeLabel::v(0)]);
        assert_eq!(a.tensor(&b), Err(CkaError::ModeCollision(ModeLabel::v(0))));
    }

    #[test]
    fn identity_and_swap() {
        let s = single(ModeLabel::h(0), &[ModeLabel::v(0)]);
        assert_eq!(s.apply_mode_unitary(&identity(), (ModeLabel::h(0), ModeLabel::v(0))).unwrap(), s);
        let t = s.apply_mode_unitary(&pauli_x(), (ModeLabel::h(0), ModeLabel::v(0))).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.amplitude(&FockBasisState::from_counts([(ModeLabel::v(0), 1)])) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn beam_splitter_on_single_photon() {
        let (a, b) = (ModeLabel::h(0), ModeLabel::h(1));
        let s = single(a, &[b]).apply_mode_unitary(&beam_splitter_50_50(), (a, b)).unwrap();
        assert_eq!(s.len(), 2);
        for (_, amp) in s.terms() {
            assert!((amp.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn hong_ou_mandel_dip() {
        // |1,1⟩ through a 50/50 splitter has no coincidence term.
        let (a, b) = (ModeLabel::h(0), ModeLabel::h(1));
        let s = FockState::from_terms([a, b], [(FockBasisState::from_counts([(a, 1), (b, 1)]), c(1.0))]).unwrap();
        let out = s.apply_mode_unitary(&beam_splitter_50_50(), (a, b)).unwrap();
        assert_eq!(out.amplitude(&FockBasisState::from_counts([(a, 1), (b, 1)])), Complex64::default());
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((out.amplitude(&FockBasisState::from_counts([(a, 2)])).norm() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let s = single(ModeLabel::h(0), &[ModeLabel::v(0)]);
        let bad = [[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        assert!(matches!(
            s.apply_mode_unitary(&bad, (ModeLabel::h(0), ModeLabel::v(0))),
            Err(CkaError::NotUnitary { .. })
        ));
    }

    #[test]
    fn cutoff_is_enforced() {
        let (a, b) = (ModeLabel::h(0), ModeLabel::h(1));
        let s = FockState::from_terms_with_cutoff([a, b], [(FockBasisState::from_counts([(a, 1), (b, 1)]), c(1.0))], 1)
            .unwrap();
        assert!(matches!(
            s.apply_mode_unitary(&beam_splitter_50_50(), (a, b)),
            Err(CkaError::CutoffExceeded { .. })
        ));
    }

    #[test]
    fn post_select_basis_state() {
        let s = single(ModeLabel::h(0), &[ModeLabel::v(0)]);
        let pattern = BTreeMap::from([(ModeLabel::h(0), 1), (ModeLabel::v(0), 0)]);
        let (rest, p) = s.post_select(&pattern).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert_eq!(rest.modes().count(), 0);
        assert_eq!(rest.amplitude(&FockBasisState::vacuum()), c(1.0));
        let miss = BTreeMap::from([(ModeLabel::h(0), 0)]);
        let (empty, p0) = s.post_select(&miss).unwrap();
        assert_eq!(p0, 0.0);
        assert!(empty.is_empty());
    }

    #[test]
    fn dump_format() {
        let s = single(ModeLabel::h(1), &[ModeLabel::v(1)]);
        assert_eq!(s.dump(), "1:H=1,1:V=0 1.0000000000000000e0 0.0000000000000000e0\n");
        assert_eq!(FockState::vacuum().dump(), "vac 1.0000000000000000e0 0.0000000000000000e0\n");
    }

    #[test]
    fn excessive_norm_rejected() {
        let b = FockBasisState::vacuum();
        assert!(matches!(FockState::from_terms([], [(b, c(1.1))]), Err(CkaError::BadNorm(_))));
    }
}

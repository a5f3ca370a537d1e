//! Photon-pair sources: truncated type-II PDC output and ideal Bell states.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{CkaError, Result};
use crate::fock::{FockBasisState, FockState, ModeLabel, Polarization, DEFAULT_CUTOFF};
use crate::linalg::{self, Matrix2};

/// Default pair-number truncation.
pub const DEFAULT_KMAX: u32 = 2;

/// Parameters of one downconversion source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdcParams {
    pub lambda: f64,
    pub kmax: u32,
    /// (H, V) modes of the signal arm.
    pub signal_modes: (ModeLabel, ModeLabel),
    /// (H, V) modes of the idler arm.
    pub idler_modes: (ModeLabel, ModeLabel),
}

impl PdcParams {
    /// Source emitting into spatial modes `signal` and `idler`.
    pub fn new(lambda: f64, kmax: u32, signal: u32, idler: u32) -> Result<Self> {
        let p = Self {
            lambda,
            kmax,
            signal_modes: (ModeLabel::h(signal), ModeLabel::v(signal)),
            idler_modes: (ModeLabel::h(idler), ModeLabel::v(idler)),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(CkaError::InvalidParameter(format!("lambda {} outside [0, 1)", self.lambda)));
        }
        let modes = [self.signal_modes.0, self.signal_modes.1, self.idler_modes.0, self.idler_modes.1];
        for (i, a) in modes.iter().enumerate() {
            if modes[i + 1..].contains(a) {
                return Err(CkaError::InvalidParameter(format!("mode {a} used twice")));
            }
        }
        Ok(())
    }
}

/// `√(1−λ²) Σ_{k≤kmax} λᵏ |Φ_k⟩` with
/// `|Φ_k⟩ = (k+1)^{-1/2} Σ_m (−1)^m |m, k−m; k−m, m⟩`: `m` photons in signal-H
/// and idler-V, `k−m` in signal-V and idler-H.
pub fn pdc_state(p: &PdcParams) -> Result<FockState> {
    p.validate()?;
    let (sh, sv) = p.signal_modes;
    let (ih, iv) = p.idler_modes;
    let lam = p.lambda;
    let pre = (1.0 - lam * lam).sqrt();
    let mut terms = Vec::new();
    for k in 0..=p.kmax {
        let weight = pre * lam.powi(k as i32) / f64::from(k + 1).sqrt();
        if weight == 0.0 {
            continue;
        }
        for m in 0..=k {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let basis = FockBasisState::from_counts([(sh, m), (sv, k - m), (ih, k - m), (iv, m)]);
            terms.push((basis, Complex64::new(sign * weight, 0.0)));
        }
    }
    FockState::from_terms_with_cutoff([sh, sv, ih, iv], terms, DEFAULT_CUTOFF.max(p.kmax))
}

/// Closed form of the truncated squared norm, `1 − λ^{2(kmax+1)}`.
pub fn pdc_truncated_norm(lambda: f64, kmax: u32) -> f64 {
    1.0 - lambda.powi(2 * (kmax as i32 + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// Two-photon Bell state on spatial modes `a`, `b` with H ↦ 0, V ↦ 1:
/// `Φ± = (|HH⟩ ± |VV⟩)/√2`, `Ψ± = (|HV⟩ ± |VH⟩)/√2`.
pub fn bell_state(kind: BellKind, a: u32, b: u32) -> Result<FockState> {
    if a == b {
        return Err(CkaError::InvalidParameter("Bell state needs two distinct spatial modes".into()));
    }
    use Polarization::{H, V};
    let h = FRAC_1_SQRT_2;
    let (first, second, sign) = match kind {
        BellKind::PhiPlus => ((H, H), (V, V), 1.0),
        BellKind::PhiMinus => ((H, H), (V, V), -1.0),
        BellKind::PsiPlus => ((H, V), (V, H), 1.0),
        BellKind::PsiMinus => ((H, V), (V, H), -1.0),
    };
    let term = |(pa, pb): (Polarization, Polarization)| {
        FockBasisState::from_counts([(ModeLabel::new(a, pa), 1), (ModeLabel::new(b, pb), 1)])
    };
    let modes = [ModeLabel::h(a), ModeLabel::v(a), ModeLabel::h(b), ModeLabel::v(b)];
    FockState::from_terms(
        modes,
        [(term(first), Complex64::new(h, 0.0)), (term(second), Complex64::new(sign * h, 0.0))],
    )
}

/// The PDC singlet `|Φ₁⟩ = (|V⟩_s|H⟩_i − |H⟩_s|V⟩_i)/√2`, which is `−Ψ⁻`.
pub fn singlet(signal: u32, idler: u32) -> Result<FockState> {
    Ok(bell_state(BellKind::PsiMinus, signal, idler)?.scaled(Complex64::new(-1.0, 0.0)))
}

/// Polarization unitary on the signal photon that maps `|Φ₁⟩` exactly onto
/// the requested Bell state. Built from a polarization swap (half-wave plate
/// at 45°) and a phase shift on V.
pub fn stage_one_unitary(kind: BellKind) -> Matrix2 {
    let x = linalg::pauli_x();
    let z = linalg::pauli_z();
    let minus = Complex64::new(-1.0, 0.0);
    match kind {
        // Φ₁ = −Ψ⁻
        BellKind::PsiMinus => linalg::scale(&linalg::identity(), minus),
        // Z_s Φ₁ = −Ψ⁺
        BellKind::PsiPlus => linalg::scale(&z, minus),
        // X_s Φ₁ = Φ⁻
        BellKind::PhiMinus => x,
        // Z_s X_s Φ₁ = Φ⁺
        BellKind::PhiPlus => linalg::matmul(&z, &x),
    }
}

/// Runs one PDC, applies the stage-one unitary on the signal polarization
/// and post-selects one photon in each arm. Returns the resulting Bell state
/// and the heralding probability, which equals `λ²(1−λ²)`.
pub fn heralded_bell(lambda: f64, kmax: u32, kind: BellKind, signal: u32, idler: u32) -> Result<(FockState, f64)> {
    let p = PdcParams::new(lambda, kmax, signal, idler)?;
    let s = pdc_state(&p)?.apply_mode_unitary(&stage_one_unitary(kind), p.signal_modes)?;
    s.post_select_spatial(&BTreeMap::from([(signal, 1), (idler, 1)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &FockState, b: &FockState) -> f64 {
        a.inner(b).norm()
    }

    #[test]
    fn zero_coupling_is_vacuum() {
        let s = pdc_state(&PdcParams::new(0.0, 3, 1, 2).unwrap()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(&FockBasisState::vacuum()), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn two_sector_weights() {
        let s = pdc_state(&PdcParams::new(0.1, 1, 1, 2).unwrap()).unwrap();
        assert!((s.photon_sector(0).norm_sqr() - 0.99).abs() < 1e-15);
        assert!((s.photon_sector(2).norm_sqr() - 0.0099).abs() < 1e-15);
    }

    #[test]
    fn small_lambda_norm_is_one() {
        let s = pdc_state(&PdcParams::new(0.01, 3, 1, 2).unwrap()).unwrap();
        assert!((s.norm_sqr() - (1.0 - 1e-16)).abs() < 1e-12);
    }

    #[test]
    fn signs_of_two_pair_sector() {
        let p = PdcParams::new(0.5, 2, 1, 2).unwrap();
        let s = pdc_state(&p).unwrap();
        let amp = |m: u32| {
            s.amplitude(&FockBasisState::from_counts([
                (ModeLabel::h(1), m),
                (ModeLabel::v(1), 2 - m),
                (ModeLabel::h(2), 2 - m),
                (ModeLabel::v(2), m),
            ]))
        };
        let w = (0.75f64).sqrt() * 0.25 / 3f64.sqrt();
        assert!((amp(0).re - w).abs() < 1e-15);
        assert!((amp(1).re + w).abs() < 1e-15);
        assert!((amp(2).re - w).abs() < 1e-15);
    }

    #[test]
    fn bell_states() {
        let phi_p = bell_state(BellKind::PhiPlus, 0, 1).unwrap();
        let hh = FockBasisState::from_counts([(ModeLabel::h(0), 1), (ModeLabel::h(1), 1)]);
        let vv = FockBasisState::from_counts([(ModeLabel::v(0), 1), (ModeLabel::v(1), 1)]);
        assert!((phi_p.amplitude(&hh).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((phi_p.amplitude(&vv).re - FRAC_1_SQRT_2).abs() < 1e-15);
        let phi_m = bell_state(BellKind::PhiMinus, 0, 1).unwrap();
        assert!(phi_p.inner(&phi_m).norm() < 1e-15);
        let psi_m = bell_state(BellKind::PsiMinus, 0, 1).unwrap();
        let phi1 = singlet(0, 1).unwrap();
        assert!((phi1.inner(&psi_m).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_pair_sector_is_the_singlet() {
        let s = pdc_state(&PdcParams::new(0.3, 3, 1, 2).unwrap()).unwrap();
        let sector = s.photon_sector(2).normalized();
        let phi1 = singlet(1, 2).unwrap();
        for (b, a) in phi1.terms() {
            assert!((sector.amplitude(b) - a).norm() < 1e-12);
        }
        assert_eq!(sector.len(), phi1.len());
    }

    #[test]
    fn stage_one_maps_singlet_onto_every_kind() {
        for kind in [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus] {
            let (s, p) = heralded_bell(0.01, 2, kind, 1, 2).unwrap();
            let target = bell_state(kind, 1, 2).unwrap();
            assert!((s.inner(&target) - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{kind:?}");
            assert!((p - 0.01f64.powi(2) * (1.0 - 0.01f64.powi(2))).abs() < 1e-18);
            assert!(overlap(&s, &target) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn invalid_lambda() {
        assert!(PdcParams::new(1.0, 2, 1, 2).is_err());
        assert!(PdcParams::new(-0.1, 2, 1, 2).is_err());
        assert!(PdcParams::new(0.1, 2, 1, 1).is_err());
    }
}

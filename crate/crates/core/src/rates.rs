//! Closed-form loss, transmission, creation and key-rate formulas, plus the
//! grid sweep engine that produces figure datasets as CSV.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{CkaError, Result};

/// Default pump repetition rate in Hz.
pub const DEFAULT_PUMP_HZ: f64 = 8.0e7;
/// Default number of protocol rounds used for the sifting factor.
pub const DEFAULT_ROUNDS: usize = 1000;
/// Default fraction of type-2 (test) rounds.
pub const DEFAULT_TYPE2_FRACTION: f64 = 0.1;
/// Success probability of one logical CNOT built from two fusion gates.
pub const EPS_CNOT: f64 = 0.25;

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(CkaError::InvalidParameter(format!("{name} = {p} outside [0, 1]")))
    }
}

/// Fiber loss probability `1 − e^{−l/l0}`.
pub fn fiber_eta(l: f64, l0: f64) -> Result<f64> {
    if !(l >= 0.0) || !(l0 > 0.0) {
        return Err(CkaError::InvalidParameter(format!("need l >= 0 and l0 > 0, got l={l}, l0={l0}")));
    }
    Ok(1.0 - (-l / l0).exp())
}

/// Attenuation length in km for an attenuation rate in dB/km.
pub fn attenuation_length_km(db_per_km: f64) -> Result<f64> {
    if !(db_per_km > 0.0) {
        return Err(CkaError::InvalidParameter(format!("attenuation {db_per_km} dB/km must be positive")));
    }
    Ok(10.0 / (db_per_km * std::f64::consts::LN_10))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    /// Literal product of the two loss probabilities.
    #[default]
    LossProduct,
    /// Loss of either stage: `1 − (1−η_i)(1−η_d)`.
    TransmissionProduct,
}

/// Combines channel and detector loss.
pub fn total_eta(eta_i: f64, eta_d: f64, rule: CombineRule) -> f64 {
    match rule {
        CombineRule::LossProduct => eta_i * eta_d,
        CombineRule::TransmissionProduct => 1.0 - (1.0 - eta_i) * (1.0 - eta_d),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLoss {
    /// Same total loss probability for every lossy party.
    Uniform(f64),
    /// One loss probability per lossy party.
    PerParty(Vec<f64>),
    /// Fiber lengths in km; a single length applies to every party.
    Fiber { l0_km: f64, lengths_km: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossModel {
    pub channel: ChannelLoss,
    /// Detector loss; when absent the channel value is the total loss.
    pub detector: Option<f64>,
    pub rule: CombineRule,
}

impl LossModel {
    pub fn uniform(eta: f64) -> Self {
        Self { channel: ChannelLoss::Uniform(eta), detector: None, rule: CombineRule::default() }
    }

    /// Total per-photon loss probability for each of `n` lossy parties.
    pub fn party_etas(&self, n: usize) -> Result<Vec<f64>> {
        let channel = match &self.channel {
            ChannelLoss::Uniform(e) => vec![*e; n],
            ChannelLoss::PerParty(v) => {
                if v.len() != n {
                    return Err(CkaError::InvalidParameter(format!("{} loss values for {n} parties", v.len())));
                }
                v.clone()
            }
            ChannelLoss::Fiber { l0_km, lengths_km } => {
                let lens = match lengths_km.len() {
                    1 => vec![lengths_km[0]; n],
                    k if k == n => lengths_km.clone(),
                    k => return Err(CkaError::InvalidParameter(format!("{k} fiber lengths for {n} parties"))),
                };
                lens.iter().map(|l| fiber_eta(*l, *l0_km)).collect::<Result<_>>()?
            }
        };
        let out: Vec<f64> = match self.detector {
            None => channel,
            Some(d) => {
                check_prob("detector loss", d)?;
                channel.iter().map(|e| total_eta(*e, d, self.rule)).collect()
            }
        };
        for e in &out {
            check_prob("loss probability", *e)?;
        }
        Ok(out)
    }
}

/// Probability that all `n` single photons arrive.
pub fn p_transmit_nonenc(eta: f64, n: usize) -> f64 {
    (1.0 - eta).powi(n as i32)
}

/// Probability that one lossy party loses at most one of its four photons.
pub fn p_success_party_enc(eta: f64) -> f64 {
    let e2 = eta * eta;
    1.0 - 6.0 * e2 + 8.0 * e2 * eta - 3.0 * e2 * e2
}

pub fn p_transmit_enc(eta: f64, n: usize) -> f64 {
    p_success_party_enc(eta).powi(n as i32)
}

pub fn p_transmit_nonenc_parties(etas: &[f64]) -> f64 {
    etas.iter().map(|e| 1.0 - e).product()
}

pub fn p_transmit_enc_parties(etas: &[f64]) -> f64 {
    etas.iter().map(|e| p_success_party_enc(*e)).product()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Sifting and error-correction factor `(L − 2m)(1 − h(p))/L`.
pub fn key_factor_bb84(l: usize, m: usize, p: f64) -> Result<f64> {
    if l == 0 {
        return Err(CkaError::InvalidParameter("round count must be positive".into()));
    }
    if 2 * m > l {
        return Err(CkaError::InvalidParameter(format!("2m = {} exceeds L = {l}", 2 * m)));
    }
    check_prob("p", p)?;
    Ok((l - 2 * m) as f64 * (1.0 - binary_entropy(p)) / l as f64)
}

/// Number of type-2 rounds, `round(p·L)` with ties to even.
pub fn type2_count(l: usize, fraction: f64) -> usize {
    ((fraction * l as f64).round_ties_even().max(0.0) as usize).min(l)
}

/// Key factor for `L` rounds with a type-2 fraction `p`.
pub fn key_factor_for(l: usize, fraction: f64) -> Result<f64> {
    key_factor_bb84(l, type2_count(l, fraction), fraction)
}

/// Probability that one PDC emits exactly one pair.
pub fn p_bell(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    l2 * (1.0 - l2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Protocol {
    #[serde(rename = "enc")]
    Encoded,
    #[serde(rename = "nonenc")]
    Nonencoded,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Encoded => "enc",
            Protocol::Nonencoded => "nonenc",
        }
    }
}

impl FromStr for Protocol {
    type Err = CkaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enc" => Ok(Protocol::Encoded),
            "nonenc" => Ok(Protocol::Nonencoded),
            _ => Err(CkaError::InvalidParameter(format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Pdc { lambda: f64 },
    Generic { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SourceModel {
    pub kind: SourceKind,
    pub pump_hz: f64,
}

impl SourceModel {
    pub fn pdc(lambda: f64) -> Self {
        Self { kind: SourceKind::Pdc { lambda }, pump_hz: DEFAULT_PUMP_HZ }
    }

    pub fn generic(p: f64) -> Self {
        Self { kind: SourceKind::Generic { p }, pump_hz: DEFAULT_PUMP_HZ }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pump_hz >= 0.0) || !self.pump_hz.is_finite() {
            return Err(CkaError::InvalidParameter("pump rate must be finite and >= 0".into()));
        }
        match self.kind {
            SourceKind::Pdc { lambda } if !(0.0..1.0).contains(&lambda) => {
                Err(CkaError::InvalidParameter(format!("lambda {lambda} outside [0, 1)")))
            }
            SourceKind::Pdc { .. } => Ok(()),
            SourceKind::Generic { p } => check_prob("source p", p),
        }
    }

    /// Probability that one source produces a usable Bell pair.
    pub fn pair_probability(&self) -> f64 {
        match self.kind {
            SourceKind::Pdc { lambda } => p_bell(lambda),
            SourceKind::Generic { p } => p,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            SourceKind::Pdc { .. } => "pdc",
            SourceKind::Generic { .. } => "generic",
        }
    }

    pub fn param(&self) -> f64 {
        match self.kind {
            SourceKind::Pdc { lambda } => lambda,
            SourceKind::Generic { p } => p,
        }
    }
}

/// Probability of creating the resource for `n` lossy parties.
/// Unencoded: `⌈(n+1)/2⌉` pair sources and `⌊n/2⌋` PBS post-selections at ½.
/// Encoded: `2n+1` pair sources and `2n` logical CNOTs at ¼.
pub fn p_create(protocol: Protocol, source: &SourceModel, n: usize) -> f64 {
    let s = source.pair_probability();
    match protocol {
        Protocol::Nonencoded => s.powi((n + 1).div_ceil(2) as i32) * 0.5f64.powi((n / 2) as i32),
        Protocol::Encoded => s.powi((2 * n + 1) as i32) * EPS_CNOT.powi((2 * n) as i32),
    }
}

pub fn rate_hz(p_create: f64, p_transmit: f64, key_factor: f64, pump_hz: f64) -> f64 {
    pump_hz * p_create * p_transmit * key_factor
}

/// Loss probability where the encoded single-party transmission drops
/// below the unencoded one, found by bisection on `[lo, hi]`.
pub fn transmission_crossover(lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let f = |e: f64| p_transmit_enc(e, 1) - p_transmit_nonenc(e, 1);
    bisect(f, lo, hi, tol)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return Err(CkaError::InvalidParameter(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "parties")]
    Parties,
    #[serde(rename = "source-p")]
    SourceP,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Lambda => "lambda",
            SweepParam::Parties => "parties",
            SweepParam::SourceP => "source-p",
        }
    }
}

impl FromStr for SweepParam {
    type Err = CkaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SweepParam::Eta),
            "lambda" => Ok(SweepParam::Lambda),
            "parties" => Ok(SweepParam::Parties),
            "source-p" => Ok(SweepParam::SourceP),
            _ => Err(CkaError::InvalidParameter(format!("unknown sweep parameter {s:?}"))),
        }
    }
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub param: SweepParam,
    pub value: f64,
    pub n: usize,
    pub protocol: Protocol,
    pub source: SourceModel,
    pub eta: f64,
    pub rounds: usize,
    pub type2_fraction: f64,
    pub p_create: f64,
    pub p_transmit: f64,
    pub key_factor: f64,
    pub rate_hz: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepQuery {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    /// Lossy party counts; ignored when sweeping over parties.
    pub parties: Vec<usize>,
    pub protocols: Vec<Protocol>,
    pub source: SourceModel,
    /// Fixed loss; ignored when sweeping over η.
    pub loss: LossModel,
    pub rounds: usize,
    pub type2_fraction: f64,
    /// Also apply the sifting factor to the encoded protocol.
    pub key_factor_encoded: bool,
}

impl SweepQuery {
    pub fn new(param: SweepParam, from: f64, to: f64, steps: usize) -> Self {
        Self {
            param,
            from,
            to,
            steps,
            parties: vec![2],
            protocols: vec![Protocol::Encoded, Protocol::Nonencoded],
            source: SourceModel::pdc(0.01),
            loss: LossModel::uniform(0.0),
            rounds: DEFAULT_ROUNDS,
            type2_fraction: DEFAULT_TYPE2_FRACTION,
            key_factor_encoded: false,
        }
    }
}

/// Inclusive evenly spaced grid.
pub fn linspace(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !from.is_finite() || !to.is_finite() || from > to || (steps == 1 && from != to) {
        return Err(CkaError::MalformedRange(format!("from {from} to {to} in {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let d = (to - from) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i == steps - 1 { to } else { from + d * i as f64 }).collect())
}

/// Evaluates one point.
pub fn evaluate(
    protocol: Protocol,
    source: &SourceModel,
    etas: &[f64],
    rounds: usize,
    type2_fraction: f64,
    key_factor_encoded: bool,
) -> Result<(f64, f64, f64, f64)> {
    source.validate()?;
    let n = etas.len();
    let pc = p_create(protocol, source, n);
    let pt = match protocol {
        Protocol::Encoded => p_transmit_enc_parties(etas),
        Protocol::Nonencoded => p_transmit_nonenc_parties(etas),
    };
    let kf = match protocol {
        Protocol::Encoded if !key_factor_encoded => 1.0,
        _ => key_factor_for(rounds, type2_fraction)?,
    };
    Ok((pc, pt, kf, rate_hz(pc, pt, kf, source.pump_hz)))
}

/// Evaluates a query on its grid. Rows are ordered by protocol, party count
/// and swept value.
pub fn sweep(q: &SweepQuery) -> Result<Vec<RatePoint>> {
    let grid = linspace(q.from, q.to, q.steps)?;
    let mut out = Vec::new();
    for &value in &grid {
        let (parties, source) = match q.param {
            SweepParam::Parties => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(CkaError::MalformedRange(format!("party count {value} is not a whole number")));
                }
                (vec![value as usize], q.source)
            }
            SweepParam::Lambda => (q.parties.clone(), SourceModel { kind: SourceKind::Pdc { lambda: value }, ..q.source }),
            SweepParam::SourceP => (q.parties.clone(), SourceModel { kind: SourceKind::Generic { p: value }, ..q.source }),
            SweepParam::Eta => (q.parties.clone(), q.source),
        };
        if q.param == SweepParam::Eta {
            check_prob("eta", value).map_err(|e| CkaError::MalformedRange(e.to_string()))?;
        }
        source.validate().map_err(|e| CkaError::MalformedRange(e.to_string()))?;
        for &n in &parties {
            let etas = match q.param {
                SweepParam::Eta => vec![value; n],
                _ => q.loss.party_etas(n)?,
            };
            let eta = if etas.is_empty() { 0.0 } else { etas.iter().sum::<f64>() / etas.len() as f64 };
            for &protocol in &q.protocols {
                let (p_create, p_transmit, key_factor, rate_hz) =
                    evaluate(protocol, &source, &etas, q.rounds, q.type2_fraction, q.key_factor_encoded)?;
                out.push(RatePoint {
                    param: q.param,
                    value,
                    n,
                    protocol,
                    source,
                    eta,
                    rounds: q.rounds,
                    type2_fraction: q.type2_fraction,
                    p_create,
                    p_transmit,
                    key_factor,
                    rate_hz,
                });
            }
        }
    }
    sort_points(&mut out);
    Ok(out)
}

pub fn sort_points(points: &mut [RatePoint]) {
    points.sort_by(|a, b| {
        (a.protocol, a.n).cmp(&(b.protocol, b.n)).then(a.value.total_cmp(&b.value))
    });
}

pub const CSV_HEADER: &str =
    "param,value,n_parties,protocol,source_kind,source_param,eta,p_create,p_transmit,key_factor,rate_hz,rate_mhz";

/// Formats with 12 significant digits, dropping trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..12).contains(&exp) {
        let mant = trim_zeros(mant);
        return format!("{mant}e{exp}");
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn to_csv(points: &[RatePoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.param.as_str(),
            fmt_sig(p.value),
            p.n,
            p.protocol.as_str(),
            p.source.kind_str(),
            fmt_sig(p.source.param()),
            fmt_sig(p.eta),
            fmt_sig(p.p_create),
            fmt_sig(p.p_transmit),
            fmt_sig(p.key_factor),
            fmt_sig(p.rate_hz),
            fmt_sig(p.rate_hz / 1e6),
        );
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Transmission probability against loss for 3 and 6 parties.
    PEta,
    /// Rate against party count for three loss values.
    RateN,
    /// Rate against PDC coupling for 3, 6 and 9 parties.
    RateLambda,
    /// Rate against party count for four source probabilities at η = 0.3.
    RateSourceP,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::PEta, Figure::RateN, Figure::RateLambda, Figure::RateSourceP];

    pub fn name(self) -> &'static str {
        match self {
            Figure::PEta => "fig-p-eta",
            Figure::RateN => "fig-rate-n",
            Figure::RateLambda => "fig-rate-lambda",
            Figure::RateSourceP => "fig-rate-sourcep",
        }
    }

    /// Column plotted on the y axis.
    pub fn y_column(self) -> &'static str {
        match self {
            Figure::PEta => "p_transmit",
            _ => "rate_mhz",
        }
    }

    pub fn queries(self) -> Vec<SweepQuery> {
        match self {
            Figure::PEta => {
                let mut q = SweepQuery::new(SweepParam::Eta, 0.0, 1.0, 101);
                q.parties = vec![2, 5];
                vec![q]
            }
            Figure::RateN => [0.1, 0.3, 0.7]
                .iter()
                .map(|eta| {
                    let mut q = SweepQuery::new(SweepParam::Parties, 1.0, 10.0, 10);
                    q.loss = LossModel::uniform(*eta);
                    q
                })
                .collect(),
            Figure::RateLambda => {
                let mut q = SweepQuery::new(SweepParam::Lambda, 0.001, 0.1, 100);
                q.parties = vec![2, 5, 8];
                vec![q]
            }
            Figure::RateSourceP => [1e-4, 0.1, 0.3, 0.5]
                .iter()
                .map(|p| {
                    let mut q = SweepQuery::new(SweepParam::Parties, 2.0, 10.0, 9);
                    q.source = SourceModel::generic(*p);
                    q.loss = LossModel::uniform(0.3);
                    q
                })
                .collect(),
        }
    }

    pub fn points(self) -> Result<Vec<RatePoint>> {
        let mut all = Vec::new();
        for q in self.queries() {
            all.extend(sweep(&q)?);
        }
        sort_points(&mut all);
        Ok(all)
    }

    /// Gnuplot script plotting the CSV written to `csv_path`.
    pub fn gnuplot(self, csv_path: &str) -> String {
        let (x, log) = match self {
            Figure::PEta => ("eta", false),
            Figure::RateN => ("parties", true),
            Figure::RateLambda => ("lambda", true),
            Figure::RateSourceP => ("parties", true),
        };
        let y = self.y_column();
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set xlabel '{x}'");
        let _ = writeln!(s, "set ylabel '{y}'");
        if log {
            let _ = writeln!(s, "set logscale y");
        }
        let _ = writeln!(s, "plot '{csv_path}' using 'value':'{y}' with linespoints");
        s
    }
}

impl FromStr for Figure {
    type Err = CkaError;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| CkaError::InvalidParameter(format!("unknown figure {s:?}")))
    }
}

/// Rate difference `encoded − unencoded` for a generic source `p`.
pub fn rate_gap(p: f64, n: usize, eta: f64) -> Result<f64> {
    let source = SourceModel::generic(p);
    let etas = vec![eta; n];
    let enc = evaluate(Protocol::Encoded, &source, &etas, DEFAULT_ROUNDS, DEFAULT_TYPE2_FRACTION, false)?.3;
    let non = evaluate(Protocol::Nonencoded, &source, &etas, DEFAULT_ROUNDS, DEFAULT_TYPE2_FRACTION, false)?.3;
    Ok(enc - non)
}

/// Smallest source probability in `[lo, hi]` where the encoded rate
/// overtakes the unencoded one, scanned on `steps` points and refined by
/// bisection. `None` when the sign never changes.
pub fn source_p_crossing(n: usize, eta: f64, lo: f64, hi: f64, steps: usize) -> Result<Option<f64>> {
    let grid = linspace(lo, hi, steps)?;
    let mut prev: Option<(f64, f64)> = None;
    for p in grid {
        let g = rate_gap(p, n, eta)?;
        if let Some((p0, g0)) = prev {
            if g0 < 0.0 && g >= 0.0 {
                let root = bisect(|x| rate_gap(x, n, eta).unwrap_or(f64::NAN), p0, p, 1e-12)?;
                return Ok(Some(root));
            }
        }
        prev = Some((p, g));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1e-300)
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(fiber_eta(0.0, 5.0).unwrap(), 0.0);
        assert!(rel(fiber_eta(5.0, 5.0).unwrap(), 1.0 - (-1.0f64).exp()));
        assert!((attenuation_length_km(0.1).unwrap() - 43.429).abs() < 1e-3);
        assert!(fiber_eta(1.0, 0.0).is_err());
    }

    #[test]
    fn combine_rules() {
        assert_eq!(total_eta(0.5, 0.5, CombineRule::LossProduct), 0.25);
        assert_eq!(total_eta(0.0, 0.3, CombineRule::LossProduct), 0.0);
        assert!((total_eta(0.0, 0.3, CombineRule::TransmissionProduct) - 0.3).abs() < 1e-15);
        assert!((total_eta(0.1, 0.2, CombineRule::TransmissionProduct) - 0.28).abs() < 1e-15);
    }

    #[test]
    fn transmission_examples() {
        assert_eq!(p_transmit_nonenc(0.0, 5), 1.0);
        assert_eq!(p_transmit_nonenc(1.0, 1), 0.0);
        assert_eq!(p_transmit_nonenc(0.5, 2), 0.25);
        assert_eq!(p_success_party_enc(0.0), 1.0);
        assert!((p_success_party_enc(0.5) - 0.3125).abs() < 1e-15);
        assert!((p_success_party_enc(0.1) - 0.9477).abs() < 1e-12);
        assert_eq!(p_transmit_enc(0.7, 0), 1.0);
        assert!((p_transmit_enc(0.1, 2) - 0.9477f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn key_factor_examples() {
        assert!(key_factor_bb84(1000, 250, 0.5).unwrap().abs() < 1e-15);
        let h = -0.1 * 0.1f64.log2() - 0.9 * 0.9f64.log2();
        assert!((key_factor_bb84(1000, 100, 0.1).unwrap() - 0.8 * (1.0 - h)).abs() < 1e-12);
        assert!((key_factor_bb84(1000, 100, 0.1).unwrap() - 0.42480).abs() < 1e-5);
        assert_eq!(key_factor_bb84(10, 0, 0.0).unwrap(), 1.0);
        assert!(key_factor_bb84(10, 6, 0.1).is_err());
        assert_eq!(type2_count(1000, 0.1), 100);
        assert_eq!(type2_count(5, 0.5), 2);
        assert_eq!(type2_count(7, 0.5), 4);
    }

    #[test]
    fn creation_examples() {
        assert_eq!(p_bell(0.0), 0.0);
        assert!(rel(p_bell(0.01), 9.999e-5));
        assert!((p_bell(std::f64::consts::FRAC_1_SQRT_2) - 0.25).abs() < 1e-15);
        let s = SourceModel::generic(0.3);
        assert!(rel(p_create(Protocol::Nonencoded, &s, 1), 0.3));
        assert!(rel(p_create(Protocol::Encoded, &s, 0), 0.3));
        assert!(rel(p_create(Protocol::Encoded, &s, 2), 0.3f64.powi(5) / 256.0));
        // N = 4: two sources, one PBS
        assert!(rel(p_create(Protocol::Nonencoded, &s, 3), 0.09 * 0.5));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_hz(1.0, 1.0, 1.0, DEFAULT_PUMP_HZ), 8e7);
        let s = SourceModel::pdc(0.01);
        let kf = key_factor_for(1000, 0.1).unwrap();
        let (_, _, _, r) = evaluate(Protocol::Nonencoded, &s, &[0.0; 3], 1000, 0.1, false).unwrap();
        assert!(rel(r, 8e7 * (1e-4f64 * 0.9999).powi(2) * 0.5 * kf));
    }

    #[test]
    fn crossover_bisection() {
        let root = transmission_crossover(0.1, 0.5, 1e-12).unwrap();
        assert!((root - (5.0 - 13f64.sqrt()) / 6.0).abs() < 1e-9);
    }

    #[test]
    fn fmt_sig_cases() {
        assert_eq!(fmt_sig(0.09765625), "0.09765625");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(8e7), "80000000");
        assert_eq!(fmt_sig(9.4921875e-6), "9.4921875e-6");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.5e13), "1.5e13");
    }

    #[test]
    fn sweep_row_at_half_loss() {
        let mut q = SweepQuery::new(SweepParam::Eta, 0.0, 1.0, 11);
        q.protocols = vec![Protocol::Encoded];
        let pts = sweep(&q).unwrap();
        assert_eq!(pts.len(), 11);
        let half = pts.iter().find(|p| (p.value - 0.5).abs() < 1e-12).unwrap();
        assert_eq!(half.p_transmit, 0.09765625);
        assert!(to_csv(&pts).contains(",0.09765625,"));
    }

    #[test]
    fn malformed_ranges() {
        assert!(matches!(linspace(1.0, 0.0, 3), Err(CkaError::MalformedRange(_))));
        assert!(matches!(linspace(0.0, 1.0, 0), Err(CkaError::MalformedRange(_))));
        assert!(matches!(sweep(&SweepQuery::new(SweepParam::Parties, 1.0, 2.0, 3)), Err(CkaError::MalformedRange(_))));
        assert!(matches!(sweep(&SweepQuery::new(SweepParam::Eta, 0.0, 2.0, 3)), Err(CkaError::MalformedRange(_))));
    }

    #[test]
    fn rows_are_sorted() {
        let pts = Figure::PEta.points().unwrap();
        assert_eq!(pts.len(), 101 * 2 * 2);
        assert_eq!(pts[0].protocol, Protocol::Encoded);
        assert_eq!(pts[0].n, 2);
        assert!(pts.windows(2).all(|w| (w[0].protocol, w[0].n, w[0].value) <= (w[1].protocol, w[1].n, w[1].value)));
    }

    #[test]
    fn generic_source_ranking() {
        // With every factor computed as stated, the encoded rate trails at
        // all party counts even for p = 1.
        for n in 2..=10 {
            assert!(rate_gap(1e-4, n, 0.3).unwrap() < 0.0);
            assert!(rate_gap(0.5, n, 0.3).unwrap() < 0.0);
        }
        assert_eq!(source_p_crossing(3, 0.3, 1e-4, 1.0, 1000).unwrap(), None);
    }

    #[test]
    fn fiber_loss_model() {
        let m = LossModel { channel: ChannelLoss::Fiber { l0_km: 10.0, lengths_km: vec![10.0] }, detector: Some(0.1), rule: CombineRule::TransmissionProduct };
        let e = m.party_etas(2).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0] - (1.0 - (-1.0f64).exp() * 0.9)).abs() < 1e-12);
        assert!(LossModel { channel: ChannelLoss::PerParty(vec![0.1]), detector: None, rule: CombineRule::LossProduct }.party_etas(2).is_err());
    }
}

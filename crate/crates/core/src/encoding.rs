//! Parity and redundant encodings on a qubit register, and the encoded GHZ
//! resource shared between party `A` and the lossy parties `B_i`.
//!
//! A parity block of `m` physical qubits holds one logical qubit:
//! `|0⟩^(m) = (|+⟩^⊗m + |−⟩^⊗m)/√2` is the uniform superposition of even-
//! weight computational strings and `|1⟩^(m)` the odd-weight one. Redundant
//! encoding repeats the block `q` times; a party owns a list of blocks.
//!
//! Qubit 0 is the most significant bit of a basis index and is printed
//! leftmost in dumps.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{CkaError, Result};
use crate::linalg::{self, Matrix2, Matrix4};

/// Largest register the simulator will build.
pub const MAX_QUBITS: usize = 24;

const NORM_TOL: f64 = 1e-12;
const LEAK_TOL: f64 = 1e-10;
const PRUNE: f64 = 1e-15;

/// A ±1 outcome or phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// Outcome bit 0 ↦ `+`, 1 ↦ `−`.
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn product<I: IntoIterator<Item = Sign>>(signs: I) -> Sign {
        signs.into_iter().fold(Sign::Plus, |a, b| a * b)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Single-qubit measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Computational `{0, 1}`.
    Z,
    /// Diagonal `{+, −}`.
    X,
}

/// Supplies measurement outcomes. `p_one` is the Born probability of
/// outcome 1.
pub trait OutcomeSource {
    fn pick(&mut self, p_one: f64) -> Result<u8>;
}

/// Born-rule sampling from a random stream.
pub struct BornSampler<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> OutcomeSource for BornSampler<'_, R> {
    fn pick(&mut self, p_one: f64) -> Result<u8> {
        Ok(u8::from(self.0.random::<f64>() < p_one))
    }
}

/// Replays a fixed outcome sequence and accumulates the branch weight.
#[derive(Clone, Debug)]
pub struct ScriptedOutcomes {
    outcomes: VecDeque<u8>,
    pub weight: f64,
}

impl ScriptedOutcomes {
    pub fn new<I: IntoIterator<Item = u8>>(outcomes: I) -> Self {
        Self { outcomes: outcomes.into_iter().collect(), weight: 1.0 }
    }

    pub fn remaining(&self) -> usize {
        self.outcomes.len()
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn pick(&mut self, p_one: f64) -> Result<u8> {
        let o = self
            .outcomes
            .pop_front()
            .ok_or_else(|| CkaError::InvalidParameter("outcome script exhausted".into()))?;
        let p = if o == 1 { p_one } else { 1.0 - p_one };
        if p <= 1e-14 {
            return Err(CkaError::ZeroProbability);
        }
        self.weight *= p;
        Ok(o)
    }
}

/// Parity length, redundancy and party count of the encoded resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodingScheme {
    /// Physical qubits per parity block.
    pub m: usize,
    /// Blocks per lossy party.
    pub q: usize,
    /// Number of lossy parties `B_i`.
    pub n: usize,
    /// Blocks held by party `A`.
    pub q_a: usize,
}

impl EncodingScheme {
    /// Two-photon parity blocks, two blocks per lossy party, one for `A`.
    pub fn redundant(n: usize) -> Self {
        Self { m: 2, q: 2, n, q_a: 1 }
    }

    /// Unencoded GHZ: one physical qubit per party.
    pub fn bare(n: usize) -> Self {
        Self { m: 1, q: 1, n, q_a: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.q == 0 || self.q_a == 0 {
            return Err(CkaError::InvalidParameter("m, q and q_A must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_blocks(&self) -> usize {
        self.q * self.n + self.q_a
    }

    pub fn n_physical(&self) -> usize {
        self.m * self.n_blocks()
    }
}

/// Optical elements consumed by one resource construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateBudget {
    pub pdc: usize,
    pub u: usize,
    pub h: usize,
    pub h_log: usize,
    pub cnot: usize,
}

/// One party's logical blocks, each a list of physical qubit indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyLayout {
    pub name: String,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockRef {
    pub party: usize,
    pub block: usize,
}

/// Pure state of physical qubits with a party/block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitRegister {
    n_qubits: usize,
    amps: BTreeMap<u64, Complex64>,
    layout: Vec<PartyLayout>,
    phase_record: Vec<Sign>,
}

impl QubitRegister {
    pub fn new(n_qubits: usize, amps: BTreeMap<u64, Complex64>, layout: Vec<PartyLayout>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(CkaError::Capacity { requested: n_qubits, capacity: MAX_QUBITS });
        }
        if let Some(i) = amps.keys().find(|i| n_qubits < 64 && **i >> n_qubits != 0) {
            return Err(CkaError::InvalidParameter(format!("basis index {i} out of range")));
        }
        let mut seen = vec![false; n_qubits];
        for q in layout.iter().flat_map(|p| p.blocks.iter().flatten()) {
            match seen.get_mut(*q) {
                Some(s) if !*s => *s = true,
                Some(_) => return Err(CkaError::InvalidLayout(format!("qubit {q} listed twice"))),
                None => return Err(CkaError::InvalidLayout(format!("qubit {q} out of range"))),
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(CkaError::InvalidLayout("layout does not cover every qubit".into()));
        }
        let reg = Self { n_qubits, amps, layout, phase_record: Vec::new() };
        let norm = reg.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(CkaError::InvalidParameter(format!("register norm {norm} is not 1")));
        }
        Ok(reg)
    }

    /// Single party "q" with one block covering all qubits.
    pub fn single_block(n_qubits: usize, amps: BTreeMap<u64, Complex64>) -> Result<Self> {
        let layout = vec![PartyLayout { name: "q".into(), blocks: vec![(0..n_qubits).collect()] }];
        Self::new(n_qubits, amps, layout)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &BTreeMap<u64, Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps.get(&index).copied().unwrap_or_default()
    }

    pub fn layout(&self) -> &[PartyLayout] {
        &self.layout
    }

    pub fn phase_record(&self) -> &[Sign] {
        &self.phase_record
    }

    pub fn record_phase(&mut self, s: Sign) {
        self.phase_record.push(s);
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn block_refs(&self) -> Vec<BlockRef> {
        self.layout
            .iter()
            .enumerate()
            .flat_map(|(p, l)| (0..l.blocks.len()).map(move |b| BlockRef { party: p, block: b }))
            .collect()
    }

    pub fn block_qubits(&self, b: BlockRef) -> Result<&[usize]> {
        self.layout
            .get(b.party)
            .and_then(|p| p.blocks.get(b.block))
            .map(Vec::as_slice)
            .ok_or_else(|| CkaError::InvalidLayout(format!("no block {}:{}", b.party, b.block)))
    }

    fn bit_pos(&self, q: usize) -> u32 {
        (self.n_qubits - 1 - q) as u32
    }

    fn mask_of(&self, qubits: &[usize]) -> u64 {
        qubits.iter().fold(0u64, |m, q| m | (1u64 << self.bit_pos(*q)))
    }

    /// `self ⊗ other`; the other register's qubits and parties follow.
    pub fn tensor(&self, other: &QubitRegister) -> Result<QubitRegister> {
        let n = self.n_qubits + other.n_qubits;
        if n > MAX_QUBITS {
            return Err(CkaError::Capacity { requested: n, capacity: MAX_QUBITS });
        }
        let mut amps = BTreeMap::new();
        for (i, a) in &self.amps {
            for (j, b) in &other.amps {
                amps.insert((i << other.n_qubits) | j, a * b);
            }
        }
        let mut layout = self.layout.clone();
        let shift = self.n_qubits;
        layout.extend(other.layout.iter().map(|p| PartyLayout {
            name: p.name.clone(),
            blocks: p.blocks.iter().map(|b| b.iter().map(|q| q + shift).collect()).collect(),
        }));
        let mut phase_record = self.phase_record.clone();
        phase_record.extend_from_slice(&other.phase_record);
        Ok(QubitRegister { n_qubits: n, amps, layout, phase_record })
    }

    /// Applies a single-qubit unitary to physical qubit `q`.
    pub fn apply_single(&self, q: usize, u: &Matrix2) -> Result<QubitRegister> {
        if q >= self.n_qubits {
            return Err(CkaError::QubitOutOfRange(q));
        }
        let bit = 1u64 << self.bit_pos(q);
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (i, a) in &self.amps {
            let b = usize::from(i & bit != 0);
            let i0 = i & !bit;
            for (row, target) in [(0usize, i0), (1, i0 | bit)] {
                let coef = u[row][b];
                if coef != Complex64::default() {
                    *out.entry(target).or_default() += coef * a;
                }
            }
        }
        Ok(self.with_amps(out))
    }

    /// Logical coordinates of a block: `(rest index, logical bit) → amplitude`
    /// and the norm left outside the code space.
    fn logical_components(&self, qubits: &[usize]) -> (BTreeMap<(u64, u8), Complex64>, f64) {
        let mask = self.mask_of(qubits);
        let cw = codeword_amplitude(qubits.len());
        let mut comps: BTreeMap<(u64, u8), Complex64> = BTreeMap::new();
        for (i, a) in &self.amps {
            let parity = ((i & mask).count_ones() % 2) as u8;
            *comps.entry((i & !mask, parity)).or_default() += a * cw;
        }
        let captured: f64 = comps.values().map(|c| c.norm_sqr()).sum();
        (comps, (self.norm_sqr() - captured).max(0.0))
    }

    /// All basis patterns on `qubits` with their parity.
    fn patterns(&self, qubits: &[usize]) -> Vec<(u64, u8)> {
        let k = qubits.len();
        (0u64..(1 << k))
            .map(|s| {
                let bits = qubits
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| s >> j & 1 == 1)
                    .fold(0u64, |m, (_, q)| m | (1u64 << self.bit_pos(*q)));
                (bits, (s.count_ones() % 2) as u8)
            })
            .collect()
    }

    /// Applies `u` to the logical qubit held by block `b`. Errors if the
    /// block has support outside its parity code space.
    pub fn apply_logical(&self, b: BlockRef, u: &Matrix2) -> Result<QubitRegister> {
        let qubits = self.block_qubits(b)?.to_vec();
        if qubits.is_empty() {
            return Err(CkaError::InvalidLayout("logical gate on an empty block".into()));
        }
        let (comps, leak) = self.logical_components(&qubits);
        if leak > LEAK_TOL {
            return Err(CkaError::OutsideCodeSpace(leak));
        }
        let mut logical: BTreeMap<u64, [Complex64; 2]> = BTreeMap::new();
        for ((rest, p), c) in comps {
            logical.entry(rest).or_default()[p as usize] += c;
        }
        let cw = codeword_amplitude(qubits.len());
        let pats = self.patterns(&qubits);
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (rest, v) in logical {
            let nv = [u[0][0] * v[0] + u[0][1] * v[1], u[1][0] * v[0] + u[1][1] * v[1]];
            for (bits, p) in &pats {
                let a = nv[*p as usize] * cw;
                if a.norm() >= PRUNE {
                    *out.entry(rest | bits).or_default() += a;
                }
            }
        }
        Ok(self.with_amps(out))
    }

    /// Applies a two-logical-qubit gate with block `a` as the more
    /// significant logical qubit.
    pub fn apply_logical_pair(&self, a: BlockRef, b: BlockRef, u: &Matrix4) -> Result<QubitRegister> {
        if a == b {
            return Err(CkaError::InvalidParameter("two-block gate on a single block".into()));
        }
        let qa = self.block_qubits(a)?.to_vec();
        let qb = self.block_qubits(b)?.to_vec();
        if qa.is_empty() || qb.is_empty() {
            return Err(CkaError::InvalidLayout("logical gate on an empty block".into()));
        }
        let (ma, mb) = (self.mask_of(&qa), self.mask_of(&qb));
        let (ca, cb) = (codeword_amplitude(qa.len()), codeword_amplitude(qb.len()));
        let mut logical: BTreeMap<u64, [Complex64; 4]> = BTreeMap::new();
        for (i, amp) in &self.amps {
            let pa = ((i & ma).count_ones() % 2) as usize;
            let pb = ((i & mb).count_ones() % 2) as usize;
            logical.entry(i & !(ma | mb)).or_default()[2 * pa + pb] += amp * ca * cb;
        }
        let captured: f64 = logical.values().flat_map(|v| v.iter()).map(|c| c.norm_sqr()).sum();
        let leak = self.norm_sqr() - captured;
        if leak > LEAK_TOL {
            return Err(CkaError::OutsideCodeSpace(leak));
        }
        let (pats_a, pats_b) = (self.patterns(&qa), self.patterns(&qb));
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (rest, v) in logical {
            let mut nv = [Complex64::default(); 4];
            for (r, row) in u.iter().enumerate() {
                nv[r] = row.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
            }
            for (ba, pa) in &pats_a {
                for (bb, pb) in &pats_b {
                    let amp = nv[2 * *pa as usize + *pb as usize] * ca * cb;
                    if amp.norm() >= PRUNE {
                        *out.entry(rest | ba | bb).or_default() += amp;
                    }
                }
            }
        }
        Ok(self.with_amps(out))
    }

    /// Probability that qubit `q` reads 1 in the computational basis.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        if q >= self.n_qubits {
            return Err(CkaError::QubitOutOfRange(q));
        }
        let bit = 1u64 << self.bit_pos(q);
        Ok(self.amps.iter().filter(|(i, _)| *i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Measures qubit `q` in `basis`, removes it from the register and
    /// renormalizes. Returns the outcome bit (X basis: 0 ↦ +, 1 ↦ −).
    pub fn measure_and_remove<O: OutcomeSource + ?Sized>(
        &self,
        q: usize,
        basis: Basis,
        source: &mut O,
    ) -> Result<(u8, QubitRegister)> {
        let rotated;
        let reg = match basis {
            Basis::Z => self,
            Basis::X => {
                rotated = self.apply_single(q, &linalg::hadamard())?;
                &rotated
            }
        };
        let pos = reg.bit_pos(q);
        let bit = 1u64 << pos;
        let (mut zeros, mut ones) = (0.0, 0.0);
        for (i, a) in &reg.amps {
            if i & bit == 0 {
                zeros += a.norm_sqr();
            } else {
                ones += a.norm_sqr();
            }
        }
        let total = zeros + ones;
        let outcome = source.pick((ones / total).clamp(0.0, 1.0))?;
        let kept = if outcome == 1 { ones } else { zeros };
        if kept <= 1e-14 * total {
            return Err(CkaError::ZeroProbability);
        }
        let low = bit - 1;
        let scale = 1.0 / kept.sqrt();
        let amps = reg
            .amps
            .iter()
            .filter(|(i, _)| (**i & bit != 0) == (outcome == 1))
            .map(|(i, a)| (((i >> (pos + 1)) << pos) | (i & low), a * scale))
            .collect();
        let layout = reg
            .layout
            .iter()
            .map(|p| PartyLayout {
                name: p.name.clone(),
                blocks: p
                    .blocks
                    .iter()
                    .map(|b| b.iter().filter(|x| **x != q).map(|x| if *x > q { x - 1 } else { *x }).collect())
                    .collect(),
            })
            .collect();
        Ok((
            outcome,
            QubitRegister {
                n_qubits: reg.n_qubits - 1,
                amps,
                layout,
                phase_record: reg.phase_record.clone(),
            },
        ))
    }

    /// Removes an empty block from the layout.
    pub fn drop_empty_block(&self, b: BlockRef) -> Result<QubitRegister> {
        if !self.block_qubits(b)?.is_empty() {
            return Err(CkaError::InvalidLayout("only empty blocks can be dropped".into()));
        }
        let mut out = self.clone();
        out.layout[b.party].blocks.remove(b.block);
        Ok(out)
    }

    fn with_amps(&self, mut amps: BTreeMap<u64, Complex64>) -> QubitRegister {
        amps.retain(|_, a| a.norm() >= PRUNE);
        QubitRegister {
            n_qubits: self.n_qubits,
            amps,
            layout: self.layout.clone(),
            phase_record: self.phase_record.clone(),
        }
    }

    /// Layout header followed by one line per nonzero amplitude:
    /// `<bits, qubit 0 leftmost> <re> <im>`.
    pub fn dump(&self) -> String {
        let mut s = String::from("# layout");
        for p in &self.layout {
            let blocks: Vec<String> = p
                .blocks
                .iter()
                .map(|b| b.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(","))
                .collect();
            let _ = write!(s, " {}:{}", p.name, blocks.join("|"));
        }
        s.push('\n');
        for (i, a) in &self.amps {
            let bits: String = (0..self.n_qubits)
                .map(|q| if i >> self.bit_pos(q) & 1 == 1 { '1' } else { '0' })
                .collect();
            let _ = writeln!(s, "{} {:.16e} {:.16e}", bits, a.re, a.im);
        }
        s
    }
}

/// Amplitude of each computational string in a parity codeword of length `k`.
fn codeword_amplitude(k: usize) -> f64 {
    (0.5f64).powf((k as f64 - 1.0) / 2.0)
}

fn parity_word(m: usize, parity: u32) -> Result<QubitRegister> {
    if m == 0 {
        return Err(CkaError::InvalidParameter("parity block needs m >= 1".into()));
    }
    if m > MAX_QUBITS {
        return Err(CkaError::Capacity { requested: m, capacity: MAX_QUBITS });
    }
    let a = Complex64::new(codeword_amplitude(m), 0.0);
    let amps = (0u64..(1 << m)).filter(|i| i.count_ones() % 2 == parity).map(|i| (i, a)).collect();
    QubitRegister::single_block(m, amps)
}

/// `|0⟩^(m)`: even-weight strings with equal amplitude.
pub fn parity_zero(m: usize) -> Result<QubitRegister> {
    parity_word(m, 0)
}

/// `|1⟩^(m)`: odd-weight strings with equal amplitude.
pub fn parity_one(m: usize) -> Result<QubitRegister> {
    parity_word(m, 1)
}

/// Logical Hadamard on a parity block.
pub fn logical_hadamard(r: &QubitRegister, block: BlockRef) -> Result<QubitRegister> {
    r.apply_logical(block, &linalg::hadamard())
}

/// Name of party `i` in layout order: `A`, `B1`, `B2`, ...
pub fn party_name(i: usize) -> String {
    if i == 0 {
        "A".into()
    } else {
        format!("B{i}")
    }
}

/// Prepares one block: an `m`-photon GHZ pair state (stage I) followed by a
/// Hadamard on every photon (stage II), giving `|0⟩^(m)`.
fn prepare_block(m: usize) -> Result<QubitRegister> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let all_ones = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut amps = BTreeMap::new();
    amps.insert(0u64, h);
    amps.insert(all_ones, h);
    let mut reg = QubitRegister::single_block(m, amps)?;
    for q in 0..m {
        reg = reg.apply_single(q, &linalg::hadamard())?;
    }
    Ok(reg)
}

/// Builds `(|0_L⟩^⊗B + |1_L⟩^⊗B)/√2` over `B = q·n + q_A` parity blocks:
/// every block is prepared in `|0⟩^(m)`, party `A`'s first block gets a
/// logical Hadamard, and logical CNOTs fan out from it to every other block.
pub fn build_encoded_ghz(scheme: &EncodingScheme) -> Result<(QubitRegister, GateBudget)> {
    scheme.validate()?;
    let p = scheme.n_physical();
    if p > MAX_QUBITS {
        return Err(CkaError::Capacity { requested: p, capacity: MAX_QUBITS });
    }
    let block = prepare_block(scheme.m)?;
    let n_blocks = scheme.n_blocks();
    let mut amps = BTreeMap::from([(0u64, Complex64::new(1.0, 0.0))]);
    for _ in 0..n_blocks {
        let mut next = BTreeMap::new();
        for (i, a) in &amps {
            for (j, b) in block.amplitudes() {
                next.insert((i << scheme.m) | j, a * b);
            }
        }
        amps = next;
    }
    let mut layout = Vec::with_capacity(scheme.n + 1);
    let mut next_q = 0;
    for party in 0..=scheme.n {
        let count = if party == 0 { scheme.q_a } else { scheme.q };
        let blocks = (0..count)
            .map(|_| {
                let b: Vec<usize> = (next_q..next_q + scheme.m).collect();
                next_q += scheme.m;
                b
            })
            .collect();
        layout.push(PartyLayout { name: party_name(party), blocks });
    }
    let mut reg = QubitRegister::new(p, amps, layout)?;
    let root = BlockRef { party: 0, block: 0 };
    reg = logical_hadamard(&reg, root)?;
    let cnot = linalg::cnot();
    let mut n_cnot = 0;
    for target in reg.block_refs().into_iter().filter(|b| *b != root) {
        reg = reg.apply_logical_pair(root, target, &cnot)?;
        n_cnot += 1;
    }
    let budget = GateBudget { pdc: n_blocks, u: n_blocks, h: scheme.m * n_blocks, h_log: 1, cnot: n_cnot };
    Ok((reg, budget))
}

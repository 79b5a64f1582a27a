//! Sharing primitives: XOR and Shamir classical sharing, the Weyl one-time
//! pad, the three-qutrit threshold code and edge codes over complete graphs.

use crate::error::{Error, Result};
use crate::qsim::{weyl, QState, C};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassicalKey {
    pub bytes: Vec<u8>,
}

impl ClassicalKey {
    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        let mut bytes = vec![0u8; len];
        rng.fill(bytes.as_mut_slice());
        ClassicalKey { bytes }
    }

    pub fn bits(&self) -> usize {
        self.bytes.len() * 8
    }

    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Split into `m` shares whose XOR is `k`; the first `m - 1` are uniform.
pub fn xor_mm_split(k: &ClassicalKey, m: usize, seed: u64) -> Result<Vec<ClassicalKey>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    xor_mm_split_rng(k, m, &mut rng)
}

pub fn xor_mm_split_rng(k: &ClassicalKey, m: usize, rng: &mut impl Rng) -> Result<Vec<ClassicalKey>> {
    if m == 0 {
        return Err(Error::Scheme("XOR sharing needs at least one share".into()));
    }
    let mut shares: Vec<ClassicalKey> = (1..m).map(|_| ClassicalKey::random(k.bytes.len(), rng)).collect();
    let mut last = k.bytes.clone();
    for s in &shares {
        for (l, b) in last.iter_mut().zip(&s.bytes) {
            *l ^= b;
        }
    }
    shares.push(ClassicalKey { bytes: last });
    Ok(shares)
}

/// XOR of all shares; any missing share is an error.
pub fn xor_mm_reconstruct(shares: &[Option<ClassicalKey>]) -> Result<ClassicalKey> {
    let mut out: Option<Vec<u8>> = None;
    for (i, s) in shares.iter().enumerate() {
        let s = s.as_ref().ok_or_else(|| Error::Scheme(format!("XOR share {} is missing", i + 1)))?;
        match &mut out {
            None => out = Some(s.bytes.clone()),
            Some(acc) => {
                if acc.len() != s.bytes.len() {
                    return Err(Error::Scheme("XOR shares differ in length".into()));
                }
                for (a, b) in acc.iter_mut().zip(&s.bytes) {
                    *a ^= b;
                }
            }
        }
    }
    out.map(|bytes| ClassicalKey { bytes }).ok_or_else(|| Error::Scheme("no shares given".into()))
}

pub const DEFAULT_PRIME: u32 = 257;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShamirShare {
    pub x: u32,
    /// One field element per secret byte.
    pub ys: Vec<u32>,
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Bytewise polynomial sharing over GF(p) with evaluation points 1..=m.
pub fn shamir_split(secret: &[u8], m: usize, threshold: usize, prime: u32, seed: u64) -> Result<Vec<ShamirShare>> {
    if !is_prime(prime) || prime < 257 {
        return Err(Error::Scheme(format!("field size {prime} must be a prime of at least 257")));
    }
    if threshold == 0 || threshold > m || m as u64 >= prime as u64 {
        return Err(Error::Scheme(format!("need 1 <= threshold ({threshold}) <= m ({m}) < {prime}")));
    }
    let p = prime as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<Vec<u64>> = secret
        .iter()
        .map(|&s| {
            let mut coeffs = vec![s as u64];
            coeffs.extend((1..threshold).map(|_| rng.gen_range(0..p)));
            coeffs
        })
        .collect();
    Ok((1..=m as u64)
        .map(|x| ShamirShare {
            x: x as u32,
            ys: polys.iter().map(|c| shamir_eval(c, x, p) as u32).collect(),
        })
        .collect())
}

/// Value at `x` of the polynomial with coefficients `coeffs` (constant first).
pub fn shamir_eval(coeffs: &[u64], x: u64, p: u64) -> u64 {
    coeffs.iter().rev().fold(0u64, |acc, a| (acc * x + a) % p)
}

/// Lagrange interpolation at zero from any `threshold` distinct shares.
pub fn shamir_reconstruct(shares: &[ShamirShare], threshold: usize, prime: u32) -> Result<Vec<u8>> {
    let p = prime as u64;
    let mut xs = BTreeSet::new();
    let used: Vec<&ShamirShare> = shares.iter().filter(|s| xs.insert(s.x)).take(threshold).collect();
    if threshold == 0 || used.len() < threshold {
        return Err(Error::Scheme(format!("need {threshold} distinct shares, have {}", used.len())));
    }
    let len = used[0].ys.len();
    if used.iter().any(|s| s.ys.len() != len || (s.x as u64).is_multiple_of(p)) {
        return Err(Error::Scheme("malformed Shamir share".into()));
    }
    let weights: Vec<u64> = used
        .iter()
        .map(|si| {
            let xi = si.x as u64;
            used.iter().filter(|sj| sj.x != si.x).fold(1u64, |acc, sj| {
                let xj = sj.x as u64;
                acc * xj % p * inv_mod((xj + p - xi) % p, p) % p
            })
        })
        .collect();
    (0..len)
        .map(|b| {
            let v = used.iter().zip(&weights).fold(0u64, |acc, (s, w)| (acc + s.ys[b] as u64 * w) % p);
            u8::try_from(v).map_err(|_| Error::Scheme("reconstructed value is not a byte".into()))
        })
        .collect()
}

/// One Weyl pair per qudit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QotpKey {
    pub pairs: Vec<(usize, usize)>,
}

impl QotpKey {
    pub fn random(n: usize, d: usize, rng: &mut impl Rng) -> Self {
        QotpKey { pairs: (0..n).map(|_| (rng.gen_range(0..d), rng.gen_range(0..d))).collect() }
    }

    pub fn to_classical(&self) -> ClassicalKey {
        ClassicalKey { bytes: self.pairs.iter().flat_map(|&(a, b)| [a as u8, b as u8]).collect() }
    }

    pub fn from_classical(k: &ClassicalKey, d: usize) -> Result<Self> {
        if !k.bytes.len().is_multiple_of(2) {
            return Err(Error::Scheme("pad key must hold whole (a,b) pairs".into()));
        }
        Ok(QotpKey {
            pairs: k.bytes.chunks(2).map(|c| (c[0] as usize % d, c[1] as usize % d)).collect(),
        })
    }
}

pub fn qotp_encrypt(state: &QState, slots: &[&str], key: &QotpKey) -> Result<QState> {
    qotp_apply(state, slots, key, false)
}

pub fn qotp_decrypt(state: &QState, slots: &[&str], key: &QotpKey) -> Result<QState> {
    qotp_apply(state, slots, key, true)
}

fn qotp_apply(state: &QState, slots: &[&str], key: &QotpKey, inverse: bool) -> Result<QState> {
    if key.pairs.len() != slots.len() {
        return Err(Error::Scheme(format!("pad key has {} pairs for {} slots", key.pairs.len(), slots.len())));
    }
    let mut s = state.clone();
    for (slot, &(a, b)) in slots.iter().zip(&key.pairs) {
        let d = s.register().dim_of(slot)?;
        let w = weyl(d, a % d, b % d);
        s = s.apply(&[slot], &if inverse { w.adjoint() } else { w })?;
    }
    Ok(s)
}

/// Encoding isometry |i⟩ → (1/√3) Σ_j |j, j+i, j+2i⟩.
pub fn code23_isometry() -> DMatrix<C> {
    let mut v = DMatrix::zeros(27, 3);
    let amp = C::new(1.0 / 3f64.sqrt(), 0.0);
    for i in 0..3 {
        for j in 0..3 {
            v[(j * 9 + ((j + i) % 3) * 3 + (j + 2 * i) % 3, i)] = amp;
        }
    }
    v
}

/// Replace qutrit `slot` by three share slots.
pub fn code23_encode(state: &QState, slot: &str, shares: [&str; 3]) -> Result<QState> {
    if state.register().dim_of(slot)? != 3 {
        return Err(Error::Scheme("the threshold code encodes a qutrit".into()));
    }
    state.apply_isometry(slot, &[(shares[0], 3), (shares[1], 3), (shares[2], 3)], &code23_isometry())
}

/// Decode from two shares (1-based indices). Afterwards the secret sits on the
/// lower-indexed share and the other two share slots hold the maximally
/// entangled state.
pub fn code23_decode(state: &QState, shares: [&str; 3], pair: &[usize]) -> Result<QState> {
    let mut p: Vec<usize> = pair.to_vec();
    p.sort_unstable();
    p.dedup();
    if pair.len() != 2 || p.len() != 2 || p[1] > 3 || p[0] == 0 {
        return Err(Error::Scheme(format!("decoding needs two distinct shares from 1..=3, got {pair:?}")));
    }
    let (a, b) = (shares[p[0] - 1], shares[p[1] - 1]);
    let map: fn(&[usize]) -> Vec<usize> = match (p[0], p[1]) {
        (1, 2) => |s| vec![(s[1] + 3 - s[0]) % 3, (2 * s[1] + 3 - s[0]) % 3],
        (1, 3) => |s| vec![(2 * s[1] + 6 - 2 * s[0]) % 3, (2 * s[1] + 3 - s[0]) % 3],
        _ => |s| vec![(s[1] + 3 - s[0]) % 3, (2 * s[0] + 3 - s[1]) % 3],
    };
    state.apply_basis_map(&[a, b], map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeMode {
    Statevector,
    Symbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    QuantumShare,
    ClassicalShare,
}

/// Possession-level stand-in for a share whose code has no state-vector realization here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicToken {
    pub id: usize,
    pub kind: TokenKind,
    pub reconstruction_sets: Vec<BTreeSet<usize>>,
}

/// One share per edge of the complete graph on `n` vertices (1-based),
/// edges in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCode {
    pub n: usize,
    pub mode: EdgeMode,
    pub edges: Vec<(usize, usize)>,
}

pub fn edge_code_build(n: usize) -> Result<EdgeCode> {
    if n < 2 {
        return Err(Error::Scheme("an edge code needs at least two vertices".into()));
    }
    let edges = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
    let mode = if n <= 3 { EdgeMode::Statevector } else { EdgeMode::Symbolic };
    Ok(EdgeCode { n, mode, edges })
}

impl EdgeCode {
    pub fn share_count(&self) -> usize {
        self.edges.len()
    }

    /// Share index (0-based) of edge `{i, j}`.
    pub fn share_of(&self, i: usize, j: usize) -> Option<usize> {
        let e = (i.min(j), i.max(j));
        self.edges.iter().position(|&x| x == e)
    }

    /// Shares on edges incident to `vertex`.
    pub fn star(&self, vertex: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| i == vertex || j == vertex)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn reconstruction_sets(&self) -> Vec<BTreeSet<usize>> {
        (1..=self.n).map(|v| self.star(v)).collect()
    }

    pub fn can_reconstruct(&self, held: &BTreeSet<usize>) -> bool {
        self.reconstruction_sets().iter().any(|s| s.is_subset(held))
    }

    pub fn symbolic_tokens(&self) -> Vec<SymbolicToken> {
        (0..self.share_count())
            .map(|id| SymbolicToken { id, kind: TokenKind::QuantumShare, reconstruction_sets: self.reconstruction_sets() })
            .collect()
    }

    /// Encode `secret` into share slots (statevector mode only). For two
    /// vertices the single share is the secret itself.
    pub fn encode(&self, state: &QState, secret: &str, shares: &[&str]) -> Result<QState> {
        if self.mode != EdgeMode::Statevector {
            return Err(Error::Unsupported(format!("edge code on {} vertices is symbolic only", self.n)));
        }
        if shares.len() != self.share_count() {
            return Err(Error::Scheme("wrong number of share labels".into()));
        }
        if self.n == 2 {
            let mut s = state.clone();
            s.relabel(secret, shares[0])?;
            Ok(s)
        } else {
            code23_encode(state, secret, [shares[0], shares[1], shares[2]])
        }
    }

    /// Decode at `vertex`; returns the state and the share slot holding the secret.
    pub fn decode_at(&self, state: &QState, vertex: usize, shares: &[&str]) -> Result<(QState, String)> {
        if self.mode != EdgeMode::Statevector {
            return Err(Error::Unsupported(format!("edge code on {} vertices is symbolic only", self.n)));
        }
        if vertex == 0 || vertex > self.n || shares.len() != self.share_count() {
            return Err(Error::Scheme(format!("no vertex {vertex}")));
        }
        if self.n == 2 {
            return Ok((state.clone(), shares[0].to_string()));
        }
        let star: Vec<usize> = self.star(vertex).into_iter().map(|k| k + 1).collect();
        let out = code23_decode(state, [shares[0], shares[1], shares[2]], &star)?;
        Ok((out, shares[star[0] - 1].to_string()))
    }
}

/// Physical qubit count for qubit secrets quoted for the complete-graph code.
pub fn qubit_cost_formula(n: usize) -> usize {
    n * n.saturating_sub(1)
}

/// Share count of the implemented code: one per edge.
pub fn share_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

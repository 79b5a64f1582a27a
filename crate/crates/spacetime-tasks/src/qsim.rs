//! Dense qudit simulator.
//!
//! Basis indices are row-major over the register's slots, first slot most
//! significant. Pure states are amplitude vectors; mixed states are density
//! matrices and are limited to [`MAX_DENSITY_DIM`].

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeSet;
use std::f64::consts::PI;

pub type C = Complex<f64>;

/// Upper bound on the total dimension of a register.
pub const MAX_TOTAL_DIM: usize = 1 << 16;
/// Upper bound on the dimension of a density matrix.
pub const MAX_DENSITY_DIM: usize = 1 << 12;

const TOL: f64 = 1e-10;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn omega(d: usize, k: usize) -> C {
    let th = 2.0 * PI * (k % d) as f64 / d as f64;
    C::new(th.cos(), th.sin())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    slots: Vec<(String, usize)>,
}

impl Register {
    pub fn new<S: Into<String>>(slots: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let slots: Vec<(String, usize)> = slots.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let mut seen = BTreeSet::new();
        let mut total: usize = 1;
        for (l, d) in &slots {
            if *d < 2 {
                return Err(Error::State(format!("slot {l} has dimension {d} < 2")));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::State(format!("duplicate slot label {l}")));
            }
            total = total.saturating_mul(*d);
            if total > MAX_TOTAL_DIM {
                return Err(Error::State(format!("register dimension exceeds {MAX_TOTAL_DIM}")));
            }
        }
        Ok(Register { slots })
    }

    pub fn slots(&self) -> &[(String, usize)] {
        &self.slots
    }

    pub fn labels(&self) -> Vec<&str> {
        self.slots.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slots.iter().map(|(_, d)| *d).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.slots.iter().map(|(_, d)| d).product()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.slots
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::State(format!("no slot labelled {label}")))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.slots[self.index_of(label)?].1)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.slots.iter().any(|(l, _)| l == label)
    }

    fn reordered(&self, order: &[usize]) -> Register {
        Register { slots: order.iter().map(|&i| self.slots[i].clone()).collect() }
    }
}

fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

fn index(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// Map from old flat index to new flat index when slots are reordered so that
/// new slot k is old slot `order[k]`.
fn permutation_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let n: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let mut old = vec![0; dims.len()];
    let mut new = vec![0; dims.len()];
    (0..n)
        .map(|i| {
            digits(i, dims, &mut old);
            for (k, &o) in order.iter().enumerate() {
                new[k] = old[o];
            }
            index(&new, &new_dims)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Data {
    Pure(DVector<C>),
    Mixed(DMatrix<C>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    register: Register,
    data: Data,
}

impl QState {
    pub fn pure(register: Register, amps: DVector<C>) -> Result<Self> {
        if amps.len() != register.total_dim() {
            return Err(Error::State("amplitude vector length does not match register".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::State(format!("state norm {norm} is not 1")));
        }
        Ok(QState { register, data: Data::Pure(amps) })
    }

    pub fn mixed(register: Register, rho: DMatrix<C>) -> Result<Self> {
        let n = register.total_dim();
        if n > MAX_DENSITY_DIM {
            return Err(Error::State(format!("density dimension {n} exceeds {MAX_DENSITY_DIM}")));
        }
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::State("density matrix shape does not match register".into()));
        }
        if (&rho - rho.adjoint()).norm() > 1e-8 {
            return Err(Error::State("density matrix is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::State(format!("density trace {tr} is not 1")));
        }
        Ok(QState { register, data: Data::Mixed(rho) })
    }

    /// Computational basis state with the given digits.
    pub fn basis(register: Register, ds: &[usize]) -> Result<Self> {
        let dims = register.dims();
        if ds.len() != dims.len() || ds.iter().zip(&dims).any(|(a, d)| a >= d) {
            return Err(Error::State("basis digits out of range".into()));
        }
        let mut v = DVector::zeros(register.total_dim());
        v[index(ds, &dims)] = c(1.0);
        QState::pure(register, v)
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn data(&self) -> &Data {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, Data::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<C>> {
        match &self.data {
            Data::Pure(v) => Some(v),
            Data::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> Result<DMatrix<C>> {
        match &self.data {
            Data::Pure(v) => {
                if v.len() > MAX_DENSITY_DIM {
                    return Err(Error::State(format!("density dimension {} exceeds {MAX_DENSITY_DIM}", v.len())));
                }
                Ok(v * v.adjoint())
            }
            Data::Mixed(m) => Ok(m.clone()),
        }
    }

    pub fn to_mixed(&self) -> Result<QState> {
        Ok(QState { register: self.register.clone(), data: Data::Mixed(self.density()?) })
    }

    /// Norm for pure states, trace for mixed.
    pub fn norm_or_trace(&self) -> f64 {
        match &self.data {
            Data::Pure(v) => v.norm(),
            Data::Mixed(m) => m.trace().re,
        }
    }

    pub fn tensor(&self, other: &QState) -> Result<QState> {
        let register = Register::new(self.register.slots.iter().chain(&other.register.slots).cloned())?;
        let data = match (&self.data, &other.data) {
            (Data::Pure(a), Data::Pure(b)) => Data::Pure(a.kronecker(b)),
            _ => {
                let m = self.density()?.kronecker(&other.density()?);
                if m.nrows() > MAX_DENSITY_DIM {
                    return Err(Error::State("density dimension too large".into()));
                }
                Data::Mixed(m)
            }
        };
        Ok(QState { register, data })
    }

    pub fn relabel(&mut self, from: &str, to: &str) -> Result<()> {
        if self.register.contains(to) && from != to {
            return Err(Error::State(format!("slot label {to} already in use")));
        }
        let i = self.register.index_of(from)?;
        self.register.slots[i].0 = to.to_string();
        Ok(())
    }

    /// Reorder slots so new slot k is the slot labelled `labels[k]`.
    pub fn permuted(&self, labels: &[&str]) -> Result<QState> {
        if labels.len() != self.register.len() {
            return Err(Error::State("permutation must list every slot".into()));
        }
        let order = labels.iter().map(|l| self.register.index_of(l)).collect::<Result<Vec<_>>>()?;
        if order.iter().collect::<BTreeSet<_>>().len() != order.len() {
            return Err(Error::State("permutation repeats a slot".into()));
        }
        Ok(self.reorder(&order))
    }

    fn reorder(&self, order: &[usize]) -> QState {
        let map = permutation_map(&self.register.dims(), order);
        let register = self.register.reordered(order);
        let data = match &self.data {
            Data::Pure(v) => {
                let mut w = DVector::zeros(v.len());
                for (i, &j) in map.iter().enumerate() {
                    w[j] = v[i];
                }
                Data::Pure(w)
            }
            Data::Mixed(m) => {
                let n = m.nrows();
                let mut w = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        w[(map[i], map[j])] = m[(i, j)];
                    }
                }
                Data::Mixed(w)
            }
        };
        QState { register, data }
    }

    /// Order putting `front` first (in the given order), then the rest as they were.
    fn front_order(&self, front: &[&str]) -> Result<Vec<usize>> {
        let mut order = front.iter().map(|l| self.register.index_of(l)).collect::<Result<Vec<_>>>()?;
        if order.iter().collect::<BTreeSet<_>>().len() != order.len() {
            return Err(Error::State("slot listed twice".into()));
        }
        for i in 0..self.register.len() {
            if !order.contains(&i) {
                order.push(i);
            }
        }
        Ok(order)
    }

    fn inverse_order(order: &[usize]) -> Vec<usize> {
        let mut inv = vec![0; order.len()];
        for (k, &o) in order.iter().enumerate() {
            inv[o] = k;
        }
        inv
    }

    /// Apply an operator to the listed slots (in the given order).
    pub fn apply(&self, slots: &[&str], u: &DMatrix<C>) -> Result<QState> {
        let order = self.front_order(slots)?;
        let ds: usize = order[..slots.len()].iter().map(|&i| self.register.slots[i].1).product();
        if u.nrows() != ds || u.ncols() != ds {
            return Err(Error::State(format!("operator is {}x{}, slots need {ds}x{ds}", u.nrows(), u.ncols())));
        }
        let moved = self.reorder(&order);
        let rest = moved.register.total_dim() / ds;
        let data = match &moved.data {
            Data::Pure(v) => {
                // row-major: index = s * rest + r, viewed as a rest x ds column-major matrix
                let m = DMatrix::from_column_slice(rest, ds, v.as_slice());
                let out = m * u.transpose();
                Data::Pure(DVector::from_column_slice(out.as_slice()))
            }
            Data::Mixed(rho) => {
                let full = u.kronecker(&DMatrix::<C>::identity(rest, rest));
                Data::Mixed(&full * rho * full.adjoint())
            }
        };
        let applied = QState { register: moved.register, data };
        Ok(applied.reorder(&Self::inverse_order(&order)))
    }

    /// Replace slot `slot` by `new_slots` (in place) via an isometry
    /// of shape (∏ new dims) x (old dim).
    pub fn apply_isometry(&self, slot: &str, new_slots: &[(&str, usize)], v: &DMatrix<C>) -> Result<QState> {
        let pos = self.register.index_of(slot)?;
        let d = self.register.slots[pos].1;
        let out_dim: usize = new_slots.iter().map(|(_, d)| d).product();
        if v.ncols() != d || v.nrows() != out_dim {
            return Err(Error::State("isometry shape does not match slots".into()));
        }
        if (v.adjoint() * v - DMatrix::<C>::identity(d, d)).norm() > 1e-9 {
            return Err(Error::State("map is not an isometry".into()));
        }
        let order = self.front_order(&[slot])?;
        let moved = self.reorder(&order);
        let rest = moved.register.total_dim() / d;
        let mut slots: Vec<(String, usize)> = new_slots.iter().map(|(l, d)| (l.to_string(), *d)).collect();
        slots.extend(moved.register.slots[1..].iter().cloned());
        let register = Register::new(slots)?;
        let data = match &moved.data {
            Data::Pure(a) => {
                let m = DMatrix::from_column_slice(rest, d, a.as_slice());
                let out = m * v.transpose();
                Data::Pure(DVector::from_column_slice(out.as_slice()))
            }
            Data::Mixed(rho) => {
                let full = v.kronecker(&DMatrix::<C>::identity(rest, rest));
                let m = &full * rho * full.adjoint();
                if m.nrows() > MAX_DENSITY_DIM {
                    return Err(Error::State("density dimension too large".into()));
                }
                Data::Mixed(m)
            }
        };
        let grown = QState { register, data };
        // move the new slots back to where the old one was
        let k = new_slots.len();
        let n = grown.register.len();
        let mut back: Vec<usize> = (k..k + pos).collect();
        back.extend(0..k);
        back.extend(k + pos..n);
        Ok(grown.reorder(&back))
    }

    /// Apply a basis permutation `f` on the listed slots' digits.
    pub fn apply_basis_map(&self, slots: &[&str], f: impl Fn(&[usize]) -> Vec<usize>) -> Result<QState> {
        let dims = slots.iter().map(|l| self.register.dim_of(l)).collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        let mut u = DMatrix::zeros(n, n);
        let mut ds = vec![0; dims.len()];
        let mut hit = vec![false; n];
        for i in 0..n {
            digits(i, &dims, &mut ds);
            let out = f(&ds);
            if out.len() != dims.len() || out.iter().zip(&dims).any(|(a, d)| a >= d) {
                return Err(Error::State("basis map output out of range".into()));
            }
            let j = index(&out, &dims);
            if hit[j] {
                return Err(Error::State("basis map is not a bijection".into()));
            }
            hit[j] = true;
            u[(j, i)] = c(1.0);
        }
        self.apply(slots, &u)
    }

    /// Reduced state on `keep`, in the listed order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<QState> {
        if keep.is_empty() {
            return Err(Error::State("partial trace must keep at least one slot".into()));
        }
        let order = self.front_order(keep)?;
        let moved = self.reorder(&order);
        let dk: usize = moved.register.slots[..keep.len()].iter().map(|(_, d)| d).product();
        if dk > MAX_DENSITY_DIM {
            return Err(Error::State(format!("kept dimension {dk} exceeds {MAX_DENSITY_DIM}")));
        }
        let rest = moved.register.total_dim() / dk;
        let rho = match &moved.data {
            Data::Pure(v) => {
                let m = DMatrix::from_column_slice(rest, dk, v.as_slice());
                // rho[s, s'] = Σ_r ψ[s,r] ψ*[s',r]
                (m.adjoint() * m).transpose()
            }
            Data::Mixed(full) => {
                let mut out = DMatrix::zeros(dk, dk);
                for s in 0..dk {
                    for t in 0..dk {
                        let mut acc = c(0.0);
                        for r in 0..rest {
                            acc += full[(s * rest + r, t * rest + r)];
                        }
                        out[(s, t)] = acc;
                    }
                }
                out
            }
        };
        let register = Register { slots: moved.register.slots[..keep.len()].to_vec() };
        Ok(QState { register, data: Data::Mixed(rho) })
    }

    /// Probability of finding `slots` in the pure state `target`.
    pub fn overlap_probability(&self, slots: &[&str], target: &DVector<C>) -> Result<f64> {
        let rho = self.partial_trace(slots)?.density()?;
        if target.len() != rho.nrows() {
            return Err(Error::State("target dimension does not match slots".into()));
        }
        Ok((target.adjoint() * rho * target)[(0, 0)].re)
    }

    /// Bell projection of two equal-dimension slots onto outcome `(a, b)`.
    /// Returns the outcome probability and the normalized state of the other
    /// slots (or `None` if the probability vanishes). Pure states only.
    pub fn bell_project(&self, s1: &str, s2: &str, a: usize, b: usize) -> Result<(f64, Option<QState>)> {
        let Data::Pure(_) = &self.data else {
            return Err(Error::State("Bell measurement needs a pure state".into()));
        };
        let d = self.register.dim_of(s1)?;
        if self.register.dim_of(s2)? != d {
            return Err(Error::State("Bell measurement needs equal slot dimensions".into()));
        }
        if a >= d || b >= d {
            return Err(Error::State("Bell outcome out of range".into()));
        }
        let order = self.front_order(&[s1, s2])?;
        let moved = self.reorder(&order);
        let Data::Pure(v) = &moved.data else { unreachable!() };
        let rest = v.len() / (d * d);
        let mut out: DVector<C> = DVector::zeros(rest);
        let norm = c(1.0 / (d as f64).sqrt());
        for i in 0..d {
            // ⟨Φ_ab| has coefficient conj(ω^{b i}) / √d on |i+a, i⟩
            let coef = omega(d, b * i).conj() * norm;
            let s = ((i + a) % d) * d + i;
            for r in 0..rest {
                out[r] += coef * v[s * rest + r];
            }
        }
        let p = out.norm_squared();
        if moved.register.len() == 2 {
            return Ok((p, None));
        }
        let register = Register { slots: moved.register.slots[2..].to_vec() };
        if p < 1e-15 {
            return Ok((p, None));
        }
        out /= c(p.sqrt());
        Ok((p, Some(QState { register, data: Data::Pure(out) })))
    }

    /// Generalized Bell measurement; the measured slots stay in the register in
    /// the post-measurement Bell state.
    pub fn bell_measure(&self, s1: &str, s2: &str, seed: u64) -> Result<((usize, usize), QState)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.bell_measure_rng(s1, s2, &mut rng)
    }

    pub fn bell_measure_rng(&self, s1: &str, s2: &str, rng: &mut impl Rng) -> Result<((usize, usize), QState)> {
        let ((a, b), rest) = self.bell_measure_discard(s1, s2, rng)?;
        let d = self.register.dim_of(s1)?;
        let pair = bell_state(d, a, b, s1, s2)?;
        let post = match rest {
            Some(r) => pair.tensor(&r)?,
            None => pair,
        };
        let labels: Vec<&str> = self.register.labels();
        Ok(((a, b), post.permuted(&labels)?))
    }

    /// Generalized Bell measurement that removes the measured slots.
    pub fn bell_measure_discard(
        &self,
        s1: &str,
        s2: &str,
        rng: &mut impl Rng,
    ) -> Result<((usize, usize), Option<QState>)> {
        let d = self.register.dim_of(s1)?;
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = None;
        for a in 0..d {
            for b in 0..d {
                let (p, st) = self.bell_project(s1, s2, a, b)?;
                if p < 1e-15 {
                    continue;
                }
                acc += p;
                last = Some(((a, b), st));
                if draw < acc {
                    return Ok(last.unwrap());
                }
            }
        }
        last.ok_or_else(|| Error::State("Bell measurement found no outcome".into()))
    }

    /// Uniform Weyl twirl of one slot: (1/d²) Σ W ρ W†.
    pub fn twirl(&self, slot: &str) -> Result<QState> {
        let d = self.register.dim_of(slot)?;
        let mixed = self.to_mixed()?;
        let mut acc: Option<DMatrix<C>> = None;
        for a in 0..d {
            for b in 0..d {
                let s = mixed.apply(&[slot], &weyl(d, a, b))?.density()?;
                acc = Some(match acc {
                    Some(m) => m + s,
                    None => s,
                });
            }
        }
        let rho = acc.unwrap() / c((d * d) as f64);
        Ok(QState { register: self.register.clone(), data: Data::Mixed(rho) })
    }
}

/// X^a Z^b with X|j⟩ = |j+1⟩ and Z|j⟩ = ω^j |j⟩.
pub fn weyl(d: usize, a: usize, b: usize) -> DMatrix<C> {
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        m[((j + a) % d, j)] = omega(d, b * j);
    }
    m
}

/// (1/√d) Σ_i |ii⟩.
pub fn maximally_entangled(d: usize, s1: &str, s2: &str) -> Result<QState> {
    bell_state(d, 0, 0, s1, s2)
}

/// (W_ab ⊗ I) applied to the maximally entangled state.
pub fn bell_state(d: usize, a: usize, b: usize, s1: &str, s2: &str) -> Result<QState> {
    let reg = Register::new([(s1, d), (s2, d)])?;
    let mut v = DVector::zeros(d * d);
    let norm = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[((i + a) % d) * d + i] = omega(d, b * i) * norm;
    }
    QState::pure(reg, v)
}

pub fn maximally_mixed(label: &str, d: usize) -> Result<QState> {
    let reg = Register::new([(label, d)])?;
    QState::mixed(reg, DMatrix::identity(d, d) / c(d as f64))
}

/// Haar-random pure state from normalized complex Gaussians.
pub fn haar_vector(d: usize, rng: &mut impl Rng) -> DVector<C> {
    let v = DVector::from_fn(d, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let n = v.norm();
    v / c(n)
}

pub fn haar_state(label: &str, d: usize, rng: &mut impl Rng) -> Result<QState> {
    QState::pure(Register::new([(label, d)])?, haar_vector(d, rng))
}

fn psd_sqrt(m: &DMatrix<C>) -> DMatrix<C> {
    let eig = m.clone().symmetric_eigen();
    let vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(l.max(0.0).sqrt())));
    &eig.eigenvectors * vals * eig.eigenvectors.adjoint()
}

fn is_rank_one(m: &DMatrix<C>) -> bool {
    ((m * m).trace().re - 1.0).abs() < 1e-12
}

/// Leading eigenvector of a rank-one density matrix.
fn leading_vector(m: &DMatrix<C>) -> DVector<C> {
    let eig = m.clone().symmetric_eigen();
    let k = eig.eigenvalues.imax();
    eig.eigenvectors.column(k).into_owned()
}

/// Squared Uhlmann fidelity and trace distance.
pub fn compare(a: &QState, b: &QState) -> Result<(f64, f64)> {
    if a.register.dims() != b.register.dims() {
        return Err(Error::State("compare needs equal register shapes".into()));
    }
    if let (Data::Pure(x), Data::Pure(y)) = (&a.data, &b.data) {
        let f = x.dotc(y).norm_sqr().min(1.0);
        return Ok((f, (1.0 - f).max(0.0).sqrt()));
    }
    let (ra, rb) = (a.density()?, b.density()?);
    let td = 0.5 * (&ra - &rb).symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    let f = match (&a.data, &b.data) {
        (Data::Pure(x), _) => (x.adjoint() * &rb * x)[(0, 0)].re,
        (_, Data::Pure(y)) => (y.adjoint() * &ra * y)[(0, 0)].re,
        _ if is_rank_one(&ra) => {
            let x = leading_vector(&ra);
            (x.adjoint() * &rb * x)[(0, 0)].re
        }
        _ if is_rank_one(&rb) => {
            let y = leading_vector(&rb);
            (y.adjoint() * &ra * y)[(0, 0)].re
        }
        _ => {
            let s = psd_sqrt(&ra);
            let m = &s * &rb * &s;
            let tr: f64 = m.symmetric_eigen().eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
            tr * tr
        }
    };
    Ok((f.clamp(0.0, 1.0), td.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qutrit(v: [f64; 3]) -> QState {
        let amps = DVector::from_iterator(3, v.iter().map(|x| c(*x)));
        QState::pure(Register::new([("A", 3)]).unwrap(), amps).unwrap()
    }

    #[test]
    fn weyl_examples() {
        let x = weyl(2, 1, 0);
        assert_eq!(x[(0, 1)], c(1.0));
        assert_eq!(x[(1, 0)], c(1.0));
        assert!((weyl(3, 0, 0) - DMatrix::<C>::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn entangled_pair_marginal_is_mixed() {
        let phi = maximally_entangled(3, "E", "F").unwrap();
        let amps = phi.amplitudes().unwrap();
        for i in 0..3 {
            assert!((amps[i * 3 + i] - c(1.0 / 3f64.sqrt())).norm() < 1e-15);
        }
        let m = phi.partial_trace(&["F"]).unwrap();
        let (f, td) = compare(&m, &maximally_mixed("F", 3).unwrap()).unwrap();
        assert!((f - 1.0).abs() < 1e-10 && td < 1e-10);
    }

    #[test]
    fn compare_examples() {
        let zero = qutrit([1.0, 0.0, 0.0]);
        let one = qutrit([0.0, 1.0, 0.0]);
        assert_eq!(compare(&zero, &zero).unwrap(), (1.0, 0.0));
        let (f, td) = compare(&zero, &one).unwrap();
        assert!(f.abs() < 1e-15 && (td - 1.0).abs() < 1e-15);
        let mm = maximally_mixed("A", 3).unwrap();
        let (f, td) = compare(&mm, &mm).unwrap();
        assert!((f - 1.0).abs() < 1e-10 && td < 1e-10);
        let (f, td) = compare(&zero.to_mixed().unwrap(), &mm).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-10 && (td - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn measuring_a_bell_pair_gives_zero_outcome() {
        let phi = maximally_entangled(3, "A", "E").unwrap();
        for seed in 0..20 {
            let (o, post) = phi.bell_measure("A", "E", seed).unwrap();
            assert_eq!(o, (0, 0));
            assert!((compare(&post, &phi).unwrap().0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isometry_keeps_position() {
        let s = qutrit([0.0, 0.0, 1.0]).tensor(&QState::basis(Register::new([("B", 2)]).unwrap(), &[1]).unwrap()).unwrap();
        // |j⟩ -> |j⟩|j⟩
        let mut v = DMatrix::zeros(9, 3);
        for j in 0..3 {
            v[(j * 3 + j, j)] = c(1.0);
        }
        let out = s.apply_isometry("A", &[("A1", 3), ("A2", 3)], &v).unwrap();
        assert_eq!(out.register().labels(), ["A1", "A2", "B"]);
        let want = QState::basis(out.register().clone(), &[2, 2, 1]).unwrap();
        assert!((compare(&out, &want).unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn register_guards() {
        assert!(Register::new([("A", 1)]).is_err());
        assert!(Register::new([("A", 2), ("A", 2)]).is_err());
        assert!(Register::new((0..17).map(|i| (format!("q{i}"), 2))).is_err());
        assert!(Register::new((0..16).map(|i| (format!("q{i}"), 2))).is_ok());
    }
}

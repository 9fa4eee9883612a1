//! Hochschild operator calculus: chains, cochains, braces, cup and
//! Gerstenhaber bracket, the differentials `b` and `d`, contraction, Lie
//! derivative, the cyclic differential, the homotopy assignment `S`, shift
//! conventions, and the randomized identity harness.
//!
//! Degree conventions are cohomological throughout: an arity-`n` cochain has
//! degree `n - 1`, a chain with `n` interior factors has degree `-n`, the
//! formal variable `u` has degree `2`, and the shift `s^r` adds `-r`.

pub mod identities;
pub mod ops;
pub mod rnd;
pub mod sassign;

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::algebra::{AlgError, Algebra, Sv, Tensor};
use crate::exactla::CoeffRing;

pub use identities::{verify_identities, Failure, IdentityOutcome};
pub use ops::{
    bar_b_oracle, brace, bracket, connes_b, contract, cup, cyc_contract, cyc_d, cyc_lie, diff,
    hoch_b, lie, Gc,
};
pub use rnd::Rnd;
pub use sassign::{ChainWindow, SWindow};

#[derive(Debug, thiserror::Error)]
pub enum CalcError {
    #[error("algebra product left the stored weight window: {0}")]
    Truncation(String),
    #[error("cochain evaluated at input weight {weight} beyond its certified bound {bound}")]
    BeyondCertified { weight: u32, bound: u32 },
    #[error("window exceeded: {0}")]
    Window(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl From<AlgError> for CalcError {
    fn from(e: AlgError) -> Self {
        CalcError::Truncation(e.to_string())
    }
}

/// Certified input-weight bound of a cochain: stored entries describe the
/// cochain exactly on all argument tuples of total weight up to the bound.
/// Finite-support cochains and cochains over complete algebras carry `All`;
/// operations that consult the multiplication of an incomplete algebra can
/// only certify a finite bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vok {
    All,
    Bound(u32),
}

impl Vok {
    pub fn covers(self, w: u32) -> bool {
        match self {
            Vok::All => true,
            Vok::Bound(b) => w <= b,
        }
    }

    pub fn meet(self, other: Vok) -> Vok {
        match (self, other) {
            (Vok::All, o) => o,
            (s, Vok::All) => s,
            (Vok::Bound(a), Vok::Bound(b)) => Vok::Bound(a.min(b)),
        }
    }

    /// Lower the bound by a (possibly negative) weight shift.
    pub fn lower_by(self, delta: i64) -> Vok {
        match self {
            Vok::All => Vok::All,
            Vok::Bound(b) => Vok::Bound((b as i64 - delta).max(0) as u32),
        }
    }

    /// Cap at `w - 1`: an entry at input weight `w` was not computable.
    pub fn cap_below(self, w: u32) -> Vok {
        self.meet(Vok::Bound(w.saturating_sub(1)))
    }
}

/// One matrix entry of a multilinear map: the coefficient of `e_out` in the
/// value on the basis tuple `args`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CochainKey {
    pub args: Vec<u32>,
    pub out: u32,
}

/// A finitely supported arity-homogeneous Hochschild cochain. Normalized
/// cochains vanish on tuples containing the unit and keep no such entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain<E> {
    pub arity: usize,
    pub normalized: bool,
    pub entries: BTreeMap<CochainKey, E>,
    pub vok: Vok,
}

impl<E: Clone + PartialEq + std::fmt::Debug> Cochain<E> {
    pub fn zero(arity: usize, normalized: bool) -> Self {
        Cochain { arity, normalized, entries: BTreeMap::new(), vok: Vok::All }
    }

    pub fn degree(&self) -> i64 {
        self.arity as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_entry<K: CoeffRing<El = E>>(&mut self, ring: &K, key: CochainKey, v: E) {
        debug_assert_eq!(key.args.len(), self.arity);
        if ring.is_zero(&v) {
            return;
        }
        match self.entries.remove(&key) {
            None => {
                self.entries.insert(key, v);
            }
            Some(old) => {
                let s = ring.add(&old, &v);
                if !ring.is_zero(&s) {
                    self.entries.insert(key, s);
                }
            }
        }
    }

    pub fn scale<K: CoeffRing<El = E>>(&self, ring: &K, c: &E) -> Self {
        let mut out = Cochain::zero(self.arity, self.normalized);
        out.vok = self.vok;
        for (k, v) in &self.entries {
            out.add_entry(ring, k.clone(), ring.mul(c, v));
        }
        out
    }

    pub fn neg<K: CoeffRing<El = E>>(&self, ring: &K) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v = ring.neg(v);
        }
        out
    }

    pub fn add<K: CoeffRing<El = E>>(&self, ring: &K, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity, "cochain arities differ");
        let mut out = self.clone();
        out.normalized = self.normalized && other.normalized;
        out.vok = self.vok.meet(other.vok);
        for (k, v) in &other.entries {
            out.add_entry(ring, k.clone(), v.clone());
        }
        out
    }

    pub fn sub<K: CoeffRing<El = E>>(&self, ring: &K, other: &Self) -> Self {
        self.add(ring, &other.neg(ring))
    }

    /// Largest weight gain `w(out) - w(args)` over the support, floored at 0.
    pub fn wdelta_plus(&self, alg: &Algebra) -> i64 {
        let mut d = 0i64;
        for k in self.entries.keys() {
            let win: i64 = k.args.iter().map(|&i| alg.weight(i) as i64).sum();
            d = d.max(alg.weight(k.out) as i64 - win);
        }
        d
    }

    /// Evaluate on a basis tuple. Zero results are certified only inside the
    /// `vok` bound.
    pub fn eval<K: CoeffRing<El = E>>(
        &self,
        ring: &K,
        alg: &Algebra,
        args: &[u32],
    ) -> Result<Sv<E>, CalcError> {
        debug_assert_eq!(args.len(), self.arity);
        if alg.is_graded() {
            let w: u32 = args.iter().map(|&i| alg.weight(i)).sum();
            if !self.vok.covers(w) {
                let bound = match self.vok {
                    Vok::Bound(b) => b,
                    Vok::All => unreachable!(),
                };
                return Err(CalcError::BeyondCertified { weight: w, bound });
            }
        }
        let mut out = Sv::new();
        let lo = CochainKey { args: args.to_vec(), out: 0 };
        let hi = CochainKey { args: args.to_vec(), out: u32::MAX };
        for (k, v) in self.entries.range(lo..=hi) {
            crate::algebra::sv_add::<K>(ring, &mut out, k.out, v.clone());
        }
        Ok(out)
    }

    /// Entries agree wherever both sides are certified.
    pub fn certified_eq(&self, alg: &Algebra, other: &Self) -> bool {
        let common = self.vok.meet(other.vok);
        let within = |k: &CochainKey| {
            if !alg.is_graded() {
                return true;
            }
            common.covers(k.args.iter().map(|&i| alg.weight(i)).sum())
        };
        let a: BTreeMap<_, _> = self.entries.iter().filter(|(k, _)| within(k)).collect();
        let b: BTreeMap<_, _> = other.entries.iter().filter(|(k, _)| within(k)).collect();
        a == b
    }

    pub fn fmt(&self, alg: &Algebra, fmt_el: &dyn Fn(&E) -> String) -> String {
        if self.entries.is_empty() {
            return "0".into();
        }
        self.entries
            .iter()
            .map(|(k, v)| {
                let args = k
                    .args
                    .iter()
                    .map(|&i| alg.basis[i as usize].name.clone())
                    .collect::<Vec<_>>()
                    .join(",");
                format!("({}) -> {}*{}", args, fmt_el(v), alg.basis[k.out as usize].name)
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// A finitely supported element of the (normalized or unnormalized)
/// Hochschild chain complex; mixed arities are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<E> {
    pub normalized: bool,
    pub terms: BTreeMap<Tensor, E>,
}

impl<E: Clone + PartialEq + std::fmt::Debug> Chain<E> {
    pub fn zero(normalized: bool) -> Self {
        Chain { normalized, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term<K: CoeffRing<El = E>>(&mut self, ring: &K, t: Tensor, v: E) {
        if ring.is_zero(&v) {
            return;
        }
        match self.terms.remove(&t) {
            None => {
                self.terms.insert(t, v);
            }
            Some(old) => {
                let s = ring.add(&old, &v);
                if !ring.is_zero(&s) {
                    self.terms.insert(t, s);
                }
            }
        }
    }

    pub fn single<K: CoeffRing<El = E>>(ring: &K, normalized: bool, t: Tensor) -> Self {
        let mut c = Chain::zero(normalized);
        c.add_term(ring, t, ring.one());
        c
    }

    pub fn add<K: CoeffRing<El = E>>(&self, ring: &K, other: &Self) -> Self {
        let mut out = self.clone();
        out.normalized = self.normalized && other.normalized;
        for (t, v) in &other.terms {
            out.add_term(ring, t.clone(), v.clone());
        }
        out
    }

    pub fn neg<K: CoeffRing<El = E>>(&self, ring: &K) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = ring.neg(v);
        }
        out
    }

    pub fn sub<K: CoeffRing<El = E>>(&self, ring: &K, other: &Self) -> Self {
        self.add(ring, &other.neg(ring))
    }

    pub fn scale<K: CoeffRing<El = E>>(&self, ring: &K, c: &E) -> Self {
        let mut out = Chain::zero(self.normalized);
        for (t, v) in &self.terms {
            out.add_term(ring, t.clone(), ring.mul(c, v));
        }
        out
    }

    /// `None` if empty or mixed-weight (graded algebras only).
    pub fn weight(&self, alg: &Algebra) -> Option<u32> {
        let mut it = self.terms.keys().map(|t| alg.tensor_weight(t));
        let w = it.next()?;
        it.all(|x| x == w).then_some(w)
    }

    /// `None` if empty or mixed-arity.
    pub fn arity(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|t| t.arity());
        let a = it.next()?;
        it.all(|x| x == a).then_some(a)
    }

    pub fn fmt(&self, alg: &Algebra, fmt_el: &dyn Fn(&E) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(t, v)| format!("{}*({})", fmt_el(v), alg.fmt_tensor(t)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// An element `s^shift * sum_p u^p c_p` of a shifted cyclic complex window.
/// Negative-mode elements keep `p >= 0`; periodic windows allow negative `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycElem<E> {
    pub shift: i32,
    pub normalized: bool,
    pub u: BTreeMap<i32, Chain<E>>,
}

impl<E: Clone + PartialEq + std::fmt::Debug> CycElem<E> {
    pub fn zero(shift: i32, normalized: bool) -> Self {
        CycElem { shift, normalized, u: BTreeMap::new() }
    }

    pub fn from_chain(shift: i32, p: i32, c: Chain<E>) -> Self {
        let mut e = CycElem::zero(shift, c.normalized);
        if !c.is_zero() {
            e.u.insert(p, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.u.values().all(|c| c.is_zero())
    }

    pub fn set_coeff(&mut self, p: i32, c: Chain<E>) {
        if c.is_zero() {
            self.u.remove(&p);
        } else {
            self.u.insert(p, c);
        }
    }

    pub fn coeff(&self, p: i32) -> Option<&Chain<E>> {
        self.u.get(&p)
    }

    pub fn add<K: CoeffRing<El = E>>(&self, ring: &K, other: &Self) -> Self {
        assert_eq!(self.shift, other.shift, "cyclic elements live in different shifts");
        let mut out = self.clone();
        out.normalized = self.normalized && other.normalized;
        for (&p, c) in &other.u {
            let cur = match out.u.remove(&p) {
                None => c.clone(),
                Some(old) => old.add(ring, c),
            };
            out.set_coeff(p, cur);
        }
        out
    }

    pub fn neg<K: CoeffRing<El = E>>(&self, ring: &K) -> Self {
        let mut out = self.clone();
        for c in out.u.values_mut() {
            *c = c.neg(ring);
        }
        out
    }

    pub fn sub<K: CoeffRing<El = E>>(&self, ring: &K, other: &Self) -> Self {
        self.add(ring, &other.neg(ring))
    }

    pub fn scale<K: CoeffRing<El = E>>(&self, ring: &K, c: &E) -> Self {
        let mut out = CycElem::zero(self.shift, self.normalized);
        for (&p, ch) in &self.u {
            out.set_coeff(p, ch.scale(ring, c));
        }
        out
    }

    /// Multiply by `u^k`.
    pub fn mul_u(&self, k: i32) -> Self {
        let mut out = CycElem::zero(self.shift, self.normalized);
        for (&p, ch) in &self.u {
            out.set_coeff(p + k, ch.clone());
        }
        out
    }

    /// Drop coefficients with `p > upper` (window truncation).
    pub fn truncate_above(&self, upper: i32) -> Self {
        let mut out = CycElem::zero(self.shift, self.normalized);
        for (&p, ch) in &self.u {
            if p <= upper {
                out.set_coeff(p, ch.clone());
            }
        }
        out
    }

    /// Cohomological degree if homogeneous: `-arity + 2p - shift`, equal
    /// across all terms.
    pub fn degree(&self) -> Option<i64> {
        let mut deg = None;
        for (&p, ch) in &self.u {
            for t in ch.terms.keys() {
                let d = -(t.arity() as i64) + 2 * p as i64 - self.shift as i64;
                match deg {
                    None => deg = Some(d),
                    Some(e) if e == d => {}
                    _ => return None,
                }
            }
        }
        deg
    }

    pub fn fmt(&self, alg: &Algebra, fmt_el: &dyn Fn(&E) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        self.u
            .iter()
            .map(|(&p, c)| format!("u^{} * [{}]", p, c.fmt(alg, fmt_el)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Convert rational-coefficient data into any coefficient ring.
pub fn chain_from_rat<K: CoeffRing>(ring: &K, c: &Chain<crate::Rat>) -> Chain<K::El> {
    let mut out = Chain::zero(c.normalized);
    for (t, v) in &c.terms {
        out.add_term(ring, t.clone(), ring.from_rat(v));
    }
    out
}

pub fn cochain_from_rat<K: CoeffRing>(ring: &K, x: &Cochain<crate::Rat>) -> Cochain<K::El> {
    let mut out: Cochain<K::El> = Cochain::zero(x.arity, x.normalized);
    out.vok = x.vok;
    for (k, v) in &x.entries {
        out.add_entry(ring, k.clone(), ring.from_rat(v));
    }
    out
}

/// Check that all terms of a chain sit in the stated weight (graded case).
pub fn chain_weight_is(alg: &Rc<Algebra>, c: &Chain<crate::Rat>, w: u32) -> bool {
    c.terms.keys().all(|t| alg.tensor_weight(t) == w)
}

//! DG-Lie algebras over local Artinian test rings: Maurer-Cartan elements,
//! the gauge action, twisted differentials, obstruction cocycles, and the
//! flat-deformation groupoid of an algebra with a fixed volume cocycle.
//!
//! The gauge action is the series
//! `exp(x) * y = e^{ad x}(y) - sum_k (ad x)^k (dx) / (k+1)!`,
//! finite because gauge elements have coefficients in the maximal ideal.
//! The formal degree-lowering symbol used to derive that formula is never
//! materialized; differentials are honest operators.

use std::collections::BTreeMap;
use std::rc::Rc;

use num_traits::Zero;

use crate::algebra::{Algebra, Tensor};
use crate::calculus::ops::{brace, bracket, cyc_d, cyc_lie, diff, sgn, Gc};
use crate::calculus::{CalcError, Chain, Cochain, CochainKey, CycElem};
use crate::exactla::{CoeffRing, Rr, TestRing};
use crate::{rat, Rat};

/// Ring elements of a test ring: dense coordinate vectors.
pub type REl = Vec<Rat>;

/// A DG-Lie algebra over a fixed test ring. Elements are not forced to be
/// degree homogeneous; degrees are the caller's bookkeeping.
pub trait Dgla {
    type El: Clone + std::fmt::Debug;

    fn ring(&self) -> &Rr;
    fn zero(&self) -> Self::El;
    fn is_zero(&self, a: &Self::El) -> bool;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn neg(&self, a: &Self::El) -> Self::El;
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El;
    fn d(&self, a: &Self::El) -> Self::El;
    fn bracket(&self, a: &Self::El, b: &Self::El) -> Self::El;
    /// Apply a coefficient map (a ring morphism or section) entrywise.
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, a: &Self::El) -> Self::El;

    fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.add(a, &self.neg(b))
    }
    fn eq(&self, a: &Self::El, b: &Self::El) -> bool {
        self.is_zero(&self.sub(a, b))
    }
}

/// Whether every coefficient of the element lies in the maximal ideal.
pub fn in_maximal<G: Dgla>(g: &G, a: &G::El) -> bool {
    let rr = g.ring().clone();
    let dim = rr.0.dim();
    let unit_part = g.map_coeffs(
        &rr,
        &move |v: &[Rat]| {
            let mut out = vec![rat(0); dim];
            out[0] = v[0].clone();
            out
        },
        a,
    );
    g.is_zero(&unit_part)
}

/// Exact Maurer-Cartan check `dy + [y,y]/2 = 0`.
pub fn is_mc<G: Dgla>(g: &G, y: &G::El) -> bool {
    let mut v = g.d(y);
    v = g.add(&v, &g.scale(&(rat(1) / rat(2)), &g.bracket(y, y)));
    g.is_zero(&v)
}

/// The gauge action of a degree-zero element with coefficients in the
/// maximal ideal on a degree-one element.
pub fn gauge<G: Dgla>(g: &G, x: &G::El, y: &G::El) -> G::El {
    assert!(in_maximal(g, x), "gauge elements live in the maximal ideal");
    let dx = g.d(x);
    let mut out = g.sub(y, &dx);
    let mut term = y.clone();
    let mut dterm = dx;
    let mut k: i64 = 1;
    loop {
        term = g.scale(&(rat(1) / rat(k)), &g.bracket(x, &term));
        dterm = g.scale(&(rat(1) / rat(k + 1)), &g.bracket(x, &dterm));
        if g.is_zero(&term) && g.is_zero(&dterm) {
            break;
        }
        out = g.add(&out, &term);
        out = g.sub(&out, &dterm);
        k += 1;
        assert!(k < 64, "gauge series did not terminate");
    }
    out
}

/// `e^{ad x}` as a Lie-algebra map (the conjugation underlying the gauge
/// action).
pub fn exp_ad<G: Dgla>(g: &G, x: &G::El, a: &G::El) -> G::El {
    assert!(in_maximal(g, x), "conjugation needs coefficients in the maximal ideal");
    let mut out = a.clone();
    let mut term = a.clone();
    let mut k: i64 = 1;
    loop {
        term = g.scale(&(rat(1) / rat(k)), &g.bracket(x, &term));
        if g.is_zero(&term) {
            break;
        }
        out = g.add(&out, &term);
        k += 1;
        assert!(k < 64, "conjugation series did not terminate");
    }
    out
}

/// A DGLA twisted by a Maurer-Cartan element: same bracket, differential
/// `d + [y, -]`. Construction fails on a non-Maurer-Cartan twist point,
/// which is exactly the failure of the twisted differential to square to
/// zero.
pub struct Twisted<'a, G: Dgla> {
    pub base: &'a G,
    pub y: G::El,
}

impl<'a, G: Dgla> Twisted<'a, G> {
    pub fn new(base: &'a G, y: G::El) -> Result<Self, String> {
        if !is_mc(base, &y) {
            return Err("twist point does not satisfy the Maurer-Cartan equation".into());
        }
        Ok(Twisted { base, y })
    }
}

impl<G: Dgla> Dgla for Twisted<'_, G> {
    type El = G::El;

    fn ring(&self) -> &Rr {
        self.base.ring()
    }
    fn zero(&self) -> Self::El {
        self.base.zero()
    }
    fn is_zero(&self, a: &Self::El) -> bool {
        self.base.is_zero(a)
    }
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.base.add(a, b)
    }
    fn neg(&self, a: &Self::El) -> Self::El {
        self.base.neg(a)
    }
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El {
        self.base.scale(c, a)
    }
    fn d(&self, a: &Self::El) -> Self::El {
        self.base.add(&self.base.d(a), &self.base.bracket(&self.y, a))
    }
    fn bracket(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.base.bracket(a, b)
    }
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, a: &Self::El) -> Self::El {
        self.base.map_coeffs(tgt, f, a)
    }
}

/// A small explicit DGLA given by tables, for tests and cross-checks.
/// `d_rows[j]` expands `d e_j`; the bracket table stores `[e_i, e_j]` for
/// `(i, j)` pairs and derives the transposes by graded antisymmetry.
pub struct TableDgla {
    pub rr: Rr,
    pub degrees: Vec<i64>,
    pub d_rows: Vec<Vec<(usize, Rat)>>,
    pub brackets: BTreeMap<(usize, usize), Vec<(usize, Rat)>>,
}

impl TableDgla {
    fn bracket_basis(&self, i: usize, j: usize) -> Vec<(usize, Rat)> {
        match self.brackets.get(&(i, j)) {
            Some(v) => v.clone(),
            None => match self.brackets.get(&(j, i)) {
                Some(v) => {
                    // [e_i, e_j] = -(-1)^{|e_i||e_j|} [e_j, e_i].
                    let s = if (self.degrees[i] * self.degrees[j]).rem_euclid(2) == 0 {
                        rat(-1)
                    } else {
                        rat(1)
                    };
                    v.iter().map(|(k, c)| (*k, c * &s)).collect()
                }
                None => vec![],
            },
        }
    }

    fn from_basis(&self, terms: &[(usize, Rat)], c: &REl) -> Vec<REl> {
        let mut out = self.zero();
        for (k, r) in terms {
            out[*k] = self.rr.add(&out[*k], &self.rr.scale(r, c));
        }
        out
    }

    /// Structural validation on all stored pairs and triples: degrees,
    /// `d^2 = 0`, graded antisymmetry, the Leibniz rule, and graded Jacobi.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.degrees.len();
        let q = crate::exactla::Qq;
        for j in 0..n {
            for (i, _) in &self.d_rows[j] {
                if self.degrees[*i] != self.degrees[j] + 1 {
                    return Err(format!("d does not raise the degree at {j}"));
                }
            }
            let mut dd = vec![rat(0); n];
            for (i, c) in &self.d_rows[j] {
                for (k, e) in &self.d_rows[*i] {
                    dd[*k] += c * e;
                }
            }
            if dd.iter().any(|c| !c.is_zero()) {
                return Err(format!("d^2 is nonzero on basis element {j}"));
            }
        }
        let br = |i: usize, j: usize| -> Vec<Rat> {
            let mut v = vec![rat(0); n];
            for (k, c) in self.bracket_basis(i, j) {
                v[k] += c;
            }
            v
        };
        for i in 0..n {
            for j in 0..n {
                for (k, _) in &self.bracket_basis(i, j) {
                    if self.degrees[*k] != self.degrees[i] + self.degrees[j] {
                        return Err(format!("bracket degree mismatch at ({i},{j})"));
                    }
                }
                let s = sgn(&q, self.degrees[i] * self.degrees[j]);
                let lhs = br(i, j);
                let rhs: Vec<Rat> = br(j, i).iter().map(|c| -(c * &s)).collect();
                if lhs != rhs {
                    return Err(format!("bracket is not graded antisymmetric at ({i},{j})"));
                }
                // Leibniz: d[e_i,e_j] = [de_i,e_j] + (-1)^{|e_i|} [e_i,de_j].
                let mut lhs = vec![rat(0); n];
                for (k, c) in self.bracket_basis(i, j) {
                    for (p, e) in &self.d_rows[k] {
                        lhs[*p] += &c * e;
                    }
                }
                let mut rhs = vec![rat(0); n];
                for (p, c) in &self.d_rows[i] {
                    for (k, e) in self.bracket_basis(*p, j) {
                        rhs[k] += c * &e;
                    }
                }
                let si = sgn(&q, self.degrees[i]);
                for (p, c) in &self.d_rows[j] {
                    for (k, e) in self.bracket_basis(i, *p) {
                        rhs[k] += &si * c * &e;
                    }
                }
                if lhs != rhs {
                    return Err(format!("the Leibniz rule fails at ({i},{j})"));
                }
                for k in 0..n {
                    // [e_i,[e_j,e_k]] = [[e_i,e_j],e_k]
                    //   + (-1)^{|e_i||e_j|} [e_j,[e_i,e_k]].
                    let mut lhs = vec![rat(0); n];
                    for (p, c) in self.bracket_basis(j, k) {
                        for (o, e) in self.bracket_basis(i, p) {
                            lhs[o] += &c * &e;
                        }
                    }
                    let mut rhs = vec![rat(0); n];
                    for (p, c) in self.bracket_basis(i, j) {
                        for (o, e) in self.bracket_basis(p, k) {
                            rhs[o] += &c * &e;
                        }
                    }
                    let sij = sgn(&q, self.degrees[i] * self.degrees[j]);
                    for (p, c) in self.bracket_basis(i, k) {
                        for (o, e) in self.bracket_basis(j, p) {
                            rhs[o] += &sij * &c * &e;
                        }
                    }
                    if lhs != rhs {
                        return Err(format!("graded Jacobi fails at ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Dgla for TableDgla {
    type El = Vec<REl>;

    fn ring(&self) -> &Rr {
        &self.rr
    }
    fn zero(&self) -> Self::El {
        vec![self.rr.zero(); self.degrees.len()]
    }
    fn is_zero(&self, a: &Self::El) -> bool {
        a.iter().all(|c| self.rr.is_zero(c))
    }
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El {
        a.iter().zip(b).map(|(x, y)| self.rr.add(x, y)).collect()
    }
    fn neg(&self, a: &Self::El) -> Self::El {
        a.iter().map(|x| self.rr.neg(x)).collect()
    }
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El {
        a.iter().map(|x| self.rr.scale(c, x)).collect()
    }
    fn d(&self, a: &Self::El) -> Self::El {
        let mut out = self.zero();
        for (j, c) in a.iter().enumerate() {
            if self.rr.is_zero(c) {
                continue;
            }
            let v = self.from_basis(&self.d_rows[j], c);
            out = self.add(&out, &v);
        }
        out
    }
    fn bracket(&self, a: &Self::El, b: &Self::El) -> Self::El {
        let mut out = self.zero();
        for (i, ca) in a.iter().enumerate() {
            if self.rr.is_zero(ca) {
                continue;
            }
            for (j, cb) in b.iter().enumerate() {
                if self.rr.is_zero(cb) {
                    continue;
                }
                let c = self.rr.mul(ca, cb);
                let v = self.from_basis(&self.bracket_basis(i, j), &c);
                out = self.add(&out, &v);
            }
        }
        out
    }
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, a: &Self::El) -> Self::El {
        a.iter()
            .map(|c| {
                let v = f(c);
                assert_eq!(v.len(), tgt.0.dim());
                v
            })
            .collect()
    }
}

/// The Hochschild cochain DGLA of an algebra over a test ring: Gerstenhaber
/// bracket, inner differential (the commutator with the product). The
/// degree of an arity-`a` cochain is `a - 1`; the zero element carries a
/// throwaway arity and the arithmetic short-circuits on it.
pub struct HochDgla {
    pub alg: Rc<Algebra>,
    pub rr: Rr,
}

impl HochDgla {
    pub fn new(alg: &Rc<Algebra>, rr: Rr) -> Self {
        HochDgla { alg: Rc::clone(alg), rr }
    }

    /// The identity map as an (unnormalized) arity-one cochain.
    pub fn identity1(&self) -> Cochain<REl> {
        let mut c = Cochain::zero(1, false);
        for i in 0..self.alg.dim() as u32 {
            c.add_entry(&self.rr, CochainKey { args: vec![i], out: i }, self.rr.one());
        }
        c
    }

    /// Composition of arity-one cochains (the brace `f{g}`; no products of
    /// the algebra are consulted, so this is exact on every window).
    pub fn compose1(&self, f: &Cochain<REl>, g: &Cochain<REl>) -> Cochain<REl> {
        assert!(f.arity == 1 && g.arity == 1);
        brace(&self.rr, &self.alg, Gc::C(f), &[Gc::C(g)])
    }

    /// `exp` of a degree-zero gauge element as a unital endomorphism
    /// `id + x + x{x}/2 + ...`, finite by nilpotency of the coefficients.
    pub fn exp1(&self, x: &Cochain<REl>) -> Cochain<REl> {
        assert_eq!(x.arity, 1);
        let mut out = self.identity1();
        let mut term = x.clone();
        let mut k: i64 = 1;
        while !term.is_zero() {
            out = out.add(&self.rr, &term);
            k += 1;
            term = self
                .compose1(x, &term)
                .scale(&self.rr, &self.rr.from_rat(&(rat(1) / rat(k))));
            assert!(k < 64, "exponential series did not terminate");
        }
        out
    }

    /// Logarithm of a unital endomorphism congruent to the identity. The
    /// result is marked normalized exactly when it touches no unit slot.
    pub fn log1(&self, phi: &Cochain<REl>) -> Cochain<REl> {
        assert_eq!(phi.arity, 1);
        let unit = self.alg.unit as u32;
        let n = phi.sub(&self.rr, &self.identity1());
        let mut out = Cochain::zero(1, true);
        let mut power = n.clone();
        let mut k: i64 = 1;
        while !power.is_zero() {
            let c = rat(if k % 2 == 1 { 1 } else { -1 }) / rat(k);
            out = out.add(&self.rr, &power.scale(&self.rr, &self.rr.from_rat(&c)));
            power = self.compose1(&power, &n);
            k += 1;
            assert!(k < 64, "logarithm series did not terminate");
        }
        out.normalized = out.entries.keys().all(|key| key.args[0] != unit);
        out
    }

    /// Group product of gauge elements in logarithmic coordinates:
    /// `log(exp(x) after exp(y))`, exact in the nilpotent endomorphism
    /// ring; no series in the Lie algebra is involved.
    pub fn gauge_product(&self, x: &Cochain<REl>, y: &Cochain<REl>) -> Cochain<REl> {
        self.log1(&self.compose1(&self.exp1(x), &self.exp1(y)))
    }

    /// `e^{ad x}(y + product) - product` computed against the virtual
    /// product cochain; an independent route to the gauge action for the
    /// inner differential.
    pub fn gauge_inner_route(&self, x: &Cochain<REl>, y: &Cochain<REl>) -> Cochain<REl> {
        // e^{ad x}(product) - product
        //   = sum_{k>=1} (ad x)^{k-1}([x, product]) / k!.
        let mut out = exp_ad(self, x, y);
        let mut term = bracket(&self.rr, &self.alg, Gc::C(x), Gc::Mu0);
        let mut k: i64 = 1;
        while !term.is_zero() {
            out = self.add(&out, &term);
            term = self
                .bracket(x, &term)
                .scale(&self.rr, &self.rr.from_rat(&(rat(1) / rat(k + 1))));
            k += 1;
            assert!(k < 64, "inner gauge series did not terminate");
        }
        out
    }
}

impl Dgla for HochDgla {
    type El = Cochain<REl>;

    fn ring(&self) -> &Rr {
        &self.rr
    }
    fn zero(&self) -> Self::El {
        Cochain::zero(0, true)
    }
    fn is_zero(&self, a: &Self::El) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        a.add(&self.rr, b)
    }
    fn neg(&self, a: &Self::El) -> Self::El {
        a.neg(&self.rr)
    }
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El {
        a.scale(&self.rr, &self.rr.from_rat(c))
    }
    fn d(&self, a: &Self::El) -> Self::El {
        if a.is_zero() {
            return self.zero();
        }
        diff(&self.rr, &self.alg, a)
    }
    fn bracket(&self, a: &Self::El, b: &Self::El) -> Self::El {
        if a.is_zero() || b.is_zero() {
            return self.zero();
        }
        bracket(&self.rr, &self.alg, Gc::C(a), Gc::C(b))
    }
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, a: &Self::El) -> Self::El {
        let mut out = Cochain::zero(a.arity, a.normalized);
        out.vok = a.vok;
        for (k, v) in &a.entries {
            out.add_entry(tgt, k.clone(), f(v));
        }
        out
    }
}

/// A DG-module over a DGLA, used to form semidirect products. The action
/// carries all of its own signs.
pub trait DglaModule<G: Dgla> {
    type El: Clone + std::fmt::Debug;

    fn zero(&self) -> Self::El;
    fn is_zero(&self, m: &Self::El) -> bool;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn neg(&self, a: &Self::El) -> Self::El;
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El;
    fn d(&self, m: &Self::El) -> Self::El;
    fn act(&self, x: &G::El, m: &Self::El) -> Self::El;
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, m: &Self::El) -> Self::El;

    fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.add(a, &self.neg(b))
    }
}

/// Degree lookup needed by the semidirect bracket sign. `None` means zero
/// or inhomogeneous; the bracket insists on homogeneity where the sign
/// matters.
pub trait GradedEl {
    fn hom_degree(&self) -> Option<i64>;
}

impl<E: Clone + PartialEq + std::fmt::Debug> GradedEl for Cochain<E> {
    fn hom_degree(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.degree())
        }
    }
}

impl<E: Clone + PartialEq + std::fmt::Debug> GradedEl for CycElem<E> {
    fn hom_degree(&self) -> Option<i64> {
        self.degree()
    }
}

/// Semidirect product with bracket
/// `[(x,m),(x',m')] = ([x,x'], x.m' - (-1)^{|m||x'|} x'.m)`
/// and differential `(dx, d_M m)`.
pub struct Semidirect<'a, G: Dgla, M: DglaModule<G>> {
    pub h: &'a G,
    pub m: &'a M,
}

impl<G: Dgla, M: DglaModule<G>> Dgla for Semidirect<'_, G, M>
where
    G::El: GradedEl,
    M::El: GradedEl,
{
    type El = (G::El, M::El);

    fn ring(&self) -> &Rr {
        self.h.ring()
    }
    fn zero(&self) -> Self::El {
        (self.h.zero(), self.m.zero())
    }
    fn is_zero(&self, a: &Self::El) -> bool {
        self.h.is_zero(&a.0) && self.m.is_zero(&a.1)
    }
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El {
        (self.h.add(&a.0, &b.0), self.m.add(&a.1, &b.1))
    }
    fn neg(&self, a: &Self::El) -> Self::El {
        (self.h.neg(&a.0), self.m.neg(&a.1))
    }
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El {
        (self.h.scale(c, &a.0), self.m.scale(c, &a.1))
    }
    fn d(&self, a: &Self::El) -> Self::El {
        (self.h.d(&a.0), self.m.d(&a.1))
    }
    fn bracket(&self, a: &Self::El, b: &Self::El) -> Self::El {
        let hh = self.h.bracket(&a.0, &b.0);
        let mut mm = self.m.act(&a.0, &b.1);
        if !self.m.is_zero(&a.1) && !self.h.is_zero(&b.0) {
            let dm = a.1.hom_degree().expect("inhomogeneous module element");
            let dx = b.0.hom_degree().expect("inhomogeneous algebra element");
            let s = if (dm * dx).rem_euclid(2) == 0 { rat(-1) } else { rat(1) };
            mm = self.m.add(&mm, &self.m.scale(&s, &self.m.act(&b.0, &a.1)));
        }
        (hh, mm)
    }
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, a: &Self::El) -> Self::El {
        (self.h.map_coeffs(tgt, f, &a.0), self.m.map_coeffs(tgt, f, &a.1))
    }
}

/// The exponentiated module action `e^{rho(x)}`.
pub fn exp_act<G: Dgla, M: DglaModule<G>>(mo: &M, x: &G::El, v: &M::El) -> M::El {
    let mut out = v.clone();
    let mut term = v.clone();
    let mut k: i64 = 1;
    loop {
        term = mo.scale(&(rat(1) / rat(k)), &mo.act(x, &term));
        if mo.is_zero(&term) {
            break;
        }
        out = mo.add(&out, &term);
        k += 1;
        assert!(k < 64, "module exponential did not terminate");
    }
    out
}

/// Closed formula for the gauge action of `exp((g, 0))` in the semidirect
/// product twisted at a module point `(0, t)`:
/// `(exp(g) * g1, e^{rho(g)}(m1 + t) - t)`.
pub fn gauge_semidirect_h<G: Dgla, M: DglaModule<G>>(
    h: &G,
    mo: &M,
    t: &M::El,
    g: &G::El,
    y: &(G::El, M::El),
) -> (G::El, M::El) {
    let hp = gauge(h, g, &y.0);
    let mp = mo.sub(&exp_act(mo, g, &mo.add(&y.1, t)), t);
    (hp, mp)
}

/// Closed formula for the gauge action of `exp((0, m))` in the semidirect
/// product twisted at a module point: `(g1, m1 - rho(g1)(m) - d_M m)`.
pub fn gauge_semidirect_m<G: Dgla, M: DglaModule<G>>(
    mo: &M,
    m: &M::El,
    y: &(G::El, M::El),
) -> (G::El, M::El) {
    let mp = mo.sub(&mo.sub(&y.1, &mo.act(&y.0, m)), &mo.d(m));
    (y.0.clone(), mp)
}

/// The shifted negative cyclic complex as a module over the cochain DGLA:
/// differential `b + uB`, action the Lie derivative; both carry the shift
/// signs of the element.
pub struct CycModule {
    pub alg: Rc<Algebra>,
    pub rr: Rr,
    pub shift: i32,
}

impl CycModule {
    pub fn new(alg: &Rc<Algebra>, rr: Rr, shift: i32) -> Self {
        CycModule { alg: Rc::clone(alg), rr, shift }
    }
}

impl DglaModule<HochDgla> for CycModule {
    type El = CycElem<REl>;

    fn zero(&self) -> Self::El {
        CycElem::zero(self.shift, true)
    }
    fn is_zero(&self, m: &Self::El) -> bool {
        m.is_zero()
    }
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El {
        a.add(&self.rr, b)
    }
    fn neg(&self, a: &Self::El) -> Self::El {
        a.neg(&self.rr)
    }
    fn scale(&self, c: &Rat, a: &Self::El) -> Self::El {
        a.scale(&self.rr, &self.rr.from_rat(c))
    }
    fn d(&self, m: &Self::El) -> Self::El {
        cyc_d(&self.rr, &self.alg, m).expect("cyclic differential stays in the window")
    }
    fn act(&self, x: &Cochain<REl>, m: &Self::El) -> Self::El {
        if x.is_zero() {
            return self.zero();
        }
        cyc_lie(&self.rr, &self.alg, Gc::C(x), m).expect("Lie derivative stays in the window")
    }
    fn map_coeffs(&self, tgt: &Rr, f: &dyn Fn(&[Rat]) -> REl, m: &Self::El) -> Self::El {
        let mut out = CycElem::zero(m.shift, m.normalized);
        for (&p, c) in &m.u {
            let mut ch = Chain::zero(c.normalized);
            for (t, v) in &c.terms {
                ch.add_term(tgt, t.clone(), f(v));
            }
            out.set_coeff(p, ch);
        }
        out
    }
}

/// A surjection of test rings with one-dimensional kernel spanned by the
/// last basis element of the big ring, annihilated by the maximal ideal.
/// The quotient basis must lift by name.
pub struct SmallExtension {
    pub big: Rc<TestRing>,
    pub small: Rc<TestRing>,
}

impl SmallExtension {
    pub fn new(big: &Rc<TestRing>, small: &Rc<TestRing>) -> Self {
        let k = big.dim() - 1;
        assert!(
            small.basis_names.iter().all(|n| *n != big.basis_names[k]),
            "the kernel generator must not survive in the quotient"
        );
        for name in &small.basis_names {
            assert!(big.basis_names.contains(name), "the quotient basis must lift by name");
        }
        for i in 1..big.dim() {
            assert!(
                big.table[i][k].is_empty() && big.table[k][i].is_empty(),
                "the kernel generator must be annihilated by the maximal ideal"
            );
        }
        SmallExtension { big: Rc::clone(big), small: Rc::clone(small) }
    }

    pub fn kernel_index(&self) -> usize {
        self.big.dim() - 1
    }
}

/// The obstruction cocycle of `x` (Maurer-Cartan over the quotient ring)
/// against a small extension. `g_r`, `g_s`, `g_q` are the same complex
/// over the quotient, the extension, and the residue field; `v` is an
/// arbitrary residue-field element used to exercise independence of the
/// lift, whose contribution to the cocycle must be exactly `d v`.
pub fn obstruction<G: Dgla>(
    ext: &SmallExtension,
    g_r: &G,
    g_s: &G,
    g_q: &G,
    x: &G::El,
    v: &G::El,
) -> Result<G::El, String> {
    if !is_mc(g_r, x) {
        return Err("the element does not satisfy the Maurer-Cartan equation".into());
    }
    let k = ext.kernel_index();
    let big = Rc::clone(&ext.big);
    let small = Rc::clone(&ext.small);
    let sdim = big.dim();
    let lift = move |v: &[Rat]| crate::exactla::lift_coords(&big, &small, v);
    let xhat = g_r.map_coeffs(g_s.ring(), &lift, x);
    let curv =
        |xh: &G::El| g_s.add(&g_s.d(xh), &g_s.scale(&(rat(1) / rat(2)), &g_s.bracket(xh, xh)));
    let ob_s = curv(&xhat);
    // Purity: the curvature of the lift must be a multiple of the kernel
    // generator (this is what makes the obstruction well defined).
    let drop_kernel = move |v: &[Rat]| {
        let mut out = v.to_vec();
        out[k] = rat(0);
        out
    };
    if !g_s.is_zero(&g_s.map_coeffs(g_s.ring(), &drop_kernel, &ob_s)) {
        return Err("the curvature of the lift is not supported on the kernel".into());
    }
    let take_kernel = move |v: &[Rat]| vec![v[k].clone()];
    let ob = g_s.map_coeffs(g_q.ring(), &take_kernel, &ob_s);
    if !g_q.is_zero(&g_q.d(&ob)) {
        return Err("the obstruction is not a cocycle".into());
    }
    // Second lift, shifted by the kernel generator times `v`: the class is
    // unchanged because the cocycles differ by the exact boundary of `v`.
    let into_kernel = move |vq: &[Rat]| {
        let mut out = vec![rat(0); sdim];
        out[k] = vq[0].clone();
        out
    };
    let xhat2 = g_s.add(&xhat, &g_q.map_coeffs(g_s.ring(), &into_kernel, v));
    let ob2 = g_s.map_coeffs(g_q.ring(), &take_kernel, &curv(&xhat2));
    if !g_q.eq(&g_q.sub(&ob2, &ob), &g_q.d(v)) {
        return Err("the two lifts do not differ by the boundary of the shift".into());
    }
    Ok(ob)
}

/// The flat-deformation groupoid of an algebra with a fixed volume cocycle
/// over a test ring. Objects store the perturbation of the product and the
/// full deformed volume; morphisms store the unital map (with its identity
/// part) and the transgression.
pub struct DefFlat {
    pub alg: Rc<Algebra>,
    pub rr: Rr,
    pub eta0: CycElem<Rat>,
}

#[derive(Clone, Debug)]
pub struct DefObject {
    /// Perturbation of the product: an arity-two cochain over the maximal
    /// ideal.
    pub nu: Cochain<REl>,
    /// The deformed volume, congruent to the base one modulo the ideal.
    pub eta: CycElem<REl>,
}

#[derive(Clone, Debug)]
pub struct DefMorphism {
    /// Unital map including its identity part.
    pub phi: Cochain<REl>,
    /// Transgression in the cyclic module.
    pub xi: CycElem<REl>,
}

impl DefFlat {
    pub fn new(alg: &Rc<Algebra>, rr: Rr, eta0: CycElem<Rat>) -> Self {
        assert_eq!(eta0.shift, 0);
        DefFlat { alg: Rc::clone(alg), rr, eta0 }
    }

    /// The base volume with coefficients in the test ring.
    pub fn eta0_ring(&self) -> CycElem<REl> {
        let mut out = CycElem::zero(0, self.eta0.normalized);
        for (&p, c) in &self.eta0.u {
            let mut ch = Chain::zero(c.normalized);
            for (t, v) in &c.terms {
                ch.add_term(&self.rr, t.clone(), self.rr.from_rat(v));
            }
            out.set_coeff(p, ch);
        }
        out
    }

    pub fn hoch(&self) -> HochDgla {
        HochDgla::new(&self.alg, self.rr.clone())
    }

    pub fn cyc(&self) -> CycModule {
        CycModule::new(&self.alg, self.rr.clone(), 0)
    }

    /// Apply a unital arity-one map diagonally to every slot of a chain,
    /// projecting away unit hits in the rest slots (normalized complex).
    pub fn apply_map_chain(
        &self,
        phi: &Cochain<REl>,
        c: &Chain<REl>,
    ) -> Result<Chain<REl>, CalcError> {
        let unit = self.alg.unit as u32;
        let mut out = Chain::zero(c.normalized);
        for (t, coeff) in &c.terms {
            let mut parts: Vec<Vec<(u32, REl)>> = Vec::with_capacity(t.arity() + 1);
            for (idx, b) in std::iter::once(t.b0).chain(t.rest.iter().copied()).enumerate() {
                let val = phi.eval(&self.rr, &self.alg, &[b])?;
                let keep: Vec<(u32, REl)> = val
                    .into_iter()
                    .filter(|(k, _)| idx == 0 || !(c.normalized && *k == unit))
                    .collect();
                parts.push(keep);
            }
            let mut stack: Vec<(usize, Vec<u32>, REl)> = vec![(0, vec![], coeff.clone())];
            while let Some((pos, word, acc)) = stack.pop() {
                if pos == parts.len() {
                    let tensor = Tensor { b0: word[0], rest: word[1..].to_vec() };
                    out.add_term(&self.rr, tensor, acc);
                    continue;
                }
                for (k, v) in &parts[pos] {
                    let mut w = word.clone();
                    w.push(*k);
                    stack.push((pos + 1, w, self.rr.mul(&acc, v)));
                }
            }
        }
        Ok(out)
    }

    pub fn apply_map_cyc(
        &self,
        phi: &Cochain<REl>,
        e: &CycElem<REl>,
    ) -> Result<CycElem<REl>, CalcError> {
        let mut out = CycElem::zero(e.shift, e.normalized);
        for (&p, c) in &e.u {
            out.set_coeff(p, self.apply_map_chain(phi, c)?);
        }
        Ok(out)
    }

    /// The five object conditions, reported one by one.
    pub fn validate_object(&self, o: &DefObject) -> Result<(), String> {
        let g = self.hoch();
        if o.nu.arity != 2 || !o.nu.normalized {
            return Err(
                "condition 1: the product perturbation must be a normalized arity-two cochain"
                    .into(),
            );
        }
        if !in_maximal(&g, &o.nu) {
            return Err("condition 2: the product must reduce to the base product".into());
        }
        if !is_mc(&g, &o.nu) {
            return Err("condition 3: the deformed product is not associative".into());
        }
        let m = self.cyc();
        let lhs = m.add(&m.d(&o.eta), &m.act(&o.nu, &o.eta));
        if !m.is_zero(&lhs) {
            return Err("condition 4: the deformed volume is not a deformed cocycle".into());
        }
        let diff = m.sub(&o.eta, &self.eta0_ring());
        let rr = self.rr.clone();
        let dim = rr.0.dim();
        let unit_part = m.map_coeffs(
            &rr,
            &move |v: &[Rat]| {
                let mut out = vec![rat(0); dim];
                out[0] = v[0].clone();
                out
            },
            &diff,
        );
        if !m.is_zero(&unit_part) {
            return Err("condition 5: the volume must reduce to the base volume".into());
        }
        Ok(())
    }

    /// Morphism conditions between validated endpoints.
    pub fn validate_morphism(
        &self,
        src: &DefObject,
        tgt: &DefObject,
        f: &DefMorphism,
    ) -> Result<(), String> {
        let g = self.hoch();
        if f.phi.arity != 1 {
            return Err("condition 1: the map must have arity one".into());
        }
        let id = g.identity1();
        let pert = f.phi.sub(&self.rr, &id);
        if !in_maximal(&g, &pert) {
            return Err("condition 2: the map must reduce to the identity".into());
        }
        let unit = self.alg.unit as u32;
        let on_unit = f
            .phi
            .eval(&self.rr, &self.alg, &[unit])
            .map_err(|e| format!("window: {e}"))?;
        let is_unit_val = on_unit.len() == 1
            && on_unit
                .get(&unit)
                .map(|v| self.rr.is_zero(&self.rr.sub(v, &self.rr.one())))
                .unwrap_or(false);
        if !is_unit_val {
            return Err("condition 2: the map is not unital".into());
        }
        self.algebra_map_check(src, tgt, &f.phi)?;
        // Transgression: (L_{mu_tgt} + uB) xi = phi(eta_src) - eta_tgt.
        let m = self.cyc();
        let lhs = m.add(&m.d(&f.xi), &m.act(&tgt.nu, &f.xi));
        let rhs = m.sub(
            &self.apply_map_cyc(&f.phi, &src.eta).map_err(|e| format!("window: {e}"))?,
            &tgt.eta,
        );
        if !m.is_zero(&m.sub(&lhs, &rhs)) {
            return Err("condition 4: the transgression equation fails".into());
        }
        Ok(())
    }

    /// `phi(mu_src(a, b)) = mu_tgt(phi(a), phi(b))` on every basis pair
    /// whose base product is stored; pairs outside the window are skipped,
    /// uncertified perturbation values are window errors.
    fn algebra_map_check(
        &self,
        src: &DefObject,
        tgt: &DefObject,
        phi: &Cochain<REl>,
    ) -> Result<(), String> {
        let alg = &self.alg;
        let rr = &self.rr;
        let add = |map: &mut BTreeMap<u32, REl>, k: u32, v: REl| {
            let cur = map.entry(k).or_insert_with(|| rr.zero());
            *cur = rr.add(cur, &v);
        };
        for i in 0..alg.dim() as u32 {
            for j in 0..alg.dim() as u32 {
                let base = match alg.mul_basis(i, j) {
                    Ok(t) => t,
                    Err(_) => continue,
                };
                // The deformed product of the pair, then phi of it.
                let mut pre: Vec<(u32, REl)> = Vec::new();
                for (k, c) in base {
                    pre.push((*k as u32, rr.from_rat(c)));
                }
                if !src.nu.vok.covers(alg.weight(i) + alg.weight(j)) {
                    return Err(
                        "window: the perturbation is not certified on a stored pair".into()
                    );
                }
                // nu perturbs mu(a,b) = -ab, so the product picks up -nu.
                for (k, c) in
                    src.nu.eval(rr, alg, &[i, j]).map_err(|e| format!("window: {e}"))?
                {
                    pre.push((k, rr.neg(&c)));
                }
                let mut lhs: BTreeMap<u32, REl> = BTreeMap::new();
                for (k, c) in &pre {
                    let pv = phi.eval(rr, alg, &[*k]).map_err(|e| format!("window: {e}"))?;
                    for (q, e) in pv {
                        add(&mut lhs, q, rr.mul(c, &e));
                    }
                }
                let mut rhs: BTreeMap<u32, REl> = BTreeMap::new();
                let pi = phi.eval(rr, alg, &[i]).map_err(|e| format!("window: {e}"))?;
                let pj = phi.eval(rr, alg, &[j]).map_err(|e| format!("window: {e}"))?;
                for (a, ca) in &pi {
                    for (b, cb) in &pj {
                        let c = rr.mul(ca, cb);
                        let prod =
                            alg.mul_basis(*a, *b).map_err(|e| format!("window: {e}"))?;
                        for (k, e) in prod {
                            add(&mut rhs, *k as u32, rr.scale(e, &c));
                        }
                        if !tgt.nu.vok.covers(alg.weight(*a) + alg.weight(*b)) {
                            return Err(
                                "window: the target perturbation is not certified".into()
                            );
                        }
                        for (k, e) in tgt
                            .nu
                            .eval(rr, alg, &[*a, *b])
                            .map_err(|e| format!("window: {e}"))?
                        {
                            add(&mut rhs, k, rr.neg(&rr.mul(&c, &e)));
                        }
                    }
                }
                for (k, v) in &lhs {
                    let r = rhs.remove(k).unwrap_or_else(|| rr.zero());
                    if !rr.is_zero(&rr.sub(v, &r)) {
                        return Err(format!(
                            "condition 3: the map does not intertwine the products at ({i},{j})"
                        ));
                    }
                }
                if rhs.values().any(|v| !rr.is_zero(v)) {
                    return Err(format!(
                        "condition 3: the map does not intertwine the products at ({i},{j})"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn identity_morphism(&self) -> DefMorphism {
        DefMorphism { phi: self.hoch().identity1(), xi: CycElem::zero(0, true) }
    }

    /// Composition `(phi, xi) after (phi', xi') = (phi phi', phi(xi') + xi)`.
    pub fn compose(
        &self,
        second: &DefMorphism,
        first: &DefMorphism,
    ) -> Result<DefMorphism, CalcError> {
        let g = self.hoch();
        let phi = g.compose1(&second.phi, &first.phi);
        let xi = self.apply_map_cyc(&second.phi, &first.xi)?.add(&self.rr, &second.xi);
        Ok(DefMorphism { phi, xi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra;
    use crate::calculus::rnd::Rnd;

    fn abelian_two_step(rr: Rr) -> TableDgla {
        // Degrees 0, 1 with d e0 = e1 and zero bracket.
        TableDgla {
            rr,
            degrees: vec![0, 1],
            d_rows: vec![vec![(1, rat(1))], vec![]],
            brackets: BTreeMap::new(),
        }
    }

    fn solvable_pair(rr: Rr) -> TableDgla {
        // x (deg 0), y (deg 1) with d x = y and [x, y] = y.
        let mut brackets = BTreeMap::new();
        brackets.insert((0, 1), vec![(1, rat(1))]);
        TableDgla { rr, degrees: vec![0, 1], d_rows: vec![vec![(1, rat(1))], vec![]], brackets }
    }

    fn lift_cochain(rr: &Rr, c: &Cochain<Rat>, k: usize) -> Cochain<REl> {
        let mut out = Cochain::zero(c.arity, c.normalized);
        out.vok = c.vok;
        for (key, v) in &c.entries {
            out.add_entry(rr, key.clone(), rr.monomial(k, v));
        }
        out
    }

    #[test]
    fn table_dglas_validate() {
        let rr = Rr(TestRing::eps_ring(3));
        abelian_two_step(rr.clone()).validate().unwrap();
        solvable_pair(rr).validate().unwrap();
    }

    #[test]
    fn mc_detects_the_eps_counterexample() {
        let rr = Rr(TestRing::eps_ring(2));
        let g = abelian_two_step(rr.clone());
        // eps * e1 is closed, so Maurer-Cartan in an abelian DGLA.
        let mut y = g.zero();
        y[1] = rr.monomial(1, &rat(1));
        assert!(is_mc(&g, &y));
        // eps * e0 has d(eps e0) = eps e1 nonzero, hence fails.
        let mut x = g.zero();
        x[0] = rr.monomial(1, &rat(1));
        assert!(!is_mc(&g, &x));
        // The zero element is always Maurer-Cartan.
        assert!(is_mc(&g, &g.zero()));
    }

    #[test]
    fn gauge_in_an_abelian_dgla_translates_by_the_boundary() {
        let rr = Rr(TestRing::eps_ring(3));
        let g = abelian_two_step(rr.clone());
        let mut x = g.zero();
        x[0] = rr.monomial(1, &rat(3));
        let mut y = g.zero();
        y[1] = rr.monomial(1, &rat(5));
        let out = gauge(&g, &x, &y);
        let expect = g.sub(&y, &g.d(&x));
        assert!(g.eq(&out, &expect));
        assert!(is_mc(&g, &out));
    }

    #[test]
    fn gauge_preserves_mc_in_a_nonabelian_table() {
        let rr = Rr(TestRing::eps_ring(4));
        let g = solvable_pair(rr.clone());
        let mut y = g.zero();
        y[1] = g.ring().add(&rr.monomial(1, &rat(1)), &rr.monomial(2, &rat(2)));
        assert!(is_mc(&g, &y));
        let mut x = g.zero();
        x[0] = rr.monomial(1, &rat(7));
        let out = gauge(&g, &x, &y);
        assert!(is_mc(&g, &out));
        // The series is genuinely longer than y - dx here.
        assert!(!g.eq(&out, &g.sub(&y, &g.d(&x))));
    }

    #[test]
    fn gauge_group_law_via_endomorphism_normal_form() {
        let alg = algebra::truncated_power(3);
        let rr = Rr(TestRing::eps_ring(3));
        let g = HochDgla::new(&alg, rr.clone());
        let mut rnd = Rnd::new(17);
        for _ in 0..6 {
            let x = lift_cochain(&rr, &rnd.cochain(&alg, 1, true, None, None), 1);
            let y = lift_cochain(&rr, &rnd.cochain(&alg, 1, true, None, None), 2);
            let w = lift_cochain(&rr, &rnd.cochain(&alg, 2, true, None, None), 1);
            let xy = g.gauge_product(&x, &y);
            let lhs = gauge(&g, &xy, &w);
            let rhs = gauge(&g, &x, &gauge(&g, &y, &w));
            assert!(g.eq(&lhs, &rhs));
        }
    }

    #[test]
    fn exp_and_log_are_inverse() {
        let alg = algebra::truncated_power(3);
        let rr = Rr(TestRing::eps_ring(4));
        let g = HochDgla::new(&alg, rr.clone());
        let mut rnd = Rnd::new(23);
        for _ in 0..5 {
            let x = lift_cochain(&rr, &rnd.cochain(&alg, 1, true, None, None), 1);
            let back = g.log1(&g.exp1(&x));
            assert!(g.eq(&back, &x));
            assert!(back.normalized);
        }
    }

    #[test]
    fn inner_route_matches_the_gauge_series() {
        let alg = algebra::truncated_power(2);
        let rr = Rr(TestRing::eps_ring(3));
        let g = HochDgla::new(&alg, rr.clone());
        let mut rnd = Rnd::new(29);
        for _ in 0..5 {
            let x = lift_cochain(&rr, &rnd.cochain(&alg, 1, true, None, None), 1);
            let y = lift_cochain(&rr, &rnd.cochain(&alg, 2, true, None, None), 1);
            let a = gauge(&g, &x, &y);
            let b = g.gauge_inner_route(&x, &y);
            assert!(g.eq(&a, &b));
        }
    }

    #[test]
    fn twisting_by_zero_changes_nothing_and_mc_is_enforced() {
        let rr = Rr(TestRing::eps_ring(2));
        let g = solvable_pair(rr.clone());
        let tw = Twisted::new(&g, g.zero()).unwrap();
        let mut a = g.zero();
        a[0] = rr.monomial(1, &rat(1));
        assert!(g.eq(&tw.d(&a), &g.d(&a)));
        let mut bad = g.zero();
        bad[0] = rr.monomial(1, &rat(1));
        assert!(Twisted::new(&g, bad).is_err());
    }

    #[test]
    fn twisted_differential_squares_to_zero() {
        let rr = Rr(TestRing::eps_ring(4));
        let g = solvable_pair(rr.clone());
        let mut y = g.zero();
        y[1] = rr.monomial(1, &rat(3));
        let tw = Twisted::new(&g, y).unwrap();
        for k in 0..2 {
            let mut a = g.zero();
            a[k] = g.ring().add(&rr.monomial(1, &rat(1)), &rr.monomial(0, &rat(2)));
            assert!(g.is_zero(&tw.d(&tw.d(&a))), "basis {k}");
        }
    }

    #[test]
    fn semidirect_gauge_matches_the_closed_formulas() {
        let alg = algebra::truncated_power(2);
        let rr = Rr(TestRing::eps_ring(3));
        let h = HochDgla::new(&alg, rr.clone());
        let mo = CycModule::new(&alg, rr.clone(), -2);
        let sd = Semidirect { h: &h, m: &mo };
        // Twist at the volume chain placed in the shifted module; it is
        // closed, so (0, t) is Maurer-Cartan in the semidirect product.
        let vol = crate::duality::catalog_cy(&alg).unwrap().eta;
        let mut t = CycElem::zero(-2, true);
        {
            let c = vol.coeff(0).unwrap();
            let mut ch = Chain::zero(c.normalized);
            for (tt, v) in &c.terms {
                ch.add_term(&rr, tt.clone(), rr.from_rat(v));
            }
            t.set_coeff(0, ch);
        }
        let x0 = (h.zero(), t.clone());
        let tw = Twisted::new(&sd, x0).unwrap();
        let mut rnd = Rnd::new(31);
        for _ in 0..5 {
            let gg = lift_cochain(&rr, &rnd.cochain(&alg, 1, true, None, None), 1);
            let g1 = lift_cochain(&rr, &rnd.cochain(&alg, 2, true, None, None), 1);
            // Module elements: degree one alongside the twist point, and a
            // degree-zero gauge direction.
            let m1 = mo.scale(&rat(3), &t);
            let mq = rnd.chain(&alg, 1, Some(1), true);
            let mut m0 = CycElem::zero(-2, true);
            {
                let mut ch = Chain::zero(mq.normalized);
                for (tt, v) in &mq.terms {
                    ch.add_term(&rr, tt.clone(), rr.monomial(1, v));
                }
                m0.set_coeff(1, ch);
            }
            let y = (g1.clone(), m1.clone());
            let lhs = gauge(&tw, &(gg.clone(), mo.zero()), &y);
            let rhs = gauge_semidirect_h(&h, &mo, &t, &gg, &y);
            assert!(sd.eq(&lhs, &rhs));
            let lhs = gauge(&tw, &(h.zero(), m0.clone()), &y);
            let rhs = gauge_semidirect_m(&mo, &m0, &y);
            assert!(sd.eq(&lhs, &rhs));
        }
    }

    #[test]
    fn obstruction_vanishes_for_abelian_and_liftable_elements() {
        let big = TestRing::eps_ring(3);
        let small = TestRing::eps_ring(2);
        let ext = SmallExtension::new(&big, &small);
        let g_r = abelian_two_step(Rr(Rc::clone(&small)));
        let g_s = abelian_two_step(Rr(Rc::clone(&big)));
        let g_q = abelian_two_step(Rr(TestRing::eps_ring(1)));
        let rr = Rr(small);
        let mut x = g_r.zero();
        x[1] = rr.monomial(1, &rat(2));
        // Shifting the lift by an element with a nonzero boundary leaves
        // the class untouched; the raw cocycles differ by exactly d v.
        let mut v0 = g_q.zero();
        v0[0] = vec![rat(3)];
        let ob = obstruction(&ext, &g_r, &g_s, &g_q, &x, &v0).unwrap();
        assert!(g_q.is_zero(&ob));
        let ob2 = obstruction(&ext, &g_r, &g_s, &g_q, &x, &g_q.zero()).unwrap();
        assert!(g_q.is_zero(&ob2));
    }

    #[test]
    fn obstruction_sees_a_genuine_curvature() {
        // Degrees 1 and 2 with [e0, e0] = e1 and zero differential:
        // eps * e0 is Maurer-Cartan when eps^2 = 0 but its lift has
        // curvature eps^2 e1 / 2.
        let mut brackets = BTreeMap::new();
        brackets.insert((0, 0), vec![(1, rat(1))]);
        let mk = |rr: Rr| TableDgla {
            rr,
            degrees: vec![1, 2],
            d_rows: vec![vec![], vec![]],
            brackets: brackets.clone(),
        };
        let big = TestRing::eps_ring(3);
        let small = TestRing::eps_ring(2);
        let ext = SmallExtension::new(&big, &small);
        let g_r = mk(Rr(Rc::clone(&small)));
        let g_s = mk(Rr(Rc::clone(&big)));
        let g_q = mk(Rr(TestRing::eps_ring(1)));
        g_q.validate().unwrap();
        let rr = Rr(small);
        let mut x = g_r.zero();
        x[0] = rr.monomial(1, &rat(1));
        assert!(is_mc(&g_r, &x));
        let ob = obstruction(&ext, &g_r, &g_s, &g_q, &x, &g_q.zero()).unwrap();
        let mut expect = g_q.zero();
        expect[1] = vec![rat(1) / rat(2)];
        assert!(g_q.eq(&ob, &expect));
    }

    #[test]
    fn defflat_identity_is_valid_and_neutral() {
        let alg = algebra::truncated_power(2);
        let rr = Rr(TestRing::eps_ring(2));
        let eta0 = crate::duality::catalog_cy(&alg).unwrap().eta;
        let df = DefFlat::new(&alg, rr.clone(), eta0);
        let base = DefObject { nu: Cochain::zero(2, true), eta: df.eta0_ring() };
        df.validate_object(&base).unwrap();
        let id = df.identity_morphism();
        df.validate_morphism(&base, &base, &id).unwrap();
        let c = df.compose(&id, &id).unwrap();
        df.validate_morphism(&base, &base, &c).unwrap();
        let g = df.hoch();
        assert!(g.eq(&c.phi, &id.phi));
        assert!(c.xi.is_zero());
    }

    #[test]
    fn defflat_flags_a_broken_volume_condition() {
        let alg = algebra::truncated_power(2);
        let rr = Rr(TestRing::eps_ring(2));
        let eta0 = crate::duality::catalog_cy(&alg).unwrap().eta;
        let df = DefFlat::new(&alg, rr.clone(), eta0);
        let mut bad_eta = df.eta0_ring();
        let doubled: Vec<(i32, Chain<REl>)> = bad_eta
            .u
            .iter()
            .map(|(p, c)| (*p, c.scale(&rr, &rr.from_rat(&rat(2)))))
            .collect();
        for (p, c) in doubled {
            bad_eta.set_coeff(p, c);
        }
        let bad = DefObject { nu: Cochain::zero(2, true), eta: bad_eta };
        let err = df.validate_object(&bad).unwrap_err();
        assert!(err.contains("condition 5"), "{err}");
    }
}

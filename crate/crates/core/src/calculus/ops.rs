//! The operator calculus itself: braces with their insertion signs, cup,
//! bracket, the cochain differential, contraction, Lie derivative, the chain
//! differential, the cyclic differential, and shift-aware wrappers.
//!
//! All signs flow through `sgn` and the insertion-position rule
//! `eps = sum_k deg(y_k) * (inputs consumed before y_k)`; the shift rule is
//! `op(s^r c) = (-1)^(r * deg op) s^r (op c)`.

use std::collections::BTreeMap;

use crate::algebra::{sv_add, Algebra, Sv, Tensor};
use crate::calculus::{CalcError, Chain, Cochain, CochainKey, CycElem, Vok};
use crate::exactla::CoeffRing;

/// A cochain argument to the calculus: either the product cochain
/// `mu(a,b) = -ab` of the ambient algebra (kept virtual because its support
/// is the whole multiplication table) or an explicit finitely supported one.
pub enum Gc<'a, E> {
    Mu0,
    C(&'a Cochain<E>),
}

impl<E> Clone for Gc<'_, E> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<E> Copy for Gc<'_, E> {}

impl<'a, E: Clone + PartialEq + std::fmt::Debug> Gc<'a, E> {
    pub fn arity(&self) -> usize {
        match self {
            Gc::Mu0 => 2,
            Gc::C(c) => c.arity,
        }
    }

    pub fn degree(&self) -> i64 {
        self.arity() as i64 - 1
    }

    fn vok(&self, alg: &Algebra) -> Vok {
        match self {
            Gc::Mu0 => {
                if alg.is_complete() {
                    Vok::All
                } else {
                    Vok::Bound(alg.weight_bound().unwrap_or(0))
                }
            }
            Gc::C(c) => c.vok,
        }
    }

    /// Evaluate on a basis tuple.
    pub fn eval<K: CoeffRing<El = E>>(
        &self,
        ring: &K,
        alg: &Algebra,
        args: &[u32],
    ) -> Result<Sv<E>, CalcError> {
        match self {
            Gc::Mu0 => {
                debug_assert_eq!(args.len(), 2);
                let mut out = Sv::new();
                for (k, c) in alg.mul_basis(args[0], args[1])? {
                    sv_add::<K>(ring, &mut out, *k as u32, ring.from_rat(&-c.clone()));
                }
                Ok(out)
            }
            Gc::C(c) => c.eval(ring, alg, args),
        }
    }
}

/// `(-1)^k` in the coefficient ring.
pub fn sgn<K: CoeffRing>(ring: &K, k: i64) -> K::El {
    if k.rem_euclid(2) == 0 {
        ring.one()
    } else {
        ring.neg(&ring.one())
    }
}

fn tuple_weight(alg: &Algebra, args: &[u32]) -> u32 {
    args.iter().map(|&i| alg.weight(i)).sum()
}

struct VokTracker {
    cur: Vok,
    graded: bool,
}

impl VokTracker {
    fn new(alg: &Algebra, init: Vok) -> Self {
        VokTracker { cur: if alg.is_graded() { init } else { Vok::All }, graded: alg.is_graded() }
    }

    fn fail_at(&mut self, w: u32) {
        if self.graded {
            self.cur = self.cur.cap_below(w);
        } else {
            panic!("product truncation in a finite-dimensional algebra");
        }
    }

    fn finish<E: Clone + PartialEq + std::fmt::Debug>(
        self,
        alg: &Algebra,
        mut c: Cochain<E>,
    ) -> Cochain<E> {
        c.vok = self.cur;
        if self.graded {
            if let Vok::Bound(b) = self.cur {
                c.entries.retain(|k, _| tuple_weight(alg, &k.args) <= b);
            }
        }
        c
    }
}

/// The brace `x{y_1,...,y_m}`: sum over insertion positions
/// `q_1 < ... < q_m` with sign `(-1)^eps`, `eps = sum deg(y_k) * i_k`, where
/// `i_k` is the number of direct inputs consumed before the block of `y_k`.
pub fn brace<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: Gc<K::El>,
    ys: &[Gc<K::El>],
) -> Cochain<K::El> {
    let m = ys.len();
    if m == 0 {
        match x {
            Gc::C(c) => return c.clone(),
            Gc::Mu0 => panic!("materializing the product cochain is unsupported"),
        }
    }
    // Insertions into fewer slots than cochains give zero; the clamp keeps
    // the arity bookkeeping of that zero result well defined.
    let res_arity = (x.arity() as i64 - m as i64
        + ys.iter().map(|y| y.arity() as i64).sum::<i64>())
    .max(0) as usize;
    let normalized = match x {
        Gc::C(c) => c.normalized,
        Gc::Mu0 => false,
    } && ys.iter().all(|y| matches!(y, Gc::C(c) if c.normalized));
    let mut out: Cochain<K::El> = Cochain::zero(res_arity, normalized);

    let mut init = x.vok(alg);
    for y in ys {
        if let Gc::C(c) = y {
            init = init.lower_by(c.wdelta_plus(alg)).meet(c.vok);
        }
    }
    let mut tracker = VokTracker::new(alg, init);

    match x {
        Gc::C(xc) => {
            // Index the insertable cochains by output.
            let mut by_out: Vec<Option<BTreeMap<u32, Vec<(&[u32], &K::El)>>>> =
                Vec::with_capacity(m);
            for y in ys {
                match y {
                    Gc::Mu0 => by_out.push(None),
                    Gc::C(c) => {
                        let mut map: BTreeMap<u32, Vec<(&[u32], &K::El)>> = BTreeMap::new();
                        for (k, v) in &c.entries {
                            map.entry(k.out).or_default().push((&k.args, v));
                        }
                        by_out.push(Some(map));
                    }
                }
            }
            let a_x = xc.arity;
            let mut slots = vec![0usize; m];
            for (xkey, cx) in &xc.entries {
                // Iterate increasing m-subsets of slot positions.
                for (i, s) in slots.iter_mut().enumerate() {
                    *s = i;
                }
                if m > a_x {
                    continue;
                }
                loop {
                    insert_matches(ring, alg, ys, &by_out, xkey, cx, &slots, &mut out);
                    // Next increasing subset.
                    let mut pos = m;
                    loop {
                        if pos == 0 {
                            pos = usize::MAX;
                            break;
                        }
                        pos -= 1;
                        slots[pos] += 1;
                        if slots[pos] <= a_x - (m - pos) {
                            for l in pos + 1..m {
                                slots[l] = slots[l - 1] + 1;
                            }
                            break;
                        }
                    }
                    if pos == usize::MAX {
                        break;
                    }
                }
            }
        }
        Gc::Mu0 => match ys {
            [Gc::C(yc)] => brace_mu_outer_one(ring, alg, yc, &mut out, &mut tracker),
            [Gc::Mu0] => brace_mu_outer_mu(ring, alg, &mut out, &mut tracker),
            [Gc::C(yc), Gc::C(zc)] => brace_mu_outer_two(ring, alg, yc, zc, &mut out, &mut tracker),
            _ => panic!("unsupported brace arguments for the product cochain"),
        },
    }
    tracker.finish(alg, out)
}

fn insert_matches<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    ys: &[Gc<K::El>],
    by_out: &[Option<BTreeMap<u32, Vec<(&[u32], &K::El)>>>],
    xkey: &CochainKey,
    cx: &K::El,
    slots: &[usize],
    out: &mut Cochain<K::El>,
) {
    let m = ys.len();
    // eps accumulates deg(y_k) * i_k with
    // i_k = slot_k - k + sum of arities of earlier insertions.
    fn rec<K: CoeffRing>(
        ring: &K,
        alg: &Algebra,
        ys: &[Gc<K::El>],
        by_out: &[Option<BTreeMap<u32, Vec<(&[u32], &K::El)>>>],
        xkey: &CochainKey,
        slots: &[usize],
        k: usize,
        arity_sum: usize,
        eps: i64,
        pieces: &mut Vec<Vec<u32>>,
        coeff: K::El,
        out: &mut Cochain<K::El>,
    ) {
        let m = ys.len();
        if k == m {
            // Assemble the result tuple.
            let mut args = Vec::new();
            let mut next = 0usize;
            for (k, &q) in slots.iter().enumerate() {
                args.extend_from_slice(&xkey.args[next..q]);
                args.extend_from_slice(&pieces[k]);
                next = q + 1;
            }
            args.extend_from_slice(&xkey.args[next..]);
            let v = ring.mul(&coeff, &sgn(ring, eps));
            out.add_entry(ring, CochainKey { args, out: xkey.out }, v);
            return;
        }
        let q = slots[k];
        let i_k = (q - k + arity_sum) as i64;
        let want = xkey.args[q];
        match &by_out[k] {
            None => {
                // The product cochain: all pairs multiplying to `want`,
                // with the sign of mu(a,b) = -ab.
                for (i, j, c) in alg.rev_mul(want) {
                    pieces.push(vec![*i as u32, *j as u32]);
                    let cc = ring.scale(&-c.clone(), &coeff);
                    rec(
                        ring, alg, ys, by_out, xkey, slots, k + 1, arity_sum + 2,
                        eps + i_k, pieces, cc, out,
                    );
                    pieces.pop();
                }
            }
            Some(map) => {
                if let Some(entries) = map.get(&want) {
                    let deg = ys[k].degree();
                    for (yargs, cy) in entries {
                        pieces.push(yargs.to_vec());
                        let cc = ring.mul(cy, &coeff);
                        rec(
                            ring, alg, ys, by_out, xkey, slots, k + 1,
                            arity_sum + yargs.len(), eps + deg * i_k, pieces, cc, out,
                        );
                        pieces.pop();
                    }
                }
            }
        }
    }
    let mut pieces = Vec::with_capacity(m);
    rec(ring, alg, ys, by_out, xkey, slots, 0, 0, 0, &mut pieces, cx.clone(), out);
}

/// `mu{y}` for honest `y`: `mu(y(...), t) + (-1)^deg(y) mu(t, y(...))`.
fn brace_mu_outer_one<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    yc: &Cochain<K::El>,
    out: &mut Cochain<K::El>,
    tracker: &mut VokTracker,
) {
    let dim = alg.dim() as u32;
    let ysign = sgn(ring, yc.degree());
    for (ykey, cy) in &yc.entries {
        let wy = tuple_weight(alg, &ykey.args);
        for s in 0..dim {
            let w = wy + alg.weight(s);
            // Slot 0: mu(y(...), s) = -y_out * s.
            match alg.mul_basis(ykey.out, s) {
                Err(_) => tracker.fail_at(w),
                Ok(terms) => {
                    for (k2, c) in terms {
                        let mut args = ykey.args.clone();
                        args.push(s);
                        let v = ring.scale(&-c.clone(), cy);
                        out.add_entry(ring, CochainKey { args, out: *k2 as u32 }, v);
                    }
                }
            }
            // Slot 1: (-1)^deg(y) mu(s, y(...)).
            match alg.mul_basis(s, ykey.out) {
                Err(_) => tracker.fail_at(w),
                Ok(terms) => {
                    for (k2, c) in terms {
                        let mut args = vec![s];
                        args.extend_from_slice(&ykey.args);
                        let v = ring.mul(&ysign, &ring.scale(&-c.clone(), cy));
                        out.add_entry(ring, CochainKey { args, out: *k2 as u32 }, v);
                    }
                }
            }
        }
    }
}

/// `mu{mu}`: both associativity halves with the slot-1 insertion sign.
fn brace_mu_outer_mu<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    out: &mut Cochain<K::El>,
    tracker: &mut VokTracker,
) {
    let dim = alg.dim() as u32;
    for i in 0..dim {
        for j in 0..dim {
            let inner = match alg.mul_basis(i, j) {
                Ok(t) => t.to_vec(),
                Err(_) => {
                    // Every completion with any third factor is also unknown.
                    tracker.fail_at(alg.weight(i) + alg.weight(j));
                    continue;
                }
            };
            for s in 0..dim {
                let w = alg.weight(i) + alg.weight(j) + alg.weight(s);
                for (k, c) in &inner {
                    // Slot 0: mu(mu(e_i,e_j), e_s) = + (e_i e_j) e_s.
                    match alg.mul_basis(*k as u32, s) {
                        Err(_) => tracker.fail_at(w),
                        Ok(terms) => {
                            for (q, e) in terms {
                                let v = ring.from_rat(&(c.clone() * e.clone()));
                                out.add_entry(
                                    ring,
                                    CochainKey { args: vec![i, j, s], out: *q as u32 },
                                    v,
                                );
                            }
                        }
                    }
                    // Slot 1, sign (-1)^deg(mu) = -1: -mu(e_s, mu(e_i,e_j))
                    // = -(e_s (e_i e_j)).
                    match alg.mul_basis(s, *k as u32) {
                        Err(_) => tracker.fail_at(w),
                        Ok(terms) => {
                            for (q, e) in terms {
                                let v = ring.from_rat(&(-(c.clone() * e.clone())));
                                out.add_entry(
                                    ring,
                                    CochainKey { args: vec![s, i, j], out: *q as u32 },
                                    v,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `mu{y,z}`: the single placement, sign `(-1)^(deg z * arity y)`.
fn brace_mu_outer_two<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    yc: &Cochain<K::El>,
    zc: &Cochain<K::El>,
    out: &mut Cochain<K::El>,
    tracker: &mut VokTracker,
) {
    for (ykey, cy) in &yc.entries {
        let wy = tuple_weight(alg, &ykey.args);
        for (zkey, cz) in &zc.entries {
            let w = wy + tuple_weight(alg, &zkey.args);
            let eps = zc.degree() * yc.arity as i64;
            match alg.mul_basis(ykey.out, zkey.out) {
                Err(_) => tracker.fail_at(w),
                Ok(terms) => {
                    for (k, c) in terms {
                        let mut args = ykey.args.clone();
                        args.extend_from_slice(&zkey.args);
                        let v = ring.mul(&sgn(ring, eps), &ring.scale(&-c.clone(), &ring.mul(cy, cz)));
                        out.add_entry(ring, CochainKey { args, out: *k as u32 }, v);
                    }
                }
            }
        }
    }
}

/// Gerstenhaber bracket `[x,y] = x{y} - (-1)^(deg x * deg y) y{x}`.
pub fn bracket<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: Gc<K::El>,
    y: Gc<K::El>,
) -> Cochain<K::El> {
    let xy = brace(ring, alg, x, &[y]);
    let yx = brace(ring, alg, y, &[x]);
    let s = sgn(ring, x.degree() * y.degree());
    let mut out = xy.sub(ring, &yx.scale(ring, &s));
    // When the virtual product cochain participates against a normalized
    // cochain, its unit-argument entries cancel in the commutator; the
    // result is again normalized.
    let participants_norm = |g: &Gc<K::El>| match g {
        Gc::Mu0 => true,
        Gc::C(c) => c.normalized,
    };
    if participants_norm(&x) && participants_norm(&y) {
        let unit = alg.unit as u32;
        let clean = out.entries.keys().all(|k| !k.args.contains(&unit));
        debug_assert!(
            clean,
            "unit-argument entries failed to cancel in a normalized bracket"
        );
        if clean {
            out.normalized = true;
        }
    }
    out
}

/// Cup product `x cup y = (-1)^(deg x) mu{x,y}`.
pub fn cup<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: &Cochain<K::El>,
    y: &Cochain<K::El>,
) -> Cochain<K::El> {
    let m = brace(ring, alg, Gc::Mu0, &[Gc::C(x), Gc::C(y)]);
    let mut out = m.scale(ring, &sgn(ring, x.degree()));
    out.normalized = x.normalized && y.normalized;
    out
}

/// Cochain differential `dx = [mu, x]`, degree one.
pub fn diff<K: CoeffRing>(ring: &K, alg: &Algebra, x: &Cochain<K::El>) -> Cochain<K::El> {
    bracket(ring, alg, Gc::Mu0, Gc::C(x))
}

/// Contraction `i_x(b0 (x) t1 ... tn) = b0 x(t1..ta) (x) t(a+1) ... tn`.
pub fn contract<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: Gc<K::El>,
    c: &Chain<K::El>,
) -> Result<Chain<K::El>, CalcError> {
    let a = x.arity();
    let mut out = Chain::zero(c.normalized);
    for (t, coeff) in &c.terms {
        if t.arity() < a {
            continue;
        }
        let val = x.eval(ring, alg, &t.rest[..a])?;
        for (&k, v) in &val {
            for (k2, c2) in alg.mul_basis(t.b0, k)? {
                let tensor = Tensor { b0: *k2 as u32, rest: t.rest[a..].to_vec() };
                let v2 = ring.scale(c2, &ring.mul(coeff, v));
                out.add_term(ring, tensor, v2);
            }
        }
    }
    Ok(out)
}

/// Lie derivative: interior insertions with sign `(-1)^(deg x * i)` plus
/// wrap-around terms with sign `(-1)^(n(i+1) + deg x)` where `x` consumes a
/// cyclic run through slot zero and its value becomes the new slot zero.
pub fn lie<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: Gc<K::El>,
    c: &Chain<K::El>,
) -> Result<Chain<K::El>, CalcError> {
    let a = x.arity();
    let degx = x.degree();
    let unit = alg.unit as u32;
    let mut out = Chain::zero(c.normalized);
    for (t, coeff) in &c.terms {
        let n = t.arity();
        // Interior terms: x eats slots i+1 .. i+a (1-based), i from 0.
        if n >= a {
            for i in 0..=(n - a) {
                let val = x.eval(ring, alg, &t.rest[i..i + a])?;
                let s = sgn(ring, degx * i as i64);
                for (&k, v) in &val {
                    if c.normalized && k == unit {
                        continue;
                    }
                    let mut rest = Vec::with_capacity(n - a + 1);
                    rest.extend_from_slice(&t.rest[..i]);
                    rest.push(k);
                    rest.extend_from_slice(&t.rest[i + a..]);
                    let v2 = ring.mul(&s, &ring.mul(coeff, v));
                    out.add_term(ring, Tensor { b0: t.b0, rest }, v2);
                }
            }
        }
        // Wrap-around terms exist when a <= n + 1.
        if a <= n + 1 && a >= 1 {
            let lo = n + 1 - a;
            for i in lo..=n {
                // Arguments (t_{i+1},...,t_n, b0, t_1,...,t_{a-1-(n-i)}).
                let tail = a - 1 - (n - i);
                let mut args = Vec::with_capacity(a);
                args.extend_from_slice(&t.rest[i..]);
                args.push(t.b0);
                args.extend_from_slice(&t.rest[..tail]);
                let val = x.eval(ring, alg, &args)?;
                let s = sgn(ring, (n as i64) * (i as i64 + 1) + degx);
                for (&k, v) in &val {
                    let rest = t.rest[tail..i].to_vec();
                    let v2 = ring.mul(&s, &ring.mul(coeff, v));
                    out.add_term(ring, Tensor { b0: k, rest }, v2);
                }
            }
        }
    }
    Ok(out)
}

/// Hochschild chain differential, the Lie derivative along the product
/// cochain.
pub fn hoch_b<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    c: &Chain<K::El>,
) -> Result<Chain<K::El>, CalcError> {
    lie(ring, alg, Gc::Mu0, c)
}

/// Classical bar-type differential written out directly; an independent
/// route to the same operator used to cross-check `hoch_b`.
pub fn bar_b_oracle<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    c: &Chain<K::El>,
) -> Result<Chain<K::El>, CalcError> {
    let unit = alg.unit as u32;
    let mut out = Chain::zero(c.normalized);
    for (t, coeff) in &c.terms {
        let n = t.arity();
        if n == 0 {
            continue;
        }
        // j = 0: b0 t1 (x) t2 ... tn.
        for (k, c2) in alg.mul_basis(t.b0, t.rest[0])? {
            let tensor = Tensor { b0: *k as u32, rest: t.rest[1..].to_vec() };
            out.add_term(ring, tensor, ring.scale(c2, coeff));
        }
        // 1 <= j <= n-1: interior products, projected in the normalized
        // complex.
        for j in 1..n {
            let s = sgn(ring, j as i64);
            for (k, c2) in alg.mul_basis(t.rest[j - 1], t.rest[j])? {
                if c.normalized && *k as u32 == unit {
                    continue;
                }
                let mut rest = Vec::with_capacity(n - 1);
                rest.extend_from_slice(&t.rest[..j - 1]);
                rest.push(*k as u32);
                rest.extend_from_slice(&t.rest[j + 1..]);
                let v = ring.mul(&s, &ring.scale(c2, coeff));
                out.add_term(ring, Tensor { b0: t.b0, rest }, v);
            }
        }
        // Wrap: (-1)^n tn b0 (x) t1 ... t(n-1).
        let s = sgn(ring, n as i64);
        for (k, c2) in alg.mul_basis(t.rest[n - 1], t.b0)? {
            let tensor = Tensor { b0: *k as u32, rest: t.rest[..n - 1].to_vec() };
            out.add_term(ring, tensor, ring.mul(&s, &ring.scale(c2, coeff)));
        }
    }
    Ok(out)
}

/// Cyclic differential of degree `-1`: on the normalized complex the cyclic
/// rotations of `(b0; t1..tn)` prefixed with the unit, with sign
/// `(-1)^(n i)`; on the unnormalized complex additionally the terms with the
/// unit in slot one.
pub fn connes_b<K: CoeffRing>(ring: &K, alg: &Algebra, c: &Chain<K::El>) -> Chain<K::El> {
    let unit = alg.unit as u32;
    let mut out = Chain::zero(c.normalized);
    for (t, coeff) in &c.terms {
        let n = t.arity();
        // Cyclic word (a_0, ..., a_n) = (b0, t_1, ..., t_n).
        let mut word = Vec::with_capacity(n + 1);
        word.push(t.b0);
        word.extend_from_slice(&t.rest);
        for i in 0..=n {
            let s = sgn(ring, (n as i64) * (i as i64));
            // First family: 1 (x) a_i ... a_n a_0 ... a_{i-1}.
            let run: Vec<u32> =
                (0..=n).map(|j| word[(i + j) % (n + 1)]).collect();
            if c.normalized {
                // The old slot-zero entry moves inward and is projected; it
                // is the only possible unit in the run.
                if run.contains(&unit) {
                    continue;
                }
                out.add_term(ring, Tensor { b0: unit, rest: run }, ring.mul(&s, coeff));
            } else {
                out.add_term(ring, Tensor { b0: unit, rest: run.clone() }, ring.mul(&s, coeff));
                // Second family: a_{i-1} (x) 1 (x) a_i ... a_{i+n-1}, sign
                // (-1)^(n(i+1)).
                let s2 = sgn(ring, (n as i64) * (i as i64 + 1));
                let prev = word[(i + n) % (n + 1)];
                let mut rest = Vec::with_capacity(n + 1);
                rest.push(unit);
                for j in 0..n {
                    rest.push(word[(i + j) % (n + 1)]);
                }
                out.add_term(ring, Tensor { b0: prev, rest }, ring.mul(&s2, coeff));
            }
        }
    }
    out
}

/// `(b + uB)` on a shifted element, with the odd-operator shift sign.
pub fn cyc_d<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    e: &CycElem<K::El>,
) -> Result<CycElem<K::El>, CalcError> {
    let s = sgn(ring, e.shift as i64);
    let mut out = CycElem::zero(e.shift, e.normalized);
    for (&p, c) in &e.u {
        let bc = hoch_b(ring, alg, c)?.scale(ring, &s);
        let cur = match out.u.remove(&p) {
            None => bc,
            Some(old) => old.add(ring, &bc),
        };
        out.set_coeff(p, cur);
        let bb = connes_b(ring, alg, c).scale(ring, &s);
        let cur = match out.u.remove(&(p + 1)) {
            None => bb,
            Some(old) => old.add(ring, &bb),
        };
        out.set_coeff(p + 1, cur);
    }
    Ok(out)
}

/// Contraction on a shifted element: sign `(-1)^(shift * (deg x + 1))`.
pub fn cyc_contract<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: Gc<K::El>,
    e: &CycElem<K::El>,
) -> Result<CycElem<K::El>, CalcError> {
    let s = sgn(ring, e.shift as i64 * (x.degree() + 1));
    let mut out = CycElem::zero(e.shift, e.normalized);
    for (&p, c) in &e.u {
        out.set_coeff(p, contract(ring, alg, x, c)?.scale(ring, &s));
    }
    Ok(out)
}

/// Lie derivative on a shifted element: sign `(-1)^(shift * deg x)`.
pub fn cyc_lie<K: CoeffRing>(
    ring: &K,
    alg: &Algebra,
    x: Gc<K::El>,
    e: &CycElem<K::El>,
) -> Result<CycElem<K::El>, CalcError> {
    let s = sgn(ring, e.shift as i64 * x.degree());
    let mut out = CycElem::zero(e.shift, e.normalized);
    for (&p, c) in &e.u {
        out.set_coeff(p, lie(ring, alg, x, c)?.scale(ring, &s));
    }
    Ok(out)
}

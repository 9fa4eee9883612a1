//! Truncation windows of the chain complex, operator matrices over them,
//! and synthesis of the contraction homotopy `x -> S_x` by exact linear
//! solve.
//!
//! The defining system, split by `u`-power, is
//!
//! ```text
//! B i_x - (-1)^(deg x + 1) i_x B + b S_x - (-1)^(deg x + 1) S_x b + S_dx = L_x
//! B S_x - (-1)^(deg x + 1) S_x B = 0
//! ```
//!
//! imposed for every single-entry basis cochain of arity up to `a_eq` on
//! every window tensor of arity up to `n_max - 1`; unknowns range over basis
//! cochains of arity up to `a_eq + 1` and tensors of arity up to `n_max`.
//! The system splits into independent blocks along the multidegree of the
//! acted tensor and the multidegree shift of the cochain. The solution is
//! linear in the cochain by construction, and `S_x` annihilates tensors of
//! weight below the input weight of `x`, which keeps the assignment exact on
//! incomplete weight windows.

use std::collections::BTreeMap;
use std::rc::Rc;

use num_traits::Zero;

use crate::algebra::{Algebra, Tensor};
use crate::calculus::ops::{connes_b, contract, diff, hoch_b, lie, sgn, Gc};
use crate::calculus::{CalcError, Chain, Cochain, CochainKey, CycElem, Vok};
use crate::exactla::{CoeffRing, Qq, SolveOutcome, SparseMat};
use crate::{rat, Rat};

/// An enumerated basis of a finite window of the normalized chain complex.
#[derive(Debug, Clone)]
pub struct ChainWindow {
    pub alg: Rc<Algebra>,
    pub normalized: bool,
    pub n_max: usize,
    pub w_max: Option<u32>,
    pub tensors: Vec<Tensor>,
    index: BTreeMap<Tensor, usize>,
}

impl ChainWindow {
    pub fn new(alg: &Rc<Algebra>, normalized: bool, n_max: usize, w_max: Option<u32>) -> Self {
        assert!(normalized, "windows are enumerated for the normalized complex");
        let mut tensors = Vec::new();
        if alg.is_graded() {
            let wb = w_max.expect("graded windows need a weight bound");
            for n in 0..=n_max {
                for w in 0..=wb {
                    tensors.extend(alg.normalized_tensors(n, w));
                }
            }
        } else {
            for n in 0..=n_max {
                tensors.extend(alg.normalized_tensors_finite(n));
            }
        }
        tensors.sort();
        let index = tensors.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        ChainWindow { alg: Rc::clone(alg), normalized, n_max, w_max, tensors, index }
    }

    pub fn dim(&self) -> usize {
        self.tensors.len()
    }

    pub fn contains(&self, t: &Tensor) -> bool {
        self.index.contains_key(t)
    }

    pub fn position(&self, t: &Tensor) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn to_vec(&self, c: &Chain<Rat>) -> Result<Vec<Rat>, CalcError> {
        let mut v = vec![rat(0); self.dim()];
        for (t, coeff) in &c.terms {
            match self.index.get(t) {
                Some(&i) => v[i] = coeff.clone(),
                None => {
                    return Err(CalcError::Window(format!(
                        "tensor {} outside the chain window",
                        self.alg.fmt_tensor(t)
                    )))
                }
            }
        }
        Ok(v)
    }

    pub fn from_vec(&self, v: &[Rat]) -> Chain<Rat> {
        let mut c = Chain::zero(self.normalized);
        for (i, x) in v.iter().enumerate() {
            if !x.is_zero() {
                c.add_term(&Qq, self.tensors[i].clone(), x.clone());
            }
        }
        c
    }

    /// Matrix of a chain operator with columns indexed by this window and
    /// rows by `target`.
    pub fn op_matrix(
        &self,
        target: &ChainWindow,
        f: &mut dyn FnMut(&Chain<Rat>) -> Result<Chain<Rat>, CalcError>,
    ) -> Result<SparseMat<Rat>, CalcError> {
        let mut m = SparseMat::zero(target.dim(), self.dim());
        for (j, t) in self.tensors.iter().enumerate() {
            let img = f(&Chain::single(&Qq, self.normalized, t.clone()))?;
            let v = target.to_vec(&img)?;
            for (i, x) in v.into_iter().enumerate() {
                if !x.is_zero() {
                    m.set(i, j, x);
                }
            }
        }
        Ok(m)
    }
}

/// Coordinates on a `u`-power range over a chain window.
#[derive(Debug, Clone)]
pub struct CycWindow {
    pub cw: ChainWindow,
    pub shift: i32,
    pub p_min: i32,
    pub p_max: i32,
}

impl CycWindow {
    pub fn new(cw: ChainWindow, shift: i32, p_min: i32, p_max: i32) -> Self {
        assert!(p_min <= p_max);
        CycWindow { cw, shift, p_min, p_max }
    }

    pub fn dim(&self) -> usize {
        self.cw.dim() * (self.p_max - self.p_min + 1) as usize
    }

    pub fn flat(&self, p: i32, tensor_idx: usize) -> usize {
        (p - self.p_min) as usize * self.cw.dim() + tensor_idx
    }

    pub fn basis_elem(&self, idx: usize) -> CycElem<Rat> {
        let d = self.cw.dim();
        let p = self.p_min + (idx / d) as i32;
        let t = self.cw.tensors[idx % d].clone();
        CycElem::from_chain(self.shift, p, Chain::single(&Qq, self.cw.normalized, t))
    }

    pub fn to_vec(&self, e: &CycElem<Rat>) -> Result<Vec<Rat>, CalcError> {
        if e.shift != self.shift {
            return Err(CalcError::Shape("shift mismatch against the window".into()));
        }
        let mut v = vec![rat(0); self.dim()];
        for (&p, c) in &e.u {
            if c.is_zero() {
                continue;
            }
            if p < self.p_min || p > self.p_max {
                return Err(CalcError::Window(format!("u-power {p} outside the window")));
            }
            let cv = self.cw.to_vec(c)?;
            for (i, x) in cv.into_iter().enumerate() {
                if !x.is_zero() {
                    v[self.flat(p, i)] = x;
                }
            }
        }
        Ok(v)
    }

    pub fn from_vec(&self, v: &[Rat]) -> CycElem<Rat> {
        let d = self.cw.dim();
        let mut e = CycElem::zero(self.shift, self.cw.normalized);
        for p in self.p_min..=self.p_max {
            let lo = self.flat(p, 0);
            let c = self.cw.from_vec(&v[lo..lo + d]);
            e.set_coeff(p, c);
        }
        e
    }

    pub fn op_matrix(
        &self,
        target: &CycWindow,
        f: &mut dyn FnMut(&CycElem<Rat>) -> Result<CycElem<Rat>, CalcError>,
    ) -> Result<SparseMat<Rat>, CalcError> {
        let mut m = SparseMat::zero(target.dim(), self.dim());
        for j in 0..self.dim() {
            let img = f(&self.basis_elem(j))?;
            let v = target.to_vec(&img)?;
            for (i, x) in v.into_iter().enumerate() {
                if !x.is_zero() {
                    m.set(i, j, x);
                }
            }
        }
        Ok(m)
    }
}

fn key_weight(alg: &Algebra, k: &CochainKey) -> u32 {
    k.args.iter().map(|&i| alg.weight(i)).sum()
}

fn key_delta_multi(alg: &Algebra, k: &CochainKey) -> Vec<i32> {
    let mut d = alg.multi(k.out).to_vec();
    for &a in &k.args {
        for (x, y) in d.iter_mut().zip(alg.multi(a)) {
            *x -= y;
        }
    }
    d
}

struct UnknownBlock {
    beta: usize,
    tensor_idx: usize,
    offset: usize,
    targets: Vec<Tensor>,
}

fn addu(map: &mut BTreeMap<Tensor, BTreeMap<usize, Rat>>, tensor: Tensor, u: usize, c: Rat) {
    if c.is_zero() {
        return;
    }
    let row = map.entry(tensor).or_default();
    let cur = row.entry(u).or_insert_with(|| rat(0));
    *cur += c;
    if cur.is_zero() {
        row.remove(&u);
    }
}

/// Add `c * S_beta(tensor)` to the unknown-linear expression `map`. Every
/// unknown referenced by the defining equations stays within the group of
/// the equation, so the block list of that group suffices.
#[allow(clippy::too_many_arguments)]
fn add_s_block(
    alg: &Algebra,
    window: &ChainWindow,
    basis: &[CochainKey],
    block_of: &BTreeMap<(usize, usize), usize>,
    blocks: &[UnknownBlock],
    map: &mut BTreeMap<Tensor, BTreeMap<usize, Rat>>,
    beta: usize,
    tensor: &Tensor,
    c: &Rat,
) -> Result<(), CalcError> {
    if c.is_zero() {
        return Ok(());
    }
    if alg.is_graded() && key_weight(alg, &basis[beta]) > alg.tensor_weight(tensor) {
        // The weight rule forces this value to zero.
        return Ok(());
    }
    let ti = window
        .position(tensor)
        .ok_or_else(|| CalcError::Window("operator left the unknown window".into()))?;
    if let Some(&bi) = block_of.get(&(beta, ti)) {
        let ub = &blocks[bi];
        debug_assert_eq!(ub.beta, beta);
        debug_assert_eq!(ub.tensor_idx, ti);
        for (vi, v) in ub.targets.iter().enumerate() {
            addu(map, v.clone(), ub.offset + vi, c.clone());
        }
    }
    Ok(())
}

/// The synthesized homotopy assignment on a window.
pub struct SWindow {
    pub alg: Rc<Algebra>,
    pub window: ChainWindow,
    pub a_eq: usize,
    basis: Vec<CochainKey>,
    index: BTreeMap<CochainKey, usize>,
    action: Vec<BTreeMap<Tensor, Chain<Rat>>>,
}

impl SWindow {
    fn enumerate_basis(alg: &Algebra, a_eq: usize, w_max: Option<u32>) -> Vec<CochainKey> {
        let mut keys = Vec::new();
        let dim = alg.dim() as u32;
        for arity in 0..=a_eq + 1 {
            let mut cur = Vec::new();
            Self::rec_args(alg, arity, w_max, &mut cur, &mut |args| {
                for out in 0..dim {
                    keys.push(CochainKey { args: args.to_vec(), out });
                }
            });
        }
        keys.sort();
        keys
    }

    /// On incomplete windows a weight-gaining cochain is only usable on
    /// tensors whose contraction products stay inside the stored range.
    fn cap_ok(alg: &Algebra, key: &CochainKey, t: &Tensor) -> bool {
        if !alg.is_graded() || alg.is_complete() {
            return true;
        }
        let delta = alg.weight(key.out) as i64 - key_weight(alg, key) as i64;
        alg.tensor_weight(t) as i64 + delta <= alg.weight_bound().unwrap() as i64
    }

    fn rec_args(
        alg: &Algebra,
        slots: usize,
        w_max: Option<u32>,
        cur: &mut Vec<u32>,
        emit: &mut dyn FnMut(&[u32]),
    ) {
        if slots == 0 {
            emit(cur);
            return;
        }
        for &i in &alg.nonunit {
            if let Some(wm) = w_max {
                let used: u32 = cur.iter().map(|&j| alg.weight(j)).sum();
                if used + alg.weight(i as u32) > wm {
                    continue;
                }
            }
            cur.push(i as u32);
            Self::rec_args(alg, slots - 1, w_max, cur, emit);
            cur.pop();
        }
    }

    fn single(key: &CochainKey) -> Cochain<Rat> {
        let mut c = Cochain::zero(key.args.len(), true);
        c.add_entry(&Qq, key.clone(), rat(1));
        c
    }

    /// Build the assignment for the given window by exact linear solve. An
    /// inconsistent system is a reportable bug (or a too-small window), never
    /// silently patched.
    pub fn synthesize(
        alg: &Rc<Algebra>,
        a_eq: usize,
        n_max: usize,
        w_max: Option<u32>,
    ) -> Result<SWindow, CalcError> {
        if alg.is_graded() {
            let wm = w_max.expect("graded S window needs a weight bound");
            if !alg.is_complete() {
                assert!(
                    wm <= alg.weight_bound().unwrap(),
                    "window weight exceeds the stored algebra window"
                );
            }
        }
        let basis = Self::enumerate_basis(alg, a_eq, w_max);
        let index: BTreeMap<CochainKey, usize> =
            basis.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let window = ChainWindow::new(alg, true, n_max, w_max);
        let mut action: Vec<BTreeMap<Tensor, Chain<Rat>>> = vec![BTreeMap::new(); basis.len()];

        // Group unknown blocks by (cochain multidegree shift, tensor
        // multidegree); each group is an independent linear system.
        let mut groups: BTreeMap<(Vec<i32>, Vec<i32>), Vec<UnknownBlock>> = BTreeMap::new();
        let mut block_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (b, key) in basis.iter().enumerate() {
            let a = key.args.len();
            let wb = key_weight(alg, key);
            let dmul = key_delta_multi(alg, key);
            for (ti, t) in window.tensors.iter().enumerate() {
                let n = t.arity();
                if n + 2 < a {
                    continue;
                }
                if alg.is_graded() && wb > alg.tensor_weight(t) {
                    continue;
                }
                if !Self::cap_ok(alg, key, t) {
                    continue;
                }
                let na = n + 2 - a;
                let targets: Vec<Tensor> = if alg.is_graded() {
                    let tw = alg.tensor_weight(t) as i64 + alg.weight(key.out) as i64 - wb as i64;
                    if tw < 0 {
                        Vec::new()
                    } else {
                        let mut want = alg.tensor_multi(t);
                        for (x, y) in want.iter_mut().zip(&dmul) {
                            *x += y;
                        }
                        alg.normalized_tensors(na, tw as u32)
                            .into_iter()
                            .filter(|v| alg.tensor_multi(v) == want)
                            .collect()
                    }
                } else {
                    alg.normalized_tensors_finite(na)
                };
                if targets.is_empty() {
                    continue;
                }
                let gkey = (dmul.clone(), alg.tensor_multi(t));
                let list = groups.entry(gkey).or_default();
                let offset = list.iter().map(|u| u.targets.len()).sum();
                block_of.insert((b, ti), list.len());
                list.push(UnknownBlock { beta: b, tensor_idx: ti, offset, targets });
            }
        }

        // Assemble the equations per group. Equations are emitted for every
        // basis cochain of arity up to `a_eq` and every tensor of arity up
        // to `n_max - 1`, whether or not the direct unknown block is empty.
        let empty: Vec<UnknownBlock> = Vec::new();
        let mut systems: BTreeMap<(Vec<i32>, Vec<i32>), (Vec<BTreeMap<usize, Rat>>, Vec<Rat>)> =
            BTreeMap::new();
        for (b, key) in basis.iter().enumerate() {
            let a = key.args.len();
            if a > a_eq {
                continue;
            }
            let wb = key_weight(alg, key);
            let dmul = key_delta_multi(alg, key);
            let bc = Self::single(key);
            let x = Gc::C(&bc);
            let dx = diff(&Qq, alg, &bc);
            let sg = sgn(&Qq, a as i64); // (-1)^(deg x + 1)
            for (ti, t) in window.tensors.iter().enumerate() {
                if t.arity() + 1 > n_max {
                    continue;
                }
                if alg.is_graded() && wb > alg.tensor_weight(t) {
                    // All terms vanish identically under the weight rule.
                    continue;
                }
                if !Self::cap_ok(alg, key, t) {
                    // The assignment is not defined past the certified range.
                    continue;
                }
                let gkey = (dmul.clone(), alg.tensor_multi(t));
                let blocks = groups.get(&gkey).unwrap_or(&empty);
                let tch = Chain::single(&Qq, true, t.clone());

                // Unknown-linear expressions per output tensor.
                let mut expr1: BTreeMap<Tensor, BTreeMap<usize, Rat>> = BTreeMap::new();
                let mut expr2: BTreeMap<Tensor, BTreeMap<usize, Rat>> = BTreeMap::new();

                // First equation: b S_x(t).
                if let Some(&bi) = block_of.get(&(b, ti)) {
                    let blk = &blocks[bi];
                    for (vi, v) in blk.targets.iter().enumerate() {
                        let bv = hoch_b(&Qq, alg, &Chain::single(&Qq, true, v.clone()))?;
                        for (tt, c) in bv.terms {
                            addu(&mut expr1, tt, blk.offset + vi, c);
                        }
                    }
                }
                // First equation: -(-1)^(deg x + 1) S_x(b t).
                let bt = hoch_b(&Qq, alg, &tch)?;
                for (ut, cu) in &bt.terms {
                    add_s_block(
                        alg, &window, &basis, &block_of, blocks, &mut expr1, b, ut,
                        &-(sg.clone() * cu.clone()),
                    )?;
                }
                // First equation: S_dx(t).
                // The entry list of dx is complete for inputs up to the
                // certified bound, which covers this tensor by the cap rule.
                if alg.is_graded() {
                    assert!(
                        dx.vok.covers(alg.tensor_weight(t)),
                        "differential not certified on this tensor"
                    );
                }
                for (k2, c2) in &dx.entries {
                    if alg.is_graded() && key_weight(alg, k2) > alg.tensor_weight(t) {
                        continue;
                    }
                    let gamma = *index.get(k2).ok_or_else(|| {
                        CalcError::Window("differential entry outside the cochain basis".into())
                    })?;
                    add_s_block(alg, &window, &basis, &block_of, blocks, &mut expr1, gamma, t, c2)?;
                }

                // Second equation: B S_x(t) - (-1)^(deg x + 1) S_x(B t).
                if let Some(&bi) = block_of.get(&(b, ti)) {
                    let blk = &blocks[bi];
                    for (vi, v) in blk.targets.iter().enumerate() {
                        let bv = connes_b(&Qq, alg, &Chain::single(&Qq, true, v.clone()));
                        for (tt, c) in bv.terms {
                            addu(&mut expr2, tt, blk.offset + vi, c);
                        }
                    }
                }
                let cbt = connes_b(&Qq, alg, &tch);
                for (ut, cu) in &cbt.terms {
                    add_s_block(
                        alg, &window, &basis, &block_of, blocks, &mut expr2, b, ut,
                        &-(sg.clone() * cu.clone()),
                    )?;
                }

                // Known side of the first equation:
                // L_x(t) - B i_x(t) + (-1)^(deg x + 1) i_x(B t).
                let ixt = contract(&Qq, alg, x, &tch)?;
                let b_ixt = connes_b(&Qq, alg, &ixt);
                let ix_bt = contract(&Qq, alg, x, &cbt)?;
                let lxt = lie(&Qq, alg, x, &tch)?;
                let mut rhs1 = lxt.sub(&Qq, &b_ixt);
                rhs1 = rhs1.add(&Qq, &ix_bt.scale(&Qq, &sg));

                let (rows, rhs) = systems.entry(gkey).or_default();
                let mut tensors1: Vec<Tensor> = expr1.keys().cloned().collect();
                for tt in rhs1.terms.keys() {
                    if !expr1.contains_key(tt) {
                        tensors1.push(tt.clone());
                    }
                }
                tensors1.sort();
                tensors1.dedup();
                for tt in tensors1 {
                    let coeffs = expr1.remove(&tt).unwrap_or_default();
                    let r = rhs1.terms.get(&tt).cloned().unwrap_or_else(|| rat(0));
                    if coeffs.is_empty() && r.is_zero() {
                        continue;
                    }
                    rows.push(coeffs);
                    rhs.push(r);
                }
                for (_, coeffs) in expr2 {
                    if !coeffs.is_empty() {
                        rows.push(coeffs);
                        rhs.push(rat(0));
                    }
                }
            }
        }

        for (gkey, (rows, rhs)) in &systems {
            let blocks = groups.get(gkey).unwrap_or(&empty);
            let nunk: usize = blocks.iter().map(|b| b.targets.len()).sum();
            if rows.is_empty() {
                continue;
            }
            let mut mat = SparseMat::zero(rows.len(), nunk);
            for (i, row) in rows.iter().enumerate() {
                for (&j, c) in row {
                    mat.set(i, j, c.clone());
                }
            }
            let sol = match mat.solve(rhs) {
                SolveOutcome::Solution(s) => s,
                SolveOutcome::Inconsistent(_) => {
                    return Err(CalcError::Window(
                        "homotopy system inconsistent: window too small or implementation error"
                            .into(),
                    ))
                }
            };
            for blk in blocks {
                let mut c = Chain::zero(true);
                for (vi, v) in blk.targets.iter().enumerate() {
                    let coeff = sol[blk.offset + vi].clone();
                    if !coeff.is_zero() {
                        c.add_term(&Qq, v.clone(), coeff);
                    }
                }
                if !c.is_zero() {
                    action[blk.beta].insert(window.tensors[blk.tensor_idx].clone(), c);
                }
            }
        }

        Ok(SWindow { alg: Rc::clone(alg), window, a_eq, basis, index, action })
    }

    /// Apply `S_x` to a chain, extending linearly over any coefficient ring.
    pub fn apply<K: CoeffRing>(
        &self,
        ring: &K,
        x: &Cochain<K::El>,
        c: &Chain<K::El>,
    ) -> Result<Chain<K::El>, CalcError> {
        let alg = &*self.alg;
        let mut out = Chain::zero(c.normalized);
        for (t, ct) in &c.terms {
            if !self.window.contains(t) {
                return Err(CalcError::Window(format!(
                    "tensor {} outside the homotopy window",
                    alg.fmt_tensor(t)
                )));
            }
            let tw = if alg.is_graded() { alg.tensor_weight(t) } else { 0 };
            if alg.is_graded() && !x.vok.covers(tw) {
                return Err(CalcError::BeyondCertified {
                    weight: tw,
                    bound: match x.vok {
                        Vok::Bound(b) => b,
                        Vok::All => unreachable!(),
                    },
                });
            }
            for (key, cx) in &x.entries {
                if alg.is_graded() && key_weight(alg, key) > tw {
                    continue;
                }
                if !Self::cap_ok(alg, key, t) {
                    let delta = alg.weight(key.out) as i64 - key_weight(alg, key) as i64;
                    let bound = (alg.weight_bound().unwrap() as i64 - delta).max(0) as u32;
                    return Err(CalcError::BeyondCertified { weight: tw, bound });
                }
                let beta = *self.index.get(key).ok_or_else(|| {
                    CalcError::Window("cochain entry outside the homotopy basis".into())
                })?;
                if let Some(ch) = self.action[beta].get(t) {
                    let f = ring.mul(cx, ct);
                    for (v, r) in &ch.terms {
                        out.add_term(ring, v.clone(), ring.mul(&f, &ring.from_rat(r)));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `S_x` on a shifted element: sign `(-1)^(shift * (deg x - 1))`.
    pub fn apply_cyc<K: CoeffRing>(
        &self,
        ring: &K,
        x: &Cochain<K::El>,
        e: &CycElem<K::El>,
    ) -> Result<CycElem<K::El>, CalcError> {
        let s = sgn(ring, e.shift as i64 * (x.degree() - 1));
        let mut out = CycElem::zero(e.shift, e.normalized);
        for (&p, c) in &e.u {
            out.set_coeff(p, self.apply(ring, x, c)?.scale(ring, &s));
        }
        Ok(out)
    }

    /// `I_x = i_x + u S_x` on a shifted element.
    pub fn apply_ix<K: CoeffRing>(
        &self,
        ring: &K,
        x: &Cochain<K::El>,
        e: &CycElem<K::El>,
    ) -> Result<CycElem<K::El>, CalcError> {
        let i = crate::calculus::ops::cyc_contract(ring, &self.alg, Gc::C(x), e)?;
        let s = self.apply_cyc(ring, x, e)?.mul_u(1);
        Ok(i.add(ring, &s))
    }

    /// Independent re-verification of both defining equations over the
    /// whole window; returns the first failure description.
    pub fn residual_check(&self) -> Result<(), String> {
        let alg = &self.alg;
        for key in &self.basis {
            let a = key.args.len();
            if a > self.a_eq {
                continue;
            }
            let bc = Self::single(key);
            let dx = diff(&Qq, alg, &bc);
            let sg = sgn(&Qq, a as i64);
            for t in &self.window.tensors {
                if t.arity() + 1 > self.window.n_max {
                    continue;
                }
                if !Self::cap_ok(alg, key, t) {
                    continue;
                }
                let tch = Chain::single(&Qq, true, t.clone());
                let err = |stage: &str, e: CalcError| format!("{stage}: {e}");
                let ixt = contract(&Qq, alg, Gc::C(&bc), &tch).map_err(|e| err("i", e))?;
                let bt = hoch_b(&Qq, alg, &tch).map_err(|e| err("b", e))?;
                let cbt = connes_b(&Qq, alg, &tch);
                let lhs1 = connes_b(&Qq, alg, &ixt)
                    .sub(&Qq, &contract(&Qq, alg, Gc::C(&bc), &cbt).map_err(|e| err("iB", e))?.scale(&Qq, &sg))
                    .add(&Qq, &hoch_b(&Qq, alg, &self.apply(&Qq, &bc, &tch).map_err(|e| err("S", e))?).map_err(|e| err("bS", e))?)
                    .sub(&Qq, &self.apply(&Qq, &bc, &bt).map_err(|e| err("Sb", e))?.scale(&Qq, &sg))
                    .add(&Qq, &self.apply(&Qq, &dx, &tch).map_err(|e| err("Sd", e))?);
                let rhs1 = lie(&Qq, alg, Gc::C(&bc), &tch).map_err(|e| err("L", e))?;
                if lhs1 != rhs1 {
                    return Err(format!(
                        "first homotopy equation fails for {} on {}",
                        bc.fmt(alg, &|r| crate::exactla::fmt_rat(r)),
                        alg.fmt_tensor(t)
                    ));
                }
                let lhs2 = connes_b(&Qq, alg, &self.apply(&Qq, &bc, &tch).map_err(|e| err("S", e))?)
                    .sub(&Qq, &self.apply(&Qq, &bc, &cbt).map_err(|e| err("SB", e))?.scale(&Qq, &sg));
                if !lhs2.is_zero() {
                    return Err(format!(
                        "second homotopy equation fails for {} on {}",
                        bc.fmt(alg, &|r| crate::exactla::fmt_rat(r)),
                        alg.fmt_tensor(t)
                    ));
                }
            }
        }
        Ok(())
    }
}

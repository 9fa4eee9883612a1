//! Volume classes, the cap map from cochain cohomology to chain homology,
//! its inverse, and the transported product on Hochschild homology.
//!
//! A volume structure stores a strict `(b + uB)`-cocycle whose u-degree-zero
//! part is the chain-level antisymmetrization of the algebra's volume form.
//! Nondegeneracy is certified block by block: the contraction against the
//! volume class must be invertible from cochain cohomology in arity `i` onto
//! chain homology in degree `d - i`, for every requested weight. The
//! transported product is `a . b = i_{j(a) cup j(b)} (volume)`, where `j`
//! inverts the cap on each block.

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::algebra::{Algebra, Tensor};
use crate::calculus::ops::{contract, cup, cyc_d, diff, Gc};
use crate::calculus::rnd::candidate_keys;
use crate::calculus::{CalcError, Chain, Cochain, CochainKey, CycElem};
use crate::cyclic::{hochschild_block, pi, HochBlock};
use crate::exactla::{Homology, Qq, SolveOutcome, SparseMat};
use crate::{rat, Rat};

/// A cochain cohomology block of one arity; on graded algebras the block is
/// additionally restricted to one weight gain and to keys whose argument
/// weight does not exceed `cut` (the high-weight keys form a subcomplex, so
/// the cut is a quotient complex and the differential still squares to
/// zero). `stable` compares the dimension against the cut enlarged by one.
pub struct CochBlock {
    pub arity: usize,
    pub gain: Option<i32>,
    pub cut: Option<u32>,
    pub keys: Vec<CochainKey>,
    pub hom: Homology<Rat>,
    pub stable: bool,
}

fn block_keys(alg: &Algebra, arity: usize, gain: Option<i32>, cut: Option<u32>) -> Vec<CochainKey> {
    candidate_keys(alg, arity, true, gain, cut)
}

pub fn cochain_from_vec(arity: usize, keys: &[CochainKey], v: &[Rat]) -> Cochain<Rat> {
    let mut c = Cochain::zero(arity, true);
    for (k, x) in keys.iter().zip(v) {
        c.add_entry(&Qq, k.clone(), x.clone());
    }
    c
}

pub fn cochain_vec(keys: &[CochainKey], c: &Cochain<Rat>) -> Result<Vec<Rat>, CalcError> {
    let index: BTreeMap<&CochainKey, usize> =
        keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut out = vec![rat(0); keys.len()];
    for (k, v) in &c.entries {
        match index.get(k) {
            Some(&i) => out[i] = v.clone(),
            None => {
                return Err(CalcError::Window(
                    "cochain is supported outside the block".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// Matrix of the cochain differential between two key blocks. Entries of the
/// image falling beyond the cut are discarded (quotient complex); every kept
/// entry must be certified, otherwise the cut was too greedy for the stored
/// multiplication window.
fn cochain_d_matrix(
    alg: &Algebra,
    src: &[CochainKey],
    src_arity: usize,
    tgt: &[CochainKey],
    cut: Option<u32>,
) -> Result<SparseMat<Rat>, CalcError> {
    let index: BTreeMap<&CochainKey, usize> =
        tgt.iter().enumerate().map(|(i, k)| (i, k)).map(|(i, k)| (k, i)).collect();
    let mut m = SparseMat::zero(tgt.len(), src.len());
    for (j, key) in src.iter().enumerate() {
        let f = cochain_from_vec(src_arity, std::slice::from_ref(key), &[rat(1)]);
        let df = diff(&Qq, alg, &f);
        if let Some(cut) = cut {
            if !df.vok.covers(cut) {
                return Err(CalcError::Window(
                    "cochain cut exceeds the certified weight of the differential".into(),
                ));
            }
        }
        for (k, v) in &df.entries {
            if let Some(cut) = cut {
                let w: u32 = k.args.iter().map(|&i| alg.weight(i)).sum();
                if w > cut {
                    continue;
                }
            }
            let i = *index
                .get(k)
                .ok_or_else(|| CalcError::Window("differential left the key block".into()))?;
            m.set(i, j, v.clone());
        }
    }
    Ok(m)
}

/// Cochain cohomology at one arity; graded algebras additionally fix the
/// weight gain and the argument-weight cut.
pub fn cochain_cohomology(
    alg: &Rc<Algebra>,
    arity: usize,
    gain: Option<i32>,
    cut: Option<u32>,
) -> Result<CochBlock, CalcError> {
    if alg.is_graded() {
        assert!(gain.is_some() && cut.is_some(), "graded blocks need a gain and a cut");
    } else {
        assert!(gain.is_none() && cut.is_none(), "ungraded blocks have no weight data");
    }
    let hom_at = |cut: Option<u32>| -> Result<(Vec<CochainKey>, Homology<Rat>), CalcError> {
        let keys = block_keys(alg, arity, gain, cut);
        let above = block_keys(alg, arity + 1, gain, cut);
        let below =
            if arity == 0 { vec![] } else { block_keys(alg, arity - 1, gain, cut) };
        let d_out = cochain_d_matrix(alg, &keys, arity, &above, cut)?;
        let d_in = if arity == 0 {
            SparseMat::zero(keys.len(), 0)
        } else {
            cochain_d_matrix(alg, &below, arity - 1, &keys, cut)?
        };
        let hom = Homology::compute(&d_out, &d_in).map_err(|e| {
            CalcError::Window(format!("cochain block ({arity}, {gain:?}, {cut:?}): {e}"))
        })?;
        Ok((keys, hom))
    };
    let (keys, hom) = hom_at(cut)?;
    let stable = match cut {
        None => true,
        Some(c) => hom_at(Some(c + 1))?.1.dim == hom.dim,
    };
    Ok(CochBlock { arity, gain, cut, keys, hom, stable })
}

impl CochBlock {
    /// The `k`-th cohomology representative as a cochain.
    pub fn rep(&self, k: usize) -> Cochain<Rat> {
        cochain_from_vec(self.arity, &self.keys, &self.hom.reps[k])
    }
}

/// A volume structure: the dimension, the strict cocycle, and its
/// u-degree-zero part.
pub struct CyStructure {
    pub alg: Rc<Algebra>,
    pub d: i32,
    pub eta: CycElem<Rat>,
    pub eta_hh: Chain<Rat>,
}

impl CyStructure {
    /// Validates exactly: the element is an honest `(b + uB)`-cocycle with
    /// u-coefficients of the matching arities; the zero cocycle is accepted
    /// (it is the canonical degenerate example).
    pub fn new(alg: &Rc<Algebra>, d: i32, eta: CycElem<Rat>) -> Result<Self, CalcError> {
        assert_eq!(eta.shift, 0, "volume cocycles live at shift zero");
        for (&p, c) in &eta.u {
            if c.is_zero() {
                continue;
            }
            let want = d + 2 * p;
            if want < 0 || c.arity() != Some(want as usize) {
                return Err(CalcError::Window(
                    "volume cocycle has a u-coefficient of the wrong arity".into(),
                ));
            }
            if alg.is_graded() && c.weight(alg).is_none() {
                return Err(CalcError::Window(
                    "volume cocycle is not weight homogeneous".into(),
                ));
            }
        }
        if !cyc_d(&Qq, alg, &eta)?.is_zero() {
            return Err(CalcError::Window("volume element is not a cocycle".into()));
        }
        let eta_hh = pi(&eta);
        Ok(CyStructure { alg: Rc::clone(alg), d, eta, eta_hh })
    }

    /// Weight of the volume class (graded algebras; zero for the unit).
    pub fn eta_weight(&self) -> u32 {
        self.eta_hh.weight(&self.alg).unwrap_or(0)
    }
}

/// Signed permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut used = vec![false; n];
    fn rec(
        n: usize,
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<(Vec<usize>, i64)>,
    ) {
        if cur.len() == n {
            let mut inv = 0i64;
            for i in 0..n {
                for j in i + 1..n {
                    if cur[i] > cur[j] {
                        inv += 1;
                    }
                }
            }
            out.push((cur.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// Chain-level antisymmetrization of the top form in the weight-one
/// generators: the signed sum of `(1; v_{s(1)}, ..., v_{s(n)})`.
pub fn volume_chain(alg: &Algebra) -> Chain<Rat> {
    let vars: Vec<u32> = (0..alg.dim() as u32).filter(|&i| alg.weight(i) == 1).collect();
    let mut c = Chain::zero(true);
    for (perm, sign) in permutations(vars.len()) {
        let rest: Vec<u32> = perm.iter().map(|&k| vars[k]).collect();
        c.add_term(&Qq, Tensor { b0: alg.unit as u32, rest }, rat(sign));
    }
    c
}

/// The standard structure on the catalog commutative algebras: the
/// antisymmetrized volume form is a strict cocycle with no higher u-terms.
pub fn catalog_cy(alg: &Rc<Algebra>) -> Result<CyStructure, CalcError> {
    let d = (0..alg.dim() as u32).filter(|&i| alg.weight(i) == 1).count() as i32;
    let eta = CycElem::from_chain(0, 0, volume_chain(alg));
    CyStructure::new(alg, d, eta)
}

/// One certified cap block: cochain cohomology in arity `d - p` against
/// chain homology in degree `p`, with the homology-level matrix of the
/// contraction into the volume class.
pub struct CapBlock {
    pub hh_degree: i32,
    pub weight: Option<u32>,
    pub src: CochBlock,
    pub tgt: HochBlock,
    pub mat: SparseMat<Rat>,
}

impl CapBlock {
    pub fn invertible(&self) -> bool {
        self.src.hom.dim == self.tgt.hom.dim && self.mat.rank() == self.src.hom.dim
    }

    /// Inverse of the cap matrix; `None` when singular.
    pub fn j_matrix(&self) -> Option<SparseMat<Rat>> {
        invert(&self.mat)
    }
}

pub fn invert(m: &SparseMat<Rat>) -> Option<SparseMat<Rat>> {
    if m.rows != m.cols || m.rank() != m.rows {
        return None;
    }
    let mut inv = SparseMat::zero(m.rows, m.rows);
    for j in 0..m.rows {
        let mut e = vec![rat(0); m.rows];
        e[j] = rat(1);
        match m.solve(&e) {
            SolveOutcome::Solution(x) => {
                for (i, v) in x.into_iter().enumerate() {
                    if !num_traits::Zero::is_zero(&v) {
                        inv.set(i, j, v);
                    }
                }
            }
            SolveOutcome::Inconsistent(_) => return None,
        }
    }
    Some(inv)
}

/// Chain-level matrix of `f -> i_f(eta)` from a cochain key block to a
/// tensor basis.
fn cap_chain_matrix(
    cy: &CyStructure,
    keys: &[CochainKey],
    arity: usize,
    tgt: &[Tensor],
) -> Result<SparseMat<Rat>, CalcError> {
    let index: BTreeMap<&Tensor, usize> = tgt.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut m = SparseMat::zero(tgt.len(), keys.len());
    for (j, key) in keys.iter().enumerate() {
        let f = cochain_from_vec(arity, std::slice::from_ref(key), &[rat(1)]);
        let c = contract(&Qq, &cy.alg, Gc::C(&f), &cy.eta_hh)?;
        for (t, v) in &c.terms {
            let i = *index
                .get(t)
                .ok_or_else(|| CalcError::Window("cap left the homology block".into()))?;
            m.set(i, j, v.clone());
        }
    }
    Ok(m)
}

/// Cap with the volume class as a map on homology: cochain arity
/// `d - hh_degree` (at the gain implied by the target weight) into chain
/// degree `hh_degree` at weight `w`.
pub fn cap_block(
    cy: &CyStructure,
    hh_degree: i32,
    w: Option<u32>,
    cut: Option<u32>,
) -> Result<CapBlock, CalcError> {
    let arity = cy.d - hh_degree;
    assert!((0..=cy.d).contains(&hh_degree), "cap blocks live in degrees 0..=d");
    let gain = match w {
        Some(w) => {
            let cut = cut.expect("graded cap blocks need a cut");
            assert!(cut >= cy.eta_weight(), "the cut must cover the volume weight");
            Some(w as i32 - cy.eta_weight() as i32)
        }
        None => None,
    };
    let src = cochain_cohomology(&cy.alg, arity as usize, gain, cut)?;
    if !src.stable {
        return Err(CalcError::Window(
            "cochain cohomology did not stabilize at this cut".into(),
        ));
    }
    let tgt = hochschild_block(&cy.alg, hh_degree, w)?;
    let f = cap_chain_matrix(cy, &src.keys, arity as usize, &tgt.space)?;
    let mat = Homology::induced(&f, &src.hom, &tgt.hom)
        .map_err(|e| CalcError::Window(format!("induced cap ({hh_degree}, {w:?}): {e}")))?;
    Ok(CapBlock { hh_degree, weight: w, src, tgt, mat })
}

/// Certify nondegeneracy over all degrees and the given target weights;
/// returns the first singular block as a witness otherwise.
pub fn is_nondegenerate(
    cy: &CyStructure,
    w_max: u32,
    cut: u32,
) -> Result<(bool, Option<(i32, u32)>), CalcError> {
    for p in 0..=cy.d {
        for w in 0..=w_max {
            let b = cap_block(cy, p, Some(w), Some(cut))?;
            if !b.invertible() {
                return Ok((false, Some((p, w))));
            }
        }
    }
    Ok((true, None))
}

/// A homology class in one (degree, weight) block, by coordinates in the
/// block's representative basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HhClass {
    pub degree: i32,
    pub weight: u32,
    pub coords: Vec<Rat>,
}

/// The transported product on Hochschild homology for one nondegenerate
/// structure: per-block cap matrices, their inverses, and the product
/// `a . b = i_{j(a) cup j(b)} (volume)`.
pub struct HhProduct {
    pub cy: CyStructure,
    pub w_max: u32,
    pub cut: u32,
    pub blocks: BTreeMap<(i32, u32), CapBlock>,
    inverses: BTreeMap<(i32, u32), SparseMat<Rat>>,
}

impl HhProduct {
    pub fn new(cy: CyStructure, w_max: u32, cut: u32) -> Result<Self, CalcError> {
        let mut blocks = BTreeMap::new();
        let mut inverses = BTreeMap::new();
        for p in 0..=cy.d {
            for w in 0..=w_max {
                let b = cap_block(&cy, p, Some(w), Some(cut))?;
                let inv = b.j_matrix().ok_or_else(|| {
                    CalcError::Window(format!("degenerate cap block ({p}, {w})"))
                })?;
                inverses.insert((p, w), inv);
                blocks.insert((p, w), b);
            }
        }
        Ok(HhProduct { cy, w_max, cut, blocks, inverses })
    }

    fn block(&self, p: i32, w: u32) -> Result<&CapBlock, CalcError> {
        self.blocks
            .get(&(p, w))
            .ok_or_else(|| CalcError::Window(format!("no block at degree {p} weight {w}")))
    }

    /// Class of a cycle given as a chain.
    pub fn class_of(&self, p: i32, w: u32, c: &Chain<Rat>) -> Result<HhClass, CalcError> {
        let b = self.block(p, w)?;
        let index: BTreeMap<&Tensor, usize> =
            b.tgt.space.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut v = vec![rat(0); b.tgt.space.len()];
        for (t, x) in &c.terms {
            let i = *index
                .get(t)
                .ok_or_else(|| CalcError::Window("chain lies outside the block".into()))?;
            v[i] = x.clone();
        }
        let coords = b
            .tgt
            .hom
            .project(&v)
            .map_err(|_| CalcError::Window("chain is not a cycle".into()))?;
        Ok(HhClass { degree: p, weight: w, coords })
    }

    /// The class of the volume form itself (the unit of the product).
    pub fn volume_class(&self) -> Result<HhClass, CalcError> {
        let c = self.cy.eta_hh.clone();
        self.class_of(self.cy.d, self.cy.eta_weight(), &c)
    }

    /// A cocycle cochain whose cap equals the given class.
    pub fn j_cochain(&self, a: &HhClass) -> Result<Cochain<Rat>, CalcError> {
        let b = self.block(a.degree, a.weight)?;
        let inv = &self.inverses[&(a.degree, a.weight)];
        let src_coords = inv.mul_dense(&a.coords);
        let mut v = vec![rat(0); b.src.keys.len()];
        for (k, c) in src_coords.iter().enumerate() {
            for (i, x) in b.src.hom.reps[k].iter().enumerate() {
                v[i] = &v[i] + &(c * x);
            }
        }
        Ok(cochain_from_vec(b.src.arity, &b.src.keys, &v))
    }

    /// Transported product `a . b = i_{j(a) cup j(b)} (volume)`. `None` is a
    /// certified zero: the product landed in an identically vanishing
    /// degree or weight. A target weight beyond the table is an error.
    pub fn dot(&self, a: &HhClass, b: &HhClass) -> Result<Option<HhClass>, CalcError> {
        let ja = self.j_cochain(a)?;
        let jb = self.j_cochain(b)?;
        let f = cup(&Qq, &self.cy.alg, &ja, &jb);
        let c = contract(&Qq, &self.cy.alg, Gc::C(&f), &self.cy.eta_hh)?;
        let p = a.degree + b.degree - self.cy.d;
        let w = (a.weight + b.weight) as i32 - self.cy.eta_weight() as i32;
        if p < 0 || w < 0 {
            assert!(c.is_zero(), "a vanishing-block product produced terms");
            return Ok(None);
        }
        if w as u32 > self.w_max {
            return Err(CalcError::Window("product weight is beyond the table".into()));
        }
        Ok(Some(self.class_of(p, w as u32, &c)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra;

    #[test]
    fn unit_structure_caps_identically() {
        let alg = algebra::rationals();
        let cy = catalog_cy(&alg).unwrap();
        assert_eq!(cy.d, 0);
        let b = cap_block(&cy, 0, Some(0), Some(0)).unwrap();
        assert_eq!((b.src.hom.dim, b.tgt.hom.dim), (1, 1));
        assert!(b.invertible());
        let (ok, witness) = is_nondegenerate(&cy, 0, 0).unwrap();
        assert!(ok && witness.is_none());
    }

    #[test]
    fn degenerate_zero_volume_is_detected() {
        let alg = algebra::rationals();
        let cy = CyStructure::new(&alg, 0, CycElem::zero(0, true)).unwrap();
        let (ok, witness) = is_nondegenerate(&cy, 0, 0).unwrap();
        assert!(!ok);
        assert_eq!(witness, Some((0, 0)));
    }

    #[test]
    fn line_volume_is_nondegenerate_per_weight() {
        let alg = algebra::polynomial(&["x"], 8);
        let cy = catalog_cy(&alg).unwrap();
        assert_eq!(cy.d, 1);
        assert_eq!(cy.eta_weight(), 1);
        let (ok, witness) = is_nondegenerate(&cy, 4, 4).unwrap();
        assert!(ok, "witness {witness:?}");
    }

    #[test]
    fn line_cap_blocks_are_one_dimensional() {
        let alg = algebra::polynomial(&["x"], 8);
        let cy = catalog_cy(&alg).unwrap();
        for w in 1..=4u32 {
            let b = cap_block(&cy, 1, Some(w), Some(4)).unwrap();
            assert_eq!((b.src.hom.dim, b.tgt.hom.dim), (1, 1), "weight {w}");
            let j = b.j_matrix().unwrap();
            assert_eq!(b.mat.matmul(&j), SparseMat::identity(1));
            assert_eq!(j.matmul(&b.mat), SparseMat::identity(1));
        }
    }

    #[test]
    fn scaled_volume_rescales_the_inverse() {
        let alg = algebra::polynomial(&["x"], 8);
        let cy = catalog_cy(&alg).unwrap();
        let eta2 = cy.eta.scale(&Qq, &rat(2));
        let cy2 = CyStructure::new(&alg, 1, eta2).unwrap();
        for w in [1u32, 3] {
            let b = cap_block(&cy, 1, Some(w), Some(4)).unwrap();
            let b2 = cap_block(&cy2, 1, Some(w), Some(4)).unwrap();
            assert!(b2.invertible());
            let j = b.j_matrix().unwrap();
            let j2 = b2.j_matrix().unwrap();
            // cap doubles, so j halves.
            for i in 0..j.rows {
                for k in 0..j.cols {
                    assert_eq!(j.get(i, k), rat(2) * j2.get(i, k));
                }
            }
        }
    }

    #[test]
    fn transported_product_has_the_volume_class_as_unit() {
        let alg = algebra::polynomial(&["x"], 8);
        let prod = HhProduct::new(catalog_cy(&alg).unwrap(), 4, 4).unwrap();
        let unit = prod.volume_class().unwrap();
        for (p, w) in [(0i32, 0u32), (0, 2), (1, 1), (1, 3)] {
            let dim = prod.block(p, w).unwrap().tgt.hom.dim;
            for k in 0..dim {
                let mut coords = vec![rat(0); dim];
                coords[k] = rat(1);
                let a = HhClass { degree: p, weight: w, coords };
                let left = prod.dot(&unit, &a).unwrap().unwrap();
                let right = prod.dot(&a, &unit).unwrap().unwrap();
                assert_eq!(left, a, "unit on the left at ({p}, {w})");
                assert_eq!(right, a, "unit on the right at ({p}, {w})");
            }
        }
    }

    #[test]
    fn transported_product_is_associative_on_the_line() {
        let alg = algebra::polynomial(&["x"], 8);
        let prod = HhProduct::new(catalog_cy(&alg).unwrap(), 4, 4).unwrap();
        let cls = |p: i32, w: u32| -> HhClass {
            let b = prod.block(p, w).unwrap();
            assert_eq!(b.tgt.hom.dim, 1);
            HhClass { degree: p, weight: w, coords: vec![rat(1)] }
        };
        let triples = [
            (cls(1, 1), cls(1, 2), cls(0, 1)),
            (cls(1, 1), cls(1, 1), cls(1, 2)),
            (cls(0, 2), cls(1, 1), cls(1, 1)),
        ];
        for (a, b, c) in triples {
            let ab = prod.dot(&a, &b).unwrap().unwrap();
            let bc = prod.dot(&b, &c).unwrap().unwrap();
            let left = prod.dot(&ab, &c).unwrap().unwrap();
            let right = prod.dot(&a, &bc).unwrap().unwrap();
            assert_eq!(left, right);
        }
        // Degree-0 against degree-0 lands below the window: certified zero.
        assert!(prod.dot(&cls(0, 1), &cls(0, 2)).unwrap().is_none());
    }

    #[test]
    fn transported_product_commutes_with_the_arity_sign() {
        let alg = algebra::polynomial(&["x"], 8);
        let prod = HhProduct::new(catalog_cy(&alg).unwrap(), 4, 4).unwrap();
        let one = |p: i32, w: u32| HhClass { degree: p, weight: w, coords: vec![rat(1)] };
        for (a, b) in [(one(0, 1), one(1, 1)), (one(0, 2), one(1, 1)), (one(1, 1), one(1, 2))] {
            let ab = prod.dot(&a, &b).unwrap().unwrap();
            let ba = prod.dot(&b, &a).unwrap().unwrap();
            let sign = ((prod.cy.d - a.degree) * (prod.cy.d - b.degree)) % 2 == 0;
            let expect = if sign {
                ba.coords.clone()
            } else {
                ba.coords.iter().map(|x| -x).collect()
            };
            assert_eq!(ab.coords, expect);
        }
    }

    #[test]
    fn plane_volume_is_nondegenerate_on_low_weights() {
        let alg = algebra::polynomial(&["x", "y"], 6);
        let cy = catalog_cy(&alg).unwrap();
        assert_eq!(cy.d, 2);
        let (ok, witness) = is_nondegenerate(&cy, 3, 3).unwrap();
        assert!(ok, "witness {witness:?}");
    }
}

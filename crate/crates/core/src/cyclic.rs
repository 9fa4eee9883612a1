//! Negative, ordinary, and periodic cyclic complexes on finite windows.
//!
//! A window stores the algebra, the kept u-power range, and the mode; every
//! homology block is computed per (degree, weight) by exact linear algebra
//! and carries an empirical stabilization flag obtained by recomputing with
//! the window enlarged by one in every truncated direction. A pair `(p, t)`
//! of a u-power and a tensor of arity `n` sits in homological degree
//! `n - 2p`, so weight-graded blocks are finite dimensional on the nose and
//! the flag records that the cutoff was already immaterial.

use std::collections::BTreeMap;
use std::rc::Rc;

use serde::Serialize;

use crate::algebra::{Algebra, Tensor};
use crate::calculus::ops::{connes_b, hoch_b};
use crate::calculus::{CalcError, Chain, CycElem};
use crate::exactla::{Homology, Qq, SparseMat};
use crate::Rat;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CycMode {
    Negative,
    Ordinary,
    Periodic,
}

/// A truncated cyclic complex. `u_top` bounds the kept nonnegative u-powers
/// (negative and periodic modes); `p_depth` bounds the kept negative powers
/// (ordinary and periodic modes).
pub struct CyclicWindow {
    pub alg: Rc<Algebra>,
    pub mode: CycMode,
    pub u_top: i32,
    pub p_depth: i32,
}

/// One homology block with its basis bookkeeping.
pub struct CyclicBlock {
    pub degree: i32,
    pub weight: Option<u32>,
    pub space: Vec<(i32, Tensor)>,
    pub hom: Homology<Rat>,
    pub stable: bool,
}

/// A Hochschild chain homology block at one (arity, weight).
pub struct HochBlock {
    pub degree: i32,
    pub weight: Option<u32>,
    pub space: Vec<Tensor>,
    pub hom: Homology<Rat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BettiEntry {
    pub degree: i32,
    pub weight: Option<u32>,
    pub dim: usize,
    pub stable: bool,
}

fn tensors_at(alg: &Algebra, n: usize, w: Option<u32>) -> Vec<Tensor> {
    match w {
        Some(w) => alg.normalized_tensors(n, w),
        None => alg.normalized_tensors_finite(n),
    }
}

fn lin_err(what: &str, e: crate::exactla::LinearError) -> CalcError {
    CalcError::Window(format!("{what}: {e}"))
}

/// Matrix of the Hochschild boundary from arity `n` to arity `n - 1` at one
/// weight, over the listed tensor bases.
pub fn hoch_b_matrix(
    alg: &Rc<Algebra>,
    src: &[Tensor],
    tgt: &[Tensor],
) -> Result<SparseMat<Rat>, CalcError> {
    let index: BTreeMap<&Tensor, usize> = tgt.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut m = SparseMat::zero(tgt.len(), src.len());
    for (j, t) in src.iter().enumerate() {
        let bc = hoch_b(&Qq, alg, &Chain::single(&Qq, true, t.clone()))?;
        for (tt, v) in &bc.terms {
            let i = *index
                .get(tt)
                .ok_or_else(|| CalcError::Window("boundary left the block".into()))?;
            m.set(i, j, v.clone());
        }
    }
    Ok(m)
}

/// Hochschild homology of the normalized chain complex at one
/// (degree, weight) block, by exact kernel-mod-image computation.
pub fn hochschild_block(
    alg: &Rc<Algebra>,
    degree: i32,
    weight: Option<u32>,
) -> Result<HochBlock, CalcError> {
    if degree < 0 {
        return Ok(HochBlock {
            degree,
            weight,
            space: vec![],
            hom: Homology::compute(&SparseMat::zero(0, 0), &SparseMat::zero(0, 0))
                .map_err(|e| lin_err("empty block", e))?,
        });
    }
    let space = tensors_at(alg, degree as usize, weight);
    let below = if degree == 0 { vec![] } else { tensors_at(alg, degree as usize - 1, weight) };
    let above = tensors_at(alg, degree as usize + 1, weight);
    let d_out = hoch_b_matrix(alg, &space, &below)?;
    let d_in = hoch_b_matrix(alg, &above, &space)?;
    let hom = Homology::compute(&d_out, &d_in)
        .map_err(|e| lin_err(&format!("Hochschild block ({degree}, {weight:?})"), e))?;
    Ok(HochBlock { degree, weight, space, hom })
}

impl CyclicWindow {
    pub fn new(alg: &Rc<Algebra>, mode: CycMode, u_top: i32, p_depth: i32) -> Self {
        assert!(u_top >= 0 && p_depth >= 0);
        CyclicWindow { alg: Rc::clone(alg), mode, u_top, p_depth }
    }

    /// Kept u-power range, enlarged by `extra` in each truncated direction.
    fn bounds(&self, extra: i32) -> (i32, i32) {
        match self.mode {
            CycMode::Negative => (0, self.u_top + extra),
            CycMode::Ordinary => (-(self.p_depth + extra), 0),
            CycMode::Periodic => (-(self.p_depth + extra), self.u_top + extra),
        }
    }

    /// Basis of the degree-`i` piece: pairs `(p, tensor)` with the tensor
    /// arity equal to `i + 2p`.
    pub fn space(&self, i: i32, w: Option<u32>, extra: i32) -> Vec<(i32, Tensor)> {
        let (pmin, pmax) = self.bounds(extra);
        let mut out = Vec::new();
        for p in pmin..=pmax {
            let n = i + 2 * p;
            if n < 0 {
                continue;
            }
            for t in tensors_at(&self.alg, n as usize, w) {
                out.push((p, t));
            }
        }
        out
    }

    /// Matrix of `b + uB` from degree `i` to degree `i - 1`; u-powers pushed
    /// past the kept range are dropped, which is the window quotient.
    pub fn d_matrix(
        &self,
        i: i32,
        w: Option<u32>,
        extra: i32,
    ) -> Result<SparseMat<Rat>, CalcError> {
        let src = self.space(i, w, extra);
        let tgt = self.space(i - 1, w, extra);
        let index: BTreeMap<&(i32, Tensor), usize> =
            tgt.iter().enumerate().map(|(k, v)| (v, k)).collect();
        let (_, pmax) = self.bounds(extra);
        let mut m = SparseMat::zero(tgt.len(), src.len());
        for (j, (p, t)) in src.iter().enumerate() {
            let c = Chain::single(&Qq, true, t.clone());
            let bc = hoch_b(&Qq, &self.alg, &c)?;
            for (tt, v) in &bc.terms {
                let k = *index
                    .get(&(*p, tt.clone()))
                    .ok_or_else(|| CalcError::Window("boundary left the block".into()))?;
                m.set(k, j, v.clone());
            }
            if *p + 1 <= pmax {
                let bb = connes_b(&Qq, &self.alg, &c);
                for (tt, v) in &bb.terms {
                    let k = *index
                        .get(&(*p + 1, tt.clone()))
                        .ok_or_else(|| CalcError::Window("boundary left the block".into()))?;
                    m.set(k, j, v.clone());
                }
            }
        }
        Ok(m)
    }

    /// Exact homology of the window at one (degree, weight), with the
    /// stabilization flag from recomputing on the enlarged window.
    pub fn homology(&self, i: i32, w: Option<u32>) -> Result<CyclicBlock, CalcError> {
        let hom = self.block_hom(i, w, 0)?;
        let bigger = self.block_hom(i, w, 1)?;
        let stable = hom.dim == bigger.dim;
        Ok(CyclicBlock { degree: i, weight: w, space: self.space(i, w, 0), hom, stable })
    }

    fn block_hom(&self, i: i32, w: Option<u32>, extra: i32) -> Result<Homology<Rat>, CalcError> {
        let d_out = self.d_matrix(i, w, extra)?;
        let d_in = self.d_matrix(i + 1, w, extra)?;
        Homology::compute(&d_out, &d_in)
            .map_err(|e| lin_err(&format!("cyclic block ({i}, {w:?})"), e))
    }

    pub fn betti_entry(&self, i: i32, w: Option<u32>) -> Result<BettiEntry, CalcError> {
        let b = self.homology(i, w)?;
        Ok(BettiEntry { degree: i, weight: w, dim: b.hom.dim, stable: b.stable })
    }

    /// Chain-level check that multiplication by u maps the window with one
    /// fewer kept u-power injectively into this window and commutes with the
    /// differential. On homology u genuinely has a kernel (u-torsion), so
    /// the faithfulness of the truncation is a statement about chains.
    pub fn u_injective(&self, i: i32, w: Option<u32>) -> Result<bool, CalcError> {
        assert!(
            !matches!(self.mode, CycMode::Ordinary),
            "the ordinary window truncates away the top u-power"
        );
        let small = CyclicWindow {
            alg: Rc::clone(&self.alg),
            mode: self.mode,
            u_top: self.u_top - 1,
            p_depth: self.p_depth,
        };
        let u_mat = |deg: i32| -> Result<SparseMat<Rat>, CalcError> {
            let src_space = small.space(deg, w, 0);
            let tgt_space = self.space(deg - 2, w, 0);
            let index: BTreeMap<&(i32, Tensor), usize> =
                tgt_space.iter().enumerate().map(|(k, v)| (v, k)).collect();
            let mut f = SparseMat::zero(tgt_space.len(), src_space.len());
            for (j, (p, t)) in src_space.iter().enumerate() {
                let k = *index
                    .get(&(*p + 1, t.clone()))
                    .ok_or_else(|| CalcError::Window("u pushed a basis element out".into()))?;
                f.set(k, j, crate::rat(1));
            }
            Ok(f)
        };
        let f_here = u_mat(i)?;
        let f_below = u_mat(i - 1)?;
        let injective = f_here.rank() == f_here.cols;
        let chain_map = crate::exactla::verify_chain_map(
            &f_here,
            &f_below,
            &small.d_matrix(i, w, 0)?,
            &self.d_matrix(i - 2, w, 0)?,
        );
        Ok(injective && chain_map)
    }
}

impl CyclicBlock {
    /// The `k`-th representative as a cyclic element (shift 0).
    pub fn rep(&self, k: usize) -> CycElem<Rat> {
        elem_from_vec(&self.space, &self.hom.reps[k])
    }

    /// Dense coordinates of a window-supported element.
    pub fn vec_of(&self, e: &CycElem<Rat>) -> Result<Vec<Rat>, CalcError> {
        vec_from_elem(&self.space, e)
    }
}

pub fn elem_from_vec(space: &[(i32, Tensor)], v: &[Rat]) -> CycElem<Rat> {
    let mut e = CycElem::zero(0, true);
    for ((p, t), c) in space.iter().zip(v) {
        if num_traits::Zero::is_zero(c) {
            continue;
        }
        let mut ch = e.coeff(*p).cloned().unwrap_or_else(|| Chain::zero(true));
        ch.add_term(&Qq, t.clone(), c.clone());
        e.set_coeff(*p, ch);
    }
    e
}

pub fn vec_from_elem(space: &[(i32, Tensor)], e: &CycElem<Rat>) -> Result<Vec<Rat>, CalcError> {
    assert_eq!(e.shift, 0, "cyclic window elements live at shift zero");
    let index: BTreeMap<&(i32, Tensor), usize> =
        space.iter().enumerate().map(|(k, v)| (v, k)).collect();
    let mut out = vec![crate::rat(0); space.len()];
    for (&p, c) in &e.u {
        for (t, v) in &c.terms {
            match index.get(&(p, t.clone())) {
                Some(&k) => out[k] = v.clone(),
                None => {
                    return Err(CalcError::Window(
                        "element is supported outside the window block".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}

/// The u-degree-zero projection onto Hochschild chains.
pub fn pi(e: &CycElem<Rat>) -> Chain<Rat> {
    e.coeff(0).cloned().unwrap_or_else(|| Chain::zero(e.normalized))
}

/// Matrix of the projection from a cyclic degree block onto the Hochschild
/// block of the same degree, on the chosen bases.
pub fn pi_matrix(src_space: &[(i32, Tensor)], tgt_space: &[Tensor]) -> SparseMat<Rat> {
    let index: BTreeMap<&Tensor, usize> =
        tgt_space.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut m = SparseMat::zero(tgt_space.len(), src_space.len());
    for (j, (p, t)) in src_space.iter().enumerate() {
        if *p == 0 {
            if let Some(&i) = index.get(t) {
                m.set(i, j, crate::rat(1));
            }
        }
    }
    m
}

/// Whether the projection induces an isomorphism from the negative cyclic
/// block in degree `i` onto Hochschild homology in the same degree.
pub fn pi_iso(win: &CyclicWindow, i: i32, w: Option<u32>) -> Result<bool, CalcError> {
    assert!(matches!(win.mode, CycMode::Negative), "projection lives on the negative window");
    let cyc = win.homology(i, w)?;
    let hh = hochschild_block(&win.alg, i, w)?;
    let f = pi_matrix(&cyc.space, &hh.space);
    let m = Homology::induced(&f, &cyc.hom, &hh.hom).map_err(|e| lin_err("induced projection", e))?;
    Ok(cyc.stable && cyc.hom.dim == hh.hom.dim && m.rank() == hh.hom.dim)
}

/// The map induced by the inclusion of the negative window into the periodic
/// one, in degree `i`; returns (matrix, source block, target block).
pub fn neg_to_periodic(
    neg: &CyclicWindow,
    per: &CyclicWindow,
    i: i32,
    w: Option<u32>,
) -> Result<(SparseMat<Rat>, CyclicBlock, CyclicBlock), CalcError> {
    assert!(matches!(neg.mode, CycMode::Negative) && matches!(per.mode, CycMode::Periodic));
    let src = neg.homology(i, w)?;
    let tgt = per.homology(i, w)?;
    let index: BTreeMap<&(i32, Tensor), usize> =
        tgt.space.iter().enumerate().map(|(k, v)| (v, k)).collect();
    let mut f = SparseMat::zero(tgt.space.len(), src.space.len());
    for (j, key) in src.space.iter().enumerate() {
        let k = *index
            .get(key)
            .ok_or_else(|| CalcError::Window("negative window exceeds the periodic one".into()))?;
        f.set(k, j, crate::rat(1));
    }
    let m = Homology::induced(&f, &src.hom, &tgt.hom).map_err(|e| lin_err("induced inclusion", e))?;
    Ok((m, src, tgt))
}

/// Whether the negative-to-periodic comparison is an isomorphism in degree
/// `i` at one weight, requiring both stabilization flags.
pub fn neg_periodic_iso(
    neg: &CyclicWindow,
    per: &CyclicWindow,
    i: i32,
    w: Option<u32>,
) -> Result<bool, CalcError> {
    let (m, src, tgt) = neg_to_periodic(neg, per, i, w)?;
    Ok(src.stable && tgt.stable && src.hom.dim == tgt.hom.dim && m.rank() == src.hom.dim)
}

/// Certified zero-test of a negative-cyclic cycle in the periodic window:
/// the bounding-element solve must agree between the window and its
/// enlargement, otherwise the caller is told to enlarge the truncation.
pub fn is_zero_in_periodic(
    per: &CyclicWindow,
    i: i32,
    w: Option<u32>,
    e: &CycElem<Rat>,
) -> Result<bool, CalcError> {
    assert!(matches!(per.mode, CycMode::Periodic));
    let answer_at = |extra: i32| -> Result<bool, CalcError> {
        let space = per.space(i, w, extra);
        let d_out = per.d_matrix(i, w, extra)?;
        let d_in = per.d_matrix(i + 1, w, extra)?;
        let hom = Homology::compute(&d_out, &d_in).map_err(|e| lin_err("periodic block", e))?;
        let v = vec_from_elem(&space, e)?;
        hom.is_boundary(&v)
            .map_err(|_| CalcError::Window("element is not a cycle in the periodic window".into()))
    };
    let a0 = answer_at(0)?;
    let a1 = answer_at(1)?;
    if a0 != a1 {
        return Err(CalcError::Window(
            "periodic zero-test did not stabilize; increase the u window".into(),
        ));
    }
    Ok(a0)
}

/// Class coordinates of a negative-cyclic cycle inside the periodic block.
pub fn to_periodic(
    per: &CyclicWindow,
    i: i32,
    w: Option<u32>,
    e: &CycElem<Rat>,
) -> Result<Vec<Rat>, CalcError> {
    assert!(matches!(per.mode, CycMode::Periodic));
    let block = per.homology(i, w)?;
    if !block.stable {
        return Err(CalcError::Window(
            "periodic block did not stabilize; increase the u window".into(),
        ));
    }
    let v = block.vec_of(e)?;
    block
        .hom
        .project(&v)
        .map_err(|_| CalcError::Window("element is not a cycle in the periodic window".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra;

    #[test]
    fn rationals_negative_cyclic_is_a_power_series_line() {
        let alg = algebra::rationals();
        let win = CyclicWindow::new(&alg, CycMode::Negative, 3, 0);
        for i in -5..=2 {
            let b = win.homology(i, Some(0)).unwrap();
            let want = if i <= 0 && i % 2 == 0 { 1 } else { 0 };
            assert_eq!(b.hom.dim, want, "degree {i}");
            assert!(b.stable, "degree {i}");
        }
    }

    #[test]
    fn ordinary_mode_vanishes_in_negative_degrees() {
        let alg = algebra::polynomial(&["x"], 4);
        let win = CyclicWindow::new(&alg, CycMode::Ordinary, 0, 3);
        for i in -3..=-1 {
            for w in 0..=3u32 {
                let b = win.homology(i, Some(w)).unwrap();
                assert_eq!(b.hom.dim, 0, "degree {i} weight {w}");
            }
        }
    }

    #[test]
    fn polynomial_line_negative_cyclic_dimensions() {
        let alg = algebra::polynomial(&["x"], 4);
        let win = CyclicWindow::new(&alg, CycMode::Negative, 3, 0);
        for w in 0..=4u32 {
            for i in -2..=3 {
                let b = win.homology(i, Some(w)).unwrap();
                let want = match (i, w) {
                    (1, w) if w >= 1 => 1,
                    (0, 0) => 1,
                    (-2, 0) => 1,
                    _ => 0,
                };
                assert_eq!(b.hom.dim, want, "degree {i} weight {w}");
                assert!(b.stable, "degree {i} weight {w}");
            }
        }
    }

    #[test]
    fn hochschild_blocks_match_the_smooth_line_picture() {
        let alg = algebra::polynomial(&["x"], 4);
        for w in 0..=4u32 {
            for i in 0..=2 {
                let b = hochschild_block(&alg, i, Some(w)).unwrap();
                let want = match (i, w) {
                    (0, _) => 1,
                    (1, w) if w >= 1 => 1,
                    _ => 0,
                };
                assert_eq!(b.hom.dim, want, "degree {i} weight {w}");
            }
        }
    }

    #[test]
    fn projection_induces_iso_in_top_degree_for_the_line() {
        let alg = algebra::polynomial(&["x"], 4);
        let win = CyclicWindow::new(&alg, CycMode::Negative, 3, 0);
        for w in 1..=4u32 {
            assert!(pi_iso(&win, 1, Some(w)).unwrap(), "weight {w}");
        }
    }

    #[test]
    fn u_multiplication_is_injective_on_the_line_window() {
        let alg = algebra::polynomial(&["x"], 4);
        let win = CyclicWindow::new(&alg, CycMode::Negative, 3, 0);
        for w in 0..=3u32 {
            for i in 0..=1 {
                assert!(win.u_injective(i, Some(w)).unwrap(), "degree {i} weight {w}");
            }
        }
    }

    #[test]
    fn negative_and_periodic_agree_in_nonpositive_degrees() {
        for alg in [algebra::polynomial(&["x"], 4), algebra::truncated_power(2)] {
            let neg = CyclicWindow::new(&alg, CycMode::Negative, 3, 0);
            let per = CyclicWindow::new(&alg, CycMode::Periodic, 3, 3);
            for w in 0..=3u32 {
                for i in [-2, -1, 0] {
                    assert!(
                        neg_periodic_iso(&neg, &per, i, Some(w)).unwrap(),
                        "{} degree {i} weight {w}",
                        alg.name
                    );
                }
            }
        }
    }

    #[test]
    fn projection_drops_positive_u_powers() {
        let alg = algebra::truncated_power(2);
        let t = alg.normalized_tensors(1, 2)[0].clone();
        let c = Chain::single(&Qq, true, t);
        let e = CycElem::from_chain(0, 1, c.clone());
        assert!(pi(&e).is_zero());
        let mut e2 = CycElem::from_chain(0, 0, c.clone());
        e2.set_coeff(1, c.clone());
        assert_eq!(pi(&e2), c);
    }

    #[test]
    fn periodic_zero_test_certifies_boundaries() {
        let alg = algebra::truncated_power(2);
        let per = CyclicWindow::new(&alg, CycMode::Periodic, 3, 3);
        let neg = CyclicWindow::new(&alg, CycMode::Negative, 3, 0);
        // Weight-2 degree-0 classes of the dual numbers: compare the
        // negative-window class with its image in the periodic window.
        let b = neg.homology(0, Some(2)).unwrap();
        assert!(b.stable);
        for k in 0..b.hom.dim {
            let rep = b.rep(k);
            let z = is_zero_in_periodic(&per, 0, Some(2), &rep).unwrap();
            let coords = to_periodic(&per, 0, Some(2), &rep).unwrap();
            assert_eq!(z, coords.iter().all(num_traits::Zero::is_zero));
        }
    }
}

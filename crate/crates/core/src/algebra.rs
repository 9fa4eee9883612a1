//! Finite-dimensional and weight-graded algebras presented by structure
//! constants, together with enumeration of the tensor bases used by the
//! Hochschild complexes.
//!
//! A `graded_connected` algebra has a one-dimensional weight-zero component
//! spanned by the unit; interior factors of normalized tensors then have
//! weight at least one, so every fixed-weight block of the normalized chain
//! complex is finite. A *complete* graded algebra stores all of itself (for
//! example `Q[x]/(x^n)`); an incomplete one is a weight window of an
//! infinite algebra and products beyond the window are truncation errors,
//! never silently zero.

use std::collections::BTreeMap;
use std::rc::Rc;

use num_traits::Zero;

use crate::exactla::{fmt_rat, parse_rat, CoeffRing};
use crate::{rat, Rat};

#[derive(Debug, Clone, PartialEq)]
pub enum AlgKind {
    GradedConnected { complete: bool, weight_bound: u32 },
    Finite { arity_bound: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisElt {
    pub name: String,
    pub weight: u32,
    /// Multidegree used to split complexes into blocks; defaults to
    /// `[weight]`. Summed componentwise over tensor factors.
    pub multi: Vec<i32>,
}

#[derive(Debug, thiserror::Error)]
pub enum AlgError {
    #[error("product of basis elements {0} and {1} exceeds the stored weight window")]
    Truncation(usize, usize),
    #[error("invalid algebra: {0}")]
    Invalid(String),
}

/// Structure constants of an associative unital algebra over the rationals.
#[derive(Debug, Clone)]
pub struct Algebra {
    pub name: String,
    pub kind: AlgKind,
    pub basis: Vec<BasisElt>,
    pub unit: usize,
    /// `mult[i][j]`: `None` means the product overflows the stored window.
    mult: Vec<Vec<Option<Vec<(usize, Rat)>>>>,
    /// For each basis index `k`, the pairs `(i, j, c)` with
    /// `e_i e_j = ... + c e_k + ...`.
    rev: Vec<Vec<(usize, usize, Rat)>>,
    /// Basis indices other than the unit, in increasing order.
    pub nonunit: Vec<usize>,
}

/// A basis tensor `b0 (x) t1 (x) ... (x) tn` of the chain complex; interior
/// slots index into the non-unit basis for normalized tensors, or the whole
/// basis for unnormalized ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tensor {
    pub b0: u32,
    pub rest: Vec<u32>,
}

impl Tensor {
    pub fn arity(&self) -> usize {
        self.rest.len()
    }
}

/// Sparse vector over the algebra basis.
pub type Sv<E> = BTreeMap<u32, E>;

pub fn sv_add<K: CoeffRing>(ring: &K, dst: &mut Sv<K::El>, idx: u32, v: K::El) {
    if ring.is_zero(&v) {
        return;
    }
    match dst.remove(&idx) {
        None => {
            dst.insert(idx, v);
        }
        Some(old) => {
            let s = ring.add(&old, &v);
            if !ring.is_zero(&s) {
                dst.insert(idx, s);
            }
        }
    }
}

pub fn sv_axpy<K: CoeffRing>(ring: &K, dst: &mut Sv<K::El>, c: &K::El, src: &Sv<K::El>) {
    for (&i, v) in src {
        sv_add::<K>(ring, dst, i, ring.mul(c, v));
    }
}

pub fn sv_scale<K: CoeffRing>(ring: &K, c: &K::El, src: &Sv<K::El>) -> Sv<K::El> {
    let mut out = Sv::new();
    sv_axpy::<K>(ring, &mut out, c, src);
    out
}

impl Algebra {
    fn build(
        name: String,
        kind: AlgKind,
        basis: Vec<BasisElt>,
        unit: usize,
        table: Vec<Vec<Option<Vec<(usize, Rat)>>>>,
    ) -> Result<Rc<Algebra>, AlgError> {
        let dim = basis.len();
        if unit >= dim {
            return Err(AlgError::Invalid("unit index out of range".into()));
        }
        let mut rev = vec![Vec::new(); dim];
        for i in 0..dim {
            for j in 0..dim {
                if let Some(terms) = &table[i][j] {
                    for (k, c) in terms {
                        rev[*k].push((i, j, c.clone()));
                    }
                }
            }
        }
        let nonunit = (0..dim).filter(|&i| i != unit).collect();
        let alg = Algebra { name, kind, basis, unit, mult: table, rev, nonunit };
        alg.validate()?;
        Ok(Rc::new(alg))
    }

    fn validate(&self) -> Result<(), AlgError> {
        let dim = self.basis.len();
        let err = |m: String| Err(AlgError::Invalid(m));
        // Unit acts as identity wherever products are stored.
        for i in 0..dim {
            for (a, b, other) in [(self.unit, i, i), (i, self.unit, i)] {
                match &self.mult[a][b] {
                    None => return err(format!("unit product with {other} is truncated")),
                    Some(t) => {
                        if t.as_slice() != [(other, rat(1))] {
                            return err(format!("unit does not act as identity on {other}"));
                        }
                    }
                }
            }
        }
        if let AlgKind::GradedConnected { complete, weight_bound } = &self.kind {
            if self.basis[self.unit].weight != 0 {
                return err("unit must have weight zero".into());
            }
            for (i, b) in self.basis.iter().enumerate() {
                if b.weight == 0 && i != self.unit {
                    return err("weight-zero component must be spanned by the unit".into());
                }
                if b.weight > *weight_bound {
                    return err(format!("basis element {} exceeds the weight bound", b.name));
                }
                if b.multi.len() != self.basis[0].multi.len() {
                    return err("multidegrees must have a common length".into());
                }
            }
            for i in 0..dim {
                for j in 0..dim {
                    let w = self.basis[i].weight + self.basis[j].weight;
                    match &self.mult[i][j] {
                        None => {
                            if *complete {
                                return err("complete algebra has a truncated product".into());
                            }
                            if w <= *weight_bound {
                                return err(format!(
                                    "product {}*{} is inside the window but truncated",
                                    self.basis[i].name, self.basis[j].name
                                ));
                            }
                        }
                        Some(terms) => {
                            for (k, _) in terms {
                                if self.basis[*k].weight != w {
                                    return err(format!(
                                        "product {}*{} is not weight-additive",
                                        self.basis[i].name, self.basis[j].name
                                    ));
                                }
                                let want: Vec<i32> = self.basis[i]
                                    .multi
                                    .iter()
                                    .zip(&self.basis[j].multi)
                                    .map(|(a, b)| a + b)
                                    .collect();
                                if self.basis[*k].multi != want {
                                    return err(format!(
                                        "product {}*{} is not multidegree-additive",
                                        self.basis[i].name, self.basis[j].name
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        // Associativity wherever all intermediate products are stored.
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let lhs = self.assoc_side(i, j, k, true);
                    let rhs = self.assoc_side(i, j, k, false);
                    if let (Some(l), Some(r)) = (lhs, rhs) {
                        if l != r {
                            return err(format!("not associative at ({i},{j},{k})"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn assoc_side(&self, i: usize, j: usize, k: usize, left: bool) -> Option<Vec<Rat>> {
        let dim = self.basis.len();
        let mut acc = vec![rat(0); dim];
        let first = if left { self.mult[i][j].as_ref()? } else { self.mult[j][k].as_ref()? };
        for (p, c) in first {
            let second = if left { self.mult[*p][k].as_ref()? } else { self.mult[i][*p].as_ref()? };
            for (q, e) in second {
                acc[*q] += c.clone() * e.clone();
            }
        }
        Some(acc)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn weight(&self, i: u32) -> u32 {
        self.basis[i as usize].weight
    }

    pub fn multi(&self, i: u32) -> &[i32] {
        &self.basis[i as usize].multi
    }

    pub fn is_graded(&self) -> bool {
        matches!(self.kind, AlgKind::GradedConnected { .. })
    }

    pub fn weight_bound(&self) -> Option<u32> {
        match self.kind {
            AlgKind::GradedConnected { weight_bound, .. } => Some(weight_bound),
            AlgKind::Finite { .. } => None,
        }
    }

    pub fn is_complete(&self) -> bool {
        match self.kind {
            AlgKind::GradedConnected { complete, .. } => complete,
            AlgKind::Finite { .. } => true,
        }
    }

    /// Structure constants of `e_i e_j`, or a truncation error.
    pub fn mul_basis(&self, i: u32, j: u32) -> Result<&[(usize, Rat)], AlgError> {
        self.mult[i as usize][j as usize]
            .as_deref()
            .ok_or(AlgError::Truncation(i as usize, j as usize))
    }

    /// All `(i, j, c)` with `e_i e_j` containing `c e_k`.
    pub fn rev_mul(&self, k: u32) -> &[(usize, usize, Rat)] {
        &self.rev[k as usize]
    }

    /// Product of sparse vectors.
    pub fn mul_sv<K: CoeffRing>(&self, ring: &K, a: &Sv<K::El>, b: &Sv<K::El>) -> Result<Sv<K::El>, AlgError> {
        let mut out = Sv::new();
        for (&i, x) in a {
            for (&j, y) in b {
                let c = ring.mul(x, y);
                if ring.is_zero(&c) {
                    continue;
                }
                for (k, coef) in self.mul_basis(i, j)? {
                    sv_add::<K>(ring, &mut out, *k as u32, ring.scale(coef, &c));
                }
            }
        }
        Ok(out)
    }

    pub fn unit_sv<K: CoeffRing>(&self, ring: &K) -> Sv<K::El> {
        let mut out = Sv::new();
        out.insert(self.unit as u32, ring.one());
        out
    }

    /// Project a sparse vector onto the span of the non-unit basis.
    pub fn project_nonunit<K: CoeffRing>(&self, v: &Sv<K::El>) -> Sv<K::El> {
        let mut out = v.clone();
        out.remove(&(self.unit as u32));
        out
    }

    pub fn fmt_sv(&self, v: &Sv<Rat>) -> String {
        if v.is_empty() {
            return "0".to_string();
        }
        v.iter()
            .map(|(&i, c)| format!("{}*{}", fmt_rat(c), self.basis[i as usize].name))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Normalized basis tensors of the given arity and total weight
    /// (graded algebras only). Interior slots have weight at least one, so
    /// the result is empty unless `arity <= weight`.
    pub fn normalized_tensors(&self, arity: usize, weight: u32) -> Vec<Tensor> {
        assert!(self.is_graded(), "weight enumeration requires a graded algebra");
        let mut out = Vec::new();
        for b0 in 0..self.dim() {
            let w0 = self.basis[b0].weight;
            if w0 > weight {
                continue;
            }
            let mut rest = Vec::new();
            self.fill_interior(arity, weight - w0, &mut rest, &mut |rest| {
                out.push(Tensor { b0: b0 as u32, rest: rest.to_vec() });
            });
        }
        out.sort();
        out
    }

    fn fill_interior(&self, slots: usize, weight_left: u32, cur: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
        if slots == 0 {
            if weight_left == 0 {
                emit(cur);
            }
            return;
        }
        if (weight_left as usize) < slots {
            return;
        }
        for &i in &self.nonunit {
            let w = self.basis[i].weight;
            if w == 0 || w > weight_left {
                continue;
            }
            cur.push(i as u32);
            self.fill_interior(slots - 1, weight_left - w, cur, emit);
            cur.pop();
        }
    }

    /// Normalized basis tensors of the given arity for a finite-dimensional
    /// algebra (no weight filtering).
    pub fn normalized_tensors_finite(&self, arity: usize) -> Vec<Tensor> {
        let mut out = Vec::new();
        let mut rest = Vec::new();
        fn rec(alg: &Algebra, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Tensor>, b0: u32) {
            if slots == 0 {
                out.push(Tensor { b0, rest: cur.clone() });
                return;
            }
            for &i in &alg.nonunit {
                cur.push(i as u32);
                rec(alg, slots - 1, cur, out, b0);
                cur.pop();
            }
        }
        for b0 in 0..self.dim() {
            rec(self, arity, &mut rest, &mut out, b0 as u32);
        }
        out.sort();
        out
    }

    /// All normalized tensors of total weight `w` (any arity).
    pub fn normalized_tensors_of_weight(&self, w: u32) -> Vec<Tensor> {
        let mut out = Vec::new();
        for n in 0..=(w as usize) {
            out.extend(self.normalized_tensors(n, w));
        }
        out
    }

    /// Unnormalized basis tensors of the given arity, all weights (complete
    /// algebras only; the enumeration is finite because the basis is).
    pub fn unnormalized_tensors(&self, arity: usize) -> Vec<Tensor> {
        assert!(self.is_complete(), "unnormalized enumeration needs a complete algebra");
        let mut out = Vec::new();
        let dim = self.dim() as u32;
        let mut rest = vec![0u32; arity];
        loop {
            for b0 in 0..dim {
                out.push(Tensor { b0, rest: rest.clone() });
            }
            let mut pos = arity;
            loop {
                if pos == 0 {
                    out.sort();
                    return out;
                }
                pos -= 1;
                rest[pos] += 1;
                if rest[pos] < dim {
                    break;
                }
                rest[pos] = 0;
            }
        }
    }

    pub fn tensor_weight(&self, t: &Tensor) -> u32 {
        self.weight(t.b0) + t.rest.iter().map(|&i| self.weight(i)).sum::<u32>()
    }

    pub fn tensor_multi(&self, t: &Tensor) -> Vec<i32> {
        let mut m = self.multi(t.b0).to_vec();
        for &i in &t.rest {
            for (a, b) in m.iter_mut().zip(self.multi(i)) {
                *a += b;
            }
        }
        m
    }

    pub fn fmt_tensor(&self, t: &Tensor) -> String {
        let mut s = self.basis[t.b0 as usize].name.clone();
        for &i in &t.rest {
            s.push('|');
            s.push_str(&self.basis[i as usize].name);
        }
        s
    }
}

/// The base field as an algebra.
pub fn rationals() -> Rc<Algebra> {
    let basis = vec![BasisElt { name: "1".into(), weight: 0, multi: vec![] }];
    let table = vec![vec![Some(vec![(0, rat(1))])]];
    Algebra::build(
        "Q".into(),
        AlgKind::GradedConnected { complete: true, weight_bound: 0 },
        basis,
        0,
        table,
    )
    .expect("rationals are a valid algebra")
}

fn monomial_name(vars: &[&str], expo: &[u32]) -> String {
    let mut parts = Vec::new();
    for (v, &e) in vars.iter().zip(expo) {
        match e {
            0 => {}
            1 => parts.push(v.to_string()),
            _ => parts.push(format!("{v}^{e}")),
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

fn monomials_of_weight(nvars: usize, w: u32) -> Vec<Vec<u32>> {
    // Lexicographic enumeration of exponent vectors with given total.
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(nvars: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == nvars - 1 {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e;
            rec(nvars, pos + 1, left - e, cur, out);
        }
    }
    if nvars == 0 {
        if w == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(nvars, 0, w, &mut cur, &mut out);
    out
}

/// Polynomial algebra on the given variables, stored up to the weight bound.
pub fn polynomial(vars: &[&str], weight_bound: u32) -> Rc<Algebra> {
    assert!(!vars.is_empty());
    let mut basis = Vec::new();
    let mut index = BTreeMap::new();
    for w in 0..=weight_bound {
        for expo in monomials_of_weight(vars.len(), w) {
            index.insert(expo.clone(), basis.len());
            basis.push(BasisElt {
                name: monomial_name(vars, &expo),
                weight: w,
                multi: expo.iter().map(|&e| e as i32).collect(),
            });
        }
    }
    let dim = basis.len();
    let mut by_pos: Vec<Vec<u32>> = vec![Vec::new(); dim];
    for (e, &i) in &index {
        by_pos[i] = e.clone();
    }
    let mut table = vec![vec![None; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let sum: Vec<u32> = by_pos[i].iter().zip(&by_pos[j]).map(|(a, b)| a + b).collect();
            let w: u32 = sum.iter().sum();
            if w <= weight_bound {
                let k = index[&sum];
                table[i][j] = Some(vec![(k, rat(1))]);
            }
        }
    }
    let name = format!("Q[{}]", vars.join(","));
    Algebra::build(
        name,
        AlgKind::GradedConnected { complete: false, weight_bound },
        basis,
        0,
        table,
    )
    .expect("polynomial algebra is valid")
}

/// `Q[x]/(x^n)`, stored completely.
pub fn truncated_power(n: u32) -> Rc<Algebra> {
    assert!(n >= 2);
    let mut basis = Vec::new();
    for w in 0..n {
        let name = match w {
            0 => "1".to_string(),
            1 => "x".to_string(),
            _ => format!("x^{w}"),
        };
        basis.push(BasisElt { name, weight: w, multi: vec![w as i32] });
    }
    let dim = basis.len();
    let mut table = vec![vec![Some(Vec::new()); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            if i + j < dim {
                table[i][j] = Some(vec![(i + j, rat(1))]);
            }
        }
    }
    Algebra::build(
        format!("Q[x]/(x^{n})"),
        AlgKind::GradedConnected { complete: true, weight_bound: n - 1 },
        basis,
        0,
        table,
    )
    .expect("truncated power algebra is valid")
}

/// Upper-triangular 2x2 matrices with basis `1, e22, e12`.
pub fn upper_triangular() -> Rc<Algebra> {
    let basis = vec![
        BasisElt { name: "1".into(), weight: 0, multi: vec![] },
        BasisElt { name: "e22".into(), weight: 0, multi: vec![] },
        BasisElt { name: "e12".into(), weight: 0, multi: vec![] },
    ];
    let mut table = vec![vec![Some(Vec::new()); 3]; 3];
    for i in 0..3 {
        table[0][i] = Some(vec![(i, rat(1))]);
        table[i][0] = Some(vec![(i, rat(1))]);
    }
    table[1][1] = Some(vec![(1, rat(1))]);
    table[1][2] = Some(Vec::new());
    table[2][1] = Some(vec![(2, rat(1))]);
    table[2][2] = Some(Vec::new());
    Algebra::build("UT2".into(), AlgKind::Finite { arity_bound: 6 }, basis, 0, table)
        .expect("upper triangular algebra is valid")
}

/// Build a finite-dimensional algebra from explicit structure constants.
pub fn build_finite(
    name: &str,
    basis_names: &[&str],
    unit: usize,
    products: &[(usize, usize, Vec<(usize, Rat)>)],
    arity_bound: u32,
) -> Result<Rc<Algebra>, AlgError> {
    let dim = basis_names.len();
    let basis = basis_names
        .iter()
        .map(|n| BasisElt { name: n.to_string(), weight: 0, multi: vec![] })
        .collect();
    let mut table = vec![vec![Some(Vec::new()); dim]; dim];
    for (i, j, terms) in products {
        table[*i][*j] = Some(terms.clone());
    }
    Algebra::build(name.to_string(), AlgKind::Finite { arity_bound }, basis, unit, table)
}

/// Catalog lookup. `weight_bound` applies to the incomplete polynomial
/// entries; complete entries ignore it.
pub fn catalog(name: &str, weight_bound: u32) -> Result<Rc<Algebra>, AlgError> {
    match name {
        "Q" => Ok(rationals()),
        "Q[x]" => Ok(polynomial(&["x"], weight_bound)),
        "Q[x,y]" => Ok(polynomial(&["x", "y"], weight_bound)),
        "Q[x,y,z]" => Ok(polynomial(&["x", "y", "z"], weight_bound)),
        "K2" => Ok(truncated_power(2)),
        "UT2" => Ok(upper_triangular()),
        _ => {
            if let Some(rest) = name.strip_prefix("Q[x]/(x^") {
                if let Some(num) = rest.strip_suffix(')') {
                    let n: u32 = num
                        .parse()
                        .map_err(|_| AlgError::Invalid(format!("bad exponent in {name}")))?;
                    return Ok(truncated_power(n));
                }
            }
            Err(AlgError::Invalid(format!("unknown catalog algebra {name}")))
        }
    }
}

/// Load an algebra from the JSON input format.
pub fn from_json(v: &serde_json::Value) -> Result<Rc<Algebra>, AlgError> {
    let bad = |m: &str| AlgError::Invalid(m.to_string());
    let kind_str = v.get("kind").and_then(|x| x.as_str()).ok_or_else(|| bad("missing kind"))?;
    let name = v.get("name").and_then(|x| x.as_str()).unwrap_or("algebra").to_string();
    let basis_v = v.get("basis").and_then(|x| x.as_array()).ok_or_else(|| bad("missing basis"))?;
    let mut basis = Vec::new();
    for b in basis_v {
        let bname = b.get("name").and_then(|x| x.as_str()).ok_or_else(|| bad("basis entry needs a name"))?;
        let weight = b.get("weight").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        let multi = match b.get("multi").and_then(|x| x.as_array()) {
            Some(arr) => arr
                .iter()
                .map(|e| e.as_i64().map(|n| n as i32).ok_or_else(|| bad("bad multidegree")))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![weight as i32],
        };
        basis.push(BasisElt { name: bname.to_string(), weight, multi });
    }
    let unit = v.get("unit").and_then(|x| x.as_u64()).ok_or_else(|| bad("missing unit"))? as usize;
    let dim = basis.len();
    let kind = match kind_str {
        "finite" => {
            let n = v.get("arity_bound").and_then(|x| x.as_u64()).unwrap_or(6) as u32;
            for b in &mut basis {
                b.multi = vec![];
            }
            AlgKind::Finite { arity_bound: n }
        }
        "graded_connected" => {
            let w = v
                .get("weight_bound")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| bad("graded algebra needs weight_bound"))? as u32;
            let complete = v.get("complete").and_then(|x| x.as_bool()).unwrap_or(false);
            AlgKind::GradedConnected { complete, weight_bound: w }
        }
        other => return Err(AlgError::Invalid(format!("unknown kind {other}"))),
    };
    let mut table: Vec<Vec<Option<Vec<(usize, Rat)>>>> = match &kind {
        AlgKind::Finite { .. } => vec![vec![Some(Vec::new()); dim]; dim],
        AlgKind::GradedConnected { complete, weight_bound } => {
            let mut t = vec![vec![None; dim]; dim];
            for (i, bi) in basis.iter().enumerate() {
                for (j, bj) in basis.iter().enumerate() {
                    if *complete || bi.weight + bj.weight <= *weight_bound {
                        t[i][j] = Some(Vec::new());
                    }
                }
            }
            t
        }
    };
    for ent in v.get("mult").and_then(|x| x.as_array()).ok_or_else(|| bad("missing mult"))? {
        let arr = ent.as_array().ok_or_else(|| bad("mult entries must be arrays"))?;
        if arr.len() != 3 {
            return Err(bad("mult entries must be [i, j, terms]"));
        }
        let i = arr[0].as_u64().ok_or_else(|| bad("bad index"))? as usize;
        let j = arr[1].as_u64().ok_or_else(|| bad("bad index"))? as usize;
        if i >= dim || j >= dim {
            return Err(bad("mult index out of range"));
        }
        let mut terms = Vec::new();
        for t in arr[2].as_array().ok_or_else(|| bad("terms must be an array"))? {
            let pair = t.as_array().ok_or_else(|| bad("term must be [coeff, k]"))?;
            let c = parse_rat(pair[0].as_str().ok_or_else(|| bad("coeff must be a string"))?)
                .map_err(AlgError::Invalid)?;
            let k = pair[1].as_u64().ok_or_else(|| bad("bad basis index"))? as usize;
            if k >= dim {
                return Err(bad("term index out of range"));
            }
            if !c.is_zero() {
                terms.push((k, c));
            }
        }
        table[i][j] = Some(terms);
    }
    Algebra::build(name, kind, basis, unit, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::Qq;

    #[test]
    fn polynomial_truncation_is_an_error_not_zero() {
        let a = polynomial(&["x"], 3);
        let x3 = a.basis.iter().position(|b| b.name == "x^3").unwrap() as u32;
        let x = 1u32;
        assert!(a.mul_basis(x, x3).is_err());
        assert!(a.mul_basis(x, x).is_ok());
    }

    #[test]
    fn truncated_power_products_vanish_exactly() {
        let a = truncated_power(2);
        assert_eq!(a.mul_basis(1, 1).unwrap(), &[]);
        assert!(a.is_complete());
    }

    #[test]
    fn normalized_tensor_enumeration_matches_hand_counts() {
        let a = polynomial(&["x"], 4);
        // Arity 1, weight 2: 1|x^2 and x|x.
        let t = a.normalized_tensors(1, 2);
        let names: Vec<String> = t.iter().map(|t| a.fmt_tensor(t)).collect();
        assert_eq!(names, vec!["1|x^2", "x|x"]);

        let k2 = truncated_power(2);
        let t = k2.normalized_tensors(2, 2);
        assert_eq!(t.len(), 1);
        assert_eq!(k2.fmt_tensor(&t[0]), "1|x|x");
        let t = k2.normalized_tensors(2, 3);
        assert_eq!(t.len(), 1);
        assert_eq!(k2.fmt_tensor(&t[0]), "x|x|x");
    }

    #[test]
    fn weight_blocks_of_k2_grow_one_dimension_per_arity() {
        let k2 = truncated_power(2);
        for w in 1..5u32 {
            let all = k2.normalized_tensors_of_weight(w);
            assert_eq!(all.len(), 2, "weight {w}");
        }
    }

    #[test]
    fn upper_triangular_is_associative_and_unital() {
        let a = upper_triangular();
        // e12 * e22 = e12, e22 * e12 = 0 in the chosen basis.
        assert_eq!(a.mul_basis(2, 1).unwrap(), &[(2, rat(1))]);
        assert_eq!(a.mul_basis(1, 2).unwrap(), &[]);
    }

    #[test]
    fn sparse_vector_products_follow_the_table() {
        let a = polynomial(&["x", "y"], 3);
        let ring = Qq;
        let x = a.basis.iter().position(|b| b.name == "x").unwrap() as u32;
        let y = a.basis.iter().position(|b| b.name == "y").unwrap() as u32;
        let mut vx = Sv::new();
        vx.insert(x, rat(2));
        let mut vy = Sv::new();
        vy.insert(y, rat(3));
        let p = a.mul_sv(&ring, &vx, &vy).unwrap();
        let xy = a.basis.iter().position(|b| b.name == "x*y").unwrap() as u32;
        assert_eq!(p.get(&xy), Some(&rat(6)));
    }

    #[test]
    fn json_loader_roundtrips_k2() {
        let v: serde_json::Value = serde_json::from_str(
            r#"{
                "kind": "graded_connected", "name": "K2j", "weight_bound": 1, "complete": true,
                "basis": [{"name": "1", "weight": 0}, {"name": "x", "weight": 1}],
                "unit": 0,
                "mult": [[0,0,[["1",0]]],[0,1,[["1",1]]],[1,0,[["1",1]]],[1,1,[]]]
            }"#,
        )
        .unwrap();
        let a = from_json(&v).unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(a.mul_basis(1, 1).unwrap(), &[]);
    }
}

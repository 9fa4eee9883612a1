use std::rc::Rc;

use num_traits::Zero;

use super::{fmt_rat, parse_rat};
use crate::{rat, Rat};

/// A local Artinian commutative ring with a distinguished rational basis,
/// basis element `0` being the unit. Used as the coefficient ring of
/// deformations; the maximal ideal is spanned by the non-unit basis elements.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRing {
    pub name: String,
    pub basis_names: Vec<String>,
    /// `table[i][j]` is the expansion of `e_i * e_j` in the basis.
    pub table: Vec<Vec<Vec<(usize, Rat)>>>,
    /// Smallest `n` with `m^n = 0`.
    pub nil_order: usize,
}

impl TestRing {
    pub fn dim(&self) -> usize {
        self.basis_names.len()
    }

    /// `Q[t]/(t^n)` with basis `1, t, ..., t^{n-1}`. Requires `1 <= n <= 8`.
    pub fn eps_ring(n: usize) -> Rc<TestRing> {
        assert!((1..=8).contains(&n), "eps_ring supports orders 1..=8");
        let basis_names: Vec<String> = (0..n)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "t".to_string(),
                k => format!("t^{k}"),
            })
            .collect();
        let mut table = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i + j < n {
                    table[i][j] = vec![(i + j, rat(1))];
                }
            }
        }
        let ring = TestRing { name: format!("Q[t]/(t^{n})"), basis_names, table, nil_order: n };
        ring.validate().expect("eps ring is valid");
        Rc::new(ring)
    }

    /// `Q[t1,t2]/(t1,t2)^2` with basis `1, t1, t2`.
    pub fn square_zero_pair() -> Rc<TestRing> {
        let basis_names = vec!["1".to_string(), "t1".to_string(), "t2".to_string()];
        let mut table = vec![vec![Vec::new(); 3]; 3];
        for i in 0..3 {
            table[0][i] = vec![(i, rat(1))];
            table[i][0] = vec![(i, rat(1))];
        }
        let ring = TestRing { name: "Q[t1,t2]/(t1,t2)^2".to_string(), basis_names, table, nil_order: 2 };
        ring.validate().expect("square-zero ring is valid");
        Rc::new(ring)
    }

    /// Load from JSON: `{"name": ..., "basis": ["1", "t", ...],
    /// "mult": [[i, j, [["p/q", k], ...]], ...]}`. Missing products are zero.
    pub fn from_json(v: &serde_json::Value) -> Result<Rc<TestRing>, String> {
        let name = v.get("name").and_then(|x| x.as_str()).unwrap_or("ring").to_string();
        let basis: Vec<String> = v
            .get("basis")
            .and_then(|x| x.as_array())
            .ok_or("missing basis array")?
            .iter()
            .map(|s| s.as_str().map(|t| t.to_string()).ok_or_else(|| "basis entries must be strings".to_string()))
            .collect::<Result<_, _>>()?;
        let dim = basis.len();
        if dim == 0 {
            return Err("empty basis".into());
        }
        let mut table = vec![vec![Vec::new(); dim]; dim];
        for ent in v.get("mult").and_then(|x| x.as_array()).ok_or("missing mult array")? {
            let arr = ent.as_array().ok_or("mult entries must be arrays")?;
            if arr.len() != 3 {
                return Err("mult entries must be [i, j, terms]".into());
            }
            let i = arr[0].as_u64().ok_or("bad index")? as usize;
            let j = arr[1].as_u64().ok_or("bad index")? as usize;
            if i >= dim || j >= dim {
                return Err("mult index out of range".into());
            }
            let mut terms = Vec::new();
            for t in arr[2].as_array().ok_or("terms must be an array")? {
                let pair = t.as_array().ok_or("term must be [coeff, k]")?;
                let c = parse_rat(pair[0].as_str().ok_or("coeff must be a string")?)?;
                let k = pair[1].as_u64().ok_or("bad basis index")? as usize;
                if k >= dim {
                    return Err("term index out of range".into());
                }
                if !c.is_zero() {
                    terms.push((k, c));
                }
            }
            table[i][j] = terms;
        }
        let mut ring = TestRing { name, basis_names: basis, table, nil_order: 0 };
        ring.nil_order = ring.compute_nil_order().ok_or("maximal ideal is not nilpotent")?;
        ring.validate()?;
        Ok(Rc::new(ring))
    }

    fn mul_basis(&self, i: usize, j: usize) -> &[(usize, Rat)] {
        &self.table[i][j]
    }

    fn compute_nil_order(&self) -> Option<usize> {
        // Repeatedly multiply the span of m by itself until it vanishes.
        let dim = self.dim();
        let mut span: Vec<Vec<Rat>> = (1..dim)
            .map(|i| {
                let mut v = vec![rat(0); dim];
                v[i] = rat(1);
                v
            })
            .collect();
        for order in 1..=2 * dim + 1 {
            if span.iter().all(|v| v.iter().all(|c| c.is_zero())) {
                return Some(order);
            }
            let mut next: Vec<Vec<Rat>> = Vec::new();
            for v in &span {
                for g in 1..dim {
                    let mut w = vec![rat(0); dim];
                    for (i, c) in v.iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        for (k, t) in self.mul_basis(i, g) {
                            w[*k] += c.clone() * t.clone();
                        }
                    }
                    next.push(w);
                }
            }
            span = next;
        }
        None
    }

    /// Structural checks: unit, commutativity, associativity, locality.
    pub fn validate(&self) -> Result<(), String> {
        let dim = self.dim();
        for i in 0..dim {
            let u1 = self.mul_basis(0, i);
            let u2 = self.mul_basis(i, 0);
            let want = vec![(i, rat(1))];
            if u1 != want.as_slice() || u2 != want.as_slice() {
                return Err(format!("basis element 0 is not a unit against {i}"));
            }
        }
        let as_vec = |terms: &[(usize, Rat)]| {
            let mut v = vec![rat(0); dim];
            for (k, c) in terms {
                v[*k] += c.clone();
            }
            v
        };
        for i in 0..dim {
            for j in 0..dim {
                if as_vec(self.mul_basis(i, j)) != as_vec(self.mul_basis(j, i)) {
                    return Err(format!("not commutative at ({i},{j})"));
                }
                for k in 0..dim {
                    let mut lhs = vec![rat(0); dim];
                    for (p, c) in self.mul_basis(i, j) {
                        for (q, e) in self.mul_basis(*p, k) {
                            lhs[*q] += c.clone() * e.clone();
                        }
                    }
                    let mut rhs = vec![rat(0); dim];
                    for (p, c) in self.mul_basis(j, k) {
                        for (q, e) in self.mul_basis(i, *p) {
                            rhs[*q] += c.clone() * e.clone();
                        }
                    }
                    if lhs != rhs {
                        return Err(format!("not associative at ({i},{j},{k})"));
                    }
                }
            }
        }
        if self.compute_nil_order().is_none() {
            return Err("maximal ideal is not nilpotent".into());
        }
        Ok(())
    }
}

/// Coefficient rings for chains, cochains and deformation elements. The ring
/// is a context object; elements do not carry their ring.
pub trait CoeffRing: Clone {
    type El: Clone + PartialEq + std::fmt::Debug;
    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn is_zero(&self, a: &Self::El) -> bool;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn neg(&self, a: &Self::El) -> Self::El;
    fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn from_rat(&self, r: &Rat) -> Self::El;
    fn fmt_el(&self, a: &Self::El) -> String;

    fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.add(a, &self.neg(b))
    }
    fn scale(&self, r: &Rat, a: &Self::El) -> Self::El {
        self.mul(&self.from_rat(r), a)
    }
}

/// The rationals as a coefficient ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Qq;

impl CoeffRing for Qq {
    type El = Rat;
    fn zero(&self) -> Rat {
        rat(0)
    }
    fn one(&self) -> Rat {
        rat(1)
    }
    fn is_zero(&self, a: &Rat) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Rat, b: &Rat) -> Rat {
        a + b
    }
    fn neg(&self, a: &Rat) -> Rat {
        -a
    }
    fn mul(&self, a: &Rat, b: &Rat) -> Rat {
        a * b
    }
    fn from_rat(&self, r: &Rat) -> Rat {
        r.clone()
    }
    fn fmt_el(&self, a: &Rat) -> String {
        fmt_rat(a)
    }
}

/// A test ring as a coefficient ring; elements are dense coordinate vectors.
#[derive(Clone)]
pub struct Rr(pub Rc<TestRing>);

impl Rr {
    pub fn el_from_coords(&self, coords: Vec<Rat>) -> Vec<Rat> {
        assert_eq!(coords.len(), self.0.dim());
        coords
    }

    /// `c * e_k` as an element.
    pub fn monomial(&self, k: usize, c: &Rat) -> Vec<Rat> {
        let mut v = vec![rat(0); self.0.dim()];
        v[k] = c.clone();
        v
    }

    /// Whether the element lies in the maximal ideal.
    pub fn in_maximal(&self, a: &[Rat]) -> bool {
        a[0].is_zero()
    }

    /// Reduction modulo the maximal ideal.
    pub fn mod_m(&self, a: &[Rat]) -> Rat {
        a[0].clone()
    }
}

impl CoeffRing for Rr {
    type El = Vec<Rat>;
    fn zero(&self) -> Vec<Rat> {
        vec![rat(0); self.0.dim()]
    }
    fn one(&self) -> Vec<Rat> {
        self.monomial(0, &rat(1))
    }
    fn is_zero(&self, a: &Vec<Rat>) -> bool {
        a.iter().all(|c| c.is_zero())
    }
    fn add(&self, a: &Vec<Rat>, b: &Vec<Rat>) -> Vec<Rat> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
    fn neg(&self, a: &Vec<Rat>) -> Vec<Rat> {
        a.iter().map(|x| -x).collect()
    }
    fn mul(&self, a: &Vec<Rat>, b: &Vec<Rat>) -> Vec<Rat> {
        let dim = self.0.dim();
        let mut out = vec![rat(0); dim];
        for i in 0..dim {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..dim {
                if b[j].is_zero() {
                    continue;
                }
                for (k, c) in &self.0.table[i][j] {
                    out[*k] += a[i].clone() * b[j].clone() * c.clone();
                }
            }
        }
        out
    }
    fn from_rat(&self, r: &Rat) -> Vec<Rat> {
        self.monomial(0, r)
    }
    fn fmt_el(&self, a: &Vec<Rat>) -> String {
        let mut parts = Vec::new();
        for (i, c) in a.iter().enumerate() {
            if !c.is_zero() {
                if i == 0 {
                    parts.push(fmt_rat(c));
                } else {
                    parts.push(format!("{}*{}", fmt_rat(c), self.0.basis_names[i]));
                }
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

/// A section of a surjection of eps-type rings, lifting coefficients by
/// matching basis names. Used to lift deformations along `S -> R`.
pub fn lift_coords(big: &TestRing, small: &TestRing, a: &[Rat]) -> Vec<Rat> {
    let mut out = vec![rat(0); big.dim()];
    for (i, c) in a.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let name = &small.basis_names[i];
        let k = big
            .basis_names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no basis element {name} in {}", big.name));
        out[k] = c.clone();
    }
    out
}

/// Reduce coefficients along the surjection `big -> small` (basis-name
/// matching; names of `big` absent from `small` map to zero).
pub fn reduce_coords(big: &TestRing, small: &TestRing, a: &[Rat]) -> Vec<Rat> {
    let mut out = vec![rat(0); small.dim()];
    for (i, c) in a.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if let Some(k) = small.basis_names.iter().position(|n| n == &big.basis_names[i]) {
            out[k] = c.clone();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_ring_arithmetic() {
        let ring = Rr(TestRing::eps_ring(3));
        let t = ring.monomial(1, &rat(1));
        let t2 = ring.mul(&t, &t);
        assert_eq!(t2, ring.monomial(2, &rat(1)));
        assert!(ring.is_zero(&ring.mul(&t2, &t)));
        assert!(ring.in_maximal(&t));
        assert_eq!(ring.0.nil_order, 3);
    }

    #[test]
    fn square_zero_pair_kills_products() {
        let ring = Rr(TestRing::square_zero_pair());
        let t1 = ring.monomial(1, &rat(1));
        let t2 = ring.monomial(2, &rat(1));
        assert!(ring.is_zero(&ring.mul(&t1, &t2)));
        assert!(ring.is_zero(&ring.mul(&t1, &t1)));
        assert_eq!(ring.0.nil_order, 2);
    }

    #[test]
    fn lift_and_reduce_are_sections() {
        let r2 = TestRing::eps_ring(2);
        let r3 = TestRing::eps_ring(3);
        let a = vec![rat(2), rat(5)];
        let lifted = lift_coords(&r3, &r2, &a);
        assert_eq!(lifted, vec![rat(2), rat(5), rat(0)]);
        assert_eq!(reduce_coords(&r3, &r2, &lifted), a);
    }

    #[test]
    fn json_ring_roundtrip() {
        let v: serde_json::Value = serde_json::from_str(
            r#"{"name":"dual","basis":["1","e"],"mult":[[0,0,[["1",0]]],[0,1,[["1",1]]],[1,0,[["1",1]]],[1,1,[]]]}"#,
        )
        .unwrap();
        let ring = TestRing::from_json(&v).unwrap();
        assert_eq!(ring.dim(), 2);
        assert_eq!(ring.nil_order, 2);
    }
}

//! Deterministic random generators for cochains and chains. All randomness
//! flows from a single seeded stream so reruns with the same seed reproduce
//! the same trials byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Tensor};
use crate::calculus::{Chain, Cochain, CochainKey};
use crate::exactla::Qq;
use crate::{rat, Rat};

pub struct Rnd {
    rng: ChaCha8Rng,
}

impl Rnd {
    pub fn new(seed: u64) -> Rnd {
        Rnd { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// A small rational with numerator in `-4..=4` and denominator in `1..=3`.
    pub fn small_rat(&mut self) -> Rat {
        let n = self.rng.gen_range(-4i64..=4);
        let d = self.rng.gen_range(1i64..=3);
        Rat::new(n.into(), d.into())
    }

    pub fn nonzero_small_rat(&mut self) -> Rat {
        loop {
            let r = self.small_rat();
            if !num_traits::Zero::is_zero(&r) {
                return r;
            }
        }
    }

    pub(crate) fn args_candidates(
        alg: &Algebra,
        arity: usize,
        normalized: bool,
        w_in_max: Option<u32>,
    ) -> Vec<Vec<u32>> {
        let slots: Vec<u32> = if normalized {
            alg.nonunit.iter().map(|&i| i as u32).collect()
        } else {
            (0..alg.dim() as u32).collect()
        };
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(
            alg: &Algebra,
            slots: &[u32],
            left: usize,
            w_in_max: Option<u32>,
            cur: &mut Vec<u32>,
            out: &mut Vec<Vec<u32>>,
        ) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for &i in slots {
                if let Some(wm) = w_in_max {
                    let used: u32 = cur.iter().map(|&j| alg.weight(j)).sum();
                    if used + alg.weight(i) > wm {
                        continue;
                    }
                }
                cur.push(i);
                rec(alg, slots, left - 1, w_in_max, cur, out);
                cur.pop();
            }
        }
        rec(alg, &slots, arity, w_in_max, &mut cur, &mut out);
        out
    }

    /// A sparse random cochain with a handful of entries. For graded algebras
    /// a fixed weight gain `delta` keeps the operator homogeneous, and
    /// `w_in_max` bounds the total input weight of every entry. The result
    /// carries full certification: a finite list of entries is exact data.
    pub fn cochain(
        &mut self,
        alg: &Algebra,
        arity: usize,
        normalized: bool,
        delta: Option<i32>,
        w_in_max: Option<u32>,
    ) -> Cochain<Rat> {
        let keys = candidate_keys(alg, arity, normalized, delta, w_in_max);
        let mut c = Cochain::zero(arity, normalized);
        if keys.is_empty() {
            return c;
        }
        let picks = 1 + self.below(3.min(keys.len()));
        for _ in 0..picks {
            let k = keys[self.below(keys.len())].clone();
            c.add_entry(&Qq, k, self.nonzero_small_rat());
        }
        c
    }

    /// A sparse random chain of the given arity (and weight, when graded).
    pub fn chain(
        &mut self,
        alg: &Algebra,
        arity: usize,
        weight: Option<u32>,
        normalized: bool,
    ) -> Chain<Rat> {
        let tensors: Vec<Tensor> = if normalized {
            if alg.is_graded() {
                alg.normalized_tensors(arity, weight.expect("graded chains need a weight"))
            } else {
                alg.normalized_tensors_finite(arity)
            }
        } else {
            alg.unnormalized_tensors(arity)
        };
        let mut c = Chain::zero(normalized);
        if tensors.is_empty() {
            return c;
        }
        let picks = 1 + self.below(3.min(tensors.len()));
        for _ in 0..picks {
            let t = tensors[self.below(tensors.len())].clone();
            c.add_term(&Qq, t, self.nonzero_small_rat());
        }
        c
    }

    /// A random scalar vector, used for linear-combination probes.
    pub fn rats(&mut self, n: usize) -> Vec<Rat> {
        (0..n).map(|_| self.small_rat()).collect()
    }

    /// A zero-avoiding convenience: retries until the value is nonzero, up
    /// to a bounded number of attempts.
    pub fn nonzero_chain(
        &mut self,
        alg: &Algebra,
        arity: usize,
        weight: Option<u32>,
        normalized: bool,
    ) -> Chain<Rat> {
        for _ in 0..16 {
            let c = self.chain(alg, arity, weight, normalized);
            if !c.is_zero() {
                return c;
            }
        }
        Chain::zero(normalized)
    }

    pub fn rat_nonzero_vec(&mut self, n: usize) -> Vec<Rat> {
        (0..n).map(|_| self.nonzero_small_rat()).collect()
    }

    /// Unused-entry guard for callers that need at least one entry.
    pub fn nonzero_cochain(
        &mut self,
        alg: &Algebra,
        arity: usize,
        normalized: bool,
        delta: Option<i32>,
        w_in_max: Option<u32>,
    ) -> Cochain<Rat> {
        for _ in 0..16 {
            let c = self.cochain(alg, arity, normalized, delta, w_in_max);
            if !c.is_zero() {
                return c;
            }
        }
        Cochain::zero(arity, normalized)
    }

    pub fn small_int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn rat_one_of(&mut self, opts: &[i64]) -> Rat {
        rat(opts[self.below(opts.len())])
    }
}

/// Every normalized (or unnormalized) cochain key of the given arity,
/// optionally restricted to one weight gain and an argument-weight cap.
pub fn candidate_keys(
    alg: &Algebra,
    arity: usize,
    normalized: bool,
    delta: Option<i32>,
    w_in_max: Option<u32>,
) -> Vec<CochainKey> {
    let mut keys = Vec::new();
    for args in Rnd::args_candidates(alg, arity, normalized, w_in_max) {
        let wargs: i64 = args.iter().map(|&i| alg.weight(i) as i64).sum();
        for out in 0..alg.dim() as u32 {
            if let Some(d) = delta {
                if alg.weight(out) as i64 != wargs + d as i64 {
                    continue;
                }
            }
            keys.push(CochainKey { args: args.clone(), out });
        }
    }
    keys
}

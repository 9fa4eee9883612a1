use std::collections::BTreeMap;


use super::{Field, LinearError, SparseMat};

/// Homology of a three-term block `E --d_in--> C --d_out--> D`, together
/// with representatives and a projection onto class coordinates.
pub struct Homology<F> {
    /// Dimension of the middle space `C`.
    pub space_dim: usize,
    /// Dimension of the homology.
    pub dim: usize,
    /// Chosen cycle representatives, one per class, as dense vectors in `C`.
    pub reps: Vec<Vec<F>>,
    /// Columns spanning the cycle space: first a basis of the image of
    /// `d_in`, then the representatives.
    basis: SparseMat<F>,
    image_rank: usize,
}

impl<F: Field> Homology<F> {
    /// Compute `ker(d_out) / im(d_in)`. Verifies `d_out * d_in = 0` first.
    pub fn compute(d_out: &SparseMat<F>, d_in: &SparseMat<F>) -> Result<Self, LinearError> {
        if d_out.cols != d_in.rows {
            return Err(LinearError::Dimension(format!(
                "d_out acts on dim {}, d_in lands in dim {}",
                d_out.cols, d_in.rows
            )));
        }
        let comp = d_out.matmul(d_in);
        if !comp.is_zero_matrix() {
            let col = (0..comp.cols)
                .find(|&j| (0..comp.rows).any(|i| !comp.get(i, j).is_zero()))
                .unwrap_or(0);
            return Err(LinearError::NotAComplex { col });
        }
        let dim_c = d_out.cols;
        let kernel = d_out.kernel();

        // Select an independent spanning set: image columns first, then
        // kernel vectors, keeping the deterministic left-to-right pivot rule.
        let mut cols: Vec<BTreeMap<usize, F>> = Vec::new();
        for j in 0..d_in.cols {
            let mut col = BTreeMap::new();
            for i in 0..d_in.rows {
                let v = d_in.get(i, j);
                if !v.is_zero() {
                    col.insert(i, v);
                }
            }
            cols.push(col);
        }
        let n_image_cols = cols.len();
        for k in &kernel {
            let mut col = BTreeMap::new();
            for (i, v) in k.iter().enumerate() {
                if !v.is_zero() {
                    col.insert(i, v.clone());
                }
            }
            cols.push(col);
        }
        let stacked = SparseMat::from_columns(dim_c, &cols);
        let ech = stacked.echelon();
        let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
        let image_pivots: Vec<usize> = pivot_cols.iter().cloned().filter(|&c| c < n_image_cols).collect();
        let rep_pivots: Vec<usize> = pivot_cols.iter().cloned().filter(|&c| c >= n_image_cols).collect();

        let mut basis_cols: Vec<BTreeMap<usize, F>> = Vec::new();
        for &c in &image_pivots {
            basis_cols.push(cols[c].clone());
        }
        let mut reps = Vec::new();
        for &c in &rep_pivots {
            basis_cols.push(cols[c].clone());
            reps.push(kernel[c - n_image_cols].clone());
        }
        let basis = SparseMat::from_columns(dim_c, &basis_cols);
        Ok(Homology {
            space_dim: dim_c,
            dim: reps.len(),
            reps,
            basis,
            image_rank: image_pivots.len(),
        })
    }

    /// Coordinates of the class of the cycle `z` in the representative basis.
    /// Errors if `z` is not in the span of the cycle space.
    pub fn project(&self, z: &[F]) -> Result<Vec<F>, LinearError> {
        if z.len() != self.space_dim {
            return Err(LinearError::Dimension(format!(
                "cycle has dim {}, space has dim {}",
                z.len(),
                self.space_dim
            )));
        }
        let w = self.basis.solve_ok(z).map_err(|_| LinearError::NotACycle)?;
        Ok(w[self.image_rank..].to_vec())
    }

    /// Whether the cycle `z` is a boundary.
    pub fn is_boundary(&self, z: &[F]) -> Result<bool, LinearError> {
        Ok(self.project(z)?.iter().all(|v| v.is_zero()))
    }

    /// Matrix of the map induced on homology by the chain-level map `f`
    /// (columns indexed by the source representatives). Errors if some image
    /// fails to be a cycle modulo boundaries in the target.
    pub fn induced(f: &SparseMat<F>, src: &Homology<F>, tgt: &Homology<F>) -> Result<SparseMat<F>, LinearError> {
        if f.cols != src.space_dim || f.rows != tgt.space_dim {
            return Err(LinearError::Dimension(format!(
                "map is {}x{}, spaces are {} -> {}",
                f.rows, f.cols, src.space_dim, tgt.space_dim
            )));
        }
        let mut m = SparseMat::zero(tgt.dim, src.dim);
        for (j, rep) in src.reps.iter().enumerate() {
            let y = f.mul_dense(rep);
            let coords = tgt.project(&y)?;
            for (i, v) in coords.into_iter().enumerate() {
                if !v.is_zero() {
                    m.set(i, j, v);
                }
            }
        }
        Ok(m)
    }
}

/// Exact chain-map check on a window block: `f_low * d = d' * f_high`.
pub fn verify_chain_map<F: Field>(
    f_high: &SparseMat<F>,
    f_low: &SparseMat<F>,
    d_src: &SparseMat<F>,
    d_tgt: &SparseMat<F>,
) -> bool {
    f_low.matmul(d_src) == d_tgt.matmul(f_high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, Rat};

    #[test]
    fn kernel_mod_image_with_zero_incoming_differential() {
        // d_out (x,y) = (x-y, y-x): kernel is the diagonal.
        let mut d_out = SparseMat::<Rat>::zero(2, 2);
        d_out.set(0, 0, rat(1));
        d_out.set(0, 1, rat(-1));
        d_out.set(1, 0, rat(-1));
        d_out.set(1, 1, rat(1));
        let d_in = SparseMat::<Rat>::zero(2, 0);
        let h = Homology::compute(&d_out, &d_in).unwrap();
        assert_eq!(h.dim, 1);
        assert_eq!(h.project(&[rat(2), rat(2)]).unwrap(), vec![rat(2)]);
        assert!(h.project(&[rat(1), rat(0)]).is_err());
    }

    #[test]
    fn image_equal_to_kernel_gives_trivial_homology() {
        let mut d_out = SparseMat::<Rat>::zero(2, 2);
        d_out.set(0, 0, rat(1));
        d_out.set(0, 1, rat(-1));
        d_out.set(1, 0, rat(-1));
        d_out.set(1, 1, rat(1));
        let mut d_in = SparseMat::<Rat>::zero(2, 1);
        d_in.set(0, 0, rat(1));
        d_in.set(1, 0, rat(1));
        let h = Homology::compute(&d_out, &d_in).unwrap();
        assert_eq!(h.dim, 0);
        assert!(h.is_boundary(&[rat(2), rat(2)]).unwrap());
    }

    #[test]
    fn non_complex_is_rejected() {
        let mut d_out = SparseMat::<Rat>::zero(1, 1);
        d_out.set(0, 0, rat(1));
        let mut d_in = SparseMat::<Rat>::zero(1, 1);
        d_in.set(0, 0, rat(1));
        assert!(matches!(
            Homology::compute(&d_out, &d_in),
            Err(LinearError::NotAComplex { .. })
        ));
    }

    #[test]
    fn projection_coordinates_match_representatives() {
        // Zero differentials: homology = space, reps = standard basis.
        let d_out = SparseMat::<Rat>::zero(0, 3);
        let d_in = SparseMat::<Rat>::zero(3, 0);
        let h = Homology::compute(&d_out, &d_in).unwrap();
        assert_eq!(h.dim, 3);
        let z = [rat(5), rat(-2), rat(7)];
        assert_eq!(h.project(&z).unwrap(), z.to_vec());
    }
}

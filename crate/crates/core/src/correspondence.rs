//! Finite correspondences over multi-matrix algebras: two-sided module
//! actions, algebra-valued inner products, tensor products with null-space
//! quotients, and localization against a representation.

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra, Representation};
use crate::error::{Error, Result};
use crate::linalg::{
    c, eye, herm_eigen, kron, op_norm, psd_range_basis, random_cvec, zeros, CMat, CVec,
};
use crate::tol::Tol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Correspondence presented by generators: left and right actions of every
/// matrix unit plus the table of pairwise inner products (conjugate linear in
/// the first slot).
#[derive(Debug, Clone)]
pub struct Correspondence {
    pub algebra: MultiMatrixAlgebra,
    pub dim: usize,
    left_units: Vec<CMat>,
    right_units: Vec<CMat>,
    inner_table: Vec<AlgebraElement>,
}

impl Correspondence {
    pub fn explicit(
        algebra: MultiMatrixAlgebra,
        dim: usize,
        left_units: Vec<CMat>,
        right_units: Vec<CMat>,
        inner_table: Vec<AlgebraElement>,
    ) -> Result<Self> {
        let nu = algebra.dim();
        if left_units.len() != nu || right_units.len() != nu {
            return Err(Error::Structure("need one action matrix per matrix unit".into()));
        }
        for m in left_units.iter().chain(&right_units) {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Structure("action matrices must be dim x dim".into()));
            }
        }
        if inner_table.len() != dim * dim {
            return Err(Error::Structure("inner product table must have dim^2 entries".into()));
        }
        Ok(Correspondence { algebra, dim, left_units, right_units, inner_table })
    }

    /// The algebra viewed as the correspondence over itself, with
    /// <a,b> = a* b and multiplication actions.
    pub fn identity(algebra: &MultiMatrixAlgebra) -> Correspondence {
        let dim = algebra.dim();
        let units = algebra.units();
        let mut left_units = Vec::with_capacity(dim);
        let mut right_units = Vec::with_capacity(dim);
        for &(b, i, j) in &units {
            let u = algebra.unit(b, i, j);
            let mut lm = zeros(dim, dim);
            let mut rm = zeros(dim, dim);
            for (q, &(b2, k, l)) in units.iter().enumerate() {
                let basis = algebra.unit(b2, k, l);
                let lcol = u.mul(&basis).coords();
                let rcol = basis.mul(&u).coords();
                lm.set_column(q, &lcol);
                rm.set_column(q, &rcol);
            }
            left_units.push(lm);
            right_units.push(rm);
        }
        let mut inner_table = Vec::with_capacity(dim * dim);
        for &(b, i, j) in &units {
            let up = algebra.unit(b, i, j).adjoint();
            for &(b2, k, l) in &units {
                inner_table.push(up.mul(&algebra.unit(b2, k, l)));
            }
        }
        Correspondence { algebra: algebra.clone(), dim, left_units, right_units, inner_table }
    }

    /// The algebra with its left action twisted by a unital *-endomorphism:
    /// a . x = alpha(a) x, x . a = x a, <x,y> = x* y.
    pub fn twisted_by(
        algebra: &MultiMatrixAlgebra,
        alpha: &crate::algebra::Endomorphism,
    ) -> Correspondence {
        let base = Correspondence::identity(algebra);
        let units = algebra.units();
        let left_units = units
            .iter()
            .map(|&(b, i, j)| {
                let img = alpha.apply(&algebra.unit(b, i, j));
                // multiplication by alpha(unit) from the left
                let coords = img.coords();
                let mut m = zeros(base.dim, base.dim);
                for (idx, cf) in coords.iter().enumerate() {
                    if cf.norm() > 0.0 {
                        m += base.left_units[idx].map(|x| x * cf);
                    }
                }
                m
            })
            .collect();
        Correspondence { left_units, ..base }
    }

    /// Directed-graph correspondence over C^{nv}: one generator per edge,
    /// left action supported at the range vertex, right action at the source,
    /// <e,e> the source vertex projection.
    pub fn from_graph(nv: usize, edges: &[(usize, usize)]) -> Result<Correspondence> {
        let algebra = MultiMatrixAlgebra::new(vec![1; nv])?;
        for &(s, r) in edges {
            if s >= nv || r >= nv {
                return Err(Error::Structure("edge endpoint out of range".into()));
            }
        }
        let dim = edges.len();
        let mut left_units = Vec::new();
        let mut right_units = Vec::new();
        for v in 0..nv {
            let lm = CMat::from_fn(dim, dim, |a, b| {
                if a == b && edges[a].1 == v { c(1.0, 0.0) } else { c(0.0, 0.0) }
            });
            let rm = CMat::from_fn(dim, dim, |a, b| {
                if a == b && edges[a].0 == v { c(1.0, 0.0) } else { c(0.0, 0.0) }
            });
            left_units.push(lm);
            right_units.push(rm);
        }
        let mut inner_table = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let mut mask = vec![false; nv];
                if a == b {
                    mask[edges[a].0] = true;
                }
                inner_table.push(algebra.central_projection(&mask));
            }
        }
        Ok(Correspondence { algebra, dim, left_units, right_units, inner_table })
    }

    /// Free correspondence C^n over the scalars.
    pub fn free(n: usize) -> Correspondence {
        Correspondence::from_graph(1, &vec![(0, 0); n]).expect("free module")
    }

    pub fn left_unit(&self, idx: usize) -> &CMat {
        &self.left_units[idx]
    }

    pub fn right_unit(&self, idx: usize) -> &CMat {
        &self.right_units[idx]
    }

    pub fn left(&self, a: &AlgebraElement) -> CMat {
        let coords = a.coords();
        let mut m = zeros(self.dim, self.dim);
        for (idx, cf) in coords.iter().enumerate() {
            if cf.norm() > 0.0 {
                m += self.left_units[idx].map(|x| x * cf);
            }
        }
        m
    }

    pub fn right(&self, a: &AlgebraElement) -> CMat {
        let coords = a.coords();
        let mut m = zeros(self.dim, self.dim);
        for (idx, cf) in coords.iter().enumerate() {
            if cf.norm() > 0.0 {
                m += self.right_units[idx].map(|x| x * cf);
            }
        }
        m
    }

    pub fn inner(&self, p: usize, q: usize) -> &AlgebraElement {
        &self.inner_table[p * self.dim + q]
    }

    /// <x, y> for coordinate vectors, conjugate linear in x.
    pub fn inner_of(&self, x: &CVec, y: &CVec) -> AlgebraElement {
        let mut out = self.algebra.zero();
        for p in 0..self.dim {
            for q in 0..self.dim {
                let cf = x[p].conj() * y[q];
                if cf.norm() > 0.0 {
                    out = out.add(&self.inner(p, q).scale(cf));
                }
            }
        }
        out
    }

    pub fn vector_norm(&self, x: &CVec) -> f64 {
        self.inner_of(x, x).norm().sqrt()
    }

    /// Structural axioms: module actions, adjointability, positivity.
    /// Returns the worst residual over all checks; `seed` drives random
    /// spot checks on linear combinations.
    pub fn validate(&self, tol: &Tol, seed: u64) -> Result<f64> {
        let units = self.algebra.units();
        let idx = |b: usize, i: usize, j: usize| self.algebra.unit_index(b, i, j);
        let mut worst = 0.0f64;
        // Left action is a unital homomorphism, right action a unital
        // antihomomorphism in composition order.
        for (p, &(b, i, j)) in units.iter().enumerate() {
            for (q, &(b2, k, l)) in units.iter().enumerate() {
                let lp = &self.left_units[p] * &self.left_units[q];
                let le = if b == b2 && j == k {
                    self.left_units[idx(b, i, l)].clone()
                } else {
                    zeros(self.dim, self.dim)
                };
                worst = worst.max(op_norm(&(lp - le)));
                let rp = &self.right_units[q] * &self.right_units[p];
                let re = if b == b2 && j == k {
                    self.right_units[idx(b, i, l)].clone()
                } else {
                    zeros(self.dim, self.dim)
                };
                worst = worst.max(op_norm(&(rp - re)));
            }
        }
        let one = self.algebra.identity();
        worst = worst.max(op_norm(&(self.left(&one) - eye(self.dim))));
        worst = worst.max(op_norm(&(self.right(&one) - eye(self.dim))));

        // Conjugate symmetry of the inner product table.
        for p in 0..self.dim {
            for q in 0..self.dim {
                let diff = self.inner(p, q).adjoint().sub(self.inner(q, p));
                worst = worst.max(diff.norm());
            }
        }

        // Positivity of [<e_p, e_q>] as an element of M_dim(M).
        for (blk, &nb) in self.algebra.block_dims().iter().enumerate() {
            if self.dim == 0 {
                break;
            }
            let big = CMat::from_fn(self.dim * nb, self.dim * nb, |r, s| {
                let (p, i) = (r / nb, r % nb);
                let (q, j) = (s / nb, s % nb);
                self.inner(p, q).block(blk)[(i, j)]
            });
            let (vals, _) = herm_eigen(&big);
            let maxv = vals.first().copied().unwrap_or(0.0).max(1.0);
            if let Some(&minv) = vals.last() {
                if minv < -tol.op(self.dim * nb) * maxv {
                    return Err(Error::Validation(format!(
                        "inner product fails positivity on block {blk}: eigenvalue {minv:.3e}"
                    )));
                }
            }
        }

        // Module compatibilities on units.
        for (u, &(b, i, j)) in units.iter().enumerate() {
            let a = self.algebra.unit(b, i, j);
            let astar = a.adjoint();
            let la = &self.left_units[u];
            let la_star = self.left(&astar);
            let ra = &self.right_units[u];
            for p in 0..self.dim {
                for q in 0..self.dim {
                    // <a x_p, x_q> = <x_p, a* x_q>
                    let mut lhs = self.algebra.zero();
                    for t in 0..self.dim {
                        let cf = la[(t, p)].conj();
                        if cf.norm() > 0.0 {
                            lhs = lhs.add(&self.inner(t, q).scale(cf));
                        }
                    }
                    let mut rhs = self.algebra.zero();
                    for t in 0..self.dim {
                        let cf = la_star[(t, q)];
                        if cf.norm() > 0.0 {
                            rhs = rhs.add(&self.inner(p, t).scale(cf));
                        }
                    }
                    worst = worst.max(lhs.sub(&rhs).norm());
                    // <x_p, x_q a> = <x_p, x_q> a
                    let mut lhs2 = self.algebra.zero();
                    for t in 0..self.dim {
                        let cf = ra[(t, q)];
                        if cf.norm() > 0.0 {
                            lhs2 = lhs2.add(&self.inner(p, t).scale(cf));
                        }
                    }
                    let rhs2 = self.inner(p, q).mul(&a);
                    worst = worst.max(lhs2.sub(&rhs2).norm());
                }
            }
        }

        // Random spot checks of sesquilinearity through coordinates.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            if self.dim == 0 {
                break;
            }
            let x = random_cvec(&mut rng, self.dim);
            let y = random_cvec(&mut rng, self.dim);
            let s = c(0.3, -0.7);
            let lhs = self.inner_of(&x, &y.map(|v| v * s));
            let rhs = self.inner_of(&x, &y).scale(s);
            worst = worst.max(lhs.sub(&rhs).norm());
        }

        let thresh = tol.op(self.dim.max(self.algebra.dim()));
        if worst > thresh {
            return Err(Error::Validation(format!(
                "correspondence axioms fail by {worst:.3e} (threshold {thresh:.3e})"
            )));
        }
        Ok(worst)
    }
}

/// Tensor product E (x) F after quotienting the null space of the induced
/// inner product; `q` maps old product coordinates onto the quotient and `r`
/// embeds the quotient back as the orthogonal section.
#[derive(Debug, Clone)]
pub struct TensorData {
    pub corr: Correspondence,
    pub q: CMat,
    pub r: CMat,
}

pub fn tensor(e: &Correspondence, f: &Correspondence, tol: &Tol) -> Result<TensorData> {
    if e.algebra != f.algebra {
        return Err(Error::Structure("tensor factors over different algebras".into()));
    }
    let alg = e.algebra.clone();
    let pre = e.dim * f.dim;
    // Inner products on elementary tensors:
    // <x_p (x) y_q, x_p' (x) y_q'> = <y_q, phi(<x_p, x_p'>) y_q'>.
    let mut pre_inner: Vec<AlgebraElement> = Vec::with_capacity(pre * pre);
    for p in 0..e.dim {
        for q in 0..f.dim {
            for p2 in 0..e.dim {
                let phi = f.left(e.inner(p, p2));
                for q2 in 0..f.dim {
                    let mut acc = alg.zero();
                    for t in 0..f.dim {
                        let cf = phi[(t, q2)];
                        if cf.norm() > 0.0 {
                            acc = acc.add(&f.inner(q, t).scale(cf));
                        }
                    }
                    let _ = (p, q);
                    pre_inner.push(acc);
                }
            }
        }
    }
    let entry = |u: usize, v: usize| &pre_inner[u * pre + v];

    // Scalar Gram via traces decides the null space.
    let gram = CMat::from_fn(pre, pre, |u, v| entry(u, v).trace());
    let basis = psd_range_basis(&gram, tol.null_rel);
    let dim = basis.ncols();

    let mut inner_table = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut acc = alg.zero();
            for u in 0..pre {
                for v in 0..pre {
                    let cf = basis[(u, a)].conj() * basis[(v, b)];
                    if cf.norm() > 1e-300 {
                        acc = acc.add(&entry(u, v).scale(cf));
                    }
                }
            }
            inner_table.push(acc);
        }
    }
    let q = basis.adjoint();
    let r = basis.clone();
    let mut left_units = Vec::with_capacity(alg.dim());
    let mut right_units = Vec::with_capacity(alg.dim());
    for u in 0..alg.dim() {
        left_units.push(&q * kron(e.left_unit(u), &eye(f.dim)) * &r);
        right_units.push(&q * kron(&eye(e.dim), f.right_unit(u)) * &r);
    }
    let corr = Correspondence { algebra: alg, dim, left_units, right_units, inner_table };
    Ok(TensorData { corr, q, r })
}

/// Hilbert space E (x)_sigma H: the Gram factorization, the induced left
/// action, and tensoring maps.
#[derive(Debug, Clone)]
pub struct LocalizedSpace {
    /// Generator count of the correspondence upstairs.
    pub amb: usize,
    /// Dimension of the representation carrier.
    pub h: usize,
    /// Dimension of the localized space.
    pub dim: usize,
    /// Class map from product coordinates (generator-major) onto the space;
    /// factor^* factor reproduces the Gram matrix.
    pub factor: CMat,
    /// Right inverse of `factor` with range inside the Gram's support.
    pub pinv: CMat,
    left_units: Vec<CMat>,
}

pub fn localize(corr: &Correspondence, rep: &Representation, tol: &Tol) -> Result<LocalizedSpace> {
    let h = rep.carrier_dim();
    let amb = corr.dim;
    let n = amb * h;
    let mut gram = zeros(n, n);
    for p in 0..amb {
        for q in 0..amb {
            let blockpq = rep.matrix(corr.inner(p, q));
            gram.view_mut((p * h, q * h), (h, h)).copy_from(&blockpq);
        }
    }
    let (vals, vecs) = herm_eigen(&gram);
    let maxv = vals.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&minv) = vals.last() {
        if minv < -tol.op(n.max(1)) * maxv.max(1.0) {
            return Err(Error::Validation(format!(
                "localization Gram has negative eigenvalue {minv:.3e}"
            )));
        }
    }
    let cutoff = tol.null_rel * maxv;
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cutoff && vals[i] > 0.0).collect();
    let dim = keep.len();
    let mut factor = zeros(dim, n);
    let mut pinv = zeros(n, dim);
    for (row, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for r in 0..n {
            factor[(row, r)] = vecs[(r, i)].conj() * s;
            pinv[(r, row)] = vecs[(r, i)] / s;
        }
    }
    let left_units = (0..corr.algebra.dim())
        .map(|u| &factor * kron(corr.left_unit(u), &eye(h)) * &pinv)
        .collect();
    Ok(LocalizedSpace { amb, h, dim, factor, pinv, left_units })
}

impl LocalizedSpace {
    /// Induced action of a on the localized space (phi(a) tensor I).
    pub fn left(&self, a: &AlgebraElement) -> CMat {
        let coords = a.coords();
        let mut m = zeros(self.dim, self.dim);
        for (idx, cf) in coords.iter().enumerate() {
            if cf.norm() > 0.0 {
                m += self.left_units[idx].map(|x| x * cf);
            }
        }
        m
    }

    pub fn left_unit(&self, idx: usize) -> &CMat {
        &self.left_units[idx]
    }

    /// Tensoring map h -> class(xi (x) h) for a fixed coordinate vector xi.
    pub fn lxi(&self, xi: &CVec) -> CMat {
        let ximat = CMat::from_fn(self.amb, 1, |r, _| xi[r]);
        &self.factor * kron(&ximat, &eye(self.h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cre;

    #[test]
    fn identity_correspondence_validates() {
        let alg = MultiMatrixAlgebra::new(vec![2]).unwrap();
        let corr = Correspondence::identity(&alg);
        let res = corr.validate(&Tol::default(), 1).unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn graph_correspondence_validates_and_localizes() {
        // loop at vertex 0 plus an edge 0 -> 1
        let corr = Correspondence::from_graph(2, &[(0, 0), (0, 1)]).unwrap();
        corr.validate(&Tol::default(), 2).unwrap();
        let rep = Representation::multiplicity_one(&corr.algebra);
        let loc = localize(&corr, &rep, &Tol::default()).unwrap();
        // each edge contributes only the source-vertex component of H
        assert_eq!(loc.dim, 2);
        let check = &loc.factor * loc.factor.adjoint();
        assert_eq!(check.nrows(), 2);
    }

    #[test]
    fn localize_identity_matches_carrier() {
        let alg = MultiMatrixAlgebra::new(vec![2]).unwrap();
        let corr = Correspondence::identity(&alg);
        let rep = Representation::multiplicity_one(&alg);
        let loc = localize(&corr, &rep, &Tol::default()).unwrap();
        assert_eq!(loc.dim, 2);
        // left action transported to the localization is a representation
        let a01 = loc.left(&alg.unit(0, 0, 1));
        let a10 = loc.left(&alg.unit(0, 1, 0));
        let a00 = loc.left(&alg.unit(0, 0, 0));
        assert!(op_norm(&(&a01 * &a10 - a00)) < 1e-10);
    }

    #[test]
    fn tensor_of_free_modules_multiplies_dimensions() {
        let e = Correspondence::free(2);
        let t = tensor(&e, &e, &Tol::default()).unwrap();
        assert_eq!(t.corr.dim, 4);
        t.corr.validate(&Tol::default(), 3).unwrap();
        let qr = &t.q * &t.r;
        assert!(op_norm(&(qr - eye(4))) < 1e-12);
    }

    #[test]
    fn tensor_of_graph_counts_paths() {
        let corr = Correspondence::from_graph(2, &[(0, 0), (0, 1)]).unwrap();
        let t = tensor(&corr, &corr, &Tol::default()).unwrap();
        // length-two paths: loop-loop and loop-then-edge
        assert_eq!(t.corr.dim, 2);
        t.corr.validate(&Tol::default(), 4).unwrap();
    }

    #[test]
    fn tensor_with_identity_preserves_dimension() {
        let alg = MultiMatrixAlgebra::new(vec![2]).unwrap();
        let m = Correspondence::identity(&alg);
        let t = tensor(&m, &m, &Tol::default()).unwrap();
        assert_eq!(t.corr.dim, 4);
    }

    #[test]
    fn lxi_respects_gram() {
        let corr = Correspondence::free(2);
        let alg = corr.algebra.clone();
        let rep = Representation::new(alg, vec![3]).unwrap();
        let loc = localize(&corr, &rep, &Tol::default()).unwrap();
        assert_eq!(loc.dim, 6);
        let xi = CVec::from_vec(vec![cre(1.0), cre(2.0)]);
        let lx = loc.lxi(&xi);
        // <xi (x) h, xi (x) h> = |xi|^2 |h|^2 over the scalars
        let g = lx.adjoint() * &lx;
        assert!(op_norm(&(g - eye(3).scale(5.0))) < 1e-12);
    }
}

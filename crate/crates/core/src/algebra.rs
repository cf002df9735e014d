//! Finite multi-matrix algebras, their normal representations in canonical
//! multiplicity form, commutants, and block supplements.

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, eye, kron, op_norm, range_basis, zeros, CMat, CVec,
};
use crate::tol::Tol;
use num_complex::Complex64;

/// Direct sum of full matrix blocks M_{n_1} + ... + M_{n_B}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiMatrixAlgebra {
    blocks: Vec<usize>,
}

impl MultiMatrixAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Structure("algebra needs at least one block".into()));
        }
        if blocks.iter().any(|&n| n == 0) {
            return Err(Error::Structure("zero-dimensional blocks are not allowed".into()));
        }
        Ok(MultiMatrixAlgebra { blocks })
    }

    pub fn scalar() -> Self {
        MultiMatrixAlgebra { blocks: vec![1] }
    }

    pub fn nblocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self, b: usize) -> usize {
        self.blocks[b]
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.blocks
    }

    /// Linear dimension: sum of n_b^2.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    fn unit_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|n| n * n).sum()
    }

    pub fn unit_index(&self, b: usize, i: usize, j: usize) -> usize {
        self.unit_offset(b) + i * self.blocks[b] + j
    }

    /// Matrix units in coordinate order: block by block, row-major.
    pub fn units(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        for (b, &n) in self.blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out.push((b, i, j));
                }
            }
        }
        out
    }

    pub fn unit(&self, b: usize, i: usize, j: usize) -> AlgebraElement {
        let mut blocks: Vec<CMat> = self.blocks.iter().map(|&n| zeros(n, n)).collect();
        blocks[b][(i, j)] = Complex64::new(1.0, 0.0);
        AlgebraElement { algebra: self.clone(), blocks }
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| eye(n)).collect(),
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.blocks.iter().map(|&n| zeros(n, n)).collect(),
        }
    }

    pub fn element(&self, blocks: Vec<CMat>) -> Result<AlgebraElement> {
        if blocks.len() != self.blocks.len() {
            return Err(Error::Structure("wrong number of blocks".into()));
        }
        for (b, m) in blocks.iter().enumerate() {
            if m.nrows() != self.blocks[b] || m.ncols() != self.blocks[b] {
                return Err(Error::Structure(format!(
                    "block {b} must be {0}x{0}, got {1}x{2}",
                    self.blocks[b],
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(AlgebraElement { algebra: self.clone(), blocks })
    }

    pub fn from_coords(&self, v: &CVec) -> Result<AlgebraElement> {
        if v.len() != self.dim() {
            return Err(Error::Structure("coordinate vector has wrong length".into()));
        }
        let mut out = self.zero();
        for (idx, (b, i, j)) in self.units().into_iter().enumerate() {
            out.blocks[b][(i, j)] = v[idx];
        }
        Ok(out)
    }

    /// Central projection supported on the blocks flagged in `mask`.
    pub fn central_projection(&self, mask: &[bool]) -> AlgebraElement {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(b, &n)| if mask[b] { eye(n) } else { zeros(n, n) })
            .collect();
        AlgebraElement { algebra: self.clone(), blocks }
    }
}

/// Element of a multi-matrix algebra, stored block by block.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub algebra: MultiMatrixAlgebra,
    pub blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn block(&self, b: usize) -> &CMat {
        &self.blocks[b]
    }

    pub fn coords(&self) -> CVec {
        let mut v = CVec::zeros(self.algebra.dim());
        for (idx, (b, i, j)) in self.algebra.units().into_iter().enumerate() {
            v[idx] = self.blocks[b][(i, j)];
        }
        v
    }

    pub fn mul(&self, other: &AlgebraElement) -> AlgebraElement {
        let blocks =
            self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect();
        AlgebraElement { algebra: self.algebra.clone(), blocks }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        let blocks =
            self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect();
        AlgebraElement { algebra: self.algebra.clone(), blocks }
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        let blocks =
            self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect();
        AlgebraElement { algebra: self.algebra.clone(), blocks }
    }

    pub fn scale(&self, s: Complex64) -> AlgebraElement {
        let blocks = self.blocks.iter().map(|a| a.map(|x| x * s)).collect();
        AlgebraElement { algebra: self.algebra.clone(), blocks }
    }

    pub fn adjoint(&self) -> AlgebraElement {
        let blocks = self.blocks.iter().map(|a| a.adjoint()).collect();
        AlgebraElement { algebra: self.algebra.clone(), blocks }
    }

    /// C*-norm: the largest block operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| op_norm(b)).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }
}

/// Normal representation in canonical form: multiplicities per block plus a
/// unitary change of basis from the canonical carrier
/// sum_b (C^{n_b} tensor C^{m_b}) to the actual carrier space.
#[derive(Debug, Clone)]
pub struct Representation {
    pub algebra: MultiMatrixAlgebra,
    pub mult: Vec<usize>,
    /// None means the carrier is the canonical one with the identity basis.
    pub basis_change: Option<CMat>,
}

impl Representation {
    pub fn new(algebra: MultiMatrixAlgebra, mult: Vec<usize>) -> Result<Self> {
        if mult.len() != algebra.nblocks() {
            return Err(Error::Structure("multiplicity list length mismatch".into()));
        }
        Ok(Representation { algebra, mult, basis_change: None })
    }

    pub fn with_basis(
        algebra: MultiMatrixAlgebra,
        mult: Vec<usize>,
        basis_change: CMat,
    ) -> Result<Self> {
        let rep = Representation::new(algebra, mult)?;
        let d = rep.carrier_dim();
        if basis_change.nrows() != d || basis_change.ncols() != d {
            return Err(Error::Structure(format!(
                "basis change must be {d}x{d}, got {}x{}",
                basis_change.nrows(),
                basis_change.ncols()
            )));
        }
        Ok(Representation { basis_change: Some(basis_change), ..rep })
    }

    /// Multiplicity-one representation (each block acting once).
    pub fn multiplicity_one(algebra: &MultiMatrixAlgebra) -> Representation {
        Representation {
            algebra: algebra.clone(),
            mult: vec![1; algebra.nblocks()],
            basis_change: None,
        }
    }

    pub fn carrier_dim(&self) -> usize {
        self.algebra
            .block_dims()
            .iter()
            .zip(&self.mult)
            .map(|(&n, &m)| n * m)
            .sum()
    }

    pub fn faithful(&self) -> bool {
        self.mult.iter().all(|&m| m > 0)
    }

    fn carrier_offset(&self, b: usize) -> usize {
        self.algebra.block_dims()[..b]
            .iter()
            .zip(&self.mult[..b])
            .map(|(&n, &m)| n * m)
            .sum()
    }

    /// Canonical coordinate of basis vector (block b, row index i, copy mu).
    pub fn canonical_pos(&self, b: usize, i: usize, mu: usize) -> usize {
        self.carrier_offset(b) + i * self.mult[b] + mu
    }

    fn canonical_matrix(&self, a: &AlgebraElement) -> CMat {
        let parts: Vec<CMat> = a
            .blocks
            .iter()
            .zip(&self.mult)
            .map(|(blk, &m)| kron(blk, &eye(m)))
            .collect();
        let refs: Vec<&CMat> = parts.iter().collect();
        block_diag(&refs)
    }

    pub fn matrix(&self, a: &AlgebraElement) -> CMat {
        let canon = self.canonical_matrix(a);
        match &self.basis_change {
            None => canon,
            Some(w) => w * canon * w.adjoint(),
        }
    }

    pub fn unit_matrix(&self, b: usize, i: usize, j: usize) -> CMat {
        self.matrix(&self.algebra.unit(b, i, j))
    }

    pub fn identity_matrix(&self) -> CMat {
        eye(self.carrier_dim())
    }

    /// Transport by a unitary z mapping this carrier onto a new space;
    /// the result represents a on the new space as z pi(a) z^*.
    pub fn conjugated(&self, z: &CMat) -> Representation {
        let w = match &self.basis_change {
            None => z.clone(),
            Some(w0) => z * w0,
        };
        Representation {
            algebra: self.algebra.clone(),
            mult: self.mult.clone(),
            basis_change: Some(w),
        }
    }

    /// Direct sum acting on the concatenation of the carriers, so that the
    /// sum's matrices are exactly block diagonal in the given order.
    pub fn direct_sum(parts: &[&Representation]) -> Result<Representation> {
        if parts.is_empty() {
            return Err(Error::Structure("direct sum needs at least one part".into()));
        }
        let algebra = parts[0].algebra.clone();
        for p in parts {
            if p.algebra != algebra {
                return Err(Error::Structure("direct sum parts over different algebras".into()));
            }
        }
        let nb = algebra.nblocks();
        let mult: Vec<usize> =
            (0..nb).map(|b| parts.iter().map(|p| p.mult[b]).sum()).collect();
        let sum = Representation::new(algebra.clone(), mult.clone())?;
        let total: usize = parts.iter().map(|p| p.carrier_dim()).sum();
        let mut w = zeros(total, total);
        let mut part_offsets = Vec::with_capacity(parts.len());
        let mut acc = 0usize;
        for p in parts {
            part_offsets.push(acc);
            acc += p.carrier_dim();
        }
        for b in 0..nb {
            let n = algebra.block_dim(b);
            for i in 0..n {
                let mut mu_global = 0usize;
                for (t, p) in parts.iter().enumerate() {
                    for mu_t in 0..p.mult[b] {
                        let col = sum.canonical_pos(b, i, mu_global);
                        let local = p.canonical_pos(b, i, mu_t);
                        match &p.basis_change {
                            None => {
                                w[(part_offsets[t] + local, col)] = Complex64::new(1.0, 0.0);
                            }
                            Some(wp) => {
                                for r in 0..p.carrier_dim() {
                                    w[(part_offsets[t] + r, col)] = wp[(r, local)];
                                }
                            }
                        }
                        mu_global += 1;
                    }
                }
            }
        }
        Representation::with_basis(algebra, mult, w)
    }

    /// Recover canonical form from the matrices of all matrix units.
    /// Returns the representation and the worst reconstruction residual.
    pub fn from_action(
        algebra: &MultiMatrixAlgebra,
        unit_images: &[CMat],
        tol: &Tol,
    ) -> Result<(Representation, f64)> {
        let units = algebra.units();
        if unit_images.len() != units.len() {
            return Err(Error::Structure(format!(
                "expected {} unit images, got {}",
                units.len(),
                unit_images.len()
            )));
        }
        let n = unit_images.first().map(|m| m.nrows()).unwrap_or(0);
        for m in unit_images {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Structure("unit images must be square of equal size".into()));
            }
        }
        let thresh = tol.op(n.max(1));
        let idx = |b: usize, i: usize, j: usize| algebra.unit_index(b, i, j);

        // *-representation axioms on matrix units.
        let mut axiom = 0.0f64;
        for (p, &(b, i, j)) in units.iter().enumerate() {
            let adj_diff = op_norm(&(unit_images[p].adjoint() - &unit_images[idx(b, j, i)]));
            axiom = axiom.max(adj_diff);
            for (q, &(b2, k, l)) in units.iter().enumerate() {
                let prod = &unit_images[p] * &unit_images[q];
                let expect = if b == b2 && j == k {
                    unit_images[idx(b, i, l)].clone()
                } else {
                    zeros(n, n)
                };
                axiom = axiom.max(op_norm(&(prod - expect)));
            }
        }
        let mut unital = zeros(n, n);
        for (b, &nb) in algebra.block_dims().iter().enumerate() {
            for i in 0..nb {
                unital += &unit_images[idx(b, i, i)];
            }
        }
        axiom = axiom.max(op_norm(&(unital - eye(n))));
        if axiom > thresh {
            return Err(Error::Validation(format!(
                "unit images fail *-representation axioms by {axiom:.3e}"
            )));
        }

        // Multiplicities from the traces of the block identities.
        let mut mult = Vec::with_capacity(algebra.nblocks());
        for (b, &nb) in algebra.block_dims().iter().enumerate() {
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..nb {
                tr += unit_images[idx(b, i, i)].trace();
            }
            let m = (tr.re / nb as f64).round();
            if (tr.re - m * nb as f64).abs() > thresh * nb as f64 || tr.im.abs() > thresh {
                return Err(Error::Validation(format!(
                    "trace of block {b} identity is {tr}, not an integer multiple of {nb}"
                )));
            }
            mult.push(m as f64 as usize);
        }
        let rep = Representation::new(algebra.clone(), mult.clone())?;
        if rep.carrier_dim() != n {
            return Err(Error::Validation(format!(
                "multiplicities account for dimension {}, carrier has {n}",
                rep.carrier_dim()
            )));
        }

        // Basis: orthonormal basis of range pi(E_b^{00}), shifted by pi(E_b^{i0}).
        let mut w = zeros(n, n);
        for (b, &nb) in algebra.block_dims().iter().enumerate() {
            if mult[b] == 0 {
                continue;
            }
            let corner = &unit_images[idx(b, 0, 0)];
            let basis = range_basis(corner, tol.null_rel);
            if basis.ncols() != mult[b] {
                return Err(Error::Validation(format!(
                    "range of corner unit in block {b} has rank {}, expected {}",
                    basis.ncols(),
                    mult[b]
                )));
            }
            for i in 0..nb {
                let shifted = &unit_images[idx(b, i, 0)] * &basis;
                for mu in 0..mult[b] {
                    let col = rep.canonical_pos(b, i, mu);
                    for r in 0..n {
                        w[(r, col)] = shifted[(r, mu)];
                    }
                }
            }
        }
        let unitary_res = op_norm(&(w.adjoint() * &w - eye(n)));
        if unitary_res > thresh.max(1e-8) {
            return Err(Error::Numerical(format!(
                "recovered basis is not unitary (residual {unitary_res:.3e})"
            )));
        }
        let out = Representation::with_basis(algebra.clone(), mult, w)?;
        let mut res = unitary_res;
        for (p, &(b, i, j)) in units.iter().enumerate() {
            res = res.max(op_norm(&(out.unit_matrix(b, i, j) - &unit_images[p])));
        }
        Ok((out, res.max(axiom)))
    }
}

/// Commutant of a representation: the multi-matrix algebra of surviving
/// multiplicities together with its representation on the same carrier.
#[derive(Debug, Clone)]
pub struct CommutantData {
    pub algebra: MultiMatrixAlgebra,
    pub rep: Representation,
    /// Original block index behind each commutant block.
    pub source_blocks: Vec<usize>,
}

pub fn commutant(rep: &Representation) -> Result<CommutantData> {
    let source_blocks: Vec<usize> =
        (0..rep.algebra.nblocks()).filter(|&b| rep.mult[b] > 0).collect();
    if source_blocks.is_empty() {
        return Err(Error::Structure("zero representation has no unital commutant".into()));
    }
    let blocks: Vec<usize> = source_blocks.iter().map(|&b| rep.mult[b]).collect();
    let algebra = MultiMatrixAlgebra::new(blocks)?;
    let comm_mult: Vec<usize> =
        source_blocks.iter().map(|&b| rep.algebra.block_dim(b)).collect();
    let comm_rep_plain = Representation::new(algebra.clone(), comm_mult.clone())?;

    // In the carrier coordinates of `rep`, a commutant element acts as
    // I_{n_b} tensor R_b on each block; the canonical form of the commutant
    // representation has R_b tensor I_{n_b}, so the basis change is the
    // per-block index swap applied after the original basis change.
    let d = rep.carrier_dim();
    let mut swap = zeros(d, d);
    for (t, &b) in source_blocks.iter().enumerate() {
        let n = rep.algebra.block_dim(b);
        let m = rep.mult[b];
        for i in 0..n {
            for mu in 0..m {
                let row = rep.canonical_pos(b, i, mu);
                let col = comm_rep_plain.canonical_pos(t, mu, i);
                swap[(row, col)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    let w = match &rep.basis_change {
        None => swap,
        Some(w0) => w0 * swap,
    };
    let comm_rep = Representation::with_basis(algebra.clone(), comm_mult, w)?;
    Ok(CommutantData { algebra, rep: comm_rep, source_blocks })
}

/// Blocks annihilated by both representations.
pub fn kernel_mask(t1: &Representation, t2: &Representation) -> Vec<bool> {
    t1.mult.iter().zip(&t2.mult).map(|(&a, &b)| a == 0 && b == 0).collect()
}

/// Faithful supplement tau = tau0 + t1 + t2 acting on the concatenation of
/// the three carriers, with tau0 of multiplicity one on the common kernel.
#[derive(Debug, Clone)]
pub struct SupplementData {
    pub tau: Representation,
    pub mask: Vec<bool>,
    /// Column-embedding of each part's carrier into the sum, order
    /// (tau0, t1, t2).
    pub embeds: [CMat; 3],
}

pub fn supplement(t1: &Representation, t2: &Representation) -> Result<SupplementData> {
    if t1.algebra != t2.algebra {
        return Err(Error::Structure("supplement parts over different algebras".into()));
    }
    let mask = kernel_mask(t1, t2);
    let mult0: Vec<usize> = mask.iter().map(|&k| if k { 1 } else { 0 }).collect();
    let tau0 = Representation::new(t1.algebra.clone(), mult0)?;
    let tau = Representation::direct_sum(&[&tau0, t1, t2])?;
    let dims = [tau0.carrier_dim(), t1.carrier_dim(), t2.carrier_dim()];
    let total: usize = dims.iter().sum();
    let mut embeds: Vec<CMat> = Vec::with_capacity(3);
    let mut off = 0usize;
    for &d in &dims {
        let mut e = zeros(total, d);
        for k in 0..d {
            e[(off + k, k)] = Complex64::new(1.0, 0.0);
        }
        embeds.push(e);
        off += d;
    }
    let embeds: [CMat; 3] = embeds.try_into().unwrap();
    Ok(SupplementData { tau, mask, embeds })
}

impl SupplementData {
    /// Orthogonal projection of the sum carrier onto part i (0, 1, or 2).
    pub fn projection(&self, i: usize) -> CMat {
        &self.embeds[i] * self.embeds[i].adjoint()
    }
}

/// Unital *-endomorphism of a multi-matrix algebra, stored through the
/// images of all matrix units.
#[derive(Debug, Clone)]
pub struct Endomorphism {
    pub algebra: MultiMatrixAlgebra,
    unit_images: Vec<AlgebraElement>,
}

impl Endomorphism {
    pub fn new(
        algebra: MultiMatrixAlgebra,
        unit_images: Vec<AlgebraElement>,
        tol: &Tol,
    ) -> Result<Self> {
        let units = algebra.units();
        if unit_images.len() != units.len() {
            return Err(Error::Structure("endomorphism needs one image per matrix unit".into()));
        }
        let this = Endomorphism { algebra: algebra.clone(), unit_images };
        let thresh = tol.op(algebra.dim());
        let mut worst = 0.0f64;
        for (p, &(b, i, j)) in units.iter().enumerate() {
            let adj = this.unit_images[p]
                .adjoint()
                .sub(&this.unit_images[algebra.unit_index(b, j, i)])
                .norm();
            worst = worst.max(adj);
            for (q, &(b2, k, l)) in units.iter().enumerate() {
                let prod = this.unit_images[p].mul(&this.unit_images[q]);
                let expect = if b == b2 && j == k {
                    this.unit_images[algebra.unit_index(b, i, l)].clone()
                } else {
                    algebra.zero()
                };
                worst = worst.max(prod.sub(&expect).norm());
            }
        }
        worst = worst.max(this.apply(&algebra.identity()).sub(&algebra.identity()).norm());
        if worst > thresh {
            return Err(Error::Validation(format!(
                "unit images fail *-endomorphism axioms by {worst:.3e}"
            )));
        }
        Ok(this)
    }

    pub fn identity_map(algebra: &MultiMatrixAlgebra, tol: &Tol) -> Result<Self> {
        let images =
            algebra.units().into_iter().map(|(b, i, j)| algebra.unit(b, i, j)).collect();
        Endomorphism::new(algebra.clone(), images, tol)
    }

    pub fn apply(&self, a: &AlgebraElement) -> AlgebraElement {
        let coords = a.coords();
        let mut out = self.algebra.zero();
        for (idx, img) in self.unit_images.iter().enumerate() {
            if coords[idx].norm() > 0.0 {
                out = out.add(&img.scale(coords[idx]));
            }
        }
        out
    }

    /// k-fold composition; k = 0 is the identity map.
    pub fn apply_power(&self, a: &AlgebraElement, k: usize) -> AlgebraElement {
        let mut out = a.clone();
        for _ in 0..k {
            out = self.apply(&out);
        }
        out
    }
}

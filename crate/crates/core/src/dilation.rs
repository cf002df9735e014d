//! Minimal isometric dilation of a covariant representation on the truncated
//! Fock space over the first defect, with the projection chain, wandering
//! subspaces, and the base wandering space identified with the second defect.

use crate::algebra::{AlgebraElement, Representation};
use crate::covrep::{CovariantRep, DefectData, ZeroVerdict};
use crate::error::{Error, Result};
use crate::fock::{e_map, fock_module, truncated_fock, ETensor, FockModule, DEFAULT_DIM_CAP};
use crate::linalg::{
    block_diag, eye, kron, op_norm, pinv, projection_residual, range_basis, zeros, CMat, CVec,
};
use crate::tol::Tol;

/// Layout of the dilation domain E (x) K as realized summands:
/// summand 0 is E (x) H, summand k+1 is E (x) grade_k realized one grade up.
#[derive(Debug, Clone)]
pub struct DomainLayout {
    pub offsets: Vec<usize>,
    pub dims: Vec<usize>,
    pub total: usize,
    pub ets: Vec<ETensor>,
}

#[derive(Debug, Clone)]
pub struct Dilation {
    pub rep: CovariantRep,
    pub defects: DefectData,
    pub level: usize,
    /// Fock module over tau1, built one grade above the ambient level so the
    /// domain summand E (x) grade_N has a realization.
    pub fockd: FockModule,
    pub h_dim: usize,
    pub k_dim: usize,
    pub vtilde: CMat,
    pub dom: DomainLayout,
}

pub fn dilate(rep: &CovariantRep, level: usize, tol: &Tol) -> Result<Dilation> {
    dilate_capped(rep, level, tol, DEFAULT_DIM_CAP)
}

pub fn dilate_capped(
    rep: &CovariantRep,
    level: usize,
    tol: &Tol,
    dim_cap: usize,
) -> Result<Dilation> {
    let defects = rep.defects(tol)?;
    let f = truncated_fock(&rep.corr, level + 1, tol, dim_cap)?;
    let fockd = fock_module(f, defects.tau1.clone(), tol)?;
    let h = rep.h();
    let k_dim = h + (0..=level).map(|k| fockd.grade_dim(k)).sum::<usize>();

    // domain: E (x) H followed by E (x) grade_k for k = 0..=level
    let mut dims = vec![rep.eh.dim];
    let mut ets = vec![rep.eh.as_etensor()];
    for k in 0..=level {
        dims.push(fockd.grade_dim(k + 1));
        ets.push(fockd.etensor(k));
    }
    let mut offsets = Vec::with_capacity(dims.len());
    let mut acc = 0usize;
    for &d in &dims {
        offsets.push(acc);
        acc += d;
    }
    let dom = DomainLayout { offsets, dims, total: acc, ets };

    let mut vtilde = zeros(k_dim, dom.total);
    // first column block: T into H, the defect into grade zero
    vtilde.view_mut((0, 0), (h, rep.eh.dim)).copy_from(&rep.ttilde);
    let vac_d = fockd.vac();
    let to_grade0 = &vac_d * (defects.d_basis.adjoint() * &defects.delta);
    let g0_off = h + fockd.grade_offset(0);
    vtilde
        .view_mut((g0_off, 0), (fockd.grade_dim(0), rep.eh.dim))
        .copy_from(&to_grade0);
    // shift blocks: E (x) grade_k lands identically in grade k+1, the top
    // summand is annihilated
    for k in 0..level {
        let rows = fockd.grade_dim(k + 1);
        let roff = h + fockd.grade_offset(k + 1);
        let coff = dom.offsets[k + 1];
        for r in 0..rows {
            vtilde[(roff + r, coff + r)] = crate::linalg::cre(1.0);
        }
    }

    Ok(Dilation { rep: rep.clone(), defects, level, fockd, h_dim: h, k_dim, vtilde, dom })
}

impl Dilation {
    /// Row range of part `p` of K: part 0 is H, part k+1 is Fock grade k.
    pub fn part_range(&self, p: usize) -> std::ops::Range<usize> {
        if p == 0 {
            0..self.h_dim
        } else {
            let k = p - 1;
            let off = self.h_dim + self.fockd.grade_offset(k);
            off..off + self.fockd.grade_dim(k)
        }
    }

    pub fn nparts(&self) -> usize {
        self.level + 2
    }

    /// Column embedding of H into K.
    pub fn embed_h(&self) -> CMat {
        let mut e = zeros(self.k_dim, self.h_dim);
        for i in 0..self.h_dim {
            e[(i, i)] = crate::linalg::cre(1.0);
        }
        e
    }

    /// Column embedding of Fock grade k into K.
    pub fn embed_grade(&self, k: usize) -> CMat {
        let mut e = zeros(self.k_dim, self.fockd.grade_dim(k));
        let off = self.h_dim + self.fockd.grade_offset(k);
        for i in 0..self.fockd.grade_dim(k) {
            e[(off + i, i)] = crate::linalg::cre(1.0);
        }
        e
    }

    /// The dilated representation of the algebra on K.
    pub fn rho(&self, a: &AlgebraElement) -> CMat {
        let mut parts = vec![self.rep.sigma.matrix(a)];
        for k in 0..=self.level {
            parts.push(self.fockd.locs[k].left(a));
        }
        let refs: Vec<&CMat> = parts.iter().collect();
        block_diag(&refs)
    }

    /// Induced action on the domain E (x) K.
    pub fn dom_phi(&self, a: &AlgebraElement) -> CMat {
        let mut parts = vec![self.rep.eh.left(a)];
        for k in 0..=self.level {
            parts.push(self.fockd.locs[k + 1].left(a));
        }
        let refs: Vec<&CMat> = parts.iter().collect();
        block_diag(&refs)
    }

    /// Isometry defect of V restricted to the summands that are not
    /// annihilated by the truncation (E (x) H and E (x) grade_k, k < N).
    pub fn isometry_residual(&self) -> f64 {
        let g = self.vtilde.adjoint() * &self.vtilde;
        let keep = self.dom.total - self.dom.dims[self.nparts() - 1];
        let sub = g.view((0, 0), (keep, keep)).clone_owned();
        op_norm(&(sub - eye(keep)))
    }

    /// Covariance defect of the dilation.
    pub fn covariance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (b, i, j) in self.rep.corr.algebra.units() {
            let a = self.rep.corr.algebra.unit(b, i, j);
            let lhs = self.rho(&a) * &self.vtilde;
            let rhs = &self.vtilde * self.dom_phi(&a);
            worst = worst.max(op_norm(&(lhs - rhs)));
        }
        worst
    }

    /// The map I_E (x) x realized on the domain, for x: K -> K.
    pub fn left_tensor(&self, x: &CMat) -> CMat {
        let mut out = zeros(self.dom.total, self.dom.total);
        for sp in 0..self.nparts() {
            for sq in 0..self.nparts() {
                let rr = self.part_range(sp);
                let cr = self.part_range(sq);
                let xblk = x.view((rr.start, cr.start), (rr.len(), cr.len())).clone_owned();
                if op_norm(&xblk) < 1e-300 {
                    continue;
                }
                let lifted = e_map(&xblk, &self.dom.ets[sq], &self.dom.ets[sp]);
                let ro = self.dom.offsets[sp];
                let co = self.dom.offsets[sq];
                out.view_mut((ro, co), (self.dom.dims[sp], self.dom.dims[sq])).copy_from(&lifted);
            }
        }
        out
    }

    /// The map x -> V (I (x) x) V*.
    pub fn l_op(&self, x: &CMat) -> CMat {
        &self.vtilde * self.left_tensor(x) * self.vtilde.adjoint()
    }

    /// Tensoring column map K -> E (x) K for a fixed coordinate vector.
    pub fn lxi_dom(&self, xi: &CVec) -> CMat {
        let mut out = zeros(self.dom.total, self.k_dim);
        for s in 0..self.nparts() {
            let cr = self.part_range(s);
            let ximat = CMat::from_fn(xi.len(), 1, |r, _| xi[r]);
            let blk = &self.dom.ets[s].p * kron(&ximat, &eye(cr.len()));
            out.view_mut((self.dom.offsets[s], cr.start), (self.dom.dims[s], cr.len()))
                .copy_from(&blk);
        }
        out
    }

    /// The dilated operator V(xi) = V (xi (x) -) on K.
    pub fn v_of(&self, xi: &CVec) -> CMat {
        &self.vtilde * self.lxi_dom(xi)
    }

    /// Decreasing chain P_n = L^n(I) with differences Q_n, up to n = N,
    /// plus the remainder I - sum Q_n = P_{N+1}.
    pub fn projection_chain(&self) -> ChainData {
        let mut ps = vec![eye(self.k_dim)];
        for _ in 0..=self.level {
            let next = self.l_op(ps.last().unwrap());
            ps.push(next);
        }
        let mut proj_residual = 0.0f64;
        for p in &ps {
            proj_residual = proj_residual.max(projection_residual(p));
        }
        let mut qs = Vec::with_capacity(self.level + 1);
        for n in 0..=self.level {
            qs.push(&ps[n] - &ps[n + 1]);
        }
        let remainder = ps.last().unwrap().clone();
        ChainData { ps, qs, remainder, proj_residual }
    }

    /// Q_0 assembled directly from the first column of V, as a cross check
    /// against I - V V*.
    pub fn q0_explicit(&self) -> CMat {
        let h = self.h_dim;
        let tt = &self.rep.ttilde;
        let delta = &self.defects.delta;
        let vac_d = self.fockd.vac();
        let v = &vac_d * self.defects.d_basis.adjoint();
        let mut q0 = zeros(self.k_dim, self.k_dim);
        let g0 = self.part_range(1);
        let hh = eye(h) - tt * tt.adjoint();
        q0.view_mut((0, 0), (h, h)).copy_from(&hh);
        let hg = -(tt * delta) * v.adjoint();
        q0.view_mut((0, g0.start), (h, g0.len())).copy_from(&hg);
        q0.view_mut((g0.start, 0), (g0.len(), h)).copy_from(&hg.adjoint());
        let gg = eye(g0.len()) - &v * (delta * delta) * v.adjoint();
        q0.view_mut((g0.start, g0.start), (g0.len(), g0.len())).copy_from(&gg);
        // remaining grades: V V* restricted there is the identity
        q0
    }

    /// Base wandering subspace K_0 = range Q_0 with the unitary onto the
    /// second defect space and the induced representation on K_0.
    pub fn base_wandering(&self, tol: &Tol) -> Result<BaseWandering> {
        let h = self.h_dim;
        let dstar = &self.defects.delta_star;
        let gens_h = dstar * dstar;
        let grade0 = -(self.fockd.vac()
            * (self.defects.d_basis.adjoint()
                * (&self.defects.delta * self.rep.ttilde.adjoint())));
        let mut gens = zeros(self.k_dim, h);
        gens.view_mut((0, 0), (h, h)).copy_from(&gens_h);
        let g0 = self.part_range(1);
        gens.view_mut((g0.start, 0), (g0.len(), h)).copy_from(&grade0);
        let basis = range_basis(&gens, tol.null_rel);
        let r = basis.ncols();
        if r != self.defects.dstar_dim() {
            return Err(Error::Numerical(format!(
                "base wandering space has rank {r}, expected the defect dimension {}",
                self.defects.dstar_dim()
            )));
        }
        // gen(h) corresponds to delta_* h; the correspondence is unitary
        let x = basis.adjoint() * &gens;
        let y = self.defects.dstar_basis.adjoint() * dstar;
        let u = &y * pinv(&x, tol.null_rel);
        let unitary_residual = op_norm(&(&u * u.adjoint() - eye(self.defects.dstar_dim())))
            .max(op_norm(&(u.adjoint() * &u - eye(r))))
            .max(op_norm(&(&u * &x - &y)));
        let rep_k0 = self.defects.tau2.conjugated(&u.adjoint());
        Ok(BaseWandering { basis, u, rep_k0, unitary_residual })
    }
}

#[derive(Debug, Clone)]
pub struct ChainData {
    pub ps: Vec<CMat>,
    pub qs: Vec<CMat>,
    pub remainder: CMat,
    pub proj_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BaseWandering {
    /// Orthonormal basis of K_0 inside K.
    pub basis: CMat,
    /// Unitary from K_0 coordinates onto second-defect coordinates.
    pub u: CMat,
    /// The compressed representation on K_0 (tau2 transported back).
    pub rep_k0: Representation,
    pub unitary_residual: f64,
}

/// Limit verdict for the projection chain.
#[derive(Debug, Clone)]
pub enum PInfinity {
    ExactZero,
    Stabilized(CMat),
    Undecided { level: usize, delta: f64 },
}

impl PInfinity {
    pub fn describe(&self) -> String {
        match self {
            PInfinity::ExactZero => "exact zero".into(),
            PInfinity::Stabilized(_) => "stabilized".into(),
            PInfinity::Undecided { level, delta } => {
                format!("undecided at level {level} (last step {delta:.3e})")
            }
        }
    }
}

/// Decide the chain limit from the asymptotic classification and the chain
/// itself: a certified vanishing verdict forces zero; otherwise the chain
/// must hold still for two consecutive steps.
pub fn p_infinity(chain: &ChainData, verdict: &ZeroVerdict, tol: &Tol) -> PInfinity {
    if verdict.is_zero() {
        return PInfinity::ExactZero;
    }
    let n = chain.ps.len();
    if n >= 3 {
        let d1 = op_norm(&(&chain.ps[n - 1] - &chain.ps[n - 2]));
        let d2 = op_norm(&(&chain.ps[n - 2] - &chain.ps[n - 3]));
        let dim = chain.ps[0].nrows();
        if d1 <= tol.op(dim) && d2 <= tol.op(dim) {
            return PInfinity::Stabilized(chain.ps[n - 1].clone());
        }
        return PInfinity::Undecided { level: n - 1, delta: d1 };
    }
    PInfinity::Undecided { level: n.saturating_sub(1), delta: f64::NAN }
}

/// Wandering map: assemble the words of the dilation applied to a wandering
/// subspace S into a map from the Fock module over the compressed
/// representation on S.
#[derive(Debug, Clone)]
pub struct WanderingMap {
    pub fm: FockModule,
    pub w: CMat,
    pub isometry_residual: f64,
}

pub fn wandering_map(
    dil: &Dilation,
    s_basis: &CMat,
    rep_s: &Representation,
    level: usize,
    tol: &Tol,
) -> Result<WanderingMap> {
    if s_basis.ncols() != rep_s.carrier_dim() {
        return Err(Error::Structure(
            "wandering basis and representation carrier disagree".into(),
        ));
    }
    let f = truncated_fock(&dil.rep.corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm = fock_module(f, rep_s.clone(), tol)?;
    let mut w = zeros(dil.k_dim, fm.total);
    // grade zero: S itself through the vacuum identification
    let mut wk = s_basis * fm.vac().adjoint();
    let place = |w: &mut CMat, k: usize, wk: &CMat, fm: &FockModule| {
        w.view_mut((0, fm.grade_offset(k)), (wk.nrows(), wk.ncols())).copy_from(wk);
    };
    place(&mut w, 0, &wk, &fm);
    for k in 1..=level {
        // V applied to the realization of E (x) (previous word)
        let dom_et = fm.etensor(k - 1);
        let mut stacked = zeros(dil.dom.total, fm.grade_dim(k));
        for s in 0..dil.nparts() {
            let rr = dil.part_range(s);
            let part = wk.view((rr.start, 0), (rr.len(), wk.ncols())).clone_owned();
            let lifted = e_map(&part, &dom_et, &dil.dom.ets[s]);
            stacked
                .view_mut((dil.dom.offsets[s], 0), (dil.dom.dims[s], fm.grade_dim(k)))
                .copy_from(&lifted);
        }
        wk = &dil.vtilde * stacked;
        place(&mut w, k, &wk, &fm);
    }
    let isometry_residual = op_norm(&(w.adjoint() * &w - eye(fm.total)));
    Ok(WanderingMap { fm, w, isometry_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::Correspondence;
    use crate::covrep::{classify_c0, covariant_rep};
    use crate::linalg::cre;

    fn scalar_dilation(t: f64, level: usize) -> Dilation {
        let e = Correspondence::free(1);
        let sigma = Representation::multiplicity_one(&e.algebra);
        let tm = CMat::from_row_slice(1, 1, &[cre(t)]);
        let (rep, _) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        dilate(&rep, level, &Tol::default()).unwrap()
    }

    #[test]
    fn scalar_dilation_is_isometric_and_covariant() {
        let dil = scalar_dilation(0.5, 6);
        assert_eq!(dil.k_dim, 8);
        assert!(dil.isometry_residual() < 1e-12);
        assert!(dil.covariance_residual() < 1e-12);
    }

    #[test]
    fn chain_is_projection_valued_and_q0_matches() {
        let dil = scalar_dilation(0.5, 5);
        let chain = dil.projection_chain();
        assert!(chain.proj_residual < 1e-10);
        let q0 = dil.q0_explicit();
        assert!(op_norm(&(&chain.qs[0] - &q0)) < 1e-10);
        // remainder is again a projection, orthogonal to every Q
        for q in &chain.qs {
            assert!(op_norm(&(&chain.remainder * q)) < 1e-10);
        }
    }

    #[test]
    fn base_wandering_matches_defect() {
        let dil = scalar_dilation(0.5, 5);
        let bw = dil.base_wandering(&Tol::default()).unwrap();
        assert_eq!(bw.basis.ncols(), 1);
        assert!(bw.unitary_residual < 1e-10);
        let chain = dil.projection_chain();
        let q0_range = range_basis(&chain.qs[0], 1e-8);
        assert!(crate::linalg::subspace_distance(&bw.basis, &q0_range) < 1e-8);
    }

    #[test]
    fn wandering_map_from_defect_grade_is_exact() {
        let dil = scalar_dilation(0.5, 5);
        // S = grade zero of the Fock part, carrying tau1
        let s_basis = dil.embed_grade(0) * dil.fockd.vac();
        let wm =
            wandering_map(&dil, &s_basis, &dil.defects.tau1.clone(), dil.level, &Tol::default())
                .unwrap();
        assert!(wm.isometry_residual < 1e-12);
    }

    #[test]
    fn jordan_dilation_shifts_exactly() {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let tm = CMat::from_row_slice(2, 2, &[cre(0.0), cre(1.0), cre(0.0), cre(0.0)]);
        let (rep, _) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        let dil = dilate(&rep, 4, &Tol::default()).unwrap();
        assert!(dil.isometry_residual() < 1e-12);
        let f = truncated_fock(&e, 4, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let fm_sigma = fock_module(f, sigma.clone(), &Tol::default()).unwrap();
        let chain = dil.projection_chain();
        let c0 = classify_c0(&rep, &fm_sigma, &Tol::default());
        let pinf = p_infinity(&chain, &c0.verdict, &Tol::default());
        assert!(matches!(pinf, PInfinity::ExactZero));
        let bw = dil.base_wandering(&Tol::default()).unwrap();
        assert_eq!(bw.basis.ncols(), 1);
        assert!(bw.unitary_residual < 1e-10);
    }

    #[test]
    fn graph_dilation_is_isometric() {
        let e = Correspondence::from_graph(2, &[(0, 0), (0, 1)]).unwrap();
        let sigma = Representation::multiplicity_one(&e.algebra);
        // row over the two edges: the loop feeds vertex 0, the edge vertex 1
        let tm = CMat::from_row_slice(
            2,
            4,
            &[
                cre(0.4),
                cre(0.0),
                cre(0.0),
                cre(0.0),
                cre(0.0),
                cre(0.0),
                cre(0.5),
                cre(0.0),
            ],
        );
        let (rep, _) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        let dil = dilate(&rep, 5, &Tol::default()).unwrap();
        assert!(dil.isometry_residual() < 1e-12, "residual {}", dil.isometry_residual());
        assert!(dil.covariance_residual() < 1e-12);
    }
}

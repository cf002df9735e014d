//! The sigma-dual of a correspondence: intertwiners from the carrier into
//! the localization form a correspondence over the commutant, with canonical
//! unitaries relating dual localizations back to the original ones.

use crate::algebra::{commutant, AlgebraElement, CommutantData, Representation};
use crate::correspondence::{localize, tensor, Correspondence, LocalizedSpace};
use crate::error::{Error, Result};
use crate::fock::{e_map, fock_module, truncated_fock, FockModule, DEFAULT_DIM_CAP};
use crate::linalg::{
    eye, hstack, kron, op_norm, pinv, zeros, CMat, CVec,
};
use crate::tol::Tol;

/// Solve for the commutant element whose representing matrix is x; the
/// residual reports how far x is from the commutant.
pub fn commutant_element(comm: &CommutantData, x: &CMat, tol: &Tol) -> Result<(AlgebraElement, f64)> {
    let h = comm.rep.carrier_dim();
    if x.nrows() != h || x.ncols() != h {
        return Err(Error::Structure("matrix does not act on the carrier".into()));
    }
    let units = comm.algebra.units();
    let mut basis = zeros(h * h, units.len());
    for (c, &(b, i, j)) in units.iter().enumerate() {
        let m = comm.rep.unit_matrix(b, i, j);
        for (r, v) in m.iter().enumerate() {
            basis[(r, c)] = *v;
        }
    }
    let target = CVec::from_column_slice(x.as_slice());
    let coords = pinv(&basis, tol.null_rel) * &target;
    let recon = &basis * &coords;
    let residual = (recon - &target).norm();
    let elem = comm.algebra.from_coords(&coords)?;
    Ok((elem, residual))
}

/// Orthonormal (Frobenius) basis of the maps eta: H -> L intertwining the
/// two unit actions: eta sigma_u = left_u eta for every unit u.
pub fn intertwiner_space(lefts: &[CMat], sigmas: &[CMat]) -> Vec<CMat> {
    assert_eq!(lefts.len(), sigmas.len());
    if lefts.is_empty() {
        return Vec::new();
    }
    let l = lefts[0].nrows();
    let h = sigmas[0].nrows();
    if l == 0 || h == 0 {
        return Vec::new();
    }
    let rows_per = l * h;
    let mut big = zeros(rows_per * lefts.len(), l * h);
    for (u, (a, s)) in lefts.iter().zip(sigmas).enumerate() {
        let blk = kron(&s.transpose(), &eye(l)) - kron(&eye(h), a);
        big.view_mut((u * rows_per, 0), (rows_per, l * h)).copy_from(&blk);
    }
    // the constraint rows are differences of products of the given actions,
    // so kernel directions count on the absolute scale of those inputs; a
    // block that is entirely rounding noise is a satisfied constraint
    let scale = lefts.iter().chain(sigmas.iter()).map(op_norm).fold(1.0f64, f64::max);
    let svd = big.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd with v_t requested");
    let floor = 1e-8 * scale;
    let mut out = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= floor {
            out.push(CMat::from_fn(l, h, |r, cc| v_t[(i, cc * l + r)].conj()));
        }
    }
    out
}

/// The sigma-dual of a correspondence, realized on an orthonormal basis of
/// intertwiners.
#[derive(Debug, Clone)]
pub struct DualData {
    pub commutant: CommutantData,
    /// Intertwiners H -> E (x)_sigma H spanning the dual.
    pub basis: Vec<CMat>,
    /// The dual as a correspondence over the commutant algebra.
    pub corr: Correspondence,
    pub loc: LocalizedSpace,
    pub structure_residual: f64,
}

pub fn dual_correspondence(
    corr: &Correspondence,
    sigma: &Representation,
    tol: &Tol,
) -> Result<DualData> {
    if !sigma.faithful() {
        return Err(Error::Precondition(
            "the dual needs a faithful representation; supplement the missing blocks first".into(),
        ));
    }
    let loc = localize(corr, sigma, tol)?;
    let comm = commutant(sigma)?;
    let units = corr.algebra.units();
    let lefts: Vec<CMat> = (0..units.len()).map(|u| loc.left_unit(u).clone()).collect();
    let sigmas: Vec<CMat> = units
        .iter()
        .map(|&(b, i, j)| sigma.unit_matrix(b, i, j))
        .collect();
    let basis = intertwiner_space(&lefts, &sigmas);
    let d = basis.len();
    let h = sigma.carrier_dim();

    let mut structure_residual = 0.0f64;
    // inner products land in the commutant
    let mut inner_table = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let x = basis[a].adjoint() * &basis[b];
            let (elem, res) = commutant_element(&comm, &x, tol)?;
            structure_residual = structure_residual.max(res);
            inner_table.push(elem);
        }
    }
    // left action of S: eta -> (I (x) S) eta, right action: eta -> eta S
    let cunits = comm.algebra.units();
    let frobenius = |x: &CMat, y: &CMat| {
        let mut s = crate::linalg::c(0.0, 0.0);
        for (a, b) in x.iter().zip(y.iter()) {
            s += a.conj() * b;
        }
        s
    };
    let mut left_units = Vec::with_capacity(cunits.len());
    let mut right_units = Vec::with_capacity(cunits.len());
    for &(b, i, j) in &cunits {
        let s = comm.rep.unit_matrix(b, i, j);
        let lift = &loc.factor * kron(&eye(corr.dim), &s) * &loc.pinv;
        let mut lm = zeros(d, d);
        let mut rm = zeros(d, d);
        for col in 0..d {
            let limg = &lift * &basis[col];
            let rimg = &basis[col] * &s;
            for row in 0..d {
                lm[(row, col)] = frobenius(&basis[row], &limg);
                rm[(row, col)] = frobenius(&basis[row], &rimg);
            }
            // record how far the images leave the intertwiner span
            let mut lrec = zeros(loc.dim, h);
            let mut rrec = zeros(loc.dim, h);
            for row in 0..d {
                lrec += basis[row].map(|v| v * lm[(row, col)]);
                rrec += basis[row].map(|v| v * rm[(row, col)]);
            }
            structure_residual = structure_residual.max((lrec - limg).norm());
            structure_residual = structure_residual.max((rrec - rimg).norm());
        }
        left_units.push(lm);
        right_units.push(rm);
    }
    let dual = Correspondence::explicit(comm.algebra.clone(), d, left_units, right_units, inner_table)?;
    Ok(DualData { commutant: comm, basis, corr: dual, loc, structure_residual })
}

impl DualData {
    /// Canonical map from the localization of the dual against the identity
    /// representation of the commutant back onto E (x)_sigma H, sending
    /// class(eta (x) h) to eta(h). Returns the matrix and its unitarity
    /// residual.
    pub fn evaluation_unitary(&self, tol: &Tol) -> Result<(CMat, LocalizedSpace, f64)> {
        let dual_loc = localize(&self.corr, &self.commutant.rep, tol)?;
        let h = self.commutant.rep.carrier_dim();
        let d = self.basis.len();
        let mut upre = zeros(self.loc.dim, d * h);
        for (i, eta) in self.basis.iter().enumerate() {
            for l in 0..h {
                let col = eta.column(l);
                for r in 0..self.loc.dim {
                    upre[(r, i * h + l)] = col[r];
                }
            }
        }
        let u = &upre * &dual_loc.pinv;
        let res = op_norm(&(u.adjoint() * &u - eye(dual_loc.dim)))
            .max(op_norm(&(&u * u.adjoint() - eye(self.loc.dim))));
        Ok((u, dual_loc, res))
    }

    /// Consistency of the tensor-square duality: the dual of E tensored with
    /// itself maps onto intertwiners H -> grade two, eta2 (x) eta1 acting as
    /// (I_E (x) eta2) eta1. Returns the worst defect of that identification
    /// as measured through dimension equality and isometry of the induced
    /// evaluation.
    pub fn tensor_square_check(&self, fm: &FockModule, tol: &Tol) -> Result<TensorSquareReport> {
        let square = tensor(&self.corr, &self.corr, tol)?;
        let dual_dim_2 = square.corr.dim;
        // intertwiners straight into grade two
        let units = fm.fock.base.algebra.units();
        let lefts: Vec<CMat> = (0..units.len()).map(|u| fm.locs[2].left_unit(u).clone()).collect();
        let sigmas: Vec<CMat> = units
            .iter()
            .map(|&(b, i, j)| fm.rep.unit_matrix(b, i, j))
            .collect();
        let direct = intertwiner_space(&lefts, &sigmas);
        // evaluation through the composite: eta2 (x) eta1 -> (I (x) eta2) eta1
        let mut worst = 0.0f64;
        let loc1_et = self.loc.as_etensor();
        let cod = fm.etensor(1);
        for eta1 in &self.basis {
            for eta2 in &self.basis {
                let lifted = e_map(eta2, &loc1_et, &cod);
                let composite = &lifted * eta1;
                // composite must be an intertwiner into grade two
                for (u, (a, s)) in lefts.iter().zip(&sigmas).enumerate() {
                    let defect = op_norm(&(&composite * s - a * &composite));
                    worst = worst.max(defect);
                    let _ = u;
                }
            }
        }
        Ok(TensorSquareReport {
            dual_square_dim: dual_dim_2,
            grade_two_intertwiner_dim: direct.len(),
            intertwining_residual: worst,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TensorSquareReport {
    pub dual_square_dim: usize,
    pub grade_two_intertwiner_dim: usize,
    pub intertwining_residual: f64,
}

/// Dimensions of the intertwiner spaces H -> grade_k for k = 0..=level;
/// these count the coefficients available to lower-triangular symbols.
pub fn symbol_space_dims(fm: &FockModule) -> Vec<usize> {
    let units = fm.fock.base.algebra.units();
    let sigmas: Vec<CMat> = units
        .iter()
        .map(|&(b, i, j)| fm.rep.unit_matrix(b, i, j))
        .collect();
    (0..=fm.level())
        .map(|k| {
            let lefts: Vec<CMat> =
                (0..units.len()).map(|u| fm.locs[k].left_unit(u).clone()).collect();
            intertwiner_space(&lefts, &sigmas).len()
        })
        .collect()
}

/// The transform pairing the localized Fock module of E with the localized
/// Fock module of its dual: gradewise unitaries whose inverse evaluates a
/// dual word on the carrier, reversing the tensor order.
#[derive(Debug, Clone)]
pub struct FourierData {
    pub dual: DualData,
    /// F(E) localized against sigma.
    pub fm_e: FockModule,
    /// F(E^sigma) localized against the identity action of the commutant.
    pub fm_d: FockModule,
    /// Gradewise unitaries, base grade k onto dual grade k.
    pub blocks: Vec<CMat>,
    /// Block diagonal assembly of the gradewise unitaries.
    pub u: CMat,
    pub unitary_residual: f64,
}

pub fn fourier(
    corr: &Correspondence,
    sigma: &Representation,
    level: usize,
    tol: &Tol,
) -> Result<FourierData> {
    let dual = dual_correspondence(corr, sigma, tol)?;
    let fe = truncated_fock(corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm_e = fock_module(fe, sigma.clone(), tol)?;
    let fd = truncated_fock(&dual.corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm_d = fock_module(fd, dual.commutant.rep.clone(), tol)?;
    if level >= 1 && fm_e.locs[1].dim != dual.loc.dim {
        return Err(Error::Numerical(
            "grade-one localization disagrees with the dual's ambient space".into(),
        ));
    }

    // the inverse acts gradewise: peel the leading dual factor and splice it
    // behind the evaluation of the rest, reversing the word order
    let inserts: Vec<CMat> =
        dual.basis.iter().map(|eta| fm_e.right_insertion(1, eta)).collect();
    let mut w_blocks: Vec<CMat> = Vec::with_capacity(level + 1);
    w_blocks.push(fm_e.vac() * fm_d.vac().adjoint());
    for k in 0..level {
        if fm_e.locs[k + 1].dim != fm_d.locs[k + 1].dim {
            return Err(Error::Numerical(format!(
                "grade {} sizes disagree: {} over the base, {} over the dual",
                k + 1,
                fm_e.locs[k + 1].dim,
                fm_d.locs[k + 1].dim
            )));
        }
        let prev = w_blocks[k].clone();
        let cols: Vec<CMat> = inserts
            .iter()
            .map(|ins| fm_e.grade_block(ins, k + 1, k) * &prev)
            .collect();
        let refs: Vec<&CMat> = cols.iter().collect();
        let wk = if refs.is_empty() {
            zeros(fm_e.locs[k + 1].dim, fm_d.locs[k + 1].dim)
        } else {
            hstack(&refs) * &fm_d.etensor(k).pplus
        };
        w_blocks.push(wk);
    }

    let mut u = zeros(fm_d.total, fm_e.total);
    let mut res = 0.0f64;
    let mut blocks = Vec::with_capacity(level + 1);
    for (k, wk) in w_blocks.iter().enumerate() {
        let uk = wk.adjoint();
        res = res.max(op_norm(&(&uk * uk.adjoint() - eye(fm_d.locs[k].dim))));
        res = res.max(op_norm(&(uk.adjoint() * &uk - eye(fm_e.locs[k].dim))));
        u.view_mut((fm_d.offsets[k], fm_e.offsets[k]), (fm_d.locs[k].dim, fm_e.locs[k].dim))
            .copy_from(&uk);
        blocks.push(uk);
    }
    Ok(FourierData { dual, fm_e, fm_d, blocks, u, unitary_residual: res })
}

impl FourierData {
    /// Dual realization of a correspondence vector: the map from the carrier
    /// into dual grade one whose adjoint pairs a dual element against xi.
    pub fn hat(&self, xi: &CVec) -> Result<CMat> {
        if self.blocks.len() < 2 {
            return Err(Error::Precondition("hat needs at least one Fock grade".into()));
        }
        Ok(&self.blocks[1] * self.dual.loc.lxi(xi))
    }

    /// Evaluate a symbol given by its dual-side coefficients at a point of
    /// the open unit ball of the dual's own dual, supplied as its matrix
    /// carrier -> dual grade one. Returns the value and the geometric tail
    /// bound left beyond the truncated grades.
    pub fn evaluate_symbol(
        &self,
        coeffs: &[CMat],
        point: &CMat,
        tol: &Tol,
    ) -> Result<(CMat, f64)> {
        let fmd = &self.fm_d;
        let h = fmd.rep.carrier_dim();
        if coeffs.len() > fmd.level() + 1 {
            return Err(Error::Structure("more coefficients than truncated grades".into()));
        }
        if point.nrows() != fmd.locs[1].dim || point.ncols() != h {
            return Err(Error::Structure("point has the wrong shape".into()));
        }
        // the point must give a module map into dual grade one
        let mut inter = 0.0f64;
        for (u, &(b, i, j)) in fmd.fock.base.algebra.units().iter().enumerate() {
            let s = fmd.rep.unit_matrix(b, i, j);
            inter = inter.max(op_norm(&(point * s - fmd.locs[1].left_unit(u) * point)));
        }
        if inter > tol.op(fmd.locs[1].dim).max(1e-8) {
            return Err(Error::Precondition(format!(
                "point does not intertwine the dual actions (residual {inter:.3e})"
            )));
        }
        let r = op_norm(point);
        if r >= 1.0 - tol.base {
            return Err(Error::Validation(format!(
                "point leaves the open unit ball (norm {r:.6})"
            )));
        }
        let q = fmd.vac();
        let s1 = &q * point.adjoint();
        let mut value = zeros(h, h);
        if let Some(c0) = coeffs.first() {
            value += q.adjoint() * c0;
        }
        let mut s_prev = s1.clone();
        for (k, ck) in coeffs.iter().enumerate().skip(1) {
            if k > 1 {
                s_prev = &s1 * e_map(&s_prev, &fmd.etensor(k - 1), &fmd.etensor(0));
            }
            value += q.adjoint() * &s_prev * ck;
        }
        let tail = crate::covrep::geometric_tail(r, coeffs.len().saturating_sub(1))
            .unwrap_or(f64::INFINITY);
        Ok((value, tail))
    }
}

/// Symbol of an operator commuting with the induced representation: grade
/// coefficients read off the vacuum column, in both the insertion form over
/// the base and the transformed form over the dual.
#[derive(Debug, Clone)]
pub struct SymbolRep {
    /// Insertion coefficients: grade k coefficient maps the carrier into
    /// base grade k.
    pub coeffs: Vec<CMat>,
    /// The same coefficients pushed through the gradewise unitaries.
    pub fourier_coeffs: Vec<CMat>,
    pub commutation_residual: f64,
    pub intertwining_residual: f64,
    pub reconstruction_residual: f64,
}

pub fn hat_transform(ft: &FourierData, psi: &CMat, tol: &Tol) -> Result<SymbolRep> {
    let fm = &ft.fm_e;
    if psi.nrows() != fm.total || psi.ncols() != fm.total {
        return Err(Error::Structure("operator does not act on the localized Fock module".into()));
    }
    let de = fm.fock.base.dim;
    let mut comm = 0.0f64;
    for p in 0..de {
        let xi = CVec::from_fn(de, |r, _| if r == p { crate::linalg::cre(1.0) } else { crate::linalg::cre(0.0) });
        let c = fm.creation(&xi);
        comm = comm.max(op_norm(&(psi * &c - &c * psi)));
    }
    for (b, i, j) in fm.fock.base.algebra.units() {
        let a = fm.fock.base.algebra.unit(b, i, j);
        let p = fm.phi(&a);
        comm = comm.max(op_norm(&(psi * &p - &p * psi)));
    }
    if comm > tol.op(fm.total).max(1e-8) {
        return Err(Error::Precondition(format!(
            "operator does not commute with the induced representation (residual {comm:.3e})"
        )));
    }

    let vaccol = fm.embed(0) * fm.vac();
    let full = psi * &vaccol;
    let units = fm.fock.base.algebra.units();
    let sigmas: Vec<CMat> = units
        .iter()
        .map(|&(b, i, j)| fm.rep.unit_matrix(b, i, j))
        .collect();
    let mut coeffs = Vec::with_capacity(fm.level() + 1);
    let mut fourier_coeffs = Vec::with_capacity(fm.level() + 1);
    let mut inter = 0.0f64;
    for k in 0..=fm.level() {
        let ck = full
            .view((fm.grade_offset(k), 0), (fm.locs[k].dim, full.ncols()))
            .clone_owned();
        for (u, s) in sigmas.iter().enumerate() {
            inter = inter.max(op_norm(&(&ck * s - fm.locs[k].left_unit(u) * &ck)));
        }
        fourier_coeffs.push(&ft.blocks[k] * &ck);
        coeffs.push(ck);
    }
    let rebuilt = check_transform(fm, &coeffs)?;
    let reconstruction_residual = op_norm(&(rebuilt - psi));
    Ok(SymbolRep {
        coeffs,
        fourier_coeffs,
        commutation_residual: comm,
        intertwining_residual: inter,
        reconstruction_residual,
    })
}

/// The canonical identification of the dual of a tensor product with the
/// reversed tensor product of the duals, realized on the localizations
/// against the identity action of the commutant.
#[derive(Debug, Clone)]
pub struct TensorIsoData {
    /// Unitary from the localized pair side onto the localized whole side.
    pub iso: CMat,
    /// Coordinates of each evaluated pair in the basis of the whole dual;
    /// column order is pair-major in (second dual, first dual).
    pub gamma: CMat,
    /// Localization of the dual of the tensor product.
    pub whole: LocalizedSpace,
    /// Localization of the tensor product of the duals, reversed order.
    pub pairs: LocalizedSpace,
    /// Section from the localized pair side into raw pair coordinates.
    pub raw_pair_section: CMat,
    pub span_residual: f64,
    pub unitarity_residual: f64,
}

/// Identify the dual of e1 (x) e2 with (dual e2) (x) (dual e1): a pair
/// (eta2, eta1) evaluates to the composite inserting eta2 behind eta1.
pub fn dual_tensor_iso(
    e1: &Correspondence,
    e2: &Correspondence,
    sigma: &Representation,
    tol: &Tol,
) -> Result<TensorIsoData> {
    let h = sigma.carrier_dim();
    let t12 = tensor(e1, e2, tol)?;
    let d12 = dual_correspondence(&t12.corr, sigma, tol)?;
    let d1 = dual_correspondence(e1, sigma, tol)?;
    let d2 = dual_correspondence(e2, sigma, tol)?;
    let loc12 = localize(&t12.corr, sigma, tol)?;

    // realization of e1 (x) (e2 tensor H) with output in the localization
    // of (e1 tensor e2) against sigma
    let cod = crate::fock::ETensor {
        de: e1.dim,
        p: &loc12.factor * kron(&t12.q, &eye(h)) * kron(&eye(e1.dim), &d2.loc.pinv),
        pplus: kron(&eye(e1.dim), &d2.loc.factor) * kron(&t12.r, &eye(h)) * &loc12.pinv,
    };
    let dom = d1.loc.as_etensor();

    let frobenius = |x: &CMat, y: &CMat| {
        let mut s = crate::linalg::c(0.0, 0.0);
        for (a, b) in x.iter().zip(y.iter()) {
            s += a.conj() * b;
        }
        s
    };
    let n2 = d2.basis.len();
    let n1 = d1.basis.len();
    let mut gamma = zeros(d12.basis.len(), n2 * n1);
    let mut span_residual = 0.0f64;
    for (i2, eta2) in d2.basis.iter().enumerate() {
        let lifted = e_map(eta2, &dom, &cod);
        for (i1, eta1) in d1.basis.iter().enumerate() {
            let comp = &lifted * eta1;
            let mut recon = zeros(comp.nrows(), comp.ncols());
            for (j, b) in d12.basis.iter().enumerate() {
                let g = frobenius(b, &comp);
                gamma[(j, i2 * n1 + i1)] = g;
                recon += b.map(|v| v * g);
            }
            span_residual = span_residual.max((recon - comp).norm());
        }
    }

    // localize both dual sides against the identity action of the commutant
    let nu = &d12.commutant.rep;
    let t21 = tensor(&d2.corr, &d1.corr, tol)?;
    let pairs = localize(&t21.corr, nu, tol)?;
    let whole = localize(&d12.corr, nu, tol)?;
    let raw_pair_section = kron(&t21.r, &eye(h)) * &pairs.pinv;
    let iso = &whole.factor * kron(&gamma, &eye(h)) * &raw_pair_section;
    let unitarity_residual = op_norm(&(iso.adjoint() * &iso - eye(pairs.dim)))
        .max(op_norm(&(&iso * iso.adjoint() - eye(whole.dim))));
    Ok(TensorIsoData {
        iso,
        gamma,
        whole,
        pairs,
        raw_pair_section,
        span_residual,
        unitarity_residual,
    })
}

/// Rebuild the commutant operator from its insertion coefficients.
pub fn check_transform(fm: &FockModule, coeffs: &[CMat]) -> Result<CMat> {
    if coeffs.len() > fm.level() + 1 {
        return Err(Error::Structure("more coefficients than truncated grades".into()));
    }
    let h = fm.rep.carrier_dim();
    let mut psi = zeros(fm.total, fm.total);
    for (k, ck) in coeffs.iter().enumerate() {
        if ck.nrows() != fm.locs[k].dim || ck.ncols() != h {
            return Err(Error::Structure(format!(
                "coefficient {k} must be {}x{h}, got {}x{}",
                fm.locs[k].dim,
                ck.nrows(),
                ck.ncols()
            )));
        }
        psi += fm.right_insertion(k, ck);
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiMatrixAlgebra;
    use crate::fock::{fock_module, truncated_fock, DEFAULT_DIM_CAP};

    #[test]
    fn free_module_dual_has_dimension_n_m_squared() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let dual = dual_correspondence(&e, &sigma, &Tol::default()).unwrap();
        assert_eq!(dual.basis.len(), 8);
        assert!(dual.structure_residual < 1e-10);
        dual.corr.validate(&Tol::default(), 5).unwrap();
        let (_, _, res) = dual.evaluation_unitary(&Tol::default()).unwrap();
        assert!(res < 1e-10);
    }

    #[test]
    fn matrix_algebra_self_dual_is_line() {
        let alg = MultiMatrixAlgebra::new(vec![2]).unwrap();
        let e = Correspondence::identity(&alg);
        let sigma = Representation::multiplicity_one(&alg);
        let dual = dual_correspondence(&e, &sigma, &Tol::default()).unwrap();
        assert_eq!(dual.basis.len(), 1);
        let (_, _, res) = dual.evaluation_unitary(&Tol::default()).unwrap();
        assert!(res < 1e-10);
    }

    #[test]
    fn swap_twisted_dual_has_dimension_two() {
        let alg = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let images = vec![alg.unit(1, 0, 0), alg.unit(0, 0, 0)];
        let alpha = crate::algebra::Endomorphism::new(alg.clone(), images, &Tol::default()).unwrap();
        let e = Correspondence::twisted_by(&alg, &alpha);
        e.validate(&Tol::default(), 6).unwrap();
        let sigma = Representation::new(alg, vec![1, 1]).unwrap();
        let dual = dual_correspondence(&e, &sigma, &Tol::default()).unwrap();
        assert_eq!(dual.basis.len(), 2);
        let (_, _, res) = dual.evaluation_unitary(&Tol::default()).unwrap();
        assert!(res < 1e-10);
    }

    #[test]
    fn tensor_square_dual_dimensions_agree() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![1]).unwrap();
        let dual = dual_correspondence(&e, &sigma, &Tol::default()).unwrap();
        let f = truncated_fock(&e, 2, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(f, sigma, &Tol::default()).unwrap();
        let rep = dual.tensor_square_check(&fm, &Tol::default()).unwrap();
        assert_eq!(rep.dual_square_dim, rep.grade_two_intertwiner_dim);
        assert!(rep.intertwining_residual < 1e-10);
    }

    #[test]
    fn symbol_dims_for_scalar_fock() {
        let e = Correspondence::free(1);
        let sigma = Representation::multiplicity_one(&e.algebra);
        let f = truncated_fock(&e, 3, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(f, sigma, &Tol::default()).unwrap();
        assert_eq!(symbol_space_dims(&fm), vec![1, 1, 1, 1]);
    }

    #[test]
    fn dual_rejects_a_representation_with_a_dead_block() {
        let alg = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let e = Correspondence::identity(&alg);
        let sigma = Representation::new(alg, vec![1, 0]).unwrap();
        let err = dual_correspondence(&e, &sigma, &Tol::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    fn swap_correspondence() -> (Correspondence, Representation) {
        let alg = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        let images = vec![alg.unit(1, 0, 0), alg.unit(0, 0, 0)];
        let alpha =
            crate::algebra::Endomorphism::new(alg.clone(), images, &Tol::default()).unwrap();
        let e = Correspondence::twisted_by(&alg, &alpha);
        let sigma = Representation::new(alg, vec![1, 1]).unwrap();
        (e, sigma)
    }

    #[test]
    fn fourier_is_gradewise_unitary_for_the_free_module() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let ft = fourier(&e, &sigma, 3, &Tol::default()).unwrap();
        assert!(ft.unitary_residual < 1e-10, "res {}", ft.unitary_residual);
        let n = ft.fm_e.total;
        assert_eq!(ft.u.ncols(), n);
        assert_eq!(ft.u.nrows(), ft.fm_d.total);
        assert!(op_norm(&(ft.u.adjoint() * &ft.u - eye(n))) < 1e-10);
    }

    #[test]
    fn fourier_is_gradewise_unitary_for_the_swap_twist() {
        let (e, sigma) = swap_correspondence();
        let ft = fourier(&e, &sigma, 4, &Tol::default()).unwrap();
        assert!(ft.unitary_residual < 1e-10, "res {}", ft.unitary_residual);
    }

    #[test]
    fn fourier_grade_one_inverts_the_evaluation_unitary() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let ft = fourier(&e, &sigma, 2, &Tol::default()).unwrap();
        let (u, _, res) = ft.dual.evaluation_unitary(&Tol::default()).unwrap();
        assert!(res < 1e-10);
        assert!(op_norm(&(ft.blocks[1].adjoint() - &u)) < 1e-10);
    }

    #[test]
    fn hat_satisfies_the_adjoint_pairing() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let ft = fourier(&e, &sigma, 2, &Tol::default()).unwrap();
        let h = sigma.carrier_dim();
        let xi = CVec::from_column_slice(&[
            crate::linalg::c(0.3, 0.4),
            crate::linalg::c(-0.2, 0.1),
        ]);
        let hx = ft.hat(&xi).unwrap();
        let lx = ft.dual.loc.lxi(&xi);
        let d = ft.dual.basis.len();
        for (i, eta) in ft.dual.basis.iter().enumerate() {
            for m in 0..h {
                let mut raw = zeros(d * h, 1);
                raw[(i * h + m, 0)] = crate::linalg::cre(1.0);
                let class = &ft.fm_d.locs[1].factor * &raw;
                let lhs = hx.adjoint() * &class;
                let rhs = lx.adjoint() * eta.column(m);
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fourier_carries_right_insertions_to_dual_creations() {
        for (e, sigma) in [
            {
                let e = Correspondence::free(2);
                let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
                (e, sigma)
            },
            swap_correspondence(),
        ] {
            let ft = fourier(&e, &sigma, 3, &Tol::default()).unwrap();
            for (i, eta) in ft.dual.basis.iter().enumerate() {
                let ins = ft.fm_e.right_insertion(1, eta);
                let moved = &ft.u * ins * ft.u.adjoint();
                let unit = CVec::from_fn(ft.dual.basis.len(), |r, _| {
                    if r == i { crate::linalg::cre(1.0) } else { crate::linalg::cre(0.0) }
                });
                let cre_d = ft.fm_d.creation(&unit);
                assert!(
                    op_norm(&(moved - cre_d)) < 1e-8,
                    "insertion {i} does not transform to the dual creation"
                );
            }
        }
    }

    #[test]
    fn hat_transform_round_trips_an_insertion_polynomial() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let tol = Tol::default();
        let ft = fourier(&e, &sigma, 3, &tol).unwrap();
        let fm = &ft.fm_e;
        let c0 = fm.vac() * crate::linalg::c(0.3, -0.1);
        let c1 = ft.dual.basis[0].clone() * crate::linalg::c(0.7, 0.2);
        let psi = fm.right_insertion(0, &c0) + fm.right_insertion(1, &c1);
        let rep = hat_transform(&ft, &psi, &tol).unwrap();
        assert!(rep.commutation_residual < 1e-10);
        assert!(rep.intertwining_residual < 1e-10);
        assert!(rep.reconstruction_residual < 1e-10);
        assert!((&rep.coeffs[0] - &c0).norm() < 1e-10);
        assert!((&rep.coeffs[1] - &c1).norm() < 1e-10);
        for k in 2..rep.coeffs.len() {
            assert!(rep.coeffs[k].norm() < 1e-10);
        }
    }

    #[test]
    fn transformed_dual_creation_recovers_its_generator() {
        let (e, sigma) = swap_correspondence();
        let tol = Tol::default();
        let ft = fourier(&e, &sigma, 3, &tol).unwrap();
        let unit = CVec::from_fn(ft.dual.basis.len(), |r, _| {
            if r == 1 { crate::linalg::cre(1.0) } else { crate::linalg::cre(0.0) }
        });
        let psi = ft.u.adjoint() * ft.fm_d.creation(&unit) * &ft.u;
        let rep = hat_transform(&ft, &psi, &tol).unwrap();
        assert!(rep.reconstruction_residual < 1e-8);
        assert!((&rep.coeffs[1] - &ft.dual.basis[1]).norm() < 1e-8);
    }

    #[test]
    fn symbol_evaluation_matches_the_scalar_series() {
        let e = Correspondence::free(1);
        let sigma = Representation::multiplicity_one(&e.algebra);
        let tol = Tol::default();
        let ft = fourier(&e, &sigma, 6, &tol).unwrap();
        let ds = [
            crate::linalg::c(0.5, 0.0),
            crate::linalg::c(-0.25, 0.1),
            crate::linalg::c(0.0, 0.3),
            crate::linalg::c(0.125, 0.0),
        ];
        let coeffs: Vec<CMat> = ds.iter().map(|d| CMat::from_element(1, 1, *d)).collect();
        let z = crate::linalg::c(0.4, 0.2);
        let point = CMat::from_element(1, 1, z);
        let (value, tail) = ft.evaluate_symbol(&coeffs, &point, &tol).unwrap();
        let mut expect = crate::linalg::c(0.0, 0.0);
        let mut p = crate::linalg::c(1.0, 0.0);
        for d in &ds {
            expect += d * p;
            p *= z.conj();
        }
        assert!((value[(0, 0)] - expect).norm() < 1e-10, "value {} expect {}", value[(0, 0)], expect);
        assert!(tail.is_finite());
        let far = CMat::from_element(1, 1, crate::linalg::c(1.2, 0.0));
        assert!(matches!(ft.evaluate_symbol(&coeffs, &far, &tol), Err(Error::Validation(_))));
    }

    #[test]
    fn dual_of_tensor_with_the_identity_recovers_the_dual() {
        let (e, sigma) = swap_correspondence();
        let id = Correspondence::identity(&e.algebra);
        let data = dual_tensor_iso(&e, &id, &sigma, &Tol::default()).unwrap();
        assert!(data.span_residual < 1e-8, "span {}", data.span_residual);
        assert!(data.unitarity_residual < 1e-8, "unit {}", data.unitarity_residual);
        assert_eq!(data.whole.dim, data.pairs.dim);
    }

    #[test]
    fn dual_tensor_iso_is_unitary_for_the_scalar_square() {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let data = dual_tensor_iso(&e, &e, &sigma, &Tol::default()).unwrap();
        assert_eq!(data.gamma.nrows(), 4);
        assert_eq!(data.gamma.ncols(), 16);
        assert!(data.span_residual < 1e-8);
        assert!(data.unitarity_residual < 1e-8);
    }

    #[test]
    fn reversed_pairing_fails_for_the_swap_twist() {
        let (e, sigma) = swap_correspondence();
        let tol = Tol::default();
        let data = dual_tensor_iso(&e, &e, &sigma, &tol).unwrap();
        assert!(data.unitarity_residual < 1e-8);
        // reassign each pair to the opposite order; the reversed map is not
        // balanced over the commutant and cannot stay unitary
        let h = sigma.carrier_dim();
        let n = data.gamma.ncols();
        let side = (n as f64).sqrt() as usize;
        let mut swapped = zeros(data.gamma.nrows(), n);
        for i2 in 0..side {
            for i1 in 0..side {
                swapped.set_column(i2 * side + i1, &data.gamma.column(i1 * side + i2));
            }
        }
        let wrong = &data.whole.factor * kron(&swapped, &eye(h)) * &data.raw_pair_section;
        let res = op_norm(&(wrong.adjoint() * &wrong - eye(data.pairs.dim)));
        assert!(res > 0.1, "reversed pairing unexpectedly unitary: {res}");
    }
}

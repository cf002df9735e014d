//! Truncated Fock correspondence F_N(E) and its localization against a
//! representation: graded spaces, creation operators, induced actions, and
//! right insertion maps used for commutant symbols.

use crate::algebra::{AlgebraElement, Representation};
use crate::correspondence::{localize, tensor, Correspondence, LocalizedSpace};
use crate::error::{Error, Result};
use crate::linalg::{block_diag, eye, kron, zeros, CMat, CVec};
use crate::tol::Tol;

/// Tensor powers of a correspondence up to a cutoff, with the quotient maps
/// that relate ambient product coordinates of consecutive grades. Powers are
/// nested on the left: grade k+1 is E (x) grade k.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    pub base: Correspondence,
    pub level: usize,
    pub grades: Vec<Correspondence>,
    /// Entry k-1 holds (q_k, r_k): q_k maps C^{d_E * amb_{k-1}} onto grade-k
    /// coordinates and r_k is its section.
    quotients: Vec<(CMat, CMat)>,
}

/// Soft cap on the total generator count across grades.
pub const DEFAULT_DIM_CAP: usize = 40_000;

pub fn truncated_fock(
    base: &Correspondence,
    level: usize,
    tol: &Tol,
    dim_cap: usize,
) -> Result<TruncatedFock> {
    let alg = base.algebra.clone();
    let mut grades = vec![Correspondence::identity(&alg)];
    let mut quotients = Vec::new();
    if level >= 1 {
        // grade 1 is E itself; the quotient folds the right algebra factor
        // into the generators: xi (x) a -> xi . a.
        let dm = alg.dim();
        let de = base.dim;
        let mut q1 = zeros(de, de * dm);
        for p in 0..de {
            for u in 0..dm {
                let col = base.right_unit(u).column(p).clone_owned();
                for r in 0..de {
                    q1[(r, p * dm + u)] = col[r];
                }
            }
        }
        let one = alg.identity().coords();
        let mut r1 = zeros(de * dm, de);
        for p in 0..de {
            for u in 0..dm {
                r1[(p * dm + u, p)] = one[u];
            }
        }
        grades.push(base.clone());
        quotients.push((q1, r1));
    }
    let mut total = grades.iter().map(|g| g.dim).sum::<usize>();
    for _k in 2..=level {
        let t = tensor(base, grades.last().unwrap(), tol)?;
        total += t.corr.dim;
        if total > dim_cap {
            return Err(Error::Resource(format!(
                "Fock truncation exceeds generator budget ({total} > {dim_cap})"
            )));
        }
        grades.push(t.corr);
        quotients.push((t.q, t.r));
    }
    Ok(TruncatedFock { base: base.clone(), level, grades, quotients })
}

impl TruncatedFock {
    pub fn quotient(&self, k: usize) -> &(CMat, CMat) {
        &self.quotients[k - 1]
    }

    pub fn grade_dim(&self, k: usize) -> usize {
        self.grades[k].dim
    }

    /// Append map amb_j (x) amb_k -> amb_{j+k} splicing a grade-k tensor
    /// behind a grade-j tensor (j + k within the truncation).
    pub fn append(&self, j: usize, k: usize) -> CMat {
        assert!(j + k <= self.level || (j + k == 0 && self.level == 0));
        let ambk = self.grade_dim(k);
        if j == 0 {
            // left action of the algebra factor on grade k
            let dm = self.grades[0].dim;
            let mut s = zeros(ambk, dm * ambk);
            for u in 0..dm {
                let act = self.grades[k].left_unit(u);
                for t in 0..ambk {
                    for r in 0..ambk {
                        s[(r, u * ambk + t)] = act[(r, t)];
                    }
                }
            }
            s
        } else {
            let de = self.base.dim;
            let prev = self.append(j - 1, k);
            let (qjk, _) = self.quotient(j + k);
            let (_, rj) = self.quotient(j);
            qjk * kron(&eye(de), &prev) * kron(rj, &eye(ambk))
        }
    }
}

/// Realization of E (x) U on a concrete space: `p` maps product coordinates
/// C^{d_E} (x) U onto the realization, `pplus` is the compatible section.
#[derive(Debug, Clone)]
pub struct ETensor {
    pub de: usize,
    pub p: CMat,
    pub pplus: CMat,
}

/// Functorial action of E (x) - on a map x: U -> W between realized spaces.
pub fn e_map(x: &CMat, dom: &ETensor, cod: &ETensor) -> CMat {
    assert_eq!(dom.de, cod.de);
    &cod.p * kron(&eye(dom.de), x) * &dom.pplus
}

impl LocalizedSpace {
    /// View E (x)_sigma H as the realization of E tensored against H.
    pub fn as_etensor(&self) -> ETensor {
        ETensor { de: self.amb, p: self.factor.clone(), pplus: self.pinv.clone() }
    }
}

/// Localized truncated Fock space: the direct sum over grades of
/// grade_k (x)_rep H, with creation and insertion operators.
#[derive(Debug, Clone)]
pub struct FockModule {
    pub fock: TruncatedFock,
    pub rep: Representation,
    pub locs: Vec<LocalizedSpace>,
    pub offsets: Vec<usize>,
    pub total: usize,
}

pub fn fock_module(fock: TruncatedFock, rep: Representation, tol: &Tol) -> Result<FockModule> {
    let mut locs = Vec::with_capacity(fock.level + 1);
    let mut offsets = Vec::with_capacity(fock.level + 1);
    let mut total = 0usize;
    for k in 0..=fock.level {
        let loc = localize(&fock.grades[k], &rep, tol)?;
        offsets.push(total);
        total += loc.dim;
        locs.push(loc);
    }
    Ok(FockModule { fock, rep, locs, offsets, total })
}

impl FockModule {
    pub fn level(&self) -> usize {
        self.fock.level
    }

    pub fn grade_dim(&self, k: usize) -> usize {
        self.locs[k].dim
    }

    pub fn grade_offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Column embedding of grade k into the full space.
    pub fn embed(&self, k: usize) -> CMat {
        let mut e = zeros(self.total, self.locs[k].dim);
        for r in 0..self.locs[k].dim {
            e[(self.offsets[k] + r, r)] = crate::linalg::cre(1.0);
        }
        e
    }

    pub fn grade_block<'a>(&self, m: &'a CMat, row: usize, col: usize) -> CMat {
        m.view(
            (self.offsets[row], self.offsets[col]),
            (self.locs[row].dim, self.locs[col].dim),
        )
        .clone_owned()
    }

    /// Unitary from the representation carrier onto grade zero, h -> 1 (x) h.
    pub fn vac(&self) -> CMat {
        let one = self.fock.grades[0].algebra.identity().coords();
        let h = self.rep.carrier_dim();
        let onemat = CMat::from_fn(one.len(), 1, |r, _| one[r]);
        &self.locs[0].factor * kron(&onemat, &eye(h))
    }

    /// Induced algebra action, block diagonal across grades.
    pub fn phi(&self, a: &AlgebraElement) -> CMat {
        let parts: Vec<CMat> = self.locs.iter().map(|l| l.left(a)).collect();
        let refs: Vec<&CMat> = parts.iter().collect();
        block_diag(&refs)
    }

    /// Realization of E (x) grade_k as grade k+1 (k+1 within the level).
    pub fn etensor(&self, k: usize) -> ETensor {
        assert!(k + 1 <= self.fock.level, "no room above grade {k}");
        let de = self.fock.base.dim;
        let h = self.rep.carrier_dim();
        let (qk, rk) = self.fock.quotient(k + 1);
        let p = &self.locs[k + 1].factor * kron(qk, &eye(h)) * kron(&eye(de), &self.locs[k].pinv);
        let pplus =
            kron(&eye(de), &self.locs[k].factor) * kron(rk, &eye(h)) * &self.locs[k + 1].pinv;
        ETensor { de, p, pplus }
    }

    /// Creation block from grade k to grade k+1 for the coordinate vector xi.
    pub fn creation_block(&self, k: usize, xi: &CVec) -> CMat {
        let et = self.etensor(k);
        let ximat = CMat::from_fn(xi.len(), 1, |r, _| xi[r]);
        // xi (x) - : grade_k -> E (x) grade_k in product coordinates
        let lift = kron(&ximat, &eye(self.locs[k].dim));
        &et.p * lift
    }

    /// Creation operator on the whole truncated space; the top grade is
    /// annihilated.
    pub fn creation(&self, xi: &CVec) -> CMat {
        let mut m = zeros(self.total, self.total);
        for k in 0..self.fock.level {
            let blk = self.creation_block(k, xi);
            m.view_mut(
                (self.offsets[k + 1], self.offsets[k]),
                (self.locs[k + 1].dim, self.locs[k].dim),
            )
            .copy_from(&blk);
        }
        m
    }

    /// Right insertion of a grade-k intertwiner eta: H -> grade_k (x) H,
    /// acting grade j -> grade j+k by splicing eta behind the tensor.
    pub fn right_insertion(&self, k: usize, eta: &CMat) -> CMat {
        assert_eq!(eta.nrows(), self.locs[k].dim);
        assert_eq!(eta.ncols(), self.rep.carrier_dim());
        let h = self.rep.carrier_dim();
        let eta_pre = &self.locs[k].pinv * eta;
        let mut m = zeros(self.total, self.total);
        for j in 0..=self.fock.level {
            if j + k > self.fock.level {
                break;
            }
            let s = self.fock.append(j, k);
            let ambj = self.fock.grade_dim(j);
            let blk = &self.locs[j + k].factor
                * kron(&s, &eye(h))
                * kron(&eye(ambj), &eta_pre)
                * &self.locs[j].pinv;
            m.view_mut(
                (self.offsets[j + k], self.offsets[j]),
                (self.locs[j + k].dim, self.locs[j].dim),
            )
            .copy_from(&blk);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiMatrixAlgebra;
    use crate::linalg::{cre, op_norm};

    fn scalar_fock(level: usize) -> FockModule {
        let e = Correspondence::free(1);
        let alg = e.algebra.clone();
        let f = truncated_fock(&e, level, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let rep = Representation::multiplicity_one(&alg);
        fock_module(f, rep, &Tol::default()).unwrap()
    }

    #[test]
    fn scalar_fock_is_a_shift() {
        let fm = scalar_fock(4);
        assert_eq!(fm.total, 5);
        let c1 = fm.creation(&CVec::from_vec(vec![cre(1.0)]));
        // subdiagonal shift annihilating the top grade
        for r in 0..5 {
            for cidx in 0..5 {
                let expect = if r == cidx + 1 { 1.0 } else { 0.0 };
                assert!((c1[(r, cidx)].re - expect).abs() < 1e-12, "at {r},{cidx}");
            }
        }
        assert!(op_norm(&(c1.adjoint() * &c1 + fm.embed(4) * fm.embed(4).adjoint() - eye(5))) < 1e-12);
    }

    #[test]
    fn vac_is_unitary() {
        let alg = MultiMatrixAlgebra::new(vec![1, 2]).unwrap();
        let e = Correspondence::identity(&alg);
        let f = truncated_fock(&e, 2, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let rep = Representation::new(alg, vec![1, 1]).unwrap();
        let fm = fock_module(f, rep.clone(), &Tol::default()).unwrap();
        let v = fm.vac();
        assert_eq!(v.ncols(), rep.carrier_dim());
        assert_eq!(v.nrows(), fm.grade_dim(0));
        assert!(op_norm(&(v.adjoint() * &v - eye(rep.carrier_dim()))) < 1e-12);
        assert!(op_norm(&(&v * v.adjoint() - eye(fm.grade_dim(0)))) < 1e-12);
    }

    #[test]
    fn graph_fock_grades_follow_paths() {
        // loop at 0 and edge 0 -> 1: exactly two paths of every length >= 1
        let e = Correspondence::from_graph(2, &[(0, 0), (0, 1)]).unwrap();
        let f = truncated_fock(&e, 4, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        for k in 1..=4 {
            assert_eq!(f.grade_dim(k), 2, "grade {k}");
        }
        let rep = Representation::multiplicity_one(&e.algebra);
        let fm = fock_module(f, rep, &Tol::default()).unwrap();
        for k in 1..=4 {
            assert_eq!(fm.grade_dim(k), 2);
        }
    }

    #[test]
    fn creation_intertwines_induced_action() {
        let e = Correspondence::free(2);
        let alg = e.algebra.clone();
        let f = truncated_fock(&e, 3, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let rep = Representation::new(alg.clone(), vec![2]).unwrap();
        let fm = fock_module(f, rep, &Tol::default()).unwrap();
        let xi = CVec::from_vec(vec![cre(1.0), cre(-2.0)]);
        let t = fm.creation(&xi);
        let a = fm.phi(&alg.identity().scale(crate::linalg::c(0.0, 1.0)));
        // over the scalars the induced action is central
        assert!(op_norm(&(&t * &a - &a * &t)) < 1e-12);
    }

    #[test]
    fn etensor_section_is_right_inverse() {
        let e = Correspondence::from_graph(2, &[(0, 0), (0, 1)]).unwrap();
        let f = truncated_fock(&e, 3, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let rep = Representation::multiplicity_one(&e.algebra);
        let fm = fock_module(f, rep, &Tol::default()).unwrap();
        for k in 0..3 {
            let et = fm.etensor(k);
            let prod = &et.p * &et.pplus;
            assert!(op_norm(&(prod - eye(fm.grade_dim(k + 1)))) < 1e-10, "grade {k}");
        }
    }

    #[test]
    fn scalar_right_insertion_matches_creation_power() {
        let fm = scalar_fock(5);
        // grade-2 intertwiner: vacuum pushed up twice
        let xi = CVec::from_vec(vec![cre(1.0)]);
        let c1 = fm.creation(&xi);
        let v0 = fm.embed(0) * fm.vac();
        let eta_full = &c1 * &c1 * &v0;
        let eta = fm.grade_block(&(&eta_full * eta_full.adjoint()), 2, 2).column(0).clone_owned();
        let eta_mat = CMat::from_fn(fm.grade_dim(2), 1, |r, _| eta[r]);
        let r2 = fm.right_insertion(2, &eta_mat);
        let c2 = &c1 * &c1;
        assert!(op_norm(&(r2 - c2)) < 1e-10);
    }
}

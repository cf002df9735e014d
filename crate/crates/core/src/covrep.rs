//! Contractive covariant representations: the intertwining contraction
//! T: E (x)_sigma H -> H, its defect operators, generalized powers along the
//! Fock grades, and the asymptotic classification verdicts.

use crate::algebra::Representation;
use crate::correspondence::{localize, Correspondence, LocalizedSpace};
use crate::error::{Error, Result};
use crate::fock::{e_map, FockModule};
use crate::linalg::{
    eye, null_basis, op_norm, psd_range_basis, psd_sqrt, zeros, CMat, CVec,
};
use crate::tol::Tol;

#[derive(Debug, Clone)]
pub struct CovariantRep {
    pub corr: Correspondence,
    pub sigma: Representation,
    pub eh: LocalizedSpace,
    /// The intertwining contraction on localized coordinates, h x eh.dim.
    pub ttilde: CMat,
}

/// Residuals gathered while admitting a covariant representation.
#[derive(Debug, Clone)]
pub struct CovRepReport {
    pub contraction_norm: f64,
    pub covariance_residual: f64,
    /// How far the supplied matrix was from vanishing on the Gram null
    /// space (only relevant when given in product coordinates).
    pub wellposed_residual: f64,
}

/// Admit T given either on product coordinates C^{d_E * h} or directly on
/// the localized space; the shape disambiguates.
pub fn covariant_rep(
    corr: &Correspondence,
    sigma: &Representation,
    t_input: &CMat,
    tol: &Tol,
) -> Result<(CovariantRep, CovRepReport)> {
    let eh = localize(corr, sigma, tol)?;
    let h = sigma.carrier_dim();
    if t_input.nrows() != h {
        return Err(Error::Structure(format!(
            "T must have {h} rows matching the carrier, got {}",
            t_input.nrows()
        )));
    }
    let (ttilde, wellposed_residual) = if t_input.ncols() == eh.dim {
        (t_input.clone(), 0.0)
    } else if t_input.ncols() == corr.dim * h {
        // must factor through the class map of E (x)_sigma H
        let resid = op_norm(&(t_input - t_input * (&eh.pinv * &eh.factor)));
        let scale = op_norm(t_input).max(1.0);
        if resid > tol.op(corr.dim * h) * scale {
            return Err(Error::Validation(format!(
                "T does not vanish on the inner-product null space (residual {resid:.3e})"
            )));
        }
        (t_input * &eh.pinv, resid)
    } else {
        return Err(Error::Structure(format!(
            "T must have {} (localized) or {} (product) columns, got {}",
            eh.dim,
            corr.dim * h,
            t_input.ncols()
        )));
    };

    let contraction_norm = op_norm(&ttilde);
    if contraction_norm > 1.0 + tol.op(h.max(1)) {
        return Err(Error::Validation(format!(
            "T is not a contraction: norm {contraction_norm:.12}"
        )));
    }
    let mut covariance_residual = 0.0f64;
    for (b, i, j) in corr.algebra.units() {
        let a = corr.algebra.unit(b, i, j);
        let lhs = &ttilde * eh.left(&a);
        let rhs = sigma.matrix(&a) * &ttilde;
        covariance_residual = covariance_residual.max(op_norm(&(lhs - rhs)));
    }
    if covariance_residual > tol.op(h.max(1)) {
        return Err(Error::Validation(format!(
            "T fails covariance by {covariance_residual:.3e}"
        )));
    }
    let rep = CovariantRep { corr: corr.clone(), sigma: sigma.clone(), eh, ttilde };
    Ok((rep, CovRepReport { contraction_norm, covariance_residual, wellposed_residual }))
}

impl CovariantRep {
    pub fn h(&self) -> usize {
        self.sigma.carrier_dim()
    }

    /// The single-vector operator T(xi): h -> h.
    pub fn t_of(&self, xi: &CVec) -> CMat {
        &self.ttilde * self.eh.lxi(xi)
    }

    /// Direct sum with another representation of the same correspondence.
    pub fn direct_sum(&self, other: &CovariantRep, tol: &Tol) -> Result<CovariantRep> {
        if self.corr.algebra != other.corr.algebra || self.corr.dim != other.corr.dim {
            return Err(Error::Structure("direct sum needs the same correspondence".into()));
        }
        let sigma = Representation::direct_sum(&[&self.sigma, &other.sigma])?;
        let eh = localize(&self.corr, &sigma, tol)?;
        let h1 = self.h();
        let h2 = other.h();
        let mut emb1 = zeros(h1 + h2, h1);
        let mut emb2 = zeros(h1 + h2, h2);
        for i in 0..h1 {
            emb1[(i, i)] = crate::linalg::cre(1.0);
        }
        for i in 0..h2 {
            emb2[(h1 + i, i)] = crate::linalg::cre(1.0);
        }
        // class-preserving isometries E (x) H_i -> E (x) (H_1 + H_2)
        let conn1 = &eh.factor * crate::linalg::kron(&eye(self.corr.dim), &emb1) * &self.eh.pinv;
        let conn2 = &eh.factor * crate::linalg::kron(&eye(self.corr.dim), &emb2) * &other.eh.pinv;
        let ttilde = emb1 * &self.ttilde * conn1.adjoint() + emb2 * &other.ttilde * conn2.adjoint();
        Ok(CovariantRep { corr: self.corr.clone(), sigma, eh, ttilde })
    }

    /// Defect operators, defect spaces, and the induced representations on
    /// them.
    pub fn defects(&self, tol: &Tol) -> Result<DefectData> {
        let h = self.h();
        let tt = &self.ttilde;
        let lhs = eye(self.eh.dim) - tt.adjoint() * tt;
        let rhs = eye(h) - tt * tt.adjoint();
        let neg = tol.op(self.eh.dim.max(h));
        let delta = psd_sqrt(&lhs, neg)?;
        let delta_star = psd_sqrt(&rhs, neg)?;
        let d_basis = psd_range_basis(&lhs, tol.null_rel);
        let dstar_basis = psd_range_basis(&rhs, tol.null_rel);

        // D reduces the induced action, D_* reduces sigma.
        let units = self.corr.algebra.units();
        let imgs1: Vec<CMat> = units
            .iter()
            .map(|&(b, i, j)| {
                let a = self.corr.algebra.unit(b, i, j);
                d_basis.adjoint() * self.eh.left(&a) * &d_basis
            })
            .collect();
        let imgs2: Vec<CMat> = units
            .iter()
            .map(|&(b, i, j)| {
                let a = self.corr.algebra.unit(b, i, j);
                dstar_basis.adjoint() * self.sigma.matrix(&a) * &dstar_basis
            })
            .collect();
        let (tau1, tau1_residual) = Representation::from_action(&self.corr.algebra, &imgs1, tol)?;
        let (tau2, tau2_residual) = Representation::from_action(&self.corr.algebra, &imgs2, tol)?;
        Ok(DefectData {
            delta,
            delta_star,
            d_basis,
            dstar_basis,
            tau1,
            tau2,
            tau1_residual,
            tau2_residual,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DefectData {
    /// (I - T* T)^{1/2} on E (x) H.
    pub delta: CMat,
    /// (I - T T*)^{1/2} on H.
    pub delta_star: CMat,
    /// Orthonormal basis of the defect space D = closure of range delta.
    pub d_basis: CMat,
    /// Orthonormal basis of D_* = closure of range delta_star.
    pub dstar_basis: CMat,
    /// Induced action compressed to D, in canonical form.
    pub tau1: Representation,
    /// sigma compressed to D_*.
    pub tau2: Representation,
    pub tau1_residual: f64,
    pub tau2_residual: f64,
}

impl DefectData {
    pub fn d_dim(&self) -> usize {
        self.d_basis.ncols()
    }

    pub fn dstar_dim(&self) -> usize {
        self.dstar_basis.ncols()
    }
}

/// Generalized powers T_k: grade_k (x)_sigma H -> H for k = 0..=upto,
/// computed on the localized grades of `fm` (which must be built over the
/// same sigma).
pub fn gen_powers(rep: &CovariantRep, fm: &FockModule, upto: usize) -> Vec<CMat> {
    assert!(upto <= fm.level());
    let h = rep.h();
    let mut out = Vec::with_capacity(upto + 1);
    out.push(fm.vac().adjoint());
    if upto == 0 {
        return out;
    }
    // identify the module's grade one with the representation's E (x) H
    let conn1 = &rep.eh.factor * &fm.locs[1].pinv;
    out.push(&rep.ttilde * conn1);
    let cod = rep.eh.as_etensor();
    for m in 1..upto {
        let dom = fm.etensor(m);
        let lifted = e_map(&out[m], &dom, &cod);
        out.push(&rep.ttilde * lifted);
    }
    let _ = h;
    out
}

/// Asymptotic vanishing verdict for the generalized powers.
#[derive(Debug, Clone)]
pub enum ZeroVerdict {
    /// Certified at every level: strict contraction or nilpotent.
    Exact { reason: String },
    /// The examined window is below tolerance but no certificate applies.
    Bounded { level: usize, norm: f64 },
    /// The examined window does not decide.
    Undecided { level: usize, norm: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Exact { .. } | ZeroVerdict::Bounded { .. })
    }
}

#[derive(Debug, Clone)]
pub struct C0Report {
    pub verdict: ZeroVerdict,
    pub power_norms: Vec<f64>,
}

/// Decide whether the generalized powers tend to zero (the analogue of a
/// pure contraction), using the truncation level of `fm` as the horizon.
pub fn classify_c0(rep: &CovariantRep, fm: &FockModule, tol: &Tol) -> C0Report {
    let n = fm.level();
    let powers = gen_powers(rep, fm, n);
    let power_norms: Vec<f64> = powers.iter().map(op_norm).collect();
    let tnorm = op_norm(&rep.ttilde);
    let verdict = if tnorm < 1.0 - 1e-8 {
        ZeroVerdict::Exact { reason: format!("strict contraction, norm {tnorm:.6}") }
    } else if let Some(k) = power_norms.iter().position(|&x| x <= tol.op(rep.h())) {
        if k == 0 {
            ZeroVerdict::Exact { reason: "zero carrier".into() }
        } else {
            ZeroVerdict::Exact { reason: format!("nilpotent: power {k} vanishes") }
        }
    } else {
        let last = *power_norms.last().unwrap();
        if last * last <= tol.op(rep.h()) {
            ZeroVerdict::Bounded { level: n, norm: last }
        } else {
            ZeroVerdict::Undecided { level: n, norm: last }
        }
    };
    C0Report { verdict, power_norms }
}

#[derive(Debug, Clone)]
pub struct CncReport {
    /// True when no nonzero vector is coisometric for every power.
    pub cnc: bool,
    pub fixed_dim: usize,
    /// Orthonormal basis of the subspace every power acts coisometrically on.
    pub fixed_basis: CMat,
    pub levels_used: usize,
    pub stabilized: bool,
}

/// Completely noncoisometric test: intersect the eigenvalue-one eigenspaces
/// of T_n T_n^* until the dimension stabilizes for two consecutive levels.
pub fn classify_cnc(rep: &CovariantRep, fm: &FockModule, tol: &Tol) -> CncReport {
    let n = fm.level();
    let powers = gen_powers(rep, fm, n);
    let h = rep.h();
    let mut basis = eye(h);
    let mut stable_run = 0usize;
    let mut levels_used = 0usize;
    for (k, tk) in powers.iter().enumerate().skip(1) {
        let prod = tk * tk.adjoint();
        // eigenvalue-one eigenspace of a PSD contraction; the spectrum lives
        // in [0, 1], so the cut is absolute rather than data scaled
        let (vals, vecs) = crate::linalg::herm_eigen(&prod);
        let keep: Vec<usize> =
            (0..vals.len()).filter(|&i| vals[i] >= 1.0 - tol.base.sqrt()).collect();
        let fixed = crate::linalg::select_columns(&vecs, &keep);
        let before = basis.ncols();
        basis = intersect(&basis, &fixed, tol);
        levels_used = k;
        if basis.ncols() == before {
            stable_run += 1;
            if stable_run >= 2 || basis.ncols() == 0 {
                break;
            }
        } else {
            stable_run = 0;
        }
        if basis.ncols() == 0 {
            break;
        }
    }
    CncReport {
        cnc: basis.ncols() == 0,
        fixed_dim: basis.ncols(),
        stabilized: stable_run >= 2 || basis.ncols() == 0,
        fixed_basis: basis,
        levels_used,
    }
}

/// Orthonormal basis of the intersection of two column spans.
fn intersect(a: &CMat, b: &CMat, tol: &Tol) -> CMat {
    if a.ncols() == 0 || b.ncols() == 0 {
        return zeros(a.nrows(), 0);
    }
    // vectors a x with (I - P_b) a x = 0
    let pb = b * b.adjoint();
    let rest = a - &pb * a;
    let inside = null_basis(&rest, tol.null_rel.sqrt());
    let raw = a * inside;
    // columns are already orthonormal up to fp because a has orthonormal
    // columns and `inside` is orthonormal in coordinate space
    raw
}

/// Measured decay rate of the compressed transfer map, used for tail bounds:
/// the norm of x -> T (xi (x) x) maximized over unit xi is bounded by the
/// norm of T itself; we report the operator norm of T as the rate.
pub fn tail_rate(rep: &CovariantRep) -> f64 {
    op_norm(&rep.ttilde)
}

/// Geometric tail bound r^{n+1} / (1 - r), infinite when r >= 1.
pub fn geometric_tail(r: f64, n: usize) -> Option<f64> {
    if r < 1.0 {
        Some(r.powi(n as i32 + 1) / (1.0 - r))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fock_module, truncated_fock, DEFAULT_DIM_CAP};
    use crate::linalg::cre;

    fn scalar_rep(t: f64) -> (CovariantRep, FockModule) {
        let e = Correspondence::free(1);
        let sigma = Representation::multiplicity_one(&e.algebra);
        let tm = CMat::from_row_slice(1, 1, &[cre(t)]);
        let (rep, _) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        let f = truncated_fock(&e, 6, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(f, sigma, &Tol::default()).unwrap();
        (rep, fm)
    }

    fn jordan_rep() -> (CovariantRep, FockModule) {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let tm = CMat::from_row_slice(
            2,
            2,
            &[cre(0.0), cre(1.0), cre(0.0), cre(0.0)],
        );
        let (rep, _) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        let f = truncated_fock(&e, 6, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(f, sigma.clone(), &Tol::default()).unwrap();
        (rep, fm)
    }

    #[test]
    fn scalar_powers_are_geometric() {
        let (rep, fm) = scalar_rep(0.5);
        let powers = gen_powers(&rep, &fm, 5);
        for (k, p) in powers.iter().enumerate() {
            assert!((op_norm(p) - 0.5f64.powi(k as i32)).abs() < 1e-12, "power {k}");
        }
    }

    #[test]
    fn jordan_is_nilpotent_c0_and_cnc() {
        let (rep, fm) = jordan_rep();
        let powers = gen_powers(&rep, &fm, 3);
        assert!(op_norm(&powers[1]) > 0.9);
        assert!(op_norm(&powers[2]) < 1e-13);
        let c0 = classify_c0(&rep, &fm, &Tol::default());
        assert!(matches!(c0.verdict, ZeroVerdict::Exact { .. }));
        let cnc = classify_cnc(&rep, &fm, &Tol::default());
        assert!(cnc.cnc);
    }

    #[test]
    fn rotation_is_not_cnc() {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let tm = CMat::from_row_slice(2, 2, &[cre(0.0), cre(-1.0), cre(1.0), cre(0.0)]);
        let (rep, _) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        let f = truncated_fock(&e, 5, &Tol::default(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(f, sigma, &Tol::default()).unwrap();
        let c0 = classify_c0(&rep, &fm, &Tol::default());
        assert!(matches!(c0.verdict, ZeroVerdict::Undecided { .. }));
        let cnc = classify_cnc(&rep, &fm, &Tol::default());
        assert!(!cnc.cnc);
        assert_eq!(cnc.fixed_dim, 2);
    }

    #[test]
    fn defect_dimensions_for_jordan() {
        let (rep, _) = jordan_rep();
        let d = rep.defects(&Tol::default()).unwrap();
        assert_eq!(d.d_dim(), 1);
        assert_eq!(d.dstar_dim(), 1);
        // defect squares to the complementary projection
        let g = &d.delta * &d.delta;
        let expect = eye(2) - rep.ttilde.adjoint() * &rep.ttilde;
        assert!(op_norm(&(g - expect)) < 1e-12);
    }

    #[test]
    fn row_contraction_covariance() {
        let e = Correspondence::free(2);
        let sigma = Representation::multiplicity_one(&e.algebra);
        let tm = CMat::from_row_slice(1, 2, &[cre(0.6), cre(0.3)]);
        let (rep, report) = covariant_rep(&e, &sigma, &tm, &Tol::default()).unwrap();
        assert!(report.contraction_norm < 0.7);
        assert!(report.covariance_residual < 1e-13);
        let d = rep.defects(&Tol::default()).unwrap();
        assert_eq!(d.d_dim(), 2);
        assert_eq!(d.dstar_dim(), 1);
    }

    #[test]
    fn direct_sum_stacks_blocks() {
        let (r1, _) = scalar_rep(0.5);
        let (r2, _) = jordan_rep();
        let sum = r1.direct_sum(&r2, &Tol::default()).unwrap();
        assert_eq!(sum.h(), 3);
        assert!((op_norm(&sum.ttilde) - 1.0).abs() < 1e-12);
        let xi = CVec::from_vec(vec![cre(1.0)]);
        let t = sum.t_of(&xi);
        assert!((t[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((t[(1, 2)].re - 1.0).abs() < 1e-12);
    }
}

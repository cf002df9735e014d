//! Characteristic operator of a covariant representation: the contraction
//! between defect Fock modules cut out of the dilation, its coefficient
//! symbol, pointwise evaluation, and the inner/pure/predictable predicates.

use crate::algebra::{supplement, SupplementData};
use crate::covrep::{classify_c0, tail_rate, CovariantRep, DefectData};
use crate::dilation::{
    dilate, p_infinity, wandering_map, BaseWandering, Dilation, PInfinity, WanderingMap,
};
use crate::error::{Error, Result};
use crate::fock::{fock_module, truncated_fock, FockModule, DEFAULT_DIM_CAP};
use crate::linalg::{
    cre, eye, kron, null_basis, op_norm, psd_range_basis, range_basis, subspace_distance,
    thresholded_psd_root, zeros, CMat, CVec,
};
use crate::tol::Tol;

/// The characteristic operator between truncated defect Fock modules,
/// together with enough context to evaluate and classify it. `rep` and
/// `defects` are present when the data came from a covariant representation;
/// hand-built symbols leave them empty.
#[derive(Debug, Clone)]
pub struct CharacteristicData {
    pub fm1: FockModule,
    pub fm2: FockModule,
    pub theta: CMat,
    pub rep: Option<CovariantRep>,
    pub defects: Option<DefectData>,
    /// Measured decay rate of the source representation, for tail bounds.
    pub tail_rate: Option<f64>,
    /// Whether the source classified as asymptotically vanishing.
    pub c0_zero: Option<bool>,
    pub contraction_norm: f64,
    /// Worst commutation defect against creation operators, interior grades.
    pub creation_residual: f64,
    /// Worst commutation defect against the induced algebra action.
    pub action_residual: f64,
    pub connector_residual: f64,
    /// Dilation-side machinery, kept for model building and lifting.
    pub machine: Option<DilationMachine>,
}

/// The pieces of the dilation that the operator was composed from. The
/// defect-copy wandering module is `fm1` of the owning data.
#[derive(Debug, Clone)]
pub struct DilationMachine {
    pub dil: Dilation,
    /// Wandering map matrix of the defect copy.
    pub wd_w: CMat,
    /// Wandering map of the base wandering subspace, with its own module.
    pub winf: WanderingMap,
    /// Gradewise unitary from the base-wandering module onto `fm2`.
    pub conn: CMat,
    /// Complement of the word span of the base wandering subspace.
    pub remainder: CMat,
    pub base: BaseWandering,
}

fn intertwining_residuals(fm1: &FockModule, fm2: &FockModule, theta: &CMat) -> (f64, f64) {
    let level = fm1.level();
    let de = fm1.fock.base.dim;
    // interior projector: drop the top grade on the domain side, since the
    // truncation annihilates what creation sends there
    let mut pint = zeros(fm1.total, fm1.total);
    for k in 0..level {
        for r in 0..fm1.locs[k].dim {
            let i = fm1.grade_offset(k) + r;
            pint[(i, i)] = cre(1.0);
        }
    }
    let mut cre_res = 0.0f64;
    for p in 0..de {
        let unit = CVec::from_fn(de, |r, _| {
            if r == p {
                cre(1.0)
            } else {
                cre(0.0)
            }
        });
        let c1 = fm1.creation(&unit);
        let c2 = fm2.creation(&unit);
        let diff = (theta * &c1 - &c2 * theta) * &pint;
        cre_res = cre_res.max(op_norm(&diff));
    }
    let mut act_res = 0.0f64;
    for &(b, i, j) in &fm1.fock.base.algebra.units() {
        let a = fm1.fock.base.algebra.unit(b, i, j);
        let p1 = fm1.phi(&a);
        let p2 = fm2.phi(&a);
        let diff = theta * &p1 - &p2 * theta;
        act_res = act_res.max(op_norm(&diff));
    }
    (cre_res, act_res)
}

/// Build the characteristic operator of a covariant representation at the
/// given truncation level by composing the two wandering maps of its
/// dilation around the chain remainder.
pub fn characteristic_operator(
    rep: &CovariantRep,
    level: usize,
    tol: &Tol,
) -> Result<CharacteristicData> {
    let defects = rep.defects(tol)?;
    let dil = dilate(rep, level, tol)?;
    let f_sigma = truncated_fock(&rep.corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm_sigma = fock_module(f_sigma, rep.sigma.clone(), tol)?;
    let c0 = classify_c0(rep, &fm_sigma, tol);
    let chain = dil.projection_chain();
    let pinf = p_infinity(&chain, &c0.verdict, tol);
    let p_mat = match &pinf {
        PInfinity::ExactZero => zeros(dil.k_dim, dil.k_dim),
        PInfinity::Stabilized(p) => p.clone(),
        PInfinity::Undecided { level, delta } => {
            return Err(Error::Undecided {
                level: *level,
                what: format!("projection chain still moving by {delta:.3e}"),
            })
        }
    };
    let base = dil.base_wandering(tol)?;
    let s_basis = dil.embed_grade(0) * dil.fockd.vac();
    let wd = wandering_map(&dil, &s_basis, &defects.tau1, level, tol)?;
    let winf = wandering_map(&dil, &base.basis, &base.rep_k0, level, tol)?;
    let f2 = truncated_fock(&rep.corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm2 = fock_module(f2, defects.tau2.clone(), tol)?;

    // gradewise I (x) u, carrying the K0 Fock module onto the tau2 module
    let mut conn = zeros(fm2.total, winf.fm.total);
    let mut connector_residual = base.unitary_residual;
    for k in 0..=level {
        let gk = fm2.fock.grade_dim(k);
        let ck = &fm2.locs[k].factor * kron(&eye(gk), &base.u) * &winf.fm.locs[k].pinv;
        connector_residual =
            connector_residual.max(op_norm(&(ck.adjoint() * &ck - eye(winf.fm.locs[k].dim))));
        conn.view_mut(
            (fm2.grade_offset(k), winf.fm.grade_offset(k)),
            (fm2.locs[k].dim, winf.fm.locs[k].dim),
        )
        .copy_from(&ck);
    }
    let theta = &conn * winf.w.adjoint() * (eye(dil.k_dim) - &p_mat) * &wd.w;
    let machine = DilationMachine {
        dil,
        wd_w: wd.w,
        winf,
        conn,
        remainder: chain.remainder.clone(),
        base,
    };
    let fm1 = wd.fm;
    let (creation_residual, action_residual) = intertwining_residuals(&fm1, &fm2, &theta);
    let contraction_norm = op_norm(&theta);
    Ok(CharacteristicData {
        fm1,
        fm2,
        theta,
        rep: Some(rep.clone()),
        defects: Some(defects),
        tail_rate: Some(tail_rate(rep)),
        c0_zero: Some(c0.verdict.is_zero()),
        contraction_norm,
        creation_residual,
        action_residual,
        connector_residual,
        machine: Some(machine),
    })
}

impl CharacteristicData {
    /// Wrap a hand-built operator between two defect-style Fock modules.
    pub fn from_parts(fm1: FockModule, fm2: FockModule, theta: CMat) -> Result<CharacteristicData> {
        if theta.nrows() != fm2.total || theta.ncols() != fm1.total {
            return Err(Error::Structure("operator does not match the Fock modules".into()));
        }
        let (creation_residual, action_residual) = intertwining_residuals(&fm1, &fm2, &theta);
        let contraction_norm = op_norm(&theta);
        Ok(CharacteristicData {
            fm1,
            fm2,
            theta,
            rep: None,
            defects: None,
            tail_rate: None,
            c0_zero: None,
            contraction_norm,
            creation_residual,
            action_residual,
            connector_residual: 0.0,
            machine: None,
        })
    }

    pub fn level(&self) -> usize {
        self.fm1.level()
    }

    /// Coefficient maps of the symbol, read off the vacuum column: the
    /// grade-k coefficient sends the first defect carrier into the
    /// localized grade k over the second defect representation.
    pub fn symbol(&self) -> Symbol {
        let col = &self.theta * self.fm1.embed(0) * self.fm1.vac();
        let mut coeffs = Vec::with_capacity(self.level() + 1);
        for k in 0..=self.level() {
            coeffs.push(
                col.view((self.fm2.grade_offset(k), 0), (self.fm2.locs[k].dim, col.ncols()))
                    .clone_owned(),
            );
        }
        // each coefficient must intertwine tau1 with the localized action
        let units = self.fm1.fock.base.algebra.units();
        let mut res = 0.0f64;
        for (k, a_k) in coeffs.iter().enumerate() {
            for (u, &(b, i, j)) in units.iter().enumerate() {
                let t1 = self.fm1.rep.unit_matrix(b, i, j);
                let l2 = self.fm2.locs[k].left_unit(u);
                res = res.max(op_norm(&(a_k * t1 - l2 * a_k)));
            }
        }
        Symbol { coeffs, intertwining_residual: res }
    }

    /// Evaluate the symbol at a point of the open unit ball of the
    /// correspondence. The series method sums the coefficient pairing
    /// against tensor powers of the point; the resolvent method uses the
    /// closed form on the source representation and carries no truncation
    /// error.
    pub fn evaluate(&self, xi: &CVec, method: EvalMethod, tol: &Tol) -> Result<PointEvaluation> {
        let de = self.fm1.fock.base.dim;
        if xi.len() != de {
            return Err(Error::Structure("point has wrong coordinate dimension".into()));
        }
        let rate = self.point_rate(xi);
        if let Some(r) = rate {
            if r >= 1.0 - tol.base {
                return Err(Error::Validation(format!(
                    "point leaves the open unit ball: transfer rate {r:.6}"
                )));
            }
        }
        match method {
            EvalMethod::Series => {
                let symbol = self.symbol();
                let d = self.fm1.rep.carrier_dim();
                let dstar = self.fm2.rep.carrier_dim();
                let mut value = zeros(dstar, d);
                value += self.fm2.vac().adjoint() * &symbol.coeffs[0];
                let mut xk = xi.clone();
                for k in 1..=self.level() {
                    if k > 1 {
                        let prev = xk.clone();
                        let (q, _) = self.fm2.fock.quotient(k);
                        let pre = CVec::from_fn(de * prev.len(), |i, _| {
                            xi[i / prev.len()] * prev[i % prev.len()]
                        });
                        xk = q * pre;
                    }
                    let lift = self.fm2.locs[k].lxi(&xk);
                    value += lift.adjoint() * &symbol.coeffs[k];
                }
                let tail = rate.and_then(|r| crate::covrep::geometric_tail(r, self.level()));
                Ok(PointEvaluation { point: xi.clone(), value, method, tail, rate })
            }
            EvalMethod::Resolvent => {
                let rep = self.rep.as_ref().ok_or_else(|| {
                    Error::Precondition("resolvent evaluation needs a source representation".into())
                })?;
                let defects = self.defects.as_ref().unwrap();
                let lx = rep.eh.lxi(xi);
                let h = rep.h();
                let m = eye(h) - lx.adjoint() * rep.ttilde.adjoint();
                let inv = m.try_inverse().ok_or_else(|| {
                    Error::Numerical("resolvent singular inside the unit ball".into())
                })?;
                let first = -(&rep.ttilde * &defects.d_basis);
                let second =
                    &defects.delta_star * inv * lx.adjoint() * &defects.delta * &defects.d_basis;
                let value = defects.dstar_basis.adjoint() * (first + second);
                Ok(PointEvaluation { point: xi.clone(), value, method, tail: Some(0.0), rate })
            }
        }
    }

    /// Both evaluation methods plus the norm of their disagreement.
    pub fn evaluate_pair(
        &self,
        xi: &CVec,
        tol: &Tol,
    ) -> Result<(PointEvaluation, PointEvaluation, f64)> {
        let series = self.evaluate(xi, EvalMethod::Series, tol)?;
        let resolvent = self.evaluate(xi, EvalMethod::Resolvent, tol)?;
        let cross = op_norm(&(&series.value - &resolvent.value));
        Ok((series, resolvent, cross))
    }

    /// Transfer rate of the point against the source contraction; None when
    /// no source representation is attached.
    fn point_rate(&self, xi: &CVec) -> Option<f64> {
        let rep = self.rep.as_ref()?;
        let lx = rep.eh.lxi(xi);
        Some(op_norm(&(lx.adjoint() * rep.ttilde.adjoint())))
    }

    /// Isometry defect of the operator, frontier aware. The defect is
    /// measured on the grades whose images stay inside the truncation:
    /// with s the highest grade carrying a symbol coefficient, domain
    /// grades up to N - s lose nothing, so the defect there is genuine.
    /// A symbol spreading over every grade leaves only the vacuum grade,
    /// whose defect is held against the geometric tail of the source. The
    /// full-space defect is reported alongside; for any non-nilpotent inner
    /// symbol it concentrates at the frontier and stays order one.
    pub fn is_inner(&self, tol: &Tol) -> InnerReport {
        let g = self.theta.adjoint() * &self.theta - eye(self.fm1.total);
        let full = op_norm(&g);
        let n = self.level();
        let thresh = tol.op(self.fm1.total);
        let symbol = self.symbol();
        let spread = (0..=n)
            .rev()
            .find(|&k| op_norm(&symbol.coeffs[k]) > thresh)
            .unwrap_or(0);
        let window = n.saturating_sub(spread);
        let mut emb = zeros(self.fm1.total, 0);
        for k in 0..=window {
            emb = crate::linalg::hstack(&[&emb, &self.fm1.embed(k)]);
        }
        let window_residual = op_norm(&(&g * &emb));
        if window_residual <= thresh {
            return InnerReport {
                verdict: InnerVerdict::Exact,
                full_residual: full,
                window,
                window_residual,
                bound: None,
                c0_agrees: self.c0_zero,
            };
        }
        if let Some(r) = self.tail_rate {
            if r < 1.0 {
                let bound = crate::covrep::geometric_tail(r, n).unwrap_or(f64::INFINITY);
                if window_residual <= bound {
                    return InnerReport {
                        verdict: InnerVerdict::WithinTail { residual: window_residual, bound },
                        full_residual: full,
                        window,
                        window_residual,
                        bound: Some(bound),
                        c0_agrees: self.c0_zero,
                    };
                }
                return InnerReport {
                    verdict: InnerVerdict::No { gap: window_residual },
                    full_residual: full,
                    window,
                    window_residual,
                    bound: Some(bound),
                    c0_agrees: self.c0_zero.map(|z| !z),
                };
            }
        }
        InnerReport {
            verdict: InnerVerdict::No { gap: window_residual },
            full_residual: full,
            window,
            window_residual,
            bound: None,
            c0_agrees: self.c0_zero.map(|z| !z),
        }
    }

    /// Purity: the grade-zero compression of Theta* P Theta has no fixed
    /// vectors at eigenvalue one.
    pub fn is_pure(&self, tol: &Tol) -> PureReport {
        let e1 = self.fm1.embed(0);
        let e2 = self.fm2.embed(0);
        let b = e2.adjoint() * &self.theta * &e1;
        let m0 = b.adjoint() * &b;
        let fixed = null_basis(&(eye(m0.nrows()) - &m0), tol.null_rel.sqrt());
        PureReport { pure: fixed.ncols() == 0, fixed_dim: fixed.ncols() }
    }

    /// Predictability: the range of the defect of Theta taken on the whole
    /// module agrees with its range on the grades past the vacuum.
    pub fn is_predictable(&self, tol: &Tol) -> PredictReport {
        let g = eye(self.fm1.total) - self.theta.adjoint() * &self.theta;
        let r1 = psd_range_basis(&g, tol.null_rel);
        // defect root rebuilt from the thresholded spectrum, so noise-level
        // eigenvalues do not get amplified by the square root
        let delta = thresholded_psd_root(&g, tol.null_rel);
        let e0 = self.fm1.embed(0);
        let phigh = eye(self.fm1.total) - &e0 * e0.adjoint();
        let r2 = range_basis(&(&delta * phigh), tol.null_rel);
        let distance = subspace_distance(&r1, &r2);
        PredictReport { predictable: distance <= tol.base.sqrt(), distance }
    }

    /// Embed the operator as the corner of a Fock module over the joint
    /// faithful representation supplementing the two defect representations.
    pub fn corner(&self, tol: &Tol) -> Result<CornerData> {
        let defects = self.defects.as_ref().ok_or_else(|| {
            Error::Precondition("corner embedding needs defect representations".into())
        })?;
        let sup = supplement(&defects.tau1, &defects.tau2)?;
        let level = self.level();
        let fg = truncated_fock(&self.fm1.fock.base, level, tol, DEFAULT_DIM_CAP)?;
        let fmg = fock_module(fg, sup.tau.clone(), tol)?;
        let c1 = grade_embedding(&fmg, &self.fm1, &sup.embeds[1]);
        let c2 = grade_embedding(&fmg, &self.fm2, &sup.embeds[2]);
        let embed_residual = op_norm(&(c1.adjoint() * &c1 - eye(self.fm1.total)))
            .max(op_norm(&(c2.adjoint() * &c2 - eye(self.fm2.total))));
        let theta_g = &c2 * &self.theta * c1.adjoint();
        let q1 = &c1 * c1.adjoint();
        let q2 = &c2 * c2.adjoint();
        let corner_residual = op_norm(&(&q2 * &theta_g * &q1 - &theta_g));
        Ok(CornerData { sup, fmg, theta_g, corner_residual, embed_residual })
    }
}

/// Gradewise isometry F(E) (x) small -> F(E) (x) big induced by an isometric
/// carrier embedding that intertwines the representations.
pub(crate) fn grade_embedding(big: &FockModule, small: &FockModule, emb: &CMat) -> CMat {
    let mut m = zeros(big.total, small.total);
    for k in 0..=small.level() {
        let gk = big.fock.grade_dim(k);
        let blk = &big.locs[k].factor * kron(&eye(gk), emb) * &small.locs[k].pinv;
        m.view_mut(
            (big.grade_offset(k), small.grade_offset(k)),
            (big.locs[k].dim, small.locs[k].dim),
        )
        .copy_from(&blk);
    }
    m
}

#[derive(Debug, Clone)]
pub struct Symbol {
    /// Grade-k coefficient maps from the first defect carrier into the
    /// localized grade k of the value side.
    pub coeffs: Vec<CMat>,
    pub intertwining_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Series,
    Resolvent,
}

#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub point: CVec,
    pub value: CMat,
    pub method: EvalMethod,
    /// Truncation tail bound when a decay rate is available; zero for the
    /// closed-form method.
    pub tail: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum InnerVerdict {
    Exact,
    WithinTail { residual: f64, bound: f64 },
    No { gap: f64 },
}

impl InnerVerdict {
    pub fn is_inner(&self) -> bool {
        !matches!(self, InnerVerdict::No { .. })
    }
}

#[derive(Debug, Clone)]
pub struct InnerReport {
    pub verdict: InnerVerdict,
    pub full_residual: f64,
    /// Highest domain grade included in the frontier-aware measurement.
    pub window: usize,
    pub window_residual: f64,
    pub bound: Option<f64>,
    /// Whether the verdict matches the asymptotic classification of the
    /// source, when one is attached.
    pub c0_agrees: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct PureReport {
    pub pure: bool,
    pub fixed_dim: usize,
}

#[derive(Debug, Clone)]
pub struct PredictReport {
    pub predictable: bool,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct CornerData {
    pub sup: SupplementData,
    pub fmg: FockModule,
    pub theta_g: CMat,
    pub corner_residual: f64,
    pub embed_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Representation;
    use crate::correspondence::Correspondence;
    use crate::covrep::covariant_rep;
    use crate::linalg::c;

    fn scalar_rep(t: f64) -> CovariantRep {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![1]).unwrap();
        let tmat = CMat::from_fn(1, 1, |_, _| c(t, 0.0));
        covariant_rep(&e, &sigma, &tmat, &Tol::default()).unwrap().0
    }

    fn jordan_rep() -> CovariantRep {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![2]).unwrap();
        let mut tmat = zeros(2, 2);
        tmat[(0, 1)] = c(1.0, 0.0);
        covariant_rep(&e, &sigma, &tmat, &Tol::default()).unwrap().0
    }

    #[test]
    fn scalar_grade_zero_coefficient_is_minus_contraction() {
        let rep = scalar_rep(0.5);
        let cd = characteristic_operator(&rep, 20, &Tol::default()).unwrap();
        assert!(cd.contraction_norm <= 1.0 + 1e-10);
        assert!(cd.creation_residual < 1e-10, "creation {}", cd.creation_residual);
        assert!(cd.action_residual < 1e-10);
        let symbol = cd.symbol();
        assert!(symbol.intertwining_residual < 1e-10);
        let a0 = cd.fm2.vac().adjoint() * &symbol.coeffs[0];
        let defects = cd.defects.as_ref().unwrap();
        let src = cd.rep.as_ref().unwrap();
        let expected = -(defects.dstar_basis.adjoint() * &src.ttilde * &defects.d_basis);
        assert!(op_norm(&(a0 - expected)) < 1e-10);
        // higher coefficient magnitudes follow the geometric law of the
        // scalar inner function with a single zero at one half
        for k in 1..=6usize {
            let want = 0.75 * 0.5f64.powi(k as i32 - 1);
            let got = op_norm(&symbol.coeffs[k]);
            assert!((got - want).abs() < 1e-10, "grade {k}: {got} vs {want}");
        }
    }

    #[test]
    fn scalar_evaluation_agrees_with_closed_form() {
        let rep = scalar_rep(0.5);
        let tol = Tol::default();
        let cd = characteristic_operator(&rep, 25, &tol).unwrap();
        let defects = cd.defects.as_ref().unwrap();
        let gauge = defects.dstar_basis[(0, 0)].conj() * defects.d_basis[(0, 0)];
        for &z in &[0.0, 0.3, -0.6, 0.5] {
            let xi = CVec::from_fn(1, |_, _| c(z, 0.0));
            let (series, resolvent, cross) = cd.evaluate_pair(&xi, &tol).unwrap();
            let bound = series.tail.unwrap_or(0.0) + 1e-10;
            assert!(cross <= bound, "z={z}: cross {cross} vs {bound}");
            let moeb = (z - 0.5) / (1.0 - 0.5 * z);
            let expected = gauge * c(moeb, 0.0);
            assert!((resolvent.value[(0, 0)] - expected).norm() < 1e-10, "z={z}");
        }
        // the value at the zero of the function vanishes
        let xi = CVec::from_fn(1, |_, _| c(0.5, 0.0));
        let at_zero = cd.evaluate(&xi, EvalMethod::Resolvent, &tol).unwrap();
        assert!(at_zero.value[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn scalar_predicates_and_frontier_inner() {
        let rep = scalar_rep(0.5);
        let tol = Tol::default();
        let cd = characteristic_operator(&rep, 20, &tol).unwrap();
        let inner = cd.is_inner(&tol);
        match inner.verdict {
            InnerVerdict::WithinTail { residual, bound } => {
                assert!(residual <= bound, "{residual} vs {bound}");
            }
            ref v => panic!("expected frontier inner verdict, got {v:?}"),
        }
        assert_eq!(inner.c0_agrees, Some(true));
        assert!(cd.is_pure(&tol).pure);
        let pr = cd.is_predictable(&tol);
        assert!(pr.predictable, "distance {}", pr.distance);
    }

    #[test]
    fn jordan_char_operator_is_exactly_inner() {
        let rep = jordan_rep();
        let tol = Tol::default();
        let cd = characteristic_operator(&rep, 4, &tol).unwrap();
        let inner = cd.is_inner(&tol);
        assert!(matches!(inner.verdict, InnerVerdict::Exact), "{:?}", inner.verdict);
        assert_eq!(inner.window, 2);
        assert!(inner.window_residual < 1e-12);
        // only the grade-two coefficient survives, with unit size
        let symbol = cd.symbol();
        assert!(op_norm(&symbol.coeffs[0]) < 1e-12);
        assert!(op_norm(&symbol.coeffs[1]) < 1e-12);
        assert!((op_norm(&symbol.coeffs[2]) - 1.0).abs() < 1e-12);
        let xi = CVec::from_fn(1, |_, _| c(0.5, 0.0));
        let (series, _, cross) = cd.evaluate_pair(&xi, &tol).unwrap();
        assert!(cross < 1e-12);
        assert!((op_norm(&series.value) - 0.25).abs() < 1e-12);
        assert!(cd.is_pure(&tol).pure);
        assert!(cd.is_predictable(&tol).predictable);
    }

    #[test]
    fn row_contraction_residuals_and_grade_zero() {
        let e = Correspondence::free(2);
        let sigma = Representation::new(e.algebra.clone(), vec![1]).unwrap();
        let tmat = CMat::from_fn(1, 2, |_, j| if j == 0 { c(0.6, 0.0) } else { c(0.3, 0.0) });
        let rep = covariant_rep(&e, &sigma, &tmat, &Tol::default()).unwrap().0;
        let tol = Tol::default();
        let cd = characteristic_operator(&rep, 5, &tol).unwrap();
        assert!(cd.contraction_norm <= 1.0 + 1e-10);
        assert!(cd.creation_residual < 1e-10);
        let symbol = cd.symbol();
        let a0 = cd.fm2.vac().adjoint() * &symbol.coeffs[0];
        let defects = cd.defects.as_ref().unwrap();
        let expected = -(defects.dstar_basis.adjoint() * &rep.ttilde * &defects.d_basis);
        assert!(op_norm(&(a0 - expected)) < 1e-10);
        let xi = CVec::from_fn(2, |r, _| if r == 0 { c(0.4, 0.0) } else { c(0.2, 0.0) });
        let (series, _, cross) = cd.evaluate_pair(&xi, &tol).unwrap();
        assert!(cross <= series.tail.unwrap() + 1e-10, "cross {cross}");
    }

    #[test]
    fn handmade_symbols_fail_the_right_predicates() {
        let e = Correspondence::free(1);
        let sigma = Representation::new(e.algebra.clone(), vec![1]).unwrap();
        let tol = Tol::default();
        let build = || {
            let f = truncated_fock(&e, 6, &tol, DEFAULT_DIM_CAP).unwrap();
            fock_module(f, sigma.clone(), &tol).unwrap()
        };
        let unitary = CharacteristicData::from_parts(build(), build(), eye(7)).unwrap();
        assert!(!unitary.is_pure(&tol).pure);
        assert!(matches!(unitary.is_inner(&tol).verdict, InnerVerdict::Exact));
        let zero = CharacteristicData::from_parts(build(), build(), zeros(7, 7)).unwrap();
        let pr = zero.is_predictable(&tol);
        assert!(!pr.predictable);
        assert!((pr.distance - 1.0).abs() < 1e-10);
        assert!(!zero.is_inner(&tol).verdict.is_inner());
    }

    #[test]
    fn corner_embedding_is_exact() {
        let rep = scalar_rep(0.5);
        let tol = Tol::default();
        let cd = characteristic_operator(&rep, 8, &tol).unwrap();
        let corner = cd.corner(&tol).unwrap();
        assert!(corner.embed_residual < 1e-10);
        assert!(corner.corner_residual < 1e-12);
        assert_eq!(corner.theta_g.nrows(), corner.fmg.total);
    }
}

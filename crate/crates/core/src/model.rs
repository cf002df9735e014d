//! Canonical model of a characteristic operator: the space it acts on, the
//! unitary matching it to the dilation, the invariant-subspace and
//! factorization correspondence, and lifting of commutants.

use crate::algebra::{AlgebraElement, Representation};
use crate::charfun::{grade_embedding, CharacteristicData};
use crate::covrep::{covariant_rep, CovariantRep};
use crate::duality::intertwiner_space;
use crate::error::{Error, Result};
use crate::fock::{fock_module, truncated_fock, FockModule, DEFAULT_DIM_CAP};
use crate::linalg::{
    block_diag, complement_within, eye, hstack, op_norm, pinv, psd_range_basis, range_basis,
    solve_min_norm, subspace_distance, thresholded_psd_root, zeros, CMat, CVec,
};
use crate::tol::Tol;

/// The model space of a characteristic operator: the ambient carrier is
/// (F(E) (x) E2) + defect-range coordinates, the graph of the operator sits
/// inside it isometrically, and the model space is the orthocomplement.
#[derive(Debug, Clone)]
pub struct ModelSpaces {
    pub cd: CharacteristicData,
    /// Defect root on the domain module, spectrum thresholded.
    pub delta: CMat,
    /// Orthonormal basis of the closed defect range.
    pub c_basis: CMat,
    /// Defect in range coordinates, c_basis* delta, with its pseudoinverse.
    pub cdel: CMat,
    pub cdel_pinv: CMat,
    theta_pinv: CMat,
    pub k_dim: usize,
    /// Columns x -> Theta x (+) defect coordinates of x; isometric.
    pub graph: CMat,
    pub h_basis: CMat,
    pub graph_residual: f64,
}

pub fn model_spaces(cd: &CharacteristicData, tol: &Tol) -> Result<ModelSpaces> {
    let t1 = cd.fm1.total;
    let t2 = cd.fm2.total;
    let g = eye(t1) - cd.theta.adjoint() * &cd.theta;
    // a defect below the eigensolver's own resolution is exactly zero: the
    // operator is isometric and the carrier needs no defect summand
    let gnorm = op_norm(&g);
    let noise = (t1.max(1) as f64) * f64::EPSILON * (1.0 + op_norm(&cd.theta)).powi(2);
    let (delta, c_basis) = if gnorm <= 64.0 * noise {
        (zeros(t1, t1), zeros(t1, 0))
    } else {
        (thresholded_psd_root(&g, tol.null_rel), psd_range_basis(&g, tol.null_rel))
    };
    let rd = c_basis.ncols();
    let cdel = c_basis.adjoint() * &delta;
    let cdel_pinv = pinv(&cdel, tol.null_rel);
    let theta_pinv = pinv(&cd.theta, tol.null_rel);
    let k_dim = t2 + rd;

    let mut graph = zeros(k_dim, t1);
    graph.view_mut((0, 0), (t2, t1)).copy_from(&cd.theta);
    graph.view_mut((t2, 0), (rd, t1)).copy_from(&cdel);
    let graph_residual = op_norm(&(graph.adjoint() * &graph - eye(t1)));
    if graph_residual > tol.op(t1).max(1e-8) {
        return Err(Error::Numerical(format!(
            "graph of the operator is not isometric (residual {graph_residual:.3e})"
        )));
    }
    let h_basis = complement_within(&eye(k_dim), &graph, tol.null_rel);
    if h_basis.ncols() != k_dim - t1 {
        return Err(Error::Numerical(format!(
            "model space dimension {} does not match the rank count {}",
            h_basis.ncols(),
            k_dim - t1
        )));
    }
    Ok(ModelSpaces {
        cd: cd.clone(),
        delta,
        c_basis,
        cdel,
        cdel_pinv,
        theta_pinv,
        k_dim,
        graph,
        h_basis,
        graph_residual,
    })
}

impl ModelSpaces {
    pub fn h_dim(&self) -> usize {
        self.h_basis.ncols()
    }

    pub fn d_rank(&self) -> usize {
        self.c_basis.ncols()
    }

    /// Column embedding of the Fock-module summand into the carrier.
    pub fn embed_f2(&self) -> CMat {
        let t2 = self.cd.fm2.total;
        let mut e = zeros(self.k_dim, t2);
        for i in 0..t2 {
            e[(i, i)] = crate::linalg::cre(1.0);
        }
        e
    }

    /// Column embedding of the defect-range coordinates into the carrier.
    pub fn embed_d(&self) -> CMat {
        let t2 = self.cd.fm2.total;
        let rd = self.d_rank();
        let mut e = zeros(self.k_dim, rd);
        for i in 0..rd {
            e[(t2 + i, i)] = crate::linalg::cre(1.0);
        }
        e
    }

    /// Compression of the domain-side creation to defect-range coordinates.
    pub fn s_op(&self, xi: &CVec) -> CMat {
        &self.cdel * self.cd.fm1.creation(xi) * &self.cdel_pinv
    }

    /// Range-side correction feeding the Fock summand into the defect
    /// coordinates, solving coupling. Theta = cdel. creation - s. cdel; the
    /// right side vanishes on ker Theta, so the solution is exact.
    pub fn coupling(&self, xi: &CVec) -> CMat {
        (&self.cdel * self.cd.fm1.creation(xi) - self.s_op(xi) * &self.cdel) * &self.theta_pinv
    }

    /// The model isometry for a single correspondence vector: creation on
    /// the Fock summand, the transported creation on the defect part, the
    /// coupling correction in the lower-left corner.
    pub fn v_op(&self, xi: &CVec) -> CMat {
        let t2 = self.cd.fm2.total;
        let rd = self.d_rank();
        let mut v = zeros(self.k_dim, self.k_dim);
        v.view_mut((0, 0), (t2, t2)).copy_from(&self.cd.fm2.creation(xi));
        if rd > 0 {
            v.view_mut((t2, 0), (rd, t2)).copy_from(&self.coupling(xi));
            v.view_mut((t2, t2), (rd, rd)).copy_from(&self.s_op(xi));
        }
        v
    }

    pub fn rho_op(&self, a: &AlgebraElement) -> CMat {
        let p2 = self.cd.fm2.phi(a);
        let psi = &self.cdel * self.cd.fm1.phi(a) * &self.cdel_pinv;
        block_diag(&[&p2, &psi])
    }

    pub fn t_op(&self, xi: &CVec) -> CMat {
        self.h_basis.adjoint() * self.v_op(xi) * &self.h_basis
    }

    pub fn sigma_op(&self, a: &AlgebraElement) -> CMat {
        self.h_basis.adjoint() * self.rho_op(a) * &self.h_basis
    }

    /// Worst defect of the coupled relation coupling. Theta + s. cdel =
    /// cdel. creation across the generators.
    pub fn s_residual(&self) -> f64 {
        let fm1 = &self.cd.fm1;
        let de = fm1.fock.base.dim;
        let mut worst = 0.0f64;
        for p in 0..de {
            let xi = unit_vec(de, p);
            let diff = self.coupling(&xi) * &self.cd.theta + self.s_op(&xi) * &self.cdel
                - &self.cdel * fm1.creation(&xi);
            worst = worst.max(op_norm(&diff));
        }
        worst
    }

    /// Worst defect of graph invariance under the model operators.
    pub fn graph_invariance(&self) -> f64 {
        let fm1 = &self.cd.fm1;
        let de = fm1.fock.base.dim;
        let off = eye(self.k_dim) - &self.graph * self.graph.adjoint();
        let mut worst = 0.0f64;
        for p in 0..de {
            let xi = unit_vec(de, p);
            let diff = &off * self.v_op(&xi) * &self.graph;
            worst = worst.max(op_norm(&diff));
        }
        for (b, i, j) in fm1.fock.base.algebra.units() {
            let a = fm1.fock.base.algebra.unit(b, i, j);
            let diff = &off * self.rho_op(&a) * &self.graph;
            worst = worst.max(op_norm(&diff));
        }
        worst
    }
}

fn unit_vec(n: usize, p: usize) -> CVec {
    CVec::from_fn(n, |r, _| if r == p { crate::linalg::cre(1.0) } else { crate::linalg::cre(0.0) })
}

fn units_of(fm: &FockModule) -> Vec<AlgebraElement> {
    fm.fock
        .base
        .algebra
        .units()
        .iter()
        .map(|&(b, i, j)| fm.fock.base.algebra.unit(b, i, j))
        .collect()
}

/// The compressed pair on the model space as a covariant representation,
/// with the worst reconstruction and covariance residual.
pub fn model_covariant_rep(spaces: &ModelSpaces, tol: &Tol) -> Result<(CovariantRep, f64)> {
    let h = spaces.h_dim();
    if h == 0 {
        return Err(Error::Precondition("model space is zero".into()));
    }
    let corr = &spaces.cd.fm1.fock.base;
    let images: Vec<CMat> = corr
        .algebra
        .units()
        .iter()
        .map(|&(b, i, j)| spaces.sigma_op(&corr.algebra.unit(b, i, j)))
        .collect();
    let (sigma, recon) = Representation::from_action(&corr.algebra, &images, tol)?;
    let de = corr.dim;
    let parts: Vec<CMat> = (0..de).map(|p| spaces.t_op(&unit_vec(de, p))).collect();
    let refs: Vec<&CMat> = parts.iter().collect();
    let t_pre = hstack(&refs);
    let (crep, report) = covariant_rep(corr, &sigma, &t_pre, tol)?;
    Ok((crep, recon.max(report.covariance_residual).max(report.wellposed_residual)))
}

/// The unitary carrying the model carrier onto the dilation space of the
/// representation the operator came from.
#[derive(Debug, Clone)]
pub struct CanonicalData {
    pub phi: CMat,
    /// Restriction of phi to the model space, in coordinates of H.
    pub z: CMat,
    pub unitary_residual: f64,
    pub intertwine_residual: f64,
    pub subspace_residual: f64,
}

pub fn canonical_equivalence(spaces: &ModelSpaces) -> Result<CanonicalData> {
    let machine = spaces.cd.machine.as_ref().ok_or_else(|| {
        Error::Precondition("canonical equivalence needs the dilation machinery".into())
    })?;
    let dil = &machine.dil;
    let phi1 = &machine.winf.w * machine.conn.adjoint();
    let phi2 = &machine.remainder * &machine.wd_w * &spaces.cdel_pinv;
    let phi = hstack(&[&phi1, &phi2]);
    if phi.nrows() != phi.ncols() {
        return Err(Error::Structure(format!(
            "carrier dimensions disagree: {} vs {}",
            phi.nrows(),
            phi.ncols()
        )));
    }
    let n = phi.nrows();
    let unitary_residual = op_norm(&(phi.adjoint() * &phi - eye(n)))
        .max(op_norm(&(&phi * phi.adjoint() - eye(n))));

    let de = spaces.cd.fm1.fock.base.dim;
    let mut intertwine = 0.0f64;
    for p in 0..de {
        let xi = unit_vec(de, p);
        let diff = dil.v_of(&xi) * &phi - &phi * spaces.v_op(&xi);
        intertwine = intertwine.max(op_norm(&diff));
    }
    for a in units_of(&spaces.cd.fm1) {
        let diff = dil.rho(&a) * &phi - &phi * spaces.rho_op(&a);
        intertwine = intertwine.max(op_norm(&diff));
    }

    let eh = dil.embed_h();
    let z = eh.adjoint() * &phi * &spaces.h_basis;
    let subspace_residual = op_norm(&(&phi * &spaces.h_basis - &eh * &z));
    Ok(CanonicalData {
        phi,
        z,
        unitary_residual,
        intertwine_residual: intertwine,
        subspace_residual,
    })
}

#[derive(Debug, Clone)]
pub struct MinimalityReport {
    pub span_dim: usize,
    pub k_dim: usize,
    pub minimal: bool,
    /// Gap between the word span of the model space and the whole carrier.
    pub distance: f64,
    /// Consistency of the grade-zero graph slice with the wandering part of
    /// the one-step word space.
    pub m0_residual: f64,
}

/// The model space generates the carrier under words in the model isometries.
pub fn check_minimality(spaces: &ModelSpaces, tol: &Tol) -> Result<MinimalityReport> {
    let pure = spaces.cd.is_pure(tol);
    let predict = spaces.cd.is_predictable(tol);
    if !pure.pure || !predict.predictable {
        return Err(Error::Precondition(format!(
            "minimality needs a pure and predictable operator (pure: {}, predictable: {})",
            pure.pure, predict.predictable
        )));
    }
    let de = spaces.cd.fm1.fock.base.dim;
    let vops: Vec<CMat> = (0..de).map(|p| spaces.v_op(&unit_vec(de, p))).collect();
    let mut span = spaces.h_basis.clone();
    for _ in 0..=spaces.cd.level() {
        let mut parts: Vec<CMat> = vec![span.clone()];
        for v in &vops {
            parts.push(v * &span);
        }
        let refs: Vec<&CMat> = parts.iter().collect();
        let grown = range_basis(&hstack(&refs), tol.null_rel);
        if grown.ncols() == span.ncols() {
            span = grown;
            break;
        }
        span = grown;
    }
    let span_dim = span.ncols();
    let distance = op_norm(&(eye(spaces.k_dim) - &span * span.adjoint()));

    // wandering slice of the one-step words off the model space
    let off = eye(spaces.k_dim) - &spaces.h_basis * spaces.h_basis.adjoint();
    let projected: Vec<CMat> = vops.iter().map(|v| &off * v * &spaces.h_basis).collect();
    let refs: Vec<&CMat> = projected.iter().collect();
    let m0_from_words = range_basis(&hstack(&refs), tol.null_rel.sqrt());
    let m0_direct = range_basis(&(&spaces.graph * spaces.cd.fm1.embed(0)), tol.null_rel);
    let m0_residual = subspace_distance(&m0_from_words, &m0_direct);

    Ok(MinimalityReport {
        span_dim,
        k_dim: spaces.k_dim,
        minimal: distance <= tol.base.sqrt(),
        distance,
        m0_residual,
    })
}

/// Carrier unitary witnesses matching two sets of characteristic data.
#[derive(Debug, Clone)]
pub struct Witnesses {
    pub w1: CMat,
    pub w2: CMat,
    /// The dilation-level unitary the witnesses were read from.
    pub w: CMat,
    pub w_residual: f64,
}

/// Extend the identification of the model space with the carrier of `model`
/// to a unitary between the model carrier and the dilation space of `model`,
/// by matching words; read off the defect witnesses.
pub fn construct_witnesses(
    spaces: &ModelSpaces,
    cdm: &CharacteristicData,
    tol: &Tol,
) -> Result<Witnesses> {
    let machine = cdm.machine.as_ref().ok_or_else(|| {
        Error::Precondition("witness construction needs the dilation of the model pair".into())
    })?;
    let dil_m = &machine.dil;
    if dil_m.h_dim != spaces.h_dim() {
        return Err(Error::Precondition(format!(
            "the given data does not dilate the model space ({} vs {})",
            dil_m.h_dim,
            spaces.h_dim()
        )));
    }
    let de = spaces.cd.fm1.fock.base.dim;
    let eh = dil_m.embed_h();

    // words on both sides in lockstep, seeded by the identification of the
    // model space with H
    let mut xs: Vec<CMat> = vec![spaces.h_basis.clone()];
    let mut ys: Vec<CMat> = vec![eh.clone()];
    let mut frontier_x = spaces.h_basis.clone();
    let mut frontier_y = eh.clone();
    for _ in 0..=spaces.cd.level() {
        let mut nx = Vec::new();
        let mut ny = Vec::new();
        for p in 0..de {
            let xi = unit_vec(de, p);
            nx.push(spaces.v_op(&xi) * &frontier_x);
            ny.push(dil_m.v_of(&xi) * &frontier_y);
        }
        let rx: Vec<&CMat> = nx.iter().collect();
        let ry: Vec<&CMat> = ny.iter().collect();
        frontier_x = hstack(&rx);
        frontier_y = hstack(&ry);
        xs.push(frontier_x.clone());
        ys.push(frontier_y.clone());
        if frontier_x.ncols() > 4 * spaces.k_dim {
            break;
        }
    }
    let rx: Vec<&CMat> = xs.iter().collect();
    let ry: Vec<&CMat> = ys.iter().collect();
    let x = hstack(&rx);
    let y = hstack(&ry);
    let w = &y * pinv(&x, tol.null_rel.sqrt());
    let n = spaces.k_dim;
    let w_residual = op_norm(&(w.adjoint() * &w - eye(n)))
        .max(op_norm(&(&w * w.adjoint() - eye(dil_m.k_dim))));

    // defect witnesses: the grade-zero graph slice lands on the defect copy,
    // the grade-zero Fock slice lands on the base wandering subspace
    let v0 = dil_m.embed_grade(0) * dil_m.fockd.vac();
    let w1 = v0.adjoint() * &w * &spaces.graph * spaces.cd.fm1.embed(0)
        * spaces.cd.fm1.vac();
    let e2cols = spaces.embed_f2() * spaces.cd.fm2.embed(0) * spaces.cd.fm2.vac();
    let w2 = &machine.base.u * machine.base.basis.adjoint() * &w * &e2cols;
    Ok(Witnesses { w1, w2, w, w_residual })
}

#[derive(Debug, Clone)]
pub struct IsomReport {
    pub isomorphic: bool,
    pub residual: f64,
    pub witness_residual: f64,
}

/// Decide whether two sets of characteristic data are matched by the given
/// carrier witnesses: conjugating one operator by the induced gradewise
/// unitaries must produce the other.
pub fn verify_isomorphism(
    cd: &CharacteristicData,
    cdp: &CharacteristicData,
    w1: &CMat,
    w2: &CMat,
    tol: &Tol,
) -> Result<IsomReport> {
    let c1 = spaces_carrier_dim(&cd.fm1);
    let c1p = spaces_carrier_dim(&cdp.fm1);
    let c2 = spaces_carrier_dim(&cd.fm2);
    let c2p = spaces_carrier_dim(&cdp.fm2);
    if w1.nrows() != c1p || w1.ncols() != c1 || w2.nrows() != c2p || w2.ncols() != c2 {
        return Err(Error::Precondition(format!(
            "witness shapes ({}x{}, {}x{}) do not match the carriers ({c1p}x{c1}, {c2p}x{c2})",
            w1.nrows(),
            w1.ncols(),
            w2.nrows(),
            w2.ncols()
        )));
    }
    let mut witness_residual = op_norm(&(w1.adjoint() * w1 - eye(c1)))
        .max(op_norm(&(w1 * w1.adjoint() - eye(c1p))))
        .max(op_norm(&(w2.adjoint() * w2 - eye(c2)))
        .max(op_norm(&(w2 * w2.adjoint() - eye(c2p)))));
    for &(b, i, j) in cd.fm1.fock.base.algebra.units().iter() {
        let a1 = cd.fm1.rep.unit_matrix(b, i, j);
        let a1p = cdp.fm1.rep.unit_matrix(b, i, j);
        let a2 = cd.fm2.rep.unit_matrix(b, i, j);
        let a2p = cdp.fm2.rep.unit_matrix(b, i, j);
        witness_residual = witness_residual
            .max(op_norm(&(w1 * a1 - a1p * w1)))
            .max(op_norm(&(w2 * a2 - a2p * w2)));
    }
    if witness_residual > tol.op(c1.max(c2)).max(1e-6) {
        return Err(Error::Precondition(format!(
            "witnesses are not intertwining unitaries (residual {witness_residual:.3e})"
        )));
    }
    let emb2 = grade_embedding(&cdp.fm2, &cd.fm2, w2);
    let emb1 = grade_embedding(&cdp.fm1, &cd.fm1, w1);
    let residual = op_norm(&(&cdp.theta - emb2 * &cd.theta * emb1.adjoint()));
    Ok(IsomReport {
        isomorphic: residual <= tol.op(cd.fm1.total).max(1e-8),
        residual,
        witness_residual,
    })
}

fn spaces_carrier_dim(fm: &FockModule) -> usize {
    fm.rep.carrier_dim()
}

/// A factorization of the operator through the Fock module of a wandering
/// subspace: theta = theta1 theta2 with both factors inner up to the
/// truncation frontier.
#[derive(Debug, Clone)]
pub struct FactorData {
    pub theta1: CharacteristicData,
    pub theta2: CharacteristicData,
    pub rep0: Representation,
    /// The invariant summand M (+) range(theta) inside the carrier.
    pub n_basis: CMat,
    /// Wandering subspace of the restriction, inside the carrier.
    pub h0_basis: CMat,
    pub product_residual: f64,
    /// How far the word map of the wandering subspace is from isometric.
    pub theta1_isometry: f64,
    /// Leakage of the invariant subspace outside the Fock summand.
    pub leakage: f64,
    pub decomposition_residual: f64,
}

/// Words of the creation operators of a Fock module applied to a subspace of
/// it, assembled as a map from the Fock module of the compressed
/// representation.
fn word_map(
    fm: &FockModule,
    basis: &CMat,
    rep0: &Representation,
    tol: &Tol,
) -> Result<(FockModule, CMat, f64)> {
    let corr = &fm.fock.base;
    let level = fm.level();
    let f0 = truncated_fock(corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm0 = fock_module(f0, rep0.clone(), tol)?;
    let de = corr.dim;
    let cparts: Vec<CMat> = (0..de).map(|p| fm.creation(&unit_vec(de, p))).collect();
    let crefs: Vec<&CMat> = cparts.iter().collect();
    let bigc = hstack(&crefs);
    let mut w = zeros(fm.total, fm0.total);
    let mut blk = basis * fm0.vac().adjoint();
    w.view_mut((0, fm0.grade_offset(0)), (fm.total, fm0.locs[0].dim)).copy_from(&blk);
    for k in 0..level {
        let et = fm0.etensor(k);
        blk = &bigc * crate::linalg::kron(&eye(de), &blk) * &et.pplus;
        w.view_mut((0, fm0.grade_offset(k + 1)), (fm.total, fm0.locs[k + 1].dim))
            .copy_from(&blk);
    }
    // isometric away from the words that fall off the truncation
    let gram = w.adjoint() * &w;
    let mut worst = 0.0f64;
    for i in 0..fm0.total {
        let d = (gram[(i, i)].re - 1.0).abs();
        if d < 0.5 {
            let mut row = 0.0f64;
            for j in 0..fm0.total {
                if j != i {
                    row += gram[(i, j)].norm();
                }
            }
            worst = worst.max(d.max(row));
        }
    }
    Ok((fm0, w, worst))
}

pub fn factor_from_subspace(
    spaces: &ModelSpaces,
    msub: &CMat,
    tol: &Tol,
) -> Result<FactorData> {
    if msub.nrows() != spaces.h_dim() {
        return Err(Error::Structure(format!(
            "subspace lives in model coordinates of dimension {}, got {} rows",
            spaces.h_dim(),
            msub.nrows()
        )));
    }
    let msub = range_basis(msub, tol.null_rel);
    let m_lift = &spaces.h_basis * &msub;
    let de = spaces.cd.fm1.fock.base.dim;

    // invariance of the subspace under the compressed pair
    let pm = &m_lift * m_lift.adjoint();
    let ph = &spaces.h_basis * spaces.h_basis.adjoint();
    let mut inv = 0.0f64;
    for p in 0..de {
        let xi = unit_vec(de, p);
        let diff = (&ph - &pm) * spaces.v_op(&xi) * &m_lift;
        inv = inv.max(op_norm(&diff));
    }
    for a in units_of(&spaces.cd.fm1) {
        let diff = (eye(spaces.k_dim) - &pm) * spaces.rho_op(&a) * &m_lift;
        inv = inv.max(op_norm(&diff));
    }
    if inv > tol.op(spaces.k_dim).max(1e-8) {
        return Err(Error::Precondition(format!(
            "subspace is not invariant under the compressed pair (residual {inv:.3e})"
        )));
    }

    // everything below lives inside the Fock summand: the invariant summand
    // is the subspace plus the operator range, and its wandering part feeds
    // the word map of the range-side creations
    let ef2 = spaces.embed_f2();
    let m_f2 = ef2.adjoint() * &m_lift;
    let leakage = op_norm(&(&m_lift - &ef2 * &m_f2));
    let thr = range_basis(&spaces.cd.theta, tol.null_rel);
    let n_f2 = range_basis(&hstack(&[&m_f2, &thr]), tol.null_rel);
    let n_basis = &ef2 * &n_f2;

    let fm2 = &spaces.cd.fm2;
    let imgs: Vec<CMat> = (0..de).map(|p| fm2.creation(&unit_vec(de, p)) * &n_f2).collect();
    let refs: Vec<&CMat> = imgs.iter().collect();
    let cn = range_basis(&hstack(&refs), tol.null_rel);
    let h0_f2 = complement_within(&n_f2, &cn, tol.null_rel);
    let h0_basis = &ef2 * &h0_f2;

    // the restricted algebra action on the wandering subspace
    let alg = &fm2.fock.base.algebra;
    let images: Vec<CMat> = alg
        .units()
        .iter()
        .map(|&(b, i, j)| h0_f2.adjoint() * fm2.phi(&alg.unit(b, i, j)) * &h0_f2)
        .collect();
    let (rep0, _recon) = Representation::from_action(alg, &images, tol)?;

    let (fm0, th1, theta1_isometry) = word_map(fm2, &h0_f2, &rep0, tol)?;
    let th2 = th1.adjoint() * &spaces.cd.theta;
    let product_residual = op_norm(&(&th1 * &th2 - &spaces.cd.theta));

    // complement bookkeeping of the proof: what theta1 misses inside the
    // Fock summand is exactly what the subspace misses inside the model space
    let r1 = range_basis(&th1, tol.null_rel);
    let lhs = complement_within(&eye(fm2.total), &r1, tol.null_rel);
    let lhs_lift = &ef2 * &lhs;
    let rhs = complement_within(&spaces.h_basis, &m_lift, tol.null_rel);
    let decomposition_residual = subspace_distance(&lhs_lift, &rhs);

    let theta1 = CharacteristicData::from_parts(fm0.clone(), spaces.cd.fm2.clone(), th1)?;
    let theta2 = CharacteristicData::from_parts(spaces.cd.fm1.clone(), fm0, th2)?;
    Ok(FactorData {
        theta1,
        theta2,
        rep0,
        n_basis,
        h0_basis,
        product_residual,
        theta1_isometry,
        leakage,
        decomposition_residual,
    })
}

/// The invariant subspace cut out by a factorization: what the left factor
/// reaches beyond the range of the whole operator, inside the model space.
pub fn subspace_from_factorization(
    spaces: &ModelSpaces,
    theta1: &CharacteristicData,
    theta2: &CharacteristicData,
    tol: &Tol,
) -> Result<(CMat, f64)> {
    let prod = &theta1.theta * &theta2.theta;
    let residual = op_norm(&(&prod - &spaces.cd.theta));
    if residual > tol.op(spaces.cd.fm1.total).max(1e-8) {
        return Err(Error::Precondition(format!(
            "factors do not compose to the operator (residual {residual:.3e})"
        )));
    }
    let r1 = range_basis(&theta1.theta, tol.null_rel);
    let rt = range_basis(&spaces.cd.theta, tol.null_rel);
    let m_f2 = complement_within(&r1, &rt, tol.null_rel);
    let m_lift = spaces.embed_f2() * &m_f2;
    let msub = spaces.h_basis.adjoint() * &m_lift;
    let leakage = op_norm(&(&m_lift - &spaces.h_basis * &msub));
    Ok((range_basis(&msub, tol.null_rel), leakage))
}

/// Gauge unitary aligning the wandering carriers of two left factors, by the
/// polar part of their grade-zero overlap; the residual reports how far the
/// factors are from equal modulo the gauge.
pub fn factor_gauge(
    theta1a: &CharacteristicData,
    theta1b: &CharacteristicData,
) -> Result<(CMat, f64)> {
    let g0a = &theta1a.theta * theta1a.fm1.embed(0) * theta1a.fm1.vac();
    let g0b = &theta1b.theta * theta1b.fm1.embed(0) * theta1b.fm1.vac();
    let overlap = g0a.adjoint() * &g0b;
    let svd = overlap.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("svd failed".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("svd failed".into()))?;
    let v0 = u * v_t;
    let emb = grade_embedding(&theta1a.fm1, &theta1b.fm1, &v0);
    let residual = op_norm(&(&theta1b.theta - &theta1a.theta * emb));
    Ok((v0, residual))
}

/// A commutant lift: an operator on the dilation space commuting with the
/// isometric pair, compressing to the given operator on H, presented by the
/// coefficients of its word symbol over the base wandering module.
#[derive(Debug, Clone)]
pub struct LiftData {
    pub y: CMat,
    /// Grade-k symbol coefficients, intertwiners into the localized grades.
    pub coeffs: Vec<CMat>,
    pub symbol_norm: f64,
    pub x_norm: f64,
    pub compression_residual: f64,
    pub commutation_residual: f64,
}

/// Lift an operator commuting with the representation pair to an operator
/// on the dilation space commuting with the isometric pair, as a word
/// symbol of minimal Frobenius weight meeting the compression constraint.
pub fn lift_commutant(cd: &CharacteristicData, x: &CMat, tol: &Tol) -> Result<LiftData> {
    if cd.c0_zero != Some(true) {
        return Err(Error::Precondition(
            "lifting needs a representation with vanishing powers".into(),
        ));
    }
    let machine = cd.machine.as_ref().ok_or_else(|| {
        Error::Precondition("lifting needs the dilation machinery".into())
    })?;
    let rep = cd.rep.as_ref().ok_or_else(|| {
        Error::Precondition("lifting needs the source representation".into())
    })?;
    let h = rep.h();
    if x.nrows() != h || x.ncols() != h {
        return Err(Error::Structure(format!(
            "operator must act on the {h}-dimensional carrier"
        )));
    }

    // x must commute with the image of the pair
    let mut comm = 0.0f64;
    for (b, i, j) in rep.corr.algebra.units() {
        let a = rep.corr.algebra.unit(b, i, j);
        let s = rep.sigma.matrix(&a);
        comm = comm.max(op_norm(&(x * &s - &s * x)));
    }
    let et = rep.eh.as_etensor();
    let ix = crate::fock::e_map(x, &et, &et);
    comm = comm.max(op_norm(&(x * &rep.ttilde - &rep.ttilde * &ix)));
    if comm > tol.op(h).max(1e-8) {
        return Err(Error::Precondition(format!(
            "operator does not commute with the representation (residual {comm:.3e})"
        )));
    }

    let dil = &machine.dil;
    let fmw = &machine.winf.fm;
    let ww = &machine.winf.w;
    let eh = dil.embed_h();
    let level = cd.level();
    let algebra = &rep.corr.algebra;
    let cunits = algebra.units();
    let sigmas: Vec<CMat> = cunits
        .iter()
        .map(|&(b, i, j)| fmw.rep.unit_matrix(b, i, j))
        .collect();

    // one column of the constraint system per symbol-coefficient direction
    let mut ops: Vec<CMat> = Vec::new();
    let mut tags: Vec<(usize, CMat)> = Vec::new();
    for k in 0..=level {
        let lefts: Vec<CMat> =
            (0..cunits.len()).map(|u| fmw.locs[k].left_unit(u).clone()).collect();
        for b in intertwiner_space(&lefts, &sigmas) {
            let ins = fmw.right_insertion(k, &b);
            ops.push(ww * &ins * ww.adjoint());
            tags.push((k, b));
        }
    }
    if ops.is_empty() {
        return Err(Error::Numerical("the symbol space is empty".into()));
    }
    let mut a = zeros(h * h, ops.len());
    for (c, op) in ops.iter().enumerate() {
        let compressed = eh.adjoint() * op * &eh;
        for (r, v) in compressed.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }
    let b = CMat::from_fn(h * h, 1, |r, _| x[(r % h, r / h)]);
    let c = solve_min_norm(&a, &b, tol.null_rel);

    let mut y = zeros(dil.k_dim, dil.k_dim);
    for (i, op) in ops.iter().enumerate() {
        y += op * c[(i, 0)];
    }
    let mut coeffs: Vec<CMat> = (0..=level)
        .map(|k| zeros(fmw.locs[k].dim, fmw.rep.carrier_dim()))
        .collect();
    for (i, (k, bmat)) in tags.iter().enumerate() {
        coeffs[*k] += bmat * c[(i, 0)];
    }
    let mut t_sym = zeros(fmw.total, fmw.total);
    for (k, eta) in coeffs.iter().enumerate() {
        t_sym += fmw.right_insertion(k, eta);
    }
    let symbol_norm = op_norm(&t_sym);
    let compression_residual = op_norm(&(eh.adjoint() * &y * &eh - x));

    // commutation against the isometric pair, with the frontier grade cut
    // out of the domain of the isometries: a word that crosses the
    // truncation edge says nothing about the infinite commutator
    let top = fmw.grade_offset(level);
    let mut ptop = zeros(fmw.total, fmw.total);
    for i in top..fmw.total {
        ptop[(i, i)] = crate::linalg::cre(1.0);
    }
    let cut = eye(dil.k_dim) - ww * &ptop * ww.adjoint();
    let de = rep.corr.dim;
    let mut commutation = 0.0f64;
    for p in 0..de {
        let v = dil.v_of(&unit_vec(de, p)) * &cut;
        commutation = commutation.max(op_norm(&(&y * &v - &v * &y)));
    }
    for (bb, i, j) in algebra.units() {
        let aa = algebra.unit(bb, i, j);
        let r = dil.rho(&aa);
        commutation = commutation.max(op_norm(&(&y * &r - &r * &y)));
    }

    Ok(LiftData {
        y,
        coeffs,
        symbol_norm,
        x_norm: op_norm(x),
        compression_residual,
        commutation_residual: commutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiMatrixAlgebra;
    use crate::charfun::{characteristic_operator, InnerVerdict};
    use crate::correspondence::Correspondence;
    use crate::covrep::classify_c0;
    use crate::linalg::{c, cre, singular_values};

    fn scalar_rep(t: f64, tol: &Tol) -> CovariantRep {
        let alg = MultiMatrixAlgebra::scalar();
        let corr = Correspondence::identity(&alg);
        let sigma = Representation::multiplicity_one(&alg);
        let tmat = CMat::from_fn(1, 1, |_, _| cre(t));
        covariant_rep(&corr, &sigma, &tmat, tol).unwrap().0
    }

    fn jordan_rep(tol: &Tol) -> CovariantRep {
        let alg = MultiMatrixAlgebra::scalar();
        let corr = Correspondence::identity(&alg);
        let sigma = Representation::new(alg, vec![2]).unwrap();
        let mut tmat = zeros(2, 2);
        tmat[(0, 1)] = cre(1.0);
        covariant_rep(&corr, &sigma, &tmat, tol).unwrap().0
    }

    #[test]
    fn jordan_model_space_has_dimension_two() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        assert_eq!(spaces.h_dim(), 2);
        assert!(spaces.graph_residual < 1e-12);
        assert!(spaces.s_residual() < 1e-12);
        assert!(spaces.graph_invariance() < 1e-10);
        // the model space is the bottom two grades of the Fock summand
        let e0 = spaces.embed_f2() * spaces.cd.fm2.embed(0);
        let e1 = spaces.embed_f2() * spaces.cd.fm2.embed(1);
        let low = hstack(&[&e0, &e1]);
        assert!(subspace_distance(&spaces.h_basis, &low) < 1e-10);
    }

    #[test]
    fn scalar_model_space_is_a_line_at_any_level() {
        let tol = Tol::default();
        let rep = scalar_rep(0.5, &tol);
        for level in [4usize, 7, 10] {
            let cd = characteristic_operator(&rep, level, &tol).unwrap();
            let spaces = model_spaces(&cd, &tol).unwrap();
            assert_eq!(spaces.h_dim(), 1, "level {level}");
        }
    }

    #[test]
    fn jordan_canonical_equivalence_is_exact() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        let canon = canonical_equivalence(&spaces).unwrap();
        assert!(canon.unitary_residual < 1e-12, "unitary {}", canon.unitary_residual);
        assert!(canon.intertwine_residual < 1e-12, "intertwine {}", canon.intertwine_residual);
        assert!(canon.subspace_residual < 1e-12, "subspace {}", canon.subspace_residual);

        let (crep, res) = model_covariant_rep(&spaces, &tol).unwrap();
        assert!(res < 1e-10);
        let sv_model = singular_values(&crep.ttilde);
        let sv_orig = singular_values(&rep.ttilde);
        assert_eq!(sv_model.len(), sv_orig.len());
        for (a, b) in sv_model.iter().zip(&sv_orig) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        // the compressed operator is carried onto the original by z
        let de = 1;
        let xi = unit_vec(de, 0);
        let back = canon.z.adjoint() * rep.t_of(&xi) * &canon.z;
        assert!(op_norm(&(back - spaces.t_op(&xi))) < 1e-10);
    }

    #[test]
    fn scalar_canonical_equivalence_within_tail() {
        let tol = Tol::default();
        let rep = scalar_rep(0.5, &tol);
        let level = 20;
        let cd = characteristic_operator(&rep, level, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        let canon = canonical_equivalence(&spaces).unwrap();
        let tail = 0.5f64.powi(level as i32);
        assert!(canon.unitary_residual < 10.0 * tail, "unitary {}", canon.unitary_residual);
        assert!(canon.intertwine_residual < 10.0 * tail);
        assert!(canon.subspace_residual < 10.0 * tail);
        let (crep, _) = model_covariant_rep(&spaces, &tol).unwrap();
        let sv = singular_values(&crep.ttilde);
        assert!((sv[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn jordan_minimality_and_wandering_slice() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        let report = check_minimality(&spaces, &tol).unwrap();
        assert!(report.minimal, "distance {}", report.distance);
        assert_eq!(report.span_dim, report.k_dim);
        assert!(report.m0_residual < 1e-10, "m0 {}", report.m0_residual);
    }

    #[test]
    fn round_trip_witnesses_match_the_original_data() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        let (crep, _) = model_covariant_rep(&spaces, &tol).unwrap();
        let cdm = characteristic_operator(&crep, 6, &tol).unwrap();
        let wit = construct_witnesses(&spaces, &cdm, &tol).unwrap();
        assert!(wit.w_residual < 1e-8, "w {}", wit.w_residual);
        let report = verify_isomorphism(&cd, &cdm, &wit.w1, &wit.w2, &tol).unwrap();
        assert!(report.isomorphic, "residual {}", report.residual);
        assert!(report.residual < 1e-8);
    }

    #[test]
    fn jordan_invariant_subspace_round_trips() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        assert!(matches!(spaces.cd.is_inner(&tol).verdict, InnerVerdict::Exact));

        // the grade-one line, the zero subspace, and the whole model space
        let e1 = spaces.embed_f2() * spaces.cd.fm2.embed(1);
        let line = spaces.h_basis.adjoint() * &e1;
        let zero = zeros(spaces.h_dim(), 0);
        let full = eye(spaces.h_dim());
        for msub in [&line, &zero, &full] {
            let fd = factor_from_subspace(&spaces, msub, &tol).unwrap();
            assert!(fd.product_residual < 1e-10, "product {}", fd.product_residual);
            assert!(fd.leakage < 1e-10, "leakage {}", fd.leakage);
            assert!(fd.decomposition_residual < 1e-10, "decomp {}", fd.decomposition_residual);
            let (rec, leak) =
                subspace_from_factorization(&spaces, &fd.theta1, &fd.theta2, &tol).unwrap();
            assert!(leak < 1e-10);
            let orig = range_basis(msub, tol.null_rel);
            assert_eq!(rec.ncols(), orig.ncols());
            if orig.ncols() > 0 {
                assert!(subspace_distance(&rec, &orig) < 1e-8);
            }
        }
    }

    #[test]
    fn factor_gauge_aligns_a_phase_twist() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let spaces = model_spaces(&cd, &tol).unwrap();
        let e1 = spaces.embed_f2() * spaces.cd.fm2.embed(1);
        let line = spaces.h_basis.adjoint() * &e1;
        let fd = factor_from_subspace(&spaces, &line, &tol).unwrap();
        // twist the left factor by a phase on its wandering carrier
        let phase = c(0.0, 1.0);
        let twisted = CharacteristicData::from_parts(
            fd.theta1.fm1.clone(),
            fd.theta1.fm2.clone(),
            &fd.theta1.theta * phase,
        )
        .unwrap();
        let (v0, residual) = factor_gauge(&fd.theta1, &twisted).unwrap();
        assert!(residual < 1e-10, "gauge residual {residual}");
        assert!((v0[(0, 0)] - phase).norm() < 1e-10);
    }

    #[test]
    fn jordan_lift_of_the_contraction_is_the_shift_symbol() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let x = rep.t_of(&unit_vec(1, 0));
        let lift = lift_commutant(&cd, &x, &tol).unwrap();
        assert!(lift.compression_residual < 1e-10, "comp {}", lift.compression_residual);
        assert!(lift.commutation_residual < 1e-10, "commu {}", lift.commutation_residual);
        assert!((lift.symbol_norm - 1.0).abs() < 1e-8, "norm {}", lift.symbol_norm);
        // the only surviving coefficient sits at grade one
        for (k, eta) in lift.coeffs.iter().enumerate() {
            let n = op_norm(eta);
            if k == 1 {
                assert!((n - 1.0).abs() < 1e-8);
            } else {
                assert!(n < 1e-8, "grade {k} carries {n}");
            }
        }
    }

    #[test]
    fn jordan_lift_of_scalars_is_exact() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        for lam in [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 2.0)] {
            let x = eye(2) * lam;
            let lift = lift_commutant(&cd, &x, &tol).unwrap();
            assert!(lift.compression_residual < 1e-10);
            assert!((lift.symbol_norm - lam.norm()).abs() < 1e-8);
        }
    }

    #[test]
    fn lift_rejects_a_non_commuting_operator() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 6, &tol).unwrap();
        let mut x = zeros(2, 2);
        x[(1, 0)] = cre(1.0);
        let err = lift_commutant(&cd, &x, &tol).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn scaled_inner_symbol_model_rep_is_not_c0() {
        let tol = Tol::default();
        let rep = jordan_rep(&tol);
        let cd = characteristic_operator(&rep, 5, &tol).unwrap();
        let scaled = CharacteristicData::from_parts(
            cd.fm1.clone(),
            cd.fm2.clone(),
            cd.theta.scale(0.5),
        )
        .unwrap();
        let spaces = model_spaces(&scaled, &tol).unwrap();
        let (crep, _) = model_covariant_rep(&spaces, &tol).unwrap();
        let f = truncated_fock(&crep.corr, 5, &tol, DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(f, crep.sigma.clone(), &tol).unwrap();
        let verdict = classify_c0(&crep, &fm, &tol);
        assert!(!verdict.verdict.is_zero());
    }
}

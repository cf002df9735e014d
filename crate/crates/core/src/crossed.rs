//! Endomorphism correspondences: the Fock module collapses to finite
//! sequence space, induced operators become weighted shifts, commutants
//! become block Toeplitz matrices, and the symbol calculus meets the
//! classical single-contraction characteristic function.

use crate::algebra::{AlgebraElement, Endomorphism, Representation};
use crate::charfun::{characteristic_operator, CharacteristicData, EvalMethod};
use crate::correspondence::Correspondence;
use crate::covrep::{classify_cnc, covariant_rep, CovRepReport, CovariantRep};
use crate::duality::intertwiner_space;
use crate::error::{Error, Result};
use crate::fock::{fock_module, truncated_fock, FockModule, DEFAULT_DIM_CAP};
use crate::linalg::{eye, hstack, op_norm, psd_sqrt, zeros, CMat, CVec};
use crate::tol::Tol;
use num_complex::Complex64;

/// An endomorphism of the coefficient algebra together with a carrier
/// contraction generating a covariant representation of the twisted module.
#[derive(Debug, Clone)]
pub struct CrossedFixture {
    pub alpha: Endomorphism,
    pub sigma: Representation,
    /// The generating contraction on the carrier.
    pub t: CMat,
    pub corr: Correspondence,
    /// How far t sigma(alpha(a)) - sigma(a) t is from zero over the units.
    pub intertwining_residual: f64,
}

pub fn crossed_fixture(
    alpha: Endomorphism,
    sigma: Representation,
    t: CMat,
    tol: &Tol,
) -> Result<CrossedFixture> {
    if sigma.algebra != alpha.algebra {
        return Err(Error::Structure("endomorphism and representation algebras differ".into()));
    }
    let h = sigma.carrier_dim();
    if t.nrows() != h || t.ncols() != h {
        return Err(Error::Structure(format!(
            "t must act on the {h}-dimensional carrier, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let mut residual = 0.0f64;
    for (b, i, j) in alpha.algebra.units() {
        let a = alpha.algebra.unit(b, i, j);
        let lhs = &t * sigma.matrix(&alpha.apply(&a));
        let rhs = sigma.matrix(&a) * &t;
        residual = residual.max(op_norm(&(lhs - rhs)));
    }
    if residual > tol.op(h.max(1)) {
        return Err(Error::Validation(format!(
            "t does not intertwine sigma with its twist (residual {residual:.3e})"
        )));
    }
    let norm = op_norm(&t);
    if norm > 1.0 + tol.op(h.max(1)) {
        return Err(Error::Validation(format!("t is not a contraction: norm {norm:.12}")));
    }
    let corr = Correspondence::twisted_by(&alpha.algebra, &alpha);
    Ok(CrossedFixture { alpha, sigma, t, corr, intertwining_residual: residual })
}

impl CrossedFixture {
    pub fn h(&self) -> usize {
        self.sigma.carrier_dim()
    }

    /// The identity of the algebra viewed as a vector of the module.
    pub fn xi0(&self) -> CVec {
        self.alpha.algebra.identity().coords()
    }

    /// Covariant representation generated by t: the module vector xi acts
    /// as t sigma(xi).
    pub fn covariant(&self, tol: &Tol) -> Result<(CovariantRep, CovRepReport)> {
        let h = self.h();
        let units = self.alpha.algebra.units();
        let mut tprod = zeros(h, self.corr.dim * h);
        for (q, &(b, i, j)) in units.iter().enumerate() {
            let block = &self.t * self.sigma.unit_matrix(b, i, j);
            tprod.view_mut((0, q * h), (h, h)).copy_from(&block);
        }
        covariant_rep(&self.corr, &self.sigma, &tprod, tol)
    }
}

/// Gradewise unitaries from the localized Fock module of a twisted module
/// onto copies of the representation carrier: a word goes to the matrix of
/// its twist-adjusted product.
#[derive(Debug, Clone)]
pub struct Ell2Data {
    /// W_k from localized grade k onto the carrier.
    pub blocks: Vec<CMat>,
    /// Assembled map from the whole module onto the stacked carrier copies.
    pub w: CMat,
    pub residual: f64,
}

pub fn ell2_identification(alpha: &Endomorphism, fm: &FockModule) -> Result<Ell2Data> {
    let alg = &fm.fock.base.algebra;
    if *alg != alpha.algebra || fm.fock.base.dim != alg.dim() {
        return Err(Error::Structure(
            "the Fock module is not built on the twisted copy of the algebra".into(),
        ));
    }
    let h = fm.rep.carrier_dim();
    let level = fm.level();
    let units = alg.units();
    let mut blocks: Vec<CMat> = Vec::with_capacity(level + 1);
    let mut residual = 0.0f64;
    blocks.push(fm.vac().adjoint());
    for k in 1..=level {
        // the outermost factor carries the deepest twist
        let twisted: Vec<CMat> = units
            .iter()
            .map(|&(b, i, j)| {
                let el = alpha.apply_power(&alg.unit(b, i, j), k - 1);
                fm.rep.matrix(&el) * &blocks[k - 1]
            })
            .collect();
        let refs: Vec<&CMat> = twisted.iter().collect();
        let wk = hstack(&refs) * fm.etensor(k - 1).pplus;
        residual = residual.max(op_norm(&(wk.adjoint() * &wk - eye(fm.locs[k].dim))));
        residual = residual.max(op_norm(&(&wk * wk.adjoint() - eye(h))));
        blocks.push(wk);
    }
    let mut w = zeros((level + 1) * h, fm.total);
    for (k, wk) in blocks.iter().enumerate() {
        w.view_mut((k * h, fm.offsets[k]), (h, fm.locs[k].dim)).copy_from(wk);
    }
    Ok(Ell2Data { blocks, w, residual })
}

/// The weighted shift on the stacked carrier: block (k, k-1) is
/// sigma(alpha^{k-1}(xi)).
pub fn weighted_shift(
    alpha: &Endomorphism,
    sigma: &Representation,
    xi: &AlgebraElement,
    len: usize,
) -> CMat {
    let h = sigma.carrier_dim();
    let mut m = zeros(len * h, len * h);
    for k in 1..len {
        let el = alpha.apply_power(xi, k - 1);
        m.view_mut((k * h, (k - 1) * h), (h, h)).copy_from(&sigma.matrix(&el));
    }
    m
}

/// The diagonal action on the stacked carrier: block k is sigma(alpha^k(a)).
pub fn diagonal_action(
    alpha: &Endomorphism,
    sigma: &Representation,
    a: &AlgebraElement,
    len: usize,
) -> CMat {
    let h = sigma.carrier_dim();
    let mut m = zeros(len * h, len * h);
    for k in 0..len {
        let el = alpha.apply_power(a, k);
        m.view_mut((k * h, k * h), (h, h)).copy_from(&sigma.matrix(&el));
    }
    m
}

/// Block Toeplitz assembly of the coefficient list: block (j, k) of the
/// result is blocks[j - k], zero above the main diagonal.
pub fn toeplitz_assemble(blocks: &[CMat], len: usize) -> Result<CMat> {
    let (d2, d1) = match blocks.first() {
        Some(b) => (b.nrows(), b.ncols()),
        None => return Err(Error::Structure("empty coefficient list".into())),
    };
    if blocks.iter().any(|b| b.nrows() != d2 || b.ncols() != d1) {
        return Err(Error::Structure("coefficient shapes disagree".into()));
    }
    let mut m = zeros(len * d2, len * d1);
    for j in 0..len {
        for k in 0..=j {
            if let Some(b) = blocks.get(j - k) {
                m.view_mut((j * d2, k * d1), (d2, d1)).copy_from(b);
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct ToeplitzReport {
    pub is_toeplitz: bool,
    /// Deviation from constant subdiagonals and a vanishing upper part.
    pub structure_residual: f64,
    /// Worst defect of R_d sigma(a) = sigma(alpha^d(a)) R_d over the units.
    pub relation_residual: f64,
    pub symbol: Option<Vec<CMat>>,
}

/// Decide whether an operator on the stacked carrier lies in the commutant
/// of the weighted shifts and the diagonal action, and extract its diagonal
/// coefficients when it does.
pub fn toeplitz_commutant_check(
    fx: &CrossedFixture,
    r: &CMat,
    len: usize,
    tol: &Tol,
) -> Result<ToeplitzReport> {
    let h = fx.h();
    if r.nrows() != len * h || r.ncols() != len * h {
        return Err(Error::Structure(format!(
            "operator must act on {} stacked copies of the carrier",
            len
        )));
    }
    let block = |j: usize, k: usize| r.view((j * h, k * h), (h, h)).clone_owned();
    let symbol: Vec<CMat> = (0..len).map(|d| block(d, 0)).collect();
    let mut structure = 0.0f64;
    for j in 0..len {
        for k in 0..len {
            let b = block(j, k);
            if j >= k {
                structure = structure.max(op_norm(&(b - &symbol[j - k])));
            } else {
                structure = structure.max(op_norm(&b));
            }
        }
    }
    let mut relation = 0.0f64;
    for (d, rd) in symbol.iter().enumerate() {
        for (b, i, j) in fx.alpha.algebra.units() {
            let a = fx.alpha.algebra.unit(b, i, j);
            let lhs = rd * fx.sigma.matrix(&a);
            let rhs = fx.sigma.matrix(&fx.alpha.apply_power(&a, d)) * rd;
            relation = relation.max(op_norm(&(lhs - rhs)));
        }
    }
    let thr = tol.op(len * h).max(1e-8);
    let ok = structure <= thr && relation <= thr;
    Ok(ToeplitzReport {
        is_toeplitz: ok,
        structure_residual: structure,
        relation_residual: relation,
        symbol: ok.then_some(symbol),
    })
}

/// Dimension of the space of valid diagonal coefficients at each offset:
/// the maps z with z sigma(a) = sigma(alpha^d(a)) z.
pub fn toeplitz_symbol_dims(fx: &CrossedFixture, level: usize) -> Vec<usize> {
    let units = fx.alpha.algebra.units();
    let sigmas: Vec<CMat> = units
        .iter()
        .map(|&(b, i, j)| fx.sigma.unit_matrix(b, i, j))
        .collect();
    (0..=level)
        .map(|d| {
            let lefts: Vec<CMat> = units
                .iter()
                .map(|&(b, i, j)| {
                    fx.sigma.matrix(&fx.alpha.apply_power(&fx.alpha.algebra.unit(b, i, j), d))
                })
                .collect();
            intertwiner_space(&lefts, &sigmas).len()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SznfPoint {
    pub z: Complex64,
    pub deviation: f64,
    /// Truncation tail bound of the series side at this point.
    pub tail: f64,
}

#[derive(Debug, Clone)]
pub struct SznfReport {
    pub points: Vec<SznfPoint>,
    pub max_deviation: f64,
    pub max_tail: f64,
    /// Worst mismatch between the symbol coefficients and the classical
    /// Taylor list -t, D_* D, D_* t^* D, D_* (t^*)^2 D, ...
    pub taylor_residual: f64,
    pub level: usize,
}

/// Compare the symbol of the generated representation, evaluated along the
/// disc z xi0, against the classical characteristic function of t at the
/// conjugate point. Both defect spaces are aligned through the canonical
/// identification of the module with the carrier.
pub fn sznf_compare(
    fx: &CrossedFixture,
    level: usize,
    grid: &[Complex64],
    tol: &Tol,
) -> Result<SznfReport> {
    let (rep, _) = fx.covariant(tol)?;
    let fock = truncated_fock(&fx.corr, level, tol, DEFAULT_DIM_CAP)?;
    let fm = fock_module(fock, fx.sigma.clone(), tol)?;
    let cnc = classify_cnc(&rep, &fm, tol);
    if !cnc.cnc {
        return Err(Error::Precondition(format!(
            "t keeps a {}-dimensional coisometric subspace; the symbol does not determine it",
            cnc.fixed_dim
        )));
    }
    let ch = characteristic_operator(&rep, level, tol)?;
    let defects = ch.defects.as_ref().expect("built from a representation");

    // align the defect carriers with subspaces of H
    let h = fx.h();
    let u0 = rep.eh.lxi(&fx.xi0());
    let b1 = u0.adjoint() * &defects.d_basis;
    let b2 = defects.dstar_basis.clone();
    let neg = tol.op(h.max(1));
    let delta_t = psd_sqrt(&(eye(h) - fx.t.adjoint() * &fx.t), neg)?;
    let delta_star = psd_sqrt(&(eye(h) - &fx.t * fx.t.adjoint()), neg)?;

    // the finite Taylor list, read through the grade identifications
    let ell2 = ell2_identification(&fx.alpha, &ch.fm2)?;
    let symbol = ch.symbol();
    let mut taylor = 0.0f64;
    for k in 0..=level {
        let model = &ell2.blocks[k] * &symbol.coeffs[k];
        let classical = if k == 0 {
            b2.adjoint() * (-&fx.t) * &b1
        } else {
            let mut pw = eye(h);
            for _ in 0..k - 1 {
                pw = fx.t.adjoint() * pw;
            }
            b2.adjoint() * &delta_star * pw * &delta_t * &b1
        };
        taylor = taylor.max(op_norm(&(model - classical)));
    }

    let mut points = Vec::with_capacity(grid.len());
    let mut max_deviation = 0.0f64;
    let mut max_tail = 0.0f64;
    for &z in grid {
        if z.norm() >= 1.0 {
            return Err(Error::Validation(format!(
                "grid point {z} leaves the open unit disc"
            )));
        }
        let xi = fx.xi0().map(|c| c * z);
        let eval = ch.evaluate(&xi, EvalMethod::Series, tol)?;
        let lam = z.conj();
        let m = eye(h) - (fx.t.adjoint() * lam);
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Numerical("classical resolvent singular in the disc".into()))?;
        let classical =
            b2.adjoint() * (-&fx.t + (&delta_star * inv * &delta_t * lam)) * &b1;
        let deviation = op_norm(&(&eval.value - classical));
        let tail = eval.tail.unwrap_or(f64::INFINITY);
        max_deviation = max_deviation.max(deviation);
        max_tail = max_tail.max(tail);
        points.push(SznfPoint { z, deviation, tail });
    }
    Ok(SznfReport { points, max_deviation, max_tail, taylor_residual: taylor, level })
}

/// Convenience: the characteristic data of the generated representation.
pub fn crossed_characteristic(
    fx: &CrossedFixture,
    level: usize,
    tol: &Tol,
) -> Result<CharacteristicData> {
    let (rep, _) = fx.covariant(tol)?;
    characteristic_operator(&rep, level, tol)
}

#[derive(Debug, Clone)]
pub struct BilateralReport {
    /// Form mismatch for vectors supported on the first s+1 slots.
    pub depth_residuals: Vec<f64>,
    /// Highest coefficient the extension carries.
    pub extension_degree: usize,
    /// Worst mismatch in the zone the truncation cannot reach.
    pub exact_zone_residual: f64,
}

/// Embed the window 0..n into a window of length 2n+1 with the extra room
/// past the frontier, and compare the defect forms I - Theta* Theta of the
/// truncated symbol against its extension. The coefficients only ever reach
/// upward, so a vector supported at least the symbol degree below the
/// frontier sees identical forms; closer to the frontier the difference is
/// exactly what the truncation cut away.
pub fn bilateral_extension_check(
    truncated: &[CMat],
    extended: &[CMat],
    n: usize,
    tol: &Tol,
) -> Result<BilateralReport> {
    if truncated.is_empty() || extended.len() < truncated.len() {
        return Err(Error::Structure("extension must carry the truncated coefficients".into()));
    }
    let d1 = truncated[0].ncols();
    for (a, b) in truncated.iter().zip(extended) {
        if op_norm(&(a - b)) > tol.op(a.nrows().max(1)) {
            return Err(Error::Validation(
                "extension disagrees with the truncated coefficients".into(),
            ));
        }
    }
    let th_u = toeplitz_assemble(truncated, n + 1)?;
    let th_b = toeplitz_assemble(extended, 2 * n + 1)?;
    let g_u = eye((n + 1) * d1) - th_u.adjoint() * &th_u;
    let g_b = eye((2 * n + 1) * d1) - th_b.adjoint() * &th_b;
    let g_emb = g_b.view((0, 0), ((n + 1) * d1, (n + 1) * d1)).clone_owned();
    let diff = g_u - g_emb;
    let mut depth_residuals = Vec::with_capacity(n + 1);
    for s in 0..=n {
        let lead = diff.view((0, 0), ((s + 1) * d1, (s + 1) * d1)).clone_owned();
        depth_residuals.push(op_norm(&lead));
    }
    let thr = tol.op(extended[0].nrows().max(1));
    let extension_degree = (0..extended.len())
        .rev()
        .find(|&d| op_norm(&extended[d]) > thr)
        .unwrap_or(0);
    let exact_zone_residual = depth_residuals
        .iter()
        .take(n.saturating_sub(extension_degree) + 1)
        .cloned()
        .fold(0.0, f64::max);
    Ok(BilateralReport { depth_residuals, extension_degree, exact_zone_residual })
}

//! Command line front end: load a fixture by name or path, run the requested
//! pipeline, emit a deterministic report, map errors onto exit codes.

use crate::charfun::{characteristic_operator, CharacteristicData, InnerVerdict};
use crate::covrep::{classify_c0, classify_cnc, CovariantRep, ZeroVerdict};
use crate::crossed::{ell2_identification, sznf_compare, toeplitz_symbol_dims};
use crate::dilation::dilate;
use crate::error::{Error, Result};
use crate::fixtures::{self, Fixture, MatrixData};
use crate::fock::{fock_module, truncated_fock, FockModule, DEFAULT_DIM_CAP};
use crate::linalg::{eye, op_norm, range_basis, subspace_distance, zeros, CMat, CVec};
use crate::model::{
    canonical_equivalence, check_minimality, construct_witnesses, factor_from_subspace,
    lift_commutant, model_covariant_rep, model_spaces, subspace_from_factorization,
};
use crate::report::{self, cforms, sci, Report};
use crate::tol::Tol;
use clap::{Parser, Subcommand};
use num_complex::Complex64;

#[derive(Debug, Parser)]
#[command(name = "opmodel", version, about = "Dilations, characteristic operators, and canonical models at finite truncation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Truncation frontier for every Fock-space computation.
    #[arg(long, global = true, default_value_t = 6)]
    pub fock_level: usize,
    /// Base numerical tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Machine-readable output instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for randomized validation vectors; never changes deterministic results.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Append wall-clock cost to the report (not byte-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural axioms and admit the contraction.
    Validate { fixture: String },
    /// Asymptotic classification of the generalized powers.
    Classify { fixture: String },
    /// Minimal isometric dilation and its residuals.
    Dilate { fixture: String },
    /// Characteristic operator, symbol, predicates, optional point values.
    Charfun {
        fixture: String,
        /// Points to evaluate at: components re[:im] joined by ',', points by ';'.
        #[arg(long)]
        eval_grid: Option<String>,
    },
    /// Canonical model spaces rebuilt from the characteristic operator.
    Model { fixture: String },
    /// Full round trip: model pair, witnesses, operator match.
    Verify { fixture: String },
    /// Factor the operator through an invariant subspace of the model.
    Factor {
        fixture: String,
        /// Invariant subspace: "zero", "full", or a path to a basis matrix.
        #[arg(long, default_value = "full")]
        span: String,
    },
    /// Lift a commuting operator to the dilation commutant.
    Lift {
        fixture: String,
        /// Operator to lift: "t", "identity", "scale:re[:im]", or a matrix path.
        #[arg(long, default_value = "t")]
        x: String,
    },
    /// Twisted-algebra checks; optionally compare with the classical function.
    Crossed {
        fixture: String,
        #[arg(long)]
        sznf_check: bool,
        /// Radius and point count of the comparison circle, as "r,steps".
        #[arg(long, default_value = "0.9,8")]
        grid: String,
    },
}

impl Command {
    fn fixture_arg(&self) -> &str {
        match self {
            Command::Validate { fixture }
            | Command::Classify { fixture }
            | Command::Dilate { fixture }
            | Command::Charfun { fixture, .. }
            | Command::Model { fixture }
            | Command::Verify { fixture }
            | Command::Factor { fixture, .. }
            | Command::Lift { fixture, .. }
            | Command::Crossed { fixture, .. } => fixture,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Classify { .. } => "classify",
            Command::Dilate { .. } => "dilate",
            Command::Charfun { .. } => "charfun",
            Command::Model { .. } => "model",
            Command::Verify { .. } => "verify",
            Command::Factor { .. } => "factor",
            Command::Lift { .. } => "lift",
            Command::Crossed { .. } => "crossed",
        }
    }
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(rep) => {
            print!("{}", rep.render(cli.json));
            rep.exit_code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Report> {
    let start = std::time::Instant::now();
    let tol = Tol::with_base(cli.tol);
    let (fx, dg) = resolve(cli.command.fixture_arg(), &tol)?;
    let mut rep = Report::new(cli.command.name(), fx.name(), &dg, cli.fock_level, cli.tol);
    match &cli.command {
        Command::Validate { .. } => cmd_validate(&fx, cli, &tol, &mut rep)?,
        Command::Classify { .. } => cmd_classify(&fx, cli, &tol, &mut rep)?,
        Command::Dilate { .. } => cmd_dilate(&fx, cli, &tol, &mut rep)?,
        Command::Charfun { eval_grid, .. } => {
            cmd_charfun(&fx, cli, &tol, eval_grid.as_deref(), &mut rep)?
        }
        Command::Model { .. } => cmd_model(&fx, cli, &tol, &mut rep)?,
        Command::Verify { .. } => cmd_verify(&fx, cli, &tol, &mut rep)?,
        Command::Factor { span, .. } => cmd_factor(&fx, cli, &tol, span, &mut rep)?,
        Command::Lift { x, .. } => cmd_lift(&fx, cli, &tol, x, &mut rep)?,
        Command::Crossed { sznf_check, grid, .. } => {
            cmd_crossed(&fx, cli, &tol, *sznf_check, grid, &mut rep)?
        }
    }
    if cli.timings {
        rep.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(rep)
}

fn resolve(arg: &str, tol: &Tol) -> Result<(Fixture, String)> {
    let p = std::path::Path::new(arg);
    if p.exists() {
        let bytes =
            std::fs::read(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        let fx = fixtures::load(p, tol)?;
        let dg = report::digest(&bytes);
        Ok((fx, dg))
    } else {
        let fx = fixtures::by_name(arg, tol)?;
        let text = serde_json::to_string(&fx.file)
            .map_err(|e| Error::Parse(format!("serialize fixture: {e}")))?;
        let dg = report::digest(text.as_bytes());
        Ok((fx, dg))
    }
}

fn module_of(fx: &Fixture, rep: &CovariantRep, level: usize, tol: &Tol) -> Result<FockModule> {
    let fock = truncated_fock(&fx.corr, level, tol, DEFAULT_DIM_CAP)?;
    fock_module(fock, rep.sigma.clone(), tol)
}

fn charfun_of(fx: &Fixture, cli: &Cli, tol: &Tol) -> Result<(CovariantRep, CharacteristicData)> {
    let (rep, _) = fx.covariant(tol)?;
    let cd = characteristic_operator(&rep, cli.fock_level, tol)?;
    Ok((rep, cd))
}

fn cmd_validate(fx: &Fixture, cli: &Cli, tol: &Tol, rep: &mut Report) -> Result<()> {
    let axiom = fx.corr.validate(tol, cli.seed)?;
    let (crep, cr) = fx.covariant(tol)?;
    rep.verdict("valid", true);
    rep.verdict("module_dim", fx.corr.dim);
    rep.verdict("carrier_dim", crep.h());
    rep.verdict("contraction_norm", cr.contraction_norm);
    let allowed = tol.op(fx.corr.dim.max(crep.h()));
    rep.residual("module_axioms", axiom, allowed);
    rep.residual("covariance", cr.covariance_residual, allowed);
    rep.residual("wellposedness", cr.wellposed_residual, allowed);
    if let Some(cx) = &fx.crossed {
        rep.residual("twist_intertwining", cx.intertwining_residual, allowed);
    }
    Ok(())
}

fn cmd_classify(fx: &Fixture, cli: &Cli, tol: &Tol, rep: &mut Report) -> Result<()> {
    let (crep, _) = fx.covariant(tol)?;
    let fm = module_of(fx, &crep, cli.fock_level, tol)?;
    let c0 = classify_c0(&crep, &fm, tol);
    let cnc = classify_cnc(&crep, &fm, tol);
    rep.verdict("c0", c0.verdict.is_zero());
    match &c0.verdict {
        ZeroVerdict::Exact { reason } => rep.verdict("c0_certificate", reason.as_str()),
        ZeroVerdict::Bounded { level, norm } => {
            rep.verdict("c0_certificate", format!("bounded at level {level}, norm {}", sci(*norm)))
        }
        ZeroVerdict::Undecided { level, norm } => {
            rep.verdict("c0_certificate", format!("undecided at level {level}, norm {}", sci(*norm)));
            rep.exit_code = 4;
        }
    }
    rep.verdict("cnc", cnc.cnc);
    rep.verdict("coisometric_fixed_dim", cnc.fixed_dim);
    rep.verdict("cnc_stabilized", cnc.stabilized);
    rep.verdict("cnc_levels_used", cnc.levels_used);
    let rows: Vec<Vec<String>> = c0
        .power_norms
        .iter()
        .enumerate()
        .map(|(k, n)| vec![k.to_string(), sci(*n)])
        .collect();
    rep.table("generalized power norms", &["k", "norm"], rows);
    Ok(())
}

fn cmd_dilate(fx: &Fixture, cli: &Cli, tol: &Tol, rep: &mut Report) -> Result<()> {
    let (crep, _) = fx.covariant(tol)?;
    let dil = dilate(&crep, cli.fock_level, tol)?;
    rep.verdict("carrier_dim", dil.h_dim);
    rep.verdict("dilation_dim", dil.k_dim);
    rep.verdict("summands", dil.nparts());
    let allowed = tol.op(dil.k_dim);
    rep.residual("isometry", dil.isometry_residual(), allowed);
    rep.residual("covariance", dil.covariance_residual(), allowed);
    let chain = dil.projection_chain();
    rep.residual("projection_chain", chain.proj_residual, allowed);
    let base = dil.base_wandering(tol)?;
    rep.residual("base_wandering_unitary", base.unitary_residual, allowed);
    Ok(())
}

fn cmd_charfun(
    fx: &Fixture,
    cli: &Cli,
    tol: &Tol,
    eval_grid: Option<&str>,
    rep: &mut Report,
) -> Result<()> {
    let (_, cd) = charfun_of(fx, cli, tol)?;
    let allowed = tol.op(cd.fm1.total);
    rep.verdict("domain_dim", cd.fm1.total);
    rep.verdict("value_dim", cd.fm2.total);
    rep.verdict("c0_zero", cd.c0_zero);
    rep.verdict("tail_rate", cd.tail_rate);
    rep.residual("contraction_excess", (cd.contraction_norm - 1.0).max(0.0), allowed);
    rep.residual("creation_intertwining", cd.creation_residual, allowed);
    rep.residual("action_intertwining", cd.action_residual, allowed);
    rep.residual("connector", cd.connector_residual, allowed);
    let symbol = cd.symbol();
    rep.residual("symbol_intertwining", symbol.intertwining_residual, allowed);
    let inner = cd.is_inner(tol);
    let verdict = match &inner.verdict {
        InnerVerdict::Exact => "inner (exact on the window)".to_string(),
        InnerVerdict::WithinTail { residual, bound } => {
            format!("inner within tail ({} against {})", sci(*residual), sci(*bound))
        }
        InnerVerdict::No { gap } => format!("not inner (gap {})", sci(*gap)),
    };
    rep.verdict("inner", verdict);
    rep.verdict("inner_window", inner.window);
    rep.verdict("pure", cd.is_pure(tol).pure);
    rep.verdict("predictable", cd.is_predictable(tol).predictable);
    let rows: Vec<Vec<String>> = symbol
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, m)| vec![k.to_string(), sci(op_norm(m))])
        .collect();
    rep.table("symbol coefficient norms", &["grade", "norm"], rows);
    if let Some(gridtext) = eval_grid {
        let points = parse_points(gridtext, fx.corr.dim)?;
        let mut rows = Vec::new();
        for xi in &points {
            let (series, resolvent, cross) = cd.evaluate_pair(xi, tol)?;
            rows.push(vec![
                fmt_vec(xi),
                fmt_matrix(&series.value),
                fmt_matrix(&resolvent.value),
                sci(cross),
                series.tail.map(sci).unwrap_or_else(|| "-".into()),
            ]);
        }
        rep.table(
            "evaluation grid",
            &["point", "series", "resolvent", "cross", "tail"],
            rows,
        );
    }
    Ok(())
}

fn cmd_model(fx: &Fixture, cli: &Cli, tol: &Tol, rep: &mut Report) -> Result<()> {
    let (_, cd) = charfun_of(fx, cli, tol)?;
    let spaces = model_spaces(&cd, tol)?;
    rep.verdict("model_dim", spaces.h_dim());
    rep.verdict("defect_rank", spaces.d_rank());
    rep.verdict("carrier_dim", spaces.k_dim);
    let allowed = tol.op(spaces.k_dim);
    rep.residual("graph_isometry", spaces.graph_residual, allowed);
    rep.residual("compression_action", spaces.s_residual(), allowed.max(1e-8));
    rep.residual("graph_invariance", spaces.graph_invariance(), allowed.max(1e-8));
    let (_, rep_res) = model_covariant_rep(&spaces, tol)?;
    rep.residual("model_pair", rep_res, allowed.max(1e-8));
    let canon = canonical_equivalence(&spaces)?;
    rep.residual("carrier_unitary", canon.unitary_residual, allowed.max(1e-8));
    rep.residual("carrier_intertwining", canon.intertwine_residual, allowed.max(1e-8));
    rep.residual("subspace_match", canon.subspace_residual, allowed.max(1e-8));
    match check_minimality(&spaces, tol) {
        Ok(min) => {
            rep.verdict("minimal", min.minimal);
            rep.verdict("word_span_dim", min.span_dim);
            rep.residual("wandering_slice", min.m0_residual, tol.base.sqrt());
        }
        Err(Error::Precondition(msg)) => rep.verdict("minimal", format!("unavailable: {msg}")),
        Err(e) => return Err(e),
    }
    Ok(())
}

fn cmd_verify(fx: &Fixture, cli: &Cli, tol: &Tol, rep: &mut Report) -> Result<()> {
    let (_, cd) = charfun_of(fx, cli, tol)?;
    let spaces = model_spaces(&cd, tol)?;
    let (mrep, _) = model_covariant_rep(&spaces, tol)?;
    let cdm = characteristic_operator(&mrep, cli.fock_level, tol)?;
    let wit = construct_witnesses(&spaces, &cdm, tol)?;
    let iso = crate::model::verify_isomorphism(&cd, &cdm, &wit.w1, &wit.w2, tol)?;
    rep.verdict("isomorphic", iso.isomorphic);
    let allowed = tol.op(cd.fm1.total).max(1e-8);
    rep.residual("carrier_witnesses", iso.witness_residual, allowed);
    rep.residual("dilation_unitary", wit.w_residual, allowed);
    rep.residual("operator_match", iso.residual, allowed);
    Ok(())
}

fn cmd_factor(fx: &Fixture, cli: &Cli, tol: &Tol, span: &str, rep: &mut Report) -> Result<()> {
    let (_, cd) = charfun_of(fx, cli, tol)?;
    let spaces = model_spaces(&cd, tol)?;
    let h = spaces.h_dim();
    let msub = match span {
        "zero" => zeros(h, 0),
        "full" => eye(h),
        path => load_matrix(path)?,
    };
    let fd = factor_from_subspace(&spaces, &msub, tol)?;
    rep.verdict("factor_domain_dim", fd.theta2.fm2.total);
    rep.verdict("wandering_mults", format!("{:?}", mults_of(&fd.rep0)));
    let allowed = tol.op(spaces.k_dim).max(1e-8);
    rep.residual("product", fd.product_residual, allowed);
    rep.residual("left_factor_isometry", fd.theta1_isometry, allowed);
    rep.residual("subspace_leakage", fd.leakage, allowed);
    rep.residual("complement_match", fd.decomposition_residual, allowed);
    let (back, leak) = subspace_from_factorization(&spaces, &fd.theta1, &fd.theta2, tol)?;
    let sent = range_basis(&msub, tol.null_rel);
    rep.residual("round_trip_subspace", subspace_distance(&back, &sent), allowed);
    rep.residual("round_trip_leakage", leak, allowed);
    Ok(())
}

fn cmd_lift(fx: &Fixture, cli: &Cli, tol: &Tol, xarg: &str, rep: &mut Report) -> Result<()> {
    let (crep, cd) = charfun_of(fx, cli, tol)?;
    let h = crep.h();
    let x = match xarg {
        "t" => {
            if crep.ttilde.ncols() != h {
                return Err(Error::Structure(
                    "the contraction is not square on this fixture; pass a matrix".into(),
                ));
            }
            crep.ttilde.clone()
        }
        "identity" => eye(h),
        other => {
            if let Some(restim) = other.strip_prefix("scale:") {
                let z = parse_component(restim)?;
                eye(h).map(|v| v * z)
            } else {
                load_matrix(other)?
            }
        }
    };
    let ld = lift_commutant(&cd, &x, tol)?;
    rep.verdict("x_norm", ld.x_norm);
    rep.verdict("lift_norm", ld.symbol_norm);
    let allowed = tol.op(cd.fm1.total).max(1e-8);
    rep.residual("compression", ld.compression_residual, allowed);
    rep.residual("commutation", ld.commutation_residual, allowed);
    let rows: Vec<Vec<String>> = ld
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, m)| vec![k.to_string(), sci(op_norm(m))])
        .collect();
    rep.table("lift symbol norms", &["grade", "norm"], rows);
    Ok(())
}

fn cmd_crossed(
    fx: &Fixture,
    cli: &Cli,
    tol: &Tol,
    sznf: bool,
    grid: &str,
    rep: &mut Report,
) -> Result<()> {
    let cx = fx
        .crossed
        .as_ref()
        .ok_or_else(|| Error::Precondition("fixture carries no twist data".into()))?;
    let allowed = tol.op(cx.h() * (cli.fock_level + 1));
    rep.residual("twist_intertwining", cx.intertwining_residual, allowed);
    let fock = truncated_fock(&cx.corr, cli.fock_level, tol, DEFAULT_DIM_CAP)?;
    let fm = fock_module(fock, cx.sigma.clone(), tol)?;
    let ell2 = ell2_identification(&cx.alpha, &fm)?;
    rep.residual("sequence_identification", ell2.residual, allowed);
    let dims = toeplitz_symbol_dims(cx, cli.fock_level);
    rep.verdict("symbol_space_dims", format!("{dims:?}"));
    if sznf {
        let (r, steps) = parse_grid(grid)?;
        let points: Vec<Complex64> = (0..steps)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * (j as f64) / (steps as f64);
                Complex64::new(r * th.cos(), r * th.sin())
            })
            .collect();
        let cmp = sznf_compare(cx, cli.fock_level, &points, tol)?;
        rep.residual("taylor_coefficients", cmp.taylor_residual, allowed.max(1e-8));
        rep.verdict("max_deviation", cmp.max_deviation);
        rep.verdict("max_tail_bound", cmp.max_tail);
        let rows: Vec<Vec<String>> = cmp
            .points
            .iter()
            .map(|p| vec![cforms(p.z), sci(p.deviation), sci(p.tail)])
            .collect();
        rep.table("classical comparison", &["z", "deviation", "tail"], rows);
    }
    Ok(())
}

fn mults_of(r: &crate::algebra::Representation) -> Vec<usize> {
    let alg = &r.algebra;
    (0..alg.nblocks())
        .map(|b| {
            let m = r.unit_matrix(b, 0, 0);
            (m.trace().re / alg.block_dim(b).max(1) as f64).round() as usize
        })
        .collect()
}

fn load_matrix(path: &str) -> Result<CMat> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    let md: MatrixData =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    md.to_mat()
}

fn parse_component(s: &str) -> Result<Complex64> {
    let mut parts = s.split(':');
    let re = parts
        .next()
        .unwrap_or("")
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))?;
    let im = match parts.next() {
        Some(t) => t
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(Error::Parse(format!("too many colons in {s:?}")));
    }
    Ok(Complex64::new(re, im))
}

fn parse_points(s: &str, dim: usize) -> Result<Vec<CVec>> {
    let mut out = Vec::new();
    for chunk in s.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let comps: Vec<Complex64> =
            chunk.split(',').map(parse_component).collect::<Result<_>>()?;
        if comps.len() != dim {
            return Err(Error::Parse(format!(
                "point {chunk:?} has {} components, the module has {dim} generators",
                comps.len()
            )));
        }
        out.push(CVec::from_fn(dim, |r, _| comps[r]));
    }
    if out.is_empty() {
        return Err(Error::Parse("empty evaluation grid".into()));
    }
    Ok(out)
}

fn parse_grid(s: &str) -> Result<(f64, usize)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("grid must be \"r,steps\", got {s:?}")));
    }
    let r = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad radius: {e}")))?;
    let steps = parts[1]
        .trim()
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("bad step count: {e}")))?;
    if steps == 0 {
        return Err(Error::Parse("grid needs at least one point".into()));
    }
    Ok((r, steps))
}

fn fmt_vec(v: &CVec) -> String {
    let parts: Vec<String> = v.iter().map(|z| cforms(*z)).collect();
    parts.join(",")
}

fn fmt_matrix(m: &CMat) -> String {
    if m.nrows() == 1 && m.ncols() == 1 {
        return cforms(m[(0, 0)]);
    }
    let mut rows = Vec::with_capacity(m.nrows());
    for r in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols()).map(|cc| cforms(m[(r, cc)])).collect();
        rows.push(format!("[{}]", cells.join(",")));
    }
    format!("[{}]", rows.join(","))
}

//! Worked example catalog with JSON persistence, plus deliberately naive
//! oracles (explicit loops, dense solves) that cross-check the main code
//! paths from outside.

use crate::algebra::{Endomorphism, MultiMatrixAlgebra, Representation};
use crate::correspondence::Correspondence;
use crate::covrep::{covariant_rep, CovRepReport, CovariantRep};
use crate::crossed::{crossed_fixture, CrossedFixture};
use crate::error::{Error, Result};
use crate::fock::FockModule;
use crate::linalg::{block_diag, c, cre, null_basis, zeros, CMat};
use crate::tol::Tol;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Complex matrix in row-major order, entries as [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixData {
    pub fn from_mat(m: &CMat) -> MatrixData {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for cidx in 0..m.ncols() {
                let z = m[(r, cidx)];
                data.push([z.re, z.im]);
            }
        }
        MatrixData { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_mat(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, cc| {
            let [re, im] = self.data[r * self.cols + cc];
            c(re, im)
        }))
    }
}

/// On-disk description of a fixture.  Exactly one of `free`, `graph`, `alpha`
/// picks the module: a free module with that many generators, a directed
/// graph module, or the algebra twisted by the endomorphism whose coordinate
/// matrix is given (column q holds the coordinates of the image of unit q).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Block sizes of the coefficient algebra.
    pub algebra: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub free: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub graph: Option<GraphSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<MatrixData>,
    /// Multiplicity of each block in the base representation.
    pub sigma: Vec<usize>,
    /// For twisted fixtures the generating contraction on the carrier;
    /// otherwise T in product or localized coordinates (shape decides).
    pub t: MatrixData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: usize,
    /// Edges as [source, range] pairs, one generator each.
    pub edges: Vec<[usize; 2]>,
}

/// A realized fixture: the stored description together with the structures
/// it denotes.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub file: FixtureFile,
    pub corr: Correspondence,
    pub sigma: Representation,
    /// T exactly as stored in the file.
    pub t: CMat,
    /// Present when the module is a twisted copy of the algebra.
    pub crossed: Option<CrossedFixture>,
}

impl Fixture {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn covariant(&self, tol: &Tol) -> Result<(CovariantRep, CovRepReport)> {
        match &self.crossed {
            Some(cx) => cx.covariant(tol),
            None => covariant_rep(&self.corr, &self.sigma, &self.t, tol),
        }
    }
}

/// Turn a stored description into live structures, validating everything.
pub fn realize(file: &FixtureFile, tol: &Tol) -> Result<Fixture> {
    let algebra = MultiMatrixAlgebra::new(file.algebra.clone())?;
    let picks =
        file.free.is_some() as usize + file.graph.is_some() as usize + file.alpha.is_some() as usize;
    if picks != 1 {
        return Err(Error::Parse(format!(
            "fixture {} must give exactly one of free/graph/alpha, got {picks}",
            file.name
        )));
    }
    let sigma = Representation::new(algebra.clone(), file.sigma.clone())?;
    let t = file.t.to_mat()?;
    if let Some(n) = file.free {
        if file.algebra != vec![1] {
            return Err(Error::Parse("a free module needs the scalar algebra".into()));
        }
        let corr = Correspondence::free(n);
        return Ok(Fixture { file: file.clone(), corr, sigma, t, crossed: None });
    }
    if let Some(g) = &file.graph {
        if file.algebra != vec![1; g.vertices] {
            return Err(Error::Parse(
                "a graph module needs one scalar block per vertex".into(),
            ));
        }
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        let corr = Correspondence::from_graph(g.vertices, &edges)?;
        return Ok(Fixture { file: file.clone(), corr, sigma, t, crossed: None });
    }
    let am = file.alpha.as_ref().unwrap().to_mat()?;
    let dm = algebra.dim();
    if am.nrows() != dm || am.ncols() != dm {
        return Err(Error::Parse(format!(
            "endomorphism matrix must be {dm}x{dm}, got {}x{}",
            am.nrows(),
            am.ncols()
        )));
    }
    let mut images = Vec::with_capacity(dm);
    for q in 0..dm {
        images.push(algebra.from_coords(&am.column(q).clone_owned())?);
    }
    let alpha = Endomorphism::new(algebra, images, tol)?;
    let cx = crossed_fixture(alpha, sigma.clone(), t.clone(), tol)?;
    let corr = cx.corr.clone();
    Ok(Fixture { file: file.clone(), corr, sigma, t, crossed: Some(cx) })
}

fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> MatrixData {
    MatrixData {
        rows,
        cols,
        data: entries.iter().map(|&x| [x, 0.0]).collect(),
    }
}

fn file_scalar() -> FixtureFile {
    FixtureFile {
        name: "a_scalar".into(),
        description: "one generator over the scalars, T = 0.5 on a line".into(),
        algebra: vec![1],
        free: Some(1),
        graph: None,
        alpha: None,
        sigma: vec![1],
        t: real_matrix(1, 1, &[0.5]),
    }
}

fn file_jordan() -> FixtureFile {
    FixtureFile {
        name: "b_jordan".into(),
        description: "one generator over the scalars, T a nilpotent Jordan cell".into(),
        algebra: vec![1],
        free: Some(1),
        graph: None,
        alpha: None,
        sigma: vec![2],
        t: real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]),
    }
}

fn file_row() -> FixtureFile {
    FixtureFile {
        name: "c_row".into(),
        description: "two free generators over the scalars, T a strict row contraction".into(),
        algebra: vec![1],
        free: Some(2),
        graph: None,
        alpha: None,
        sigma: vec![1],
        t: real_matrix(1, 2, &[0.6, 0.3]),
    }
}

fn file_graph() -> FixtureFile {
    // Edges: a loop at the first vertex and an edge to the second; T sends
    // the loop with weight 0.4 and the edge with weight 0.5, written in
    // product coordinates on two generators over a two dimensional carrier.
    let mut t = vec![0.0; 2 * 4];
    t[0] = 0.4; // loop: carrier slot 0 -> slot 0
    t[1 * 4 + 2] = 0.5; // edge: carrier slot 0 -> slot 1
    FixtureFile {
        name: "d_graph".into(),
        description: "two-vertex graph with a loop and a connecting edge".into(),
        algebra: vec![1, 1],
        free: None,
        graph: Some(GraphSpec { vertices: 2, edges: vec![[0, 0], [0, 1]] }),
        alpha: None,
        sigma: vec![1, 1],
        t: real_matrix(2, 4, &t),
    }
}

fn file_crossed() -> FixtureFile {
    FixtureFile {
        name: "e_crossed".into(),
        description: "two scalar blocks twisted by the swap, off-diagonal generator".into(),
        algebra: vec![1, 1],
        free: None,
        graph: None,
        alpha: Some(real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])),
        sigma: vec![1, 1],
        t: real_matrix(2, 2, &[0.0, 0.5, 0.3, 0.0]),
    }
}

fn file_rotation() -> FixtureFile {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    FixtureFile {
        name: "f_rotation".into(),
        description: "one generator over the scalars, T a plane rotation (unitary)".into(),
        algebra: vec![1],
        free: Some(1),
        graph: None,
        alpha: None,
        sigma: vec![2],
        t: real_matrix(2, 2, &[r, -r, r, r]),
    }
}

fn file_mixed() -> FixtureFile {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let jordan = real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]).to_mat().unwrap();
    let rot = real_matrix(2, 2, &[r, -r, r, r]).to_mat().unwrap();
    let t = block_diag(&[&jordan, &rot]);
    FixtureFile {
        name: "g_mixed".into(),
        description: "nilpotent Jordan block joined to a unitary rotation block".into(),
        algebra: vec![1],
        free: Some(1),
        graph: None,
        alpha: None,
        sigma: vec![4],
        t: MatrixData::from_mat(&t),
    }
}

pub fn catalog_files() -> Vec<FixtureFile> {
    vec![
        file_scalar(),
        file_jordan(),
        file_row(),
        file_graph(),
        file_crossed(),
        file_rotation(),
        file_mixed(),
    ]
}

pub fn catalog(tol: &Tol) -> Result<Vec<Fixture>> {
    catalog_files().iter().map(|f| realize(f, tol)).collect()
}

/// Look a fixture up by its full name or its leading letter, case blind.
pub fn by_name(name: &str, tol: &Tol) -> Result<Fixture> {
    let want = name.to_ascii_lowercase();
    for f in catalog_files() {
        if f.name == want || f.name.starts_with(&format!("{want}_")) {
            return realize(&f, tol);
        }
    }
    Err(Error::Parse(format!("no fixture named {name}")))
}

pub fn load(path: &Path, tol: &Tol) -> Result<Fixture> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let file: FixtureFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    realize(&file, tol)
}

/// Directory the shipped fixture files live in.
pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Write the whole catalog as JSON files named after the fixtures.
pub fn write_files(dir: &Path) -> Result<()> {
    for f in catalog_files() {
        let text = serde_json::to_string_pretty(&f)
            .map_err(|e| Error::Parse(format!("serialize {}: {e}", f.name)))?;
        let path = dir.join(format!("{}.json", f.name));
        std::fs::write(&path, text + "\n")
            .map_err(|e| Error::Structure(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Gram matrix of E (x)_sigma H by the direct double loop over generators,
/// with no quotient machinery involved.
pub fn oracle_gram(corr: &Correspondence, sigma: &Representation) -> CMat {
    let h = sigma.carrier_dim();
    let d = corr.dim;
    let mut g = zeros(d * h, d * h);
    for p in 0..d {
        for q in 0..d {
            let block = sigma.matrix(corr.inner(p, q));
            g.view_mut((p * h, q * h), (h, h)).copy_from(&block);
        }
    }
    g
}

/// Operators commuting with every generator, found by a dense null-space
/// solve of the stacked commutation system.  Quadratic in the unknown count,
/// so the side length is capped.
pub fn oracle_commutant(generators: &[CMat], tol: &Tol) -> Result<Vec<CMat>> {
    let n = match generators.first() {
        Some(g) => g.nrows(),
        None => return Err(Error::Structure("no generators given".into())),
    };
    if generators.iter().any(|g| g.nrows() != n || g.ncols() != n) {
        return Err(Error::Structure("generators must be square and share a size".into()));
    }
    if n > 200 {
        return Err(Error::Resource(format!(
            "commutant solve side {n} exceeds the cap of 200"
        )));
    }
    let id = crate::linalg::eye(n);
    let mut rows = zeros(generators.len() * n * n, n * n);
    for (i, g) in generators.iter().enumerate() {
        // vec([X, G]) = (G^T (x) I - I (x) G) vec(X), columns stacked
        let m = crate::linalg::kron(&g.transpose(), &id) - crate::linalg::kron(&id, g);
        rows.view_mut((i * n * n, 0), (n * n, n * n)).copy_from(&m);
    }
    let basis = null_basis(&rows, tol.null_rel);
    let mut out = Vec::with_capacity(basis.ncols());
    for j in 0..basis.ncols() {
        let col = basis.column(j);
        out.push(CMat::from_fn(n, n, |r, cc| col[cc * n + r]));
    }
    Ok(out)
}

/// The creations of every generator together with the induced algebra
/// action, the generating set whose commutant the oracle measures.
pub fn induced_generators(fm: &FockModule) -> Vec<CMat> {
    let d = fm.fock.base.dim;
    let mut out = Vec::new();
    for p in 0..d {
        let mut xi = crate::linalg::CVec::from_element(d, c(0.0, 0.0));
        xi[p] = cre(1.0);
        out.push(fm.creation(&xi));
    }
    for (b, i, j) in fm.fock.base.algebra.units() {
        out.push(fm.phi(&fm.fock.base.algebra.unit(b, i, j)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::symbol_space_dims;
    use crate::fock::{fock_module, truncated_fock, DEFAULT_DIM_CAP};
    use crate::linalg::{eye, op_norm};

    fn tol() -> Tol {
        Tol::default()
    }

    #[test]
    fn every_fixture_realizes_and_admits_its_contraction() {
        let cat = catalog(&tol()).unwrap();
        assert_eq!(cat.len(), 7);
        let mut names: Vec<&str> = cat.iter().map(|f| f.name()).collect();
        names.dedup();
        assert_eq!(names.len(), 7);
        for fx in &cat {
            let (rep, report) = fx.covariant(&tol()).unwrap();
            assert!(report.contraction_norm <= 1.0 + 1e-12, "{}", fx.name());
            assert_eq!(rep.h(), fx.sigma.carrier_dim());
        }
    }

    #[test]
    fn the_unitary_fixtures_sit_on_the_norm_boundary() {
        for name in ["f", "g"] {
            let fx = by_name(name, &tol()).unwrap();
            let (rep, _) = fx.covariant(&tol()).unwrap();
            let norm = op_norm(&(rep.ttilde.adjoint() * &rep.ttilde));
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_gram_matches_the_localization_on_every_fixture() {
        for fx in catalog(&tol()).unwrap() {
            let g = oracle_gram(&fx.corr, &fx.sigma);
            let (rep, _) = fx.covariant(&tol()).unwrap();
            let via_factor = rep.eh.factor.adjoint() * &rep.eh.factor;
            assert!(
                op_norm(&(g - via_factor)) < 1e-10,
                "gram mismatch on {}",
                fx.name()
            );
        }
    }

    #[test]
    fn oracle_commutant_of_the_identity_is_everything() {
        let basis = oracle_commutant(&[eye(3)], &tol()).unwrap();
        assert_eq!(basis.len(), 9);
    }

    #[test]
    fn oracle_commutant_of_a_generic_diagonal_is_the_diagonal() {
        let d = CMat::from_fn(3, 3, |r, cc| {
            if r == cc { c(1.0 + r as f64, 0.0) } else { c(0.0, 0.0) }
        });
        let basis = oracle_commutant(&[d], &tol()).unwrap();
        assert_eq!(basis.len(), 3);
        for m in &basis {
            for r in 0..3 {
                for cc in 0..3 {
                    if r != cc {
                        assert!(m[(r, cc)].norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_commutant_rejects_oversized_problems() {
        let err = oracle_commutant(&[eye(201)], &tol()).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn induced_commutant_dimension_counts_the_symbol_spaces_for_one_generator() {
        let fx = by_name("a", &tol()).unwrap();
        let fock = truncated_fock(&fx.corr, 4, &tol(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(fock, fx.sigma.clone(), &tol()).unwrap();
        let basis = oracle_commutant(&induced_generators(&fm), &tol()).unwrap();
        let dims: usize = symbol_space_dims(&fm).iter().sum();
        assert_eq!(basis.len(), dims);
        assert_eq!(basis.len(), 5);
    }

    #[test]
    fn induced_commutant_dimension_counts_the_symbol_spaces_for_the_twist() {
        let fx = by_name("e", &tol()).unwrap();
        let fock = truncated_fock(&fx.corr, 3, &tol(), DEFAULT_DIM_CAP).unwrap();
        let fm = fock_module(fock, fx.sigma.clone(), &tol()).unwrap();
        let basis = oracle_commutant(&induced_generators(&fm), &tol()).unwrap();
        let dims: usize = symbol_space_dims(&fm).iter().sum();
        assert_eq!(basis.len(), dims);
        assert_eq!(basis.len(), 8);
    }

    #[test]
    fn json_round_trip_preserves_the_catalog() {
        for f in catalog_files() {
            let text = serde_json::to_string(&f).unwrap();
            let back: FixtureFile = serde_json::from_str(&text).unwrap();
            assert_eq!(f, back);
            realize(&back, &tol()).unwrap();
        }
    }

    #[test]
    fn shipped_files_match_the_in_code_catalog() {
        let dir = default_dir();
        for f in catalog_files() {
            let path = dir.join(format!("{}.json", f.name));
            let text = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let parsed: FixtureFile = serde_json::from_str(&text).unwrap();
            assert_eq!(parsed, f, "stale fixture file {}", path.display());
        }
    }

    #[test]
    fn lookup_accepts_letters_and_full_names_and_rejects_strangers() {
        assert_eq!(by_name("B", &tol()).unwrap().name(), "b_jordan");
        assert_eq!(by_name("d_graph", &tol()).unwrap().name(), "d_graph");
        assert!(matches!(by_name("z", &tol()), Err(Error::Parse(_))));
    }

    #[test]
    fn a_fixture_must_pick_exactly_one_module_kind() {
        let mut f = file_scalar();
        f.graph = Some(GraphSpec { vertices: 1, edges: vec![[0, 0]] });
        assert!(matches!(realize(&f, &tol()), Err(Error::Parse(_))));
    }

    #[test]
    #[ignore]
    fn regenerate_fixture_files() {
        write_files(&default_dir()).unwrap();
    }
}

use opmodel::charfun::characteristic_operator;
use opmodel::fixtures;
use opmodel::model::{canonical_equivalence, model_covariant_rep, model_spaces};
use opmodel::tol::Tol;

#[test]
fn probe_canonical_scaling() {
    let tol = Tol::default();
    for (name, levels) in [("a", vec![6usize, 12, 20, 28, 34]), ("c", vec![4, 6, 8, 9])] {
        let fx = fixtures::by_name(name, &tol).unwrap();
        let (rep, _) = fx.covariant(&tol).unwrap();
        for lvl in levels {
            let t0 = std::time::Instant::now();
            let cd = characteristic_operator(&rep, lvl, &tol).unwrap();
            let spaces = model_spaces(&cd, &tol).unwrap();
            let canon = canonical_equivalence(&spaces).unwrap();
            let (mrep, wres) = model_covariant_rep(&spaces, &tol).unwrap();
            let sv_m = {
                let mut v: Vec<f64> = mrep.ttilde.clone().singular_values().iter().cloned().collect();
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                v
            };
            let sv_o = {
                let mut v: Vec<f64> = rep.ttilde.clone().singular_values().iter().cloned().collect();
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                v
            };
            let svd_gap = sv_m
                .iter()
                .zip(&sv_o)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
                .max((sv_m.len() as f64 - sv_o.len() as f64).abs());
            println!(
                "{name} lvl {lvl:2}: unit {:.3e} intertwine {:.3e} sub {:.3e} wellposed {wres:.3e} svgap {svd_gap:.3e} hdim {} ({} ms)",
                canon.unitary_residual,
                canon.intertwine_residual,
                canon.subspace_residual,
                spaces.h_dim(),
                t0.elapsed().as_millis()
            );
        }
    }
}

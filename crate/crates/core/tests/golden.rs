//! Golden-file checks for the compact acceptor text serialization.

use rnnt_lattice::builders::build_unit_schema;
use rnnt_lattice::wrnnt::{w_grid_lattice, WVariant};
use rnnt_lattice::{LogProbTensor, TargetSeq};

#[test]
fn unit_schema_text_matches_golden() {
    let y = TargetSeq::new(vec![1, 3]).unwrap();
    let schema = build_unit_schema(&y, 4).unwrap();
    assert_eq!(
        schema.graph().to_text(),
        include_str!("golden/unit_schema_ac_v4.txt")
    );
}

#[test]
fn w_grid_force_final_text_matches_golden() {
    let w = (1.0f64 / 3.0).ln();
    let x = LogProbTensor::from_vec_f64([2, 2, 3], vec![w; 12], true).unwrap();
    let y = TargetSeq::new(vec![1]).unwrap();
    let lat = w_grid_lattice(&x, &y, WVariant::ForceFinal).unwrap();
    assert_eq!(
        lat.graph().to_text(),
        include_str!("golden/w_grid_force_final_t2_u1_v3.txt")
    );
}

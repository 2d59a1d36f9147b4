use std::time::Instant;

use conformal_drift::elliptic::{representation_check_lame, representation_check_scalar, NeumannGreenForms, NeumannOptions};
use conformal_drift::fieldcalc::ops::arc;
use conformal_drift::fieldcalc::{BallGrid, Grid, ScalarField, VectorField};

// C⁷ bump supported in B_{s0}
fn bump(x: &[f64], s0: f64) -> f64 {
    let s2 = x.iter().map(|v| v * v).sum::<f64>() / (s0 * s0);
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - s2).powi(8)
    }
}

#[test]
fn neumann_forms_reciprocity_and_bound() {
    let t = Instant::now();
    let grid = BallGrid::uniform(3, 1.0, 24, &[12], 24).unwrap();
    let forms = NeumannGreenForms::build(&grid).unwrap();
    eprintln!("build {:?}", t.elapsed());
    let pairs = vec![
        (vec![0.1, 0.2, -0.1], vec![-0.3, 0.1, 0.4]),
        (vec![0.0, 0.0, 0.0], vec![0.5, -0.2, 0.1]),
        (vec![0.4, 0.3, 0.0], vec![-0.2, -0.4, 0.3]),
    ];
    let rec = forms.reciprocity_defect(&pairs).unwrap();
    eprintln!("reciprocity {rec:e} {:?}", t.elapsed());
    assert!(rec < 1e-3);
    let c = forms.kernel_bound(&[0.2, 0.5, 0.8]).unwrap();
    eprintln!("C(δ) {c:?} {:?}", t.elapsed());
    assert!(c.windows(2).all(|w| w[1].1 <= w[0].1));
    let coarse = NeumannGreenForms::build_with(&grid, &NeumannOptions { degree: 8, boundary_theta: 24 }).unwrap();
    let c2 = coarse.kernel_bound(&[0.5]).unwrap();
    eprintln!("C(0.5) coarse {c2:?}");
    assert!((c2[0].1 - c[1].1).abs() <= 0.05 * c[1].1);
}

#[test]
fn lame_representation_of_compact_field() {
    let t = Instant::now();
    let grid = BallGrid::uniform(3, 1.0, 48, &[16], 32).unwrap();
    let forms = NeumannGreenForms::build(&grid).unwrap();
    let g = arc(Grid::Ball(grid));
    let w = VectorField::from_fn(g, |x| {
        let b = bump(x, 0.7);
        vec![b * (1.0 + x[1]), 0.5 * b, -0.3 * b * x[0]]
    });
    let pts = vec![vec![0.1, -0.2, 0.15], vec![0.3, 0.2, -0.1]];
    let rep = representation_check_lame(&forms, &w, &pts).unwrap();
    eprintln!("{rep:?} {:?}", t.elapsed());
    assert!(rep.boundary_term < 1e-8);
    assert!(rep.value_defect < 1e-3);
    assert!(rep.lw_defect < 1e-3);
}

#[test]
fn scalar_representation() {
    let grid = arc(Grid::Ball(BallGrid::uniform(3, 1.0, 32, &[12], 24).unwrap()));
    let h = ScalarField::from_fn(grid.clone(), |x| x[0] * x[0] - x[1] * x[1] + 0.5 * x[2]);
    let pts = vec![vec![0.0, 0.0, 0.0], vec![0.1, 0.2, 0.0]];
    let d = representation_check_scalar(&h, &pts, 0.6).unwrap();
    eprintln!("harmonic defect {d:e}");
    assert!(d < 1e-4);
    let c = ScalarField::constant(grid.clone(), 2.5);
    assert!(representation_check_scalar(&c, &pts, 0.6).unwrap() < 1e-10);
    let u = ScalarField::from_fn(grid, |x| (x[0] + 0.3 * x[1] * x[2]).cos());
    let d = representation_check_scalar(&u, &pts, 0.6).unwrap();
    eprintln!("general defect {d:e}");
    assert!(d < 1e-4);
}

use pluriperiod_core::cohomology::CocycleSystem;
use pluriperiod_core::eichler::{iterated_antiderivative, PeriodCocycle};
use pluriperiod_core::forms::poincare_form;
use pluriperiod_core::fuchsian::{enumerate_ball, octagon_group, octagon_svg, EnumerationOptions, GroupWord};
use pluriperiod_core::Error;

#[test]
fn octagon_presentation_is_consistent() {
    let (g, oct) = octagon_group().unwrap();
    assert!(g.relator_residual().unwrap() < 1e-9);
    assert!(oct.pairing_residual() < 1e-9);
    assert!(oct.closure_residual() < 1e-9);
    assert_eq!(oct.vertices.len(), 9);
    assert_eq!(g.relator().unwrap().len(), 8);
}

#[test]
fn ball_grows_and_respects_the_cap() {
    let (g, _) = octagon_group().unwrap();
    let small = enumerate_ball(&g, 5.0, EnumerationOptions::default()).unwrap();
    let large = enumerate_ball(&g, 7.0, EnumerationOptions::default()).unwrap();
    assert!(small.len() < large.len());
    assert!(small.elements.iter().any(|e| e.word == GroupWord::identity()));
    let capped = enumerate_ball(&g, 7.0, EnumerationOptions { cap: 50, ..Default::default() });
    assert!(matches!(capped, Err(Error::BudgetExceeded { cap: 50 })));
}

#[test]
fn svg_export_labels_every_vertex() {
    let (_, oct) = octagon_group().unwrap();
    let svg = octagon_svg(&oct);
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("fill=\"crimson\"").count(), 8);
    for j in 1..=8 {
        assert!(svg.contains(&format!(">tau_{j}<")));
    }
}

#[test]
fn eichler_cocycles_lie_in_the_cocycle_space() {
    let (g, oct) = octagon_group().unwrap();
    let system = CocycleSystem::new(&g, -1).unwrap();
    for nu in [0, 2] {
        let f = poincare_form(&g, -1, nu, 8.0).unwrap();
        let phi = iterated_antiderivative(&f, oct.tau1()).unwrap();
        let omega = PeriodCocycle::from_eichler(&phi).unwrap();
        let values = omega.generator_values().unwrap();
        let scale = values.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
        let relator = system.relator_value(&values).unwrap();
        assert!(relator.max_abs() / (1.0 + scale) < 10.0 * f.defect_estimate(), "nu={nu}");
        assert!(!system.is_coboundary(&omega).unwrap().is_coboundary, "nu={nu}");
    }
}

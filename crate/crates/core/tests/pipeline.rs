use pcbplace::driver::PlacementMode;
use pcbplace::gen::{generate_case, CaseSpec};
use pcbplace::io::solution::SolutionFile;
use pcbplace::legalize::{check, legalize, LegalizeConfig};
use pcbplace::model::{Layer, PlacementProblem, PlacementSolution};
use pcbplace::pipeline::{place_case, LayerSelection, PipelineConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn case(spec: CaseSpec) -> PlacementProblem {
    generate_case(&spec).to_problem().unwrap()
}

#[test]
fn case3_shape_places_legally() {
    let problem = case(CaseSpec::case3(7));
    let out = place_case(&problem, LayerSelection::default(), &PipelineConfig::default(), 1);
    assert_eq!(out.layers.len(), 2);
    assert_eq!(out.layers[0].layer, Layer::Bottom);
    for l in &out.layers {
        assert!(l.is_legal(), "{:?}", l.legality);
    }
    assert!(out.contour.is_some());
}

#[test]
fn legalization_keeps_wirelength_close() {
    let problem = case(CaseSpec::case3(9));
    let mut ratio = 0.0;
    let runs = 3;
    for seed in 0..runs {
        let out = place_case(&problem, LayerSelection::default(), &PipelineConfig::default(), seed);
        let l = out.layer(Layer::Bottom).unwrap();
        ratio += l.hpwl / l.hpwl_global;
    }
    ratio /= runs as f64;
    assert!(ratio < 1.25, "mean legalized / global hpwl {ratio}");
}

#[test]
fn top_only_leaves_bottom_in_place() {
    let problem = case(CaseSpec::case3(4));
    let before = PlacementSolution::from_problem(&problem);
    let sel = LayerSelection { top: true, bottom: false };
    let out = place_case(&problem, sel, &PipelineConfig::default(), 0);
    assert_eq!(out.layers.len(), 1);
    assert_eq!(out.layers[0].layer, Layer::Top);
    for ci in problem.layer_components(Layer::Bottom) {
        assert_eq!((out.solution.x[ci], out.solution.y[ci]), (before.x[ci], before.y[ci]));
    }
}

#[test]
fn same_seed_same_solution() {
    let problem = case(CaseSpec::new("small", 6, 25, 200, 60, 3));
    let cfg = PipelineConfig::default();
    let a = place_case(&problem, LayerSelection::default(), &cfg, 42);
    let b = place_case(&problem, LayerSelection::default(), &cfg, 42);
    assert_eq!(a.solution_file(&problem, 42).to_json(), b.solution_file(&problem, 42).to_json());
}

#[test]
fn solution_file_round_trips() {
    let problem = case(CaseSpec::new("small", 4, 20, 160, 50, 8));
    let out = place_case(&problem, LayerSelection::default(), &PipelineConfig::default(), 5);
    let text = out.solution_file(&problem, 5).to_json();
    let back = SolutionFile::parse(&text).unwrap().to_solution(&problem).unwrap();
    assert_eq!(back.x, out.solution.x);
    assert_eq!(back.y, out.solution.y);
    assert_eq!(back.r, out.solution.r);
}

#[test]
fn stacked_bottom_components_get_separated() {
    let problem = case(CaseSpec::new("stack", 0, 60, 500, 120, 2));
    let ic = problem.ic_outline();
    let mut sol = PlacementSolution::from_problem(&problem);
    for ci in problem.layer_components(Layer::Bottom) {
        sol.x[ci] = ic.width / 2.0;
        sol.y[ci] = ic.height / 2.0;
    }
    let cfg = LegalizeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (out, report) = legalize(&problem, PlacementMode::Bottom, &sol, &cfg, &mut rng);
    assert!(report.unplaceable.is_empty(), "{:?}", report.unplaceable);
    let again = check(&problem, PlacementMode::Bottom, &out, &cfg);
    assert_eq!(again.total_overlap_area, 0.0);
    assert_eq!(again.out_of_bounds_length, 0.0);
    assert_eq!(again.spacing_violations, 0);
    assert_eq!(again.close_to_pin_violations, report.close_to_pin_failed.len());
}

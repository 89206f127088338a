use pcbplace::bench::{build_outline, run_benchmark, BenchProtocol, RunStats};
use pcbplace::gen::{generate_circuit, CircuitSpec};
use pcbplace::io::bookshelf::{parse_bookshelf, BookshelfPaths};
use pcbplace::pipeline::PipelineConfig;

fn circuit() -> pcbplace::io::bookshelf::BookshelfCircuit {
    generate_circuit(&CircuitSpec {
        blocks: 20,
        terminals: 24,
        nets: 40,
        seed: 4,
        ..Default::default()
    })
}

#[test]
fn runs_are_reproducible_and_stats_recompute() {
    let c = circuit();
    let protocol = BenchProtocol {
        gamma: 0.3,
        aspect_ratios: vec![1.0],
        runs: 3,
        seed: 10,
    };
    let cfg = PipelineConfig::default();
    let (stats, a) = run_benchmark("s20", &c, 1.5, &protocol, &cfg).unwrap();
    let (_, b) = run_benchmark("s20", &c, 1.5, &protocol, &cfg).unwrap();
    assert_eq!(a.len(), 3);
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        assert_eq!(x.run, k);
        assert_eq!(x.seed, 10 + k as u64);
        assert_eq!((x.hpwl, x.success, x.overlap), (y.hpwl, y.success, y.overlap));
    }
    let again = RunStats::from_records(&a);
    assert_eq!(again, stats);
    assert_eq!(stats.runs, 3);
}

#[test]
fn bookshelf_round_trip_keeps_area() {
    let c = circuit();
    let dir = tempfile::tempdir().unwrap();
    let paths = c.write(dir.path(), "s20").unwrap();
    let back = parse_bookshelf(&paths).unwrap();
    assert_eq!(back, c);
    assert_eq!(parse_bookshelf(&BookshelfPaths::from_stem(dir.path(), "s20")).unwrap(), c);
    let o = build_outline(back.total_block_area(), 0.15, 2.0);
    assert!((o.width * o.height - 1.15 * c.total_block_area()).abs() < 1e-6);
}

#[test]
fn invalid_protocol_is_rejected() {
    let protocol = BenchProtocol {
        runs: 0,
        ..Default::default()
    };
    assert!(run_benchmark("s", &circuit(), 1.0, &protocol, &PipelineConfig::default()).is_err());
}

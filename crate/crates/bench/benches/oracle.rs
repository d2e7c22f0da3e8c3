//! End-to-end benchmarks over the bundled triangle fixture: parsing,
//! expected-result generation, a full suite run, and emission.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use vdm_oracle::emit::emit_oracle_class;
use vdm_oracle::eval::{default_max_nat, expected_result, InputToken};
use vdm_oracle::harness::{run_suite, BuiltinIut, RunConfig, Suite};
use vdm_oracle::optimize::map_class;
use vdm_oracle::parser::parse_source;
use vdm_oracle::resolve::ResolvedClass;

fn fixture(name: &str) -> String {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/");
    std::fs::read_to_string(format!("{root}{name}")).expect("fixture readable")
}

fn bench_parse(c: &mut Criterion) {
    let text = fixture("triangle.vdmpp");
    c.bench_function("parse_triangle", |b| {
        b.iter(|| parse_source(black_box(&text)).expect("parses"))
    });
}

fn bench_expected_result(c: &mut Criterion) {
    let text = fixture("triangle.vdmpp");
    let file = parse_source(&text).expect("parses");
    let resolved = ResolvedClass::resolve(&file, "Triangle").expect("resolves");
    let m = default_max_nat();
    let inputs: Vec<InputToken> =
        [2, 3, 4].iter().map(|&i| InputToken::Int(i.into())).collect();
    c.bench_function("expected_result_classify", |b| {
        b.iter(|| expected_result(&resolved, "classify", black_box(&inputs), &m))
    });
}

fn bench_run_suite(c: &mut Criterion) {
    let text = fixture("triangle.vdmpp");
    let file = parse_source(&text).expect("parses");
    let resolved = ResolvedClass::resolve(&file, "Triangle").expect("resolves");
    let suite = Suite::from_json(&fixture("triangle_suite.json")).expect("suite loads");
    let dir = tempfile::tempdir().expect("tempdir");
    let config = RunConfig { report_dir: dir.path().to_path_buf(), ..RunConfig::default() };
    c.bench_function("run_suite_reference", |b| {
        b.iter(|| {
            let mut iut = BuiltinIut::reference();
            run_suite(&text, &resolved, &suite, &mut iut, &config).expect("runs")
        })
    });
}

fn bench_emit(c: &mut Criterion) {
    let text = fixture("triangle.vdmpp");
    let file = parse_source(&text).expect("parses");
    let model = map_class(&file.classes[0]).expect("maps");
    c.bench_function("emit_oracle_class", |b| {
        b.iter(|| emit_oracle_class(black_box(&model)).expect("emits"))
    });
}

criterion_group!(benches, bench_parse, bench_expected_result, bench_run_suite, bench_emit);
criterion_main!(benches);

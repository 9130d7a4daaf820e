//! Seeded inputs shared by the benchmarks.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smellcheck_core::sample::{Origin, SampleRow, SampleTable};
use smellcheck_core::smell::SmellKind;
use smellcheck_core::source_model::{parse_compilation_unit, CompilationUnit, Corpus};
use smellcheck_core::synth::{render_class, MethodSpec};
use smellcheck_core::tagging::annotation_text;

/// Java sources of `classes` classes with `methods` random methods each.
/// A method carries a LongMethod tag with probability logistic(-6 + 0.1 MLOC).
pub fn sources(seed: u64, classes: usize, methods: usize) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..classes)
        .map(|c| {
            let specs: Vec<_> = (0..methods)
                .map(|m| {
                    let mut spec = MethodSpec::new(
                        format!("m{m}"),
                        0,
                        rng.random_range(1..5),
                        rng.random_range(1..15),
                        rng.random_range(0..5),
                        rng.random_range(0..8),
                    );
                    spec.mloc = rng.random_range(spec.min_mloc().max(3)..120);
                    let p = 1.0 / (1.0 + (6.0 - 0.1 * spec.mloc as f64).exp());
                    let tags = if rng.random::<f64>() < p { vec![annotation_text("LongMethod", "")] } else { vec![] };
                    (spec, tags)
                })
                .collect();
            let name = format!("Bench{c}");
            (format!("bench/{name}.java"), render_class("bench", &name, &specs))
        })
        .collect()
}

pub fn parse_all(sources: &[(String, String)]) -> Vec<CompilationUnit> {
    sources
        .iter()
        .map(|(path, text)| parse_compilation_unit(text, path.as_str()).expect("generated source parses"))
        .collect()
}

pub fn corpus(seed: u64, classes: usize, methods: usize) -> Corpus {
    Corpus::from_units(parse_all(&sources(seed, classes, methods)))
}

/// LongMethod rows whose label follows logistic(-5 + 0.06 MLOC + 0.2 VG).
pub fn table(seed: u64, n: usize) -> SampleTable {
    let smell = SmellKind::long_method();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = SampleTable::new(smell.name.clone(), smell.metric_set.clone());
    for i in 0..n {
        let values = vec![
            f64::from(rng.random_range(3u32..120)),
            f64::from(rng.random_range(1u32..6)),
            f64::from(rng.random_range(1u32..20)),
            f64::from(rng.random_range(0u32..6)),
            f64::from(rng.random_range(0u32..15)),
        ];
        let z = -5.0 + 0.06 * values[0] + 0.2 * values[2];
        table.rows.push(SampleRow {
            application: "bench".into(),
            package: "bench".into(),
            class: format!("C{}", i / 50),
            method: Some(format!("m{i}(int)")),
            values,
            label: u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-z).exp())),
            origin: Origin::Expert,
            timestamp: format!("2026-01-01T00:00:{:02}Z", i % 60),
        });
    }
    table
}

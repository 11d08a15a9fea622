//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use wordorder_cli::{cmd_eval, cmd_gen, cmd_train, ExperimentConfig, LanguageSelection, RunManifest, RunStatus};
use wordorder_core::corpus::{
    build_judgment_pairs, build_splits, build_targeted_split, CorpusSplit, JudgmentKind, SplitName, SplitSizes,
};
use wordorder_core::curriculum::{plan_length_curriculum, stage_composition, Mode};
use wordorder_core::eval::{
    aggregate_tables, group_table_csv, pearson, typological_alignment, FreqTable, PplVector, TaPoints, GROUP_HEADER,
};
use wordorder_core::grammar::{Grammar, Lexicon, PosClass, RuleKind};
use wordorder_core::language::{
    base_order, build_lexicon, enumerate_configs, BaseOrder, Language, VocabSpec, WordOrderConfig,
    OBJECT_RELATIVIZER,
};
use wordorder_core::nn::{grad_check, lr_at, toy_spec, Arch, ModelSpec, Schedule, TrainReport};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cfg(id: &str) -> WordOrderConfig {
    id.parse().unwrap()
}

fn grammar_fidelity() -> Outcome {
    let vocab = VocabSpec::default();
    let lex = build_lexicon(&cfg("0101101"), &vocab).map_err(|e| e.to_string())?;
    let nouns = lex.tokens_of(PosClass::Noun);
    let (man, lisa) = (nouns[0], nouns[1]);
    let met = lex.tokens_of(PosClass::TransitiveVerb)[0];
    let walked = lex.tokens_of(PosClass::IntransitiveVerb)[0];
    let g = Grammar::with_defaults(lex.clone()).map_err(|e| e.to_string())?;
    use RuleKind::*;

    let five = [man, "ga", met, lisa, "o"];
    let d = g.parse(&five).unwrap().ok_or("5-word sentence does not parse")?;
    ensure(d.verify(false) && d.is_sentential(5), || "5-word derivation unsound".into())?;
    let want5 = vec![BackwardApplication, BackwardApplication, ForwardApplication, BackwardApplication];
    ensure(d.rules_postorder() == want5, || format!("5-word rules {:?}", d.rules_postorder()))?;

    let seven = [man, "ga", OBJECT_RELATIVIZER, lisa, "ga", met, walked];
    let d = g.parse(&seven).unwrap().ok_or("7-word sentence does not parse")?;
    ensure(d.verify(false) && d.is_sentential(7), || "7-word derivation unsound".into())?;
    let want7 = vec![
        BackwardApplication,
        BackwardApplication,
        WeakGeneralizedPermutation,
        BackwardApplication,
        ForwardApplication,
        BackwardApplication,
        BackwardApplication,
    ];
    ensure(d.rules_postorder() == want7, || format!("7-word rules {:?}", d.rules_postorder()))?;
    let perms = d.rule_counts().get(&WeakGeneralizedPermutation).copied().unwrap_or(0);
    ensure(perms == 1, || format!("{perms} permutation steps"))?;

    let lex0 = build_lexicon(&cfg("0000000"), &vocab).map_err(|e| e.to_string())?;
    let n = lex0.tokens_of(PosClass::Noun);
    let (ken, john, lisa) = (n[0], n[1], n[2]);
    let touch = lex0.tokens_of(PosClass::TransitiveVerb)[0];
    let said = lex0.tokens_of(PosClass::ClauseVerb)[0];
    let head_final = [ken, "ga", john, "ga", lisa, "o", touch, "that", said];
    let head_initial = [ken, "ga", said, "that", john, "ga", touch, lisa, "o"];
    let g0 = Grammar::with_defaults(lex0.clone()).unwrap();
    let pattern = [
        g0.is_grammatical(&head_final).unwrap(),
        g.is_grammatical(&head_final).unwrap(),
        g.is_grammatical(&head_initial).unwrap(),
        g0.is_grammatical(&head_initial).unwrap(),
    ];
    ensure(pattern == [true, false, true, false], || format!("example orders {pattern:?}"))?;
    Ok("both derivations match; one permutation step; example orders exclusive".into())
}

fn toy_lexicon() -> Lexicon {
    "man\tNP\tnoun
big\tNP/NP\tadjective
ga\tNP_SBJ\\NP\tsubject_marker
o\tNP_OBJ\\NP\tobject_marker
met\t(S\\NP_SBJ)/NP_OBJ\ttransitive_verb
walked\tS\\NP_SBJ\tintransitive_verb
whom\t(NP_SBJ\\NP_SBJ)/(S/NP_OBJ)\trelativizer
and\tCONJ\tconjunction
"
    .parse()
    .unwrap()
}

fn parser_oracle() -> Outcome {
    let lex = toy_lexicon();
    let g = Grammar::with_defaults(lex.clone()).unwrap();
    let words: Vec<&str> = lex.entries().iter().map(|e| e.token.as_str()).collect();
    let (mut checked, mut positives) = (0usize, 0usize);
    let mut seq: Vec<&str> = Vec::new();
    for len in 1..=6usize {
        let total = words.len().pow(len as u32);
        for mut code in 0..total {
            seq.clear();
            for _ in 0..len {
                seq.push(words[code % words.len()]);
                code /= words.len();
            }
            let chart = g.is_grammatical(&seq).unwrap();
            let oracle = common::brute_force_grammatical(&seq, &lex);
            ensure(chart == oracle, || format!("{seq:?}: chart {chart}, oracle {oracle}"))?;
            checked += 1;
            positives += usize::from(chart);
        }
    }
    Ok(format!("{checked} sequences agree ({positives} grammatical)"))
}

fn configuration_space() -> Outcome {
    let all = enumerate_configs();
    ensure(all.len() == 96, || format!("{} configs", all.len()))?;
    for b in BaseOrder::ALL {
        let n = all.iter().filter(|c| base_order(c) == b).count();
        ensure(n == 16, || format!("{b}: {n} configs"))?;
    }
    let orders = ["SOV", "OSV", "SVO", "OVS", "VSO", "VOS"];
    let before = |o: &str, a: char, b: char| o.find(a) < o.find(b);
    let accepted: BTreeSet<String> = all.iter().map(|c| c.id()).collect();
    let mut rejected = 0;
    for n in 0u32..128 {
        let id = format!("{n:07b}");
        let b: Vec<bool> = id.bytes().map(|c| c == b'1').collect();
        let consistent =
            orders.iter().any(|o| before(o, 'S', 'V') != b[0] && before(o, 'O', 'V') != b[1] && before(o, 'S', 'O') != b[2]);
        ensure(accepted.contains(&id) == consistent, || format!("{id} misclassified"))?;
        rejected += usize::from(!consistent);
    }
    ensure(rejected == 32, || format!("{rejected} rejected"))?;
    Ok("96 ids, 16 per base order, 32 rejected are exactly the inconsistent ones".into())
}

const SAMPLE_LANGS: [&str; 4] = ["0000000", "0101101", "1101101", "0010000"];

fn texts(s: &CorpusSplit) -> BTreeSet<String> {
    s.records.iter().map(|r| r.text()).collect()
}

fn corpus_invariants(keep: &mut Option<CorpusSplit>) -> Outcome {
    let sizes = SplitSizes::default();
    let mut notes = Vec::new();
    for id in SAMPLE_LANGS {
        let t0 = Instant::now();
        let lang = Language::build(cfg(id), &VocabSpec::default()).map_err(|e| e.to_string())?;
        let g = lang.grammar().map_err(|e| e.to_string())?;
        let base = build_splits(&lang, &sizes, 1).map_err(|e| format!("{id}: {e}"))?;
        ensure(base.train.len() == 80_000, || format!("{id}: train has {}", base.train.len()))?;
        let h = base.train.length_histogram();
        let (lo, hi) = (h.values().min().unwrap(), h.values().max().unwrap());
        ensure(h.keys().copied().eq(3..=8) && hi - lo <= 1, || format!("{id}: train lengths {h:?}"))?;
        let train_texts = texts(&base.train);
        ensure(train_texts.is_disjoint(&texts(&base.short)), || format!("{id}: train and short overlap"))?;
        ensure(base.medium.records.iter().all(|r| (9..=10).contains(&r.len())), || format!("{id}: medium lengths"))?;
        let mut targeted = Vec::new();
        for name in [SplitName::Recursive, SplitName::Embedded] {
            let s = build_targeted_split(&lang, name, sizes.targeted, 1).map_err(|e| format!("{id} {name}: {e}"))?;
            ensure(s.len() == 500, || format!("{id}: {name} has {}", s.len()))?;
            ensure(s.records.iter().all(|r| r.len() > 8), || format!("{id}: short {name} item"))?;
            targeted.push(s);
        }
        let mut parsed = 0;
        for split in [&base.train, &base.short, &base.medium, &base.long].into_iter().chain(targeted.iter()) {
            for r in &split.records {
                ensure(g.is_grammatical(&r.tokens).unwrap(), || format!("{id}: `{}` does not parse", r.text()))?;
                parsed += 1;
            }
        }
        for kind in JudgmentKind::ALL {
            let set = build_judgment_pairs(&g, &base.medium, kind, sizes.judgment, 7).map_err(|e| e.to_string())?;
            ensure(!set.pairs.is_empty(), || format!("{id}: no {kind} pairs"))?;
            for p in &set.pairs {
                ensure(!g.is_grammatical(&p.ungrammatical.tokens).unwrap(), || {
                    format!("{id}: ungrammatical side `{}` parses", p.ungrammatical.text())
                })?;
            }
        }
        notes.push(format!("{id} {parsed} parsed in {:.0}s", t0.elapsed().as_secs_f64()));
        if id == "0101101" {
            *keep = Some(base.train);
        }
    }
    Ok(notes.join("; "))
}

fn curriculum_arithmetic(train: Option<&CorpusSplit>) -> Outcome {
    let train = train.ok_or("no 80K training split available")?;
    let plan = plan_length_curriculum(train, 80_000, 1).map_err(|e| e.to_string())?;
    let expected: [&[f64]; 6] =
        [&[1.0], &[0.05, 0.95], &[0.05, 0.05, 0.90], &[0.05, 0.05, 0.05, 0.85], &[0.05, 0.05, 0.05, 0.05, 0.80], &[
            0.05, 0.05, 0.05, 0.05, 0.05, 0.75,
        ]];
    ensure(plan.stages.len() == 6, || format!("{} stages", plan.stages.len()))?;
    for (k, (stage, want)) in plan.stages.iter().zip(expected).enumerate() {
        let comp: Vec<f64> = stage.composition.values().copied().collect();
        ensure(comp.len() == want.len() && comp.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), || {
            format!("stage {} composition {comp:?}", k + 1)
        })?;
        ensure(stage_composition(k + 1) == stage.composition, || format!("stage {} table", k + 1))?;
        let mut realised: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &stage.records {
            *realised.entry(train.records[i].len()).or_insert(0) += 1;
        }
        for (len, share) in &stage.composition {
            let got = realised.get(len).copied().unwrap_or(0) as f64;
            ensure((got - share * stage.count as f64).abs() <= 1.0, || format!("stage {} length {len}: {got}", k + 1))?;
        }
    }
    ensure(plan.total() == 80_000, || format!("total {}", plan.total()))?;
    let s3 = &plan.stages[2].composition;
    ensure(*s3 == BTreeMap::from([(3, 0.05), (4, 0.05), (5, 0.90)]), || format!("stage 3 {s3:?}"))?;
    let counts: Vec<usize> = plan.stages.iter().map(|s| s.count).collect();
    Ok(format!("stage counts {counts:?} sum to 80000"))
}

fn gradient_correctness() -> Outcome {
    let mut worst = Vec::new();
    for arch in Arch::ALL {
        let r = grad_check(&toy_spec(arch), 11, 20).map_err(|e| e.to_string())?;
        ensure(r.probes.len() == 20, || format!("{arch}: {} probes", r.probes.len()))?;
        ensure(r.max_rel_error < 1e-3, || format!("{arch}: max relative error {:.2e}", r.max_rel_error))?;
        worst.push(format!("{arch} {:.1e}", r.max_rel_error));
    }
    Ok(format!("max relative error: {}", worst.join(", ")))
}

fn hyperparameter_fidelity() -> Outcome {
    let targets = [(Arch::Transformer, 462_000.0), (Arch::Lstm, 3_547_000.0), (Arch::Rnn, 49_000.0)];
    let mut counts = Vec::new();
    for (arch, target) in targets {
        let n = ModelSpec::default_for(arch, 500).param_count();
        let dev = (n as f64 - target) / target;
        ensure(dev.abs() <= 0.05, || format!("{arch}: {n} parameters ({:+.1}%)", dev * 100.0))?;
        counts.push(format!("{arch} {n} ({:+.1}%)", dev * 100.0));
    }
    let s = Schedule::default();
    for (step, want) in [(0, 1e-7), (400, 5e-4), (1600, 2.5e-4)] {
        let got = lr_at(&s, step);
        ensure(((got - want) / want).abs() <= 1e-12, || format!("lr_at({step}) = {got:e}"))?;
    }
    Ok(format!("{}; lr anchors exact", counts.join(", ")))
}

const MICRO_LANGS: [&str; 4] = ["0000000", "0101101", "1100000", "0010000"];

fn read_csv(path: &std::path::Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn micro_scale() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut c = ExperimentConfig {
        out: dir.path().to_path_buf(),
        languages: LanguageSelection::List(MICRO_LANGS.iter().map(|s| s.to_string()).collect()),
        archs: vec![Arch::Rnn],
        regimes: vec![Mode::Curriculum, Mode::Original],
        seeds: vec![1, 2, 3],
        sizes: SplitSizes { train: 8_000, short: 1_000, medium: 1_000, long: 500, long_templates: 2_000, targeted: 500, judgment: 500 },
        ..Default::default()
    };
    c.training.warmup_updates = 40;

    let t0 = Instant::now();
    let g = cmd_gen(&c).map_err(|e| e.to_string())?;
    ensure(g.ok(), || format!("gen failed: {:?}", g.failed))?;
    let t = cmd_train(&c).map_err(|e| e.to_string())?;
    ensure(t.ok() && t.trained.len() == 24, || format!("train: {} trained, failed {:?}", t.trained.len(), t.failed))?;
    let e = cmd_eval(&c).map_err(|e| e.to_string())?;
    ensure(e.ok() && e.evaluated.len() == 24, || format!("eval: missing {:?}", e.missing))?;

    // (a) every run beats the unigram baseline on the short split
    let out = dir.path();
    let unigram: BTreeMap<String, f64> =
        read_csv(&out.join("results/unigram_none_short.csv")).into_iter().map(|r| (r[0].clone(), r[3].parse().unwrap())).collect();
    let mut margins = Vec::new();
    for regime in ["curriculum", "original"] {
        for r in read_csv(&out.join(format!("results/rnn_{regime}_short.csv"))) {
            let (ppl, base) = (r[3].parse::<f64>().unwrap(), unigram[&r[0]]);
            ensure(ppl < base, || format!("{} {regime} seed {}: short PPL {ppl:.2} vs unigram {base:.2}", r[0], r[2]))?;
            margins.push(ppl / base);
        }
    }
    ensure(margins.len() == 24, || format!("{} short-split rows", margins.len()))?;
    let worst = margins.iter().copied().fold(0.0, f64::max);

    // (b) curriculum runs use six stages and carry the step count
    let m = RunManifest::load(out).map_err(|e| e.to_string())?;
    ensure(m.count(RunStatus::Done) == 24, || "manifest incomplete".into())?;
    for entry in m.runs.values().filter(|e| e.regime == "curriculum") {
        let rel = entry.artifacts.keys().find(|k| k.ends_with(".report.json")).ok_or("no report")?;
        let report: TrainReport = serde_json::from_str(&fs::read_to_string(out.join(rel)).unwrap()).unwrap();
        ensure(report.stages.len() == 6, || format!("{}: {} stages", entry.id(), report.stages.len()))?;
        ensure(report.stages.windows(2).all(|w| w[1].start_step == w[0].end_step && w[0].end_step > w[0].start_step), || {
            format!("{}: step count not carried", entry.id())
        })?;
    }

    // (c) case judgments
    let mut acc: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for model in ["rnn_curriculum", "rnn_original", "unigram_none"] {
        for r in read_csv(&out.join(format!("results/{model}_judgment_case.csv"))) {
            acc.entry((r[0].clone(), model.to_string())).or_default().push(r[3].parse().unwrap());
        }
    }
    let mean = |k: (&str, &str)| {
        let v = &acc[&(k.0.to_string(), k.1.to_string())];
        v.iter().sum::<f64>() / v.len() as f64
    };
    let mut case = Vec::new();
    for id in MICRO_LANGS {
        let best = mean((id, "rnn_curriculum")).max(mean((id, "rnn_original")));
        ensure(best >= 70.0, || format!("{id}: case accuracy {best:.1}%"))?;
        case.push(format!("{id} {best:.1}% (unigram {:.1}%)", mean((id, "unigram_none"))));
    }

    // (d) aggregation output
    for rel in ["tables/ppl_by_base_order.csv", "tables/targeted_and_judgments.csv", "tables/correlation_short.csv"] {
        let text = fs::read_to_string(out.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        ensure(text.lines().count() > 1, || format!("{rel} is empty"))?;
    }
    for rel in ["plots/correlation_short.svg", "plots/ppl_rnn_curriculum_short.svg"] {
        let svg = fs::read_to_string(out.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        ensure(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), || format!("{rel} malformed"))?;
    }
    Ok(format!(
        "24 runs in {:.0}s; worst short PPL/unigram {worst:.3}; case accuracy {}",
        t0.elapsed().as_secs_f64(),
        case.join(", ")
    ))
}

fn metric_oracles() -> Outcome {
    let cases: [(&[f64], &[f64], f64); 4] = [
        (&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], 1.0),
        (&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0], -1.0),
        (&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0], 0.8),
        (&[0.54, 0.04, 0.23, 0.01, 0.12, 0.05], &[2.0, 7.0, 3.0, 6.0, 4.0, 5.0], f64::NAN),
    ];
    for (x, y, exact) in cases {
        let r = pearson(x, y).map_err(|e| e.to_string())?;
        let closed = common::pearson_closed_form(x, y);
        ensure((r - closed).abs() < 1e-9, || format!("pearson {r} vs closed form {closed}"))?;
        ensure(exact.is_nan() || (r - exact).abs() < 1e-9, || format!("pearson {r} vs {exact}"))?;
    }
    let freq = FreqTable::default();
    let values: BTreeMap<String, f64> =
        enumerate_configs().iter().map(|c| (c.id(), 10.0 - 5.0 * freq.get(c.base_order()))).collect();
    let v = PplVector { model: "m".into(), regime: "r".into(), split: "short".into(), values, seed_count: 1 };
    let ta = typological_alignment(&v, &freq, TaPoints::Configs).map_err(|e| e.to_string())?;
    ensure((ta.coefficient + 100.0).abs() < 1e-9 && ta.p_value < 0.05, || format!("TA {} p {}", ta.coefficient, ta.p_value))?;
    let csv = group_table_csv(&aggregate_tables(&[v], &freq), &freq);
    let header = csv.lines().next().unwrap();
    ensure(header == GROUP_HEADER && header.starts_with("model,regime,split,SOV,OSV,SVO,OVS,VSO,VOS,TA"), || {
        format!("header {header}")
    })?;
    let nl = csv.lines().last().unwrap();
    ensure(nl.starts_with("NL,,,0.54,0.04,0.23,0.01,0.12,0.05,"), || format!("NL row {nl}"))?;
    Ok(format!("TA {:.1} (p = {:.1e}); NL row verbatim", ta.coefficient, ta.p_value))
}

fn main() {
    let mut train_0101101 = None;
    let mut failures = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n} {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    };
    report(1, "grammar fidelity", &mut grammar_fidelity);
    report(2, "parser oracle equivalence", &mut parser_oracle);
    report(3, "configuration space", &mut configuration_space);
    report(4, "corpus invariants", &mut || corpus_invariants(&mut train_0101101));
    report(5, "curriculum arithmetic", &mut || curriculum_arithmetic(train_0101101.as_ref()));
    report(6, "gradient correctness", &mut gradient_correctness);
    report(7, "hyperparameter fidelity", &mut hyperparameter_fidelity);
    report(8, "micro-scale end-to-end", &mut micro_scale);
    report(9, "metric oracles", &mut metric_oracles);
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria passed");
}

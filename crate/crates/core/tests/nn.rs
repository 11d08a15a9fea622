mod common;

use common::naive_lm::naive_token_nll;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordorder_core::corpus::{build_splits, SplitSizes};
use wordorder_core::curriculum::{carve_validation, plan_length_curriculum, plan_original, EpochPolicy};
use wordorder_core::language::{Language, VocabSpec, WordOrderConfig};
use wordorder_core::nn::*;

fn random_seqs(rng: &mut ChaCha8Rng, n: usize, len: usize, vocab: usize) -> Vec<Vec<u32>> {
    (0..n).map(|_| (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect()).collect()
}

fn refs(v: &[Vec<u32>]) -> Vec<&[u32]> {
    v.iter().map(Vec::as_slice).collect()
}

#[test]
fn finite_differences_agree_for_every_architecture() {
    for arch in Arch::ALL {
        let r = grad_check(&toy_spec(arch), 11, 20).unwrap();
        assert_eq!(r.probes.len(), 20);
        assert!(r.max_rel_error < 1e-3, "{arch}: {:?}", r);
    }
    let two_heads = ModelSpec { heads: 2, ..toy_spec(Arch::Transformer) };
    assert!(grad_check(&two_heads, 3, 20).unwrap().max_rel_error < 1e-3);
    let untied = ModelSpec { tied: false, ..toy_spec(Arch::Lstm) };
    assert!(grad_check(&untied, 5, 20).unwrap().max_rel_error < 1e-3);
}

#[test]
fn dropout_gradients_match_finite_differences_under_a_fixed_mask() {
    let spec = ModelSpec { heads: 2, dropout: 0.3, attn_dropout: 0.2, ..toy_spec(Arch::Transformer) };
    let mut model = LanguageModel::new(spec.clone(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = random_seqs(&mut rng, 2, spec.window_len, spec.vocab_size);
    let mask_rng = ChaCha8Rng::seed_from_u64(99);
    let (_, grads) = model.window_loss_grad(&refs(&w), Some(&mut mask_rng.clone())).unwrap();
    for _ in 0..20 {
        let p = rng.gen_range(0..model.params.mats.len());
        let i = rng.gen_range(0..model.params.mats[p].len());
        let orig = model.params.mats[p].data[i];
        model.params.mats[p].data[i] = orig + 1e-5;
        let up = model.window_loss(&refs(&w), Some(&mut mask_rng.clone())).unwrap();
        model.params.mats[p].data[i] = orig - 1e-5;
        let down = model.window_loss(&refs(&w), Some(&mut mask_rng.clone())).unwrap();
        model.params.mats[p].data[i] = orig;
        let num = (up - down) / 2e-5;
        let a = grads[p].data[i];
        assert!((a - num).abs() / a.abs().max(num.abs()).max(1e-6) < 1e-3, "{}: {a} vs {num}", model.params.names[p]);
    }
}

#[test]
fn forward_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let specs = [
        toy_spec(Arch::Rnn),
        toy_spec(Arch::Lstm),
        ModelSpec { tied: false, ..toy_spec(Arch::Lstm) },
        toy_spec(Arch::Transformer),
        ModelSpec { heads: 4, ..toy_spec(Arch::Transformer) },
    ];
    for spec in specs {
        let model = LanguageModel::new(spec.clone(), 21).unwrap();
        let inputs = random_seqs(&mut rng, 3, 6, spec.vocab_size);
        let targets = random_seqs(&mut rng, 3, 6, spec.vocab_size);
        let got = model.token_nll(&refs(&inputs), &refs(&targets)).unwrap();
        for b in 0..3 {
            let want = naive_token_nll(&model, &inputs[b], &targets[b]);
            for (g, w) in got[b].iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "{:?}: {g} vs {w}", spec.arch);
            }
        }
    }
}

#[test]
fn parameter_counts_match_the_reported_sizes() {
    let within = |n: usize, target: f64| (n as f64 - target).abs() / target <= 0.05;
    let t = ModelSpec::default_for(Arch::Transformer, 500);
    let l = ModelSpec::default_for(Arch::Lstm, 500);
    let r = ModelSpec::default_for(Arch::Rnn, 500);
    assert!(within(t.param_count(), 462_000.0), "{}", t.param_count());
    assert!(within(l.param_count(), 3_547_000.0), "{}", l.param_count());
    assert!(within(r.param_count(), 49_000.0), "{}", r.param_count());
    // embeddings 500*64, two layers of (64*64 + 64*64 + 64), output bias 500
    assert_eq!(r.param_count(), 32_000 + 2 * 8_256 + 500);
    for spec in [t, l, r] {
        assert_eq!(init_params(&spec, 0).unwrap().count(), spec.param_count());
    }
}

#[test]
fn defaults_follow_the_hyperparameter_table() {
    let t = ModelSpec::default_for(Arch::Transformer, 500);
    assert_eq!((t.embed_dim, t.hidden_dim, t.layers, t.heads), (128, 512, 2, 2));
    assert_eq!((t.dropout, t.attn_dropout, t.tied), (0.3, 0.1, true));
    let l = ModelSpec::default_for(Arch::Lstm, 500);
    assert_eq!((l.embed_dim, l.hidden_dim, l.layers, l.dropout), (128, 512, 2, 0.1));
    let r = ModelSpec::default_for(Arch::Rnn, 500);
    assert_eq!((r.embed_dim, r.hidden_dim, r.layers, r.dropout), (64, 64, 2, 0.1));
    assert_eq!(r.window_len * TrainConfig::default().batch_windows, 2_048);
}

#[test]
fn initialisation_is_deterministic() {
    let spec = toy_spec(Arch::Transformer);
    assert_eq!(init_params(&spec, 5).unwrap(), init_params(&spec, 5).unwrap());
    assert_ne!(init_params(&spec, 5).unwrap(), init_params(&spec, 6).unwrap());
    let bad = ModelSpec { heads: 3, ..spec };
    assert!(matches!(init_params(&bad, 0), Err(NnError::BadSpec(_))));
}

#[test]
fn zeroed_output_layer_gives_uniform_predictions() {
    for arch in Arch::ALL {
        let mut model = LanguageModel::new(ModelSpec::default_for(arch, 500), 1).unwrap();
        model.zero_output_layer();
        let w: Vec<u32> = (0..128).map(|t| (t * 37 % 500) as u32).collect();
        let loss = model.window_loss(&[&w], None).unwrap();
        assert!((loss - 500f64.ln()).abs() < 1e-9 * 500f64.ln(), "{arch}: {loss}");
    }
}

#[test]
fn a_dominant_logit_drives_its_nll_to_zero() {
    let mut model = LanguageModel::new(toy_spec(Arch::Rnn), 1).unwrap();
    let i = model.params.index("out.b").unwrap();
    model.params.mats[i].data[4] = 1e3;
    let nll = model.token_nll(&[&[1, 2, 3]], &[&[4, 4, 5]]).unwrap();
    assert!(nll[0][0] < 1e-12 && nll[0][1] < 1e-12);
    assert!(nll[0][2] > 900.0);
}

#[test]
fn out_of_range_and_malformed_inputs_are_rejected() {
    let model = LanguageModel::new(toy_spec(Arch::Rnn), 1).unwrap();
    assert!(matches!(model.window_loss(&[&[1, 13, 2]], None), Err(NnError::TokenOutOfRange { id: 13, .. })));
    assert!(matches!(model.window_loss(&[&[1, 2, 3], &[1, 2]], None), Err(NnError::Ragged)));
    let long = vec![1u32; 20];
    assert!(matches!(model.window_loss(&[&long], None), Err(NnError::TooLong { .. })));
}

#[test]
fn batched_sentence_scores_equal_single_sentence_scores() {
    let model = LanguageModel::new(toy_spec(Arch::Lstm), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sents: Vec<Vec<u32>> = (0..9).map(|i| random_seqs(&mut rng, 1, 2 + i % 4, 12).remove(0)).collect();
    let all = model.token_nlls(&sents, 12).unwrap();
    for (s, nll) in sents.iter().zip(&all) {
        assert_eq!(nll.len(), s.len() + 1);
        let one = model.token_nlls(std::slice::from_ref(s), 12).unwrap();
        assert_eq!(&one[0], nll);
        let mut input = vec![12];
        input.extend(s);
        let mut target = s.clone();
        target.push(12);
        let oracle = naive_token_nll(&model, &input, &target);
        for (a, b) in nll.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn unigram_perplexity_matches_closed_form() {
    // token 0 twice, token 1 once, eos (2) twice, plus one pseudo-count each over vocabulary 4
    let sents = vec![vec![0, 0], vec![1]];
    let uni = UnigramModel::fit(&sents, 2, 4).unwrap();
    let p = [3.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 1.0 / 9.0];
    for (lp, q) in uni.log_probs.iter().zip(p) {
        assert!((lp - f64::ln(q)).abs() < 1e-12);
    }
    let want = (-(2.0 * p[0].ln() + p[1].ln() + 2.0 * p[2].ln()) / 5.0).exp();
    assert!((perplexity(&uni, &sents, 2).unwrap() - want).abs() < 1e-12);
}

#[test]
fn checkpoints_round_trip_exactly() {
    let model = LanguageModel::new(toy_spec(Arch::Transformer), 9).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model, serde_json::json!({"seed": 9})).unwrap();
    assert_eq!(&buf[..4], MAGIC);
    let (back, meta) = read_checkpoint(&mut buf.as_slice()).unwrap();
    assert_eq!(back, model);
    assert_eq!(meta["seed"], 9);
    let mut corrupt = buf.clone();
    corrupt[0] = b'X';
    assert!(matches!(read_checkpoint(&mut corrupt.as_slice()), Err(NnError::Checkpoint(_))));
    assert!(matches!(read_checkpoint(&mut &buf[..buf.len() - 3]), Err(NnError::Checkpoint(_))));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&path, &model, serde_json::Value::Null).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap().0, model);
}

#[test]
fn schedule_reproduces_anchor_points() {
    let s = Schedule::default();
    assert_eq!(lr_at(&s, 0), 1e-7);
    assert!((lr_at(&s, 400) / 5e-4 - 1.0).abs() < 1e-12);
    assert!((lr_at(&s, 1600) / 2.5e-4 - 1.0).abs() < 1e-12);
}

fn toy_language_data(n_train: usize) -> (Language, Vec<Vec<u32>>, Vec<Vec<u32>>, wordorder_core::corpus::CorpusSplit) {
    let lang = Language::build("0101101".parse::<WordOrderConfig>().unwrap(), &VocabSpec::default()).unwrap();
    let sizes = SplitSizes { train: n_train, short: 200, medium: 10, long: 10, long_templates: 20, targeted: 0, judgment: 0 };
    let splits = build_splits(&lang, &sizes, 17).unwrap();
    let (rest, val) = carve_validation(&splits.train, 0.05, 17);
    let enc = |s: &wordorder_core::corpus::CorpusSplit| -> Vec<Vec<u32>> {
        s.records.iter().map(|r| lang.vocabulary.encode(&r.tokens).unwrap()).collect()
    };
    let (train, val) = (enc(&rest), enc(&val));
    (lang, train, val, rest)
}

#[test]
fn curriculum_training_carries_optimizer_state_and_beats_unigram() {
    let (lang, train_enc, val_enc, rest) = toy_language_data(2_000);
    let eos = lang.vocabulary.eos();
    let plan = plan_length_curriculum(&rest, rest.len(), 3).unwrap();
    let spec = ModelSpec { embed_dim: 64, hidden_dim: 128, window_len: 32, dropout: 0.1, ..ModelSpec::default_for(Arch::Transformer, 500) };
    let cfg = TrainConfig {
        batch_windows: 8,
        schedule: Schedule { warmup_updates: 20, warmup_init_lr: 1e-7, peak_lr: 1e-3 },
        seed: 3,
        ..Default::default()
    };
    let mut model = LanguageModel::new(spec, 3).unwrap();
    let mut seen = 0;
    let report = train(&mut model, &plan, &train_enc, &val_enc, eos, &cfg, |_| seen += 1).unwrap();
    assert_eq!(seen, report.epochs.len());
    assert_eq!(report.stages.len(), 6);
    assert_eq!(report.stages.iter().filter(|s| s.policy == EpochPolicy::Fixed { epochs: 2 }).count(), 5);
    assert!(report.stages[..5].iter().all(|s| s.epochs == 2));
    assert_eq!(report.stages[0].start_step, 0);
    for w in report.stages.windows(2) {
        assert_eq!(w[1].start_step, w[0].end_step);
        assert!(w[1].end_step > w[1].start_step);
    }
    assert!(report.epochs.windows(2).all(|w| w[1].step > w[0].step && w[1].epoch == w[0].epoch + 1));
    let csv = report.to_csv();
    assert!(csv.starts_with("epoch,stage,train_ppl,val_ppl,lr,step\n"));
    assert_eq!(csv.lines().count(), report.epochs.len() + 1);

    let unigram = UnigramModel::fit(&train_enc, eos, 500).unwrap();
    let uni_ppl = perplexity(&unigram, &val_enc, eos).unwrap();
    let lm_ppl = perplexity(&model, &val_enc, eos).unwrap();
    assert!((lm_ppl - report.best_val_ppl).abs() < 1e-9);
    assert!(lm_ppl < uni_ppl, "lm {lm_ppl} vs unigram {uni_ppl}");
}

#[test]
fn training_is_deterministic_and_divergence_is_reported() {
    let (lang, train_enc, val_enc, rest) = toy_language_data(600);
    let eos = lang.vocabulary.eos();
    let plan = plan_original(&rest, 1);
    let spec = ModelSpec { window_len: 32, ..ModelSpec::default_for(Arch::Rnn, 500) };
    let cfg = TrainConfig { batch_windows: 8, seed: 1, ..Default::default() };
    let run = || {
        let mut m = LanguageModel::new(spec.clone(), 1).unwrap();
        let r = train(&mut m, &plan, &train_enc, &val_enc, eos, &cfg, |_| {}).unwrap();
        (m, r)
    };
    let (m1, r1) = run();
    let (m2, r2) = run();
    assert_eq!(r1, r2);
    assert_eq!(m1, m2);
    assert!(r1.epochs.len() <= 10);
    let mut broken = LanguageModel::new(spec.clone(), 1).unwrap();
    broken.params.mats[0].data[0] = f64::NAN;
    let err = train(&mut broken, &plan, &train_enc, &val_enc, eos, &cfg, |_| {}).unwrap_err();
    assert!(matches!(err, NnError::Diverged { stage: 1, epoch: 1, .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn schedule_is_continuous_and_decays_after_warmup(step in 400u64..1_000_000) {
        let s = Schedule::default();
        prop_assert!(s.lr_at(step + 1) <= s.lr_at(step));
        prop_assert!((s.lr_at(399) - s.lr_at(400)).abs() < 2e-6);
    }

    #[test]
    fn predictions_never_see_the_future(arch_ix in 0usize..3, seed in any::<u64>(), cut in 1usize..6) {
        let spec = toy_spec(Arch::ALL[arch_ix]);
        let model = LanguageModel::new(spec.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_seqs(&mut rng, 1, 6, spec.vocab_size).remove(0);
        let mut b = a.clone();
        for x in &mut b[cut..] {
            *x = (*x + 1) % spec.vocab_size as u32;
        }
        let ta = model.token_nll(&[&a], &[&a]).unwrap();
        let tb = model.token_nll(&[&b], &[&a]).unwrap();
        prop_assert_eq!(&ta[0][..cut], &tb[0][..cut]);
    }
}

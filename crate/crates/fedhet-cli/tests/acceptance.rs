//! Acceptance suite. Each test prints one pass/fail line; run with
//! `cargo test -p fedhet-cli --test acceptance -- --nocapture`.

use std::net::TcpListener;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::{Duration, Instant};

use fedhet::data::{
    sample_shard, synth_dataset, LabelDist, LabeledDataset, ShardSpec, SizeClass,
};
use fedhet::experiment::{build_shards, run_experiment, EvalMode, RoundRecord, RunConfig};
use fedhet::fed::{
    aggregate_normalized, run_algorithm_round, AlgorithmConfig, AlgorithmKind, ClientUpdate,
    GlobalModel,
};
use fedhet::nn::{
    cross_entropy, forward, loss_and_grad, param_l2_distance, ModelSpec, OptimizerKind, ParamSet,
    Tensor,
};
use fedhet::rng::{init_stream, shard_seed};
use fedhet::NUM_CLASSES;
use fedhet_cli::config::{resolve_file, ExperimentFile, Overrides};
use fedhet_cli::output::render_csv;

fn criterion(number: u32, name: &str, bound: Duration, body: impl FnOnce() + UnwindSafe) {
    let started = Instant::now();
    let outcome = catch_unwind(body);
    let elapsed = started.elapsed();
    match outcome {
        Ok(()) => println!(
            "acceptance {number:02} {name}: PASS ({:.1}s)",
            elapsed.as_secs_f64()
        ),
        Err(e) => {
            println!(
                "acceptance {number:02} {name}: FAIL ({:.1}s)",
                elapsed.as_secs_f64()
            );
            resume_unwind(e);
        }
    }
    assert!(
        elapsed <= bound,
        "criterion {number} took {:.1}s, bound {:.0}s",
        elapsed.as_secs_f64(),
        bound.as_secs_f64()
    );
}

fn small_run_config(kind: AlgorithmKind, mu: f32, clients: usize, seed: u64) -> RunConfig {
    RunConfig {
        shard_specs: (0..clients)
            .map(|i| ShardSpec {
                label_dist: LabelDist::Even,
                size_class: SizeClass::More,
                seed: shard_seed(seed, i as u64),
            })
            .collect(),
        algorithm: AlgorithmConfig {
            kind,
            mu,
            local_epochs: 1,
            batch_size: 32,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
        },
        model: ModelSpec::mlp(vec![32]),
        max_rounds: 5,
        target_accuracy: None,
        experiment_seed: seed,
        scale: 0.1,
        eval_mode: EvalMode::Global,
    }
}

fn small_source() -> LabeledDataset {
    synth_dataset(NUM_CLASSES, 16, 0.4, 900).unwrap()
}

fn assert_records_bit_identical(a: &[RoundRecord], b: &[RoundRecord]) {
    assert_eq!(a.len(), b.len(), "record counts differ");
    for (ra, rb) in a.iter().zip(b) {
        assert_eq!(ra.digest(), rb.digest(), "round {} digests differ", ra.round);
        assert_eq!(ra.round, rb.round);
        assert_eq!(ra.client_accuracy, rb.client_accuracy);
        assert_eq!(ra.client_train_loss, rb.client_train_loss);
        assert_eq!(ra.param_hash, rb.param_hash);
        assert_eq!(ra.stop, rb.stop);
    }
}

#[test]
fn c01_reduction_suite_bit_exact() {
    criterion(1, "reduction suite (exact)", Duration::from_secs(60), || {
        let src = small_source();
        let avg = run_experiment(&src, &small_run_config(AlgorithmKind::FedAvg, 0.0, 4, 4242))
            .unwrap();
        let prox0 = run_experiment(&src, &small_run_config(AlgorithmKind::FedProx, 0.0, 4, 4242))
            .unwrap();
        assert_records_bit_identical(&avg, &prox0);

        let nova = run_experiment(&src, &small_run_config(AlgorithmKind::FedNova, 0.0, 4, 4242))
            .unwrap();
        let mix0 = run_experiment(&src, &small_run_config(AlgorithmKind::FedMix, 0.0, 4, 4242))
            .unwrap();
        assert_records_bit_identical(&nova, &mix0);
    });
}

#[test]
fn c02_normalized_aggregation_degeneracy() {
    criterion(
        2,
        "equal-n equal-tau degeneracy",
        Duration::from_secs(60),
        || {
            let src = small_source();
            // Same size class, epochs, and batch size: every client's n and
            // tau are equal, so normalized aggregation must degenerate.
            let pairs = [
                (AlgorithmKind::FedNova, AlgorithmKind::FedAvg, 0.0f32),
                (AlgorithmKind::FedMix, AlgorithmKind::FedProx, 0.01f32),
            ];
            for (normalized, weighted, mu) in pairs {
                let cfg_a = small_run_config(normalized, mu, 4, 7001);
                let cfg_b = small_run_config(weighted, mu, 4, 7001);
                let shards = build_shards(&src, &cfg_a).unwrap();
                let mut ga = GlobalModel::new(cfg_a.model.init_params(&mut init_stream(7001)));
                let mut gb = ga.clone();
                for round in 1..=5 {
                    let (na, _) = run_algorithm_round(
                        &cfg_a.model,
                        &ga,
                        &shards,
                        &cfg_a.algorithm,
                        cfg_a.experiment_seed,
                    )
                    .unwrap();
                    let (nb, _) = run_algorithm_round(
                        &cfg_b.model,
                        &gb,
                        &shards,
                        &cfg_b.algorithm,
                        cfg_b.experiment_seed,
                    )
                    .unwrap();
                    let dist = param_l2_distance(&na.params, &nb.params).unwrap();
                    let norm = param_l2_distance(&na.params, &na.params.zeros_like()).unwrap();
                    assert!(
                        dist <= 1e-6 * norm,
                        "{normalized:?} vs {weighted:?} round {round}: rel {}",
                        dist / norm
                    );
                    ga = na;
                    gb = nb;
                }
            }
        },
    );
}

fn gradcheck(model: ModelSpec, batch_size: usize, seed: u64) {
    const H: f64 = 1e-5;
    let params = model.init_params::<f64>(&mut init_stream(seed));
    let ds = synth_dataset(NUM_CLASSES, 1, 0.5, seed).unwrap();
    let idx: Vec<usize> = (0..batch_size).collect();
    let batch: Tensor<f64> = ds.gather_batch(&idx);
    let labels = ds.gather_labels(&idx);

    let loss_at = |flat: &[f64]| -> f64 {
        let p = model.params_from_flat(flat).unwrap();
        let logits = forward(&model, &p, &batch).unwrap();
        cross_entropy(&logits, &labels).unwrap().0
    };

    let (_, grads) = loss_and_grad(&model, &params, &batch, &labels).unwrap();
    let analytic = grads.flatten();
    let mut flat = params.flatten();

    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xacce);
    let eligible: Vec<usize> = (0..flat.len())
        .filter(|&i| analytic[i].abs() >= 1e-4)
        .collect();
    assert!(eligible.len() >= 100);
    for _ in 0..100 {
        let coord = eligible[rng.random_range(0..eligible.len())];
        let saved = flat[coord];
        flat[coord] = saved + H;
        let up = loss_at(&flat);
        flat[coord] = saved - H;
        let down = loss_at(&flat);
        flat[coord] = saved;
        let numeric = (up - down) / (2.0 * H);
        let rel = (analytic[coord] - numeric).abs() / analytic[coord].abs().max(numeric.abs());
        assert!(
            rel <= 1e-6,
            "{model:?} coord {coord}: analytic {} vs numeric {numeric} (rel {rel:e})",
            analytic[coord]
        );
    }
}

#[test]
fn c03_gradient_verification() {
    criterion(
        3,
        "backward vs central differences",
        Duration::from_secs(120),
        || {
            gradcheck(ModelSpec::mlp(vec![32, 16]), 4, 31001);
            gradcheck(ModelSpec::cnn(), 2, 31002);
        },
    );
}

#[test]
fn c04_partition_correctness() {
    criterion(4, "partition correctness", Duration::from_secs(10), || {
        // Oracle: head probability by direct summation, head count by an
        // independent largest-remainder evaluation.
        let denom: f64 = (1..=NUM_CLASSES).map(|j| (j as f64).powf(-2.0)).sum();
        let probs: Vec<f64> = (1..=NUM_CLASSES)
            .map(|k| (k as f64).powf(-2.0) / denom)
            .collect();
        assert!((probs[0] - 0.6139).abs() < 5e-4);
        let oracle_counts = |total: usize| -> Vec<usize> {
            let mut counts: Vec<usize> = probs
                .iter()
                .map(|p| (p * total as f64).floor() as usize)
                .collect();
            let assigned: usize = counts.iter().sum();
            let mut rema: Vec<(usize, f64)> = probs
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p * total as f64 - (p * total as f64).floor()))
                .collect();
            rema.sort_by(|(ia, ra), (ib, rb)| rb.partial_cmp(ra).unwrap().then(ia.cmp(ib)));
            for (i, _) in rema.into_iter().take(total - assigned) {
                counts[i] += 1;
            }
            counts
        };
        let expected_head = oracle_counts(600)[0];

        let mut source_counts = vec![60usize; NUM_CLASSES];
        source_counts[0] = 460;
        source_counts[1] = 130;
        let total: usize = source_counts.iter().sum();
        let mut images = Vec::with_capacity(total * fedhet::IMAGE_PIXELS);
        let mut labels = Vec::with_capacity(total);
        for (label, &count) in source_counts.iter().enumerate() {
            for _ in 0..count {
                images.extend(std::iter::repeat(0.5f32).take(fedhet::IMAGE_PIXELS));
                labels.push(label);
            }
        }
        let source = LabeledDataset::new(images, labels).unwrap();

        let zipf = ShardSpec {
            label_dist: LabelDist::Zipf {
                a: 2.0,
                rank_perm: (0..NUM_CLASSES).collect(),
            },
            size_class: SizeClass::More,
            seed: 12345,
        };
        let shard = sample_shard(&source, &zipf, 0.1).unwrap();
        let hist = shard.train.label_histogram();
        assert_eq!(hist.iter().sum::<usize>(), 600);
        assert_eq!(hist[0], expected_head, "zipf head count off the oracle");

        let even = ShardSpec {
            label_dist: LabelDist::Even,
            size_class: SizeClass::More,
            seed: 54321,
        };
        let shard = sample_shard(&source, &even, 0.1).unwrap();
        let hist = shard.train.label_histogram();
        assert_eq!(hist.iter().sum::<usize>(), 600);
        let (lo, hi) = (hist.iter().min().unwrap(), hist.iter().max().unwrap());
        assert!(hi - lo <= 1, "even counts spread: {lo}..{hi}");
    });
}

fn run_toml(text: &str) -> Vec<RoundRecord> {
    let file: ExperimentFile = toml::from_str(text).unwrap();
    let exp = resolve_file(file).unwrap();
    run_experiment(&exp.source, &exp.run).unwrap()
}

#[test]
fn c05_zipf_client_outpaces_even_clients() {
    criterion(
        5,
        "1 zipf-more vs 9 even-more gap",
        Duration::from_secs(600),
        || {
            let records = run_toml(
                r#"
[dataset]
source = "synth"
per_label = 450
noise = 0.75

[scenario]
clients = "1xzipf-more,9xeven-more"

[algorithm]
kind = "fedavg"
optimizer = "adam"
lr = 0.001
batch_size = 32
local_epochs = 2

[model]
kind = "mlp"
hidden = [64]

[run]
rounds = 15
seed = 42
scale = 0.1
eval = "local"
"#,
            );
            let last = records.last().unwrap();
            let zipf = last.client_accuracy[0];
            let even_mean: f64 =
                last.client_accuracy[1..].iter().sum::<f64>() / (last.client_accuracy.len() - 1) as f64;
            assert!(
                zipf - even_mean >= 0.15,
                "zipf {zipf:.3} vs even mean {even_mean:.3}: gap {:.3} < 0.15",
                zipf - even_mean
            );
        },
    );
}

#[test]
fn c06_even_less_client_catches_up() {
    criterion(
        6,
        "1 even-less vs 9 even-more catch-up",
        Duration::from_secs(600),
        || {
            let records = run_toml(
                r#"
[dataset]
source = "synth"
per_label = 100
noise = 0.35

[scenario]
clients = "1xeven-less,9xeven-more"

[algorithm]
kind = "fedavg"
optimizer = "adam"
lr = 0.001
batch_size = 32
local_epochs = 2

[model]
kind = "mlp"
hidden = [64]

[run]
rounds = 15
seed = 42
scale = 0.5
eval = "local"
"#,
            );
            let first = &records[0];
            let less_first = first.client_accuracy[0];
            for (i, &acc) in first.client_accuracy[1..].iter().enumerate() {
                assert!(
                    less_first < acc,
                    "round 1: even client {} ({acc:.3}) not above the less client ({less_first:.3})",
                    i + 1
                );
            }
            let last = records.last().unwrap();
            let less = last.client_accuracy[0];
            let even_mean: f64 =
                last.client_accuracy[1..].iter().sum::<f64>() / (last.client_accuracy.len() - 1) as f64;
            assert!(
                (less - even_mean).abs() <= 0.05,
                "final: less {less:.3} vs even mean {even_mean:.3}"
            );
        },
    );
}

#[test]
fn c07_homogeneous_baseline_band() {
    criterion(
        7,
        "10 even-more accuracy band",
        Duration::from_secs(600),
        || {
            let records = run_toml(
                r#"
[dataset]
source = "synth"
per_label = 100
noise = 0.75

[scenario]
clients = "10xeven-more"

[algorithm]
kind = "fedavg"
optimizer = "adam"
lr = 0.001
batch_size = 32
local_epochs = 1

[model]
kind = "mlp"
hidden = [64]

[run]
rounds = 15
seed = 42
scale = 0.5
eval = "global"
"#,
            );
            let last = records.last().unwrap();
            let band = last.max_accuracy() - last.min_accuracy();
            assert!(
                band <= 0.1,
                "final accuracies span {band:.3} (min {:.3}, max {:.3})",
                last.min_accuracy(),
                last.max_accuracy()
            );
        },
    );
}

#[test]
fn c08_wire_mode_equivalence() {
    criterion(8, "wire vs in-process records", Duration::from_secs(60), || {
        use fedhet::wire::{client_loop, serve_on, ServeOptions};
        let mut cfg = small_run_config(AlgorithmKind::FedAvg, 0.0, 2, 808);
        cfg.max_rounds = 3;
        let src = small_source();
        let local = run_experiment(&src, &cfg).unwrap();

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let shards = build_shards(&src, &cfg).unwrap();
        let mut handles = Vec::new();
        for (id, shard) in shards.into_iter().enumerate() {
            let addr = addr.clone();
            let model = cfg.model.clone();
            handles.push(std::thread::spawn(move || {
                client_loop(&addr, id, &model, &shard, Duration::from_secs(10))
            }));
        }
        let wire = serve_on(
            &src,
            &cfg,
            listener,
            &ServeOptions {
                connect_timeout: Duration::from_secs(10),
            },
        )
        .unwrap();
        for h in handles {
            h.join().unwrap().unwrap();
        }
        assert_records_bit_identical(&local, &wire);
    });
}

#[test]
fn c09_csv_determinism() {
    criterion(9, "byte-identical CSV on replay", Duration::from_secs(120), || {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("exp.toml");
        std::fs::write(
            &config_path,
            r#"
[dataset]
source = "synth"
per_label = 24
noise = 0.6

[scenario]
clients = "1xzipf-less,3xeven-less"

[algorithm]
kind = "fedprox"
mu = 0.01
optimizer = "sgd"
lr = 0.05
batch_size = 16
local_epochs = 1

[model]
kind = "mlp"
hidden = [32]

[run]
rounds = 3
seed = 11
scale = 0.1
eval = "global"
"#,
        )
        .unwrap();

        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        for out in [&out_a, &out_b] {
            fedhet_cli::commands::cmd_run(
                &config_path,
                &Overrides {
                    scale: None,
                    seed: None,
                    out: Some(out.clone()),
                },
                false,
                None,
                30,
            )
            .unwrap();
        }
        let a = std::fs::read(out_a.join("metrics.csv")).unwrap();
        let b = std::fs::read(out_b.join("metrics.csv")).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "metrics.csv bytes differ between identical runs");

        // The library-level renderer agrees with what landed on disk.
        let file: ExperimentFile = toml::from_str(&std::fs::read_to_string(&config_path).unwrap()).unwrap();
        let exp = resolve_file(file).unwrap();
        let records = run_experiment(&exp.source, &exp.run).unwrap();
        assert_eq!(render_csv(&records).into_bytes(), a);
    });
}

#[test]
fn c10_fednova_scalar_oracle() {
    criterion(10, "two-client FedNova hand value", Duration::from_secs(10), || {
        let global = ParamSet::new(vec![("w".into(), Tensor::scalar(0.0f32))]).unwrap();
        let update = |id: usize, tau: usize| ClientUpdate {
            client_id: id,
            delta: ParamSet::new(vec![("w".into(), Tensor::scalar(-4.0f32))]).unwrap(),
            tau,
            n: 8,
        };
        let out = aggregate_normalized(&global, &[update(0, 2), update(1, 4)]).unwrap();
        assert_eq!(out.flatten()[0], -4.5);
    });
}

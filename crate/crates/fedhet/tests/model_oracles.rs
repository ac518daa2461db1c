//! Forward-pass and accuracy checks against independent straight-line
//! reference implementations (no im2col, no shared helpers).

use fedhet::data::{synth_dataset, LabeledDataset};
use fedhet::nn::{backward, evaluate_accuracy, forward, ModelSpec, ParamSet, Tensor};
use fedhet::rng::init_stream;
use fedhet::{IMAGE_PIXELS, IMAGE_SIDE, NUM_CLASSES};

fn fixed_batch<T: fedhet::nn::Scalar>(n: usize, seed: u64) -> Tensor<T> {
    let ds = synth_dataset(NUM_CLASSES, 1, 0.5, seed).unwrap();
    ds.gather_batch(&(0..n).collect::<Vec<_>>())
}

/// Straight-line MLP forward: nested loops, nothing shared with the crate.
fn reference_mlp(params: &ParamSet<f64>, batch: &[f64], b: usize, hidden: &[usize]) -> Vec<f64> {
    let mut dims = vec![IMAGE_PIXELS];
    dims.extend_from_slice(hidden);
    dims.push(NUM_CLASSES);
    let mut x: Vec<f64> = batch.to_vec();
    for layer in 0..dims.len() - 1 {
        let (ins, outs) = (dims[layer], dims[layer + 1]);
        let w = params.get(&format!("fc{layer}.w")).unwrap().data();
        let bias = params.get(&format!("fc{layer}.b")).unwrap().data();
        let mut y = vec![0.0; b * outs];
        for bi in 0..b {
            for o in 0..outs {
                let mut acc = bias[o];
                for i in 0..ins {
                    acc += x[bi * ins + i] * w[i * outs + o];
                }
                y[bi * outs + o] = if layer + 1 < dims.len() - 1 {
                    acc.max(0.0)
                } else {
                    acc
                };
            }
        }
        x = y;
    }
    x
}

/// Straight-line CNN forward with explicit convolution loops.
fn reference_cnn(params: &ParamSet<f64>, batch: &[f64], b: usize) -> Vec<f64> {
    fn conv(
        input: &[f64],
        b: usize,
        in_c: usize,
        side: usize,
        w: &[f64],
        bias: &[f64],
        out_c: usize,
    ) -> Vec<f64> {
        let k = 5usize;
        let pad = 2isize;
        let mut out = vec![0.0; b * out_c * side * side];
        for bi in 0..b {
            for oc in 0..out_c {
                for oh in 0..side {
                    for ow in 0..side {
                        let mut acc = bias[oc];
                        for ci in 0..in_c {
                            for kh in 0..k {
                                for kw in 0..k {
                                    let ih = oh as isize + kh as isize - pad;
                                    let iw = ow as isize + kw as isize - pad;
                                    if ih < 0 || iw < 0 || ih >= side as isize || iw >= side as isize
                                    {
                                        continue;
                                    }
                                    let iv = input
                                        [((bi * in_c + ci) * side + ih as usize) * side + iw as usize];
                                    let wv = w[((oc * in_c + ci) * k + kh) * k + kw];
                                    acc += iv * wv;
                                }
                            }
                        }
                        out[((bi * out_c + oc) * side + oh) * side + ow] = acc.max(0.0);
                    }
                }
            }
        }
        out
    }

    fn pool(input: &[f64], planes: usize, side: usize) -> Vec<f64> {
        let half = side / 2;
        let mut out = vec![0.0; planes * half * half];
        for p in 0..planes {
            for y in 0..half {
                for x in 0..half {
                    let mut best = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let v = input[p * side * side + (2 * y + dy) * side + (2 * x + dx)];
                            if v > best {
                                best = v;
                            }
                        }
                    }
                    out[p * half * half + y * half + x] = best;
                }
            }
        }
        out
    }

    let w1 = params.get("conv1.w").unwrap().data();
    let b1 = params.get("conv1.b").unwrap().data();
    let w2 = params.get("conv2.w").unwrap().data();
    let b2 = params.get("conv2.b").unwrap().data();
    let fw = params.get("fc.w").unwrap().data();
    let fb = params.get("fc.b").unwrap().data();

    let c1 = conv(batch, b, 1, IMAGE_SIDE, w1, b1, 16);
    let p1 = pool(&c1, b * 16, IMAGE_SIDE);
    let c2 = conv(&p1, b, 16, IMAGE_SIDE / 2, w2, b2, 32);
    let p2 = pool(&c2, b * 32, IMAGE_SIDE / 2);

    let fc_in = 32 * 7 * 7;
    let mut logits = vec![0.0; b * NUM_CLASSES];
    for bi in 0..b {
        for o in 0..NUM_CLASSES {
            let mut acc = fb[o];
            for i in 0..fc_in {
                acc += p2[bi * fc_in + i] * fw[i * NUM_CLASSES + o];
            }
            logits[bi * NUM_CLASSES + o] = acc;
        }
    }
    logits
}

#[test]
fn mlp_forward_matches_reference() {
    let model = ModelSpec::mlp(vec![32, 24]);
    let params: ParamSet<f64> = model.init_params(&mut init_stream(0));
    let batch: Tensor<f64> = fixed_batch(2, 17);
    let logits = forward(&model, &params, &batch).unwrap();
    let expected = reference_mlp(&params, batch.data(), 2, &[32, 24]);
    for (a, e) in logits.data().iter().zip(&expected) {
        let denom = e.abs().max(1.0);
        assert!((a - e).abs() / denom < 1e-6, "got {a}, reference {e}");
    }
}

#[test]
fn cnn_forward_matches_reference() {
    let model = ModelSpec::cnn();
    let params: ParamSet<f64> = model.init_params(&mut init_stream(0));
    let batch: Tensor<f64> = fixed_batch(2, 18);
    let logits = forward(&model, &params, &batch).unwrap();
    let expected = reference_cnn(&params, batch.data(), 2);
    for (a, e) in logits.data().iter().zip(&expected) {
        let denom = e.abs().max(1.0);
        assert!((a - e).abs() / denom < 1e-6, "got {a}, reference {e}");
    }
}

#[test]
fn zero_params_give_zero_logits() {
    for model in [ModelSpec::mlp(vec![16]), ModelSpec::cnn()] {
        let params: ParamSet<f32> = model.init_params(&mut init_stream(1)).zeros_like();
        let batch: Tensor<f32> = fixed_batch(3, 19);
        let logits = forward(&model, &params, &batch).unwrap();
        assert!(logits.data().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn identical_rows_produce_identical_logits() {
    let model = ModelSpec::cnn();
    let params: ParamSet<f32> = model.init_params(&mut init_stream(2));
    let one: Tensor<f32> = fixed_batch(1, 20);
    let mut data = one.data().to_vec();
    data.extend_from_slice(one.data());
    let twice = Tensor::new(vec![2, IMAGE_SIDE, IMAGE_SIDE, 1], data).unwrap();
    let logits = forward(&model, &params, &twice).unwrap();
    let (r0, r1) = logits.data().split_at(NUM_CLASSES);
    assert_eq!(r0, r1);
}

#[test]
fn bad_batch_shape_rejected() {
    let model = ModelSpec::mlp(vec![]);
    let params: ParamSet<f32> = model.init_params(&mut init_stream(3));
    let bad = Tensor::new(vec![1, 27, 28, 1], vec![0.0f32; 27 * 28]).unwrap();
    assert!(forward(&model, &params, &bad).is_err());
}

#[test]
fn zero_input_leaves_first_layer_weight_gradient_zero() {
    let model = ModelSpec::mlp(vec![16]);
    let params: ParamSet<f64> = model.init_params(&mut init_stream(4));
    let batch = Tensor::new(vec![2, IMAGE_SIDE, IMAGE_SIDE, 1], vec![0.0f64; 2 * IMAGE_PIXELS]).unwrap();
    let grads = backward(&model, &params, &batch, &[3, 5]).unwrap();
    assert!(grads.get("fc0.w").unwrap().data().iter().all(|&v| v == 0.0));
    // bias gradients flow regardless of the zero input
    assert!(grads.get("fc1.b").unwrap().data().iter().any(|&v| v != 0.0));
}

#[test]
fn duplicated_batch_preserves_mean_gradient() {
    let model = ModelSpec::mlp(vec![16]);
    let params: ParamSet<f64> = model.init_params(&mut init_stream(5));
    let batch: Tensor<f64> = fixed_batch(3, 21);
    let labels = [1usize, 7, 44];

    let mut doubled = batch.data().to_vec();
    doubled.extend_from_slice(batch.data());
    let doubled = Tensor::new(vec![6, IMAGE_SIDE, IMAGE_SIDE, 1], doubled).unwrap();
    let mut labels2 = labels.to_vec();
    labels2.extend_from_slice(&labels);

    let g1 = backward(&model, &params, &batch, &labels).unwrap();
    let g2 = backward(&model, &params, &doubled, &labels2).unwrap();
    for ((_, a), (_, b)) in g1.entries().iter().zip(g2.entries()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-3));
        }
    }
}

#[test]
fn memorizing_params_reach_perfect_accuracy() {
    // Ten one-hot-pixel samples and a weight matrix routing pixel i to
    // class i: the model memorizes the set exactly.
    let mut images = vec![0.0f32; 10 * IMAGE_PIXELS];
    for i in 0..10 {
        images[i * IMAGE_PIXELS + i] = 1.0;
    }
    let ds = LabeledDataset::new(images, (0..10).collect()).unwrap();

    let model = ModelSpec::mlp(vec![]);
    let mut flat = vec![0.0f32; model.param_count()];
    for i in 0..10 {
        flat[i * NUM_CLASSES + i] = 1.0; // fc0.w[pixel i, class i]
    }
    let params = model.params_from_flat(&flat).unwrap();
    assert_eq!(evaluate_accuracy(&model, &params, &ds).unwrap(), 1.0);
}

#[test]
fn random_params_score_chance_level_on_balanced_set() {
    let ds = synth_dataset(NUM_CLASSES, 100, 1.0, 7).unwrap(); // 6200 samples
    let model = ModelSpec::mlp(vec![32]);
    let params: ParamSet<f32> = model.init_params(&mut init_stream(6));
    let acc = evaluate_accuracy(&model, &params, &ds).unwrap();
    let chance = 1.0 / NUM_CLASSES as f64;
    assert!(
        (acc - chance).abs() <= 0.02,
        "accuracy {acc} not within 0.02 of chance {chance}"
    );
}

#[test]
fn single_sample_accuracy_is_zero_or_one() {
    let ds = synth_dataset(NUM_CLASSES, 1, 0.2, 9).unwrap().subset(&[5]).unwrap();
    let model = ModelSpec::mlp(vec![]);
    let params: ParamSet<f32> = model.init_params(&mut init_stream(7));
    let acc = evaluate_accuracy(&model, &params, &ds).unwrap();
    assert!(acc == 0.0 || acc == 1.0);
}

#[test]
fn empty_test_set_is_unconstructible() {
    // A misconfigured shard cannot reach evaluation: zero-sample datasets
    // are rejected at construction.
    let ds = synth_dataset(NUM_CLASSES, 1, 0.2, 9).unwrap();
    assert!(ds.subset(&[]).is_err());
}

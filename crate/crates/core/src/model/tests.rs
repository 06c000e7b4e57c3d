use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::domains::FeatureTensor;

fn random_input(rng: &mut ChaCha8Rng, channels: usize, h: usize, w: usize) -> FeatureTensor<f64> {
    let mut t = FeatureTensor::zeros(channels, h, w);
    for v in &mut t.values {
        *v = rng.gen_range(0.0..1.0);
    }
    t
}

fn random_model(rng: &mut ChaCha8Rng) -> HeuristicModel<f64> {
    let layers = rng.gen_range(1..=3);
    let config = ModelConfig {
        input_channels: rng.gen_range(1..=4),
        coord_planes: rng.gen(),
        conv_layers: (0..layers)
            .map(|_| ConvSpec { out_channels: rng.gen_range(1..=4), kernel_size: [1, 3, 5][rng.gen_range(0..3)] })
            .collect(),
        pooling: if rng.gen() { Pooling::Average } else { Pooling::AverageMax },
        hidden_width: rng.gen_range(1..=6),
        output_scale: rng.gen_range(1..=3),
        seed: rng.gen(),
        output_activation: OutputActivation::Softplus,
    };
    let mut model = HeuristicModel::init(config).unwrap();
    for p in model.params_mut() {
        *p = rng.gen_range(-0.8..0.8);
    }
    model
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Central differences of `h` over every parameter.
fn numeric_gradient(model: &HeuristicModel<f64>, x: &FeatureTensor<f64>, eps: f64) -> Vec<f64> {
    let mut m = model.clone();
    (0..model.param_count())
        .map(|i| {
            let orig = m.params()[i];
            m.params_mut()[i] = orig + eps;
            let plus = m.forward(x).unwrap();
            m.params_mut()[i] = orig - eps;
            let minus = m.forward(x).unwrap();
            m.params_mut()[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

#[test]
fn init_is_seeded() {
    let a = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    let b = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    assert_eq!(a.params(), b.params());
    let c = HeuristicModel::<f64>::init(ModelConfig { seed: 1, ..ModelConfig::default() }).unwrap();
    assert_ne!(a.params(), c.params());
}

#[test]
fn default_parameter_count() {
    // conv0: 8*(4+2)*3*3 + 8, conv1/conv2: 8*8*3*3 + 8, dense: 32*(8+8) + 32, head: 32 + 1
    let expected = (8 * 6 * 9 + 8) + 2 * (8 * 8 * 9 + 8) + (32 * 16 + 32) + (32 + 1);
    assert_eq!(expected, 2185);
    let model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    assert_eq!(model.param_count(), expected);
    assert_eq!(model.layout().block("head.bias").unwrap().offset, expected - 1);
}

#[test]
fn invalid_configs() {
    let even = ModelConfig { conv_layers: vec![ConvSpec { out_channels: 2, kernel_size: 2 }], ..Default::default() };
    assert!(HeuristicModel::<f64>::init(even).is_err());
    let none = ModelConfig { conv_layers: vec![], ..Default::default() };
    assert!(HeuristicModel::<f64>::init(none).is_err());
}

#[test]
fn zero_model_outputs_ln2() {
    let mut model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    model.params_mut().fill(0.0);
    let x = FeatureTensor::zeros(4, 9, 9);
    assert!((model.forward(&x).unwrap() - 10.0 * std::f64::consts::LN_2).abs() < 1e-14);
}

#[test]
fn output_is_non_negative() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1000 {
        let mut model = HeuristicModel::<f64>::init(ModelConfig { seed: i, ..Default::default() }).unwrap();
        if i % 2 == 0 {
            for p in model.params_mut() {
                *p *= 20.0;
            }
        }
        let (h, w) = (rng.gen_range(1..12), rng.gen_range(1..12));
        let x = random_input(&mut rng, 4, h, w);
        let v = model.forward(&x).unwrap();
        assert!(v >= 0.0 && v.is_finite());
    }
}

#[test]
fn any_spatial_size_is_accepted() {
    let model = HeuristicModel::<f32>::init(ModelConfig::default()).unwrap();
    let small = FeatureTensor::<f32>::zeros(4, 15, 15);
    let large = FeatureTensor::<f32>::zeros(4, 60, 60);
    assert!(model.forward(&small).is_ok());
    assert!(model.forward(&large).is_ok());
}

#[test]
fn channel_mismatch_is_an_error() {
    let model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    let x = FeatureTensor::zeros(3, 5, 5);
    assert!(matches!(model.forward(&x), Err(crate::Error::ChannelMismatch { expected: 4, got: 3 })));
}

#[test]
fn zero_upstream_gives_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = random_model(&mut rng);
    let c = model.config().input_channels;
    let batch: Vec<_> = (0..3).map(|_| random_input(&mut rng, c, 5, 6)).collect();
    let g = model.backward(&batch, &[0.0; 3]).unwrap();
    assert!(g.iter().all(|&v| v == 0.0));
    assert!(model.backward(&batch, &[1.0; 2]).is_err());
}

#[test]
fn backward_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for config in 0..10 {
        let model = random_model(&mut rng);
        for _ in 0..5 {
            let (h, w) = (rng.gen_range(1..8), rng.gen_range(1..8));
            let x = random_input(&mut rng, model.config().input_channels, h, w);
            let analytic = model.backward(std::slice::from_ref(&x), &[1.0]).unwrap();
            let numeric = numeric_gradient(&model, &x, 1e-4);
            let err = relative_error(&analytic, &numeric);
            assert!(err <= 1e-4, "config {config}: relative error {err}");
        }
    }
}

#[test]
fn gradient_is_linear_in_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = random_model(&mut rng);
    let c = model.config().input_channels;
    let batch: Vec<_> = (0..40).map(|_| random_input(&mut rng, c, 4, 5)).collect();
    let weights: Vec<f64> = (0..40).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let total = model.backward(&batch, &weights).unwrap();
    let mut summed = vec![0.0; model.param_count()];
    for (x, &wt) in batch.iter().zip(&weights) {
        let g = model.backward(std::slice::from_ref(x), &[wt]).unwrap();
        for (s, v) in summed.iter_mut().zip(g) {
            *s += v;
        }
    }
    assert!(relative_error(&total, &summed) < 1e-12);
}

#[test]
fn adam_zero_gradient_keeps_params() {
    let mut model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    let before = model.params().to_vec();
    let mut adam = AdamState::new(model.param_count());
    model.adam_step(&vec![0.0; before.len()], &mut adam).unwrap();
    assert_eq!(model.params(), &before[..]);
}

#[test]
fn adam_first_step_by_hand() {
    // m1 = 0.1 g, v1 = 0.001 g^2; bias correction gives m = g, v = g^2,
    // so the step is lr * g / (|g| + eps).
    let mut params = vec![1.0, -2.0, 0.5];
    let grads = vec![0.5, -3.0, 1e-3];
    let mut adam = AdamState::<f64>::new(3);
    adam.step(&mut params, &grads).unwrap();
    let expected: Vec<f64> =
        [1.0, -2.0, 0.5].iter().zip(&grads).map(|(p, g): (&f64, &f64)| p - 0.001 * g / (g.abs() + 1e-8)).collect();
    for (a, e) in params.iter().zip(&expected) {
        assert!((a - e).abs() < 1e-15, "{a} vs {e}");
    }
}

#[test]
fn adam_rejects_non_finite() {
    let mut params = vec![1.0, 2.0];
    let mut adam = AdamState::<f64>::new(2);
    let err = adam.step(&mut params, &[0.1, f64::NAN]).unwrap_err();
    assert!(matches!(err, crate::Error::NonFiniteGradient { index: 1 }));
    assert_eq!(params, vec![1.0, 2.0]);
    assert_eq!(adam.step, 0);
}

#[test]
fn training_trajectory_is_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
        let mut adam = AdamState::new(model.param_count());
        let mut trajectory = Vec::new();
        for _ in 0..5 {
            let batch: Vec<_> = (0..4).map(|_| random_input(&mut rng, 4, 6, 6)).collect();
            let g = model.backward(&batch, &[1.0, -1.0, 0.5, 2.0]).unwrap();
            model.adam_step(&g, &mut adam).unwrap();
            trajectory.push(model.params().to_vec());
        }
        trajectory
    };
    assert_eq!(run(), run());
}

#[test]
fn checkpoint_round_trip() {
    let model = HeuristicModel::<f64>::init(ModelConfig { seed: 5, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    model.write_checkpoint(&mut buf).unwrap();
    assert!(buf.starts_with(
        b"heurlab-model v1\ninput=4 coords=1 conv=8x3,8x3,8x3 pool=avgmax hidden=32 scale=10 seed=5 params=2185\n"
    ));
    let back = HeuristicModel::<f64>::read_checkpoint(&buf[..]).unwrap();
    assert_eq!(back, model);

    let mut corrupted = buf.clone();
    corrupted[15] = b'9';
    assert!(matches!(HeuristicModel::<f64>::read_checkpoint(&corrupted[..]), Err(crate::Error::VersionMismatch(_))));
    let truncated = &buf[..buf.len() - 3];
    assert!(matches!(HeuristicModel::<f64>::read_checkpoint(truncated), Err(crate::Error::BadCheckpoint(_))));
}

#[test]
fn f32_model_tracks_f64_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    let narrow: HeuristicModel<f32> = model.cast();
    let x = random_input(&mut rng, 4, 10, 10);
    let x32 =
        FeatureTensor { channels: 4, height: 10, width: 10, values: x.values.iter().map(|&v| v as f32).collect() };
    let (a, b) = (model.forward(&x).unwrap(), narrow.forward(&x32).unwrap() as f64);
    assert!((a - b).abs() < 1e-4 * a.abs().max(1.0));
}

#[test]
fn coordinate_planes_break_translation_invariance() {
    let single = |x: usize, y: usize| {
        let mut t = FeatureTensor::<f64>::zeros(4, 9, 9);
        t.set(1, y, x, 1.0);
        t
    };
    let plain = ModelConfig { coord_planes: false, pooling: Pooling::Average, ..Default::default() };
    let model = HeuristicModel::<f64>::init(plain).unwrap();
    let a = model.forward(&single(3, 3)).unwrap();
    let b = model.forward(&single(5, 4)).unwrap();
    assert!((a - b).abs() < 1e-12);

    let model = HeuristicModel::<f64>::init(ModelConfig::default()).unwrap();
    let a = model.forward(&single(3, 3)).unwrap();
    let b = model.forward(&single(5, 4)).unwrap();
    assert!((a - b).abs() > 1e-6);
}

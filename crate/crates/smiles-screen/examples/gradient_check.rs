//! Verify the hand-derived backward passes against central finite
//! differences. The checker only uses forward evaluations, so it is an
//! independent oracle for every gradient in the crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::neural::{
    finite_difference_gradient, max_relative_error, CnnConfig, CnnModel, GruClassifier,
    GruConfig, LmConfig, LmModel, SequenceClassifier,
};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let batch_owned = vec![
        (vec![2u32, 3, 4, 5, 2], 1u8),
        (vec![5u32, 4, 3], 0u8),
        (vec![2u32, 2, 4, 4], 1u8),
    ];
    let batch: Vec<(&[u32], u8)> = batch_owned.iter().map(|(s, y)| (s.as_slice(), *y)).collect();

    // CNN
    let mut cnn = CnnModel::init(CnnConfig::new(6, vec![3, 2], 2), &mut rng);
    let (_, analytic) = cnn.batch_gradient(&batch);
    let theta = cnn.theta().to_vec();
    let fd = finite_difference_gradient(
        |t| {
            cnn.theta_mut().copy_from_slice(t);
            cnn.batch_loss(&batch)
        },
        &theta,
        1e-5,
    );
    println!(
        "cnn: {} params, max relative error {:.2e}",
        theta.len(),
        max_relative_error(&analytic, &fd, 1e-6)
    );

    // GRU
    let cfg = GruConfig {
        vocab_size: 6,
        embed_dim: 3,
        hidden: 3,
    };
    let mut gru = GruClassifier::init(cfg, &mut rng);
    let (_, analytic) = gru.batch_gradient(&batch);
    let theta = gru.theta().to_vec();
    let fd = finite_difference_gradient(
        |t| {
            gru.theta_mut().copy_from_slice(t);
            gru.batch_loss(&batch)
        },
        &theta,
        1e-5,
    );
    println!(
        "gru: {} params, max relative error {:.2e}",
        theta.len(),
        max_relative_error(&analytic, &fd, 1e-6)
    );

    // language model with its softmax readout
    let lm_cfg = LmConfig {
        embed_dim: 3,
        hidden: 2,
    };
    let lm = LmModel::init(5, lm_cfg, &mut rng);
    let seq = vec![1u32, 4, 0, 2];
    let mut analytic = vec![0.0; lm.param_count()];
    lm.sequence_gradient(&seq, 1.0, &mut analytic);
    let fd = finite_difference_gradient(
        |t| {
            let probe = LmModel::from_theta(5, lm_cfg, t.to_vec());
            let mut sink = vec![0.0; probe.param_count()];
            probe.sequence_gradient(&seq, 1.0, &mut sink)
        },
        lm.theta(),
        1e-5,
    );
    println!(
        "lm:  {} params, max relative error {:.2e}",
        lm.param_count(),
        max_relative_error(&analytic, &fd, 1e-6)
    );
}

//! Whole-network gradient verification: every parameter of every branch,
//! decoder and penalty terms included, against central differences.

use edgeguard_model::{ArchDescriptor, FusedGrads, FusedNet};
use edgeguard_nn::gradcheck::{relative_error, CENTRAL_DIFF_STEP, GRAD_TOLERANCE};
use edgeguard_nn::loss::composite_loss;
use edgeguard_nn::rng::seeded_rng;
use edgeguard_nn::Tensor2;
use rand::Rng;

const DROPOUT_SEED: u64 = 77;

fn toy_batch(rows: usize, dim: usize) -> (Tensor2<f64>, Vec<f64>) {
    let mut rng = seeded_rng(55);
    let data = (0..rows * dim)
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    let x = Tensor2::from_vec(rows, dim, data).unwrap();
    let targets = (0..rows).map(|i| f64::from(i % 2 == 0)).collect();
    (x, targets)
}

/// Composite loss under a fixed dropout stream; `None` disables dropout.
/// Reseeding per call keeps the masks identical across FD perturbations.
fn eval_loss(net: &FusedNet<f64>, x: &Tensor2<f64>, t: &[f64], dropout: bool) -> f64 {
    let mut rng = seeded_rng(DROPOUT_SEED);
    let (probs, recon, _) = net
        .forward_train(x, dropout.then_some(&mut rng))
        .expect("forward");
    let fuse_w = net
        .named_buffers()
        .into_iter()
        .find(|(n, _)| n == "fusion.hidden.w")
        .map(|(_, b)| b.to_vec())
        .unwrap();
    let arch = net.arch();
    let penalized = Tensor2::from_vec(arch.fusion_input_dim(), arch.fusion.hidden, fuse_w).unwrap();
    let terms = composite_loss(
        &probs,
        t,
        &recon,
        x,
        arch.lambda_recon,
        arch.lambda_l2,
        &penalized,
    )
    .expect("loss");
    terms.total
}

fn check_all_parameters(dropout: bool) {
    let mut net: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(8), 12).unwrap();
    let (x, t) = toy_batch(4, 8);

    let mut grads = FusedGrads::zeros(net.arch());
    {
        let mut rng = seeded_rng(DROPOUT_SEED);
        net.loss_and_grads(&x, &t, dropout.then_some(&mut rng), &mut grads)
            .unwrap();
    }
    let analytic: Vec<Vec<f64>> = grads.views().iter().map(|g| g.to_vec()).collect();
    let names: Vec<String> = net.named_buffers().iter().map(|(n, _)| n.clone()).collect();

    let mut checked = 0usize;
    let mut max_err = 0.0f64;
    let mut max_at = String::new();
    for (bi, name) in names.iter().enumerate() {
        let len = analytic[bi].len();
        #[allow(clippy::needless_range_loop)] // j also indexes the net's mutable buffer view
        for j in 0..len {
            let original = net.named_buffers_mut()[bi].1[j];
            net.named_buffers_mut()[bi].1[j] = original + CENTRAL_DIFF_STEP;
            let plus = eval_loss(&net, &x, &t, dropout);
            net.named_buffers_mut()[bi].1[j] = original - CENTRAL_DIFF_STEP;
            let minus = eval_loss(&net, &x, &t, dropout);
            net.named_buffers_mut()[bi].1[j] = original;

            let numeric = (plus - minus) / (2.0 * CENTRAL_DIFF_STEP);
            let err = relative_error(analytic[bi][j], numeric);
            if err > max_err {
                max_err = err;
                max_at = format!("{name}[{j}]");
            }
            assert!(
                err < GRAD_TOLERANCE,
                "{name}[{j}]: analytic {} vs numeric {numeric}, rel err {err}",
                analytic[bi][j]
            );
            checked += 1;
        }
    }
    let expected = net.arch().param_count(true);
    assert_eq!(
        checked, expected,
        "gradient check must cover every parameter"
    );
    println!(
        "checked {checked} parameters (dropout: {dropout}), max rel err {max_err} at {max_at}"
    );
}

#[test]
fn every_parameter_matches_central_differences() {
    check_all_parameters(false);
}

#[test]
fn every_parameter_matches_central_differences_with_dropout_active() {
    check_all_parameters(true);
}

mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMITIVE_TOL: f64 = 1e-4;
const LOSS_TOL: f64 = 1e-3;

#[test]
fn dense_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let err = dense_trial(&mut rng);
        assert!(err < PRIMITIVE_TOL, "dense rel err {err}");
    }
}

#[test]
fn tanh_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let err = tanh_trial(&mut rng);
        assert!(err < PRIMITIVE_TOL, "tanh rel err {err}");
    }
}

#[test]
fn lstm_unroll_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let err = lstm_trial(&mut rng);
        assert!(err < PRIMITIVE_TOL, "lstm rel err {err}");
    }
}

#[test]
fn actor_loss_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for trial in 0..12 {
        let err = actor_loss_trial(trial, &mut rng);
        assert!(err < LOSS_TOL, "actor loss rel err {err} (trial {trial})");
    }
}

use abft_core::faults::pass_rng;
use abft_core::linalg::RealMatrix;
use abft_core::network::{
    activation_derivative, apply_activation, backward_linear, backward_output, forward_linear,
    random_input, random_weights, update_weights, Activation, LearningParams, Stage,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn triple_loop(y: &[f64], w: &RealMatrix) -> Vec<f64> {
    let mut s = vec![0.0; w.cols()];
    for (j, sj) in s.iter_mut().enumerate() {
        for (i, yi) in y.iter().enumerate() {
            *sj += yi * w[(i, j)];
        }
    }
    s
}

fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.len() == b.len() && a.iter().zip(b).all(|(x, z)| (x - z).abs() <= rel * scale)
}

#[test]
fn products_match_naive_loops() {
    for pass in 0..50 {
        let mut rng = pass_rng(11, 0, pass);
        let y = random_input(96, &mut rng);
        let w = random_weights(96, &mut rng);
        assert!(close(
            &forward_linear(&y, &w).unwrap(),
            &triple_loop(&y, &w),
            1e-12
        ));
        assert!(close(
            &backward_linear(&y, &w).unwrap(),
            &triple_loop(&y, &w),
            1e-12
        ));
    }
}

#[test]
fn small_hand_cases() {
    let perm = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert_eq!(forward_linear(&[1.0, 2.0], &perm).unwrap(), vec![2.0, 1.0]);
    assert_eq!(
        forward_linear(&[1.0, 0.0], &RealMatrix::identity(2)).unwrap(),
        vec![1.0, 0.0]
    );
    let w_nw = update_weights(
        &RealMatrix::zeros(2, 2),
        LearningParams::new(0.5).unwrap(),
        &[1.0, 0.0],
        &[0.0, 1.0],
    )
    .unwrap();
    assert_eq!(
        w_nw,
        RealMatrix::from_rows(&[vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap()
    );
    let sigma = backward_linear(&[0.0, 0.0], &perm).unwrap();
    assert_eq!(sigma, vec![0.0, 0.0]);
    assert_eq!(
        backward_output(&sigma, &[0.3, -2.0], Activation::Tanh).unwrap(),
        vec![0.0, 0.0]
    );
    assert_eq!(
        backward_linear(&[0.25, -1.0], &RealMatrix::identity(2)).unwrap(),
        vec![0.25, -1.0]
    );
}

#[test]
fn derivative_matches_finite_differences() {
    let mut rng = pass_rng(12, 0, 0);
    let s: Vec<f64> = random_input(500, &mut rng)
        .iter()
        .map(|x| 4.0 * x)
        .collect();
    let h = 1e-6;
    for (x, d) in s.iter().zip(activation_derivative(&s)) {
        let fd = ((x + h).tanh() - (x - h).tanh()) / (2.0 * h);
        assert!((fd - d).abs() < 1e-6, "s = {x}");
        assert!(d > 0.0 && d <= 1.0);
    }
    assert_eq!(activation_derivative(&[0.0]), vec![1.0]);
    assert_eq!(
        activation_derivative(&[1.3]),
        activation_derivative(&[-1.3])
    );
}

#[test]
fn update_is_rank_one() {
    let mut rng = pass_rng(13, 0, 0);
    let w = random_weights(48, &mut rng);
    let delta = random_input(48, &mut rng);
    let y = random_input(48, &mut rng);
    let w_nw = update_weights(&w, LearningParams::new(0.1).unwrap(), &delta, &y).unwrap();
    let diff = DMatrix::from_fn(48, 48, |r, c| w_nw[(r, c)] - w[(r, c)]);
    let mut sv: Vec<f64> = diff
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    assert!(sv[0] > 0.0);
    assert!(sv[1] < 1e-10 * sv[0]);
}

#[test]
fn update_scales_with_eta() {
    let mut rng = pass_rng(14, 0, 0);
    let w = random_weights(16, &mut rng);
    let delta = random_input(16, &mut rng);
    let y = random_input(16, &mut rng);
    let once = update_weights(&w, LearningParams::new(0.05).unwrap(), &delta, &y).unwrap();
    let twice = update_weights(&w, LearningParams::new(0.1).unwrap(), &delta, &y).unwrap();
    for ((a, b), w0) in once
        .as_slice()
        .iter()
        .zip(twice.as_slice())
        .zip(w.as_slice())
    {
        let (d1, d2) = (a - w0, b - w0);
        assert!((d2 - 2.0 * d1).abs() <= 1e-14 * (1.0 + d2.abs()) + 4.0 * f64::EPSILON * w0.abs());
    }
    let same = update_weights(&w, LearningParams::new(0.0).unwrap(), &delta, &y).unwrap();
    assert_eq!(same, w);
}

#[test]
fn identity_pipeline_nests_tanh() {
    let stage = Stage::new(RealMatrix::identity(4), Activation::Tanh, 0).unwrap();
    let mut y = vec![0.9, -0.2, 3.0, 0.0];
    let mut want = y.clone();
    for _ in 0..5 {
        y = stage.forward(&y).unwrap().y_out;
        want.iter_mut().for_each(|v| *v = v.tanh());
    }
    assert_eq!(y, want);
}

#[test]
fn shape_errors() {
    assert!(Stage::new(RealMatrix::zeros(2, 3), Activation::Tanh, 0).is_err());
    assert!(forward_linear(&[1.0], &RealMatrix::identity(2)).is_err());
    assert!(update_weights(
        &RealMatrix::identity(2),
        LearningParams::default(),
        &[1.0],
        &[1.0, 2.0]
    )
    .is_err());
    assert!(backward_output(&[1.0], &[1.0, 2.0], Activation::Tanh).is_err());
    assert!(LearningParams::new(-1.0).is_err());
    assert!(LearningParams::new(f64::NAN).is_err());
}

proptest! {
    #[test]
    fn forward_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let mut rng = pass_rng(seed, 0, 0);
        let (y1, y2) = (random_input(24, &mut rng), random_input(24, &mut rng));
        let w = random_weights(24, &mut rng);
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + b * v).collect();
        let lhs = forward_linear(&mix, &w).unwrap();
        let (f1, f2) = (forward_linear(&y1, &w).unwrap(), forward_linear(&y2, &w).unwrap());
        let rhs: Vec<f64> = f1.iter().zip(&f2).map(|(u, v)| a * u + b * v).collect();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn tanh_outputs_stay_open(s in prop::collection::vec(-18.0f64..18.0, 1..32)) {
        for y in apply_activation(&s, Activation::Tanh) {
            prop_assert!(y > -1.0 && y < 1.0);
        }
    }
}

//! Analytic gradients against central finite differences on random instances.

use nalgebra::DMatrix;
use proptest::prelude::*;

use perceptrace::skipgram::{
    full_softmax_gradient, negative_sampling_gradient, SkipgramModel, Vocab,
};
use perceptrace::vectors::{init_autoencoder, loss, loss_and_gradients, AutoencoderParams};

const H: f64 = 1e-5;

fn close(a: f64, n: f64) -> bool {
    (a - n).abs() <= 1e-4 * a.abs().max(n.abs()).max(1e-3)
}

fn model(n: usize, d: usize, values: &[f64]) -> SkipgramModel {
    let vocab = Vocab::from_tokens((0..n).map(|i| format!("e{i}#t")));
    SkipgramModel::new(
        vocab,
        d,
        values[..n * d].to_vec(),
        values[n * d..2 * n * d].to_vec(),
    )
    .unwrap()
}

fn matrix(m: &mut SkipgramModel, which: usize) -> &mut [f64] {
    if which == 0 {
        m.target_matrix_mut()
    } else {
        m.context_matrix_mut()
    }
}

/// Numeric gradient of `f` over both matrices, target first.
fn numeric(m: &mut SkipgramModel, f: impl Fn(&SkipgramModel) -> f64) -> (Vec<f64>, Vec<f64>) {
    let len = m.target_matrix().len();
    let mut out = [vec![0.0; len], vec![0.0; len]];
    for (which, grad) in out.iter_mut().enumerate() {
        for (i, g) in grad.iter_mut().enumerate() {
            let orig = matrix(m, which)[i];
            matrix(m, which)[i] = orig + H;
            let up = f(m);
            matrix(m, which)[i] = orig - H;
            let down = f(m);
            matrix(m, which)[i] = orig;
            *g = (up - down) / (2.0 * H);
        }
    }
    let [t, u] = out;
    (t, u)
}

fn block(p: &mut AutoencoderParams, b: usize) -> &mut [f64] {
    match b {
        0 => p.encode_weights.as_mut_slice(),
        1 => p.encode_bias.as_mut_slice(),
        2 => p.decode_weights.as_mut_slice(),
        _ => p.decode_bias.as_mut_slice(),
    }
}

fn dense(
    m: &SkipgramModel,
    center: usize,
    g: &perceptrace::skipgram::PairGradient,
) -> (Vec<f64>, Vec<f64>) {
    let d = m.dim();
    let mut t = vec![0.0; m.target_matrix().len()];
    t[center * d..(center + 1) * d].copy_from_slice(&g.target_row);
    let mut u = vec![0.0; t.len()];
    for (j, row) in &g.context_rows {
        for k in 0..d {
            u[j * d + k] += row[k];
        }
    }
    (t, u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn full_softmax(
        n in 2usize..7, d in 1usize..5,
        values in proptest::collection::vec(-2.0f64..2.0, 2 * 6 * 4),
        c in 0usize..7, o in 0usize..7,
    ) {
        let (c, o) = (c % n, o % n);
        let mut m = model(n, d, &values);
        let g = full_softmax_gradient(&m, c, o);
        prop_assert!((g.loss + m.output_distribution(c)[o].ln()).abs() < 1e-12);
        let (at, au) = dense(&m, c, &g);
        let (nt, nu) = numeric(&mut m, |m| -m.output_distribution(c)[o].ln());
        for (a, b) in at.iter().zip(&nt).chain(au.iter().zip(&nu)) {
            prop_assert!(close(*a, *b), "analytic {a} numeric {b}");
        }
    }

    #[test]
    fn negative_sampling(
        n in 3usize..7, d in 1usize..5,
        values in proptest::collection::vec(-2.0f64..2.0, 2 * 6 * 4),
        c in 0usize..7, o in 0usize..7, negs in proptest::collection::vec(0usize..7, 1..4),
    ) {
        let (c, o) = (c % n, o % n);
        let negs: Vec<usize> = negs.into_iter().map(|x| x % n).collect();
        let mut m = model(n, d, &values);
        let g = negative_sampling_gradient(&m, c, o, &negs);
        let (at, au) = dense(&m, c, &g);
        let (nt, nu) = numeric(&mut m, |m| negative_sampling_gradient(m, c, o, &negs).loss);
        for (a, b) in at.iter().zip(&nt).chain(au.iter().zip(&nu)) {
            prop_assert!(close(*a, *b), "analytic {a} numeric {b}");
        }
    }

    #[test]
    fn autoencoder_mse(
        rows in 1usize..6, input in 1usize..5, hidden in 1usize..4, seed in 0u64..1000,
        data in proptest::collection::vec(-3.0f64..3.0, 5 * 4),
    ) {
        let mut p = init_autoencoder(input, hidden, seed);
        let batch = DMatrix::from_row_slice(rows, input, &data[..rows * input]);
        let (l, g) = loss_and_gradients(&p, &batch);
        prop_assert!((l - loss(&p, &batch)).abs() < 1e-12);
        let analytic: Vec<f64> = [g.encode_weights.as_slice(), g.encode_bias.as_slice(), g.decode_weights.as_slice(), g.decode_bias.as_slice()].concat();
        let mut k = 0;
        for b in 0..4 {
            for i in 0..block(&mut p, b).len() {
                let orig = block(&mut p, b)[i];
                block(&mut p, b)[i] = orig + H;
                let up = loss(&p, &batch);
                block(&mut p, b)[i] = orig - H;
                let down = loss(&p, &batch);
                block(&mut p, b)[i] = orig;
                let numeric = (up - down) / (2.0 * H);
                prop_assert!(close(analytic[k], numeric), "block {b} entry {i}: {} vs {numeric}", analytic[k]);
                k += 1;
            }
        }
    }
}

//! Central finite-difference checks of reverse-mode gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Relative error `‖g_ad - g_fd‖ / max(‖g_ad‖, ‖g_fd‖, 1e-10)` over all
/// inputs jointly, using central differences with the given step.
pub fn gradient_error<F>(inputs: &[Tensor], step: f64, f: F) -> f64
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let eval = |xs: &[Tensor]| -> f64 {
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
        f(&tape, &vars).item()
    };

    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let out = f(&tape, &vars);
    let grads = tape.backward(out);
    let analytic: Vec<f64> = vars.iter().flat_map(|v| grads.get_or_zeros(*v).into_data()).collect();

    let mut numeric = Vec::with_capacity(analytic.len());
    let mut work: Vec<Tensor> = inputs.to_vec();
    for k in 0..inputs.len() {
        for i in 0..inputs[k].len() {
            let x0 = inputs[k].data()[i];
            work[k].data_mut()[i] = x0 + step;
            let up = eval(&work);
            work[k].data_mut()[i] = x0 - step;
            let down = eval(&work);
            work[k].data_mut()[i] = x0;
            numeric.push((up - down) / (2.0 * step));
        }
    }
    relative_error(&analytic, &numeric)
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-10)
}

/// Seeded inputs uniform on `[-1, 1]` with the given shapes.
pub fn random_inputs(shapes: &[&[usize]], seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shapes
        .iter()
        .map(|s| {
            let n: usize = s.iter().product();
            Tensor::new(s, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        })
        .collect()
}

/// Panics unless the gradient of `f` on seeded random inputs matches central
/// differences (step `1e-4`) within relative error `1e-5`.
pub fn assert_gradients<F>(shapes: &[&[usize]], seed: u64, f: F)
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let inputs = random_inputs(shapes, seed);
    let err = gradient_error(&inputs, 1e-4, f);
    assert!(err < 1e-5, "gradient check failed for seed {seed}: relative error {err:.3e}");
}

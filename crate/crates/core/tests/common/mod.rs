#![allow(dead_code)]

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagtopic::synthgen::itm_spec;
use tagtopic::{sample_corpus, Corpus, ItmModel};

/// Rows of skewed random weights (squared uniforms), normalized.
pub fn skewed_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let mut t = Array2::from_shape_simple_fn((rows, cols), || rng.gen::<f64>().powi(2) + 1e-3);
    for mut row in t.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|x| x / s);
    }
    t
}

/// Corpus forward-sampled from a random interest-topic model.
pub fn synthetic_corpus(
    seed: u64,
    (n_r, n_u, n_t): (usize, usize, usize),
    (n_i, k): (usize, usize),
    n_samples: u64,
) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_t = skewed_rows(&mut rng, n_i * k, n_t)
        .into_shape_with_order((n_i, k, n_t))
        .unwrap();
    let p_t: Array3<f64> = p_t;
    let p_i = skewed_rows(&mut rng, n_u, n_i);
    let p_z = skewed_rows(&mut rng, n_r, k);
    let p_u = skewed_rows(&mut rng, 1, n_u).row(0).to_vec();
    let p_r = skewed_rows(&mut rng, 1, n_r).row(0).to_vec();
    let model = ItmModel::new(p_t, p_i, p_z, p_u, p_r, 0).unwrap();
    sample_corpus(&itm_spec(model, n_samples, seed).unwrap()).unwrap()
}

pub const TOY_CORPORA: [&str; 3] = [
    "a\tu1\tx\t3\na\tu2\ty\nb\tu1\ty\t2\nb\tu3\tz\nc\tu2\tz\t4\nc\tu3\tx\nd\tu1\tw\t2\nd\tu2\tx\n",
    "a\tu1\tx\na\tu1\ty\na\tu2\tx\t2\nb\tu2\ty\t3\nb\tu1\tz\nc\tu3\tz\t2\nc\tu3\tw\n",
    "p\tv1\ts\t5\np\tv2\ts\nq\tv2\tt\t2\nq\tv3\tu\nr\tv1\tu\t3\nr\tv3\ts\ns\tv2\tt\n",
];

pub fn toy(idx: usize) -> Corpus {
    tagtopic::ingest_triples(TOY_CORPORA[idx].as_bytes()).unwrap()
}

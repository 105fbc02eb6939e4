//! Fixtures shared by the criterion benches.

use nalgebra::DMatrix;
use poselift::basis::{learn_pca, learn_sparse_dictionary, DictionaryOptions};
use poselift::synthetic::{CorpusSpec, Generator, Instance};
use poselift::Basis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn generator() -> Generator {
    Generator::new(CorpusSpec::default()).expect("default corpus spec is valid")
}

pub fn pca_basis(k: usize) -> Basis {
    learn_pca(&generator().sample(300, 1).unwrap().poses, k).unwrap()
}

/// A small sparse dictionary; enough columns to exercise the reduced SDP.
pub fn sparse_basis(k: usize) -> Basis {
    let poses = generator().sample(200, 2).unwrap().poses;
    let opts = DictionaryOptions {
        k,
        epochs: 3,
        ..Default::default()
    };
    learn_sparse_dictionary(&poses, &opts).unwrap().basis
}

pub fn instances(n: usize) -> Vec<Instance> {
    generator().instances(n, 3).unwrap()
}

pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

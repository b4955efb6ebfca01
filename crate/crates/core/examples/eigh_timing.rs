use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let a = DMatrix::from_fn(n, n / 2, |_, _| rng.random_range(-1.0..1.0));
    let t0 = Instant::now();
    let c = &a * a.transpose();
    println!("gram {:?}", t0.elapsed());
    let t0 = Instant::now();
    let v = emspec::spectral::eigvalsh(&c).unwrap();
    println!("values {:?} (max {})", t0.elapsed(), v[n - 1]);
    let t0 = Instant::now();
    let _ = emspec::spectral::eigh(&c, true).unwrap();
    println!("vectors {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = c.clone().symmetric_eigenvalues();
    println!("nalgebra values {:?}", t0.elapsed());
}

//! Seeded random operators for property suites and benchmarks.
//!
//! All generators draw from [`ChaCha8Rng`], whose output is fixed across
//! platforms, so a seed reproduces the same instances everywhere.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qmat::{
    c64, diag, hermitize, CMat, CVec, DensityOperator, HermitianOperator, MeasurementOperator,
    StateVector, SystemLabel, WiretapChannel,
};

pub type Rng64 = ChaCha8Rng;

/// Generator for instance `stream` of a suite seeded with `seed`.
pub fn rng(seed: u64, stream: u64) -> Rng64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut Rng64) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re, im)
    })
}

/// Haar-random unitary.
pub fn unitary(d: usize, rng: &mut Rng64) -> CMat {
    let qr = ginibre(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let z = r[(j, j)];
        let n = z.norm();
        if n > 0.0 {
            let phase = z / n;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Random isometry from dimension `d_in` into `d_out ≥ d_in`.
pub fn isometry(d_in: usize, d_out: usize, rng: &mut Rng64) -> CMat {
    unitary(d_out, rng).columns(0, d_in).into_owned()
}

pub fn pure_vector(d: usize, rng: &mut Rng64) -> CVec {
    let g = ginibre(d, 1, rng);
    let n = g.norm();
    CVec::from_iterator(d, g.iter().map(|z| z / n))
}

pub fn pure_state(label: SystemLabel, rng: &mut Rng64) -> StateVector {
    let v = pure_vector(label.dim, rng);
    StateVector::new(vec![label], v).expect("normalized by construction")
}

/// Random state of the given rank (induced measure).
pub fn density_ranked(systems: Vec<SystemLabel>, rank: usize, rng: &mut Rng64) -> DensityOperator {
    let d: usize = systems.iter().map(|s| s.dim).product();
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::trusted_parts(systems, m.unscale(tr))
}

pub fn density(systems: Vec<SystemLabel>, rng: &mut Rng64) -> DensityOperator {
    let d: usize = systems.iter().map(|s| s.dim).product();
    density_ranked(systems, d, rng)
}

pub fn probability_vector(n: usize, rng: &mut Rng64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn diagonal_density(label: SystemLabel, rng: &mut Rng64) -> DensityOperator {
    let p = probability_vector(label.dim, rng);
    DensityOperator::trusted_parts(vec![label], diag(&p))
}

/// PSD matrix with spectrum uniform in `[0, scale]`.
pub fn psd(d: usize, scale: f64, rng: &mut Rng64) -> CMat {
    let u = unitary(d, rng);
    let vals: Vec<f64> = (0..d).map(|_| scale * rng.random::<f64>()).collect();
    hermitize(&(&u * diag(&vals) * u.adjoint()))
}

pub fn measurement(systems: Vec<SystemLabel>, rng: &mut Rng64) -> MeasurementOperator {
    let d: usize = systems.iter().map(|s| s.dim).product();
    MeasurementOperator::trusted(HermitianOperator::from_parts(systems, psd(d, 1.0, rng)))
}

pub fn channel(d_a: usize, d_b: usize, d_e: usize, rng: &mut Rng64) -> WiretapChannel {
    let v = isometry(d_a, d_b * d_e, rng);
    WiretapChannel::new(
        SystemLabel::new("A", d_a),
        SystemLabel::new("B", d_b),
        SystemLabel::new("E", d_e),
        v,
    )
    .expect("isometry by construction")
}

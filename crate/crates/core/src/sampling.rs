//! Seeded, reproducible random states, unitaries and channels.
//!
//! All sampling goes through ChaCha8 seeded from a recorded 64-bit master
//! seed; per-task child seeds are derived with a splitmix64 mix so that
//! parallel or per-input sampling stays reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, dagger, trace, zeros, CMatrix, CVector};
use crate::states::DensityMatrix;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 step; child seed for task `index` under a master seed.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Normalized complex-normal vector.
pub fn random_state_vector(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    let mut v = CVector::zeros(d);
    for i in 0..d {
        v[i] = c(normal(rng), normal(rng));
    }
    let n = v.norm();
    v.unscale(n)
}

pub fn random_pure_state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    DensityMatrix::from_pure(&random_state_vector(d, rng))
}

/// Wishart-style mixed state `G G† / Tr(G G†)` with a complex Ginibre `G`.
pub fn random_mixed_state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut g = zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = c(normal(rng), normal(rng));
        }
    }
    let w = &g * dagger(&g);
    let t = trace(&w).re;
    DensityMatrix::new(w.unscale(t)).expect("Wishart state is a state")
}

/// Haar-ish random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut g = zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = c(normal(rng), normal(rng));
        }
    }
    g.qr().q()
}

/// Uniform direction on the unit sphere.
pub fn random_bloch_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Qubit state on the Bloch shell of the given radius.
pub fn bloch_shell_state(radius: f64, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let n = random_bloch_direction(rng);
    crate::states::BlochVector([n[0] * radius, n[1] * radius, n[2] * radius])
        .to_density()
        .expect("shell radius <= 1")
}

/// Qubit state uniform in radius within the Bloch ball of the given radius.
pub fn bloch_ball_state(radius: f64, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let r: f64 = rng.gen::<f64>().cbrt() * radius;
    bloch_shell_state(r, rng)
}

/// Random CPTP map with `kraus` Kraus operators, cut from a Haar-ish
/// isometry on `d * kraus` dimensions.
pub fn random_cptp(d: usize, kraus: usize, rng: &mut ChaCha8Rng) -> crate::QuantumMap {
    let u = random_unitary(d * kraus, rng);
    // isometry columns |i> ⊗ |0> for the environment starting in |0>
    let mut ops = Vec::with_capacity(kraus);
    for m in 0..kraus {
        let mut a = zeros(d, d);
        for row in 0..d {
            for col in 0..d {
                // block (row, m) of the dilation: A_m[row, col] = U[(row, m), (col, 0)]
                a[(row, col)] = u[(row * kraus + m, col * kraus)];
            }
        }
        ops.push(a);
    }
    crate::QuantumMap::from_kraus(&ops).expect("dilation blocks form a channel")
}

//! Fixtures shared by the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strainlim::scenarios::gaussian_pluck;
use strainlim::verification::random_tensor;
use strainlim::{ConstitutiveModel, MeshSpec, Regularization, ScalarPotential, Simulator, SymTensor};

pub fn prototype(n: u32) -> ConstitutiveModel {
    ConstitutiveModel::new(ScalarPotential::Prototype { q: 2.0 }, 1.0, 1.0)
        .unwrap()
        .with_regularization(n, Regularization::LinearTikhonov)
        .unwrap()
}

/// Strains G(T) for log-uniform |T| in [1e-2, 1e2].
pub fn strains(model: &ConstitutiveModel, dim: usize, count: usize) -> Vec<SymTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..count).map(|_| model.g_apply(&random_tensor(&mut rng, dim, -2.0, 2.0))).collect()
}

pub fn pluck(mesh: MeshSpec, n: u32) -> Simulator {
    Simulator::from_scenario(gaussian_pluck(mesh, prototype(n), 0.3, 1.0).unwrap()).unwrap()
}

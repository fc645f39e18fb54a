//! Random parameters and phase-space points for tests and diagnostics.

use rand::Rng;

use crate::model::{ModelParams, PhasePoint};

/// Couplings with `κ ∈ [0.5, 1.5]`, `x, y ∈ [−2.5, 2.5]` and
/// `|x ± y| ≥ 0.3`.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> ModelParams {
    loop {
        let kappa = rng.random_range(0.5..=1.5);
        let x: f64 = rng.random_range(-2.5..=2.5);
        let y: f64 = rng.random_range(-2.5..=2.5);
        if (x - y).abs() < 0.3 || (x + y).abs() < 0.3 {
            continue;
        }
        if let Ok(params) = ModelParams::new(n, m, kappa, x, y) {
            return params;
        }
    }
}

/// A point of the Weyl chamber whose gaps `q_i − q_{i+1}` (within a species)
/// and smallest coordinates all lie in `[margin, margin + spread]`.
pub fn random_chamber_point<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    margin: f64,
    spread: f64,
) -> Vec<f64> {
    let mut q = vec![0.0; n];
    for (lo, hi) in [(0, m), (m, n)] {
        let mut level = 0.0;
        for i in (lo..hi).rev() {
            level += margin + rng.random_range(0.0..=spread);
            q[i] = level;
        }
    }
    q
}

/// Chamber point as above with momenta uniform in `[−p_max, p_max]`.
pub fn random_phase_point<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    margin: f64,
    p_max: f64,
) -> PhasePoint {
    let q = random_chamber_point(rng, n, m, margin, 0.6);
    let p = (0..n).map(|_| rng.random_range(-p_max..=p_max)).collect();
    PhasePoint { q, p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{chamber_margin, in_weyl_chamber};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chamber_points_respect_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..6 {
            for m in 1..n {
                let q = random_chamber_point(&mut rng, n, m, 0.2, 0.5);
                assert!(in_weyl_chamber(&q, m));
                assert!(chamber_margin(&q, m) >= 0.2 - 1e-15);
            }
        }
    }

    #[test]
    fn params_keep_away_from_degenerate_couplings() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = random_params(&mut rng, 3, 1);
            assert!((p.x() - p.y()).abs() >= 0.3 && (p.x() + p.y()).abs() >= 0.3);
        }
    }
}

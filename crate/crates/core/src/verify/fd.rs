use alloc::vec::Vec;

use crate::objective::PNormInstance;
use crate::Result;

/// Worst relative gap between `grad` and central differences of `func` at `x`,
/// each coordinate measured against `max(1, |grad_e|)`.
pub fn finite_diff(func: impl Fn(&[f64]) -> f64, grad: &[f64], x: &[f64], h: f64) -> f64 {
    let mut probe: Vec<f64> = x.to_vec();
    let mut worst = 0.0_f64;
    for e in 0..x.len() {
        probe[e] = x[e] + h;
        let up = func(&probe);
        probe[e] = x[e] - h;
        let down = func(&probe);
        probe[e] = x[e];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[e]).abs() / grad[e].abs().max(1.0));
    }
    worst
}

/// Checks the analytic energy gradient against central differences.
pub fn finite_diff_check(instance: &PNormInstance, f: &[f64], h: f64) -> Result<f64> {
    let grad = instance.gradient(f)?;
    Ok(finite_diff(|x| instance.energy(x).unwrap_or(f64::NAN), &grad, f, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::EdgeAttrs;
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn random(p: u32, seed: u64) -> (PNormInstance, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut inst = PNormInstance::new(vec![0.0; 5], p, 0.0, 1.0).unwrap();
        for i in 0..8 {
            let attrs = EdgeAttrs::new(rng.random_range(-1.0..1.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
            inst.add_edge(i % 5, (i + 2) % 5, attrs).unwrap();
        }
        let f = (0..8).map(|_| rng.random_range(-1.5..1.5)).collect();
        (inst, f)
    }

    #[test]
    fn quadratic_energy_is_accurate() {
        let (inst, f) = random(2, 1);
        assert!(finite_diff_check(&inst, &f, 1e-6).unwrap() <= 1e-6);
    }

    #[test]
    fn cubic_term_has_zero_slope_at_zero() {
        let mut inst = PNormInstance::new(vec![0.0; 2], 3, 0.0, 1.0).unwrap();
        inst.add_edge(0, 1, EdgeAttrs::new(0.0, 1.0, 2.0)).unwrap();
        assert_eq!(inst.gradient(&[0.0]).unwrap(), vec![0.0]);
        assert!(finite_diff_check(&inst, &[0.0], 1e-5).unwrap() <= 1e-9);
    }

    #[test]
    fn quartic_energy_is_accurate() {
        for seed in 0..10 {
            let (inst, f) = random(4, seed);
            assert!(finite_diff_check(&inst, &f, 1e-5).unwrap() <= 1e-5);
        }
    }
}

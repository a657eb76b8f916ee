//! Networks and the DQN / PPO trainers.

pub mod checkpoint;
pub mod dqn;
pub mod iterate;
pub mod mlp;
pub mod optim;
pub mod ppo;
pub mod replay;
pub mod report;
pub mod selfplay;

use crate::scalar::Scalar;

/// Network input: `s / m_max`, entries in `[-1, 1]`.
pub fn normalize_state<T: Scalar>(s: &[i64], m_max: u32) -> Vec<T> {
    assert!(m_max >= 1, "normalizer must be positive");
    let scale = T::lit(f64::from(m_max));
    s.iter().map(|&v| T::lit(v as f64) / scale).collect()
}

/// Layer sizes `[input, hidden.., output]`.
pub(crate) fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_state::<f64>(&[4, -4], 4), vec![1.0, -1.0]);
        assert_eq!(normalize_state::<f64>(&[0, 0, 0], 4), vec![0.0; 3]);
        assert_eq!(normalize_state::<f64>(&[2, -1, 0], 4), vec![0.5, -0.25, 0.0]);
    }
}

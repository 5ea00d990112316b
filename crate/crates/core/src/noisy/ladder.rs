use serde::{Deserialize, Serialize};

/// `l_0 = n`, `l_i = max(log2 l_{i-1}, 1)`, stopping at the first 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLadder {
    pub levels: Vec<f64>,
}

impl LevelLadder {
    /// Number of levels after `l_0`.
    pub fn log_star(&self) -> usize {
        self.levels.len() - 1
    }

    /// `l_1..l_L`.
    pub fn working(&self) -> &[f64] {
        &self.levels[1..]
    }
}

pub fn level_ladder(n: usize) -> LevelLadder {
    let mut levels = vec![n.max(1) as f64];
    loop {
        let next = levels.last().unwrap().log2().max(1.0);
        levels.push(next);
        if next <= 1.0 {
            break;
        }
    }
    LevelLadder { levels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two() {
        let l = level_ladder(65536);
        assert_eq!(l.levels, vec![65536.0, 16.0, 4.0, 2.0, 1.0]);
        assert_eq!(l.log_star(), 4);
        assert_eq!(level_ladder(2).levels, vec![2.0, 1.0]);
        assert_eq!(level_ladder(16).log_star(), 3);
    }

    #[test]
    fn degenerate() {
        assert_eq!(level_ladder(1).levels, vec![1.0, 1.0]);
        let l = level_ladder(256);
        assert_eq!(l.log_star(), 4);
        assert!((l.levels[3] - 3f64.log2()).abs() < 1e-12);
    }
}

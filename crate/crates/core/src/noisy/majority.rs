use crate::error::{Error, Result};
use crate::model::ItemId;

/// The item winning strictly more than half of an odd number of outcomes.
pub fn majority(winners: &[ItemId]) -> Result<ItemId> {
    if winners.len() % 2 == 0 {
        return Err(Error::TiePossible(winners.len()));
    }
    let first = winners[0];
    let agree = winners.iter().filter(|&&w| w == first).count();
    if 2 * agree > winners.len() {
        return Ok(first);
    }
    winners
        .iter()
        .copied()
        .find(|&w| w != first)
        .ok_or(Error::TiePossible(winners.len()))
}

/// Most frequent answer; ties go to the earliest copy.
pub fn plurality<T: PartialEq + Clone>(answers: &[T]) -> Option<T> {
    let counts: Vec<usize> = answers
        .iter()
        .map(|a| answers.iter().filter(|b| *b == a).count())
        .collect();
    let best = *counts.iter().max()?;
    let i = counts.iter().position(|&c| c == best)?;
    Some(answers[i].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Oracle, Request};
    use crate::model::{GroundTruth, NoiseModel};

    #[test]
    fn small_cases() {
        let (a, b) = (ItemId(0), ItemId(1));
        assert_eq!(majority(&[a, a, b]).unwrap(), a);
        assert_eq!(majority(&[b]).unwrap(), b);
        assert_eq!(majority(&[b, a, b]).unwrap(), b);
        assert_eq!(majority(&[a, b]), Err(Error::TiePossible(2)));
    }

    #[test]
    fn plurality_tie_goes_first() {
        assert_eq!(plurality(&[1, 2, 3]), Some(1));
        assert_eq!(plurality(&[1, 2, 2]), Some(2));
        assert_eq!(plurality::<u8>(&[]), None);
    }

    #[test]
    fn majority_of_221_is_reliable() {
        let gt = GroundTruth::identity(2).unwrap();
        let mut oracle = Oracle::new(&gt, NoiseModel::default(), 42);
        let reqs = vec![
            Request {
                a: ItemId(0),
                b: ItemId(1),
                reps: 221
            };
            100_000
        ];
        let out = oracle.evaluate(1, &reqs).unwrap();
        let good = out.iter().filter(|&&w| 2 * w > 221).count();
        assert!(good as f64 / 1e5 >= 0.999, "{good}");
    }
}

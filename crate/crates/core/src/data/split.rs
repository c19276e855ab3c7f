use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Random train/test partition with `round(n · test_fraction)` test matches.
/// Both halves keep the original match order.
pub fn train_test_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let n = d.n();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} matches at fraction {test_fraction} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((d.subset(&train)?, d.subset(&test)?))
}

/// Hold out every match involving `team`; the rest is the training set.
pub fn leave_team_out(d: &Dataset, team: &str) -> Result<(Dataset, Dataset)> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..d.n()).partition(|&i| d.matches()[i].involves_team(team));
    if test.is_empty() || train.is_empty() {
        return Err(Error::InvalidArgument(format!("leaving out `{team}` leaves an empty side")));
    }
    Ok((d.subset(&train)?, d.subset(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MatchRecord, Outcome};
    use std::collections::HashSet;

    fn toy(n: usize) -> Dataset {
        let teams = ["Everton", "Arsenal", "Chelsea", "Stoke"];
        let ms = (0..n)
            .map(|i| {
                let mut m = MatchRecord::new(format!("m{i}"), Outcome::Draw, 70.0, 70.0, 8);
                m.home_team = Some(teams[i % 4].to_string());
                m.away_team = Some(teams[(i + 1) % 4].to_string());
                m
            })
            .collect();
        Dataset::new(8, ms).unwrap()
    }

    #[test]
    fn split_sizes_follow_fraction() {
        let (train, test) = train_test_split(&toy(3040), 0.10, 7).unwrap();
        assert_eq!((train.n(), test.n()), (2736, 304));
    }

    #[test]
    fn split_is_deterministic_and_exhaustive() {
        let d = toy(10);
        let a = train_test_split(&d, 0.5, 42).unwrap();
        let b = train_test_split(&d, 0.5, 42).unwrap();
        assert_eq!(a, b);
        let ids: HashSet<_> = a.0.matches().iter().chain(a.1.matches()).map(|m| m.match_id.clone()).collect();
        assert_eq!(ids.len(), 10);
        assert!(train_test_split(&toy(3), 0.1, 1).is_err());
    }

    #[test]
    fn leave_team_out_partitions_on_team() {
        let d = toy(12);
        let (train, test) = leave_team_out(&d, "Everton").unwrap();
        assert!(test.matches().iter().all(|m| m.involves_team("Everton")));
        assert!(train.matches().iter().all(|m| !m.involves_team("Everton")));
        assert_eq!(train.n() + test.n(), 12);
        assert!(leave_team_out(&d, "Wigan").is_err());
    }
}

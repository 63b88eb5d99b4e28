use crate::error::{Error, Result};
use crate::trainer::TrainStats;

pub const CSV_HEADER: &str =
    "iteration,mean_eval_return,std_eval_return,actor_loss,critic_loss,entropy,clip_fraction,wall_time_s";

pub const AGGREGATE_HEADER: &str = "iteration,mean_eval_return,std_eval_return,n_seeds";

pub fn format_row(s: &TrainStats) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        s.iteration,
        s.mean_eval_return,
        s.std_eval_return,
        s.actor_loss,
        s.critic_loss,
        s.entropy,
        s.clip_fraction,
        s.wall_time_s
    )
}

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::config(format!("csv line {line}"), reason)
}

pub fn parse_csv(text: &str) -> Result<Vec<TrainStats>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(bad(i + 2, format!("expected 8 fields, got {}", f.len())));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(i + 2, format!("bad number {:?}", f[k])));
            Ok(TrainStats {
                iteration: f[0].parse().map_err(|_| bad(i + 2, "bad iteration"))?,
                mean_eval_return: num(1)?,
                std_eval_return: num(2)?,
                actor_loss: num(3)?,
                critic_loss: num(4)?,
                entropy: num(5)?,
                clip_fraction: num(6)?,
                wall_time_s: num(7)?,
            })
        })
        .collect()
}

/// Cross-seed statistics of `mean_eval_return` for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub iteration: usize,
    pub mean: f64,
    /// Sample standard deviation across seeds (0 for a single seed).
    pub std: f64,
    pub n_seeds: usize,
}

impl AggregateRow {
    pub fn format(&self) -> String {
        format!("{},{},{},{}", self.iteration, self.mean, self.std, self.n_seeds)
    }
}

/// Per-iteration mean and standard deviation over seeds, for iterations every
/// seed reached.
pub fn aggregate(per_seed: &[Vec<TrainStats>]) -> Vec<AggregateRow> {
    let common = per_seed.iter().map(Vec::len).min().unwrap_or(0);
    (0..common)
        .map(|k| {
            let xs: Vec<f64> = per_seed.iter().map(|rows| rows[k].mean_eval_return).collect();
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                iteration: per_seed[0][k].iteration,
                mean,
                std,
                n_seeds: n,
            }
        })
        .collect()
}

pub fn parse_aggregate(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == AGGREGATE_HEADER => {}
        _ => return Err(bad(1, "unexpected aggregate header")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 2, "expected 4 fields"));
            }
            let err = || bad(i + 2, "bad number");
            Ok(AggregateRow {
                iteration: f[0].parse().map_err(|_| err())?,
                mean: f[1].parse().map_err(|_| err())?,
                std: f[2].parse().map_err(|_| err())?,
                n_seeds: f[3].parse().map_err(|_| err())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iteration: usize, ret: f64) -> TrainStats {
        TrainStats {
            iteration,
            mean_eval_return: ret,
            std_eval_return: 0.5,
            actor_loss: -0.01,
            critic_loss: 0.2,
            entropy: 1.1,
            clip_fraction: 0.05,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn rows_round_trip() {
        let rows = vec![row(1, -12.345678901234567), row(2, 1e-300)];
        let mut text = format!("{CSV_HEADER}\n");
        for r in &rows {
            text.push_str(&format_row(r));
            text.push('\n');
        }
        assert_eq!(parse_csv(&text).unwrap(), rows);
    }

    #[test]
    fn aggregate_uses_sample_std() {
        let agg = aggregate(&[vec![row(1, 1.0), row(2, 0.0)], vec![row(1, 3.0)]]);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].mean, 2.0);
        assert!((agg[0].std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg[0].n_seeds, 2);
    }
}

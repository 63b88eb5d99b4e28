//! Plain-text parameter checkpoints.
//!
//! ```text
//! macrpo-checkpoint v1
//! meta iteration 10
//! block actor.embed.w 32 14
//! w <rows*cols values>
//! m <rows*cols values>
//! v <rows*cols values>
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so reading a file back
//! reproduces every weight bit for bit.

use std::fmt::Write as _;

use super::{ParamBlock, Params, Tensor2};
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "macrpo-checkpoint v1";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub blocks: Vec<ParamBlock>,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Copies weights and Adam moments into matching blocks of `params` (by name).
    pub fn restore_into<P: Params + ?Sized>(&self, params: &mut P) -> Result<()> {
        for dst in params.blocks_mut() {
            let src = self.block(&dst.name).ok_or_else(|| Error::Checkpoint {
                line: 0,
                reason: format!("missing block {}", dst.name),
            })?;
            if src.shape() != dst.shape() {
                return Err(Error::Checkpoint {
                    line: 0,
                    reason: format!(
                        "block {} has shape {:?}, expected {:?}",
                        dst.name,
                        src.shape(),
                        dst.shape()
                    ),
                });
            }
            dst.weights = src.weights.clone();
            dst.adam_m = src.adam_m.clone();
            dst.adam_v = src.adam_v.clone();
            dst.zero_grad();
        }
        Ok(())
    }
}

fn push_values(out: &mut String, tag: char, t: &Tensor2) {
    out.push(tag);
    for v in t.values() {
        let _ = write!(out, " {v:e}");
    }
    out.push('\n');
}

pub fn encode_checkpoint(meta: &[(String, String)], blocks: &[&ParamBlock]) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_HEADER);
    out.push('\n');
    for (k, v) in meta {
        let _ = writeln!(out, "meta {k} {v}");
    }
    for b in blocks {
        let (r, c) = b.shape();
        let _ = writeln!(out, "block {} {r} {c}", b.name);
        push_values(&mut out, 'w', &b.weights);
        push_values(&mut out, 'm', &b.adam_m);
        push_values(&mut out, 'v', &b.adam_v);
    }
    out
}

fn parse_values(line_no: usize, line: &str, tag: char, rows: usize, cols: usize) -> Result<Tensor2> {
    let err = |reason: String| Error::Checkpoint {
        line: line_no,
        reason,
    };
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some(t) if t.len() == 1 && t.starts_with(tag) => {}
        other => return Err(err(format!("expected `{tag}` row, found {other:?}"))),
    }
    let values = parts
        .map(|p| p.parse::<f64>().map_err(|e| err(format!("bad value {p:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != rows * cols {
        return Err(err(format!(
            "expected {} values, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(Tensor2::from_vec(rows, cols, values))
}

pub fn decode_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim_end() == CHECKPOINT_HEADER => {}
        _ => {
            return Err(Error::Checkpoint {
                line: 1,
                reason: format!("missing header `{CHECKPOINT_HEADER}`"),
            })
        }
    }
    let mut ckpt = Checkpoint::default();
    while let Some((no, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("meta") => {
                let key = parts.next().ok_or_else(|| Error::Checkpoint {
                    line: no,
                    reason: "meta without key".into(),
                })?;
                let value = parts.collect::<Vec<_>>().join(" ");
                ckpt.meta.push((key.to_string(), value));
            }
            Some("block") => {
                let fields: Vec<&str> = parts.collect();
                let bad = || Error::Checkpoint {
                    line: no,
                    reason: "expected `block NAME ROWS COLS`".into(),
                };
                if fields.len() != 3 {
                    return Err(bad());
                }
                let rows: usize = fields[1].parse().map_err(|_| bad())?;
                let cols: usize = fields[2].parse().map_err(|_| bad())?;
                let mut next = |tag| {
                    let (n, l) = lines.next().ok_or_else(|| Error::Checkpoint {
                        line: no,
                        reason: format!("truncated block {}", fields[0]),
                    })?;
                    parse_values(n, l, tag, rows, cols)
                };
                let weights = next('w')?;
                let adam_m = next('m')?;
                let adam_v = next('v')?;
                let mut block = ParamBlock::new(fields[0], weights);
                block.adam_m = adam_m;
                block.adam_v = adam_v;
                ckpt.blocks.push(block);
            }
            Some(other) => {
                return Err(Error::Checkpoint {
                    line: no,
                    reason: format!("unknown record `{other}`"),
                })
            }
            None => {}
        }
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_missing_header() {
        assert!(matches!(
            decode_checkpoint("block a 1 1\nw 1\nm 0\nv 0\n"),
            Err(Error::Checkpoint { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_short_rows() {
        let text = format!("{CHECKPOINT_HEADER}\nblock a 1 2\nw 1\nm 0 0\nv 0 0\n");
        assert!(matches!(
            decode_checkpoint(&text),
            Err(Error::Checkpoint { line: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 6),
            moments in prop::collection::vec(-1e3f64..1e3, 6),
        ) {
            let mut b = ParamBlock::new("net.layer.w", Tensor2::from_vec(2, 3, vals));
            b.adam_m = Tensor2::from_vec(2, 3, moments.clone());
            b.adam_v = Tensor2::from_vec(2, 3, moments.iter().map(|m| m * m).collect());
            let meta = vec![("iteration".to_string(), "7".to_string())];
            let text = encode_checkpoint(&meta, &[&b]);
            let back = decode_checkpoint(&text).unwrap();
            prop_assert_eq!(back.meta("iteration"), Some("7"));
            let got = back.block("net.layer.w").unwrap();
            let bits = |t: &Tensor2| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&got.weights), bits(&b.weights));
            prop_assert_eq!(bits(&got.adam_m), bits(&b.adam_m));
            prop_assert_eq!(bits(&got.adam_v), bits(&b.adam_v));
        }
    }
}

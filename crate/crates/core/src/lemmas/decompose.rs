//! Rearranging an `r`-balanced block into increasing pieces.
//!
//! The positive part is split into the greedy chains `S_1, ..., S_k`
//! (`k = width(b+)`), and `C_i` collects `floor(r)` negatives followed by
//! `S_i`. Negatives lying after the start of `S_k` cannot be moved in front
//! of it, so they are returned separately as an increasing, all-negative tail.

use num::{BigRational, ToPrimitive};

use crate::error::{Error, Result};
use crate::seq::{greedy_partition, is_r_balanced, Block, Flip};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub blocks: Vec<Block>,
    /// Negatives that stay behind the last piece; may be empty.
    pub tail: Block,
    /// Size-2 block flips (1-based positions) turning the input into
    /// `C_1 ... C_k tail`.
    pub schedule: Vec<Flip>,
}

impl Decomposition {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn concatenation(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self.blocks.iter().flat_map(|b| b.values().iter().copied()).collect();
        out.extend_from_slice(self.tail.values());
        out
    }
}

pub fn decompose_balanced(b: &Block, r: &BigRational) -> Result<Decomposition> {
    let report = is_r_balanced(b, r)?;
    if !report.balanced {
        return Err(Error::contract(format!("block is not {r}-balanced: {:?}", report.witness)));
    }
    let v = b.values();
    let pos_idx: Vec<usize> = (0..v.len()).filter(|&i| v[i] > 0).collect();
    let neg_idx: Vec<usize> = (0..v.len()).filter(|&i| v[i] < 0).collect();
    if pos_idx.is_empty() {
        return Ok(Decomposition { blocks: vec![b.clone()], tail: Block::new(vec![])?, schedule: vec![] });
    }
    let pos_vals: Vec<i64> = pos_idx.iter().map(|&i| v[i]).collect();
    let chains: Vec<Vec<usize>> = greedy_partition(&pos_vals)
        .chains
        .into_iter()
        .map(|c| c.into_iter().map(|j| pos_idx[j]).collect())
        .collect();
    let k = chains.len();
    let rf = r.floor().to_integer().to_usize().unwrap_or(usize::MAX);
    let last_start = chains[k - 1][0];

    // rank[i] orders element i in the target arrangement
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(k + 1);
    let mut next_neg = 0usize;
    for (j, chain) in chains.iter().enumerate() {
        let mut g = Vec::new();
        if j + 1 < k {
            let take = rf.min(neg_idx.len() - next_neg);
            g.extend_from_slice(&neg_idx[next_neg..next_neg + take]);
            next_neg += take;
        } else {
            while next_neg < neg_idx.len() && neg_idx[next_neg] < last_start {
                g.push(neg_idx[next_neg]);
                next_neg += 1;
            }
        }
        g.extend_from_slice(chain);
        groups.push(g);
    }
    let tail_idx = neg_idx[next_neg..].to_vec();
    let mut rank = vec![0usize; v.len()];
    let mut acc = 0;
    for g in groups.iter().chain(std::iter::once(&tail_idx)) {
        for &i in g {
            rank[i] = acc;
            acc += 1;
        }
    }

    let mut cur = v.to_vec();
    let mut schedule = Vec::new();
    for j in 1..cur.len() {
        let mut i = j;
        while i > 0 && rank[i - 1] > rank[i] {
            if cur[i - 1] > cur[i] {
                return Err(Error::contract(format!(
                    "decomposition needs to exchange {} before {}",
                    cur[i - 1],
                    cur[i]
                )));
            }
            cur.swap(i - 1, i);
            rank.swap(i - 1, i);
            schedule.push(Flip { c: i as i64, d: i as i64 + 1 });
            i -= 1;
        }
    }

    let mut blocks = Vec::with_capacity(k);
    let mut at = 0;
    for g in &groups {
        blocks.push(Block::new(cur[at..at + g.len()].to_vec())?);
        at += g.len();
    }
    let tail = Block::new(cur[at..].to_vec())?;
    Ok(Decomposition { blocks, tail, schedule })
}

//! Symbol codes for binary trees and the prefix trees they describe.
//!
//! A trit code (alphabet `{0,1,2}`) describes a tree without dead ends: each
//! symbol is the branching decision at the next extendible node, `0` keeping
//! only the left child, `1` only the right child and `2` both. A quad code
//! adds `3`, which gives a node no children at all, so the decoded tree may
//! have dead ends or die out entirely.
//!
//! Nodes are visited level by level and, within a level, in lexicographic
//! order. That order fixes which node the `i`-th symbol belongs to.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth a materialized [`PrefixTree`] supports; nodes are stored as
/// bit patterns in a `u64`.
pub const MAX_DEPTH: usize = 63;

macro_rules! symbol_code {
    ($(#[$meta:meta])* $name:ident, $alphabet:expr) => {
        $(#[$meta])*
        #[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
        pub struct $name(Vec<u8>);

        impl $name {
            pub const ALPHABET: u8 = $alphabet;

            pub fn new(symbols: Vec<u8>) -> Result<Self> {
                if let Some((position, &s)) =
                    symbols.iter().enumerate().find(|(_, &s)| s >= Self::ALPHABET)
                {
                    return Err(Error::InvalidSymbol {
                        symbol: char::from_digit(u32::from(s), 36).unwrap_or('?'),
                        position,
                        alphabet: Self::ALPHABET,
                    });
                }
                Ok(Self(symbols))
            }

            /// `len` copies of a single symbol.
            pub fn repeat(symbol: u8, len: usize) -> Result<Self> {
                Self::new(vec![symbol; len])
            }

            pub fn symbols(&self) -> &[u8] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn into_inner(self) -> Vec<u8> {
                self.0
            }

            pub fn is_prefix_of(&self, other: &Self) -> bool {
                other.0.starts_with(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let symbols = s
                    .trim()
                    .chars()
                    .enumerate()
                    .map(|(position, c)| match c.to_digit(10) {
                        Some(d) if d < u32::from(Self::ALPHABET) => Ok(d as u8),
                        _ => Err(Error::InvalidSymbol {
                            symbol: c,
                            position,
                            alphabet: Self::ALPHABET,
                        }),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                Ok(Self(symbols))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for &s in &self.0 {
                    write!(f, "{}", s)?;
                }
                Ok(())
            }
        }
    };
}

symbol_code!(
    /// Finite prefix of a code over `{0,1,2}` for a dead-end-free tree.
    TritCode,
    3
);
symbol_code!(
    /// Finite prefix of a code over `{0,1,2,3}` for a Galton-Watson tree.
    QuadCode,
    4
);

/// A depth-bounded, prefix-closed set of binary strings containing the empty
/// string.
///
/// Level `k` holds the nodes of length `k` as sorted integers whose binary
/// expansion (most significant bit first, `k` bits) is the node string, so
/// numeric order is lexicographic order and the children of `v` are `2v` and
/// `2v + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrefixTree {
    depth: usize,
    levels: Vec<Vec<u64>>,
}

impl PrefixTree {
    fn check_depth(depth: usize) -> Result<()> {
        if depth > MAX_DEPTH {
            Err(Error::DepthTooLarge(depth))
        } else {
            Ok(())
        }
    }

    /// Build from already sorted levels. Callers guarantee the invariants.
    pub(crate) fn from_levels_unchecked(depth: usize, mut levels: Vec<Vec<u64>>) -> Self {
        levels.resize(depth + 1, Vec::new());
        debug_assert_eq!(levels[0], vec![0]);
        Self { depth, levels }
    }

    /// Only the root.
    pub fn root(depth: usize) -> Result<Self> {
        Self::check_depth(depth)?;
        Ok(Self::from_levels_unchecked(depth, vec![vec![0]]))
    }

    /// The complete binary tree of the given depth.
    pub fn full(depth: usize) -> Result<Self> {
        Self::check_depth(depth)?;
        let levels = (0..=depth).map(|k| (0..1u64 << k).collect()).collect();
        Ok(Self { depth, levels })
    }

    /// Build a tree from node strings over `{0,1}`; the empty string is the
    /// root. Fails unless the set is prefix-closed and bounded by `depth`.
    pub fn from_nodes<S: AsRef<str>>(depth: usize, nodes: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::check_depth(depth)?;
        let mut levels = vec![Vec::new(); depth + 1];
        for node in nodes {
            let node = node.as_ref();
            if node.len() > depth {
                return Err(Error::InvalidTree(format!(
                    "node {node:?} is longer than depth {depth}"
                )));
            }
            let bits = node.chars().try_fold(0u64, |acc, c| match c {
                '0' => Ok(acc << 1),
                '1' => Ok((acc << 1) | 1),
                _ => Err(Error::InvalidTree(format!("node {node:?} is not a binary string"))),
            })?;
            levels[node.len()].push(bits);
        }
        for level in &mut levels {
            level.sort_unstable();
            level.dedup();
        }
        if levels[0] != [0] {
            return Err(Error::InvalidTree("the empty string must be a node".into()));
        }
        for k in 1..=depth {
            let (above, below) = levels.split_at(k);
            let parents = &above[k - 1];
            if let Some(&orphan) = below[0].iter().find(|&&v| parents.binary_search(&(v >> 1)).is_err()) {
                return Err(Error::InvalidTree(format!(
                    "node {:?} has no parent",
                    node_string(k, orphan)
                )));
            }
        }
        Ok(Self { depth, levels })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Nodes of length `level` as sorted bit patterns.
    pub fn level(&self, level: usize) -> &[u64] {
        &self.levels[level]
    }

    pub fn levels(&self) -> &[Vec<u64>] {
        &self.levels
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// True when some node has length `depth`.
    pub fn reaches_depth(&self) -> bool {
        !self.levels[self.depth].is_empty()
    }

    pub fn contains(&self, node: &str) -> bool {
        if node.len() > self.depth {
            return false;
        }
        let Some(bits) = node.chars().try_fold(0u64, |acc, c| match c {
            '0' => Some(acc << 1),
            '1' => Some((acc << 1) | 1),
            _ => None,
        }) else {
            return false;
        };
        self.levels[node.len()].binary_search(&bits).is_ok()
    }

    /// All node strings in level order, lexicographic within a level.
    pub fn nodes(&self) -> Vec<String> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(k, level)| level.iter().map(move |&v| node_string(k, v)))
            .collect()
    }

    /// The same tree cut at a smaller depth.
    pub fn restrict(&self, depth: usize) -> Result<Self> {
        if depth > self.depth {
            return Err(Error::LevelOutOfRange {
                level: depth,
                depth: self.depth,
            });
        }
        Ok(Self {
            depth,
            levels: self.levels[..=depth].to_vec(),
        })
    }

    /// For each node of `level < depth`, in order, the symbol describing its
    /// children: 0 left only, 1 right only, 2 both, 3 none.
    pub(crate) fn child_symbols(&self, level: usize) -> impl Iterator<Item = (u64, u8)> + '_ {
        let next = &self.levels[level + 1];
        let mut j = 0;
        self.levels[level].iter().map(move |&v| {
            while j < next.len() && next[j] < 2 * v {
                j += 1;
            }
            let left = j < next.len() && next[j] == 2 * v;
            if left {
                j += 1;
            }
            let right = j < next.len() && next[j] == 2 * v + 1;
            if right {
                j += 1;
            }
            let symbol = match (left, right) {
                (true, false) => 0,
                (false, true) => 1,
                (true, true) => 2,
                (false, false) => 3,
            };
            (v, symbol)
        })
    }

    /// True when every node above the bottom level has a child.
    pub fn is_dead_end_free(&self) -> bool {
        (0..self.depth).all(|k| self.child_symbols(k).all(|(_, s)| s != 3))
    }
}

/// Node string for the bit pattern `bits` of length `len`.
pub fn node_string(len: usize, bits: u64) -> String {
    (0..len)
        .rev()
        .map(|i| if (bits >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    depth: usize,
    nodes: Vec<String>,
}

impl Serialize for PrefixTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TreeJson {
            depth: self.depth,
            nodes: self.nodes(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PrefixTree {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = TreeJson::deserialize(deserializer)?;
        PrefixTree::from_nodes(json.depth, json.nodes).map_err(serde::de::Error::custom)
    }
}

/// Result of decoding a code to a fixed depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecodeOutcome {
    pub tree: PrefixTree,
    /// Number of code symbols read.
    pub consumed: usize,
    /// Quad decoding only: no node reached the requested depth.
    pub extinct: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Alphabet {
    Trit,
    Quad,
}

/// Shared level-order decoder. `symbols` may be an on-demand generator, in
/// which case exactly `consumed` symbols are drawn from it.
fn decode_levels<I: Iterator<Item = u8>>(
    mut symbols: I,
    depth: usize,
    alphabet: Alphabet,
    budget: usize,
) -> Result<DecodeOutcome> {
    PrefixTree::check_depth(depth)?;
    let mut levels: Vec<Vec<u64>> = Vec::with_capacity(depth + 1);
    levels.push(vec![0]);
    let mut consumed = 0;
    let mut total = 1usize;
    for level in 0..depth {
        let current = &levels[level];
        let mut next = Vec::with_capacity(current.len() * 2);
        for (i, &v) in current.iter().enumerate() {
            let Some(symbol) = symbols.next() else {
                let pending = current.len() - i;
                let needed = match alphabet {
                    // every trit symbol yields at least one child
                    Alphabet::Trit => pending + (next.len() + pending) * (depth - level - 1),
                    Alphabet::Quad => pending,
                };
                return Err(Error::CodeTooShort { level, needed });
            };
            consumed += 1;
            match symbol {
                0 => next.push(2 * v),
                1 => next.push(2 * v + 1),
                2 => {
                    next.push(2 * v);
                    next.push(2 * v + 1);
                }
                _ => {}
            }
        }
        total += next.len();
        if total > budget {
            return Err(Error::BudgetExceeded {
                level: level + 1,
                budget,
            });
        }
        let died = next.is_empty();
        levels.push(next);
        if died {
            break;
        }
    }
    let tree = PrefixTree::from_levels_unchecked(depth, levels);
    let extinct = !tree.reaches_depth();
    Ok(DecodeOutcome {
        tree,
        consumed,
        extinct,
    })
}

/// Decode `T_x` truncated at `depth` from a trit code.
pub fn decode_trit(code: &TritCode, depth: usize) -> Result<DecodeOutcome> {
    decode_trit_from(code.symbols().iter().copied(), depth)
}

/// Decode from a symbol stream over `{0,1,2}`.
pub fn decode_trit_from<I: Iterator<Item = u8>>(symbols: I, depth: usize) -> Result<DecodeOutcome> {
    decode_levels(symbols, depth, Alphabet::Trit, usize::MAX)
}

/// Decode `S_x` truncated at `depth` from a quad code. Decoding stops as soon
/// as every branch has died.
pub fn decode_quad(code: &QuadCode, depth: usize) -> Result<DecodeOutcome> {
    decode_quad_from(code.symbols().iter().copied(), depth, usize::MAX)
}

/// Decode from a symbol stream over `{0,1,2,3}`, failing with
/// [`Error::BudgetExceeded`] once the tree holds more than `budget` nodes.
pub fn decode_quad_from<I: Iterator<Item = u8>>(symbols: I, depth: usize, budget: usize) -> Result<DecodeOutcome> {
    decode_levels(symbols, depth, Alphabet::Quad, budget)
}

/// Trit code of a dead-end-free tree, in decoding order.
pub fn encode_trit(tree: &PrefixTree) -> Result<TritCode> {
    let mut symbols = Vec::with_capacity(tree.node_count());
    for level in 0..tree.depth() {
        for (v, s) in tree.child_symbols(level) {
            if s == 3 {
                return Err(Error::DeadEndPresent {
                    node: node_string(level, v),
                    depth: tree.depth(),
                });
            }
            symbols.push(s);
        }
    }
    Ok(TritCode(symbols))
}

/// Quad code of any tree: one symbol per node above the bottom level, with
/// `3` at childless nodes.
pub fn encode_quad(tree: &PrefixTree) -> QuadCode {
    let symbols = (0..tree.depth())
        .flat_map(|level| tree.child_symbols(level).map(|(_, s)| s))
        .collect();
    QuadCode(symbols)
}

/// All nodes of length exactly `level`.
pub fn paths_at_level(tree: &PrefixTree, level: usize) -> Result<Vec<String>> {
    if level > tree.depth() {
        return Err(Error::LevelOutOfRange {
            level,
            depth: tree.depth(),
        });
    }
    Ok(tree.level(level).iter().map(|&v| node_string(level, v)).collect())
}

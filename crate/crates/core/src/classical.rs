//! The classical side: what a deterministic machine can learn from the
//! same oracle device.
//!
//! A classical caller only ever receives `f(x)`. [`ClassicalOracle`] is a
//! view that borrows the membership table alone, so phase data cannot leak
//! into any classical answer.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{bits_to_string, MembershipTable, OracleSpec};

/// Read-only classical access to an oracle.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalOracle<'a> {
    membership: &'a MembershipTable,
}

impl<'a> ClassicalOracle<'a> {
    pub fn new(oracle: &'a OracleSpec) -> Self {
        Self {
            membership: oracle.membership(),
        }
    }

    pub fn width(&self) -> u32 {
        self.membership.width()
    }

    pub fn query(&self, x: u64) -> Result<u8> {
        self.membership.get(x)
    }
}

/// Returns `f(x)`.
pub fn classical_query(oracle: &OracleSpec, x: u64) -> Result<u8> {
    ClassicalOracle::new(oracle).query(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub query: u64,
    pub answer: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalTranscript {
    pub entries: Vec<TranscriptEntry>,
}

impl ClassicalTranscript {
    pub fn record(oracle: &OracleSpec, queries: &[u64]) -> Result<Self> {
        let view = ClassicalOracle::new(oracle);
        let entries = queries
            .iter()
            .map(|&query| {
                Ok(TranscriptEntry {
                    query,
                    answer: view.query(query)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    pub fn answers(&self) -> impl Iterator<Item = u8> + '_ {
        self.entries.iter().map(|e| e.answer)
    }
}

/// True iff both oracles give the same classical answer to every query.
pub fn transcripts_indistinguishable(
    first: &OracleSpec,
    second: &OracleSpec,
    queries: &[u64],
) -> Result<bool> {
    if first.width() != second.width() {
        return Err(Error::Domain(format!(
            "cannot compare oracles of widths {} and {}",
            first.width(),
            second.width()
        )));
    }
    let a = ClassicalTranscript::record(first, queries)?;
    let b = ClassicalTranscript::record(second, queries)?;
    Ok(a == b)
}

/// Every string of `Σⁿ` in increasing order.
pub fn full_sweep(n: u32) -> Vec<u64> {
    (0..1u64 << n).collect()
}

// ---------------------------------------------------------------------------
// Decision trees for the constant-vs-balanced promise problem
// ---------------------------------------------------------------------------

/// Widest promise problem the exhaustive tree search accepts.
pub const LOWER_BOUND_MAX_N: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromiseCase {
    /// `f ≡ 1`
    A,
    /// `|X| = 2^{n-1}`
    B,
}

/// Adaptive classical query strategy. Serializes as nested JSON, e.g.
/// `{"query":0,"on_0":{"leaf":"B"},"on_1":{"leaf":"A"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecisionTree {
    Leaf {
        leaf: PromiseCase,
    },
    Query {
        query: u64,
        on_0: Box<DecisionTree>,
        on_1: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn leaf(case: PromiseCase) -> Self {
        DecisionTree::Leaf { leaf: case }
    }

    pub fn query(query: u64, on_0: DecisionTree, on_1: DecisionTree) -> Self {
        DecisionTree::Query {
            query,
            on_0: Box::new(on_0),
            on_1: Box::new(on_1),
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Query { on_0, on_1, .. } => 1 + on_0.depth().max(on_1.depth()),
        }
    }

    /// Follows the tree against a membership table; returns the verdict and
    /// the number of queries made.
    pub fn evaluate(&self, table: &MembershipTable) -> Result<(PromiseCase, u32)> {
        let mut node = self;
        let mut queries = 0;
        loop {
            match node {
                DecisionTree::Leaf { leaf } => return Ok((*leaf, queries)),
                DecisionTree::Query { query, on_0, on_1 } => {
                    queries += 1;
                    node = if table.get(*query)? == 0 { on_0 } else { on_1 };
                }
            }
        }
    }

    fn paths_distinct(&self, seen: &mut Vec<u64>) -> bool {
        match self {
            DecisionTree::Leaf { .. } => true,
            DecisionTree::Query { query, on_0, on_1 } => {
                if seen.contains(query) {
                    return false;
                }
                seen.push(*query);
                let ok = on_0.paths_distinct(seen) && on_1.paths_distinct(seen);
                seen.pop();
                ok
            }
        }
    }
}

/// Every membership table at width `n` satisfying the promise, labeled with
/// its case: the full set, then all balanced sets in increasing mask order.
pub fn promise_tables(n: u32) -> Result<Vec<(MembershipTable, PromiseCase)>> {
    if n == 0 || n > 4 {
        return Err(Error::Unsupported(format!(
            "promise table enumeration supports widths 1..=4, got {n}"
        )));
    }
    let len = 1usize << n;
    let mut tables = vec![(MembershipTable::full(n)?, PromiseCase::A)];
    for mask in 0u64..1 << len {
        if mask.count_ones() as usize * 2 == len {
            let bits = (0..len).map(|x| ((mask >> x) & 1) as u8).collect();
            tables.push((MembershipTable::new(n, bits)?, PromiseCase::B));
        }
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeCheck {
    pub depth: u32,
    pub tables_checked: usize,
    pub correct: bool,
    pub paths_distinct: bool,
}

impl TreeCheck {
    pub fn is_valid(&self) -> bool {
        self.correct && self.paths_distinct
    }
}

/// Re-checks a decision tree against every promise table at width `n`.
pub fn check_tree(tree: &DecisionTree, n: u32) -> Result<TreeCheck> {
    let tables = promise_tables(n)?;
    let mut correct = true;
    for (table, case) in &tables {
        if tree.evaluate(table)?.0 != *case {
            correct = false;
            break;
        }
    }
    Ok(TreeCheck {
        depth: tree.depth(),
        tables_checked: tables.len(),
        correct,
        paths_distinct: tree.paths_distinct(&mut Vec::new()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LowerBound {
    pub n: u32,
    /// Least depth of a correct decision tree.
    pub queries: u32,
    /// A correct tree of that depth.
    pub certificate: DecisionTree,
}

/// Least worst-case number of classical queries that decides A vs B with
/// certainty, found by exhaustive adversary search over adaptive trees.
///
/// Each node carries the set of promise tables still consistent with the
/// answers so far. A node is decided once all its tables share a case; the
/// adversary wins at the depth limit while both cases survive. Queries that
/// do not split the surviving set are skipped: such a query can be deleted
/// from any tree without increasing its depth, and skipping them also keeps
/// every path free of repeated queries.
pub fn min_classical_queries(n: u32) -> Result<LowerBound> {
    if n == 0 || n > LOWER_BOUND_MAX_N {
        return Err(Error::Unsupported(format!(
            "exhaustive decision-tree search supports widths 1..={LOWER_BOUND_MAX_N}, got {n}"
        )));
    }
    let mut search = TreeSearch::new(n)?;
    let all = search.all_alive();
    for depth in 0..=(1u32 << n) {
        if let Some(certificate) = search.decide(all, depth) {
            return Ok(LowerBound {
                n,
                queries: depth,
                certificate,
            });
        }
    }
    unreachable!("querying every string always decides the promise")
}

struct TreeSearch {
    n: u32,
    masks: Vec<u64>,
    cases: Vec<PromiseCase>,
    memo: HashMap<(u128, u32), Option<DecisionTree>>,
}

impl TreeSearch {
    fn new(n: u32) -> Result<Self> {
        let tables = promise_tables(n)?;
        debug_assert!(tables.len() <= 128);
        let masks = tables
            .iter()
            .map(|(t, _)| {
                t.bits()
                    .iter()
                    .enumerate()
                    .fold(0u64, |m, (x, &b)| m | (u64::from(b) << x))
            })
            .collect();
        let cases = tables.iter().map(|(_, c)| *c).collect();
        Ok(Self {
            n,
            masks,
            cases,
            memo: HashMap::new(),
        })
    }

    fn all_alive(&self) -> u128 {
        if self.masks.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.masks.len()) - 1
        }
    }

    fn surviving_case(&self, alive: u128) -> Option<PromiseCase> {
        let mut seen: Option<PromiseCase> = None;
        for i in (0..self.masks.len()).filter(|i| alive >> i & 1 == 1) {
            match seen {
                None => seen = Some(self.cases[i]),
                Some(c) if c != self.cases[i] => return None,
                Some(_) => {}
            }
        }
        // an empty set is unreachable; any label is correct there
        Some(seen.unwrap_or(PromiseCase::A))
    }

    fn decide(&mut self, alive: u128, depth: u32) -> Option<DecisionTree> {
        if let Some(case) = self.surviving_case(alive) {
            return Some(DecisionTree::leaf(case));
        }
        if depth == 0 {
            return None;
        }
        if let Some(hit) = self.memo.get(&(alive, depth)) {
            return hit.clone();
        }
        let mut found = None;
        for q in 0..1u64 << self.n {
            let mut ones = 0u128;
            for (i, &mask) in self.masks.iter().enumerate() {
                if alive >> i & 1 == 1 && mask >> q & 1 == 1 {
                    ones |= 1 << i;
                }
            }
            let zeros = alive & !ones;
            if ones == 0 || zeros == 0 {
                continue;
            }
            let Some(on_0) = self.decide(zeros, depth - 1) else {
                continue;
            };
            let Some(on_1) = self.decide(ones, depth - 1) else {
                continue;
            };
            found = Some(DecisionTree::query(q, on_0, on_1));
            break;
        }
        self.memo.insert((alive, depth), found.clone());
        found
    }
}

// ---------------------------------------------------------------------------
// Toy machines
// ---------------------------------------------------------------------------

/// Default step budget for the halting stand-in.
pub const DEFAULT_BUDGET: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Next {
    State(usize),
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub write: u8,
    pub movement: Move,
    pub next: Next,
}

/// Deterministic single-tape binary machine. `table[2·state + symbol]`
/// holds the transition for `(state, symbol)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyMachine {
    states: usize,
    start: usize,
    table: Vec<Transition>,
}

impl ToyMachine {
    pub fn new(states: usize, start: usize, table: Vec<Transition>) -> Result<Self> {
        if states == 0 {
            return Err(Error::Machine("a machine needs at least one state".into()));
        }
        if start >= states {
            return Err(Error::Machine(format!(
                "start state {start} out of range for {states} states"
            )));
        }
        if table.len() != 2 * states {
            return Err(Error::Machine(format!(
                "transition table must cover {} (state, symbol) pairs, has {}",
                2 * states,
                table.len()
            )));
        }
        for (i, t) in table.iter().enumerate() {
            if t.write > 1 {
                return Err(Error::Machine(format!(
                    "entry {i} writes non-binary symbol {}",
                    t.write
                )));
            }
            if let Next::State(s) = t.next {
                if s >= states {
                    return Err(Error::Machine(format!(
                        "entry {i} jumps to missing state {s}"
                    )));
                }
            }
        }
        Ok(Self {
            states,
            start,
            table,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn transition(&self, state: usize, symbol: u8) -> Transition {
        self.table[2 * state + usize::from(symbol)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MachineRun {
    pub halted: bool,
    pub steps: u64,
}

/// Two-way infinite binary tape, blank = 0.
struct Tape {
    cells: Vec<u8>,
    origin: usize,
}

impl Tape {
    fn new() -> Self {
        Self {
            cells: vec![0; 64],
            origin: 32,
        }
    }

    fn slot(&mut self, pos: i64) -> &mut u8 {
        let mut idx = self.origin as i64 + pos;
        if idx < 0 {
            let grow = self.cells.len().max((-idx) as usize);
            self.cells.splice(0..0, std::iter::repeat_n(0, grow));
            self.origin += grow;
            idx += grow as i64;
        }
        let idx = idx as usize;
        if idx >= self.cells.len() {
            let new_len = (self.cells.len() * 2).max(idx + 1);
            self.cells.resize(new_len, 0);
        }
        &mut self.cells[idx]
    }
}

/// Runs `machine` from its start state on a blank tape for at most
/// `budget` steps. The halting transition counts as a step.
pub fn run_machine(machine: &ToyMachine, budget: u64) -> MachineRun {
    let mut tape = Tape::new();
    let mut head = 0i64;
    let mut state = machine.start;
    for step in 1..=budget {
        let cell = tape.slot(head);
        let t = machine.transition(state, *cell);
        *cell = t.write;
        head += match t.movement {
            Move::Left => -1,
            Move::Right => 1,
        };
        match t.next {
            Next::Halt => {
                return MachineRun {
                    halted: true,
                    steps: step,
                }
            }
            Next::State(s) => state = s,
        }
    }
    MachineRun {
        halted: false,
        steps: budget,
    }
}

/// Identifier of the machine-index scheme implemented by [`decode_machine`].
pub const ENCODING_V1: &str = "v1";

/// Widest index accepted by the encoding.
pub const ENCODING_MAX_N: u32 = 30;

fn next_field_bits(states: usize) -> u32 {
    usize::BITS - states.leading_zeros()
}

fn layout_bits(states: usize) -> u32 {
    2 * states as u32 * (2 + next_field_bits(states))
}

/// Number of machine states the `v1` layout affords with `n` index bits:
/// the largest `S ≥ 1` with `2·S·(2 + ⌈log₂(S+1)⌉) ≤ n`, and 1 when even a
/// single state does not fit.
pub fn encoding_states(n: u32) -> usize {
    let mut s = 1;
    while layout_bits(s + 1) <= n {
        s += 1;
    }
    s
}

/// Decodes index `x ∈ Σⁿ` into a machine under layout `v1`.
///
/// With `S = encoding_states(n)` and field width `w = 2 + ⌈log₂(S+1)⌉`, the
/// transition for `(state, symbol)` sits at bits `[k·w, (k+1)·w)` of `x`
/// (least significant first) with `k = 2·state + symbol`:
///
/// - bit 0: symbol to write
/// - bit 1: move, 0 = left, 1 = right
/// - remaining bits: next state `v`, where `v = 0` means HALT,
///   `1 ≤ v ≤ S` means state `v - 1`, and `v > S` means HALT.
///
/// Bits past `n` read as zero, so fields the index cannot reach decode to
/// HALT, and bits of `x` past the layout are ignored. Index 0 decodes to
/// the machine whose first transition halts.
pub fn decode_machine(x: u64, n: u32) -> Result<ToyMachine> {
    if n > ENCODING_MAX_N {
        return Err(Error::Domain(format!(
            "machine index width {n} exceeds {ENCODING_MAX_N}"
        )));
    }
    if n < 64 && x >> n != 0 {
        return Err(Error::Domain(format!(
            "machine index {x} does not fit in {n} bits"
        )));
    }
    let states = encoding_states(n);
    let next_bits = next_field_bits(states);
    let width = 2 + next_bits;
    let table = (0..2 * states)
        .map(|k| {
            let field = x.checked_shr(k as u32 * width).unwrap_or(0) & ((1u64 << width) - 1);
            let v = (field >> 2) as usize;
            Transition {
                write: (field & 1) as u8,
                movement: if field >> 1 & 1 == 0 {
                    Move::Left
                } else {
                    Move::Right
                },
                next: if v == 0 || v > states {
                    Next::Halt
                } else {
                    Next::State(v - 1)
                },
            }
        })
        .collect();
    ToyMachine::new(states, 0, table)
}

/// `h[x] = 1` iff machine `x` halts on a blank tape within `budget` steps.
pub fn build_halting_table(n: u32, budget: u64) -> Result<Vec<u8>> {
    if n > ENCODING_MAX_N {
        return Err(Error::Domain(format!("halting table width {n} too large")));
    }
    (0..1u64 << n)
        .into_par_iter()
        .map(|x| Ok(u8::from(run_machine(&decode_machine(x, n)?, budget).halted)))
        .collect()
}

/// `{ "n", "budget", "encoding": "v1", "h": "<0/1 string>" }`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltingTableFile {
    pub n: u32,
    pub budget: u64,
    pub encoding: String,
    pub h: String,
}

impl HaltingTableFile {
    pub fn new(n: u32, budget: u64, h: &[u8]) -> Self {
        Self {
            n,
            budget,
            encoding: ENCODING_V1.to_string(),
            h: bits_to_string(h),
        }
    }
}

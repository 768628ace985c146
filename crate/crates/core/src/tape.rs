//! Reverse-mode scalars recorded on a thread-local tape.
//!
//! Usage pattern: [`Tape::reset`], create inputs with [`Var::input`], run the
//! computation generically with `T = Var`, then call [`Tape::gradient`] with
//! output seeds. A `Var` is only meaningful until the next reset on the same
//! thread.

use std::cell::RefCell;


use crate::ad::{impl_ad_scalar, AdCore};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

thread_local! {
    static TAPE: RefCell<Vec<Node>> = const { RefCell::new(Vec::new()) };
}

fn push(node: Node) -> u32 {
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        let idx = t.len();
        assert!(idx < NONE as usize, "tape overflow");
        t.push(node);
        idx as u32
    })
}

/// Scalar whose arithmetic is recorded for a reverse sweep.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    val: f64,
    idx: u32,
}

impl Var {
    /// Registers an independent variable on the current tape.
    pub fn input(val: f64) -> Var {
        let idx = push(Node { parents: [NONE, NONE], partials: [0.0, 0.0] });
        Var { val, idx }
    }

    pub fn constant(val: f64) -> Var {
        Var { val, idx: NONE }
    }

    pub fn is_constant(&self) -> bool {
        self.idx == NONE
    }
}

impl AdCore for Var {
    #[inline(always)]
    fn val(self) -> f64 {
        self.val
    }
    #[inline(always)]
    fn constant(v: f64) -> Self {
        Var { val: v, idx: NONE }
    }
    #[inline]
    fn unary(self, v: f64, d: f64) -> Self {
        if self.idx == NONE {
            return Var { val: v, idx: NONE };
        }
        let idx = push(Node { parents: [self.idx, NONE], partials: [d, 0.0] });
        Var { val: v, idx }
    }
    #[inline]
    fn binary(self, rhs: Self, v: f64, da: f64, db: f64) -> Self {
        match (self.idx == NONE, rhs.idx == NONE) {
            (true, true) => Var { val: v, idx: NONE },
            (false, true) => self.unary(v, da),
            (true, false) => rhs.unary(v, db),
            (false, false) => {
                let idx = push(Node { parents: [self.idx, rhs.idx], partials: [da, db] });
                Var { val: v, idx }
            }
        }
    }
}

impl_ad_scalar!(Var);

/// Handle to the thread-local tape.
pub struct Tape;

/// Adjoint values of every recorded node after a reverse sweep.
pub struct Adjoints(Vec<f64>);

impl Adjoints {
    /// Sensitivity of the seeded output combination with respect to `v`.
    pub fn wrt(&self, v: &Var) -> f64 {
        if v.idx == NONE {
            0.0
        } else {
            self.0[v.idx as usize]
        }
    }
}

impl Tape {
    /// Drops all recorded nodes (capacity is kept).
    pub fn reset() {
        TAPE.with(|t| t.borrow_mut().clear());
    }

    pub fn len() -> usize {
        TAPE.with(|t| t.borrow().len())
    }

    /// Reverse sweep for `Σ seeds[k]·outputs[k]`.
    pub fn gradient(outputs: &[Var], seeds: &[f64]) -> Adjoints {
        assert_eq!(outputs.len(), seeds.len());
        TAPE.with(|t| {
            let t = t.borrow();
            let mut adj = vec![0.0; t.len()];
            for (o, s) in outputs.iter().zip(seeds) {
                if o.idx != NONE {
                    adj[o.idx as usize] += s;
                }
            }
            for k in (0..t.len()).rev() {
                let a = adj[k];
                if a == 0.0 {
                    continue;
                }
                let node = t[k];
                for p in 0..2 {
                    let parent = node.parents[p];
                    if parent != NONE {
                        adj[parent as usize] += a * node.partials[p];
                    }
                }
            }
            Adjoints(adj)
        })
    }
}

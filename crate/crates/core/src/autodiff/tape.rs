use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;
use crate::math;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
}

/// Reverse-mode recording tape.
///
/// Every operation on a [`Var`] appends one node holding the indices of its
/// (at most two) operands and the local partial derivatives. [`Tape::gradient`]
/// sweeps the nodes backwards once.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    value: f64,
}

impl core::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Var#{}({})", self.index, self.value)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, parents: [usize; 2], partials: [f64; 2], value: f64) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { parents, partials });
        Var { tape: self, index: nodes.len() - 1, value }
    }

    /// A new independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        self.push([NONE, NONE], [0.0, 0.0], value)
    }

    /// Independent variables for every entry of `values`, in order.
    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    /// Adjoints of `output` with respect to every node on the tape, indexed by
    /// node. Leaves created first by [`Tape::vars`] therefore occupy the
    /// leading entries.
    pub fn gradient(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        adj[output.index] = 1.0;
        for i in (0..=output.index).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = nodes[i];
            for k in 0..2 {
                let p = node.parents[k];
                if p != NONE {
                    adj[p] += a * node.partials[k];
                }
            }
        }
        adj
    }
}

impl<'t> Var<'t> {
    pub fn index(&self) -> usize {
        self.index
    }

    fn unary(self, value: f64, partial: f64) -> Self {
        self.tape.push([self.index, NONE], [partial, 0.0], value)
    }

    fn binary(self, rhs: Self, value: f64, da: f64, db: f64) -> Self {
        self.tape.push([self.index, rhs.index], [da, db], value)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let q = self.value / rhs.value;
        self.binary(rhs, q, inv, -q * inv)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(&self) -> f64 {
        self.value
    }

    fn constant_like(&self, c: f64) -> Self {
        self.tape.var(c)
    }

    fn tanh(self) -> Self {
        let t = math::tanh(self.value);
        self.unary(t, 1.0 - t * t)
    }

    fn exp(self) -> Self {
        let e = math::exp(self.value);
        self.unary(e, e)
    }

    fn max0(self) -> Self {
        if self.value > 0.0 {
            self.unary(self.value, 1.0)
        } else {
            self.unary(0.0, 0.0)
        }
    }

    fn min0(self) -> Self {
        if self.value < 0.0 {
            self.unary(self.value, 1.0)
        } else {
            self.unary(0.0, 0.0)
        }
    }
}

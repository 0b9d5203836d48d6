use std::cell::{Cell, RefCell};
use std::rc::Rc;

use crate::tensor::Tensor;

/// Maps the gradient of a node's output to gradients of its inputs. The mask
/// says which inputs need one; entries for the others may be `None`.
pub(crate) type BackwardFn = Box<dyn Fn(&Tensor, &[bool]) -> Vec<Option<Tensor>>>;

struct Node {
    value: Rc<Tensor>,
    inputs: Vec<usize>,
    requires_grad: bool,
    backward: Option<BackwardFn>,
}

/// Records one forward computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the tape is topologically
/// sorted by construction.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    gap_clamps: Rc<Cell<usize>>,
    root_warnings: Rc<Cell<usize>>,
}

/// Shared warning counter that backward rules can bump.
pub(crate) struct Counter(Rc<Cell<usize>>);

impl Counter {
    pub(crate) fn add(&self, count: usize) {
        self.0.set(self.0.get() + count);
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{} {:?}", self.id, self.value())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// A differentiable input.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.insert(value, Vec::new(), true, None)
    }

    /// An input that never receives a gradient.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.insert(value, Vec::new(), false, None)
    }

    pub(crate) fn op(&self, value: Tensor, inputs: &[Var<'_>], backward: BackwardFn) -> Var<'_> {
        let ids: Vec<usize> = inputs.iter().map(|v| v.id).collect();
        let requires_grad = {
            let nodes = self.nodes.borrow();
            ids.iter().any(|&i| nodes[i].requires_grad)
        };
        let backward = requires_grad.then_some(backward);
        self.insert(value, ids, requires_grad, backward)
    }

    fn insert(&self, value: Tensor, inputs: Vec<usize>, requires_grad: bool, backward: Option<BackwardFn>) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value: Rc::new(value), inputs, requires_grad, backward });
        Var { tape: self, id: nodes.len() - 1 }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Eigenvalue gaps that had to be floored in eigendecomposition backward
    /// passes.
    pub fn gap_clamps(&self) -> usize {
        self.gap_clamps.get()
    }

    /// Roots whose gradient was dropped because they were (nearly) multiple.
    pub fn root_warnings(&self) -> usize {
        self.root_warnings.get()
    }

    pub(crate) fn gap_clamp_counter(&self) -> Counter {
        Counter(self.gap_clamps.clone())
    }

    pub(crate) fn root_warning_counter(&self) -> Counter {
        Counter(self.root_warnings.clone())
    }

    /// Reverse sweep from a scalar output.
    pub fn backward(&self, output: Var<'_>) -> Gradients {
        assert!(std::ptr::eq(output.tape, self), "variable belongs to another tape");
        let nodes = self.nodes.borrow();
        let root = &nodes[output.id];
        assert_eq!(root.value.len(), 1, "backward needs a scalar output, got shape {:?}", root.value.shape());
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[output.id] = Some(Tensor::full(root.value.shape(), 1.0));
        for id in (0..=output.id).rev() {
            let node = &nodes[id];
            let Some(backward) = &node.backward else { continue };
            let Some(g) = grads[id].take() else { continue };
            let mask: Vec<bool> = node.inputs.iter().map(|&i| nodes[i].requires_grad).collect();
            let input_grads = backward(&g, &mask);
            debug_assert_eq!(input_grads.len(), node.inputs.len());
            for ((&input, grad), &need) in node.inputs.iter().zip(input_grads).zip(&mask) {
                let (Some(grad), true) = (grad, need) else { continue };
                match &mut grads[input] {
                    Some(acc) => acc.add_assign(&grad),
                    slot @ None => *slot = Some(grad),
                }
            }
            grads[id] = Some(g);
        }
        Gradients { grads }
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> Rc<Tensor> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn item(&self) -> f64 {
        self.value().item()
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }
}

/// Gradients of a scalar with respect to every node of a tape.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads[var.id].as_ref()
    }

    /// Gradient of `var`, or zeros of its shape when it did not influence the
    /// output.
    pub fn get_or_zeros(&self, var: Var<'_>) -> Tensor {
        match self.get(var) {
            Some(g) => g.clone(),
            None => Tensor::zeros(&var.shape()),
        }
    }
}

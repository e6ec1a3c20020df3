"""Matrix semantics: judgements as tensor networks over qubit-sized complex
Hilbert spaces, with equality decided up to a nonzero global scalar.

Conventions:
  * every atomic type gets the same dimension (default 2);
  * a Green spider with n inputs and m outputs is the tensor with entry 1 at
    all-zeros, e^{i*phase} at all-ones, and 0 elsewhere; Red spiders are the
    Hadamard conjugates; H is the standard real Hadamard matrix;
  * a variable's two occurrences share a contracted wire;
  * input positions (context entries and the right-hand sides of soup
    connections) enter the network conjugated, output positions plainly, so
    the {a : b} == {b* : a*} congruence is value-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .terms import (
    Declared, Dimension, GREEN, Hadamard, ONE, RED, ScalarOne, Spider, Star,
    Tensor, Term, TAtom, TDual, TTensor, TUnit, TypeExpr, UNIT, Var,
    negate_type, type_dimension,
)
from .sequent import Judgement


def type_leaves(t: TypeExpr) -> list:
    """Flatten a type into its atomic (non-unit) leaves, left to right."""
    if isinstance(t, (TAtom, TDual)):
        return [t]
    if isinstance(t, TUnit):
        return []
    if isinstance(t, TTensor):
        return type_leaves(t.left) + type_leaves(t.right)
    raise TypeError(f"not a type: {t!r}")


def hadamard_matrix() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def green_spider_state(n_in: int, n_out: int, phase_rad: float,
                       dim: int = 2) -> np.ndarray:
    legs = n_in + n_out
    a = np.zeros((dim,) * legs if legs else (), dtype=complex)
    if legs == 0:
        # degenerate 0-0 spider: the scalar 1 + e^{i theta}
        return np.asarray(1 + np.exp(1j * phase_rad), dtype=complex)
    a[(0,) * legs] += 1
    a[(dim - 1,) * legs] += np.exp(1j * phase_rad)
    return a


def spider_state(sp: Spider, dim: int = 2) -> np.ndarray:
    a = green_spider_state(sp.n_in, sp.n_out, sp.phase.radians(), dim)
    if sp.color == RED:
        h = hadamard_matrix()
        for axis in range(a.ndim):
            a = np.tensordot(a, h, axes=([axis], [0]))
            a = np.moveaxis(a, -1, axis)
    return a


def map_as_state(m: np.ndarray, n_in: int, n_out: int,
                 dim: int = 2) -> np.ndarray:
    """Bend a linear map (dim^n_out x dim^n_in matrix) into the state living
    at type (A^{x n})* (x) A^{x m}: axes are the inputs reversed, then the
    outputs."""
    a = np.asarray(m, dtype=complex).reshape((dim,) * n_out + (dim,) * n_in)
    # current axes: out..., in...; want reversed(in)..., out...
    out_axes = list(range(n_out))
    in_axes = list(range(n_out, n_out + n_in))
    return np.transpose(a, axes=list(reversed(in_axes)) + out_axes)


@dataclass
class Interpretation:
    atom_dim: int = 2
    constants: dict = field(default_factory=dict)  # name -> leaf-state array

    def dim(self, t: TypeExpr) -> int:
        return type_dimension(t, self.atom_dim)


DEFAULT = Interpretation()


class _Node:
    __slots__ = ("array", "axes")

    def __init__(self, array: np.ndarray, axes: list):
        # contract any label shared between two of this node's own axes
        while True:
            dup = None
            for i, lab in enumerate(axes):
                if lab in axes[i + 1:]:
                    dup = (i, i + 1 + axes[i + 1:].index(lab))
                    break
            if dup is None:
                break
            i, jx = dup
            array = np.trace(array, axis1=i, axis2=jx)
            axes = [lab for k, lab in enumerate(axes) if k not in (i, jx)]
        self.array = array
        self.axes = axes


def _fragment(t: Term, ty: TypeExpr, interp: Interpretation,
              slot_labels: list) -> _Node:
    """Build the node for a term at a type.  `slot_labels` are the labels for
    the type's leaf axes (consumed left to right)."""
    arrays = []
    axes = []

    def build(t: Term, ty: TypeExpr, labels: list) -> None:
        d = interp.dim(ty)
        leaves = type_leaves(ty)
        assert len(labels) == len(leaves)
        if isinstance(t, Var) or (isinstance(t, Star)
                                  and isinstance(t.inner, Var)):
            name = t.name if isinstance(t, Var) else t.inner.name
            if leaves:
                dims = [interp.dim(l) for l in leaves]
                if isinstance(t, Star):
                    # the wire's canonical leaf order is that of the
                    # unstarred type; star reverses tensor factors, so a
                    # starred occurrence attaches its leaves in reverse
                    arr = np.eye(d, dtype=complex).reshape(
                        list(reversed(dims)) + [d])
                    arr = np.transpose(
                        arr, axes=list(reversed(range(len(dims)))) + [len(dims)])
                else:
                    arr = np.eye(d, dtype=complex).reshape(dims + [d])
                arrays.append(arr)
                axes.append(labels + [("bond", name)])
            else:
                # unit-typed variable: wire of dimension 1, contributes 1
                arrays.append(np.asarray(1.0 + 0j))
                axes.append([])
            return
        if isinstance(t, Tensor):
            if isinstance(ty, TTensor):
                nl = len(type_leaves(ty.left))
                build(t.left, ty.left, labels[:nl])
                build(t.right, ty.right, labels[nl:])
                return
            if isinstance(ty, TUnit):
                # scalar product: both factors are scalars at I
                build(t.left, UNIT, [])
                build(t.right, UNIT, [])
                return
            raise TypeError(f"tensor term at non-tensor type {ty}")
        # constants
        arrays.append(_constant_state(t, ty, interp))
        axes.append(list(labels))

    build(t, ty, list(slot_labels))
    array = arrays[0]
    labs = list(axes[0])
    for arr, ax in zip(arrays[1:], axes[1:]):
        array = np.tensordot(array, arr, axes=0)
        labs += ax
    return _Node(np.asarray(array, dtype=complex), labs)


def _constant_state(t: Term, ty: TypeExpr, interp: Interpretation) -> np.ndarray:
    if isinstance(t, ScalarOne):
        return np.asarray(1.0 + 0j)
    if isinstance(t, Dimension):
        d = interp.dim(t.of_type)
        return np.asarray(complex(math.sqrt(d) if t.sqrt else d))
    if isinstance(t, Spider):
        leaves = type_leaves(ty)
        if len(leaves) != t.n_in + t.n_out:
            raise ValueError(
                f"spider {t} used at type {ty} with {len(leaves)} wire(s)")
        return spider_state(t, interp.atom_dim)
    if isinstance(t, Hadamard):
        if len(type_leaves(ty)) != 2:
            raise ValueError(f"H used at type {ty}")
        return map_as_state(hadamard_matrix(), 1, 1, interp.atom_dim)
    if isinstance(t, Declared):
        if t.name not in interp.constants:
            raise KeyError(f"no matrix for constant #{t.name}")
        a = np.asarray(interp.constants[t.name], dtype=complex)
        if a.size != interp.dim(ty):
            raise ValueError(f"#{t.name}: matrix size {a.size} does not "
                             f"match type {ty}")
        dims = [interp.dim(l) for l in type_leaves(ty)]
        return a.reshape(dims) if dims else a.reshape(())
    if isinstance(t, Star):
        inner = _constant_state(t.inner, negate_type(ty), interp)
        return np.conj(np.transpose(inner, axes=list(reversed(range(inner.ndim)))))
    raise TypeError(f"cannot interpret term {t} at {ty}")


def _contract_all(nodes: list) -> _Node:
    nodes = list(nodes)
    while len(nodes) > 1:
        best = None
        for i in range(len(nodes)):
            for k in range(i + 1, len(nodes)):
                shared = set(nodes[i].axes) & set(nodes[k].axes)
                if shared:
                    cost = nodes[i].array.size * nodes[k].array.size
                    if best is None or cost < best[0]:
                        best = (cost, i, k, shared)
        if best is None:
            # disjoint components: outer product
            a, b = nodes[0], nodes[1]
            merged = _Node(np.tensordot(a.array, b.array, axes=0),
                           a.axes + b.axes)
            nodes = [merged] + nodes[2:]
            continue
        _, i, k, shared = best
        a, b = nodes[i], nodes[k]
        ia = [a.axes.index(s) for s in shared]
        ib = [b.axes.index(s) for s in shared]
        arr = np.tensordot(a.array, b.array, axes=(ia, ib))
        labs = ([lab for n, lab in enumerate(a.axes) if n not in ia]
                + [lab for n, lab in enumerate(b.axes) if n not in ib])
        merged = _Node(arr, labs)
        nodes = [n for idx, n in enumerate(nodes) if idx not in (i, k)]
        nodes.append(merged)
    return nodes[0] if nodes else _Node(np.asarray(1.0 + 0j), [])


def interpret(j: Judgement, interp: Interpretation = None) -> np.ndarray:
    """The linear map from the context's tensor product to the conclusion
    type, as a (conclusion-dim x context-dim) matrix."""
    interp = interp or DEFAULT
    nodes = []
    out_labels = []
    in_labels = []
    for idx, leaf in enumerate(type_leaves(j.conclusion.type)):
        out_labels.append(("out", idx))
    nodes.append(_fragment(j.conclusion.term, j.conclusion.type, interp,
                           out_labels))
    leaf_no = 0
    for e in j.context:
        labels = []
        for leaf in type_leaves(e.type):
            labels.append(("in", leaf_no))
            in_labels.append(("in", leaf_no))
            leaf_no += 1
        node = _fragment(e.term, e.type, interp, labels)
        node.array = np.conj(node.array)
        nodes.append(node)
    for ci, conn in enumerate(j.soup):
        pair = [("pair", ci, k) for k in range(len(type_leaves(conn.type)))]
        nodes.append(_fragment(conn.left, conn.type, interp, pair))
        right = _fragment(conn.right, conn.type, interp, pair)
        right.array = np.conj(right.array)
        nodes.append(right)
    result = _contract_all(nodes)
    order = [result.axes.index(lab) for lab in out_labels + in_labels]
    if sorted(result.axes, key=str) != sorted(out_labels + in_labels, key=str):
        leftover = [lab for lab in result.axes
                    if lab not in out_labels + in_labels]
        raise ValueError(f"uncontracted axes remain: {leftover}")
    arr = np.transpose(result.array, axes=order) if order else result.array
    d_out = interp.dim(j.conclusion.type)
    d_in = 1
    for e in j.context:
        d_in *= interp.dim(e.type)
    return arr.reshape(d_out, d_in)


def equal_up_to_scalar(m1: np.ndarray, m2: np.ndarray,
                       tol: float = 1e-9) -> bool:
    m1 = np.asarray(m1, dtype=complex)
    m2 = np.asarray(m2, dtype=complex)
    if m1.shape != m2.shape:
        raise ValueError(f"shape mismatch: {m1.shape} vs {m2.shape}")
    lam = scalar_ratio(m1, m2, tol)
    return lam is not None


def scalar_ratio(m1: np.ndarray, m2: np.ndarray, tol: float = 1e-9):
    """The nonzero lambda with m2 == lambda * m1, or None."""
    m1 = np.asarray(m1, dtype=complex)
    m2 = np.asarray(m2, dtype=complex)
    scale = max(np.max(np.abs(m1)), np.max(np.abs(m2)), 1.0)
    idx = np.unravel_index(np.argmax(np.abs(m1)), m1.shape) if m1.size else ()
    if m1.size == 0 or abs(m1[idx]) <= tol * scale:
        # m1 is (numerically) zero: equal only if m2 is too, with lambda 1
        if np.max(np.abs(m2), initial=0.0) <= tol * scale:
            return 1.0 + 0j
        return None
    lam = m2[idx] / m1[idx]
    if abs(lam) <= tol:
        return None
    if np.allclose(m2, lam * m1, atol=tol * scale * max(1.0, abs(lam))):
        return lam
    return None


# ---------------------------------------------------------------------------
# Fixture helpers (the worked matrix examples)
# ---------------------------------------------------------------------------


def delta_matrix() -> np.ndarray:
    """Green copying map as a 4x2 matrix: |0> -> |00>, |1> -> |11>."""
    g = green_spider_state(1, 2, 0.0)
    return g.reshape(2, 4).T  # axes were (in, out, out)


def epsilon_matrix() -> np.ndarray:
    """Green deleting map as a 1x2 matrix: |0>, |1> -> 1."""
    return green_spider_state(1, 0, 0.0).reshape(1, 2)


def delta_red_matrix() -> np.ndarray:
    sp = spider_state(Spider(RED, 1, 2))
    return sp.reshape(2, 4).T


def epsilon_red_matrix() -> np.ndarray:
    return spider_state(Spider(RED, 1, 0)).reshape(1, 2)


def plus_state(phase_rad: float) -> np.ndarray:
    return np.array([1.0, np.exp(1j * phase_rad)], dtype=complex)


def fuse_states(alpha, beta, interp: Interpretation = None) -> np.ndarray:
    """delta-dagger applied to |+_alpha> (x) |+_beta>."""
    ra = alpha.radians() if hasattr(alpha, "radians") else float(alpha)
    rb = beta.radians() if hasattr(beta, "radians") else float(beta)
    pair = np.kron(plus_state(ra), plus_state(rb))
    return delta_matrix().conj().T @ pair

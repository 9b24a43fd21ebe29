"""Reverse-mode autodiff over a closed set of matrix primitives.

A :class:`Tape` records primitive applications in topological order; each
node stores its value and the vector-Jacobian products towards its
parents. ``backward`` walks the node list in reverse, accumulating
gradients in a fixed order so results are bit-reproducible.

Scalars are 0-d float64 arrays; matrices are 2-D float64 arrays. Shape
errors are raised at tape-build time. The relu subgradient at 0 is 0.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tape", "Node", "grad_check"]


class Node:
    """One recorded primitive application (or leaf) on a tape."""

    __slots__ = ("idx", "value", "vjps", "name")

    def __init__(self, idx, value, vjps, name=None):
        self.idx = idx
        self.value = value
        self.vjps = vjps  # list of (parent Node, fn: grad -> parent grad)
        self.name = name

    @property
    def shape(self):
        return self.value.shape


def _mat(value, what):
    value = np.asarray(value, dtype=np.float64)
    if value.ndim != 2:
        raise ValueError(f"{what} must be a 2-D matrix, got shape {value.shape}")
    return value


class Tape:
    """Recording context for one forward pass and one backward pass."""

    def __init__(self):
        self.nodes = []

    def _emit(self, value, vjps, name=None):
        node = Node(len(self.nodes), value, vjps, name=name)
        self.nodes.append(node)
        return node

    def leaf(self, value, name=None):
        """Register an input; named leaves receive entries in Gradients."""
        value = np.asarray(value, dtype=np.float64)
        return self._emit(value, [], name=name)

    def constant(self, value):
        return self.leaf(value, name=None)

    # --- primitives -------------------------------------------------

    def matmul(self, a, b):
        av, bv = _mat(a.value, "matmul lhs"), _mat(b.value, "matmul rhs")
        if av.shape[1] != bv.shape[0]:
            raise ValueError(f"matmul dimension mismatch: {av.shape} x {bv.shape}")
        return self._emit(
            av @ bv,
            [(a, lambda g, bv=bv: g @ bv.T), (b, lambda g, av=av: av.T @ g)],
        )

    def add(self, a, b):
        if a.value.shape != b.value.shape:
            raise ValueError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")
        return self._emit(a.value + b.value, [(a, lambda g: g), (b, lambda g: g)])

    def add_bias(self, x, b):
        """x (R x N) plus a column bias b (R x 1), broadcast over columns."""
        xv, bv = _mat(x.value, "add_bias input"), _mat(b.value, "bias")
        if bv.shape != (xv.shape[0], 1):
            raise ValueError(f"bias must be {xv.shape[0]}x1, got {bv.shape}")
        return self._emit(
            xv + bv,
            [(x, lambda g: g), (b, lambda g: g.sum(axis=1, keepdims=True))],
        )

    def sub(self, a, b):
        if a.value.shape != b.value.shape:
            raise ValueError(f"sub shape mismatch: {a.value.shape} vs {b.value.shape}")
        return self._emit(a.value - b.value, [(a, lambda g: g), (b, lambda g: -g)])

    def mul(self, a, b):
        """Elementwise product of same-shape matrices."""
        if a.value.shape != b.value.shape:
            raise ValueError(f"mul shape mismatch: {a.value.shape} vs {b.value.shape}")
        av, bv = a.value, b.value
        return self._emit(av * bv, [(a, lambda g: g * bv), (b, lambda g: g * av)])

    def smul(self, a, c):
        """Multiply by a python scalar constant."""
        c = float(c)
        return self._emit(a.value * c, [(a, lambda g: g * c)])

    def relu(self, a):
        av = a.value
        mask = av > 0
        return self._emit(np.where(mask, av, 0.0), [(a, lambda g: g * mask)])

    def scale_cols(self, x, a):
        """Scale column j of x (R x N) by a[0, j]; a has shape 1 x N."""
        xv, av = _mat(x.value, "scale_cols input"), _mat(a.value, "scale_cols weights")
        if av.shape != (1, xv.shape[1]):
            raise ValueError(f"weights must be 1x{xv.shape[1]}, got {av.shape}")
        return self._emit(
            xv * av,
            [
                (x, lambda g: g * av),
                (a, lambda g: (g * xv).sum(axis=0, keepdims=True)),
            ],
        )

    def col_sums(self, x):
        """Sum over rows, returning a 1 x N matrix."""
        xv = _mat(x.value, "col_sums input")
        return self._emit(
            xv.sum(axis=0, keepdims=True),
            [(x, lambda g: np.broadcast_to(g, xv.shape).copy())],
        )

    def vstack(self, parts):
        """Stack 1 x N rows into an M x N matrix."""
        if not parts:
            raise ValueError("vstack requires at least one row")
        n = parts[0].value.shape[1]
        for p in parts:
            if p.value.shape != (1, n):
                raise ValueError("vstack parts must all be 1 x N")
        vjps = [
            (p, lambda g, i=i: g[i : i + 1, :]) for i, p in enumerate(parts)
        ]
        return self._emit(np.vstack([p.value for p in parts]), vjps)

    def row(self, x, i):
        xv = _mat(x.value, "row input")
        if not 0 <= i < xv.shape[0]:
            raise ValueError(f"row index {i} out of range for {xv.shape}")

        def vjp(g, i=i, shape=xv.shape):
            out = np.zeros(shape)
            out[i, :] = g[0, :]
            return out

        return self._emit(xv[i : i + 1, :].copy(), [(x, vjp)])

    def select_cols(self, x, idx):
        xv = _mat(x.value, "select_cols input")
        idx = list(idx)

        def vjp(g, idx=idx, shape=xv.shape):
            out = np.zeros(shape)
            for j, src in enumerate(idx):
                out[:, src] += g[:, j]
            return out

        return self._emit(xv[:, idx].copy(), [(x, vjp)])

    def softmax_cols(self, s):
        """Column-wise softmax of an M x N score matrix (max-subtracted)."""
        sv = _mat(s.value, "softmax input")
        shifted = sv - sv.max(axis=0, keepdims=True)
        e = np.exp(shifted)
        a = e / e.sum(axis=0, keepdims=True)

        def vjp(g, a=a):
            return a * (g - (g * a).sum(axis=0, keepdims=True))

        return self._emit(a, [(s, vjp)])

    def zero_diag(self, x):
        """Zero the diagonal; masked entries get exactly zero gradient."""
        xv = _mat(x.value, "zero_diag input")
        if xv.shape[0] != xv.shape[1]:
            raise ValueError("zero_diag requires a square matrix")
        out = xv.copy()
        np.fill_diagonal(out, 0.0)

        def vjp(g):
            gm = g.copy()
            np.fill_diagonal(gm, 0.0)
            return gm

        return self._emit(out, [(x, vjp)])

    def frob_sq(self, x):
        xv = np.asarray(x.value)
        return self._emit(
            np.asarray(np.sum(xv * xv)), [(x, lambda g: 2.0 * float(g) * xv)]
        )

    def abs_sum(self, x):
        xv = np.asarray(x.value)
        return self._emit(
            np.asarray(np.sum(np.abs(xv))),
            [(x, lambda g: float(g) * np.sign(xv))],
        )

    def add_scalar(self, a, b):
        if a.value.shape != () or b.value.shape != ():
            raise ValueError("add_scalar requires scalar nodes")
        return self._emit(a.value + b.value, [(a, lambda g: g), (b, lambda g: g)])

    def sum_scalars(self, terms):
        if not terms:
            raise ValueError("sum_scalars requires at least one term")
        out = terms[0]
        for t in terms[1:]:
            out = self.add_scalar(out, t)
        return out

    # --- backward ---------------------------------------------------

    def backward(self, loss):
        """Gradients of a scalar loss node w.r.t. every named leaf."""
        if loss.value.shape != ():
            raise ValueError("backward requires a scalar loss node")
        grads = {}  # node idx -> accumulated gradient
        grads[loss.idx] = np.asarray(1.0)
        for node in reversed(self.nodes[: loss.idx + 1]):
            g = grads.pop(node.idx, None)
            if g is None:
                continue
            for parent, vjp in node.vjps:
                pg = vjp(g)
                if parent.idx in grads:
                    grads[parent.idx] = grads[parent.idx] + pg
                else:
                    grads[parent.idx] = pg
            if node.name is not None:
                grads[node.idx] = g  # retain for collection
        out = {}
        for node in self.nodes:
            if node.name is not None:
                g = grads.get(node.idx)
                if g is None:
                    g = np.zeros_like(np.asarray(node.value, dtype=np.float64))
                out[node.name] = np.asarray(g, dtype=np.float64)
        return out


def grad_check(build, params, step=1e-6, corrupt=False):
    """Compare analytic gradients with central finite differences.

    ``build(tape, leaves)`` constructs the scalar loss from a dict of
    named leaf nodes. Returns ``(max_rel_err, worst_param, worst_index)``
    with the relative error |a - n| / max(1, |a|, |n|) per entry.

    ``corrupt=True`` deliberately offsets one analytic gradient entry;
    it exists only so harnesses can confirm the check catches bad
    gradients.
    """
    if step <= 0:
        raise ValueError("step must be positive")

    def loss_value(p):
        tape = Tape()
        leaves = {k: tape.leaf(v, name=k) for k, v in p.items()}
        val = float(build(tape, leaves).value)
        if not np.isfinite(val):
            raise FloatingPointError("non-finite loss during finite differencing")
        return val

    tape = Tape()
    leaves = {k: tape.leaf(v, name=k) for k, v in params.items()}
    loss = build(tape, leaves)
    analytic = tape.backward(loss)
    if corrupt:
        first = sorted(analytic)[0]
        flat = analytic[first].reshape(-1)
        flat[0] += 1e-2

    worst = (0.0, None, None)
    for name in sorted(params):
        base = np.array(params[name], dtype=np.float64)
        it = np.nditer(base, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            saved = base[ix]
            perturbed = dict(params)
            work = base.copy()
            work[ix] = saved + step
            perturbed[name] = work
            try:
                up = loss_value(perturbed)
                work2 = base.copy()
                work2[ix] = saved - step
                perturbed[name] = work2
                down = loss_value(perturbed)
            except FloatingPointError:
                raise FloatingPointError(
                    f"non-finite loss perturbing {name}{ix}"
                ) from None
            numeric = (up - down) / (2.0 * step)
            a = float(np.asarray(analytic[name])[ix])
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if err > worst[0]:
                worst = (err, name, ix)
    return worst

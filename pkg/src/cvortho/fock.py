"""Truncated-Fock-space linear algebra: states, operators, heralded projections.

A single bosonic mode is represented on the number basis |0>, ..., |N-1>.
Multi-mode amplitudes are flattened mode-1-major, i.e. the flat index of
(n1, n2, ..., nk) is (...((n1 * N2 + n2) * N3 + n3)...) * Nk + nk, which is
exactly the ordering produced by ``numpy.kron``.

All containers are immutable: arrays are copied on construction and marked
read-only, so values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

__all__ = [
    "ZERO_NORM_TOL",
    "Truncation",
    "StateVector",
    "DensityMatrix",
    "ModeOperator",
    "TwoModeOperator",
    "JointState",
    "TruncationError",
    "HeraldImpossibleError",
    "fock_state",
    "coherent_state",
    "min_dim_for_coherent",
    "ladder_operators",
    "identity_op",
    "displacement_op",
    "beam_splitter_op",
    "tensor",
    "herald_project",
    "inner_product",
    "expectation",
    "fidelity",
    "unitarity_defect",
    "check_tail",
    "project_state",
    "project_density",
    "state_to_json",
    "state_from_json",
    "density_to_json",
    "density_from_json",
]

# Conditional states with norm below this are treated as impossible outcomes;
# below double-precision meaningfulness for normalized inputs.
ZERO_NORM_TOL = 1e-12

_HERMITICITY_TOL = 1e-12
_TRACE_TOL = 1e-10
_EIGENVALUE_FLOOR = -1e-10


class TruncationError(ValueError):
    """A state carries too much probability weight at the top basis level.

    Carries ``suggested_dim``, a dimension expected to be large enough.
    """

    def __init__(self, message: str, suggested_dim: int | None = None):
        super().__init__(message)
        self.suggested_dim = suggested_dim


class HeraldImpossibleError(ValueError):
    """The requested herald outcome has (numerically) zero probability."""


@dataclass(frozen=True)
class Truncation:
    """Fock-basis cutoff keeping levels |0> ... |dim-1>.

    ``tail_tol`` bounds the probability weight an admitted state may carry
    at the top retained level; operations that can push weight upward
    (displacement, photon addition) check it and fail loudly.
    """

    dim: int
    tail_tol: float = 1e-8

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"truncation dim must be an integer >= 2, got {self.dim!r}")
        if self.tail_tol < 0:
            raise ValueError(f"tail_tol must be >= 0, got {self.tail_tol!r}")


def _freeze(obj, name, arr):
    arr.flags.writeable = False
    object.__setattr__(obj, name, arr)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of one mode: complex amplitudes over the number basis.

    Not necessarily normalized; conditional states carry their norm as a
    success amplitude.  Use :meth:`normalized` before overlap comparisons.
    """

    amps: np.ndarray
    trunc: Truncation

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.trunc.dim:
            raise ValueError(
                f"amplitude count {amps.shape[0]} does not match truncation dim {self.trunc.dim}"
            )
        _freeze(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.trunc.dim

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def top_weight(self) -> float:
        """Probability weight at the top retained level, relative to the norm."""
        n2 = self.norm**2
        if n2 == 0.0:
            return 0.0
        return float(abs(self.amps[-1]) ** 2 / n2)

    def normalized(self) -> "StateVector":
        n = self.norm
        if n < ZERO_NORM_TOL:
            raise ValueError("cannot normalize a (numerically) zero state")
        return StateVector(self.amps / n, self.trunc)

    def to_density(self) -> "DensityMatrix":
        psi = self.normalized()
        return DensityMatrix(np.outer(psi.amps, psi.amps.conj()), self.trunc)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace matrix over the basis."""

    elems: np.ndarray
    trunc: Truncation

    def __post_init__(self):
        elems = np.array(self.elems, dtype=np.complex128)
        if elems.shape != (self.trunc.dim, self.trunc.dim):
            raise ValueError(
                f"matrix shape {elems.shape} does not match truncation dim {self.trunc.dim}"
            )
        herm_defect = float(np.max(np.abs(elems - elems.conj().T)))
        if herm_defect > _HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian (defect {herm_defect:.3e})")
        tr = complex(np.trace(elems))
        if abs(tr - 1.0) > _TRACE_TOL:
            raise ValueError(f"trace {tr:.12g} deviates from 1 beyond {_TRACE_TOL:g}")
        lo = float(np.min(np.linalg.eigvalsh(elems)))
        if lo < _EIGENVALUE_FLOOR:
            raise ValueError(f"matrix has negative eigenvalue {lo:.3e}")
        _freeze(self, "elems", elems)

    @property
    def dim(self) -> int:
        return self.trunc.dim


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """General complex matrix acting on one mode."""

    elems: np.ndarray
    trunc: Truncation

    def __post_init__(self):
        elems = np.array(self.elems, dtype=np.complex128)
        if elems.shape != (self.trunc.dim, self.trunc.dim):
            raise ValueError(
                f"matrix shape {elems.shape} does not match truncation dim {self.trunc.dim}"
            )
        _freeze(self, "elems", elems)

    @property
    def dim(self) -> int:
        return self.trunc.dim

    @property
    def dag(self) -> "ModeOperator":
        return ModeOperator(self.elems.conj().T, self.trunc)

    def apply(self, psi: StateVector) -> StateVector:
        """Apply to a state; the result is generally unnormalized."""
        _require_same_dim(self, psi)
        return StateVector(self.elems @ psi.amps, psi.trunc)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            _require_same_dim(self, other)
            return ModeOperator(self.elems @ other.elems, self.trunc)
        if isinstance(other, StateVector):
            return self.apply(other)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, ModeOperator):
            _require_same_dim(self, other)
            return ModeOperator(self.elems + other.elems, self.trunc)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, ModeOperator):
            _require_same_dim(self, other)
            return ModeOperator(self.elems - other.elems, self.trunc)
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, complex, np.number)):
            return ModeOperator(self.elems * scalar, self.trunc)
        return NotImplemented

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class JointState:
    """Multi-mode pure state, flattened mode-1-major."""

    amps: np.ndarray
    truncs: tuple

    def __post_init__(self):
        truncs = tuple(self.truncs)
        if len(truncs) < 2:
            raise ValueError("joint states need at least two modes")
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        total = math.prod(t.dim for t in truncs)
        if amps.shape[0] != total:
            raise ValueError(f"amplitude count {amps.shape[0]} does not match joint dim {total}")
        object.__setattr__(self, "truncs", truncs)
        _freeze(self, "amps", amps)

    @property
    def dims(self) -> tuple:
        return tuple(t.dim for t in self.truncs)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "JointState":
        n = self.norm
        if n < ZERO_NORM_TOL:
            raise ValueError("cannot normalize a (numerically) zero state")
        return JointState(self.amps / n, self.truncs)


@dataclass(frozen=True, eq=False)
class TwoModeOperator:
    """Matrix on the joint space of two modes (mode-1-major layout)."""

    elems: np.ndarray
    truncs: tuple

    def __post_init__(self):
        truncs = tuple(self.truncs)
        if len(truncs) != 2:
            raise ValueError("TwoModeOperator needs exactly two truncations")
        d = truncs[0].dim * truncs[1].dim
        elems = np.array(self.elems, dtype=np.complex128)
        if elems.shape != (d, d):
            raise ValueError(f"matrix shape {elems.shape} does not match joint dim {d}")
        object.__setattr__(self, "truncs", truncs)
        _freeze(self, "elems", elems)

    def apply(self, joint: JointState) -> JointState:
        """Apply to the first two modes of ``joint`` (remaining modes untouched)."""
        if joint.dims[:2] != (self.truncs[0].dim, self.truncs[1].dim):
            raise ValueError("leading mode dimensions do not match the operator")
        d12 = self.truncs[0].dim * self.truncs[1].dim
        block = joint.amps.reshape(d12, -1)
        return JointState((self.elems @ block).reshape(-1), joint.truncs)


def _require_same_dim(x, y):
    dx = x.trunc.dim if hasattr(x, "trunc") else x.dim
    dy = y.trunc.dim if hasattr(y, "trunc") else y.dim
    if dx != dy:
        raise ValueError(f"dimension mismatch: {dx} vs {dy}")


# ---------------------------------------------------------------------------
# constructors


def fock_state(n: int, trunc: Truncation) -> StateVector:
    """Number state |n>."""
    if not 0 <= n < trunc.dim:
        raise ValueError(f"level {n} outside the truncated basis 0..{trunc.dim - 1}")
    amps = np.zeros(trunc.dim, dtype=np.complex128)
    amps[n] = 1.0
    return StateVector(amps, trunc)


def min_dim_for_coherent(alpha: complex, tail_tol: float) -> int:
    """Smallest dim such that a coherent state fits under the tail guard.

    The returned N keeps the Poisson weight at and beyond level N-1 below
    ``tail_tol``, so the constructed state satisfies the admission invariant.
    """
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 2
    p = math.exp(-lam)
    cum = p
    m = 0
    while 1.0 - cum > tail_tol:
        m += 1
        p *= lam / m
        cum += p
        if m > 100000:
            raise ValueError(f"no finite truncation reaches tail_tol {tail_tol:g}")
    return max(m + 2, 2)


def coherent_state(alpha: complex, trunc: Truncation) -> StateVector:
    """Coherent state with amplitude ``alpha``, renormalized on the basis.

    Amplitudes follow the Poissonian closed form exp(-|a|^2/2) a^n / sqrt(n!).
    Raises :class:`TruncationError` when the truncation cannot hold the state.
    """
    needed = min_dim_for_coherent(alpha, trunc.tail_tol)
    if trunc.dim < needed:
        raise TruncationError(
            f"coherent amplitude |alpha|={abs(alpha):.4g} needs dim >= {needed} at "
            f"tail_tol {trunc.tail_tol:g}, got {trunc.dim}",
            suggested_dim=needed,
        )
    amps = np.zeros(trunc.dim, dtype=np.complex128)
    amps[0] = math.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, trunc.dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return StateVector(amps / np.linalg.norm(amps), trunc)


def ladder_operators(trunc: Truncation):
    """Annihilation, creation, and number operators (a, a_dag, n).

    a|n> = sqrt(n)|n-1> and a_dag|n> = sqrt(n+1)|n+1> for n < N-1; the top
    level is annihilated by a_dag, so [a, a_dag] = 1 only on levels 0..N-2.
    """
    offdiag = np.sqrt(np.arange(1, trunc.dim, dtype=np.float64))
    a = np.diag(offdiag.astype(np.complex128), k=1)
    a_dag = a.conj().T
    return (
        ModeOperator(a, trunc),
        ModeOperator(a_dag, trunc),
        ModeOperator(a_dag @ a, trunc),
    )


def identity_op(trunc: Truncation) -> ModeOperator:
    return ModeOperator(np.eye(trunc.dim, dtype=np.complex128), trunc)


def displacement_op(alpha: complex, trunc: Truncation) -> ModeOperator:
    """Displacement exp(alpha a_dag - conj(alpha) a) on the finite matrix.

    Computed by scaling-and-squaring of the truncated generator; unitary on
    the low-excitation subspace up to truncation error (see
    :func:`unitarity_defect` for the diagnostic norm).
    """
    a, a_dag, _ = ladder_operators(trunc)
    gen = alpha * a_dag.elems - np.conj(alpha) * a.elems
    return ModeOperator(expm(gen), trunc)


def unitarity_defect(op) -> float:
    """sup-norm of U_dag U - 1; reports truncation-induced degradation."""
    u = op.elems
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def beam_splitter_op(theta: float, truncs) -> TwoModeOperator:
    """Two-mode beam-splitter unitary with t = cos(theta), r = sin(theta).

    Convention (fixed): conjugation maps the mode-1 creation operator to
    t*(mode 1) + r*(mode 2) and the mode-2 creation operator to
    -r*(mode 1) + t*(mode 2).  Consequently B|1,0> = t|1,0> + r|0,1> and
    B (|0> x |beta>) = |-r beta> x |t beta> on coherent input.
    """
    t1, t2 = truncs
    a1m = np.diag(np.sqrt(np.arange(1, t1.dim, dtype=np.float64)).astype(np.complex128), k=1)
    a2m = np.diag(np.sqrt(np.arange(1, t2.dim, dtype=np.float64)).astype(np.complex128), k=1)
    a1 = np.kron(a1m, np.eye(t2.dim))
    a2 = np.kron(np.eye(t1.dim), a2m)
    gen = a1 @ a2.conj().T - a1.conj().T @ a2
    return TwoModeOperator(expm(theta * gen), (t1, t2))


def tensor(*states: StateVector) -> JointState:
    """Tensor product of single-mode states, flattened mode-1-major."""
    if len(states) < 2:
        raise ValueError("tensor needs at least two states")
    amps = states[0].amps
    for s in states[1:]:
        amps = np.kron(amps, s.amps)
    return JointState(amps, tuple(s.trunc for s in states))


def herald_project(joint: JointState, outcome):
    """Project all but the last mode onto number states.

    ``outcome`` gives one Fock index per herald mode (every mode except the
    final signal mode).  Returns the normalized conditional signal state and
    the outcome probability (squared norm of the contraction).  Probabilities
    over a full outcome sweep of a normalized joint state sum to 1.
    """
    outcome = tuple(int(n) for n in outcome)
    dims = joint.dims
    if len(outcome) != len(dims) - 1:
        raise ValueError(
            f"outcome has {len(outcome)} entries for {len(dims) - 1} herald modes"
        )
    for i, (n, d) in enumerate(zip(outcome, dims[:-1])):
        if not 0 <= n < d:
            raise ValueError(f"herald outcome {n} outside basis 0..{d - 1} on mode {i}")
    block = joint.amps.reshape(dims)[outcome]
    prob = float(np.real(np.vdot(block, block)))
    nrm = math.sqrt(prob)
    if nrm < ZERO_NORM_TOL:
        raise HeraldImpossibleError(
            f"herald outcome {outcome} has vanishing probability ({prob:.3e})"
        )
    return StateVector(block / nrm, joint.truncs[-1]), prob


# ---------------------------------------------------------------------------
# scalars


def inner_product(u: StateVector, v: StateVector) -> complex:
    """<u|v>, conjugate-linear in the first argument."""
    _require_same_dim(u, v)
    return complex(np.vdot(u.amps, v.amps))


def expectation(op: ModeOperator, state) -> complex:
    """<O> on a StateVector (assumed normalized) or a DensityMatrix."""
    _require_same_dim(op, state)
    if isinstance(state, DensityMatrix):
        return complex(np.trace(state.elems @ op.elems))
    return complex(np.vdot(state.amps, op.elems @ state.amps))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(x, y) -> float:
    """Fidelity in [0, 1]: |<x|y>|^2 for pure states, Uhlmann for mixed."""
    if isinstance(x, StateVector) and isinstance(y, StateVector):
        val = abs(inner_product(x, y)) ** 2
    elif isinstance(x, StateVector) and isinstance(y, DensityMatrix):
        _require_same_dim(x, y)
        val = float(np.real(np.vdot(x.amps, y.elems @ x.amps)))
    elif isinstance(x, DensityMatrix) and isinstance(y, StateVector):
        return fidelity(y, x)
    elif isinstance(x, DensityMatrix) and isinstance(y, DensityMatrix):
        _require_same_dim(x, y)
        s = _psd_sqrt(x.elems)
        inner = s @ y.elems @ s
        vals = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
        val = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))) ** 2)
    else:
        raise TypeError("fidelity expects StateVector or DensityMatrix arguments")
    return float(min(max(val, 0.0), 1.0))


# ---------------------------------------------------------------------------
# truncation bookkeeping


def check_tail(state: StateVector, context: str = "") -> None:
    """Raise :class:`TruncationError` when the top-level weight is too large."""
    w = state.top_weight
    tol = state.trunc.tail_tol
    if w > tol:
        dim = state.trunc.dim
        suggested = dim + max(8, dim // 2)
        where = f" ({context})" if context else ""
        raise TruncationError(
            f"top-level weight {w:.3e} exceeds tail_tol {tol:g}{where}; "
            f"retry with dim >= {suggested}",
            suggested_dim=suggested,
        )


def project_state(psi: StateVector, trunc: Truncation) -> StateVector:
    """Cut a state down to a smaller truncation and renormalize."""
    if trunc.dim > psi.trunc.dim:
        raise ValueError("projection target must not be larger than the source")
    cut = psi.amps[: trunc.dim]
    n = np.linalg.norm(cut)
    if n < ZERO_NORM_TOL:
        raise ValueError("state has no weight inside the projection target")
    return StateVector(cut / n, trunc)


def project_density(rho: DensityMatrix, trunc: Truncation) -> DensityMatrix:
    """Cut a density matrix down to a smaller truncation and renormalize."""
    if trunc.dim > rho.trunc.dim:
        raise ValueError("projection target must not be larger than the source")
    block = rho.elems[: trunc.dim, : trunc.dim]
    tr = float(np.real(np.trace(block)))
    if tr < ZERO_NORM_TOL:
        raise ValueError("density matrix has no weight inside the projection target")
    return DensityMatrix(block / tr, trunc)


# ---------------------------------------------------------------------------
# serialization: {"dim": N, "data": row-major [re, im] pairs}


def state_to_json(psi: StateVector) -> dict:
    data = [[float(z.real), float(z.imag)] for z in psi.amps]
    return {"dim": psi.trunc.dim, "data": data}


def state_from_json(obj: dict, tail_tol: float = 1e-8) -> StateVector:
    dim = int(obj["dim"])
    data = np.asarray(obj["data"], dtype=np.float64)
    if data.shape != (dim, 2):
        raise ValueError(f"state data shape {data.shape} does not match dim {dim}")
    return StateVector(data[:, 0] + 1j * data[:, 1], Truncation(dim, tail_tol))


def density_to_json(rho: DensityMatrix) -> dict:
    flat = rho.elems.reshape(-1)
    data = [[float(z.real), float(z.imag)] for z in flat]
    return {"dim": rho.trunc.dim, "data": data}


def density_from_json(obj: dict, tail_tol: float = 1e-8) -> DensityMatrix:
    dim = int(obj["dim"])
    data = np.asarray(obj["data"], dtype=np.float64)
    if data.shape != (dim * dim, 2):
        raise ValueError(f"density data shape {data.shape} does not match dim {dim}")
    elems = (data[:, 0] + 1j * data[:, 1]).reshape(dim, dim)
    return DensityMatrix(elems, Truncation(dim, tail_tol))

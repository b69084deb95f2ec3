"""State-spec files: one YAML (or JSON) document describing one two-mode state.

Kinds::

    kind: tmsv                 # r, optional cutoff (Fock) -- no cutoff gives Gaussian moments
    kind: gaussian             # mean: 4 reals, cov: 16 reals row-major
    kind: fock                 # dim_a, dim_b, entries: [[re, im], ...] row-major
    kind: separable_mixture    # terms: [{weight, state_a, state_b}, ...]

Local states inside a mixture are ``{kind: gaussian, mean: [x, p], cov: 4 reals}``
or ``{kind: fock, dim, entries}``. Non-physical inputs raise
:class:`~eprcv.errors.InvalidStateError` naming the violated invariant.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidStateError
from .states import (
    FockDensityMatrix,
    GaussianState,
    MixtureTerm,
    SeparableMixture,
    SingleModeFock,
    SingleModeGaussian,
    make_gaussian_tmsv,
    make_two_mode_squeezed_vacuum,
)


def _require(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise InvalidStateError("format", f"{where}: missing field {key!r}")
    return doc[key]


def _reals(values, n, where):
    try:
        arr = np.asarray(values, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise InvalidStateError("format", f"{where}: expected numbers ({exc})") from None
    if arr.size != n:
        raise InvalidStateError("format", f"{where}: expected {n} numbers, got {arr.size}")
    return arr


def _complex_entries(values, n, where):
    arr = _reals(values, 2 * n, where).reshape(n, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def _local_from_spec(doc, where):
    kind = _require(doc, "kind", where)
    if kind == "gaussian":
        mean = _reals(_require(doc, "mean", where), 2, f"{where}.mean")
        cov = _reals(_require(doc, "cov", where), 4, f"{where}.cov").reshape(2, 2)
        return SingleModeGaussian(mean, cov)
    if kind == "fock":
        dim = int(_require(doc, "dim", where))
        entries = _complex_entries(_require(doc, "entries", where), dim * dim, f"{where}.entries")
        return SingleModeFock(entries.reshape(dim, dim))
    raise InvalidStateError("format", f"{where}: unknown local kind {kind!r}")


def state_from_spec(doc):
    """Build a state from a parsed spec document."""
    kind = _require(doc, "kind", "state")
    if kind == "tmsv":
        r = float(_require(doc, "r", "tmsv"))
        if r < 0:
            raise InvalidStateError("format", "tmsv: r must be nonnegative")
        cutoff = doc.get("cutoff")
        if cutoff is None or doc.get("representation") == "gaussian":
            return make_gaussian_tmsv(r)
        return make_two_mode_squeezed_vacuum(r, int(cutoff))
    if kind == "gaussian":
        mean = _reals(_require(doc, "mean", "gaussian"), 4, "gaussian.mean")
        cov = _reals(_require(doc, "cov", "gaussian"), 16, "gaussian.cov").reshape(4, 4)
        return GaussianState(mean, cov)
    if kind == "fock":
        da, db = int(_require(doc, "dim_a", "fock")), int(_require(doc, "dim_b", "fock"))
        n = da * db
        entries = _complex_entries(_require(doc, "entries", "fock"), n * n, "fock.entries")
        return FockDensityMatrix(da, db, entries.reshape(n, n))
    if kind == "separable_mixture":
        terms = _require(doc, "terms", "separable_mixture")
        if not isinstance(terms, list) or not terms:
            raise InvalidStateError("format", "separable_mixture: terms must be a nonempty list")
        built = []
        for k, t in enumerate(terms):
            where = f"terms[{k}]"
            built.append(
                MixtureTerm(
                    float(_require(t, "weight", where)),
                    _local_from_spec(_require(t, "state_a", where), f"{where}.state_a"),
                    _local_from_spec(_require(t, "state_b", where), f"{where}.state_b"),
                )
            )
        return SeparableMixture(tuple(built))
    raise InvalidStateError("format", f"unknown state kind {kind!r}")


def load_state(path):
    """Parse a spec file (YAML or JSON) into a state."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidStateError("format", f"cannot parse {path}: {exc}") from None
    return state_from_spec(doc)


def _pairs(mat):
    flat = np.asarray(mat).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _local_to_spec(local):
    if isinstance(local, SingleModeGaussian):
        return {"kind": "gaussian", "mean": local.mean.tolist(), "cov": local.cov.ravel().tolist()}
    return {"kind": "fock", "dim": local.dim, "entries": _pairs(local.matrix)}


def state_to_spec(state):
    """Inverse of :func:`state_from_spec` (TMSV is written as its explicit representation)."""
    if isinstance(state, GaussianState):
        return {"kind": "gaussian", "mean": state.mean.tolist(), "cov": state.cov.ravel().tolist()}
    if isinstance(state, FockDensityMatrix):
        return {"kind": "fock", "dim_a": state.dim_a, "dim_b": state.dim_b, "entries": _pairs(state.entries)}
    if isinstance(state, SeparableMixture):
        return {
            "kind": "separable_mixture",
            "terms": [
                {"weight": t.weight, "state_a": _local_to_spec(t.state_a), "state_b": _local_to_spec(t.state_b)}
                for t in state.terms
            ],
        }
    raise TypeError(f"unsupported state type {type(state).__name__}")


def dump_state(state, path):
    Path(path).write_text(yaml.safe_dump(state_to_spec(state), sort_keys=False))

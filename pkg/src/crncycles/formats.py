"""Lossless text / JSON import-export for networks, systems and trajectories.

Text format, one reaction per line::

    species: X Y V1
    V1 + 6X -> 6X @ 1
    0 -> V1 @ 1

``0`` denotes the empty complex.  The optional ``species:`` header pins the
species order; without it, order of first appearance is used.  Rates are
written with 17 significant digits so parse(print(crn)) == crn exactly.
"""

from __future__ import annotations

import json
import os
import re
import tempfile

import numpy as np

from .crn import Crn, CrnError, Reaction, species_list
from .odes import Monomial, PolyOdeSystem

_TERM_RE = re.compile(r"^(\d+)?\s*(\S+)$")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _complex_to_text(stoich, names) -> str:
    parts = []
    for count, name in zip(stoich, names):
        if count == 0:
            continue
        parts.append(name if count == 1 else f"{count}{name}")
    return " + ".join(parts) if parts else "0"


def crn_to_text(crn: Crn) -> str:
    names = crn.species_names
    lines = ["species: " + " ".join(names)]
    for r in crn.reactions:
        lines.append(
            f"{_complex_to_text(r.reactant, names)} -> "
            f"{_complex_to_text(r.product, names)} @ {_fmt(r.rate)}"
        )
    return "\n".join(lines) + "\n"


def _parse_complex(text: str, index: dict[str, int], names: list[str], frozen: bool):
    text = text.strip()
    counts: dict[int, int] = {}
    if text == "0":
        return counts
    for part in text.split("+"):
        part = part.strip()
        m = _TERM_RE.match(part)
        if not m:
            raise CrnError(f"cannot parse complex term {part!r}")
        count = int(m.group(1)) if m.group(1) else 1
        name = m.group(2)
        if name not in index:
            if frozen:
                raise CrnError(f"species {name!r} not in declared species list")
            index[name] = len(names)
            names.append(name)
        counts[index[name]] = counts.get(index[name], 0) + count
    return counts


def crn_from_text(text: str) -> Crn:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    names: list[str] = []
    index: dict[str, int] = {}
    frozen = False
    raw = []
    for ln in lines:
        if ln.startswith("species:"):
            names = ln[len("species:"):].split()
            index = {n: i for i, n in enumerate(names)}
            frozen = True
            continue
        if "->" not in ln or "@" not in ln:
            raise CrnError(f"malformed reaction line {ln!r}")
        arrow, _, rate_text = ln.rpartition("@")
        lhs, _, rhs = arrow.partition("->")
        raw.append(
            (
                _parse_complex(lhs, index, names, frozen),
                _parse_complex(rhs, index, names, frozen),
                float(rate_text.strip()),
            )
        )
    n = len(names)
    reactions = []
    for reac, prod, rate in raw:
        reactant = [0] * n
        product = [0] * n
        for i, c in reac.items():
            reactant[i] = c
        for i, c in prod.items():
            product[i] = c
        reactions.append(Reaction(tuple(reactant), tuple(product), rate))
    return Crn(species_list(names), reactions)


def crn_to_json_dict(crn: Crn) -> dict:
    return {
        "species": list(crn.species_names),
        "reactions": [
            {"reactant": list(r.reactant), "product": list(r.product), "rate": r.rate}
            for r in crn.reactions
        ],
    }


def crn_from_json_dict(data: dict) -> Crn:
    reactions = [
        Reaction(tuple(r["reactant"]), tuple(r["product"]), float(r["rate"]))
        for r in data["reactions"]
    ]
    return Crn(species_list(data["species"]), reactions)


def system_to_json_dict(sys: PolyOdeSystem) -> dict:
    names = sys.names if sys.names is not None else [f"X{i+1}" for i in range(sys.dim)]
    return {
        "variables": list(names),
        "equations": [
            [{"coeff": m.coeff, "exps": list(m.exps)} for m in eq] for eq in sys.rhs
        ],
    }


def system_from_json_dict(data: dict) -> PolyOdeSystem:
    dim = len(data["variables"])
    rhs = [
        [Monomial(float(t["coeff"]), tuple(t["exps"])) for t in eq]
        for eq in data["equations"]
    ]
    return PolyOdeSystem(dim, rhs, names=tuple(data["variables"]))


def trajectory_to_csv(times, states, names) -> str:
    """CSV with full double precision, one row per dense sample."""
    lines = ["t," + ",".join(names)]
    for t, row in zip(times, states):
        lines.append(",".join(_fmt(v) for v in [t, *row]))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    names = lines[0].split(",")[1:]
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        return np.empty(0), np.empty((0, len(names))), names
    return data[:, 0], data[:, 1:], names


def write_atomic(path, text: str) -> None:
    """Write via temp file + rename so readers never see partial output."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2) + "\n")

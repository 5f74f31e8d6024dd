"""Problem files: JSON input for the command-line tool.

Complex numbers are written as ``[re, im]`` pairs (plain numbers are real);
matrices are row-major nested lists. A handful of named constructors keep
fixtures short:

states      ``ghz(k)``, ``phi_plus``, ``phi_minus``, ``psi_plus``, ``psi_minus``,
            ``werner(l)``, ``basis(i, n)``, ``maximally_mixed(n)``
unitaries   ``identity``, ``bell_unitary``, ``random(seed)``
generators  Pauli strings such as ``"XI"`` or ``"ZZ"``

MPS loci list generators directly or name an entry of the top-level
``algebras`` object.

Validation errors carry the JSON path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from . import algebra as alg
from .classical import SampleSet
from .errors import LocusForgeError
from .mps import Mps, MpsCatalog, generate_catalog, trivial_mps
from .numerics import kron, random_unitary
from .states import State, classical_embed
from .tps import TpsSpec, bell_unitary, tps_to_mps

SCHEMA_VERSION = 1
PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}
_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


class InputError(LocusForgeError, ValueError):
    code = "input"

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Problem:
    raw: dict
    digest: str
    states: list[State] = field(default_factory=list)
    tps: TpsSpec | None = None
    catalog: MpsCatalog | None = None
    mps: Mps | None = None
    mps_name: str | None = None
    n: int | None = None
    samples: SampleSet | None = None
    options: dict = field(default_factory=dict)


def _call(text: str, path: str) -> tuple[str, list[float]]:
    m = _CALL.match(text)
    if not m:
        raise InputError(path, f"cannot parse constructor {text!r}")
    args = []
    if m.group(2):
        for a in m.group(2).split(","):
            try:
                args.append(float(a))
            except ValueError:
                raise InputError(path, f"bad argument {a.strip()!r} in {text!r}") from None
    return m.group(1), args


def _number(x, path: str) -> complex:
    if isinstance(x, bool):
        raise InputError(path, "expected a number")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise InputError(path, "expected a number or an [re, im] pair")


def parse_vector(data, path: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise InputError(path, "expected a non-empty list")
    return np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(data)])


def parse_matrix(data, path: str, n: int | None = None) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise InputError(path, "expected a matrix (list of rows)")
    rows = [parse_vector(r, f"{path}[{i}]") for i, r in enumerate(data)]
    if len({len(r) for r in rows}) != 1:
        raise InputError(path, "rows have different lengths")
    m = np.stack(rows)
    if m.shape[0] != m.shape[1]:
        raise InputError(path, f"matrix must be square, got {m.shape[0]}x{m.shape[1]}")
    if n is not None and m.shape[0] != n:
        raise InputError(path, f"matrix must be {n}x{n}, got {m.shape[0]}x{m.shape[1]}")
    return m


def named_state(text: str, path: str) -> State:
    name, args = _call(text, path)
    s = 1 / np.sqrt(2)
    bells = {"phi_plus": [s, 0, 0, s], "bell": [s, 0, 0, s], "phi_minus": [s, 0, 0, -s],
             "psi_plus": [0, s, s, 0], "psi_minus": [0, s, -s, 0]}
    if name in bells:
        return State.pure(bells[name], text)
    if name == "ghz":
        k = int(args[0]) if args else 3
        if k < 2:
            raise InputError(path, "ghz needs at least 2 qubits")
        v = np.zeros(2 ** k)
        v[0] = v[-1] = s
        return State.pure(v, text)
    if name == "werner":
        if len(args) != 1 or not 0 <= args[0] <= 1:
            raise InputError(path, "werner takes one weight in [0, 1]")
        lam = args[0]
        phi = np.array(bells["phi_plus"])
        return State.density((1 - lam) * np.eye(4) / 4 + lam * np.outer(phi, phi), text)
    if name == "basis":
        if len(args) != 2 or not 0 <= args[0] < args[1]:
            raise InputError(path, "basis takes (index, dimension)")
        v = np.zeros(int(args[1]))
        v[int(args[0])] = 1
        return State.pure(v, text)
    if name == "maximally_mixed":
        if len(args) != 1 or args[0] < 1:
            raise InputError(path, "maximally_mixed takes a dimension")
        n = int(args[0])
        return State.density(np.eye(n) / n, text)
    raise InputError(path, f"unknown state constructor {name!r}")


def parse_state(rec, path: str) -> State:
    if isinstance(rec, str):
        return named_state(rec, path)
    if not isinstance(rec, dict):
        raise InputError(path, "expected a state record")
    kind = rec.get("kind", "named")
    name = rec.get("name")
    if "data" not in rec:
        raise InputError(f"{path}.data", "missing field")
    data = rec["data"]
    try:
        if kind == "named":
            if not isinstance(data, str):
                raise InputError(f"{path}.data", "expected a constructor string")
            st = named_state(data, f"{path}.data")
        elif kind == "pure":
            st = State.pure(parse_vector(data, f"{path}.data"))
        elif kind == "density":
            st = State.density(parse_matrix(data, f"{path}.data"))
        elif kind == "classical":
            st = classical_embed(parse_vector(data, f"{path}.data").real)
        elif kind == "kron":
            if not isinstance(data, list) or not data:
                raise InputError(f"{path}.data", "expected a list of state records")
            parts = [parse_state(r, f"{path}.data[{i}]") for i, r in enumerate(data)]
            if all(p.vector is not None for p in parts):
                st = State.pure(kron(*[p.vector[:, None] for p in parts]).ravel())
            else:
                st = State.density(kron(*[p.rho for p in parts]))
        else:
            raise InputError(f"{path}.kind", f"unknown kind {kind!r}")
    except InputError:
        raise
    except LocusForgeError as exc:
        raise InputError(f"{path}.data", str(exc)) from None
    if name is not None:
        st = State(st.rho, st.kind, st.vector, str(name))
    elif st.name is None:
        st = State(st.rho, st.kind, st.vector, path)
    return st


def parse_unitary(spec, n: int, path: str) -> np.ndarray:
    if isinstance(spec, str):
        name, args = _call(spec, path)
        if name == "identity":
            return np.eye(n, dtype=complex)
        if name in ("bell_unitary", "bell"):
            if n != 4:
                raise InputError(path, "bell_unitary needs dimension 4")
            return bell_unitary()
        if name == "random":
            seed = int(args[0]) if args else 0
            return random_unitary(n, np.random.default_rng(seed))
        raise InputError(path, f"unknown unitary constructor {name!r}")
    return parse_matrix(spec, path, n)


def parse_tps(rec, path: str) -> TpsSpec:
    if not isinstance(rec, dict):
        raise InputError(path, "expected an object with 'dims'")
    dims = rec.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 2 for d in dims):
        raise InputError(f"{path}.dims", "expected a list of integers >= 2")
    n = int(np.prod(dims))
    u = parse_unitary(rec.get("unitary", "identity"), n, f"{path}.unitary")
    labels = rec.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(dims)):
        raise InputError(f"{path}.labels", f"expected {len(dims)} labels")
    try:
        return TpsSpec(dims, u, labels)
    except LocusForgeError as exc:
        raise InputError(f"{path}.unitary", str(exc)) from None


def parse_generator(g, n: int, path: str) -> np.ndarray:
    if isinstance(g, str):
        if not g or any(c not in PAULI for c in g.upper()):
            raise InputError(path, f"bad Pauli string {g!r}")
        m = kron(*[PAULI[c] for c in g.upper()])
        if m.shape[0] != n:
            raise InputError(path, f"Pauli string {g!r} has dimension {m.shape[0]}, expected {n}")
        return m
    return parse_matrix(g, path, n)


def parse_algebras(rec, n: int, path: str = "algebras") -> dict[str, list[np.ndarray]]:
    """Named generator lists, referenced from MPS loci by name."""
    if not isinstance(rec, dict):
        raise InputError(path, "expected an object of generator lists")
    out = {}
    for name, gens in rec.items():
        if not isinstance(gens, list):
            raise InputError(f"{path}.{name}", "expected a list of generators")
        out[str(name)] = [parse_generator(g, n, f"{path}.{name}[{i}]") for i, g in enumerate(gens)]
    return out


def parse_mps(rec, n: int, path: str, named: dict | None = None) -> tuple[str, Mps]:
    if not isinstance(rec, dict):
        raise InputError(path, "expected an MPS record")
    name = str(rec.get("name", path))
    if "tps" in rec:
        t = parse_tps(rec["tps"], f"{path}.tps")
        if t.n != n:
            raise InputError(f"{path}.tps.dims", f"product {t.n} does not match ambient_dim {n}")
        return name, tps_to_mps(t, provenance=name)
    if rec.get("trivial"):
        return name, trivial_mps(n)
    loci = rec.get("loci")
    if not isinstance(loci, dict) or not loci:
        raise InputError(path, "expected one of 'tps', 'trivial' or a non-empty 'loci' object")
    out = {}
    for label, gens in loci.items():
        lp = f"{path}.loci.{label}"
        if isinstance(gens, str):
            if not named or gens not in named:
                raise InputError(lp, f"no algebra named {gens!r}")
            mats = named[gens]
        elif isinstance(gens, list):
            mats = [parse_generator(g, n, f"{lp}[{i}]") for i, g in enumerate(gens)]
        else:
            raise InputError(lp, "expected a list of generators or an algebra name")
        out[str(label)] = alg.generate(mats, n, label=str(label))
    return name, Mps(n, out, name)


def parse_catalog(entries, n: int, path: str, named: dict | None = None) -> MpsCatalog:
    if not isinstance(entries, list) or not entries:
        raise InputError(path, "expected a non-empty list")
    members, names = [], []
    for i, rec in enumerate(entries):
        p = f"{path}[{i}]"
        if isinstance(rec, dict) and "generate" in rec:
            g = rec["generate"]
            if not isinstance(g, dict):
                raise InputError(f"{p}.generate", "expected an object")
            cat = generate_catalog(n, int(g.get("twists", 2)), int(g.get("seed", 0)),
                                   bool(g.get("trivial", True)))
            members.extend(cat.members)
            names.extend(cat.names)
            continue
        nm, m = parse_mps(rec, n, p, named)
        members.append(m)
        names.append(nm)
    if len(set(names)) != len(names):
        raise InputError(path, f"duplicate catalog names {names}")
    return MpsCatalog(members, names)


OPTION_TYPES = {"eps": float, "eps_rel": float, "tau": float, "mode": str, "seed": int,
                "budget": int, "state": str}


def parse_options(rec, path: str = "options") -> dict:
    if rec is None:
        return {}
    if not isinstance(rec, dict):
        raise InputError(path, "expected an object")
    out = {}
    for k, v in rec.items():
        if k not in OPTION_TYPES:
            raise InputError(f"{path}.{k}", "unknown option")
        typ = OPTION_TYPES[k]
        if typ is float and (isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0):
            raise InputError(f"{path}.{k}", "expected a positive number")
        if typ is int and (isinstance(v, bool) or not isinstance(v, int)):
            raise InputError(f"{path}.{k}", "expected an integer")
        if typ is str and not isinstance(v, str):
            raise InputError(f"{path}.{k}", "expected a string")
        out[k] = v
    if out.get("mode", "pairwise") not in ("pairwise", "multiway"):
        raise InputError(f"{path}.mode", "expected 'pairwise' or 'multiway'")
    return out


def load_problem(path: str | Path) -> Problem:
    text = Path(path).read_bytes()
    return parse_problem(text)


def parse_problem(text: bytes | str) -> Problem:
    raw_bytes = text.encode() if isinstance(text, str) else text
    digest = hashlib.sha256(raw_bytes).hexdigest()
    try:
        raw = json.loads(raw_bytes)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno} column {exc.colno}", f"malformed JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError("$", "top level must be an object")
    ver = raw.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise InputError("schema_version", f"unsupported version {ver!r}, expected {SCHEMA_VERSION}")
    prob = Problem(raw, digest)
    prob.options = parse_options(raw.get("options"))

    if "states" in raw:
        if not isinstance(raw["states"], list) or not raw["states"]:
            raise InputError("states", "expected a non-empty list")
        prob.states = [parse_state(r, f"states[{i}]") for i, r in enumerate(raw["states"])]
    if "tps" in raw:
        prob.tps = parse_tps(raw["tps"], "tps")

    n = raw.get("ambient_dim")
    if n is not None and (isinstance(n, bool) or not isinstance(n, int) or n < 1):
        raise InputError("ambient_dim", "expected a positive integer")
    if n is None:
        if prob.states:
            n = prob.states[0].dim
        elif prob.tps is not None:
            n = prob.tps.n
    for i, st in enumerate(prob.states):
        if st.dim != n:
            raise InputError(f"states[{i}]", f"dimension {st.dim} does not match ambient_dim {n}")
    if prob.tps is not None and prob.tps.n != n:
        raise InputError("tps.dims", f"product {prob.tps.n} does not match ambient_dim {n}")

    named = None
    if "algebras" in raw:
        if n is None:
            raise InputError("ambient_dim", "required to build algebras")
        named = parse_algebras(raw["algebras"], n)
    if "catalog" in raw:
        if n is None:
            raise InputError("ambient_dim", "required to build a catalog")
        prob.catalog = parse_catalog(raw["catalog"], n, "catalog", named)
    if "mps" in raw:
        if n is None:
            raise InputError("ambient_dim", "required to build an MPS")
        prob.mps_name, prob.mps = parse_mps(raw["mps"], n, "mps", named)
    if "n" in raw:
        v = raw["n"]
        if isinstance(v, bool) or not isinstance(v, int) or v < 2:
            raise InputError("n", "expected an integer >= 2")
        prob.n = v
    if "samples" in raw:
        data = raw["samples"]
        if not isinstance(data, list) or not data:
            raise InputError("samples", "expected a non-empty list of probability vectors")
        rows = [parse_vector(r, f"samples[{i}]").real for i, r in enumerate(data)]
        if len({len(r) for r in rows}) != 1:
            raise InputError("samples", "samples have different lengths")
        try:
            prob.samples = SampleSet(np.stack(rows))
        except ValueError as exc:
            raise InputError("samples", str(exc)) from None
    return prob

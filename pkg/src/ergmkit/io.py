"""Text formats: graphs, masks, node attributes, model configs and fit reports.

All node indices in files are 1-based.  Several networks in one file are
separated by a line holding ``---``.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import shlex
from typing import Sequence

import numpy as np

from .errors import ParseError
from .estimate import FitResult
from .graph import Graph, NodeAttributes
from .missing import ObservationMask
from .model import (LINEAR_KINDS, PRESETS, GwespDecl, ModelTemplate, OffsetDecl, TermDecl)

SEPARATOR = "---"


def _sections(text: str) -> list[list[tuple[int, str]]]:
    """Non-comment lines grouped by separator, each with its 1-based line number."""
    out: list[list[tuple[int, str]]] = [[]]
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == SEPARATOR:
            out.append([])
        else:
            out[-1].append((no, line))
    return out


def _int(tok: str, no: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"line {no}: {what} must be an integer, got {tok!r}") from None


def _float(tok: str, no: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"line {no}: {what} must be a number, got {tok!r}") from None


# -- graphs ----------------------------------------------------------------------

def read_graphs(text: str) -> list[Graph]:
    graphs = []
    for sec in _sections(text):
        if not sec:
            continue
        no, head = sec[0]
        parts = head.split()
        if len(parts) != 2 or parts[0] != "n":
            raise ParseError(f"line {no}: expected 'n <node count>'")
        n = _int(parts[1], no, "node count")
        if n < 1:
            raise ParseError(f"line {no}: node count must be positive")
        edges = []
        for no, line in sec[1:]:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"line {no}: expected '<i> <j>'")
            i, j = _int(parts[0], no, "node"), _int(parts[1], no, "node")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ParseError(f"line {no}: node out of range 1..{n}")
            if i == j:
                raise ParseError(f"line {no}: self-loop")
            edges.append((i - 1, j - 1))
        graphs.append(Graph(n, edges))
    if not graphs:
        raise ParseError("no network found")
    return graphs


def write_graphs(graphs: Sequence[Graph]) -> str:
    chunks = []
    for g in graphs:
        lines = [f"n {g.n}"] + [f"{i + 1} {j + 1}" for i, j in g.edges()]
        chunks.append("\n".join(lines))
    return ("\n" + SEPARATOR + "\n").join(chunks) + "\n"


# -- masks -----------------------------------------------------------------------

def read_masks(text: str, sizes: Sequence[int]) -> list[ObservationMask]:
    """One mask per network; each line lists an unobserved dyad."""
    secs = _sections(text)
    if len(secs) == 1 and len(sizes) > 1 and not secs[0]:
        secs = [[] for _ in sizes]
    if len(secs) != len(sizes):
        raise ParseError(f"mask file has {len(secs)} sections for {len(sizes)} networks")
    out = []
    for sec, n in zip(secs, sizes):
        dyads = []
        for no, line in sec:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"line {no}: expected '<i> <j>'")
            i, j = _int(parts[0], no, "node"), _int(parts[1], no, "node")
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ParseError(f"line {no}: invalid dyad ({i}, {j})")
            dyads.append((i - 1, j - 1))
        out.append(ObservationMask.from_unobserved(n, dyads))
    return out


def write_masks(masks: Sequence[ObservationMask]) -> str:
    chunks = []
    for m in masks:
        lines = [f"# n {m.n}"] + [f"{i + 1} {j + 1}" for i, j in m.unobserved_dyads()]
        chunks.append("\n".join(lines))
    return ("\n" + SEPARATOR + "\n").join(chunks) + "\n"


# -- node attributes ---------------------------------------------------------------

def _column(values: list[str]) -> np.ndarray:
    for cast in (int, float):
        try:
            return np.array([cast(v) for v in values])
        except ValueError:
            pass
    return np.array(values)


def read_attributes(text: str) -> list[NodeAttributes]:
    """Header of attribute names, then one whitespace-separated row per node."""
    out = []
    for sec in _sections(text):
        if not sec:
            continue
        names = sec[0][1].split()
        if len(set(names)) != len(names):
            raise ParseError(f"line {sec[0][0]}: attribute names must be unique")
        rows = []
        for no, line in sec[1:]:
            parts = line.split()
            if len(parts) != len(names):
                raise ParseError(f"line {no}: expected {len(names)} values")
            rows.append(parts)
        cols = {name: _column([r[k] for r in rows]) for k, name in enumerate(names)}
        out.append(NodeAttributes(len(rows), cols))
    return out


def write_attributes(attrs: Sequence[NodeAttributes]) -> str:
    chunks = []
    for a in attrs:
        names = a.names()
        lines = [" ".join(names)]
        for i in range(a.n):
            lines.append(" ".join(_fmt_value(a[name][i]) for name in names))
        chunks.append("\n".join(lines))
    return ("\n" + SEPARATOR + "\n").join(chunks) + "\n"


def _fmt_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- model configs -----------------------------------------------------------------

def _kv(tokens: list[str], no: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ParseError(f"line {no}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k in out:
            raise ParseError(f"line {no}: {k!r} given twice")
        out[k] = v
    return out


_TERM_KEYS = {"edges": (), "degree": ("k",), "twopaths": (), "triangles": (), "esp": ("m",),
              "nodedegree": ("i",), "nodematch": ("attr",), "distance": ("attrs",)}


def parse_model_config(text: str) -> ModelTemplate:
    """Parse a model declaration.

    Lines::

        term <kind> [k=..] [m=..] [i=..] [attr=..] [attrs=a,b] [transform=log] [theta=<j>]
        gwesp [base=<j>] [decay=<j>] [shift1=<j> shift2=<j>]
        offset sparse
        preset <name>
        names <name_1> ... <name_p>

    ``theta`` indices are 1-based; when omitted the next free index in
    declaration order is used.  ``i=`` in ``nodedegree`` is a 1-based node.
    """
    decls: list = []
    names: tuple[str, ...] = ()
    preset = None
    counter = 0

    def index(value: str | None, no: int) -> int:
        nonlocal counter
        if value is None:
            counter += 1
            return counter - 1
        j = _int(value, no, "parameter index")
        if j < 1:
            raise ParseError(f"line {no}: parameter indices are 1-based")
        counter = max(counter, j)
        return j - 1

    for no, line in _sections(text)[0] if text.strip() else []:
        try:
            tokens = shlex.split(line)
        except ValueError as exc:
            raise ParseError(f"line {no}: {exc}") from None
        head, rest = tokens[0], tokens[1:]
        if head == "preset":
            if len(rest) != 1 or rest[0] not in PRESETS:
                raise ParseError(f"line {no}: unknown preset; choose from {sorted(PRESETS)}")
            preset = PRESETS[rest[0]]()
        elif head == "term":
            if not rest:
                raise ParseError(f"line {no}: missing term kind")
            kind = rest[0]
            if kind not in LINEAR_KINDS:
                raise ParseError(f"line {no}: unknown term {kind!r}")
            kv = _kv(rest[1:], no)
            theta = index(kv.pop("theta", None), no)
            for key in _TERM_KEYS[kind]:
                if key not in kv:
                    raise ParseError(f"line {no}: term {kind} needs {key}=")
            args = []
            for key, val in sorted(kv.items()):
                if key in ("k", "m"):
                    args.append((key, _int(val, no, key)))
                elif key == "i":
                    args.append((key, _int(val, no, key) - 1))
                elif key == "attr":
                    args.append((key, val))
                elif key == "attrs":
                    args.append((key, tuple(val.split(","))))
                elif key == "transform" and kind == "distance":
                    args.append((key, val))
                else:
                    raise ParseError(f"line {no}: unexpected argument {key!r} for term {kind}")
            decls.append(TermDecl(kind, theta, tuple(args)))
        elif head == "gwesp":
            kv = _kv(rest, no)
            unknown = set(kv) - {"base", "decay", "shift1", "shift2"}
            if unknown:
                raise ParseError(f"line {no}: unexpected gwesp argument(s) {sorted(unknown)}")
            if ("shift1" in kv) != ("shift2" in kv):
                raise ParseError(f"line {no}: shift1 and shift2 go together")
            shifted = "shift1" in kv
            s1 = index(kv.get("shift1"), no) if shifted else None
            s2 = index(kv.get("shift2"), no) if shifted else None
            base = index(kv.get("base"), no)
            decay = index(kv.get("decay"), no)
            decls.append(GwespDecl(base, decay, s1, s2))
        elif head == "offset":
            kind = _kv(rest, no).get("kind") if rest and "=" in rest[0] else (rest[0] if rest else None)
            if kind != "sparse":
                raise ParseError(f"line {no}: unknown offset {kind!r}")
            decls.append(OffsetDecl("sparse"))
        elif head == "names":
            names = tuple(rest)
        else:
            raise ParseError(f"line {no}: unknown directive {head!r}")
    if preset is not None:
        if decls:
            raise ParseError("a preset cannot be combined with other declarations")
        return preset if not names else ModelTemplate(preset.decls, names)
    if not decls:
        raise ParseError("model declares no terms")
    try:
        return ModelTemplate(tuple(decls), names)
    except (ValueError, KeyError) as exc:
        raise ParseError(str(exc)) from None


def write_model_config(t: ModelTemplate) -> str:
    lines = []
    for d in t.decls:
        if isinstance(d, TermDecl):
            parts = ["term", d.kind]
            for key, val in d.args:
                if key == "i":
                    val = val + 1
                elif key == "attrs":
                    val = ",".join(val)
                parts.append(f"{key}={val}")
            parts.append(f"theta={d.theta + 1}")
            lines.append(" ".join(parts))
        elif isinstance(d, GwespDecl):
            parts = ["gwesp", f"base={d.base + 1}", f"decay={d.decay + 1}"]
            if d.shift1 is not None:
                parts += [f"shift1={d.shift1 + 1}", f"shift2={d.shift2 + 1}"]
            lines.append(" ".join(parts))
        else:
            lines.append(f"offset {d.kind}")
    lines.append("names " + " ".join(t.names))
    return "\n".join(lines) + "\n"


# -- vectors, reports, tables -----------------------------------------------------------

def parse_theta(tokens: Sequence[str] | str) -> np.ndarray:
    if isinstance(tokens, str):
        tokens = tokens.replace(",", " ").split()
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"invalid parameter vector: {exc}") from None


def read_grid(text: str) -> list[np.ndarray]:
    out = [parse_theta(line) for _, line in _sections(text)[0]]
    if not out:
        raise ParseError("grid file is empty")
    if len({len(t) for t in out}) != 1:
        raise ParseError("grid rows differ in length")
    return out


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_fit_report(fit: FitResult) -> str:
    """``key<TAB>value`` lines; parameters appear as ``theta.<name>`` and ``se.<name>``."""
    rows = [("method", fit.method), ("converged", fit.converged), ("iterations", fit.iterations),
            ("grad_norm", fit.grad_norm), ("ess", fit.ess if fit.ess is not None else "na"),
            ("loglik", fit.loglik if fit.loglik is not None else "na"),
            ("seed", fit.seed if fit.seed is not None else "na"), ("p", len(fit.theta))]
    for key in sorted(fit.config):
        rows.append((f"config.{key}", fit.config[key]))
    for name, th, se in fit.table():
        rows.append((f"theta.{name}", th))
        rows.append((f"se.{name}", se))
    for note in fit.notes:
        rows.append(("note", note))
    return "".join(f"{k}\t{_fmt(v)}\n" for k, v in rows)


def read_fit_report(text: str) -> dict:
    """Key/value pairs plus ``names``, ``theta`` and ``std_errors`` in parameter order."""
    out: dict = {"names": [], "theta": [], "std_errors": [], "notes": []}
    for no, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("#"):
            continue
        if "\t" not in raw:
            raise ParseError(f"line {no}: expected key<TAB>value")
        key, val = raw.split("\t", 1)
        if key.startswith("theta."):
            out["names"].append(key[6:])
            out["theta"].append(_float(val, no, key))
        elif key.startswith("se."):
            out["std_errors"].append(_float(val, no, key))
        elif key == "note":
            out["notes"].append(val)
        else:
            out[key] = val
    if not out["theta"]:
        raise ParseError("fit report has no parameter values")
    out["theta"] = np.array(out["theta"])
    out["std_errors"] = np.array(out["std_errors"])
    return out


def write_param_table(fit: FitResult) -> str:
    lines = ["term\testimate\tstd_error"]
    lines += [f"{name}\t{_fmt(th)}\t{_fmt(se)}" for name, th, se in fit.table()]
    return "\n".join(lines) + "\n"


def write_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    out = ["\t".join(header)]
    out += ["\t".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(out) + "\n"

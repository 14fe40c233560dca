"""Coordinate charts, metric fields, the built-in catalog and metric spec files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from . import expr as ex
from .expr import Expr, ExpressionSyntaxError, Num
from .jets import Jet

__all__ = [
    "MetricField",
    "MetricSpecError",
    "CatalogError",
    "SamplingError",
    "CATALOG_NAMES",
    "catalog_metric",
    "parse_metric_spec",
    "format_metric_spec",
    "sample_points",
]


class MetricSpecError(ValueError):
    """Problem in a metric spec document, located by 1-based line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class CatalogError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MetricField:
    """Symmetric matrix of metric component expressions over a coordinate box.

    Only the upper triangle (``i <= j``) is stored; :meth:`evaluate` mirrors
    it, so evaluated matrices are exactly symmetric.
    """

    name: str
    coords: tuple[str, ...]
    entries: Mapping[tuple[int, int], Expr]
    domain: tuple[tuple[float, float], ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.coords)
        if n < 1:
            raise ValueError("a chart needs at least one coordinate")
        if len(self.domain) != n:
            raise ValueError("domain box must have one interval per coordinate")
        upper = {}
        for (i, j), e in self.entries.items():
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"entry ({i}, {j}) outside a {n}x{n} metric")
            upper[(min(i, j), max(i, j))] = ex._wrap(e)
        for i in range(n):
            if (i, i) not in upper:
                raise ValueError(f"missing diagonal entry ({i}, {i})")
        keys = [(i, j) for i in range(n) for j in range(i, n)]
        ordered = [upper.get(k, Num(0.0)) for k in keys]
        object.__setattr__(self, "entries", MappingProxyType(dict(zip(keys, ordered))))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "_keys", keys)
        object.__setattr__(self, "_fn", ex.compile_entries(ordered, self.coords, self.params))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def _assemble(self, values, n):
        out = [[None] * n for _ in range(n)]
        for (i, j), v in zip(self._keys, values):
            out[i][j] = out[j][i] = v
        return out

    def evaluate(self, point) -> np.ndarray:
        """Metric matrix at ``point`` as an ``n x n`` float array."""
        p = np.asarray(point, dtype=float)
        values = self._fn(*(float(x) for x in p))
        g = np.array(self._assemble([float(v) for v in values], self.dim), dtype=float)
        return g

    def evaluate_jets(self, point, order: int = 2) -> list[list]:
        """Entries evaluated on coordinate jets (floats for constant entries)."""
        p = np.asarray(point, dtype=float)
        n = self.dim
        seeds = [Jet.variable(float(p[a]), a, n, order) for a in range(n)]
        return self._assemble(list(self._fn(*seeds)), n)

    def contains(self, point, slack: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return all(lo - slack <= x <= hi + slack for x, (lo, hi) in zip(p, self.domain))

    def scaled(self, k: float) -> "MetricField":
        """The homothetic field ``k * g`` on the same box."""
        if not k > 0:
            raise ValueError("scale factor must be positive")
        entries = {key: Num(float(k)) * e for key, e in self.entries.items()}
        return MetricField(f"{self.name}*{k!r}", self.coords, entries, self.domain, self.params)

    def with_domain(self, domain) -> "MetricField":
        return MetricField(self.name, self.coords, self.entries, domain, self.params)

    def __repr__(self):
        return f"MetricField({self.name!r}, dim={self.dim})"


# -- catalog ----------------------------------------------------------------

CATALOG_NAMES = ("euclidean", "space_form", "thurston", "sol", "product_s2xe1", "product_h2xe1")


def _coord_names(n: int) -> tuple[str, ...]:
    return ("x", "y", "z") if n == 3 else tuple(f"x{i + 1}" for i in range(n))


def _euclidean(n):
    coords = _coord_names(n)
    entries = {(i, i): Num(1.0) for i in range(n)}
    return MetricField(f"euclidean({n})", coords, entries, ((-3.0, 3.0),) * n, {"n": n})


def _space_form(n, c, domain):
    coords = _coord_names(n)
    if domain is None:
        if c == 0:
            half = 3.0
        elif c > 0:
            half = 3.0 / math.sqrt(c)
        else:
            half = math.sqrt(2.0 / (abs(c) * n))
        domain = ((-half, half),) * n
    r2_max = sum(max(lo * lo, hi * hi) for lo, hi in domain)
    if 1.0 + 0.25 * c * r2_max <= 0.0:
        raise CatalogError("space_form: 1 + (c/4)|x|^2 vanishes inside the requested box")
    xs = [ex.sym(s) for s in coords]
    r2 = xs[0] ** 2
    for x in xs[1:]:
        r2 = r2 + x**2
    factor = (1 + (c / 4.0) * r2) ** -2
    entries = {(i, i): factor for i in range(n)}
    return MetricField(f"space_form({n},{c!r})", coords, entries, domain, {"n": n, "c": c})


def _thurston(m, l, domain):
    if domain is None:
        if m < 0:
            half = math.sqrt(1.0 / (4.0 * abs(m)))
        elif m > 0:
            half = min(3.0, 3.0 / math.sqrt(m))
        else:
            half = 3.0
        domain = ((-half, half), (-half, half), (-3.0, 3.0))
    r2_max = sum(max(lo * lo, hi * hi) for lo, hi in domain[:2])
    if 1.0 + m * r2_max <= 0.0:
        raise CatalogError("thurston: 1 + m(x^2 + y^2) vanishes inside the requested box")
    x, y = ex.sym("x"), ex.sym("y")
    d = 1 + m * (x**2 + y**2)
    a = (l / 2.0) * y / d
    b = -(l / 2.0) * x / d
    conf = d**-2
    entries = {
        (0, 0): conf + a**2,
        (1, 1): conf + b**2,
        (2, 2): Num(1.0),
        (0, 1): a * b,
        (0, 2): a,
        (1, 2): b,
    }
    return MetricField(f"thurston({m!r},{l!r})", ("x", "y", "z"), entries, domain, {"m": m, "l": l})


def _sol(domain):
    z = ex.sym("z")
    entries = {(0, 0): ex.exp(2 * z), (1, 1): ex.exp(-2 * z), (2, 2): Num(1.0)}
    domain = domain or ((-3.0, 3.0), (-3.0, 3.0), (-2.0, 2.0))
    return MetricField("sol", ("x", "y", "z"), entries, domain, {})


def catalog_metric(name: str, domain=None, **params) -> MetricField:
    """Built-in metric by name.

    ``euclidean(n)``, ``space_form(n, c)``, ``thurston(m, l)``, ``sol``,
    ``product_s2xe1`` and ``product_h2xe1`` (the latter two are the
    ``l = 0`` Thurston metrics with ``m = +-1/4``, whose ``xy``-slices have
    curvature ``+-1``).
    """

    def real(key, default=None):
        if key not in params:
            if default is None:
                raise CatalogError(f"{name} requires parameter {key!r}")
            return default
        v = float(params[key])
        if not math.isfinite(v):
            raise CatalogError(f"{name}: parameter {key!r} must be finite")
        return v

    def dim(default=None):
        n = params.get("n", default)
        if n is None or int(n) != n or int(n) < 2:
            raise CatalogError(f"{name}: dimension n must be an integer >= 2")
        return int(n)

    extra = set(params) - {"euclidean": {"n"}, "space_form": {"n", "c"}, "thurston": {"m", "l"}}.get(
        name, set()
    )
    if extra:
        raise CatalogError(f"{name}: unexpected parameters {sorted(extra)}")
    if name == "euclidean":
        f = _euclidean(dim(3))
        return f.with_domain(domain) if domain is not None else f
    if name == "space_form":
        return _space_form(dim(), real("c"), domain)
    if name == "thurston":
        return _thurston(real("m"), real("l"), domain)
    if name == "sol":
        return _sol(domain)
    if name == "product_s2xe1":
        f = _thurston(0.25, 0.0, domain)
        return MetricField("product_s2xe1", f.coords, f.entries, f.domain, f.params)
    if name == "product_h2xe1":
        f = _thurston(-0.25, 0.0, domain)
        return MetricField("product_h2xe1", f.coords, f.entries, f.domain, f.params)
    raise CatalogError(f"unknown catalog metric {name!r}; known: {', '.join(CATALOG_NAMES)}")


# -- spec files -------------------------------------------------------------


def _strip_comment(line: str) -> str:
    k = line.find("#")
    return line if k < 0 else line[:k]


def parse_metric_spec(text: str, name: str = "spec") -> MetricField:
    """Parse a metric spec document.

    Directives: ``dim n``, ``coords a b ...``, ``param p = value``,
    ``domain <coord> <lo> <hi>`` (optional, default ``[-1, 1]``) and
    ``g i j = expression`` with 0-based indices.
    """
    if not text or not text.strip():
        raise MetricSpecError("empty metric spec")
    dim = None
    coords: list[str] | None = None
    params: dict[str, float] = {}
    bounds: dict[str, tuple[float, float]] = {}
    g_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        col0 = len(line) - len(line.lstrip()) + 1
        words = line.split()
        head = words[0]
        if head == "dim":
            if dim is not None:
                raise MetricSpecError("duplicate 'dim'", lineno, col0)
            if len(words) != 2 or not words[1].isdigit() or int(words[1]) < 1:
                raise MetricSpecError("expected 'dim <positive integer>'", lineno, col0)
            dim = int(words[1])
        elif head == "coords":
            if coords is not None:
                raise MetricSpecError("duplicate 'coords'", lineno, col0)
            coords = words[1:]
            for w in coords:
                if not w.isidentifier() or w in ex.FUNCTION_NAMES:
                    raise MetricSpecError(f"invalid coordinate name {w!r}", lineno, line.find(w) + 1)
            if len(set(coords)) != len(coords):
                raise MetricSpecError("repeated coordinate name", lineno, col0)
        elif head == "param":
            rest = line.strip()[len("param"):]
            pname, eq, value = rest.partition("=")
            pname = pname.strip()
            if not eq or not pname.isidentifier() or pname in ex.FUNCTION_NAMES:
                raise MetricSpecError("expected 'param <id> = <literal>'", lineno, col0)
            try:
                params[pname] = float(value)
            except ValueError:
                eqpos = line.find("=")
                col = eqpos + 1 + (len(value) - len(value.lstrip())) + 1
                raise MetricSpecError(f"invalid literal {value.strip()!r}", lineno, col) from None
            if not math.isfinite(params[pname]):
                raise MetricSpecError("parameter values must be finite", lineno, col0)
        elif head == "domain":
            try:
                if len(words) != 4:
                    raise ValueError
                lo, hi = float(words[2]), float(words[3])
            except ValueError:
                raise MetricSpecError("expected 'domain <coord> <lo> <hi>'", lineno, col0) from None
            bounds[words[1]] = (lo, hi)
        elif head == "g":
            g_lines.append((lineno, line))
        else:
            raise MetricSpecError(f"unknown directive {head!r}", lineno, col0)

    if dim is None:
        raise MetricSpecError("missing 'dim'")
    if coords is None:
        raise MetricSpecError("missing 'coords'")
    if len(coords) != dim:
        raise MetricSpecError(f"dim is {dim} but {len(coords)} coordinates were declared")
    clash = set(params) & set(coords)
    if clash:
        raise MetricSpecError(f"names declared both as coordinate and parameter: {sorted(clash)}")
    for cname in bounds:
        if cname not in coords:
            raise MetricSpecError(f"domain given for undeclared coordinate {cname!r}")

    names = list(coords) + list(params)
    entries: dict[tuple[int, int], Expr] = {}
    for lineno, line in g_lines:
        head, eq, rhs = line.partition("=")
        idx = head.split()[1:]
        col0 = len(line) - len(line.lstrip()) + 1
        if not eq or len(idx) != 2 or not all(w.isdigit() for w in idx):
            raise MetricSpecError("expected 'g <i> <j> = <expression>'", lineno, col0)
        i, j = int(idx[0]), int(idx[1])
        if i >= dim or j >= dim:
            raise MetricSpecError(f"index ({i}, {j}) exceeds dim {dim}", lineno, col0)
        key = (min(i, j), max(i, j))
        if key in entries:
            raise MetricSpecError(f"entry {key} defined more than once", lineno, col0)
        offset = len(head) + 1
        try:
            entries[key] = ex.parse_expression(rhs, names)
        except ExpressionSyntaxError as err:
            raise MetricSpecError(str(err).rsplit(" (column", 1)[0], lineno, offset + err.pos + 1) from None
    for i in range(dim):
        if (i, i) not in entries:
            raise MetricSpecError(f"missing diagonal entry g {i} {i}")
    domain = tuple(bounds.get(c, (-1.0, 1.0)) for c in coords)
    for c, (lo, hi) in zip(coords, domain):
        if not lo < hi:
            raise MetricSpecError(f"empty domain interval for {c!r}")
    return MetricField(name, tuple(coords), entries, domain, params)


def _literal(v: float) -> str:
    return repr(float(v))


def format_metric_spec(field: MetricField) -> str:
    """Render a field as a spec document that parses back to the same values."""
    lines = [f"# {field.name}", f"dim {field.dim}", "coords " + " ".join(field.coords)]
    numeric = {k: v for k, v in field.params.items() if k not in field.coords}
    used = set()
    for e in field.entries.values():
        used |= e.symbols()
    for k, v in numeric.items():
        if k in used:
            lines.append(f"param {k} = {_literal(v)}")
    for c, (lo, hi) in zip(field.coords, field.domain):
        lines.append(f"domain {c} {_literal(lo)} {_literal(hi)}")
    for (i, j), e in field.entries.items():
        if i == j or e != Num(0.0):
            lines.append(f"g {i} {j} = {ex.to_source(e)}")
    return "\n".join(lines) + "\n"


# -- sampling ---------------------------------------------------------------


def sample_points(field: MetricField, count: int, seed: int = 0, max_draws: int | None = None) -> list[np.ndarray]:
    """Seeded scrambled-Halton points strictly inside the domain box.

    Points where the evaluated metric is not positive definite are rejected.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    lo = np.array([a for a, _ in field.domain])
    hi = np.array([b for _, b in field.domain])
    if np.any(hi <= lo):
        raise SamplingError("domain box is empty")
    margin = 0.05 * (hi - lo)
    lo, hi = lo + margin, hi - margin
    cap = max_draws if max_draws is not None else 50 * count + 50
    engine = qmc.Halton(d=field.dim, scramble=True, seed=seed)
    out: list[np.ndarray] = []
    drawn = 0
    while len(out) < count:
        if drawn >= cap:
            raise SamplingError(f"only {len(out)} of {count} points passed the positive-definiteness check")
        batch = engine.random(min(count - len(out), cap - drawn) if out else count)
        drawn += len(batch)
        for u in batch:
            p = lo + u * (hi - lo)
            try:
                g = field.evaluate(p)
            except (ValueError, ZeroDivisionError, OverflowError):
                continue
            if np.all(np.isfinite(g)) and np.linalg.eigvalsh(g)[0] > 0.0:
                out.append(p)
                if len(out) == count:
                    break
    return out

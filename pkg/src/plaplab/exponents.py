"""Exponent bookkeeping: the nu-window, q-hat, and the admissible range of p.

The Calderon-Zygmund constant C(n, q) has no closed form; it is supplied through
a :class:`CZConstantModel` whose provenance label is carried into every report.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyWindow, InvalidNu, ModelRangeError

SURROGATE_NOTE = ("threshold on |p-2| has no closed form; the p-range under the chosen "
                  "Calderon-Zygmund model is used as the operational surrogate")


@dataclass(frozen=True)
class CZConstantModel:
    """Mapping ``(n, q) -> C(n, q) > 0``."""

    evaluate_fn: Callable[[int, float], float]
    provenance: str

    def __call__(self, n: int, q: float) -> float:
        try:
            value = float(self.evaluate_fn(n, q))
        except ModelRangeError:
            raise
        except Exception as exc:  # user formulas may fail arbitrarily
            raise ModelRangeError(f"model {self.provenance!r} failed at n={n}, q={q}: {exc}") from exc
        if not (np.isfinite(value) and value > 0):
            raise ModelRangeError(f"model {self.provenance!r} returned {value} at n={n}, q={q}")
        return value

    @classmethod
    def constant(cls, c: float, provenance: str | None = None) -> "CZConstantModel":
        if not c > 0:
            raise ValueError("constant must be positive")
        return cls(lambda n, q: c, provenance or f"user-supplied: const {c:g}")

    @classmethod
    def formula(cls, fn: Callable[[int, float], float], provenance: str = "user-supplied: formula"):
        return cls(fn, provenance)

    @classmethod
    def table(cls, entries: dict[int, list[tuple[float, float]]],
              provenance: str = "user-supplied: table") -> "CZConstantModel":
        """Piecewise-linear interpolation in q of per-dimension tables.

        Each table must be nondecreasing in C as q increases; evaluation outside the
        tabulated q-range raises :class:`ModelRangeError`.
        """
        tables = {}
        for n, rows in entries.items():
            rows = sorted((float(q), float(c)) for q, c in rows)
            qs = np.array([r[0] for r in rows])
            cs = np.array([r[1] for r in rows])
            if np.any(cs <= 0):
                raise ValueError(f"table for n={n} has non-positive constants")
            if np.any(np.diff(cs) < 0):
                raise ValueError(f"table for n={n} is not nondecreasing in q")
            tables[int(n)] = (qs, cs)

        def lookup(n, q):
            if int(n) not in tables:
                raise ModelRangeError(f"no table for n={n}")
            qs, cs = tables[int(n)]
            if not qs[0] <= q <= qs[-1]:
                raise ModelRangeError(f"q={q} outside tabulated range [{qs[0]}, {qs[-1]}] for n={n}")
            return float(np.interp(q, qs, cs))

        return cls(lookup, provenance)

    @classmethod
    def heuristic(cls) -> "CZConstantModel":
        """Default table with C(n, q) = max(1, q - 1), the Riesz-transform-type growth.

        Not a rigorous bound. C(n, 2) = 1 is exact for the Laplacian on W^{2,2}_0.
        """
        qs = [2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 128, 256]
        rows = [(q, max(1.0, q - 1.0)) for q in qs]
        return cls.table({n: rows for n in range(2, 11)},
                         provenance="default heuristic: C(n,q)=max(1,q-1), not a rigorous constant")

    @classmethod
    def parse(cls, spec: str) -> "CZConstantModel":
        """``const:<C>``, ``heuristic``, or ``table:<path to JSON {n: [[q, C], ...]}>``."""
        if spec == "heuristic":
            return cls.heuristic()
        kind, _, arg = spec.partition(":")
        if kind == "const":
            return cls.constant(float(arg))
        if kind == "table":
            with open(arg) as fh:
                raw = json.load(fh)
            return cls.table({int(n): rows for n, rows in raw.items()},
                             provenance=f"user-supplied: table {arg}")
        raise ValueError(f"unrecognized CZ model {spec!r}")


def sobolev_exponent(n: int, r: float | None = None) -> float:
    """2n/(n-2) for n >= 3; the configured substitute ``r`` for n = 2."""
    if n >= 3:
        return 2.0 * n / (n - 2.0)
    if n == 2:
        if r is None:
            raise ValueError("n = 2 requires a substitute exponent r")
        return float(r)
    raise ValueError(f"dimension must be >= 2, got {n}")


def nu_window(l: float, n: int, r: float | None = None) -> tuple[float, float]:
    if not l > 1:
        raise ValueError(f"l must exceed 1, got {l}")
    lower = 2.0 * l / (l - 1.0)
    upper = sobolev_exponent(n, r)
    if lower >= upper:
        raise EmptyWindow(f"empty nu-window ({lower:g}, {upper:g}) for l={l}, n={n}")
    return lower, upper


def default_nu(l: float, n: int, r: float | None = None) -> float:
    lo, hi = nu_window(l, n, r)
    return 0.5 * (lo + hi)


def _q_hat_branches(k, l, nu):
    den = l * (nu - 2.0) - nu
    if den <= 0:
        raise InvalidNu(f"l(nu-2) - nu = {den:g} <= 0 for l={l}, nu={nu}")
    first = (1.0 / k + 1.0) * 2.0 * nu / (nu - 2.0)
    second = (2.0 - k) / k * l * nu / den
    return first, second


def q_hat(k: float, l: float, n: int, nu: float, r: float | None = None) -> float:
    """max{(1/k + 1) 2nu/(nu-2), ((2-k)/k) l nu / (l(nu-2) - nu)}.

    For k >= 2 the second coefficient is non-positive and only the first branch
    counts. The value is cross-checked against the form written with s = 1/k.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    lo, hi = nu_window(l, n, r)
    if not lo < nu < hi:
        raise InvalidNu(f"nu={nu} not strictly inside the window ({lo:g}, {hi:g})")
    first, second = _q_hat_branches(k, l, nu)
    value = first if k >= 2 else max(first, second)
    alt = q_hat_s_form(1.0 / k, l, nu)
    if k < 2 and not math.isclose(value, alt, rel_tol=1e-12, abs_tol=0.0):
        raise ArithmeticError(f"q-hat forms disagree: {value!r} vs {alt!r}")
    return value


def q_hat_s_form(s_hat: float, l: float, nu: float) -> float:
    """The same quantity written with s = 1/k: max{(s+1) 2nu/(nu-2), (2s-1) l nu/(l(nu-2)-nu)}."""
    den = l * (nu - 2.0) - nu
    if den <= 0:
        raise InvalidNu(f"l(nu-2) - nu = {den:g} <= 0")
    return max((s_hat + 1.0) * 2.0 * nu / (nu - 2.0), (2.0 * s_hat - 1.0) * l * nu / den)


def p_range(q_hat_value: float, n: int, model: CZConstantModel) -> tuple[float, float]:
    if not q_hat_value >= 2:
        raise ValueError(f"q-hat must be >= 2, got {q_hat_value}")
    C = model(n, q_hat_value)
    lo = 2.0 - 1.0 / C
    hi = min(2.0 + 1.0 / (q_hat_value - 1.0), 2.0 + 1.0 / C)
    return lo, hi


def reduced_k(k: float) -> float:
    """Weight exponent left after factoring out whole powers of the bounded gradient."""
    if k <= 1:
        return k
    frac = k - math.floor(k)
    return frac if frac > 0 else 1.0


@dataclass
class ExponentBudget:
    k: float
    l: float
    n: int
    nu: float | None
    p: float | None
    s_hat: float
    q_hat: float | None = None
    nu_window: tuple[float, float] | None = None
    p_range: tuple[float, float] | None = None
    r: float | None = None
    admissible: bool = False
    reasons: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    cz_model: str = ""
    reduced: "ExponentBudget | None" = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.reduced is not None:
            d["reduced"] = self.reduced.to_dict()
        return d


def admissibility_report(k: float, l: float, n: int, nu: float | None, p: float | None,
                         model: CZConstantModel, r: float | None = None) -> ExponentBudget:
    """Collect every hypothesis check into one record; failures become reasons."""
    rep = ExponentBudget(k=k, l=l, n=n, nu=nu, p=p, s_hat=1.0 / k if k > 0 else float("nan"),
                         r=r if n == 2 else None, cz_model=model.provenance)
    rep.notes.append(SURROGATE_NOTE)
    if not k > 0:
        rep.reasons.append("k <= 0")
        return rep
    if l <= n / 2:
        rep.reasons.append("l <= n/2")
    if n == 2 and r is None:
        rep.reasons.append("n = 2 requires r")
        return rep
    try:
        rep.nu_window = nu_window(l, n, r)
    except (EmptyWindow, ValueError) as exc:
        rep.reasons.append(f"empty nu-window: {exc}")
        return rep
    if rep.nu is None:
        rep.nu = 0.5 * sum(rep.nu_window)
        rep.notes.append("nu defaulted to the window midpoint")
    lo, hi = rep.nu_window
    if not lo < rep.nu < hi:
        rep.reasons.append(f"nu outside window ({lo:g}, {hi:g})")
        return rep
    rep.q_hat = q_hat(k, l, n, rep.nu, r)
    if k >= 2:
        rep.notes.append("k >= 2: second q-hat branch has non-positive coefficient; first branch only")
    try:
        rep.p_range = p_range(rep.q_hat, n, model)
    except ModelRangeError as exc:
        rep.reasons.append(f"CZ model cannot evaluate: {exc}")
        return rep
    if p is not None:
        if not rep.p_range[0] < p < rep.p_range[1]:
            rep.reasons.append("p outside range")
    else:
        rep.reasons.append("p not given")
    if k > 1:
        rep.reduced = admissibility_report(reduced_k(k), l, n, rep.nu, p, model, r)
        rep.notes.append(f"k > 1 reduces to k = {reduced_k(k):g} after factoring the bounded gradient")
    rep.admissible = not rep.reasons
    return rep

"""Conditional-probability estimators on classified readout outcomes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..rng import make_generator
from .mixture import fit_mixture, optimal_threshold


class EmptyConditionError(ValueError):
    """No shot satisfies the conditioning event."""


@dataclass(frozen=True)
class OutcomeTable:
    """Bits per shot (1 = bright) plus a post-selection mask."""

    bits: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        b = np.asarray(self.bits, dtype=np.int8)
        if b.ndim != 2:
            raise ValueError("bits must be a (shots, readouts) array")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("bits must be 0 or 1")
        m = np.ones(b.shape[0], dtype=bool) if self.mask is None else np.asarray(self.mask, dtype=bool)
        if m.shape != (b.shape[0],):
            raise ValueError("mask length must equal the number of shots")
        object.__setattr__(self, "bits", b)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_counts(cls, counts: np.ndarray, thresholds: float | Sequence[float],
                    mask: np.ndarray | None = None) -> "OutcomeTable":
        c = np.asarray(counts, dtype=float)
        th = np.broadcast_to(np.asarray(thresholds, dtype=float), (c.shape[1],))
        return cls((c >= th[None, :]).astype(np.int8), mask)

    @property
    def n_shots(self) -> int:
        return self.bits.shape[0]

    @property
    def n_readouts(self) -> int:
        return self.bits.shape[1]

    @property
    def selected(self) -> np.ndarray:
        return self.bits[self.mask]

    def post_select(self, readout: int, outcome: str = "B") -> "OutcomeTable":
        """Restrict further to shots with ``outcome`` at ``readout``."""
        want = 1 if outcome == "B" else 0
        return OutcomeTable(self.bits, self.mask & (self.bits[:, readout] == want))

    def string_counts(self) -> dict[str, int]:
        """Counts per bit string over the selected shots (first readout leftmost)."""
        sel = self.selected
        k = self.n_readouts
        weights = 1 << np.arange(k - 1, -1, -1)
        codes = sel.astype(np.int64) @ weights if sel.size else np.zeros(0, dtype=np.int64)
        hist = np.bincount(codes, minlength=1 << k)
        return {format(i, f"0{k}b"): int(hist[i]) for i in range(1 << k)}

    def resample(self, idx: np.ndarray) -> "OutcomeTable":
        return OutcomeTable(self.bits[idx], self.mask[idx])


def _event(table: OutcomeTable, cond: Mapping[int, str]) -> np.ndarray:
    sel = table.mask.copy()
    for i, o in cond.items():
        if i < 0 or i >= table.n_readouts:
            raise ValueError(f"readout index {i} out of range")
        if o not in ("B", "D"):
            raise ValueError("outcomes are 'B' or 'D'")
        sel &= table.bits[:, i] == (1 if o == "B" else 0)
    return sel


def conditional(table: OutcomeTable, target: Mapping[int, str], given: Mapping[int, str]) -> float:
    """``Pr(target | given)`` as a ratio of shot counts."""
    den = int(_event(table, given).sum())
    if den == 0:
        desc = " and ".join(f"{o}_{i}" for i, o in given.items()) or "any"
        raise EmptyConditionError(f"no shots satisfy the condition {desc}")
    num = int(_event(table, {**given, **target}).sum())
    return num / den


def fill_fraction(t: OutcomeTable, a: int = 0) -> float:
    return conditional(t, {a: "B"}, {})


def survival_bright(t: OutcomeTable, a: int = 0, b: int = 1) -> float:
    return conditional(t, {b: "B"}, {a: "B"})


def pump_efficiency(t: OutcomeTable, a: int = 0, b: int = 1) -> float:
    return conditional(t, {a: "B"}, {b: "B"})


def depol_dark_to_bright(t: OutcomeTable, a: int = 0, b: int = 1, c: int = 2) -> float:
    return conditional(t, {b: "B"}, {a: "D", c: "B"})


def depol_bright_to_dark(t: OutcomeTable, a: int = 0, b: int = 1, c: int = 2) -> float:
    return conditional(t, {b: "D"}, {a: "B", c: "B"})


def pi_transfer(t: OutcomeTable, a: int = 0, b: int = 1, c: int = 2) -> float:
    """State-averaged transition probability across a pi pulse between ``a`` and ``b``."""
    return 0.5 * (depol_dark_to_bright(t, a, b, c) + depol_bright_to_dark(t, a, b, c))


def pi_fidelity(t: OutcomeTable, a: int = 0, b: int = 1, c: int = 2) -> float:
    return 0.5 * (math.sqrt(depol_dark_to_bright(t, a, b, c)) + math.sqrt(depol_bright_to_dark(t, a, b, c)))


def dark_survival(t: OutcomeTable, a: int = 0, b: int = 1, c: int = 2) -> float:
    """``Pr(B_c | B_a and D_b)``: an atom seen dark at ``b`` is still present at ``c``."""
    return conditional(t, {c: "B"}, {a: "B", b: "D"})


ESTIMATORS: dict[str, Callable[..., float]] = {
    "fill_fraction": fill_fraction,
    "survival_bright": survival_bright,
    "pump_efficiency": pump_efficiency,
    "depol_DB": depol_dark_to_bright,
    "depol_BD": depol_bright_to_dark,
    "pi_transfer": pi_transfer,
    "pi_fidelity": pi_fidelity,
    "dark_survival": dark_survival,
}

ARITY = {"fill_fraction": 1, "survival_bright": 2, "pump_efficiency": 2, "depol_DB": 3, "depol_BD": 3,
         "pi_transfer": 3, "pi_fidelity": 3, "dark_survival": 3}


def estimators(table: OutcomeTable, kind: str, *readouts: int) -> float:
    """Evaluate a named estimator on ``readouts`` (defaults to the first ones)."""
    if kind not in ESTIMATORS:
        raise ValueError(f"unknown estimator {kind!r}; choose from {sorted(ESTIMATORS)}")
    need = ARITY[kind]
    idx = readouts or tuple(range(need))
    if len(idx) != need or table.n_readouts < max(idx) + 1:
        raise ValueError(f"{kind} needs {need} readouts")
    return ESTIMATORS[kind](table, *idx)


def binomial_std(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else float("nan")


# --------------------------------------------------------------- bootstrap


@dataclass(frozen=True)
class BootstrapConfig:
    n_sets: int = 200
    set_size: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_sets < 1 or self.set_size < 1:
            raise ValueError("n_sets and set_size must be positive")


class BootstrapError(RuntimeError):
    pass


def bootstrap(data, estimator: Callable, config: BootstrapConfig, n_items: int | None = None) -> tuple[float, float]:
    """Mean and standard deviation of ``estimator`` over resampled sets.

    ``data`` is an :class:`OutcomeTable`, an array (rows resampled) or any
    object with ``resample(idx)``; ``n_items`` overrides its length.
    """
    if isinstance(data, np.ndarray):
        n = data.shape[0]
        take = lambda idx: data[idx]  # noqa: E731
    else:
        n = n_items if n_items is not None else getattr(data, "n_shots")
        take = data.resample
    if config.set_size > n:
        raise ValueError("set_size exceeds the number of shots")
    vals = []
    failures = 0
    last_err: Exception | None = None
    for k in range(config.n_sets):
        rng = make_generator(config.seed, k)
        idx = rng.integers(0, n, config.set_size)
        try:
            vals.append(float(estimator(take(idx))))
        except (EmptyConditionError, ValueError, ArithmeticError, RuntimeError) as e:
            failures += 1
            last_err = e
    if failures > config.n_sets / 2:
        raise BootstrapError(f"estimator failed in {failures}/{config.n_sets} sets; last error: {last_err}")
    arr = np.asarray(vals)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def fidelity_bootstrap(counts: np.ndarray, config: BootstrapConfig) -> tuple[float, float]:
    """Bootstrap of the optimal-threshold discrimination fidelity."""
    return bootstrap(np.asarray(counts, dtype=float), lambda x: optimal_threshold(fit_mixture(x)).F, config)


# ------------------------------------------------------------- correlations


@dataclass(frozen=True)
class CorrelationResult:
    matrix: np.ndarray
    undefined: np.ndarray  # True where a column has zero variance


def correlation_matrix(table: OutcomeTable) -> CorrelationResult:
    """Pearson coefficients between bit columns of the selected shots.

    Entries touching a constant column are set to 0 and flagged in
    ``undefined`` (the diagonal stays 1).
    """
    x = table.selected.astype(float)
    if x.shape[1] < 2:
        raise ValueError("need at least two readouts")
    if x.shape[0] < 2:
        raise ValueError("need at least two selected shots")
    xc = x - x.mean(axis=0)
    sd = np.sqrt((xc**2).mean(axis=0))
    ok = sd > 0
    cov = xc.T @ xc / x.shape[0]
    denom = np.outer(np.where(ok, sd, 1.0), np.where(ok, sd, 1.0))
    m = cov / denom
    undefined = ~np.outer(ok, ok)
    m[undefined] = 0.0
    np.fill_diagonal(m, 1.0)
    np.fill_diagonal(undefined, False)
    return CorrelationResult(m, undefined)


# ------------------------------------------------------ three-readout sweep


@dataclass(frozen=True)
class FidelitySweep:
    theta_b: np.ndarray
    F_bright: np.ndarray   # Pr(B_c | B_a and B_b), nan where the condition is empty
    F_dark: np.ndarray     # Pr(D_c | B_a and D_b)
    F_avg: np.ndarray
    empty_bright: np.ndarray
    empty_dark: np.ndarray
    plateau_bright: float
    plateau_dark: float
    theta_a: float
    theta_c: float


def three_readout_fidelity_sweep(counts: np.ndarray, theta_b: Sequence[float] | None = None,
                                 thresholds: tuple[float, float] | None = None,
                                 plateau_points: int = 5) -> FidelitySweep:
    """Readout fidelity versus the middle threshold of an (atom, qubit, qubit) sequence.

    ``theta_a`` and ``theta_c`` default to the optimal thresholds of mixture
    fits to readouts ``a`` and ``c``. Plateaus are means over the last (bright)
    or first (dark) ``plateau_points`` non-empty grid points.
    """
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.shape[1] != 3:
        raise ValueError("need a (shots, 3) count array")
    if thresholds is None:
        th_a = optimal_threshold(fit_mixture(c[:, 0])).theta
        th_c = optimal_threshold(fit_mixture(c[:, 2])).theta
    else:
        th_a, th_c = thresholds
    grid = np.asarray(theta_b if theta_b is not None else np.linspace(np.percentile(c[:, 1], 0.5),
                                                                      np.percentile(c[:, 1], 99.5), 101))
    a_b = c[:, 0] >= th_a
    c_b = c[:, 2] >= th_c
    fb, fd, fa = (np.full(grid.size, np.nan) for _ in range(3))
    eb, ed = np.zeros(grid.size, bool), np.zeros(grid.size, bool)
    for k, th in enumerate(grid):
        b_b = c[:, 1] >= th
        nb = int((a_b & b_b).sum())
        nd = int((a_b & ~b_b).sum())
        if nb:
            fb[k] = (a_b & b_b & c_b).sum() / nb
        else:
            eb[k] = True
        if nd:
            fd[k] = (a_b & ~b_b & ~c_b).sum() / nd
        else:
            ed[k] = True
        if nb and nd:
            fa[k] = (fb[k] * nb + fd[k] * nd) / (nb + nd)
    if eb.any() or ed.any():
        warnings.warn("some sweep points have empty conditioning sets and were skipped", RuntimeWarning)
    ok_b = np.flatnonzero(~np.isnan(fb))
    ok_d = np.flatnonzero(~np.isnan(fd))
    pb = float(fb[ok_b[-plateau_points:]].mean()) if ok_b.size else float("nan")
    pd = float(fd[ok_d[:plateau_points]].mean()) if ok_d.size else float("nan")
    return FidelitySweep(grid, fb, fd, fa, eb, ed, pb, pd, th_a, th_c)

"""Monte Carlo risk harness: scenarios, risk tables, slopes and reports.

A :class:`Scenario` fixes a true density, a grid of sample sizes and a
number of replicates. :func:`run_scenario` draws every replicate from its
own seed, derived from (seed, n, replicate), so the table is reproducible
regardless of the number of worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import json
import os
import time

import numpy as np
from scipy import stats

from .densities import (Density, UniformPolytope, _rng, density_from_json, density_to_json,
                        theta_floor_for_mass)
from .divergences import dx_sq, hellinger_sq
from .errors import InvalidSample, LogConcaveError
from .geometry import convex_hull
from .mle import FitConfig, fit

CSV_COLUMNS = ["n", "replicate", "dx_sq", "hellinger_sq", "iterations", "wall_ms", "converged"]


# ----------------------------------------------------------------------
# theory exponents

@dataclass(frozen=True)
class RateRegistry:
    """Risk exponents (risk ~ n^{-rate} up to logs) and our slope acceptance bands.

    ``bands`` maps a scenario name to an interval for the fitted log-log
    slope of the mean risk. The bands are calibrations for desk-scale n,
    not theory.
    """

    worst_case: dict = field(default_factory=lambda: {1: 4 / 5, 2: 2 / 3, 3: 1 / 2})
    polylog_adaptive: dict = field(default_factory=lambda: {2: 9 / 2, 3: 8.0})
    polylog_polytope: dict = field(default_factory=lambda: {2: 3.0, 3: 6.0})
    theta_rate_d3: float = 4 / 7
    bands: dict = field(default_factory=lambda: {
        "uniform_interval": (-1.2, -0.8),
        "uniform_triangle": (-np.inf, -0.8),
        "uniform_64gon": (-0.80, -0.55),
    })

    @staticmethod
    def smooth_rate(beta):
        """r_beta = (beta + 3) / (beta + 7) capped at 4/7 (d = 3)."""
        return min((beta + 3) / (beta + 7), 4 / 7)

    def band(self, name):
        return self.bands[name]


RATES = RateRegistry()


# ----------------------------------------------------------------------
# scenarios and tables

@dataclass
class Scenario:
    """One Monte Carlo experiment.

    ``density`` is a Density or its JSON description; ``solver`` holds
    FitConfig overrides; ``divergences`` lists the columns to compute
    (``dx_sq`` always, ``hellinger_sq`` optionally).
    """

    density: object
    d: int
    n_grid: list
    replicates: int
    seed: int = 0
    solver: dict = field(default_factory=dict)
    divergences: tuple = ("dx_sq",)
    name: str = ""

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if any(n < self.d + 1 for n in self.n_grid):
            raise ValueError("every n must be at least d + 1")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not isinstance(self.density, Density):
            self.density = density_from_json(self.density)
        if self.density.dim != self.d:
            raise ValueError("density dimension does not match d")

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        obj["divergences"] = tuple(obj.get("divergences", ("dx_sq",)))
        return cls(**obj)

    def to_json(self):
        return {"density": density_to_json(self.density), "d": self.d, "n_grid": self.n_grid,
                "replicates": self.replicates, "seed": self.seed, "solver": self.solver,
                "divergences": list(self.divergences), "name": self.name}


def replicate_seed(seed, n, replicate):
    """Independent stream for replicate ``replicate`` at size ``n``."""
    return np.random.SeedSequence([int(seed) % 2 ** 64, int(n), int(replicate)])


@dataclass
class RiskTable:
    """Rows (one per fit) plus per-n summaries and the log-log slope."""

    rows: list = field(default_factory=list)
    name: str = ""

    def metric(self, n, key="dx_sq"):
        return np.array([r[key] for r in self.rows
                         if r["n"] == n and r["converged"] and np.isfinite(r[key])])

    @property
    def n_values(self):
        return sorted({r["n"] for r in self.rows})

    def failures(self):
        return sum(1 for r in self.rows if not r["converged"])

    def summary(self, key="dx_sq"):
        """Per-n mean, standard error and count, over converged fits."""
        out = []
        for n in self.n_values:
            v = self.metric(n, key)
            se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else float("nan")
            out.append({"n": n, "mean": float(v.mean()) if len(v) else float("nan"),
                        "se": se, "count": int(len(v))})
        return out

    def slope(self, key="dx_sq"):
        """Least-squares slope of log mean risk on log n, with its standard error."""
        s = [r for r in self.summary(key) if r["mean"] > 0]
        return loglog_slope([r["n"] for r in s], [r["mean"] for r in s])

    def to_json(self, key="dx_sq"):
        slope, se = self.slope(key) if len(self.n_values) >= 2 else (float("nan"), float("nan"))
        return {"name": self.name, "summary": self.summary(key), "slope": slope, "slope_se": se,
                "failures": self.failures(), "rows": len(self.rows)}


def loglog_slope(n, risk):
    """(slope, standard error) of log risk against log n."""
    x, y = np.log(np.asarray(n, dtype=float)), np.log(np.asarray(risk, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two sample sizes")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if len(x) == 2:
        return float(coef[0]), 0.0
    res = y - A @ coef
    s2 = res @ res / (len(x) - 2)
    cov = s2 * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def welch_t(a, b):
    """Two-sample Welch t statistic for mean(b) - mean(a)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float((b.mean() - a.mean()) / np.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b)))


# ----------------------------------------------------------------------
# running

def _one(scenario, n, r):
    rng = _rng(replicate_seed(scenario.seed, n, r))
    X = scenario.density.sample(n, rng)
    X = X[:, None] if X.ndim == 1 else X
    row = {"n": n, "replicate": r, "dx_sq": float("nan"), "hellinger_sq": float("nan"),
           "iterations": 0, "wall_ms": 0.0, "converged": False}
    t0 = time.perf_counter()
    try:
        res = fit(X, FitConfig(**scenario.solver))
        fhat = res.density()
        row["dx_sq"] = dx_sq(fhat, scenario.density, X)
        if "hellinger_sq" in scenario.divergences:
            row["hellinger_sq"] = hellinger_sq(fhat, scenario.density)
        row["iterations"] = res.iterations
        row["converged"] = res.converged
    except (LogConcaveError, InvalidSample, np.linalg.LinAlgError, ValueError):
        row["converged"] = False
    row["wall_ms"] = 1e3 * (time.perf_counter() - t0)
    return row


def run_scenario(scenario, threads=1, partial_path=None, progress=None):
    """Fit every (n, replicate) and collect a RiskTable.

    Rows are ordered by (n, replicate) whatever the thread count. If
    ``partial_path`` is given, rows are appended there as they complete,
    so an interrupted run leaves its finished fits on disk.
    """
    jobs = [(n, r) for n in scenario.n_grid for r in range(scenario.replicates)]
    done = {}
    sink = None
    if partial_path is not None:
        sink = open(partial_path, "w", newline="")
        w = csv.DictWriter(sink, fieldnames=CSV_COLUMNS)
        w.writeheader()

    def record(row):
        done[(row["n"], row["replicate"])] = row
        if sink is not None:
            w.writerow(_csv_row(row))
            sink.flush()
        if progress is not None:
            progress(row)

    try:
        if threads <= 1:
            for n, r in jobs:
                record(_one(scenario, n, r))
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                for row in ex.map(lambda job: _one(scenario, *job), jobs):
                    record(row)
    finally:
        if sink is not None:
            sink.close()
    return RiskTable([done[j] for j in jobs], scenario.name)


# ----------------------------------------------------------------------
# the lower semi-continuity demonstration

@dataclass
class LSCResult:
    """Rows (ell, replicate, dx_sq) with the monotone trend test."""

    rows: list
    ell_grid: list
    masses: list

    def means(self):
        return {l: float(np.mean([r["dx_sq"] for r in self.rows if r["ell"] == l])) for l in self.ell_grid}

    def trend_pvalue(self, permute_seed=None):
        """One-sided Spearman test for risk increasing in ell.

        With ``permute_seed`` the ell labels are shuffled first; this is
        the negative control.
        """
        if len(self.ell_grid) < 2:
            return 0.0
        ell = np.array([r["ell"] for r in self.rows], dtype=float)
        risk = np.array([r["dx_sq"] for r in self.rows])
        if permute_seed is not None:
            ell = _rng(permute_seed).permutation(ell)
        return float(stats.spearmanr(ell, risk, alternative="greater").pvalue)

    def passed(self, alpha=0.05):
        return len(self.ell_grid) < 2 or self.trend_pvalue() < alpha


def lsc_sequence(P, ell, center=None, radius=None):
    """f^(ell): exp(-s dist(x, B)) on P, putting mass max(1 - 1/ell, |B|/|P|) on B.

    ell = 0 is the uniform density on P. As ell grows the measures converge
    to the uniform distribution on B while staying bounded below on P.
    """
    mass = 0.0 if ell == 0 else 1.0 - 1.0 / ell
    return theta_floor_for_mass(P, mass, center=center, radius=radius)


def lsc_demo(P=None, center=None, radius=None, ell_grid=(0, 5), n=200, replicates=100,
             seed=0, solver=None, threads=1):
    """Mean d_X^2 of the MLE along the sequence f^(ell) at fixed n."""
    if P is None:
        P = convex_hull(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    ell_grid = sorted(int(l) for l in ell_grid)
    rows, masses = [], []
    for l in ell_grid:
        f = lsc_sequence(P, l, center, radius)
        masses.append(float(f.mass_in_ball()))
        sc = Scenario(f, P.dim, [n], replicates, seed=seed + 7919 * l, solver=solver or {})
        for row in run_scenario(sc, threads).rows:
            rows.append({"ell": l, "replicate": row["replicate"], "dx_sq": row["dx_sq"],
                         "converged": row["converged"]})
    return LSCResult(rows, ell_grid, masses)


# ----------------------------------------------------------------------
# output

def _csv_row(r, timings=True):
    out = {}
    for k in CSV_COLUMNS:
        v = r[k]
        if k == "wall_ms" and not timings:
            out[k] = ""
        elif k == "converged":
            out[k] = "true" if v else "false"
        elif isinstance(v, float):
            out[k] = repr(v)
        else:
            out[k] = v
    return out


def to_csv(table, timings=True):
    """CSV text; with ``timings=False`` the wall_ms column is left blank,
    which makes reruns with the same seed byte-identical."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in table.rows:
        w.writerow(_csv_row(r, timings))
    return buf.getvalue()


def to_svg(table, key="dx_sq", width=480, height=360):
    """Log-log plot of mean risk with +-2 SE bars and the fitted slope."""
    s = [r for r in table.summary(key) if r["mean"] > 0]
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
    if not s:
        return head + "</svg>\n"
    pad = 50
    x = np.log([r["n"] for r in s])
    mean = np.array([r["mean"] for r in s])
    se = np.nan_to_num(np.array([r["se"] for r in s]))
    lo = np.log(np.maximum(mean - 2 * se, mean * 1e-3))
    hi = np.log(mean + 2 * se)
    y = np.log(mean)
    x0, x1 = x.min() - 0.1, x.max() + 0.1
    y0, y1 = lo.min() - 0.1, hi.max() + 0.1
    px = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)
    py = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)
    parts = [head, f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="black"/>']
    for xi, yi, l, h in zip(x, y, lo, hi):
        parts.append(f'<line x1="{px(xi):.2f}" y1="{py(l):.2f}" x2="{px(xi):.2f}" y2="{py(h):.2f}" stroke="gray"/>')
        parts.append(f'<circle cx="{px(xi):.2f}" cy="{py(yi):.2f}" r="3" fill="black"/>')
    if len(s) >= 2:
        slope, sse = loglog_slope([r["n"] for r in s], mean)
        b = np.mean(y) - slope * np.mean(x)
        parts.append(f'<line x1="{px(x[0]):.2f}" y1="{py(slope * x[0] + b):.2f}" '
                     f'x2="{px(x[-1]):.2f}" y2="{py(slope * x[-1] + b):.2f}" stroke="red"/>')
        parts.append(f'<text x="{pad + 5}" y="{pad - 10}" font-size="12">slope {slope:.3f} '
                     f'(se {sse:.3f})</text>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 15}" font-size="12">log n</text>')
    parts.append(f'<text x="10" y="{height / 2:.0f}" font-size="12">log mean {key}</text>')
    return "\n".join(parts) + "\n</svg>\n"


def emit(table, fmt, path, timings=True):
    """Write ``table`` as csv, svg or json to ``path``."""
    if fmt == "csv":
        text = to_csv(table, timings)
    elif fmt == "svg":
        text = to_svg(table)
    elif fmt == "json":
        text = json.dumps(table.to_json(), indent=2, default=float) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


# ----------------------------------------------------------------------
# canned scenarios

def uniform_interval_scenario(replicates=100, seed=0, n_grid=(50, 100, 200, 400, 800)):
    P = convex_hull(np.array([[0.0], [1.0]]))
    return Scenario(UniformPolytope(P), 1, list(n_grid), replicates, seed, name="uniform_interval")


def uniform_polygon_scenario(kind, replicates=50, seed=0, n_grid=(100, 200, 400, 800, 1600)):
    """``kind`` is "triangle" or "64gon"."""
    from .densities import centered_simplex, regular_polygon
    P = centered_simplex(2) if kind == "triangle" else convex_hull(regular_polygon(64))
    return Scenario(UniformPolytope(P), 2, list(n_grid), replicates, seed, name=f"uniform_{kind}")

"""Binary hidden-variable models for the quantum-controlled interferometer.

The hidden variable takes two values, ``p`` (particle) and ``w`` (wave). A model
is fixed by five numbers:

    f = p(lambda=p)
    x = p(a=0 | b=0, lambda=w)     wave in the open interferometer
    y = p(a=0 | b=1, lambda=p)     particle in the closed interferometer
    z = p(b=0 | lambda=p)
    v = p(b=0 | lambda=w)

Realism pins the remaining two behaviours: a particle in the open set-up gives
(1/2, 1/2) and a wave in the closed set-up gives (cos^2(phi/2), sin^2(phi/2)).
Matching the quantum joint p(a, b) is equivalent to three residuals vanishing:

    r1 = v (1-f) (x - 1/2)
    r2 = f (1-z) (y - cos^2(phi/2))
    r3 = z f + v (1-f) - cos^2(alpha)
"""
from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .core import ATOL

RESIDUAL_TOL = 1e-9
VARS = ("f", "x", "y", "z", "v")
DUALITY = "duality-restoring"
CONSPIRATORIAL = "conspiratorial"

# (b, lambda) branches of the source/ancilla joint
BRANCHES = ("b0_particle", "b0_wave", "b1_particle", "b1_wave")


class DegenerateBiasError(ValueError):
    """cos^2(alpha) is 0 or 1, which changes the factor structure of the system."""


def _in_unit(value: float, name: str, tol: float = ATOL) -> float:
    value = float(value)
    if not np.isfinite(value) or value < -tol or value > 1 + tol:
        raise ValueError(f"{name}={value!r} is not a probability")
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class BinaryDistribution:
    p0: float
    p1: float

    def __post_init__(self):
        object.__setattr__(self, "p0", _in_unit(self.p0, "p0"))
        object.__setattr__(self, "p1", _in_unit(self.p1, "p1"))
        if abs(self.p0 + self.p1 - 1.0) > ATOL:
            raise ValueError(f"({self.p0}, {self.p1}) does not sum to 1")

    @classmethod
    def of(cls, p0: float) -> "BinaryDistribution":
        return cls(p0, 1.0 - p0)

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1])


@dataclass(frozen=True)
class JointDistribution:
    """p(a, b) indexed ``table[a, b]``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float).reshape(2, 2)
        if np.any(t < -ATOL) or abs(t.sum() - 1.0) > ATOL:
            raise ValueError(f"not a joint distribution: {t.tolist()}")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def max_deviation(self, other: "JointDistribution") -> float:
        return float(np.max(np.abs(self.table - other.table)))


@dataclass(frozen=True)
class HVModel:
    f: float
    x: float
    y: float
    z: float
    v: float
    alpha: float
    phi: float

    def __post_init__(self):
        for name in VARS:
            object.__setattr__(self, name, _in_unit(getattr(self, name), name))

    @classmethod
    def conspiratorial(cls, phi: float, alpha: float, x: float = 0.5, y: float = 0.5) -> "HVModel":
        """v=0, z=1, f=cos^2(alpha): the source tracks the ancilla bias."""
        return cls(f=np.cos(alpha) ** 2, x=x, y=y, z=1.0, v=0.0, alpha=alpha, phi=phi)

    def values(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in VARS])

    def p_lambda(self) -> BinaryDistribution:
        return BinaryDistribution.of(self.f)

    def p_b_given_lambda(self) -> dict:
        return {"p": BinaryDistribution.of(self.z), "w": BinaryDistribution.of(self.v)}

    def p_a_given_b_lambda(self) -> dict:
        c2 = np.cos(self.phi / 2) ** 2
        return {
            (0, "p"): BinaryDistribution.of(0.5),
            (0, "w"): BinaryDistribution.of(self.x),
            (1, "p"): BinaryDistribution.of(self.y),
            (1, "w"): BinaryDistribution.of(c2),
        }

    def branch_weights(self) -> dict:
        """p(b, lambda) for the four branches."""
        return dict(zip(BRANCHES, _branch_weights(self.values())))

    def correlation_signature(self) -> float:
        """p(b=0, lambda=p) + p(b=1, lambda=w); equals 1 when lambda fixes the set-up."""
        w = self.branch_weights()
        return w["b0_particle"] + w["b1_wave"]


def _branch_weights(vals):
    f, _, _, z, v = vals
    return np.array([z * f, v * (1 - f), (1 - z) * f, (1 - v) * (1 - f)])


def quantum_joint(phi: float, alpha: float) -> JointDistribution:
    ca, sa = np.cos(alpha) ** 2, np.sin(alpha) ** 2
    c2, s2 = np.cos(phi / 2) ** 2, np.sin(phi / 2) ** 2
    return JointDistribution(np.array([[ca / 2, sa * c2], [ca / 2, sa * s2]]))


def hv_joint(model: HVModel) -> JointDistribution:
    """sum over lambda of p(a|b,lambda) p(b|lambda) p(lambda)."""
    behaviour = model.p_a_given_b_lambda()
    pb = model.p_b_given_lambda()
    pl = {"p": model.f, "w": 1.0 - model.f}
    t = np.zeros((2, 2))
    for b in (0, 1):
        for lam in ("p", "w"):
            weight = (pb[lam].p0 if b == 0 else pb[lam].p1) * pl[lam]
            t[:, b] += weight * behaviour[(b, lam)].as_array()
    return JointDistribution(t)


def residuals_array(points: np.ndarray, phi: float, alpha: float) -> np.ndarray:
    """Vectorized residuals for an (..., 5) array of (f, x, y, z, v)."""
    f, x, y, z, v = np.moveaxis(np.asarray(points, dtype=float), -1, 0)
    c2 = np.cos(phi / 2) ** 2
    ca = np.cos(alpha) ** 2
    return np.stack(
        [v * (1 - f) * (x - 0.5), f * (1 - z) * (y - c2), z * f + v * (1 - f) - ca], axis=-1
    )


def adequacy_residuals(model: HVModel) -> tuple[float, float, float]:
    r = residuals_array(model.values(), model.phi, model.alpha)
    return float(r[0]), float(r[1]), float(r[2])


def is_adequate(model: HVModel, tol: float = RESIDUAL_TOL) -> bool:
    return max(abs(r) for r in adequacy_residuals(model)) < tol


def is_degenerate_bias(alpha: float, tol: float = ATOL) -> bool:
    ca = np.cos(alpha) ** 2
    return ca < tol or ca > 1 - tol


def is_degenerate_phase(phi: float, tol: float = ATOL) -> bool:
    c2 = np.cos(phi / 2) ** 2
    return c2 < tol or c2 > 1 - tol


# ---------------------------------------------------------------- case split

_f, _x, _y, _z, _v = SYMS = sp.symbols("f x y z v")
_SYM = dict(zip(VARS, SYMS))
COS2_ALPHA = sp.Symbol("cos2_alpha")
COS2_HALF_PHI = sp.Symbol("cos2_half_phi")

# each residual vanishes through one of its factors; value is the pinned (var, value)
R1_FACTORS = {"v=0": ("v", sp.Integer(0)), "f=1": ("f", sp.Integer(1)), "x=1/2": ("x", sp.Rational(1, 2))}
R2_FACTORS = {"f=0": ("f", sp.Integer(0)), "z=1": ("z", sp.Integer(1)), "y=cos^2(phi/2)": ("y", COS2_HALF_PHI)}


@dataclass
class SolutionFamily:
    """One branch of the case split of r1 = r2 = r3 = 0.

    ``pinned`` holds symbolic values for variables fixed by a vanishing factor or
    solved from r3. Variables in ``linked`` are tied together by ``relation``;
    those in ``free`` are unconstrained.
    """

    label: str
    factors: tuple[str, str]
    pinned: dict
    relation: sp.Expr | None
    linked: tuple[str, ...]
    free: tuple[str, ...]
    phi: float
    alpha: float
    classical: bool = False
    interpretation: str = DUALITY
    unreachable: tuple[str, ...] = ()
    residual_bound: float = float("nan")
    notes: list = field(default_factory=list)

    @property
    def subs(self) -> dict:
        return {COS2_ALPHA: np.cos(self.alpha) ** 2, COS2_HALF_PHI: np.cos(self.phi / 2) ** 2}

    def pinned_values(self) -> dict:
        return {k: float(sp.sympify(e).subs(self.subs)) for k, e in self.pinned.items()}

    def contains(self, points: np.ndarray, tol: float = RESIDUAL_TOL) -> np.ndarray:
        """Membership mask for an (N, 5) array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.all((pts >= -tol) & (pts <= 1 + tol), axis=1)
        for name, value in self.pinned_values().items():
            ok &= np.abs(pts[:, VARS.index(name)] - value) <= tol
        if self.classical:
            ok &= np.abs(pts[:, VARS.index("v")] - pts[:, VARS.index("z")]) <= tol
        r3 = residuals_array(pts, self.phi, self.alpha)[:, 2]
        return ok & (np.abs(r3) <= tol)

    def sample(self, rng: np.random.Generator, n: int, max_tries: int = 200) -> np.ndarray:
        """``n`` random members as an (n, 5) array.

        Linked variables other than the pivot are drawn uniformly or, half the
        time, from {0, 1}; the pivot is then solved from r3 and rejected if it
        leaves [0, 1]. Vertex draws keep degenerate relations (e.g. z f = 1,
        whose only solution is a corner) reachable.
        """
        pinned = self.pinned_values()
        out = []
        ca = np.cos(self.alpha) ** 2
        pivots = [s for s in ("v", "z", "f") if s in self.linked]
        for attempt in range(n * max_tries):
            if len(out) == n:
                break
            vals = {k: rng.random() for k in VARS}
            for k in self.linked:
                if rng.random() < 0.5:
                    vals[k] = float(rng.integers(2))
            vals.update(pinned)
            if self.classical and "v" not in pinned:
                vals["v"] = vals["z"]
            if pivots and not self._solve_pivot(vals, pivots[attempt % len(pivots)], ca):
                continue
            out.append([vals[k] for k in VARS])
        if len(out) < n:
            raise RuntimeError(f"could only sample {len(out)} of {n} members of {self.label}")
        return np.array(out)

    def _solve_pivot(self, vals: dict, piv: str, ca: float) -> bool:
        g0 = _r3_numeric({**vals, piv: 0.0}, self.classical) - ca
        g1 = _r3_numeric({**vals, piv: 1.0}, self.classical) - ca
        if abs(g1 - g0) < 1e-12:
            return False
        value = -g0 / (g1 - g0)
        if not -1e-15 <= value <= 1 + 1e-15:
            return False
        vals[piv] = min(max(value, 0.0), 1.0)
        if self.classical and piv in ("v", "z"):
            vals["v"] = vals["z"] = vals[piv]
        return True

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "factors": list(self.factors),
            "constraints": [f"{k} = {sp.sstr(e)}" for k, e in self.pinned.items()]
            + ([f"{sp.sstr(self.relation + COS2_ALPHA)} = cos2_alpha"] if self.relation is not None else [])
            + (["v = z"] if self.classical else []),
            "pinned_values": self.pinned_values(),
            "linked": list(self.linked),
            "free": list(self.free),
            "unreachable_branches": list(self.unreachable),
            "interpretation": self.interpretation,
            "residual_bound": self.residual_bound,
            "notes": list(self.notes),
        }


def _r3_numeric(vals: dict, classical: bool) -> float:
    v = vals["z"] if classical else vals["v"]
    return vals["z"] * vals["f"] + v * (1 - vals["f"])


def _vertex_range(expr: sp.Expr, syms: list, subs: dict) -> tuple[float, float]:
    # a multilinear expression on a box takes its extremes at the vertices
    values = [
        float(expr.subs({**subs, **dict(zip(syms, corner))}))
        for corner in itertools.product((0, 1), repeat=len(syms))
    ]
    return min(values), max(values)


def _case_family(r1: str, r2: str, phi: float, alpha: float, classical: bool, tol: float):
    """Solve r3 given the two vanishing factors; None if the case is empty."""
    pinned: dict = {}
    for var, value in (R1_FACTORS[r1], R2_FACTORS[r2]):
        if var in pinned and pinned[var] != value:
            return None
        pinned[var] = value
    if classical:
        if "v" in pinned and "z" in pinned and pinned["v"] != pinned["z"]:
            return None
        if "v" in pinned:
            pinned.setdefault("z", pinned["v"])
        elif "z" in pinned:
            pinned["v"] = pinned["z"]

    subs_num = {COS2_ALPHA: np.cos(alpha) ** 2, COS2_HALF_PHI: np.cos(phi / 2) ** 2}
    r3 = _z * _f + (_z if classical else _v) * (1 - _f) - COS2_ALPHA
    rel = sp.expand(r3.subs({_SYM[k]: e for k, e in pinned.items()}))
    unknown = [s for s in (_f, _z, _v) if s in rel.free_symbols]
    lo, hi = _vertex_range(rel, unknown, subs_num)
    if lo > tol or hi < -tol:
        return None

    relation = rel
    linked: tuple[str, ...] = tuple(str(s) for s in unknown)
    if not unknown:
        relation, linked = None, ()
    elif len(unknown) == 1:
        (sym,) = unknown
        (sol,) = sp.solve(rel, sym)
        pinned[str(sym)] = sp.simplify(sol)
        if classical and str(sym) in ("v", "z"):
            pinned["v" if str(sym) == "z" else "z"] = pinned[str(sym)]
        relation, linked = None, ()
    constrained = set(pinned) | set(linked)
    if classical and ("v" in constrained or "z" in constrained):
        constrained |= {"v", "z"}
    free = tuple(k for k in VARS if k not in constrained)
    return SolutionFamily(
        label=f"{r1}, {r2}",
        factors=(r1, r2),
        pinned=pinned,
        relation=relation,
        linked=linked,
        free=free,
        phi=phi,
        alpha=alpha,
        classical=classical,
    )


def _annotate(fam: SolutionFamily, rng: np.random.Generator, n: int) -> SolutionFamily:
    members = fam.sample(rng, n)
    weights = np.array([_branch_weights(m) for m in members])
    fam.unreachable = tuple(b for b, col in zip(BRANCHES, weights.T) if np.max(col) < ATOL)
    res = residuals_array(members, fam.phi, fam.alpha)
    fam.residual_bound = float(np.max(np.abs(res)))
    # conspiratorial: no type is made to mimic the other (x and y both free)
    # while both lambda values are actually emitted
    f_vals = members[:, 0]
    both_types = np.max(np.minimum(f_vals, 1 - f_vals)) > ATOL
    if "x" in fam.free and "y" in fam.free and both_types:
        fam.interpretation = CONSPIRATORIAL
        fam.notes.append("lambda perfectly correlated with the interferometer set-up")
    for var, branch in (("x", "b0_wave"), ("y", "b1_particle")):
        if var in fam.free and branch in fam.unreachable:
            fam.notes.append(f"{var} undetermined: branch {branch} never occurs")
    return fam


def enumerate_solution_families(
    phi: float,
    alpha: float,
    classical: bool = False,
    allow_degenerate: bool = False,
    tol: float = RESIDUAL_TOL,
    seed: int = 0,
    n_annotate: int = 256,
) -> list[SolutionFamily]:
    """Complete case split of the adequacy system over [0, 1]^5.

    With ``classical=True`` the spacelike-separation constraint v = z is imposed.
    """
    if is_degenerate_bias(alpha) and not allow_degenerate:
        raise DegenerateBiasError(f"cos^2(alpha) = {np.cos(alpha) ** 2!r} is degenerate")
    rng = np.random.default_rng(seed)
    families = []
    for r1, r2 in itertools.product(R1_FACTORS, R2_FACTORS):
        fam = _case_family(r1, r2, phi, alpha, classical, tol)
        if fam is None:
            continue
        if is_degenerate_bias(alpha):
            fam.notes.append("degenerate bias: the ancilla is not in superposition")
        if is_degenerate_phase(phi):
            fam.notes.append("degenerate phase: the wave behaviour is deterministic")
        families.append(_annotate(fam, rng, n_annotate))
    return families


def in_any_family(points: np.ndarray, families: list[SolutionFamily], tol: float = RESIDUAL_TOL) -> np.ndarray:
    pts = np.atleast_2d(points)
    mask = np.zeros(len(pts), dtype=bool)
    for fam in families:
        mask |= fam.contains(pts, tol)
    return mask


# ---------------------------------------------------------------- brute force oracle

def grid_oracle(
    phi: float,
    alpha: float,
    step: float = 1 / 64,
    tol: float = RESIDUAL_TOL,
    classical: bool = False,
    workers: int = 1,
) -> np.ndarray:
    """Every grid point of [0, 1]^5 (spacing ``step``) with all residuals below ``tol``.

    Pruned on r3 first: only (f, z, v) triples that pass are expanded over x and y.
    Returns an (N, 5) array of (f, x, y, z, v).
    """
    n = int(round(1 / step))
    grid = np.arange(n + 1) / n
    c2 = np.cos(phi / 2) ** 2
    ca = np.cos(alpha) ** 2

    def f_slice(f: float) -> list:
        z, v = np.meshgrid(grid, grid, indexing="ij")
        if classical:
            z = v = grid[:, None]
        r3 = z * f + v * (1 - f) - ca
        hits = []
        for zi, vi in zip(*[a[np.abs(r3) < tol] for a in np.broadcast_arrays(z, v)]):
            xs = grid[np.abs(vi * (1 - f) * (grid - 0.5)) < tol]
            ys = grid[np.abs(f * (1 - zi) * (grid - c2)) < tol]
            if len(xs) and len(ys):
                xx, yy = np.meshgrid(xs, ys, indexing="ij")
                block = np.empty((xx.size, 5))
                block[:, 0], block[:, 1], block[:, 2] = f, xx.ravel(), yy.ravel()
                block[:, 3], block[:, 4] = zi, vi
                hits.append(block)
        return hits

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            slices = list(pool.map(f_slice, grid))
    else:
        slices = [f_slice(f) for f in grid]
    blocks = [b for s in slices for b in s]
    return np.concatenate(blocks) if blocks else np.empty((0, 5))


# ---------------------------------------------------------------- classical control

@dataclass
class ClassicalReport:
    phi: float
    alpha: float
    families: list
    z_forced: float
    conspiratorial_present: bool
    lambda_independent: bool
    sample_max_behaviour_gap: float

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "alpha": self.alpha,
            "constraint": "v = z",
            "z_forced": self.z_forced,
            "families": [f.to_dict() for f in self.families],
            "conspiratorial_present": self.conspiratorial_present,
            "lambda_independent_behaviour": self.lambda_independent,
            "sample_max_behaviour_gap": self.sample_max_behaviour_gap,
        }


def behaviour_gaps(points: np.ndarray, phi: float) -> np.ndarray:
    """Weighted lambda-dependence of the photon behaviour per set-up.

    Column 0 is p(b=0|.) weight times |x - 1/2|, column 1 the analogue for y on b=1.
    Both vanish iff the photon behaves the same for both lambda values wherever
    both lambda values actually reach that set-up.
    """
    f, x, y, z, v = np.atleast_2d(points).T
    c2 = np.cos(phi / 2) ** 2
    open_gap = np.minimum(z * f, v * (1 - f)) * np.abs(x - 0.5)
    closed_gap = np.minimum((1 - z) * f, (1 - v) * (1 - f)) * np.abs(y - c2)
    return np.stack([open_gap, closed_gap], axis=-1)


def classical_control_analysis(phi: float, alpha: float, seed: int = 0, n_samples: int = 1000) -> ClassicalReport:
    if is_degenerate_bias(alpha):
        raise DegenerateBiasError("classical-control analysis needs 0 < cos^2(alpha) < 1")
    families = enumerate_solution_families(phi, alpha, classical=True, seed=seed)
    ca = np.cos(alpha) ** 2
    z_vals = {fam.label: fam.pinned_values().get("z") for fam in families}
    if any(z is None or abs(z - ca) > RESIDUAL_TOL for z in z_vals.values()):
        raise AssertionError(f"v = z should force z = cos^2(alpha); got {z_vals}")
    rng = np.random.default_rng(seed)
    gap = 0.0
    for fam in families:
        gap = max(gap, float(np.max(behaviour_gaps(fam.sample(rng, n_samples), phi))))
    return ClassicalReport(
        phi=phi,
        alpha=alpha,
        families=families,
        z_forced=ca,
        conspiratorial_present=any(f.interpretation == CONSPIRATORIAL for f in families),
        lambda_independent=gap < RESIDUAL_TOL,
        sample_max_behaviour_gap=gap,
    )


# ---------------------------------------------------------------- general HV theories

class VacuousPredicateWarning(UserWarning):
    pass


@dataclass
class HVTheory:
    """Finite hidden-variable theory over several measurements.

    ``response[s_1, ..., s_k, lam, o_1, ..., o_k]`` is p(o_1..o_k | s_1..s_k, lam)
    and ``hidden[s_1, ..., s_k, lam]`` is p(lam | s_1..s_k).
    """

    response: np.ndarray
    hidden: np.ndarray
    measurement_names: tuple = ()

    def __post_init__(self):
        self.response = np.asarray(self.response, dtype=float)
        self.hidden = np.asarray(self.hidden, dtype=float)
        k = (self.response.ndim - 1) // 2
        if self.response.ndim != 2 * k + 1 or self.hidden.shape != self.response.shape[: k + 1]:
            raise ValueError(
                f"inconsistent shapes: response {self.response.shape}, hidden {self.hidden.shape}"
            )
        if np.any(self.response < -ATOL) or np.any(self.hidden < -ATOL):
            raise ValueError("negative probability in theory tables")
        out_axes = tuple(range(k + 1, 2 * k + 1))
        if np.max(np.abs(self.response.sum(axis=out_axes) - 1)) > ATOL:
            raise ValueError("response rows do not sum to 1")
        if np.max(np.abs(self.hidden.sum(axis=-1) - 1)) > ATOL:
            raise ValueError("p(lambda | settings) rows do not sum to 1")
        if not self.measurement_names:
            self.measurement_names = tuple(f"M{i}" for i in range(k))

    @property
    def n_measurements(self) -> int:
        return (self.response.ndim - 1) // 2

    @property
    def n_settings(self) -> tuple:
        return self.response.shape[: self.n_measurements]

    @property
    def n_lambda(self) -> int:
        return self.response.shape[self.n_measurements]

    def marginal(self, i: int) -> np.ndarray:
        """p(o_i | all settings, lam), shape (*settings, n_lambda, n_outcomes_i)."""
        k = self.n_measurements
        drop = tuple(k + 1 + j for j in range(k) if j != i)
        return self.response.sum(axis=drop)


def _invariant_over_other_settings(marg: np.ndarray, i: int, k: int, tol: float) -> bool:
    for j in range(k):
        if j == i:
            continue
        ref = np.take(marg, [0], axis=j)
        if np.max(np.abs(marg - ref)) > tol:
            return False
    return True


def check_strong_determinism(theory: HVTheory, tol: float = ATOL) -> bool:
    """Every measurement's outcome is a function of its own setting and lambda."""
    k = theory.n_measurements
    for i in range(k):
        marg = theory.marginal(i)
        if np.min(np.max(marg, axis=-1)) < 1 - tol:
            return False
        if not _invariant_over_other_settings(marg, i, k, tol):
            return False
    return True


def check_parameter_independence(theory: HVTheory, tol: float = ATOL) -> bool:
    k = theory.n_measurements
    if k < 2:
        warnings.warn("parameter independence is vacuous for a single measurement", VacuousPredicateWarning)
        return True
    return all(_invariant_over_other_settings(theory.marginal(i), i, k, tol) for i in range(k))


def check_lambda_independence(theory: HVTheory, tol: float = ATOL) -> bool:
    flat = theory.hidden.reshape(-1, theory.n_lambda)
    if len(flat) < 2:
        raise ValueError("lambda independence needs at least two setting combinations")
    return bool(np.max(np.abs(flat - flat[0])) <= tol)


def check_weak_determinism(theory: HVTheory, full_assignment, tol: float = ATOL) -> bool:
    """Joint outcome is a point mass once every setting and lambda are fixed.

    ``full_assignment`` is ``(settings, lam)`` with one setting index per measurement.
    """
    try:
        settings, lam = full_assignment
        settings = tuple(int(s) for s in settings)
    except (TypeError, ValueError) as exc:
        raise ValueError("full assignment must be (settings tuple, lambda index)") from exc
    if lam is None or len(settings) != theory.n_measurements:
        raise ValueError(
            f"incomplete assignment: need {theory.n_measurements} settings and a lambda value"
        )
    joint = theory.response[settings + (int(lam),)]
    return bool(np.max(joint) >= 1 - tol)


def deterministic_theory(outcome_fn, n_settings, n_outcomes, n_lambda, hidden=None) -> HVTheory:
    """Theory whose outcomes are ``outcome_fn(settings, lam) -> tuple of outcomes``."""
    k = len(n_settings)
    response = np.zeros(tuple(n_settings) + (n_lambda,) + tuple(n_outcomes))
    for settings in itertools.product(*(range(n) for n in n_settings)):
        for lam in range(n_lambda):
            response[settings + (lam,) + tuple(outcome_fn(settings, lam))] = 1.0
    if hidden is None:
        hidden = np.full(tuple(n_settings) + (n_lambda,), 1.0 / n_lambda)
    return HVTheory(response, hidden, tuple(f"M{i}" for i in range(k)))


def random_deterministic_theory(rng: np.random.Generator, local: bool | None = None) -> HVTheory:
    """Random two- or three-party deterministic theory.

    With ``local=True`` each outcome depends on its own setting and lambda only;
    with ``local=False`` it may read every setting. ``None`` picks at random.
    """
    k = int(rng.integers(2, 4))
    n_settings = tuple(int(rng.integers(1, 4)) for _ in range(k))
    n_outcomes = tuple(int(rng.integers(2, 4)) for _ in range(k))
    n_lambda = int(rng.integers(1, 4))
    if local is None:
        local = bool(rng.integers(2))
    if local:
        tables = [rng.integers(0, n_outcomes[i], size=(n_settings[i], n_lambda)) for i in range(k)]

        def fn(settings, lam):
            return tuple(int(tables[i][settings[i], lam]) for i in range(k))
    else:
        tables = [rng.integers(0, n_outcomes[i], size=n_settings + (n_lambda,)) for i in range(k)]

        def fn(settings, lam):
            return tuple(int(tables[i][settings + (lam,)]) for i in range(k))

    hidden = rng.dirichlet(np.ones(n_lambda), size=n_settings)
    return deterministic_theory(fn, n_settings, n_outcomes, n_lambda, hidden)


def mzi_theory(model: HVModel) -> HVTheory:
    """The interferometer as a one-measurement theory whose setting is the set-up b.

    p(lambda | b) comes from Bayes' rule on the model; an unreachable set-up
    falls back to the prior p(lambda).
    """
    behaviour = model.p_a_given_b_lambda()
    response = np.array([[behaviour[(b, lam)].as_array() for lam in ("p", "w")] for b in (0, 1)])
    w = model.branch_weights()
    joint = np.array([[w["b0_particle"], w["b0_wave"]], [w["b1_particle"], w["b1_wave"]]])
    hidden = np.empty((2, 2))
    for b in (0, 1):
        pb = joint[b].sum()
        hidden[b] = joint[b] / pb if pb > ATOL else [model.f, 1 - model.f]
    return HVTheory(response, hidden, ("photon",))


def bias_setting_theory(phi: float, alphas) -> HVTheory:
    """Conspiratorial model with the ancilla bias itself treated as the setting.

    In that model particles always meet the open set-up and waves the closed
    one, so p(a | alpha, lambda) is fixed by realism while p(lambda | alpha)
    follows (cos^2 alpha, sin^2 alpha).
    """
    c2 = np.cos(phi / 2) ** 2
    alphas = list(alphas)
    response = np.array([[[0.5, 0.5], [c2, 1 - c2]] for _ in alphas])
    hidden = np.array([[np.cos(a) ** 2, np.sin(a) ** 2] for a in alphas])
    return HVTheory(response, hidden, ("photon",))

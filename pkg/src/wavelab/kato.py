"""Sampled checks of the estimates behind local well-posedness.

Each ratio estimator draws random fields from a Sobolev ball, evaluates one
inequality as ``lhs / rhs`` per sample and reports max/median ratios. The
reported ratios are empirical lower bounds on admissible constants. A report
is *stable* when doubling the sample count moves the max ratio by less than
25%.

Random fields are keyed by ``(seed, index)`` so every estimator is
reproducible and independent of evaluation order.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidIndexRange, InvalidParams
from .model import FluxVariant, ModelParams, f_nonlocal
from .spectral import Field, Grid, bessel_potential, dealias, derivative, sobolev_norm

STABILITY_DRIFT = 0.25
DEGENERATE = 1e-12


@dataclass(frozen=True)
class SampleSpec:
    s: float = 2.0
    radius: float = 1.0
    n_samples: int = 200
    seed: int = 42
    spectral_decay_margin: float = 0.6

    def __post_init__(self):
        if not self.s > 1.5:
            raise InvalidParams(f"s must exceed 3/2, got {self.s}")
        if not self.radius > 0:
            raise InvalidParams(f"radius must be positive, got {self.radius}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise InvalidParams(f"n_samples must be an integer >= 2, got {self.n_samples}")
        if not self.spectral_decay_margin > 0.5:
            raise InvalidParams(
                f"spectral_decay_margin must exceed 1/2, got {self.spectral_decay_margin}")


@dataclass(frozen=True)
class EstimateReport:
    label: str
    max_ratio: float
    median_ratio: float
    n_samples: int
    seed: int
    s: float
    radius: float
    params_digest: str
    stable: bool
    extra: dict = field(default_factory=dict, compare=False)

    def to_record(self) -> dict:
        rec = {"label": self.label, "s": self.s, "radius": self.radius,
               "n_samples": self.n_samples, "seed": self.seed,
               "max_ratio": self.max_ratio, "median_ratio": self.median_ratio,
               "stable": self.stable, "params_digest": self.params_digest}
        rec.update(self.extra)
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=False)


def digest(*objs) -> str:
    parts = []
    for o in objs:
        parts.append(json.dumps(asdict(o) if hasattr(o, "__dataclass_fields__") else o,
                                sort_keys=True, default=str))
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)])


def _random_coeffs(grid: Grid, exponent: float, rng: np.random.Generator) -> np.ndarray:
    n = grid.n
    half = n // 2
    xi = grid.wavenumbers
    c = np.zeros(n, dtype=complex)
    z = rng.standard_normal(half - 1) + 1j * rng.standard_normal(half - 1)
    c[1:half] = z / np.sqrt(2)
    c[half + 1:] = np.conj(c[1:half][::-1])
    c[0] = rng.standard_normal()
    return c * (1.0 + xi**2) ** (-exponent / 2)


def random_sobolev_field(grid: Grid, spec: SampleSpec, index: int) -> Field:
    """Random field in the ball ||u||_s <= radius.

    Coefficients are complex Gaussians damped by
    ``(1 + xi^2)^(-(s + margin)/2)``; the field is then rescaled to norm
    ``radius * r`` with r uniform on (0, 1].
    """
    rng = _rng(spec.seed, index)
    c = _random_coeffs(grid, spec.s + spec.spectral_decay_margin, rng)
    u = Field(grid, np.fft.ifft(c * grid.n).real)
    r = 1.0 - rng.random()
    norm = sobolev_norm(u, spec.s)
    return u * (spec.radius * r / norm)


def _unit_field(grid: Grid, spec: SampleSpec, index: int) -> Field:
    u = random_sobolev_field(grid, spec, index)
    return u * (1.0 / sobolev_norm(u, spec.s))


def _collect(sampler: Callable[[int], float | None], n: int) -> np.ndarray:
    vals = [sampler(i) for i in range(n)]
    return np.array([v for v in vals if v is not None], dtype=float)


def _estimate(label: str, sampler, spec: SampleSpec, pdigest: str, **extra) -> EstimateReport:
    r1 = _collect(sampler, spec.n_samples)
    r2 = np.concatenate([r1, _collect(lambda i: sampler(i + spec.n_samples), spec.n_samples)])
    if r1.size == 0:
        return EstimateReport(label, float("nan"), float("nan"), 0, spec.seed, spec.s,
                              spec.radius, pdigest, False, extra)
    m1, m2 = float(r1.max()), float(r2.max())
    if m1 == 0.0:
        stable = m2 == 0.0
    else:
        stable = bool(np.isfinite(m1) and abs(m2 - m1) < STABILITY_DRIFT * m1)
    return EstimateReport(label, m1, float(np.median(r1)), int(r1.size), spec.seed,
                          spec.s, spec.radius, pdigest, stable, extra)


# -- quasi-accretivity -------------------------------------------------------

@dataclass(frozen=True)
class AccretivityReport:
    """Outcome of the quadratic-form check for A(u) = (1+u) d_x.

    ``min_margin`` is the smallest ``<A(u)w,w>/||w||^2 + max|u_x|/2`` seen;
    the lower bound holds when it is not below ``-tol``.
    """

    min_quotient: float
    min_margin: float
    max_identity_residual: float
    n_tests: int
    seed: int
    tol: float = 1e-10

    @property
    def identity_holds(self) -> bool:
        return self.max_identity_residual <= self.tol

    @property
    def bound_holds(self) -> bool:
        return self.min_margin >= -self.tol

    def to_record(self) -> dict:
        return {"label": "accretivity", "n_samples": self.n_tests, "seed": self.seed,
                "min_quotient": self.min_quotient, "min_margin": self.min_margin,
                "max_identity_residual": self.max_identity_residual,
                "identity_holds": self.identity_holds, "bound_holds": self.bound_holds}


def accretivity_terms(u: Field, w: Field) -> tuple[float, float]:
    """Return (<(1+u) w_x, w>, -1/2 int u_x w^2) in discrete L2."""
    h = u.grid.spacing
    wx = derivative(w, 1).values
    ux = derivative(u, 1).values
    ip = h * float(np.sum((1.0 + u.values) * wx * w.values))
    ident = -0.5 * h * float(np.sum(ux * w.values**2))
    return ip, ident


def _accretivity(pairs, n_tests, seed, tol) -> AccretivityReport:
    min_q, min_margin, max_res = np.inf, np.inf, 0.0
    for u, w in pairs:
        w2 = sobolev_norm(w, 0) ** 2
        if w2 < DEGENERATE:
            continue
        ux_max = float(np.max(np.abs(derivative(u, 1).values)))
        ip, ident = accretivity_terms(u, w)
        q = ip / w2
        min_q = min(min_q, q)
        min_margin = min(min_margin, q + 0.5 * ux_max)
        max_res = max(max_res, abs(ip - ident) / (w2 * (1.0 + ux_max)))
    return AccretivityReport(float(min_q), float(min_margin), float(max_res), n_tests, seed, tol)


def _test_function(grid: Grid, seed: int, index: int) -> Field:
    # band-limited to the dealiased range, where discrete integration by parts is exact
    c = _random_coeffs(grid, 1.0, _rng(seed, index))
    return dealias(Field(grid, np.fft.ifft(c * grid.n).real))


def accretivity_lower_bound(u: Field, n_tests: int = 100, seed: int = 0,
                            tol: float = 1e-10) -> AccretivityReport:
    """Check <A(u)w, w> >= -1/2 max|u_x| ||w||^2 against random test fields w."""
    pairs = ((u, _test_function(u.grid, seed, i)) for i in range(n_tests))
    return _accretivity(pairs, n_tests, seed, tol)


def accretivity_pairs(grid: Grid, spec: SampleSpec, n_pairs: int = 100,
                      tol: float = 1e-10) -> AccretivityReport:
    """Same check over independent (u, w) pairs, u drawn from the H^s ball."""
    pairs = ((dealias(random_sobolev_field(grid, spec, i)),
              _test_function(grid, spec.seed + 1, i)) for i in range(n_pairs))
    return _accretivity(pairs, n_pairs, spec.seed, tol)


# -- operator bound A(u) - A(v) ------------------------------------------------

def a2_ratio(u: Field, v: Field, w: Field, s: float) -> float | None:
    d = u - v
    dn = sobolev_norm(d, 0)
    wn = sobolev_norm(w, s)
    if dn < DEGENERATE or wn < DEGENERATE:
        return None
    return sobolev_norm(d * derivative(w, 1), 0) / (dn * wn)


def a2_operator_ratio(spec: SampleSpec, grid: Grid) -> EstimateReport:
    def sample(i):
        u, v, w = (random_sobolev_field(grid, spec, 3 * i + r) for r in range(3))
        return a2_ratio(u, v, w, spec.s)

    return _estimate("a2_operator", sample, spec, digest(spec, grid))


# -- commutator B(u) -------------------------------------------------------------

def apply_B(u: Field, w: Field, s: float) -> Field:
    """B(u)w = Lambda^s (u d_x Lambda^-s w) - u d_x w."""
    inner = u * derivative(bessel_potential(w, -s), 1)
    return bessel_potential(inner, s) - u * derivative(w, 1)


def b_ratio(u: Field, w: Field, s: float) -> float | None:
    un, wn = sobolev_norm(u, s), sobolev_norm(w, 0)
    if un < DEGENERATE or wn < DEGENERATE:
        return None
    return sobolev_norm(apply_B(u, w, s), 0) / (un * wn)


def b_bound_ratio(spec: SampleSpec, grid: Grid) -> EstimateReport:
    def sample(i):
        u = random_sobolev_field(grid, spec, 2 * i)
        w = random_sobolev_field(grid, spec, 2 * i + 1)
        return b_ratio(u, w, spec.s)

    return _estimate("b_bound", sample, spec, digest(spec, grid))


def b_difference_ratio(spec: SampleSpec, grid: Grid, index_offset: int = 10**6) -> EstimateReport:
    """||(B(u) - B(v))w|| / (||u - v||_s ||w||) on samples disjoint from b_bound."""
    def sample(i):
        j = index_offset + 3 * i
        u, v, w = (random_sobolev_field(grid, spec, j + r) for r in range(3))
        dn, wn = sobolev_norm(u - v, spec.s), sobolev_norm(w, 0)
        if dn < DEGENERATE or wn < DEGENERATE:
            return None
        diff = apply_B(u, w, spec.s) - apply_B(v, w, spec.s)
        return sobolev_norm(diff, 0) / (dn * wn)

    return _estimate("b_difference", sample, spec, digest(spec, grid))


# -- Lipschitz bounds for the nonlocal term ------------------------------------

def f_lipschitz_ratio(spec: SampleSpec, grid: Grid, p: ModelParams,
                      v: FluxVariant = FluxVariant.REDERIVED,
                      norm_index: str | float = "s") -> EstimateReport:
    """||f(u) - f(v)||_r / ||u - v||_r with r = 0 or s.

    Also reports ``M``, the largest ||f(u)||_s seen over the sampled u.
    """
    r = spec.s if norm_index == "s" else float(norm_index)
    if r not in (0.0, spec.s):
        raise InvalidIndexRange(f"norm_index must be 0 or s, got {norm_index}")
    m_seen = [0.0]

    def sample(i):
        a = random_sobolev_field(grid, spec, 2 * i)
        b = random_sobolev_field(grid, spec, 2 * i + 1)
        dn = sobolev_norm(a - b, r)
        if dn < DEGENERATE:
            return None
        fa = f_nonlocal(a, p, v)
        if i < spec.n_samples:
            m_seen[0] = max(m_seen[0], sobolev_norm(fa, spec.s))
        return sobolev_norm(fa - f_nonlocal(b, p, v), r) / dn

    label = f"f_lipschitz_{v.value}_{'L2' if r == 0 else 'Hs'}"
    rep = _estimate(label, sample, spec, digest(spec, grid, p, v.value, r))
    rep.extra["M"] = m_seen[0]
    return rep


# -- appendix estimates --------------------------------------------------------

def product_ratio(f: Field, g: Field, s: float, t: float) -> float | None:
    fn, gn = sobolev_norm(f, s), sobolev_norm(g, t)
    if fn < DEGENERATE or gn < DEGENERATE:
        return None
    return sobolev_norm(f * g, t) / (fn * gn)


def product_estimate_ratio(spec: SampleSpec, grid: Grid, t: float) -> EstimateReport:
    if not (-spec.s < t <= spec.s):
        raise InvalidIndexRange(f"t={t} outside (-{spec.s}, {spec.s}]")

    def sample(i):
        f = random_sobolev_field(grid, spec, 2 * i)
        g = random_sobolev_field(grid, spec, 2 * i + 1)
        return product_ratio(f, g, spec.s, t)

    return _estimate(f"product_t={t:g}", sample, spec, digest(spec, grid, t))


def commutator_term(f: Field, w: Field, s_tilde: float, t_tilde: float) -> Field:
    """Lambda^-s~ [Lambda^(s~+t~+1), M_f] Lambda^-t~ w."""
    order = s_tilde + t_tilde + 1.0
    z = bessel_potential(w, -t_tilde)
    comm = bessel_potential(f * z, order) - f * bessel_potential(z, order)
    return bessel_potential(comm, -s_tilde)


def commutator_ratio(f: Field, w: Field, s: float, s_tilde: float, t_tilde: float) -> float | None:
    fn, wn = sobolev_norm(f, s), sobolev_norm(w, 0)
    if fn < DEGENERATE or wn < DEGENERATE:
        return None
    return sobolev_norm(commutator_term(f, w, s_tilde, t_tilde), 0) / (fn * wn)


def commutator_estimate_ratio(spec: SampleSpec, grid: Grid, s_tilde: float,
                              t_tilde: float) -> EstimateReport:
    bound = spec.s - 1.0
    if abs(s_tilde) > bound + 1e-12 or abs(t_tilde) > bound + 1e-12:
        raise InvalidIndexRange(
            f"|s~|, |t~| must be <= s - 1 = {bound}, got s~={s_tilde}, t~={t_tilde}")

    def sample(i):
        f = random_sobolev_field(grid, spec, 2 * i)
        w = random_sobolev_field(grid, spec, 2 * i + 1)
        return commutator_ratio(f, w, spec.s, s_tilde, t_tilde)

    label = f"commutator_s~={s_tilde:g}_t~={t_tilde:g}"
    return _estimate(label, sample, spec, digest(spec, grid, s_tilde, t_tilde))


# -- continuous dependence on initial data -------------------------------------

@dataclass(frozen=True)
class ContinuityReport:
    deltas: tuple[float, ...]
    amplification: tuple[float, ...]
    sup_diff: tuple[float, ...]
    terminations: tuple[str, ...]
    s: float
    T: float

    @property
    def propagated_blowup(self) -> bool:
        return any(t != "ReachedTEnd" for t in self.terminations)

    @property
    def bounded(self) -> bool:
        finite = [d for d in self.amplification if not np.isnan(d)]
        return bool(finite) and all(np.isfinite(finite)) and not self.propagated_blowup

    @property
    def converging(self) -> bool:
        pairs = sorted((d, e) for d, e in zip(self.deltas, self.sup_diff) if d > 0)
        diffs = [e for _, e in pairs]
        return all(a < b for a, b in zip(diffs, diffs[1:]))

    def to_record(self) -> dict:
        return {"label": "continuous_dependence", "s": self.s, "T": self.T,
                "deltas": list(self.deltas), "amplification": list(self.amplification),
                "sup_diff": list(self.sup_diff), "terminations": list(self.terminations),
                "bounded": self.bounded, "converging": self.converging}


def continuous_dependence(u0: Field, deltas, p: ModelParams, cfg, T: float, s: float = 2.0,
                          seed: int = 0, rhs_choice="direct") -> ContinuityReport:
    """Perturb ``u0`` by ``delta`` times a unit H^s field and track the gap.

    The amplification is ``sup_t ||u - v||_s / delta`` over the snapshot
    times shared by both runs. A run ending before T is recorded in
    ``terminations`` instead of raising.
    """
    from dataclasses import replace

    from .timestep import integrate

    c = replace(cfg, t_end=T, dt=min(cfg.dt, T))
    base = integrate(u0, p, c, rhs_choice)
    direction = _unit_field(u0.grid, SampleSpec(s=s, seed=seed), 0)
    amps, sups, terms = [], [], []
    for delta in deltas:
        if delta == 0:
            amps.append(float("nan"))
            sups.append(0.0)
            terms.append(base.termination.value)
            continue
        run = integrate(u0 + delta * direction, p, c, rhs_choice)
        terms.append(run.termination.value)
        n = min(len(base.times), len(run.times))
        if not np.allclose(base.times[:n], run.times[:n], rtol=0, atol=1e-12):
            raise ValueError("perturbed run took different steps; lower dt below the CFL cap")
        sup = max(sobolev_norm(a - b, s) for a, b in zip(base.snapshots[:n], run.snapshots[:n]))
        sups.append(float(sup))
        amps.append(float(sup / delta))
    return ContinuityReport(tuple(float(d) for d in deltas), tuple(amps), tuple(sups),
                            tuple(terms), s, T)

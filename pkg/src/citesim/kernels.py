"""Citation kernels: how a paper's selection weight splits into direct and indirect parts.

Every kernel has the form ``weight = direct + indirect`` where the direct part
is static per paper and the indirect part grows with received citations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import zeta

from . import _backend
from .errors import DegenerateKernelError, ParameterError
from .population import DirectTransform, intrinsic_weights

MODES = (
    "uniform",
    "pure_ca",
    "price",
    "gen_price",
    "team",
    "team_general",
    "direct_only_team",
    "powerlaw_attract",
    "influence",
)
TEAM_MODES = ("team", "team_general", "direct_only_team", "influence")
NO_INDIRECT_MODES = ("uniform", "direct_only_team")


def normalize_mode(mode: str) -> str:
    m = str(mode).strip().lower().replace("-", "_")
    if m not in MODES:
        raise ParameterError(f"unknown kernel mode {mode!r}; expected one of {', '.join(MODES)}")
    return m


def _finite(name, value, lo=None, lo_strict=False):
    v = float(value)
    if not math.isfinite(v):
        raise ParameterError(f"{name} must be finite, got {value}")
    if lo is not None and (v < lo or (lo_strict and v == lo)):
        op = ">" if lo_strict else ">="
        raise ParameterError(f"{name} must be {op} {lo}, got {value}")
    return v


@dataclass(frozen=True)
class InfluenceSpec:
    """Influence-weighted cumulative advantage.

    Each citation adds ``g(I) / mean_g`` to the cited paper's indirect weight,
    where ``I`` is the citing item's influence drawn from ``distribution``
    and ``g(I) = I ** g_exponent`` (``g_kind="identity"`` fixes the exponent
    at 1). ``mean_g`` is the analytic mean of ``g`` so that an average citing
    item contributes exactly 1.

    distributions: ``zipf`` (discrete power law on 1, 2, ... with ``exponent``),
    ``lognormal`` (``mu``, ``sigma``) and ``constant`` (``value``).
    """

    g_kind: str = "identity"
    g_exponent: float = 1.0
    distribution: str = "zipf"
    exponent: float = 2.5
    mu: float = 0.0
    sigma: float = 1.0
    value: float = 1.0
    mean_g: float | None = None

    def __post_init__(self):
        if self.g_kind not in ("identity", "power"):
            raise ParameterError(f"g_kind must be identity or power, got {self.g_kind!r}")
        if self.g_kind == "identity" and self.g_exponent != 1.0:
            object.__setattr__(self, "g_exponent", 1.0)
        _finite("g_exponent", self.g_exponent, 0.0)
        if self.distribution not in ("zipf", "lognormal", "constant"):
            raise ParameterError(f"unknown influence distribution {self.distribution!r}")
        _finite("exponent", self.exponent, 1.0, lo_strict=True)
        _finite("mu", self.mu)
        _finite("sigma", self.sigma, 0.0)
        _finite("value", self.value, 0.0, lo_strict=True)
        analytic = self.analytic_mean_g()
        if self.mean_g is None:
            object.__setattr__(self, "mean_g", analytic)
        elif abs(self.mean_g - analytic) > 1e-6 * max(1.0, abs(analytic)):
            raise ParameterError(f"mean_g={self.mean_g} disagrees with the analytic mean {analytic}")

    def analytic_mean_g(self) -> float:
        p = self.g_exponent
        if self.distribution == "zipf":
            if self.exponent - p <= 1.0:
                raise ParameterError(
                    f"g(I)=I^{p} has infinite mean under a zipf({self.exponent}) influence distribution"
                )
            return float(zeta(self.exponent - p) / zeta(self.exponent))
        if self.distribution == "lognormal":
            return math.exp(p * self.mu + 0.5 * p * p * self.sigma**2)
        return self.value**p

    def g(self, influence):
        return np.asarray(influence, dtype=float) ** self.g_exponent

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.distribution == "zipf":
            return rng.zipf(self.exponent, size).astype(float)
        if self.distribution == "lognormal":
            return rng.lognormal(self.mu, self.sigma, size)
        return np.full(size, self.value, dtype=float)

    def increments(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Per-citation indirect-weight increments ``g(I) / mean_g``."""
        return self.g(self.draw(rng, size)) / self.mean_g

    @classmethod
    def from_dict(cls, d: dict) -> "InfluenceSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown influence fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "g_kind": self.g_kind,
            "g_exponent": self.g_exponent,
            "distribution": self.distribution,
            "exponent": self.exponent,
            "mu": self.mu,
            "sigma": self.sigma,
            "value": self.value,
            "mean_g": self.mean_g,
        }


@dataclass(frozen=True)
class KernelSpec:
    mode: str = "team"
    alpha: float = 1.0
    epsilon: float = 0.01
    beta: float = 1.0
    transform: DirectTransform = field(default_factory=DirectTransform)
    attract_exponent: float = 2.5
    influence: InfluenceSpec | None = None

    FIELDS = ("mode", "alpha", "epsilon", "beta", "transform", "attract_exponent", "influence")

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        _finite("alpha", self.alpha, 0.0)
        _finite("epsilon", self.epsilon, 0.0)
        _finite("beta", self.beta, 0.0, lo_strict=True)
        _finite("attract_exponent", self.attract_exponent, 1.0, lo_strict=True)
        if not isinstance(self.transform, DirectTransform):
            raise ParameterError("transform must be a DirectTransform")
        if self.mode == "influence" and self.influence is None:
            object.__setattr__(self, "influence", InfluenceSpec())

    @classmethod
    def for_mode(cls, mode: str, **overrides) -> "KernelSpec":
        """Kernel with mode-appropriate defaults (team_general: c=1, gamma=0.3)."""
        mode = normalize_mode(mode)
        if mode == "team_general" and "transform" not in overrides:
            overrides["transform"] = DirectTransform(kind="power", c=1.0, gamma=0.3)
        return cls(mode=mode, **overrides)

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        unknown = set(d) - set(cls.FIELDS)
        if unknown:
            raise ParameterError(f"unknown kernel fields: {sorted(unknown)}")
        kw = dict(d)
        if "mode" not in kw:
            raise ParameterError("kernel config needs a 'mode'")
        if isinstance(kw.get("transform"), dict):
            kw["transform"] = DirectTransform.from_dict(kw["transform"])
        if isinstance(kw.get("influence"), dict):
            kw["influence"] = InfluenceSpec.from_dict(kw["influence"])
        mode = kw.pop("mode")
        return cls.for_mode(mode, **kw)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "transform": self.transform.to_dict(),
            "attract_exponent": self.attract_exponent,
            "influence": self.influence.to_dict() if self.influence is not None else None,
        }

    def with_params(self, **params) -> "KernelSpec":
        """Copy with top-level or transform parameters (gamma, c, cap) replaced."""
        tkeys = {"gamma", "c", "cap"}
        t = {k: params.pop(k) for k in list(params) if k in tkeys}
        if "cap" in t:
            t["cap"] = int(round(t["cap"]))
        transform = replace(self.transform, **t) if t else self.transform
        return replace(self, transform=transform, **params)

    @property
    def indirect_kind(self) -> int:
        if self.mode in NO_INDIRECT_MODES:
            return _backend.INDIRECT_NONE
        if self.mode == "influence":
            return _backend.INDIRECT_WEIGHTED
        return _backend.INDIRECT_LINEAR if self.beta == 1.0 else _backend.INDIRECT_POWER

    @property
    def static_direct(self) -> bool:
        """True when aggregate direct weight is constant and each citation adds exactly 1."""
        return self.indirect_kind == _backend.INDIRECT_LINEAR


@dataclass(frozen=True)
class PaperState:
    n_cit: int = 0
    n_direct: int = 0
    s_weighted: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.n_cit < 0 or self.n_direct < 0 or self.n_direct > self.n_cit:
            raise ParameterError(f"invalid citation counts n_cit={self.n_cit}, n_direct={self.n_direct}")
        if self.s_weighted < 0 or self.d < 0:
            raise ParameterError("s_weighted and d must be >= 0")


def direct_weight(p: PaperState, k: KernelSpec) -> float:
    if k.mode in ("uniform", "price"):
        return 1.0
    if k.mode == "pure_ca":
        return float(k.epsilon)
    if k.mode == "gen_price":
        return float(k.alpha)
    return float(p.d)


def indirect_weight(p: PaperState, k: KernelSpec) -> float:
    kind = k.indirect_kind
    if kind == _backend.INDIRECT_NONE:
        return 0.0
    if kind == _backend.INDIRECT_WEIGHTED:
        return float(p.s_weighted)
    if kind == _backend.INDIRECT_LINEAR:
        return float(p.n_cit)
    return math.pow(float(p.n_cit), k.beta)


def total_weight(p: PaperState, k: KernelSpec) -> float:
    return direct_weight(p, k) + indirect_weight(p, k)


def on_cited(p: PaperState, k: KernelSpec, rng=None, *, u: float | None = None,
             influence_value: float | None = None) -> tuple[PaperState, float, bool]:
    """Register one citation to ``p``.

    The citation is attributed to the direct mechanism with probability
    ``direct / (direct + indirect)`` evaluated before the event. ``u`` (the
    attribution uniform) and ``influence_value`` may be injected; otherwise
    they are drawn from ``rng``.
    """
    dw = direct_weight(p, k)
    iw = indirect_weight(p, k)
    if not dw + iw > 0.0:
        raise DegenerateKernelError("cannot cite a paper with zero total weight")
    if u is None:
        u = float(rng.random())
    was_direct = u < dw / (dw + iw)
    if k.mode == "influence":
        if influence_value is None:
            inc = float(k.influence.increments(rng, 1)[0])
        else:
            inc = float(k.influence.g(influence_value)) / k.influence.mean_g
        s_w = p.s_weighted + inc
    else:
        s_w = p.s_weighted + 1.0
    new = PaperState(
        n_cit=p.n_cit + 1,
        n_direct=p.n_direct + int(was_direct),
        s_weighted=s_w,
        d=p.d,
    )
    # the direct part is static, so the change is entirely in the indirect part
    return new, indirect_weight(new, k) - iw, was_direct


def cohort_direct_weights(k: KernelSpec, teams, rng: np.random.Generator | None = None) -> np.ndarray:
    """Static direct weight of every paper in the cohort.

    ``powerlaw_attract`` draws each weight once from a continuous power law
    with density ~ x ** -attract_exponent on x >= 1, using ``rng``.
    """
    n = len(teams)
    if k.mode in ("uniform", "price"):
        return np.ones(n)
    if k.mode == "pure_ca":
        return np.full(n, float(k.epsilon))
    if k.mode == "gen_price":
        return np.full(n, float(k.alpha))
    if k.mode == "powerlaw_attract":
        if rng is None:
            raise ParameterError("powerlaw_attract needs an rng to draw attractiveness")
        return (1.0 - rng.random(n)) ** (-1.0 / (k.attract_exponent - 1.0))
    return intrinsic_weights(teams, k.transform)

"""Ask/tell campaign orchestration.

A campaign is an immutable value: configuration, observation history, the
latest fitted surrogate, the pending suggestion, and a revision counter
that increments on every mutation.  The functions here are pure given
(state, config seed); persistence lives in :mod:`bogo.store` and transport
in :mod:`bogo.service`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np
from numpy.typing import NDArray
from scipy.stats import qmc

from . import acquisition as acq
from . import diagnostics, gp, hyperfit
from .domains import Box, Domain, FiniteSet
from .errors import (
    DuplicateNoiseFreePoint,
    InvalidConfig,
    NoModelYet,
    OutOfDomain,
)
from .kernels import KernelFamily, KernelSpec, MeanSpec

# z-score for the 95% prediction band drawn on curves; the leave-one-out
# diagnostics deliberately use factor 2 instead (see diagnostics module).
CREDIBLE_INTERVAL_Z = 1.96

# Candidate grids for the full-grid knowledge gradient stay at or below
# this size; beyond it the factor is too slow to evaluate everywhere.
KG_GRID_CAP = 10_000

# Number of multistart points used for in-campaign refits.
REFIT_SEEDS = 4

NOISE_FREE = "noise-free"
HOMOSCEDASTIC = "homoscedastic"

_CONFIG_FIELDS = {
    "dimension",
    "domain",
    "kernel_family",
    "matern_nu",
    "noise_mode",
    "acquisition_policy",
    "refit_every",
    "rng_seed",
}


@dataclass(frozen=True)
class CampaignConfig:
    dimension: int
    domain: Domain
    kernel_family: KernelFamily
    noise_mode: str
    acquisition_policy: acq.Policy
    refit_every: int = 1
    rng_seed: int = 0
    matern_nu: float = 2.5

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidConfig("dimension must be >= 1")
        if self.domain.dim != self.dimension:
            raise InvalidConfig(
                f"domain dimension {self.domain.dim} != configured dimension {self.dimension}"
            )
        if self.noise_mode not in (NOISE_FREE, HOMOSCEDASTIC):
            raise InvalidConfig(f"unknown noise mode {self.noise_mode!r}")
        if self.acquisition_policy is acq.Policy.EI and self.noise_mode != NOISE_FREE:
            raise InvalidConfig("expected improvement requires the noise-free mode")
        if self.refit_every < 1:
            raise InvalidConfig("refit_every must be >= 1")
        if self.kernel_family is KernelFamily.MATERN and self.matern_nu <= 0:
            raise InvalidConfig("matern_nu must be positive")
        if (
            self.acquisition_policy is acq.Policy.KG
            and isinstance(self.domain, FiniteSet)
            and self.domain.points.shape[0] > KG_GRID_CAP
        ):
            raise InvalidConfig(
                f"knowledge-gradient candidate sets are capped at {KG_GRID_CAP} points"
            )

    def to_dict(self) -> dict:
        if isinstance(self.domain, Box):
            domain = {"kind": "box", "lo": list(self.domain.lo), "hi": list(self.domain.hi)}
        else:
            domain = {"kind": "finite", "points": [list(map(float, p)) for p in self.domain.points]}
        return {
            "dimension": self.dimension,
            "domain": domain,
            "kernel_family": self.kernel_family.value,
            "matern_nu": self.matern_nu,
            "noise_mode": self.noise_mode,
            "acquisition_policy": self.acquisition_policy.value,
            "refit_every": self.refit_every,
            "rng_seed": self.rng_seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "CampaignConfig":
        if not isinstance(data, dict):
            raise InvalidConfig("config must be a JSON object")
        unknown = set(data) - _CONFIG_FIELDS
        if unknown:
            raise InvalidConfig(f"unknown config fields: {sorted(unknown)}")
        missing = {"dimension", "domain", "kernel_family", "noise_mode", "acquisition_policy"} - set(data)
        if missing:
            raise InvalidConfig(f"missing config fields: {sorted(missing)}")
        dom = data["domain"]
        if not isinstance(dom, dict) or "kind" not in dom:
            raise InvalidConfig("domain must be an object with a 'kind' field")
        try:
            if dom["kind"] == "box":
                domain: Domain = Box(lo=tuple(dom["lo"]), hi=tuple(dom["hi"]))
            elif dom["kind"] == "finite":
                domain = FiniteSet(points=np.asarray(dom["points"], dtype=float))
            else:
                raise InvalidConfig(f"unknown domain kind {dom['kind']!r}")
            family = KernelFamily(data["kernel_family"])
            policy = acq.Policy(data["acquisition_policy"])
        except InvalidConfig:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from None
        return CampaignConfig(
            dimension=int(data["dimension"]),
            domain=domain,
            kernel_family=family,
            noise_mode=str(data["noise_mode"]),
            acquisition_policy=policy,
            refit_every=int(data.get("refit_every", 1)),
            rng_seed=int(data.get("rng_seed", 0)),
            matern_nu=float(data.get("matern_nu", 2.5)),
        )


@dataclass(frozen=True)
class Observation:
    x: tuple[float, ...]
    y: float
    timestamp: str
    tag: str = ""

    def to_dict(self) -> dict:
        return {"x": list(self.x), "y": self.y, "timestamp": self.timestamp, "tag": self.tag}

    @staticmethod
    def from_dict(data: dict) -> "Observation":
        return Observation(
            x=tuple(float(v) for v in data["x"]),
            y=float(data["y"]),
            timestamp=str(data["timestamp"]),
            tag=str(data.get("tag", "")),
        )


@dataclass(frozen=True)
class FittedModel:
    """Hyperparameters currently backing predictions."""

    kernel: KernelSpec
    mean_constant: float
    noise_variance: float
    reduced_lml: float | None = None
    heuristic: bool = False

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "mean_constant": self.mean_constant,
            "noise_variance": self.noise_variance,
            "reduced_lml": self.reduced_lml,
            "heuristic": self.heuristic,
        }

    @staticmethod
    def from_dict(data: dict) -> "FittedModel":
        return FittedModel(
            kernel=KernelSpec.from_dict(data["kernel"]),
            mean_constant=float(data["mean_constant"]),
            noise_variance=float(data["noise_variance"]),
            reduced_lml=None if data.get("reduced_lml") is None else float(data["reduced_lml"]),
            heuristic=bool(data.get("heuristic", False)),
        )


@dataclass(frozen=True)
class Suggestion:
    x_next: tuple[float, ...]
    acquisition_value: float
    policy: str
    posterior_at_x: tuple[float, float] | None
    incumbent: tuple[tuple[float, ...], float] | None

    def to_dict(self) -> dict:
        return {
            "x_next": list(self.x_next),
            "acquisition_value": self.acquisition_value,
            "policy": self.policy,
            "posterior_at_x": None
            if self.posterior_at_x is None
            else {"mean": self.posterior_at_x[0], "variance": self.posterior_at_x[1]},
            "incumbent": None
            if self.incumbent is None
            else {"x": list(self.incumbent[0]), "mean": self.incumbent[1]},
        }

    @staticmethod
    def from_dict(data: dict) -> "Suggestion":
        post = data.get("posterior_at_x")
        inc = data.get("incumbent")
        return Suggestion(
            x_next=tuple(float(v) for v in data["x_next"]),
            acquisition_value=float(data["acquisition_value"]),
            policy=str(data["policy"]),
            posterior_at_x=None if post is None else (float(post["mean"]), float(post["variance"])),
            incumbent=None if inc is None else (tuple(float(v) for v in inc["x"]), float(inc["mean"])),
        )


@dataclass(frozen=True)
class CampaignState:
    campaign_id: str
    config: CampaignConfig
    history: tuple[Observation, ...] = ()
    model: FittedModel | None = None
    pending: Suggestion | None = None
    revision: int = 0

    @property
    def n(self) -> int:
        return len(self.history)

    def xs(self) -> NDArray[np.float64]:
        if not self.history:
            return np.zeros((0, self.config.dimension))
        return np.asarray([obs.x for obs in self.history], dtype=float)

    def ys(self) -> NDArray[np.float64]:
        return np.asarray([obs.y for obs in self.history], dtype=float)

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "config": self.config.to_dict(),
            "history": [obs.to_dict() for obs in self.history],
            "model": None if self.model is None else self.model.to_dict(),
            "pending": None if self.pending is None else self.pending.to_dict(),
            "revision": self.revision,
        }

    @staticmethod
    def from_dict(data: dict) -> "CampaignState":
        return CampaignState(
            campaign_id=str(data["campaign_id"]),
            config=CampaignConfig.from_dict(data["config"]),
            history=tuple(Observation.from_dict(o) for o in data["history"]),
            model=None if data.get("model") is None else FittedModel.from_dict(data["model"]),
            pending=None if data.get("pending") is None else Suggestion.from_dict(data["pending"]),
            revision=int(data["revision"]),
        )


def _derive_seed(base: int, *stream: int) -> int:
    entropy = [base & 0xFFFFFFFF, *stream]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _seed_phase_length(config: CampaignConfig) -> int:
    return max(2, 2 * config.dimension)


def _bounding_box(domain: Domain) -> Box:
    if isinstance(domain, Box):
        return domain
    lo = domain.points.min(axis=0)
    hi = domain.points.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    return Box(lo=tuple(lo), hi=tuple(hi))


def create(config: CampaignConfig, campaign_id: str = "") -> CampaignState:
    """Fresh campaign at revision 0 with an empty history."""
    return CampaignState(campaign_id=campaign_id or "campaign", config=config)


def _heuristic_model(config: CampaignConfig, xs: NDArray, ys: NDArray) -> FittedModel:
    """Moment-based fallback used before enough data exists for a real fit."""
    box = _bounding_box(config.domain)
    widths = box.widths
    amplitude = float(np.var(ys)) or 1.0
    if config.kernel_family is KernelFamily.SQUARED_EXPONENTIAL:
        beta = tuple(8.0 / w**2 for w in widths)
        nu = None
    else:
        beta = tuple(w / 2.0 for w in widths)
        nu = config.matern_nu
    noise = 0.0 if config.noise_mode == NOISE_FREE else 0.05 * amplitude
    kernel = KernelSpec(config.kernel_family, amplitude, beta, nu=nu)
    return FittedModel(
        kernel=kernel,
        mean_constant=float(np.mean(ys)),
        noise_variance=noise,
        reduced_lml=None,
        heuristic=True,
    )


def _fit_model(config: CampaignConfig, xs: NDArray, ys: NDArray, n: int) -> FittedModel:
    result = hyperfit.fit_hyperparameters(
        xs,
        ys,
        config.kernel_family,
        seeds=REFIT_SEEDS,
        nu=config.matern_nu,
        noise_free=config.noise_mode == NOISE_FREE,
        rng_seed=_derive_seed(config.rng_seed, n, 1),
    )
    return FittedModel(
        kernel=result.kernel,
        mean_constant=result.mean.constant,
        noise_variance=result.noise_variance,
        reduced_lml=result.reduced_lml,
    )


def tell(state: CampaignState, x, y: float, tag: str = "", timestamp: str | None = None) -> CampaignState:
    """Record one observation; refits on the configured cadence."""
    point = tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
    if len(point) != state.config.dimension:
        raise OutOfDomain(
            f"point has dimension {len(point)}, campaign expects {state.config.dimension}"
        )
    if not state.config.domain.contains(point):
        raise OutOfDomain(f"point {point} lies outside the campaign domain")
    if state.config.noise_mode == NOISE_FREE and any(obs.x == point for obs in state.history):
        raise DuplicateNoiseFreePoint(f"point {point} was already observed in noise-free mode")
    obs = Observation(
        x=point,
        y=float(y),
        timestamp=timestamp or datetime.now(timezone.utc).isoformat(),
        tag=tag,
    )
    history = state.history + (obs,)
    n = len(history)
    model = state.model
    if n >= 3 and n % state.config.refit_every == 0:
        xs = np.asarray([o.x for o in history], dtype=float)
        ys = np.asarray([o.y for o in history], dtype=float)
        model = _fit_model(state.config, xs, ys, n)
    return replace(
        state, history=history, model=model, pending=None, revision=state.revision + 1
    )


def _current_model(state: CampaignState) -> FittedModel:
    if state.model is not None:
        return state.model
    xs, ys = state.xs(), state.ys()
    if state.n >= 3:
        return _fit_model(state.config, xs, ys, state.n)
    if state.n >= 1:
        return _heuristic_model(state.config, xs, ys)
    raise NoModelYet("no observations yet")


def posterior_from_state(state: CampaignState) -> gp.GpPosterior:
    """Posterior under the current (stored or on-demand) hyperparameters."""
    model = _current_model(state)
    lam = 0.0 if state.config.noise_mode == NOISE_FREE else model.noise_variance
    training = gp.TrainingSet(state.xs(), state.ys(), lam)
    return gp.fit(training, model.kernel, MeanSpec(constant=model.mean_constant))


def _incumbent(state: CampaignState, posterior: gp.GpPosterior) -> tuple[tuple[float, ...], float]:
    means, _ = gp.predict_mean_var(posterior, state.xs())
    idx = int(np.argmax(means))
    return state.history[idx].x, float(means[idx])


def _build_acquisition(config: CampaignConfig) -> tuple[acq.Acquisition, Domain]:
    """Acquisition object plus the domain the maximizer should search."""
    if config.acquisition_policy is acq.Policy.EI:
        return acq.Acquisition(acq.Policy.EI), config.domain
    if config.acquisition_policy is acq.Policy.AKG:
        return acq.Acquisition(acq.Policy.AKG), config.domain
    if isinstance(config.domain, FiniteSet):
        candidates = config.domain.points
        search: Domain = config.domain
    else:
        candidates = config.domain.grid(KG_GRID_CAP)
        search = FiniteSet(points=candidates)
    return acq.Acquisition(acq.Policy.KG, candidates=candidates), search


def _seed_design_point(config: CampaignConfig, index: int) -> NDArray[np.float64]:
    """Point ``index`` of the campaign's deterministic space-filling sequence."""
    if isinstance(config.domain, FiniteSet):
        rng = np.random.default_rng(_derive_seed(config.rng_seed, 0, 3))
        order = rng.permutation(config.domain.points.shape[0])
        return config.domain.points[order[index % order.shape[0]]].copy()
    sampler = qmc.Sobol(d=config.dimension, scramble=True, seed=config.rng_seed)
    if index:
        sampler.fast_forward(index)
    return qmc.scale(sampler.random(1), config.domain.lo, config.domain.hi)[0]


def ask(state: CampaignState) -> Suggestion:
    """Next design point to evaluate; deterministic given (state, rng seed).

    Before ``max(2, 2 * d)`` observations the suggestion walks a scrambled
    low-discrepancy sequence over the domain; afterwards it maximizes the
    configured acquisition under the current surrogate.
    """
    n = state.n
    if n < _seed_phase_length(state.config):
        point = _seed_design_point(state.config, n)
        posterior_at_x = None
        incumbent = None
        if n >= 1:
            try:
                posterior = posterior_from_state(state)
                mu, var = gp.predict(posterior, point)
                posterior_at_x = (mu, var)
                incumbent = _incumbent(state, posterior)
            except NoModelYet:  # pragma: no cover - n >= 1 always yields a model
                pass
        return Suggestion(
            x_next=tuple(float(v) for v in point),
            acquisition_value=0.0,
            policy="seed",
            posterior_at_x=posterior_at_x,
            incumbent=incumbent,
        )

    posterior = posterior_from_state(state)
    acquisition, search_domain = _build_acquisition(state.config)
    x_next, value = acq.maximize_acquisition(
        posterior, acquisition, search_domain, seed=_derive_seed(state.config.rng_seed, n, 2)
    )
    point = tuple(float(v) for v in x_next)
    if state.config.noise_mode == NOISE_FREE and any(obs.x == point for obs in state.history):
        # a converged acquisition can land exactly on an observed point
        # (boundary clipping makes this reachable); a noise-free repeat has
        # zero value, so walk the space-filling sequence instead
        for offset in range(100):
            candidate = _seed_design_point(state.config, n + offset)
            if not any(obs.x == tuple(float(v) for v in candidate) for obs in state.history):
                x_next = candidate
                break
        value = float(acq.acquisition_values(posterior, acquisition, [x_next])[0])
    mu, var = gp.predict(posterior, x_next)
    return Suggestion(
        x_next=tuple(float(v) for v in x_next),
        acquisition_value=float(value),
        policy=state.config.acquisition_policy.value,
        posterior_at_x=(mu, var),
        incumbent=_incumbent(state, posterior),
    )


@dataclass(frozen=True)
class CurveRow:
    x: float
    mean: float
    lower: float
    upper: float
    acquisition: float

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "mean": self.mean,
            "lower": self.lower,
            "upper": self.upper,
            "acquisition": self.acquisition,
        }


def posterior_curve(
    state: CampaignState,
    axis: int,
    slice_values=None,
    resolution: int = 200,
    interval_z: float = CREDIBLE_INTERVAL_Z,
) -> list[CurveRow]:
    """Posterior slice along one axis with a 95% band and acquisition values.

    ``slice_values`` fixes the remaining coordinates (defaults to the box
    midpoint); ``resolution`` points span the axis range inclusively.
    """
    config = state.config
    if not 0 <= axis < config.dimension:
        raise InvalidConfig(f"axis {axis} out of range for dimension {config.dimension}")
    if resolution < 2:
        raise InvalidConfig("resolution must be >= 2")
    if state.n < 3 and state.model is None:
        raise NoModelYet("need a fitted model before drawing curves")
    box = _bounding_box(config.domain)
    if slice_values is None:
        base = (np.asarray(box.lo) + np.asarray(box.hi)) / 2.0
    else:
        base = np.asarray(list(slice_values), dtype=float)
        if base.shape[0] != config.dimension:
            raise InvalidConfig("slice must provide one value per dimension")
    ticks = np.linspace(box.lo[axis], box.hi[axis], resolution)
    points = np.tile(base, (resolution, 1))
    points[:, axis] = ticks

    posterior = posterior_from_state(state)
    means, variances = gp.predict_mean_var(posterior, points)
    sigmas = np.sqrt(variances)
    acquisition, _ = _build_acquisition(config)
    values = acq.acquisition_values(posterior, acquisition, points)
    return [
        CurveRow(
            x=float(ticks[i]),
            mean=float(means[i]),
            lower=float(means[i] - interval_z * sigmas[i]),
            upper=float(means[i] + interval_z * sigmas[i]),
            acquisition=float(values[i]),
        )
        for i in range(resolution)
    ]


def diagnose(state: CampaignState, refit_per_fold: bool | None = None) -> diagnostics.DiagnosticReport:
    """Leave-one-out calibration of the campaign's surrogate family."""
    if state.n < 3:
        raise NoModelYet("need at least 3 observations to run diagnostics")
    model = _current_model(state)
    lam = 0.0 if state.config.noise_mode == NOISE_FREE else max(model.noise_variance, 1e-12)
    training = gp.TrainingSet(state.xs(), state.ys(), lam)
    return diagnostics.loo_diagnose(
        training,
        state.config.kernel_family,
        refit_per_fold,
        nu=state.config.matern_nu,
        seeds=REFIT_SEEDS,
        rng_seed=_derive_seed(state.config.rng_seed, state.n, 4),
    )

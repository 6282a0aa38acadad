"""Flat key=value run configuration for the command-line interface.

A config file is plain text: one ``key = value`` assignment per line, ``#``
starts a comment, blank lines are ignored.  Keys use dotted prefixes
(``model.``, ``solver.``, ``sweep.``, ``simulate.``, ``figures.``,
``output.``); unknown keys are rejected so typos fail loudly.  Every key has
a default, so the empty file is a valid config describing the reference
market.  ``auto`` is accepted where a derived default exists (time steps
from the stability rule, initial fraction from the frictionless target).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ValidationError
from .model import ModelParams

__all__ = ["RunConfig", "parse_config", "load_config", "CONFIG_KEYS"]

_FIGURES = ("fig1", "fig2", "fig3")
_POLICIES = ("optimal-band", "fixed-target", "no-trade")

# key -> default (as config text); "auto" marks derived defaults
_DEFAULTS = {
    "model.mu": "0.2",
    "model.sigma": "1.0",
    "model.gamma": "0.9",
    "model.T": "1.0",
    "model.eps_buy": "0.05",
    "model.eps_sell": "0.05",
    "model.lambda": "3.0",
    "solver.n_z": "4000",
    "solver.n_t": "auto",
    "solver.z_min": "-12.0",
    "solver.z_max": "12.0",
    "sweep.c": "1.0",
    "sweep.eps_list": "0.01,0.003,0.001",
    "sweep.t_eval": "0.75",
    "simulate.n_paths": "100000",
    "simulate.seed": "20240817",
    "simulate.x0": "auto",
    "simulate.w0": "1.0",
    "simulate.policy": "optimal-band",
    "simulate.target": "auto",
    "figures.which": "fig1,fig2,fig3",
    "output.dir": "out",
}

CONFIG_KEYS = tuple(sorted(_DEFAULTS))


def _as_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"{key}: expected a number, got {raw!r}") from None


def _as_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{key}: expected an integer, got {raw!r}") from None


def _as_float_or_auto(key: str, raw: str) -> float | None:
    if raw == "auto":
        return None
    return _as_float(key, raw)


def _as_int_or_auto(key: str, raw: str) -> int | None:
    if raw == "auto":
        return None
    return _as_int(key, raw)


def _as_float_list(key: str, raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    return tuple(_as_float(key, s) for s in items)


def _as_str_list(raw: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in raw.split(",") if s.strip())


@dataclass(frozen=True)
class RunConfig:
    """Typed, validated view of one config file plus CLI overrides."""

    model: ModelParams
    n_z: int
    n_t: int | None
    z_min: float
    z_max: float
    sweep_c: float
    sweep_eps: tuple[float, ...]
    sweep_t_eval: float
    sim_n_paths: int
    sim_seed: int
    sim_x0: float | None
    sim_w0: float
    sim_policy: str
    sim_target: float | None
    figures: tuple[str, ...]
    out_dir: str

    def resolved_lines(self) -> list[str]:
        """Canonical ``key=value`` lines for echoing into output headers."""
        m = self.model

        def num(v):
            return repr(float(v))

        def opt(v):
            return "auto" if v is None else repr(float(v))

        return [
            f"model.mu={num(m.mu)}",
            f"model.sigma={num(m.sigma)}",
            f"model.gamma={num(m.gamma)}",
            f"model.T={num(m.T)}",
            f"model.eps_buy={num(m.eps_buy)}",
            f"model.eps_sell={num(m.eps_sell)}",
            f"model.lambda={num(m.lam)}",
            f"solver.n_z={self.n_z}",
            "solver.n_t=" + ("auto" if self.n_t is None else str(self.n_t)),
            f"solver.z_min={num(self.z_min)}",
            f"solver.z_max={num(self.z_max)}",
            f"sweep.c={num(self.sweep_c)}",
            "sweep.eps_list=" + ",".join(repr(e) for e in self.sweep_eps),
            f"sweep.t_eval={num(self.sweep_t_eval)}",
            f"simulate.n_paths={self.sim_n_paths}",
            f"simulate.seed={self.sim_seed}",
            f"simulate.x0={opt(self.sim_x0)}",
            f"simulate.w0={num(self.sim_w0)}",
            f"simulate.policy={self.sim_policy}",
            f"simulate.target={opt(self.sim_target)}",
            "figures.which=" + ",".join(self.figures),
            f"output.dir={self.out_dir}",
        ]


def parse_config(text: str) -> RunConfig:
    """Parse config text into a :class:`RunConfig`.

    Raises :class:`ValidationError` for malformed lines, unknown keys,
    duplicate keys, or values the model/solver layers reject.
    """
    raw = dict(_DEFAULTS)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in _DEFAULTS:
            raise ValidationError(f"line {lineno}: unknown config key {key!r}")
        if key in seen:
            raise ValidationError(f"line {lineno}: duplicate config key {key!r}")
        seen.add(key)
        raw[key] = value

    model = ModelParams(
        mu=_as_float("model.mu", raw["model.mu"]),
        sigma=_as_float("model.sigma", raw["model.sigma"]),
        gamma=_as_float("model.gamma", raw["model.gamma"]),
        T=_as_float("model.T", raw["model.T"]),
        eps_buy=_as_float("model.eps_buy", raw["model.eps_buy"]),
        eps_sell=_as_float("model.eps_sell", raw["model.eps_sell"]),
        lam=_as_float("model.lambda", raw["model.lambda"]),
    )

    n_z = _as_int("solver.n_z", raw["solver.n_z"])
    if n_z < 10:
        raise ValidationError(f"solver.n_z must be at least 10, got {n_z}")
    n_t = _as_int_or_auto("solver.n_t", raw["solver.n_t"])
    if n_t is not None and n_t < 1:
        raise ValidationError(f"solver.n_t must be positive or auto, got {n_t}")
    z_min = _as_float("solver.z_min", raw["solver.z_min"])
    z_max = _as_float("solver.z_max", raw["solver.z_max"])

    sweep_c = _as_float("sweep.c", raw["sweep.c"])
    if not sweep_c > 0.0:
        raise ValidationError(f"sweep.c must be positive, got {sweep_c}")
    sweep_eps = _as_float_list("sweep.eps_list", raw["sweep.eps_list"])
    if not sweep_eps:
        raise ValidationError("sweep.eps_list must contain at least one cost level")
    if any(not e > 0.0 for e in sweep_eps):
        raise ValidationError(f"sweep.eps_list entries must be positive, got {sweep_eps}")
    sweep_t_eval = _as_float("sweep.t_eval", raw["sweep.t_eval"])
    if not 0.0 <= sweep_t_eval < model.T:
        raise ValidationError(f"sweep.t_eval must lie in [0, T), got {sweep_t_eval}")

    n_paths = _as_int("simulate.n_paths", raw["simulate.n_paths"])
    if n_paths < 2:
        raise ValidationError(f"simulate.n_paths must be at least 2, got {n_paths}")
    seed = _as_int("simulate.seed", raw["simulate.seed"])
    if not 0 <= seed < 2**64:
        raise ValidationError(f"simulate.seed must lie in [0, 2^64), got {seed}")
    x0 = _as_float_or_auto("simulate.x0", raw["simulate.x0"])
    if x0 is not None and not 0.0 <= x0 <= 1.0:
        raise ValidationError(f"simulate.x0 must lie in [0, 1], got {x0}")
    w0 = _as_float("simulate.w0", raw["simulate.w0"])
    if not w0 > 0.0:
        raise ValidationError(f"simulate.w0 must be positive, got {w0}")
    policy = raw["simulate.policy"]
    if policy not in _POLICIES:
        raise ValidationError(f"simulate.policy must be one of {_POLICIES}, got {policy!r}")
    target = _as_float_or_auto("simulate.target", raw["simulate.target"])
    if target is not None and not 0.0 <= target <= 1.0:
        raise ValidationError(f"simulate.target must lie in [0, 1], got {target}")

    figures = _as_str_list(raw["figures.which"])
    if not figures:
        raise ValidationError("figures.which must name at least one figure")
    for fig in figures:
        if fig not in _FIGURES:
            raise ValidationError(f"figures.which entries must be among {_FIGURES}, got {fig!r}")

    out_dir = raw["output.dir"].strip()
    if not out_dir:
        raise ValidationError("output.dir must be a non-empty path")

    return RunConfig(
        model=model,
        n_z=n_z,
        n_t=n_t,
        z_min=z_min,
        z_max=z_max,
        sweep_c=sweep_c,
        sweep_eps=sweep_eps,
        sweep_t_eval=sweep_t_eval,
        sim_n_paths=n_paths,
        sim_seed=seed,
        sim_x0=x0,
        sim_w0=w0,
        sim_policy=policy,
        sim_target=target,
        figures=figures,
        out_dir=out_dir,
    )


def load_config(path: str) -> RunConfig:
    """Read and parse a config file."""
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path!r}: {exc}") from None
    return parse_config(text)


def with_overrides(cfg: RunConfig, out_dir: str | None = None, seed: int | None = None) -> RunConfig:
    """Apply command-line overrides on top of a parsed config."""
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ValidationError(f"--seed must lie in [0, 2^64), got {seed}")
        cfg = replace(cfg, sim_seed=seed)
    return cfg

"""Run configuration: key=value files, flag merging, effective echo.

A config file holds `key = value` lines; blank lines and lines starting
with '#' are ignored. Flags override file values, file values override
defaults. Every error names the offending key and, for file input, the
line it came from.

The effective configuration of a run (defaults applied) is rendered as
'# key = value' comment lines at the top of CSV output. Stripping the
'# ' prefix of those lines yields a config file that reproduces the run
exactly.
"""

from __future__ import annotations

import math

from pydantic import ValidationError

from .schemas import (
    BacktestRequest,
    EngineConfigModel,
    FrontierRequest,
    MarketParamsModel,
    MGridModel,
    SolveRequest,
)

__all__ = [
    "ConfigError",
    "read_config_file",
    "build_request",
    "render_echo",
]


class ConfigError(Exception):
    """Invalid configuration; message names the key and its source."""


_MARKET_KEYS = ("mu_x", "sigma_x", "mu_y", "sigma_y", "rho",
                "x0", "y0", "maturity_t", "strike_k")
_ENGINE_KEYS = ("n_w", "n_x", "seed", "factor")
_FLOAT_KEYS = frozenset({"mu_x", "sigma_x", "mu_y", "sigma_y", "x0", "y0",
                         "maturity_t", "strike_k", "target", "m"})
_INT_KEYS = frozenset({"n_w", "n_x", "seed", "n_paths", "n_steps",
                       "path_seed"})

COMMAND_KEYS = {
    "frontier": frozenset(_MARKET_KEYS + _ENGINE_KEYS + ("m_grid", "out")),
    "solve": frozenset(_MARKET_KEYS + _ENGINE_KEYS + ("target", "out")),
    "backtest": frozenset(_MARKET_KEYS + _ENGINE_KEYS
                          + ("m", "target", "n_paths", "n_steps",
                             "path_seed", "out")),
}


def read_config_file(path: str) -> dict[str, tuple[str, str]]:
    """Parse a config file into {key: (raw_value, "path:line")}."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    out: dict[str, tuple[str, str]] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(
                f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, _, raw = text.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = (raw, f"{path}:{lineno}")
    return out


def _parse_float(key: str, raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{where}: {key} must be a number, got {raw!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}: {key} must be finite, got {raw!r}")
    return value


def _parse_int(key: str, raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where}: {key} must be an integer, got {raw!r}")


def _parse_factor(raw: str, where: str) -> str:
    if raw not in ("indicator", "ratio"):
        raise ConfigError(
            f"{where}: factor must be 'indicator' or 'ratio', got {raw!r}")
    return raw


def _parse_rho_list(raw: str, where: str) -> list[float]:
    tokens = [tok.strip() for tok in raw.split(",")]
    if not all(tokens) or not tokens:
        raise ConfigError(
            f"{where}: rho must be a comma-separated list of numbers, "
            f"got {raw!r}")
    return [_parse_float("rho", tok, where) for tok in tokens]


def _parse_m_grid(raw: str, where: str) -> MGridModel:
    head, sep, spacing = raw.partition(",")
    if not sep or spacing not in ("log", "lin"):
        raise ConfigError(
            f"{where}: m_grid must look like 'lo:hi:n,log' or "
            f"'lo:hi:n,lin', got {raw!r}")
    parts = head.split(":")
    if len(parts) != 3:
        raise ConfigError(
            f"{where}: m_grid range must be 'lo:hi:n', got {head!r}")
    lo = _parse_float("m_grid lo", parts[0], where)
    hi = _parse_float("m_grid hi", parts[1], where)
    n = _parse_int("m_grid n", parts[2], where)
    try:
        return MGridModel(lo=lo, hi=hi, n=n, spacing=spacing)
    except ValidationError as exc:
        raise ConfigError(f"{where}: {_first_error(exc)}")


def _first_error(exc: ValidationError) -> str:
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err["loc"])
    msg = err["msg"]
    return f"{loc}: {msg}" if loc else msg


def _coerce(key: str, raw: str, where: str) -> object:
    if key in _FLOAT_KEYS:
        return _parse_float(key, raw, where)
    if key in _INT_KEYS:
        return _parse_int(key, raw, where)
    if key == "factor":
        return _parse_factor(raw, where)
    if key == "rho":
        return _parse_rho_list(raw, where)
    if key == "m_grid":
        return _parse_m_grid(raw, where)
    if key == "out":
        return raw
    raise ConfigError(f"{where}: unknown key {key!r}")


def _merge(command: str, file_values: dict[str, tuple[str, str]],
           flag_values: dict[str, str]) -> tuple[dict[str, object],
                                                 dict[str, str]]:
    allowed = COMMAND_KEYS[command]
    merged: dict[str, object] = {}
    origin: dict[str, str] = {}
    for key, (raw, where) in file_values.items():
        if key not in allowed:
            raise ConfigError(
                f"{where}: key {key!r} is not valid for '{command}'")
        merged[key] = _coerce(key, raw, where)
        origin[key] = where
    for key, raw in flag_values.items():
        if raw is None:
            continue
        where = "--" + key.replace("_", "-")
        merged[key] = _coerce(key, raw, where)
        origin[key] = where
    return merged, origin


def _model_error(exc: ValidationError, origin: dict[str, str]) -> ConfigError:
    err = exc.errors()[0]
    fields = [str(p) for p in err["loc"] if isinstance(p, str)]
    field = next((f for f in fields if f in origin), None)
    if field is None:
        # Root-validator errors carry no loc; recover the key by name.
        field = next((k for k in origin if k in str(err["msg"])), None)
    if field is None:
        field = fields[-1] if fields else "config"
    where = origin.get(field)
    prefix = f"{where}: " if where else ""
    return ConfigError(f"{prefix}{field}: {err['msg']}")


def build_request(command: str, file_values: dict[str, tuple[str, str]],
                  flag_values: dict[str, str]):
    """Merge file and flag values into a validated request model.

    Returns (request, out_path). Raises ConfigError with the offending
    key and source on any problem.
    """
    merged, origin = _merge(command, file_values, flag_values)
    out_path = merged.pop("out", None)
    rho_list = merged.pop("rho", None)
    market_kwargs = {k: merged[k] for k in _MARKET_KEYS if k in merged}
    engine_kwargs = {k: merged[k] for k in _ENGINE_KEYS if k in merged}
    extra = {k: v for k, v in merged.items()
             if k not in market_kwargs and k not in engine_kwargs}
    if rho_list is not None:
        if command != "frontier" and len(rho_list) != 1:
            where = origin.get("rho", "rho")
            raise ConfigError(
                f"{where}: '{command}' takes a single rho, got "
                f"{len(rho_list)} values")
        market_kwargs["rho"] = rho_list[0]
    try:
        market = MarketParamsModel(**market_kwargs)
        engine = EngineConfigModel(**engine_kwargs)
        if command == "frontier":
            rhos = rho_list if rho_list is not None else None
            request = FrontierRequest(
                market=market, engine=engine,
                m_grid=extra.get("m_grid", MGridModel()), rhos=rhos)
        elif command == "solve":
            if "target" not in extra:
                raise ConfigError("solve requires a target (flag --target "
                                  "or config key 'target')")
            request = SolveRequest(market=market, engine=engine,
                                   target=extra["target"])
        else:
            request = BacktestRequest(market=market, engine=engine, **extra)
    except ValidationError as exc:
        raise _model_error(exc, origin)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return request, out_path


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_echo(command: str, request) -> list[str]:
    """Effective configuration as config-file lines (no '#' prefix)."""
    market: MarketParamsModel = request.market
    engine: EngineConfigModel = request.engine
    items: list[tuple[str, str]] = []
    for key in _MARKET_KEYS:
        if key == "rho" and command == "frontier":
            value = ",".join(repr(r) for r in request.effective_rhos())
        else:
            value = _fmt(getattr(market, key))
        items.append((key, value))
    for key in _ENGINE_KEYS:
        items.append((key, _fmt(getattr(engine, key))))
    if command == "frontier":
        g: MGridModel = request.m_grid
        items.append(("m_grid", f"{g.lo!r}:{g.hi!r}:{g.n},{g.spacing}"))
    elif command == "solve":
        items.append(("target", _fmt(request.target)))
    else:
        if request.m is not None:
            items.append(("m", _fmt(request.m)))
        else:
            items.append(("target", _fmt(request.target)))
        items.append(("n_paths", _fmt(request.n_paths)))
        items.append(("n_steps", _fmt(request.n_steps)))
        items.append(("path_seed", _fmt(request.effective_path_seed())))
    return [f"{key} = {value}" for key, value in items]

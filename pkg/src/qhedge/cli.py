"""Command-line front end.

Subcommands build a validated request from config file plus flags, send
it to the service (in process unless --server points elsewhere), and
render the JSON response as CSV. Output starts with '# key = value'
comment lines echoing the effective configuration; stripping the '# '
prefix yields a config file that reproduces the run.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .client import ClientError, call_service
from .config import ConfigError, build_request, read_config_file, render_echo

__all__ = ["main"]

_MARKET_FLAGS = ("mu_x", "sigma_x", "mu_y", "sigma_y", "rho",
                 "x0", "y0", "maturity_t", "strike_k")
_ENGINE_FLAGS = ("n_w", "n_x", "seed", "factor")
_EXTRA_FLAGS = {
    "frontier": ("m_grid",),
    "solve": ("target",),
    "backtest": ("m", "target", "n_paths", "n_steps", "path_seed"),
}
_ENDPOINTS = {
    "frontier": "/v1/frontier",
    "solve": "/v1/solve",
    "backtest": "/v1/backtest",
}

_FRONTIER_COLS = ("rho", "m", "capital", "capital_se", "success",
                  "success_se")
_SOLVE_COLS = ("target", "m_star", "capital", "achieved", "unconstrained",
               "capital_se", "achieved_se")
_BACKTEST_COLS = ("n_paths", "n_steps", "m", "predicted_success",
                  "empirical_success", "success_gap", "mean_hedge_error",
                  "std_hedge_error", "initial_capital_used")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qhedge",
        description="Capital-vs-success frontiers for hedging a put on a "
                    "nontradable asset with a correlated tradable one.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "frontier": "sweep a slope grid and emit frontier CSV",
        "solve": "minimal capital for a success probability target",
        "backtest": "delta-hedge an engine payoff along simulated paths",
    }
    help_text = {
        "rho": "correlation; for 'frontier' a comma-separated list",
        "m_grid": "slope grid as lo:hi:n,log or lo:hi:n,lin",
        "factor": "success factor: indicator or ratio",
        "target": "success probability target in (0, 1]",
        "m": "slope defining the backtested payoff",
        "path_seed": "seed for hedged paths (default: seed + 1)",
    }
    for command, blurb in specs.items():
        p = sub.add_parser(command, help=blurb, description=blurb)
        p.add_argument("--config", metavar="PATH",
                       help="key = value config file")
        p.add_argument("--out", metavar="PATH",
                       help="write CSV here instead of stdout")
        p.add_argument("--server", metavar="URL",
                       help="use a running service instead of in-process")
        for key in _MARKET_FLAGS + _ENGINE_FLAGS + _EXTRA_FLAGS[command]:
            p.add_argument("--" + key.replace("_", "-"), dest=key,
                           metavar="V", help=help_text.get(key))
    return parser


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(echo: list[str], columns: tuple[str, ...],
         rows: list[dict]) -> str:
    lines = ["# " + line for line in echo]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(row.get(col)) for col in columns))
    return "\n".join(lines) + "\n"


def _render(command: str, echo: list[str], body: dict) -> str:
    if command == "frontier":
        return _csv(echo, _FRONTIER_COLS, body["rows"])
    if command == "solve":
        return _csv(echo, _SOLVE_COLS, [body])
    row = dict(body)
    row["m"] = row.pop("m_used")
    return _csv(echo, _BACKTEST_COLS, [row])


def _summary(command: str, body: dict) -> str:
    if command == "frontier":
        rows = body["rows"]
        rhos = sorted({row["rho"] for row in rows})
        return (f"frontier: {len(rows)} points across "
                f"{len(rhos)} rho value(s)")
    if command == "solve":
        m_star = body["m_star"]
        head = ("unconstrained (target met with zero capital)"
                if body["unconstrained"] else f"m_star = {_cell(m_star)}")
        return (f"solve: target = {_cell(body['target'])}, {head}, "
                f"capital = {_cell(body['capital'])} "
                f"(se {_cell(body['capital_se'])}), "
                f"achieved = {_cell(body['achieved'])} "
                f"(se {_cell(body['achieved_se'])})")
    return (f"backtest: predicted success = "
            f"{_cell(body['predicted_success'])}, empirical = "
            f"{_cell(body['empirical_success'])}, gap = "
            f"{_cell(body['success_gap'])}, mean hedge error = "
            f"{_cell(body['mean_hedge_error'])}, initial capital = "
            f"{_cell(body['initial_capital_used'])}")


def main(argv: "list[str] | None" = None) -> int:
    args = _build_parser().parse_args(argv)
    command = args.command
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flag_keys = _MARKET_FLAGS + _ENGINE_FLAGS + _EXTRA_FLAGS[command] \
            + ("out",)
        flag_values = {key: getattr(args, key) for key in flag_keys}
        request, out_path = build_request(command, file_values, flag_values)
        body = call_service(_ENDPOINTS[command],
                            request.model_dump(), args.server)
    except ConfigError as exc:
        print(f"qhedge: config error: {exc}", file=sys.stderr)
        return 2
    except ClientError as exc:
        print(f"qhedge: {exc}", file=sys.stderr)
        return exc.exit_code
    echo = render_echo(command, request)
    text = _render(command, echo, body)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(_summary(command, body))
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

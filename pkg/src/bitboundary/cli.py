"""Command-line interface.

Subcommands:

* kernel            tabulate the kernel profile (CSV + JSON summary)
* theory            closed-form predictors for one (n, a, z)
* closest           nearest-boundary experiment (greedy or exact search)
* flips             random-flip-walk experiment
* gp-check          network covariance vs kernel vs GP sampling
* greedy-vs-exact   paired greedy/exact distances at small n
* fit               recompute aggregates and the scaling fit from a rows CSV

Experiments read an optional key=value config file (one experiment per file,
`#` comments); every file key is mirrored by a flag and flags override file
values. Size lists accept `64,128,256`, linear ranges `100-400:100`, and
geometric ranges `64-512:x2`.

Exit codes: 0 success, 2 config error, 3 budget exceeded, 4 numerical fault.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Dict, Optional, Tuple

from ._version import VERSION
from .errors import BitBoundaryError, ConfigError
from .harness import (
    DESK_DEFAULTS,
    KIND_CLOSEST,
    KIND_FLIPS,
    KIND_GP_CHECK,
    KIND_GREEDY_VS_EXACT,
    SCALING_COLUMNS,
    ExperimentConfig,
    ExperimentResult,
    read_rows_csv,
    refit_rows,
    run_experiment,
)
from .kernel import KernelProfile, build_profile
from .search import DEFAULT_BUDGET
from .theory import theory_report

_INT_KEYS = {"n", "trials", "seed", "layers", "budget", "parallel", "max_h"}
_FLOAT_KEYS = {"sigma_w2", "sigma_b2", "a", "z"}
_BOOL_KEYS = {"timings"}
_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}

_EXPERIMENT_FILE_KEYS = {
    "n",
    "trials",
    "seed",
    "sigma_w2",
    "sigma_b2",
    "layers",
    "widths",
    "activation",
    "method",
    "max_h",
    "budget",
    "out_csv",
    "out_json",
    "emit_plot_data",
    "parallel",
    "timings",
}
_KERNEL_FILE_KEYS = {"sigma_w2", "sigma_b2", "layers", "activation", "out_csv", "out_json"}
_THEORY_FILE_KEYS = {"n", "a", "z", "sigma_w2", "sigma_b2", "layers", "activation", "out_json"}


# ---------------------------------------------------------------------------
# value parsing
# ---------------------------------------------------------------------------


def parse_n_values(text: str) -> Tuple[int, ...]:
    """Parse a size list: comma-separated integers, linear ranges `a-b:step`
    (`a-b` means step 1), and geometric ranges `a-b:xfactor`."""
    values = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if "-" in item[1:]:
            span, _, step_part = item.partition(":")
            lo_text, _, hi_text = span.partition("-")
            try:
                lo, hi = int(lo_text), int(hi_text)
            except ValueError:
                raise ConfigError(f"bad size range {item!r}") from None
            if lo > hi:
                raise ConfigError(f"empty size range {item!r}")
            if step_part.startswith("x"):
                try:
                    factor = int(step_part[1:])
                except ValueError:
                    raise ConfigError(f"bad geometric factor in {item!r}") from None
                if factor < 2:
                    raise ConfigError(f"geometric factor must be >= 2 in {item!r}")
                v = lo
                while v <= hi:
                    values.append(v)
                    v *= factor
            else:
                try:
                    step = int(step_part) if step_part else 1
                except ValueError:
                    raise ConfigError(f"bad step in {item!r}") from None
                if step < 1:
                    raise ConfigError(f"step must be >= 1 in {item!r}")
                values.extend(range(lo, hi + 1, step))
        else:
            try:
                values.append(int(item))
            except ValueError:
                raise ConfigError(f"bad size value {item!r}") from None
    if not values:
        raise ConfigError(f"no sizes in {text!r}")
    return tuple(values)


def parse_widths(text: str) -> Tuple[int, ...]:
    try:
        widths = tuple(int(w) for w in str(text).split(",") if w.strip())
    except ValueError:
        raise ConfigError(f"bad widths list {text!r}") from None
    if not widths:
        raise ConfigError(f"no widths in {text!r}")
    return widths


def read_config_file(path: str) -> Dict[str, str]:
    """Plain key=value lines; `#` starts a comment; blank lines ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _coerce(key: str, raw: str):
    try:
        if key == "widths":
            return parse_widths(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key} has non-numeric value {raw!r}") from None
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in _TRUE_WORDS:
            return True
        if low in _FALSE_WORDS:
            return False
        raise ConfigError(f"config key {key} must be boolean, got {raw!r}")
    return raw


def _load_file_values(path: Optional[str], kind: str, allowed) -> dict:
    if path is None:
        return {}
    values = {}
    for key, raw in read_config_file(path).items():
        if key == "kind":
            if raw != kind:
                raise ConfigError(
                    f"config file is for kind {raw!r}, not subcommand {kind!r}"
                )
            continue
        if key not in allowed:
            raise ConfigError(f"config key {key!r} not valid for {kind}")
        values[key] = parse_n_values(raw) if key == "n" and kind in DESK_DEFAULTS else _coerce(key, raw)
    return values


# ---------------------------------------------------------------------------
# flag groups
# ---------------------------------------------------------------------------


def _add_config_flag(p):
    p.add_argument(
        "--config",
        metavar="FILE",
        default=None,
        help="key=value config file; explicit flags override file values",
    )


def _add_network_flags(p, widths: bool = True):
    p.add_argument("--sigma-w2", type=float, default=None, metavar="VAR",
                   help="weight variance (default 2.0)")
    p.add_argument("--sigma-b2", type=float, default=None, metavar="VAR",
                   help="bias variance (default 0.0)")
    p.add_argument("--layers", type=int, default=None, metavar="L",
                   help="hidden layer count (default 2)")
    p.add_argument("--activation", default=None, metavar="NAME",
                   help="activation name (default relu)")
    if widths:
        p.add_argument("--widths", default=None, metavar="W1,W2,..",
                       help="explicit hidden widths (default: each n wide)")


def _add_experiment_flags(p):
    p.add_argument("--n", default=None, metavar="SIZES",
                   help="input sizes: comma list, a-b:STEP, or a-b:xFACTOR")
    p.add_argument("--trials", type=int, default=None, metavar="T",
                   help="trials per size")
    p.add_argument("--seed", type=int, default=None, metavar="SEED",
                   help="root seed (default 42)")
    _add_network_flags(p)
    p.add_argument("--out-csv", default=None, metavar="PATH",
                   help="write per-trial (or summary) rows as CSV")
    p.add_argument("--out-json", default=None, metavar="PATH",
                   help="write the aggregate summary as JSON")
    p.add_argument("--parallel", type=int, default=None, metavar="P",
                   help="worker processes (default 1; output is identical)")
    p.add_argument("--timings", action="store_const", const=True, default=None,
                   help="record wall time per trial (breaks byte reproducibility)")
    _add_config_flag(p)


def _add_budget_flags(p):
    p.add_argument("--max-h", type=int, default=None, metavar="H",
                   help="largest Hamming shell for exact search (default n)")
    p.add_argument("--budget", type=int, default=None, metavar="EVALS",
                   help=f"exact enumeration budget (default {DEFAULT_BUDGET})")


def _add_plot_flag(p):
    p.add_argument("--emit-plot-data", default=None, metavar="PATH",
                   help="write (x, y, yerr) plot data CSV next to the fit")


# ---------------------------------------------------------------------------
# experiment subcommands
# ---------------------------------------------------------------------------


def _build_experiment_config(kind: str, args) -> ExperimentConfig:
    values = _load_file_values(args.config, kind, _EXPERIMENT_FILE_KEYS)
    if "n" in values:
        values["n_values"] = values.pop("n")
    if "emit_plot_data" in values:
        values["plot_csv"] = values.pop("emit_plot_data")
    for key in (
        "trials",
        "seed",
        "sigma_w2",
        "sigma_b2",
        "layers",
        "activation",
        "method",
        "max_h",
        "budget",
        "out_csv",
        "out_json",
        "parallel",
        "timings",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if getattr(args, "n", None) is not None:
        values["n_values"] = parse_n_values(args.n)
    if getattr(args, "widths", None) is not None:
        values["widths"] = parse_widths(args.widths)
    if getattr(args, "emit_plot_data", None) is not None:
        values["plot_csv"] = args.emit_plot_data
    defaults = DESK_DEFAULTS[kind]
    values.setdefault("n_values", defaults["n_values"])
    values.setdefault("trials", defaults["trials"])
    return ExperimentConfig(kind=kind, **values)


def _print_run_summary(result: ExperimentResult) -> None:
    cfg = result.config
    sizes = ",".join(str(n) for n in cfg.n_values)
    print(f"{cfg.kind}: n={sizes} trials={cfg.trials} seed={cfg.seed}")
    for entry in result.per_n:
        print(
            f"  n={entry['n']}: mean={entry['mean']:.6g} "
            f"stderr={entry['stderr']:.3g} count={entry['count']}"
        )
    if result.fit is not None:
        f = result.fit
        print(
            f"  fit {f.model}: coefficient={f.coefficient:.6g} "
            f"+/- {f.stderr:.3g} (r2={f.r_squared:.6g})"
        )
    if cfg.kind == KIND_GP_CHECK:
        print(
            f"  max |net z|={result.details['max_abs_net_z']:.3g} "
            f"max |gp z|={result.details['max_abs_gp_z']:.3g}"
        )
    if cfg.kind == KIND_GREEDY_VS_EXACT:
        print(
            f"  violations={result.details['total_violations']} "
            f"max_gap={result.details['max_gap']}"
        )
    for attr, label in (
        ("out_csv", "rows"),
        ("out_json", "summary"),
        ("plot_csv", "plot data"),
    ):
        path = getattr(cfg, attr)
        if path:
            print(f"  wrote {label} to {path}")
    if result.truncated:
        print("  TRUNCATED: interrupted before all trials finished")


def _cmd_experiment(kind: str, args) -> int:
    config = _build_experiment_config(kind, args)
    result = run_experiment(config)
    _print_run_summary(result)
    return 130 if result.truncated else 0


# ---------------------------------------------------------------------------
# kernel subcommand
# ---------------------------------------------------------------------------


def _params_hash(label: str, params: dict) -> str:
    text = label + "".join(f"\n{k}={params[k]!r}" for k in sorted(params))
    return hashlib.sha256(text.encode()).hexdigest()


def _kernel_csv(profile: KernelProfile, sha: str) -> str:
    depth = profile.grid_f_layers.shape[0]
    header = ["t"] + [f"F_{l}" for l in range(1, depth + 1)] + ["F"]
    lines = [
        "# kind=kernel",
        f"# config_sha256={sha}",
        f"# version={VERSION}",
        ",".join(header),
    ]
    for j in range(profile.grid_t.size):
        cells = [repr(float(profile.grid_t[j]))]
        cells.extend(repr(float(profile.grid_f_layers[l, j])) for l in range(depth))
        cells.append(repr(float(profile.grid_f_layers[-1, j])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _merge_params(args, file_values: dict, keys) -> dict:
    params = dict(file_values)
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            params[key] = flag
    return params


def _cmd_kernel(args) -> int:
    file_values = _load_file_values(args.config, "kernel", _KERNEL_FILE_KEYS)
    params = _merge_params(
        args, file_values, ("sigma_w2", "sigma_b2", "layers", "activation", "out_json")
    )
    if getattr(args, "out_csv", None) is not None:
        params["out_csv"] = args.out_csv
    build = {
        "sigma_w2": params.get("sigma_w2", 2.0),
        "sigma_b2": params.get("sigma_b2", 0.0),
        "layers": params.get("layers", 2),
        "activation": params.get("activation", "relu"),
    }
    profile = build_profile(**build)
    sha = _params_hash("kernel", build)
    summary = {
        "Q_l": list(profile.q_per_layer),
        "Q": profile.q,
        "Fprime1": profile.f_prime_1,
        "activation": profile.activation,
        "params": build,
        "provenance": {"config_sha256": sha, "version": VERSION},
    }
    out_csv = params.get("out_csv")
    if out_csv:
        Path(out_csv).write_text(
            _kernel_csv(profile, sha), encoding="utf-8", newline="\n"
        )
        print(f"wrote kernel table to {out_csv}")
    text = json.dumps(summary, indent=2)
    out_json = params.get("out_json")
    if out_json:
        Path(out_json).write_text(text + "\n", encoding="utf-8")
        print(f"wrote kernel summary to {out_json}")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# theory subcommand
# ---------------------------------------------------------------------------


def _cmd_theory(args) -> int:
    file_values = _load_file_values(args.config, "theory", _THEORY_FILE_KEYS)
    params = _merge_params(
        args,
        file_values,
        ("n", "a", "z", "sigma_w2", "sigma_b2", "layers", "activation", "out_json"),
    )
    if "n" not in params:
        raise ConfigError("theory requires --n")
    profile = build_profile(
        sigma_w2=params.get("sigma_w2", 2.0),
        sigma_b2=params.get("sigma_b2", 0.0),
        layers=params.get("layers", 2),
        activation=params.get("activation", "relu"),
    )
    report = theory_report(
        profile,
        n=int(params["n"]),
        a=float(params.get("a", 0.4)),
        z=float(params.get("z", 1.0)),
    )
    text = json.dumps(report, indent=2)
    out_json = params.get("out_json")
    if out_json:
        Path(out_json).write_text(text + "\n", encoding="utf-8")
        print(f"wrote theory report to {out_json}")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# fit subcommand
# ---------------------------------------------------------------------------


def _cmd_fit(args) -> int:
    meta, columns, rows = read_rows_csv(args.csv)
    kind = meta.get("kind")
    if kind not in (KIND_CLOSEST, KIND_FLIPS):
        raise ConfigError(
            f"fit expects a closest or flips rows CSV, got kind={kind!r}"
        )
    if columns != SCALING_COLUMNS:
        raise ConfigError(
            f"unexpected columns {','.join(columns)}; "
            f"want {','.join(SCALING_COLUMNS)}"
        )
    per_n, fit, censored = refit_rows(kind, rows)
    out = {
        "kind": kind,
        "source": str(args.csv),
        "source_meta": meta,
        "per_n": per_n,
        "fit": fit.as_dict() if fit is not None else None,
        "censored": {str(k): v for k, v in censored.items()},
    }
    text = json.dumps(out, indent=2)
    if args.out_json:
        Path(args.out_json).write_text(text + "\n", encoding="utf-8")
        print(f"wrote fit to {args.out_json}")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bitboundary",
        description="Boundary-distance experiments and kernel theory for "
        "random deep networks on bit strings.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {VERSION}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("kernel", help="tabulate Q, F_l(t), F'(1)")
    _add_network_flags(p, widths=False)
    p.add_argument("--out-csv", default=None, metavar="PATH",
                   help="write the (t, F_1..F_{L+1}, F) table")
    p.add_argument("--out-json", default=None, metavar="PATH",
                   help="write the summary instead of printing it")
    _add_config_flag(p)
    p.set_defaults(handler=_cmd_kernel)

    p = sub.add_parser("theory", help="closed-form predictors at one (n, a, z)")
    p.add_argument("--n", type=int, default=None, metavar="N", help="input size")
    p.add_argument("--a", type=float, default=None, metavar="A",
                   help="distance scale in h = floor(a sqrt(n/ln n)) (default 0.4)")
    p.add_argument("--z", type=float, default=None, metavar="Z",
                   help="conditioning phi(x) = sqrt(Q) z (default 1.0)")
    _add_network_flags(p, widths=False)
    p.add_argument("--out-json", default=None, metavar="PATH",
                   help="write the report instead of printing it")
    _add_config_flag(p)
    p.set_defaults(handler=_cmd_theory)

    p = sub.add_parser("closest", help="nearest-boundary distance experiment")
    _add_experiment_flags(p)
    p.add_argument("--method", choices=("greedy", "exact"), default=None,
                   help="search method (default greedy)")
    _add_budget_flags(p)
    _add_plot_flag(p)
    p.set_defaults(handler=lambda a: _cmd_experiment(KIND_CLOSEST, a))

    p = sub.add_parser("flips", help="random-flip-walk experiment")
    _add_experiment_flags(p)
    _add_plot_flag(p)
    p.set_defaults(handler=lambda a: _cmd_experiment(KIND_FLIPS, a))

    p = sub.add_parser("gp-check", help="network vs kernel vs GP covariance")
    _add_experiment_flags(p)
    p.set_defaults(handler=lambda a: _cmd_experiment(KIND_GP_CHECK, a))

    p = sub.add_parser("greedy-vs-exact", help="paired search comparison")
    _add_experiment_flags(p)
    _add_budget_flags(p)
    p.set_defaults(handler=lambda a: _cmd_experiment(KIND_GREEDY_VS_EXACT, a))

    p = sub.add_parser("fit", help="recompute aggregates and fit from a rows CSV")
    p.add_argument("csv", help="rows CSV written by closest or flips")
    p.add_argument("--out-json", default=None, metavar="PATH",
                   help="write the fit instead of printing it")
    p.set_defaults(handler=_cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if isinstance(code, int):
            return code
        return 0 if code is None else 2
    try:
        return args.handler(args)
    except BitBoundaryError as exc:
        print(f"bitboundary: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"bitboundary: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bitboundary: error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    raise SystemExit(main())

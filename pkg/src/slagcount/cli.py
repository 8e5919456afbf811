"""Command line front end: ``slagcount {constants,census,xi,roots}``.

Every subcommand writes one artifact (JSON, CSV or a plain table) to stdout
or ``--out``.  Validation problems exit with status 2 and name the flag.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib.resources import files

from .exponent_calculus import PPiNotTabulatedError, delta_chain
from .harish_chandra import (QuadratureError, UnsupportedSpecError, fit_decay,
                             polynomial_degree, xi_samples)
from .isotropic_census import InsufficientDataError, census, fit_exponent
from .lie_data import GroupSpec, dimensions, load_p_pi_table, rho_H, root_datum
from .quadratic_lattice import GramLattice, PositivePlane

SUBCOMMANDS = ("constants", "census", "xi", "roots")
OUTPUTS = ("json", "csv", "table")
SEED_MAX = 2 ** 64


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str = "json"
    out_path: str | None = None


def rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _spec(params) -> GroupSpec:
    p, q = params["p"], params["q"]
    if p < 1:
        raise UsageError("--p", f"must be at least 1, got {p}")
    if q < p:
        raise UsageError("--q", f"must be at least --p = {p}, got {q}")
    return GroupSpec(p, q)


_TERM = re.compile(r"([+-]?)(\d*)e(\d+)")


def parse_plane(text: str, rank: int) -> list[list[int]]:
    """``"e1+e2,2e3-e4"`` -> integer coordinate vectors (1-based basis indices)."""
    vectors = []
    for chunk in text.replace(" ", "").split(","):
        if not chunk:
            raise UsageError("--plane", "empty vector")
        pos, v = 0, [0] * rank
        while pos < len(chunk):
            m = _TERM.match(chunk, pos)
            if not m or (pos and not m.group(1)):
                raise UsageError("--plane", f"cannot parse {chunk!r}")
            idx = int(m.group(3))
            if not 1 <= idx <= rank:
                raise UsageError("--plane", f"e{idx} out of range for rank {rank}")
            coef = int(m.group(2) or 1)
            v[idx - 1] += -coef if m.group(1) == "-" else coef
            pos = m.end()
        vectors.append(v)
    return vectors


def _v_list(params) -> list[float]:
    if params.get("v_list"):
        try:
            vs = [float(x) for x in params["v_list"].split(",")]
        except ValueError:
            raise UsageError("--v-list", "expected comma separated numbers") from None
        flag = "--v-list"
    elif params.get("vmax") is not None:
        vs, flag = [float(params["vmax"])], "--vmax"
    else:
        raise UsageError("--vmax", "give --vmax or --v-list")
    if any(not math.isfinite(v) or v <= 0 for v in vs):
        raise UsageError(flag, "bounds must be positive")
    if vs != sorted(set(vs)):
        raise UsageError(flag, "bounds must be strictly increasing")
    return vs


# -- subcommands --------------------------------------------------------------------

def _constants(cfg: RunConfig) -> dict:
    spec = _spec(cfg.params)
    table = None
    if cfg.params.get("p_pi_table"):
        try:
            table = load_p_pi_table(cfg.params["p_pi_table"])
        except (OSError, ValueError) as exc:
            raise UsageError("--p-pi-table", str(exc)) from None
    p_pi = cfg.params.get("p_pi")
    if p_pi is not None and p_pi < 2:
        raise UsageError("--p-pi", "p(pi) is at least 2")
    try:
        rep = delta_chain(spec, p_pi, table)
    except PPiNotTabulatedError as exc:
        raise UsageError("--p-pi", f"{exc}; pass --p-pi or --p-pi-table") from None
    variant = cfg.params.get("variant", "section5")
    exact = {
        "rho_H": rep.rho_H,
        "delta0_prime_sup": rep.delta0_prime_sup,
        "C_l0": rep.C_l0,
        "delta0_sup": rep.delta0_sup,
        "d_l0": rep.d_l0,
        "delta_section5": rep.delta_section5,
        "delta_eq22": rep.delta_eq22,
    }
    if variant == "section5":
        exact.pop("delta_eq22")
    elif variant == "eq22":
        exact.pop("delta_section5")
    out = {"p": spec.p, "q": spec.q, "p_pi": rep.p_pi, "variant": variant,
           **rep.dims.to_dict(), "l0_prime": rep.l0_prime, "l0": rep.l0}
    out.update({k: rational(v) for k, v in exact.items()})
    out["decimal"] = {k: float(v) for k, v in exact.items()}
    out["open_interval"] = {k: v for k, v in rep.open_interval_flags.items()
                            if k in exact or not k.startswith("delta_")}
    return out


def _census(cfg: RunConfig) -> dict:
    try:
        lattice = GramLattice.parse(cfg.params["lattice"])
    except ValueError as exc:
        raise UsageError("--lattice", str(exc)) from None
    vs = _v_list(cfg.params)
    n_plus = lattice.signature[0]
    if cfg.params.get("plane"):
        vectors = parse_plane(cfg.params["plane"], lattice.rank)
        if len(vectors) != n_plus:
            raise UsageError("--plane", f"need {n_plus} spanning vectors for a maximal "
                                        f"positive plane of {lattice.name}, got {len(vectors)}")
        try:
            plane = PositivePlane.from_vectors(lattice, vectors)
        except ValueError as exc:
            raise UsageError("--plane", str(exc)) from None
        plane_info = {"source": "explicit", "vectors": vectors}
    else:
        if n_plus == 0:
            plane = PositivePlane.empty(lattice)
        else:
            plane = PositivePlane.random(lattice, cfg.seed)
        plane_info = {"source": "seed", "seed": cfg.seed}
    threads = cfg.params.get("threads")
    if threads is not None and threads < 1:
        raise UsageError("--threads", "must be at least 1")
    records = census(lattice, plane, vs, threads)
    timing = cfg.params.get("timing", False)
    rows = [{"V": r.V, "count": r.count, "count_up_to_sign": r.count_up_to_sign,
             "enumerated": r.enumerated, "elapsed_ms": r.elapsed_ms if timing else 0}
            for r in records]
    try:
        f = fit_exponent(records)
        fit = {"slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared,
               "expected_slope": lattice.rank - 2}
    except InsufficientDataError:
        fit = None
    return {"lattice": lattice.name, "rank": lattice.rank,
            "signature": list(lattice.signature), "plane": plane_info,
            "records": rows, "fit": fit}


def _xi(cfg: RunConfig) -> dict:
    pr = cfg.params
    spec = _spec(pr)
    if spec.n > 4:
        raise UsageError("--q", f"Xi quadrature needs p + q <= 4; for ({spec.p},{spec.q}) "
                                f"the decay rate is rho(H) = {rho_H(spec)} (see `roots`)")
    if pr["samples"] < 8:
        raise UsageError("--samples", "need at least 8 samples")
    if pr["nodes"] < 256:
        raise UsageError("--nodes", "need at least 256 nodes per circle")
    if pr["t_min"] < 4:
        raise UsageError("--t-min", "must be at least 4")
    if pr["t_max"] <= pr["t_min"]:
        raise UsageError("--t-max", "must exceed --t-min")
    try:
        data = xi_samples(spec, pr["t_min"], pr["t_max"], pr["samples"], pr["nodes"])
    except UnsupportedSpecError as exc:
        raise UsageError("--p", str(exc)) from None
    except QuadratureError as exc:
        raise UsageError("--nodes", str(exc)) from None
    fit = fit_decay([t for t, _ in data], [math.log(x) for _, x in data],
                    float(rho_H(spec)), polynomial_degree(spec))
    return {"p": spec.p, "q": spec.q, "nodes": pr["nodes"],
            "samples": [{"t": t, "xi": x, "log_xi": math.log(x)} for t, x in data],
            "fit": {"rate": fit.rate, "intercept": fit.intercept, "r_squared": fit.r_squared,
                    "rate_pure": fit.rate_pure, "r_squared_pure": fit.r_squared_pure,
                    "rate_matched": fit.rate_matched, "r_squared_matched": fit.r_squared_matched,
                    "log_power_matched": fit.log_power_matched, "expected_rate": rational(rho_H(spec)),
                    "expected_rate_decimal": fit.expected_rate}}


def _roots(cfg: RunConfig) -> dict:
    spec = _spec(cfg.params)
    datum = root_datum(spec).to_dict()
    datum["rho"] = [rational(x) for x in root_datum(spec).rho]
    datum["rho_H"] = rational(rho_H(spec))
    datum["dim_n"] = root_datum(spec).dim_n
    datum["dimensions"] = dimensions(spec).to_dict()
    return datum


HANDLERS = {"constants": _constants, "census": _census, "xi": _xi, "roots": _roots}


# -- rendering ------------------------------------------------------------------------

def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in d.items():
        if isinstance(v, dict):
            out.extend(_flatten(v, f"{prefix}{k}."))
        else:
            out.append((prefix + k, v))
    return out


def render(subcommand: str, result: dict, output: str) -> str:
    if output == "json":
        return json.dumps(result, indent=2) + "\n"
    if subcommand == "census" and output == "csv":
        return _csv(result["records"], ["V", "count", "count_up_to_sign", "enumerated", "elapsed_ms"])
    if subcommand == "xi" and output == "csv":
        # the fit rides along as a comment block so plain CSV readers can skip it
        fit = json.dumps({"fit": result["fit"]}, indent=2)
        return _csv(result["samples"], ["t", "xi", "log_xi"]) + "".join(
            f"# {line}\n" for line in fit.splitlines())
    if output == "csv":
        return _csv([{"key": k, "value": json.dumps(v) if isinstance(v, list) else v}
                     for k, v in _flatten(result)], ["key", "value"])
    if subcommand in ("census", "xi"):
        rows = result["records"] if subcommand == "census" else result["samples"]
        cols = list(rows[0]) if rows else []
        lines = ["  ".join(f"{c:>16}" for c in cols)]
        lines += ["  ".join(f"{r[c]:>16}" for c in cols) for r in rows]
        if result.get("fit"):
            lines.append("")
            lines += [f"{k:<24}{v}" for k, v in _flatten(result["fit"], "fit.")]
        return "\n".join(lines) + "\n"
    items = _flatten(result)
    width = max(len(k) for k, _ in items) + 2
    return "".join(f"{k:<{width}}{json.dumps(v) if isinstance(v, list) else v}\n"
                   for k, v in items)


# -- entry points -------------------------------------------------------------------

def run(config: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if config.subcommand not in HANDLERS:
        print(f"slagcount: error: unknown subcommand {config.subcommand!r}", file=sys.stderr)
        return 2
    if config.output not in OUTPUTS:
        print(f"slagcount: error: --output: must be one of {', '.join(OUTPUTS)}", file=sys.stderr)
        return 2
    if not 0 <= config.seed < SEED_MAX:
        print("slagcount: error: --seed: must be a 64-bit unsigned integer", file=sys.stderr)
        return 2
    try:
        result = HANDLERS[config.subcommand](config)
    except UsageError as exc:
        print(f"slagcount: error: {exc}", file=sys.stderr)
        return 2
    text = render(config.subcommand, result, config.output)
    if config.out_path:
        try:
            with open(config.out_path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"slagcount: error: --out: {exc}", file=sys.stderr)
            return 2
    else:
        stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=OUTPUTS, default="json")
    common.add_argument("--out", dest="out_path", help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=0)

    pq = argparse.ArgumentParser(add_help=False)
    pq.add_argument("--p", type=int, required=True)
    pq.add_argument("--q", type=int, required=True)

    parser = argparse.ArgumentParser(prog="slagcount", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    c = sub.add_parser("constants", parents=[common, pq], help="exact delta chain for SO(p, q)")
    c.add_argument("--p-pi", type=int, help="integrability exponent p(pi), overrides the table")
    c.add_argument("--p-pi-table", help="JSON file of [p, q, p_pi] rows extending the table")
    c.add_argument("--variant", choices=("section5", "eq22", "both"), default="section5")

    s = sub.add_parser("census", parents=[common], help="count primitive isotropic vectors")
    s.add_argument("--lattice", required=True, help='e.g. "U", "2U", "3U+2E8m"')
    s.add_argument("--vmax", type=float, help="single projection bound V")
    s.add_argument("--v-list", help="comma separated increasing bounds")
    s.add_argument("--plane", help='spanning vectors, e.g. "e1+e2,e3+e4"; seeded if omitted')
    s.add_argument("--threads", type=int, help="worker threads (default: SLAG_THREADS or CPU count)")
    s.add_argument("--timing", action="store_true", help="report wall time (breaks byte-determinism)")

    x = sub.add_parser("xi", parents=[common, pq], help="Harish-Chandra Xi decay on a boost ray")
    x.add_argument("--t-min", type=float, default=6.0)
    x.add_argument("--t-max", type=float, default=12.0)
    x.add_argument("--samples", type=int, default=13)
    x.add_argument("--nodes", type=int, default=256, help="quadrature nodes per circle")

    sub.add_parser("roots", parents=[common, pq], help="restricted root datum")
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    cmd = ns.pop("subcommand")
    return RunConfig(cmd, seed=ns.pop("seed"), output=ns.pop("output"),
                     out_path=ns.pop("out_path"), params=ns)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse already printed the offending flag
        return int(exc.code or 0)
    return run(cfg)


def load_schema(subcommand: str) -> dict:
    """JSON schema shipped for ``subcommand``'s JSON output."""
    return json.loads(files("slagcount").joinpath("schemas", f"{subcommand}.schema.json").read_text())

"""
Batch command line: ``linkenergy <subcommand> [options]``.

Subcommands: energy, linking, transform, family-scan, sweepout-scan,
minimize, verify. Options may also come from ``--config file.json`` whose
keys are the long option names (dashes or underscores); unknown keys are
rejected. Explicit command-line options win over the config file.

Exit codes: 0 ok, 1 a verify check failed, 2 config or parse error,
3 intersecting link, 4 unresolved linking number, 5 singularity,
6 containment violation, 7 stalled descent.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .conformal import map_from_dict, pushforward_link
from .curves import (NAMED_LINKS, link_to_dict, load_link, named_link, project_link_to_r3,
                     save_link, stereographic_lift_link)
from .energy import gauss_linking_integral, linking_number, mobius_energy
from .errors import ConfigError, LinkEnergyError
from .family import family_samples, family_scan
from .optimizer import minimize
from .sweepout import MinMaxFamily, sweepout_samples
from .verify import DEFAULT_TOLERANCES, format_table, run_suite

TWO_PI_SQ = 2.0 * math.pi ** 2
LINK_NAMES = sorted(NAMED_LINKS) + ["perturbed-hopf"]


def fmt(x):
    """12 significant digits, locale independent."""
    return format(float(x), ".12g")


def _num(x):
    return float(fmt(x))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_link(p, seed_required=False):
    p.add_argument("--link", choices=LINK_NAMES, help="built-in link")
    p.add_argument("--input", help="link JSON file")
    p.add_argument("--seed", type=int, required=False,
                   help="seed (required for perturbed-hopf" + (" and sampling)" if seed_required else ")"))
    p.add_argument("--amp", type=float, default=0.1, help="perturbation amplitude")
    p.add_argument("--chart", choices=["R3", "S3"], default="R3")
    p.add_argument("--quad-n", type=int, default=128)


def build_parser():
    parser = _Parser(prog="linkenergy", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--config", help="JSON file of option defaults")
    parser.add_argument("--threads", type=int, help="worker threads for scans")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("energy", help="cross energy of a link")
    _add_link(p)

    p = sub.add_parser("linking", help="Gauss linking integral")
    _add_link(p)

    p = sub.add_parser("transform", help="apply a conformal map to a link")
    _add_link(p)
    p.add_argument("--map", required=False, help="conformal map JSON file")
    p.add_argument("--out", help="write the image link JSON here")

    p = sub.add_parser("family-scan", help="areas of sampled family members (CSV)")
    _add_link(p, True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(quad_n=96)

    p = sub.add_parser("sweepout-scan", help="areas of sampled sweepout members (CSV)")
    _add_link(p, True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--boundary-fraction", type=float, default=0.25)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(quad_n=96)

    p = sub.add_parser("minimize", help="gradient descent on the energy")
    _add_link(p)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--out", help="trace CSV path (default stdout)")
    p.add_argument("--final", help="write the final link JSON here")
    p.set_defaults(quad_n=96)

    p = sub.add_parser("verify", help="run the invariant suite")
    _add_link(p)
    p.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                   help="override one check tolerance")
    p.add_argument("--reference", action="store_true",
                   help="also run the round Hopf link checks (implied for hopf, hopf-r3)")
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        data = json.loads(Path(known.config).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{known.config}: malformed JSON at line {exc.lineno} "
                          f"col {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{known.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    command = next((a for a in argv if not a.startswith("-") and a in _subparsers(parser)), None)
    if command is None:
        raise ConfigError("no subcommand given")
    sp = _subparsers(parser)[command]
    allowed = {a.dest for a in sp._actions} | {"threads"}
    defaults = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in allowed or dest in ("help", "config"):
            raise ConfigError(f"unknown config key {key!r} for {command}")
        defaults[dest] = value
    if "threads" in defaults:
        parser.set_defaults(threads=defaults.pop("threads"))
    sp.set_defaults(**defaults)


def _subparsers(parser):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices
    return {}


def _load(args):
    if args.input and args.link:
        raise ConfigError("give either --link or --input, not both")
    if args.input:
        return load_link(args.input), Path(args.input).name
    if not args.link:
        raise ConfigError("a link is required: --link NAME or --input FILE")
    return named_link(args.link, args.seed, args.amp, args.chart), args.link


def _hash(link, **params):
    blob = json.dumps({"link": link_to_dict(link), "params": params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _record(operation, link, n, value, residuals, **params):
    return json.dumps({"operation": operation, "inputs_hash": _hash(link, **params), "N": n,
                       "value": _num(value) if value is not None else None,
                       "residuals": {k: _num(v) for k, v in residuals.items()},
                       **params})


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    fh = _open_out(path)
    try:
        fh.write(buf.getvalue())
    finally:
        if fh is not sys.stdout:
            fh.close()


def _require_seed(args):
    if args.seed is None:
        raise ConfigError(f"{args.command} samples randomly; --seed is required")


def _on_s3(link):
    return link if link.dim == 4 else stereographic_lift_link(link)


def _in_r3(link):
    return link if link.dim == 3 else project_link_to_r3(link)


def cmd_energy(args, out):
    link, name = _load(args)
    E = mobius_energy(link, args.quad_n)
    print(_record("energy", link, args.quad_n, E, {"distance_to_2pi2": abs(E - TWO_PI_SQ)},
                  link_name=name), file=out)
    return 0


def cmd_linking(args, out):
    link, name = _load(args)
    r3 = _in_r3(link)
    g = gauss_linking_integral(r3, args.quad_n)
    lk = linking_number(r3, args.quad_n)
    print(_record("linking", link, args.quad_n, g, {"distance_to_integer": abs(g - lk)},
                  link_name=name, lk=lk), file=out)
    return 0


def cmd_transform(args, out):
    link, name = _load(args)
    if not args.map:
        raise ConfigError("transform needs --map FILE")
    try:
        cmap = map_from_dict(json.loads(Path(args.map).read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.map}: malformed JSON at line {exc.lineno} col {exc.colno}: "
                          f"{exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{args.map}: {exc}") from exc
    image = pushforward_link(cmap, link)
    e0 = mobius_energy(link, args.quad_n)
    e1 = mobius_energy(image, args.quad_n)
    if args.out:
        save_link(image, args.out)
    print(_record("transform", link, args.quad_n, e1,
                  {"relative_energy_change": abs(e1 - e0) / e0}, link_name=name,
                  energy_before=_num(e0)), file=out)
    return 0


def cmd_family_scan(args, out):
    _require_seed(args)
    link, _ = _load(args)
    points = family_samples(args.samples, args.seed)
    sampler, rows = family_scan(_on_s3(link), points, args.quad_n, args.threads)
    header = ["v1", "v2", "v3", "v4", "z", "areaIntegral", "upperIntegrand", "maxJac",
              "minContainmentMargin"]
    _write_csv(args.out, header,
               [[*map(float, r.v), r.z, r.area_integral, r.upper_integral, r.max_jac,
                 r.containment_margin] for r in rows])
    if args.out:
        sup = max(r.area_integral for r in rows)
        print(_record("family-scan", link, args.quad_n, sup,
                      {"sup_minus_energy": sup - sampler.energy}, samples=args.samples,
                      seed=args.seed), file=out)
    return 0


def cmd_sweepout_scan(args, out):
    _require_seed(args)
    link, _ = _load(args)
    mm = MinMaxFamily(_on_s3(link), args.quad_n)
    rows = []
    for x in sweepout_samples(args.samples, args.seed, args.boundary_fraction):
        pt = mm.surface(x[:4], x[4])
        sres = mres = math.nan
        if pt.kind == "sphere":
            sres, mres = mm.boundary_sphere_residual(x[:4], x[4])
        rows.append([*map(float, x), pt.kind, float(pt.area), float(pt.radius), sres, mres])
    header = ["x1", "x2", "x3", "x4", "t", "kind", "area", "sphereRadius",
              "sphereResidual", "massResidual"]
    _write_csv(args.out, header, rows)
    sup = max(r[6] for r in rows)
    summary = _record("sweepout-scan", link, args.quad_n, sup,
                      {"sup_minus_energy": sup - mm.energy}, samples=args.samples, seed=args.seed)
    print(summary, file=out if args.out else sys.stderr)
    return 0


def cmd_minimize(args, out):
    link, name = _load(args)
    if link.dim != 3:
        link = project_link_to_r3(link)
    res = minimize(link, args.max_iter, args.tol, args.quad_n, args.modes)
    _write_csv(args.out, ["iter", "energy", "alpha", "step", "gradnorm", "lk"],
               [[r.iter, float(r.energy), float(r.alpha), float(r.step), float(r.gradnorm),
                 "" if r.lk is None else r.lk] for r in res.trace])
    if args.final:
        save_link(res.link, args.final)
    summary = _record("minimize", link, args.quad_n, res.energy,
                      {"distance_to_2pi2": abs(res.energy - TWO_PI_SQ),
                       "gradnorm": res.trace[-1].gradnorm},
                      link_name=name, iterations=res.iterations, converged=res.converged,
                      stalled=res.stalled)
    print(summary, file=out if args.out else sys.stderr)
    return 7 if res.stalled else 0


def cmd_verify(args, out):
    link, name = _load(args)
    tol = {}
    for item in args.tolerance:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override {item!r} is not NAME=VALUE")
        try:
            tol[key] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance {value!r} is not a number") from None
    reference = args.reference or name in ("hopf", "hopf-r3")
    results = run_suite(link, args.quad_n, seed=args.seed or 0, reference=reference,
                        tolerances=tol)
    print(format_table(results), file=out)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=out)
    return 1 if failed else 0


COMMANDS = {
    "energy": cmd_energy,
    "linking": cmd_linking,
    "transform": cmd_transform,
    "family-scan": cmd_family_scan,
    "sweepout-scan": cmd_sweepout_scan,
    "minimize": cmd_minimize,
    "verify": cmd_verify,
}


def main(argv=None, out=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.threads:
            os.environ["LINKENERGY_THREADS"] = str(args.threads)
        if getattr(args, "quad_n", 8) < 8:
            raise ConfigError("--quad-n must be at least 8")
        return COMMANDS[args.command](args, out)
    except LinkEnergyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: render, enumerate, verify, spectra.

Exit codes: 0 ok, 1 verification failure, 2 invalid packing, 3 I/O error,
4 budget exceeded.  Settings come from defaults, then an optional key=value
config file, then flags; the thread count falls back to APOLLO3_THREADS.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import quadratic_core as qc
from .residues import BudgetExceeded

EXIT_OK, EXIT_FAIL, EXIT_PACKING, EXIT_IO, EXIT_BUDGET = 0, 1, 2, 3, 4

DEFAULTS = {
    "root": "-1,2,2,3",
    "w_choice": "smaller",
    "max": "500",
    "n": "10000",
    "q": "5,7,8,9",
    "suite": "all",
    "threads": None,
    "out": ".",
    "budget": str(10**7),
}
SUITES = ("local", "spin", "sums", "quotients")


class PackingError(ValueError):
    pass


@dataclass
class PackingConfig:
    root: qc.Quadruple
    w_choice: str
    out: Path
    threads: int
    budget: int


def read_config_file(path: str) -> dict:
    """key=value lines; blank lines and lines starting with # are ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        if k not in DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown key {k!r}")
        out[k] = v.strip()
    return out


def _ints(text: str) -> list[int]:
    text = text.strip()
    return [int(t) for t in text.split(",") if t.strip()] if text else []


def resolve_root(text: str, w_choice: str = "smaller") -> qc.Quadruple:
    """Three curvatures (w is solved for) or an explicit quadruple, checked for primitivity."""
    vals = _ints(text)
    if len(vals) == 4:
        quad = qc.Quadruple(*vals)
        if qc.eval_Q(quad) != 0:
            raise PackingError(f"{tuple(quad)} does not satisfy Q = 0")
    elif len(vals) == 3:
        ws = sorted(qc.solve_w(*vals))
        if not ws:
            raise PackingError(f"no integer w for {tuple(vals)}")
        quad = qc.Quadruple(*vals, ws[0] if w_choice == "smaller" else ws[-1])
    else:
        raise PackingError("root needs three curvatures or a quadruple")
    if math.gcd(*quad.six()) != 1:
        raise PackingError(f"packing {tuple(quad)} is not primitive")
    return quad


def resolve_threads(flag) -> int:
    raw = flag if flag is not None else os.environ.get("APOLLO3_THREADS", "1")
    n = int(raw)
    if n < 1:
        raise ValueError("thread count must be positive")
    return n


def _to_json(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (np.ndarray, tuple, set)):
        return list(o.tolist() if isinstance(o, np.ndarray) else o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def load_schema() -> dict:
    return json.loads(resources.files("apollo3").joinpath("schemas/report.schema.json").read_text())


# -- subcommands -------------------------------------------------------------

def _viewport(circles) -> tuple[float, float, float, float]:
    finite = [c for c in circles if not c.is_line]
    bound = [c for c in finite if c.b < 0]
    if bound:
        c = min(bound, key=lambda c: c.b)
        (cx, cy), r = c.center(), c.radius()
        lo_x, hi_x, lo_y, hi_y = cx - r, cx + r, cy - r, cy + r
    else:
        lo_x = min(c.center()[0] - c.radius() for c in finite)
        hi_x = max(c.center()[0] + c.radius() for c in finite)
        lo_y = min(c.center()[1] - c.radius() for c in finite)
        hi_y = max(c.center()[1] + c.radius() for c in finite)
    pad = 0.025 * max(hi_x - lo_x, hi_y - lo_y)
    # the SVG y axis points down, so the box is flipped
    return (lo_x - pad, -hi_y - pad, hi_x - lo_x + 2 * pad, hi_y - lo_y + 2 * pad)


def cmd_render(cfg: PackingConfig, max_curvature: int) -> int:
    from . import geometry as geo

    r = cfg.root
    # an explicit quadruple fixes which of the two fillings is used
    choice = "smaller" if r.w == min(qc.solve_w(r.k1, r.k2, r.k3)) else "larger"
    try:
        config = geo.root_config(r.k1, r.k2, r.k3, choice)
    except (geo.NoIntegerW, geo.DegenerateConfiguration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PACKING
    circles = list(geo.generate_circles(config, max_curvature))
    svg = geo.render_svg(circles, _viewport(circles))
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "packing.svg").write_text(svg)
    (cfg.out / "circles.json").write_text(geo.circles_json(circles))
    print(f"{len(circles)} circles with curvature <= {max_curvature} -> {cfg.out / 'packing.svg'}")
    return EXIT_OK


def cmd_enumerate(cfg: PackingConfig, N: int) -> int:
    from . import orbits

    if N > cfg.budget:
        print(f"error: N={N} exceeds budget {cfg.budget}", file=sys.stderr)
        return EXIT_BUDGET
    cset = orbits.curvature_set(tuple(cfg.root), N, cfg.threads)
    rows = orbits.density_report(tuple(cfg.root), N, cset)
    cfg.out.mkdir(parents=True, exist_ok=True)
    with open(cfg.out / "density.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["class", "admissible", "count_admissible",
                                           "count_represented", "fraction"])
        w.writeheader()
        for row in rows:
            w.writerow({**row, "admissible": int(row["admissible"]), "fraction": f"{row['fraction']:.12g}"})
    (cfg.out / "curvatures.bin").write_bytes(cset.to_bytes())
    print(f"{len(cset)} distinct curvatures <= {N}, {cset.circle_count()} circles")
    return EXIT_OK


def _suite_items(suite: str, cfg: PackingConfig) -> tuple[list[dict], list[dict]]:
    root = tuple(cfg.root)
    info: list[dict] = []
    if suite == "local":
        from .residues import lifting_matrices, verify_local_lemmas

        items = verify_local_lemmas(root)
        for m in (4, 5):
            L = lifting_matrices(m)
            info.append({"name": f"lifting matrices m={m}: word powers vs closed forms",
                         "value": {k: len(v) for k, v in L.mismatches.items()}})
        return items, info
    if suite == "spin":
        from .spin import verify_conjugate_subgroups, verify_spin_generators

        gen = verify_spin_generators()
        items = list(gen["items"])
        if not gen["identity_order"] and gen["pass"]:
            # a consistent relabelling of all seven generators is accepted and reported
            items = [{"lemma": "spin images match the generators up to relabelling",
                      "parameters": {"permutation": gen["permutation"], "matched": gen["matched"]},
                      "pass": True}]
        conj = verify_conjugate_subgroups()
        for it in conj["items"]:
            it = dict(it)
            it["parameters"] = {**it["parameters"], "sign": it.pop("sign")}
            items.append(it)
        info.append({"name": "C3' conjugation matches", "value": conj["c3_prime_matches"]})
        return items, info
    if suite == "sums":
        from . import sums
        from .spin import shifted_form

        items = sums.verify_sums(root)
        f = shifted_form(root)
        if f.A > 0:
            info.append({"name": "representation counts vs ideal-divisor bound",
                         "value": [sums.claim3_monitor(f, z) for z in (31, 100, 1000)]})
        info.append({"name": "Kloosterman ratios",
                     "value": sums.kloosterman_sweep((7, 15, 21), ((1, 1), (2, 3)))})
        return items, info
    if suite == "quotients":
        from . import quotients

        items = quotients.verify_quotient_lemma(budget=cfg.budget)
        for q in (5, 7, 8, 9):
            s = quotients.spectral_gap(q, cfg.budget)
            items.append({"lemma": "spectral gap positive", "parameters": {
                "q": q, "order": s.order, "lambda1": s.lambda1, "gap": s.gap}, "pass": s.gap > 1e-6})
        info.append({"name": "combination bound at q=5", "value": quotients.varju_report(5, cfg.budget)})
        return items, info
    raise ValueError(f"unknown suite {suite}")


def build_report(suite: str, cfg: PackingConfig) -> dict:
    suites = SUITES if suite == "all" else (suite,)
    items, info = [], []
    for s in suites:
        it, inf = _suite_items(s, cfg)
        items += [{"suite": s, **x} for x in it]
        info += [{"suite": s, **x} for x in inf]
    report = {"suite": suite, "root": list(cfg.root), "pass": all(x["pass"] for x in items),
              "items": items, "informational": info}
    # round-trip through JSON so numpy scalars become plain values
    return json.loads(json.dumps(report, default=_to_json))


def cmd_verify(cfg: PackingConfig, suite: str) -> int:
    import jsonschema

    report = build_report(suite, cfg)
    jsonschema.validate(report, load_schema())
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    for it in report["items"]:
        print(f"{'PASS' if it['pass'] else 'FAIL'}  [{it['suite']}] {it['lemma']} {json.dumps(it['parameters'])}")
    if not report["pass"]:
        first = next(it for it in report["items"] if not it["pass"])
        print(f"first failure: {first['lemma']}\nwitness: {json.dumps(first.get('witness'))}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_spectra(cfg: PackingConfig, qs: list[int]) -> int:
    from . import quotients

    rows = [quotients.spectral_gap(q, cfg.budget) for q in qs]
    cfg.out.mkdir(parents=True, exist_ok=True)
    with open(cfg.out / "spectra.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "order", "degree", "lambda1", "gap"])
        for s in rows:
            w.writerow([s.q, s.order, s.degree, f"{s.lambda1:.12g}", f"{s.gap:.12g}"])
    for s in rows:
        print(f"q={s.q} |G|={s.order} gap={s.gap:.6f}")
    return EXIT_OK


# -- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--root", help="k1,k2,k3 or k1,k2,k3,w (default -1,2,2,3)")
    common.add_argument("--w-choice", dest="w_choice", choices=("smaller", "larger"))
    common.add_argument("--threads", help="worker threads (default $APOLLO3_THREADS or 1)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--budget", help="work budget (max N, or group elements)")
    common.add_argument("--config", help="key=value file; flags override it")

    p = argparse.ArgumentParser(prog="apollo3", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", parents=[common], help="draw the packing as SVG")
    r.add_argument("--max", help="largest curvature drawn")
    e = sub.add_parser("enumerate", parents=[common], help="curvature set and density table")
    e.add_argument("--n", help="curvature bound N")
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", choices=SUITES + ("all",))
    s = sub.add_parser("spectra", parents=[common], help="spectral gaps of Cayley quotients")
    s.add_argument("--q", help="comma-separated moduli")
    return p


def _settings(args) -> dict:
    vals = dict(DEFAULTS)
    if args.config:
        vals.update(read_config_file(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    return vals


def _join_negative_values(argv: list[str]) -> list[str]:
    """Let "--root -1,2,2" through; argparse would read -1,2,2 as an option."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in ("--root", "--q") and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        vals = _settings(args)
        threads = resolve_threads(vals["threads"])
        budget = int(vals["budget"])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_PACKING
    try:
        root = resolve_root(vals["root"], vals["w_choice"])
    except (PackingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PACKING
    cfg = PackingConfig(root, vals["w_choice"], Path(vals["out"]), threads, budget)
    try:
        if args.command == "render":
            return cmd_render(cfg, int(vals["max"]))
        if args.command == "enumerate":
            return cmd_enumerate(cfg, int(vals["n"]))
        if args.command == "verify":
            return cmd_verify(cfg, vals["suite"])
        return cmd_spectra(cfg, _ints(vals["q"]))
    except BudgetExceeded as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

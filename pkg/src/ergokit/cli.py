"""Command-line front end.

Every output file carries the hash of a run manifest (command, generator spec,
parameters, seed, version).  Exit codes: 0 success, 2 invalid input, 3 failed
numerical certificate.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .boshernitzan import eta_profile, lin_rec_constant, pw_score
from .cocycle import schrodinger_rule, uniformity_gap
from .diophantine import CertificateFailure, brute_M, cf_expand, negative_cf, pinner_for
from .reals import looks_irrational, parse_real
from .spectrum import EnergyGrid, gamma_scan, spectrum_estimate, trace_bands
from .subshifts import ConstructionMismatch, SubstitutionRule, gen_from_spec
from .words import as_word, factor_table, max_power_index, word_str

EXIT_OK, EXIT_INVALID, EXIT_CERTIFICATE = 0, 2, 3


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


class Run:
    """Holds the manifest of one invocation and writes its outputs."""

    def __init__(self, command: str, spec: Optional[dict], params: dict, seed: int, timestamp: bool):
        self.manifest = {"command": command, "spec": spec, "params": params, "seed": seed,
                         "tool_version": __version__}
        canon = json.dumps(self.manifest, sort_keys=True, separators=(",", ":"))
        self.digest = hashlib.sha256(canon.encode()).hexdigest()
        self.timestamp = timestamp

    def _header(self) -> str:
        lines = [f"# manifest {self.digest}"]
        if self.timestamp:
            lines.append("# generated " + datetime.datetime.now(datetime.timezone.utc).isoformat())
        return "\n".join(lines) + "\n"

    def write_csv(self, path: Optional[str], header: List[str], rows) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        self._emit(path, self._header() + buf.getvalue())

    def write_json(self, path: Optional[str], payload: dict) -> None:
        doc = dict(payload)
        doc["manifest"] = dict(self.manifest, hash=self.digest)
        if self.timestamp:
            doc["generated"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self._emit(path, json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")

    @staticmethod
    def _emit(path: Optional[str], text: str) -> None:
        if path is None or path == "-":
            sys.stdout.write(text)
        else:
            Path(path).write_text(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# generator flags ---------------------------------------------------------------------


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("subshift")
    g.add_argument("--spec", help="generator spec as JSON text or @file")
    g.add_argument("--family", choices=["rotation", "substitution", "arnoux_rauzy", "iet", "periodic"])
    g.add_argument("--alpha", help="rotation number: golden, silver, cf:..., p/q or decimal")
    g.add_argument("--beta", help="single cut point (interval [0, beta) codes 1)")
    g.add_argument("--cuts", help="comma-separated cut points")
    g.add_argument("--theta", default="0")
    g.add_argument("--rule", help="substitution name or a:ab,b:a")
    g.add_argument("--seed-letter", default="a")
    g.add_argument("--index", help="AR periodic index word, e.g. 123")
    g.add_argument("--growth", help="AR growth program base,ratio (cycle 1,2,3), e.g. 4,2")
    g.add_argument("--lengths", help="IET lengths, comma-separated")
    g.add_argument("--tau", help="IET permutation, comma-separated 1-based")
    g.add_argument("--x", default="0", help="IET starting point")
    g.add_argument("--word", help="period of a periodic word")


def _gen_spec(args) -> dict:
    if args.spec:
        text = Path(args.spec[1:]).read_text() if args.spec.startswith("@") else args.spec
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad --spec JSON: {exc}") from None
    fam = args.family
    if fam is None:
        raise ValueError("give --family or --spec")
    if fam == "rotation":
        if not args.alpha:
            raise ValueError("rotation needs --alpha")
        cuts = args.cuts.split(",") if args.cuts else [args.beta or "alpha"]
        cuts = ["alpha" if c == args.alpha else c for c in cuts]
        return {"family": "rotation", "alpha": args.alpha, "cuts": cuts, "theta": args.theta}
    if fam == "substitution":
        if not args.rule:
            raise ValueError("substitution needs --rule")
        return {"family": "substitution", "rule": args.rule, "seed": args.seed_letter}
    if fam == "arnoux_rauzy":
        if args.growth:
            base, ratio = (int(t) for t in args.growth.split(","))
            return {"family": "arnoux_rauzy", "growth": {"cycle": [1, 2, 3], "base": base, "ratio": ratio}}
        if not args.index:
            raise ValueError("arnoux_rauzy needs --index or --growth")
        return {"family": "arnoux_rauzy", "period": [int(c) for c in args.index]}
    if fam == "iet":
        if not (args.lengths and args.tau):
            raise ValueError("iet needs --lengths and --tau")
        return {"family": "iet", "lengths": args.lengths.split(","),
                "tau": [int(t) for t in args.tau.split(",")], "x": args.x}
    if not args.word:
        raise ValueError("periodic needs --word")
    return {"family": "periodic", "word": args.word}


def _embed(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise ValueError(f"bad --embed {text!r}") from None


def _ints(text: str) -> List[int]:
    return [int(float(t)) for t in text.split(",")]


# subcommands ------------------------------------------------------------------------


def cmd_gen(args, run: Run, gen) -> None:
    x = gen.window(args.start, args.start + args.length - 1)
    run.write_csv(args.out, ["position", "symbol"], ((args.start + i, int(c)) for i, c in enumerate(x)))


def cmd_factors(args, run: Run, gen) -> None:
    table = factor_table(gen, args.n, args.horizon)
    run.write_csv(args.out, ["factor", "count", "frequency"],
                  ((word_str(f), c, c / table.positions) for f, c in zip(table.factors, table.counts)))


def cmd_eta(args, run: Run, gen) -> None:
    prof = eta_profile(gen, args.nmax, args.horizon, with_bprime=args.bprime)
    rows = []
    for i, n in enumerate(prof.n_values):
        bp = prof.bprime[i] if prof.bprime is not None else ""
        rows.append((n, prof.p_n[i], prof.eta_hat[i], prof.score[i], bp, prof.stability[i]))
    run.write_csv(args.out, ["n", "p_n", "eta_hat", "n_eta", "bprime", "stability_delta"], rows)
    if args.summary:
        run.write_json(args.summary, prof.summary())


def cmd_bosh(args, run: Run, gen) -> None:
    prof = eta_profile(gen, args.nmax, args.horizon)
    out = prof.summary()
    pw = pw_score(gen, args.nmax, args.horizon)
    out["PW"] = {"score": pw.value, "stability_delta": pw.stability_delta}
    if args.linrec_n:
        lr = lin_rec_constant(gen, args.linrec_n, args.horizon)
        out["linear_recurrence"] = {"n": args.linrec_n, "K_hat": lr.K_hat, "infinite": lr.infinite,
                                    "span": lr.span}
    run.write_json(args.out, out)


def cmd_cf(args, run: Run, gen) -> None:
    alpha = parse_real(args.alpha)
    out = {"alpha": alpha.label, "regular": cf_expand(alpha, args.depth).to_json()}
    if looks_irrational(alpha):
        out["negative"] = negative_cf(alpha, args.depth).to_json()
    run.write_json(args.out, out)


def cmd_pinner(args, run: Run, gen) -> None:
    alpha, gamma = parse_real(args.alpha), parse_real(args.gamma)
    res = pinner_for(alpha, gamma, args.depth)
    brute = brute_M(alpha, gamma, args.oracle_n)
    out = {"pinner": res.value, "brute": brute.value, "delta": abs(res.value - brute.value),
           "certificate": res.certificate, "pinner_window": list(res.window),
           "brute_window": list(brute.window), "k_argmin": res.k_argmin, "s_argmin": res.s_argmin,
           "n_argmin": brute.n_argmin, "hypotheses": res.hypotheses}
    run.write_json(args.out, out)
    if args.rows:
        Run._emit(args.rows, run._header() + res.to_csv())


def cmd_lyap(args, run: Run, gen) -> None:
    embed = _embed(args.embed)
    rows = []
    for e in [float(t) for t in args.energy.split(",")]:
        g = uniformity_gap(schrodinger_rule(e, embed), gen, [args.n], args.samples, run.manifest["seed"])[0]
        rows.append((e, g.n, g.mean, g.min, g.max, g.gap))
    run.write_csv(args.out, ["E", "n", "mean", "min", "max", "gap"], rows)


def cmd_gap(args, run: Run, gen) -> None:
    rule = schrodinger_rule(args.energy, _embed(args.embed))
    rows = uniformity_gap(rule, gen, _ints(args.n_list), args.samples, run.manifest["seed"])
    run.write_csv(args.out, ["n", "mean", "min", "max", "gap"],
                  ((r.n, r.mean, r.min, r.max, r.gap) for r in rows))


def cmd_bands(args, run: Run, gen) -> None:
    if args.approximant is not None:
        rule = SubstitutionRule.parse(args.rule or "fibonacci")
        word = tuple(int(c) for c in rule.power_image(0, args.approximant))
    elif args.word:
        word = as_word(args.word)
    else:
        raise ValueError("bands needs --word or --approximant")
    bands = trace_bands(word, _embed(args.embed), EnergyGrid(args.emin, args.emax, args.points))
    run.write_csv(args.out, ["band_lo", "band_hi"], bands.intervals)
    if args.summary:
        run.write_json(args.summary, {"period": len(word), "bands": len(bands), "measure": bands.measure})


def cmd_spectrum(args, run: Run, gen) -> None:
    eps = None if args.eps == "auto" else float(args.eps)
    grid = EnergyGrid(args.emin, args.emax, args.points)
    embed = _embed(args.embed)
    if args.gamma_out:
        scan = gamma_scan(gen, embed, grid, args.n, args.samples, run.manifest["seed"], args.threads)
        run.write_csv(args.gamma_out, ["E", "gamma_hat"], scan)
    est = spectrum_estimate(gen, embed, grid, args.n, eps, args.samples, run.manifest["seed"], args.threads)
    run.write_csv(args.out, ["band_lo", "band_hi"], est.bands.intervals)
    summary = args.summary or (str(Path(args.out).with_suffix(".json")) if args.out and args.out != "-" else None)
    if summary:
        run.write_json(summary, est.summary())


def cmd_power(args, run: Run, gen) -> None:
    rep = max_power_index(gen, args.max_len, args.horizon, args.cap)
    run.write_json(args.out, {"word": word_str(rep.word), "power": rep.power, "position": rep.position,
                              "capped": rep.capped})


COMMANDS = {
    "gen": (cmd_gen, True), "factors": (cmd_factors, True), "eta": (cmd_eta, True),
    "bosh": (cmd_bosh, True), "cf": (cmd_cf, False), "pinner": (cmd_pinner, False),
    "lyap": (cmd_lyap, True), "gap": (cmd_gap, True), "bands": (cmd_bands, False),
    "spectrum": (cmd_spectrum, True), "power": (cmd_power, True),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergokit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, gen: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if gen:
            _add_gen_flags(p)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--seed", type=int, default=None, help="sampling seed (default $ERGOKIT_SEED or 0)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--no-timestamp", action="store_true")
        return p

    p = add("gen", "write a window of the sequence")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--length", type=int, required=True)
    p = add("factors", "factor table of one length")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p = add("eta", "eta profile: least factor frequency per length")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--bprime", action="store_true")
    p.add_argument("--summary", help="also write the JSON verdict here")
    p = add("bosh", "JSON verdict for conditions (B) and (PW)")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--horizon", type=int, default=10 ** 6)
    p.add_argument("--linrec-n", type=int, default=None)
    p = add("cf", "regular and negative continued fractions", gen=False)
    p.add_argument("--alpha", required=True)
    p.add_argument("--depth", type=int, default=20)
    p = add("pinner", "M(alpha, gamma) by Pinner's formula and by brute force", gen=False)
    p.add_argument("--alpha", required=True)
    p.add_argument("--gamma", required=True)
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--oracle-n", type=int, default=10 ** 6)
    p.add_argument("--rows", help="write the per-k s1..s4 table here")
    p = add("lyap", "Lyapunov estimates for Schroedinger cocycles")
    p.add_argument("--embed", required=True)
    p.add_argument("--energy", required=True, help="comma-separated energies")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--samples", type=int, default=16)
    p = add("gap", "uniformity gap over sampled base points")
    p.add_argument("--embed", required=True)
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--samples", type=int, default=64)
    p = add("bands", "trace bands of a periodic potential", gen=False)
    p.add_argument("--word")
    p.add_argument("--approximant", type=int, help="use S^k(a) of --rule (default Fibonacci)")
    p.add_argument("--rule")
    p.add_argument("--embed", required=True)
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--points", type=int, default=10 ** 4)
    p.add_argument("--summary")
    p = add("spectrum", "set where the sampled Lyapunov exponent is below eps")
    p.add_argument("--embed", required=True)
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--n", type=int, default=10 ** 4)
    p.add_argument("--eps", default="auto")
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--summary")
    p.add_argument("--gamma-out", help="also write (E, gamma_hat) here")
    p = add("power", "largest power w^k in a window")
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--horizon", type=int, default=10 ** 5)
    p.add_argument("--cap", type=int, default=64)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = args.seed if args.seed is not None else int(os.environ.get("ERGOKIT_SEED", "0"))
    func, needs_gen = COMMANDS[args.command]
    try:
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        spec = _gen_spec(args) if needs_gen else None
        params = {k: v for k, v in sorted(vars(args).items())
                  if k not in ("command", "out", "seed", "threads", "no_timestamp", "summary", "rows",
                               "gamma_out") and not k.startswith("_")}
        run = Run(args.command, spec, params, seed, not args.no_timestamp)
        gen = gen_from_spec(spec) if needs_gen else None
        func(args, run, gen)
    except (CertificateFailure, ConstructionMismatch) as exc:
        print(f"ergokit: certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except (ValueError, KeyError, OSError) as exc:
        print(f"ergokit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

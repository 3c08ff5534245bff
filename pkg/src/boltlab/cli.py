"""Unified command-line front end.

Every invocation runs one experiment and writes exactly one JSON document
to stdout (or --out); nothing else is printed on stdout.  Exit codes:
0 success, 1 domain error (the document is {"error_kind", "detail"}),
2 usage error.  A --config file supplies defaults for any flag not given
on the command line; explicit flags win.  (seed, flags) fully determines
the report bytes.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import bounds, jsonio, lightning, money, qsim
from .attacks import (
    find_affine_collision_space,
    find_collision,
    find_nonaffine_multicollision,
)
from .errors import BoltlabError, PreconditionError
from .gf2 import BitVector, enumerate_affine
from .mqhash import HashKey, eval_digest, keygen


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _emit(doc: dict, out: Optional[str]):
    text = jsonio.dumps(doc)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return jsonio.loads(fh.read())


def _load_key(args) -> HashKey:
    if getattr(args, "key", None):
        return HashKey.from_json(_load_json(args.key))
    if args.n is None or args.m is None:
        raise PreconditionError("give --key FILE or both --n and --m")
    return keygen(args.n, args.m, _rng(args.key_seed))


def _params(args, key: HashKey) -> lightning.LightningParams:
    return lightning.LightningParams(
        n=key.n, m=key.m, k=args.k, u=args.u, label="cli"
    )


# -- subcommand bodies -----------------------------------------------------


def _cmd_hash_keygen(args):
    key = keygen(args.n, args.m, _rng(args.seed))
    _emit(key.to_json(seed=args.seed), args.out)


def _cmd_hash_eval(args):
    key = _load_key(args)
    x = BitVector.from_hex(args.x, key.m)
    y = eval_digest(key, x)
    _emit({"x": x.to_hex(), "digest": y.to_hex(), "digest_bits": y.n}, args.out)


def _cmd_attack_collide(args):
    key = _load_key(args)
    x, xp, delta, tries, hist = find_collision(key, _rng(args.seed), args.max_tries)
    _emit(
        {
            "points": [x.to_hex(), xp.to_hex()],
            "delta": delta.to_hex(),
            "digest": eval_digest(key, x).to_hex(),
            "tries": tries,
            "rank_history": list(hist),
        },
        args.out,
    )


def _cmd_attack_multicollide(args):
    key = _load_key(args)
    mc = find_nonaffine_multicollision(key, args.k, _rng(args.seed), args.max_tries)
    _emit(
        {
            "points": [p.to_hex() for p in mc.points],
            "digest": mc.digest.to_hex(),
            "tries": mc.tries,
            "rank_history": list(mc.rank_history),
            "nonaffine": True,
        },
        args.out,
    )


def _cmd_attack_affine(args):
    key = _load_key(args)
    space, digest, tries, hist = find_affine_collision_space(
        key, args.r, _rng(args.seed), args.max_tries
    )
    points = [p.to_hex() for p in enumerate_affine(space)] if space.dim <= 12 else []
    _emit(
        {
            "offset": space.offset.to_hex(),
            "basis": [BitVector(r, key.m).to_hex() for r in space.basis.rows],
            "dimension": space.dim,
            "digest": digest.to_hex(),
            "tries": tries,
            "rank_history": list(hist),
            "points": points,
        },
        args.out,
    )


def _cmd_lightning_setup(args):
    key = keygen(args.n, args.m, _rng(args.seed))
    doc = key.to_json(seed=args.seed)
    doc["params"] = {"n": args.n, "m": args.m, "k": args.k, "u": args.u}
    _emit(doc, args.out)


def _cmd_lightning_gen(args):
    key = _load_key(args)
    params = _params(args, key)
    bolt = lightning.gen_bolt(key, params, _rng(args.seed), mode=args.mode)
    _emit(lightning.bolt_to_json(bolt), args.out)


def _cmd_lightning_verify(args):
    key = _load_key(args)
    params = _params(args, key)
    bolt = lightning.bolt_from_json(_load_json(args.bolt))
    exact = None
    if bolt.mode == lightning.MODE_PRODUCT:
        exact = lightning.full_verify_acceptance(key, params, bolt, args.strategy)
    res = lightning.full_verify(key, params, bolt, _rng(args.seed), strategy=args.strategy)
    _emit(
        {
            "outcome": res.outcome,
            "accepted": res.accepted,
            "serial": res.serial.to_hex() if res.serial else None,
            "claimed_serial": bolt.serial.to_hex(),
            "serial_match": bool(res.accepted and res.serial == bolt.serial),
            "exact_acceptance_probability": exact,
        },
        args.out,
    )


def _cmd_lightning_game(args):
    key = _load_key(args)
    params = _params(args, key)
    storm = lightning.BUILTIN_STORMS.get(args.storm)
    if storm is None:
        raise PreconditionError(f"unknown storm {args.storm!r}")
    stats = lightning.uniqueness_game(
        key, params, storm, args.trials, _rng(args.seed), strategy=args.strategy
    )
    _emit(
        {
            "storm": args.storm,
            "trials": stats.trials,
            "accepts": stats.accepts,
            "witness_count": stats.witness_count,
            "empirical_rates": {
                "accept": stats.accept_rate,
                "witness_given_accept": stats.witness_rate,
            },
            "serial_counts": dict(sorted(stats.serial_counts.items())),
        },
        args.out,
    )


def _cmd_lightning_collapse(args):
    key = _load_key(args)
    doc = lightning.collapsing_advantage_exact(key)
    rng = _rng(args.seed)
    params = _params(args, key)
    runs = {"b0_ones": 0, "b1_ones": 0}
    for _ in range(args.trials):
        runs["b0_ones"] += lightning.collapsing_experiment(key, params, 0, rng)
        runs["b1_ones"] += lightning.collapsing_experiment(key, params, 1, rng)
    doc["sampled"] = {"trials": args.trials, **runs}
    _emit(doc, args.out)


def _cmd_lightning_minentropy(args):
    key = _load_key(args)
    params = _params(args, key)
    producers = {
        "honest": lightning.honest_producer,
        "constant": lightning.constant_serial_producer,
        "classical": lightning.classical_point_producer,
    }
    producer = producers.get(args.storm)
    if producer is None:
        raise PreconditionError(f"unknown producer {args.storm!r}")
    rep = lightning.minentropy_probe(key, params, producer, args.trials, _rng(args.seed))
    _emit(
        {
            "storm": args.storm,
            "trials": rep.trials,
            "accepted": rep.accepted,
            "estimate_bits": rep.estimate,
            "exact_digest_minentropy": lightning.exact_digest_minentropy(key),
            "serial_counts": dict(sorted(rep.serial_counts.items())),
        },
        args.out,
    )


def _cmd_money_gen(args):
    note = money.money_gen(args.n, _rng(args.seed))
    _emit(
        {
            "n": args.n,
            "serial": note.serial,
            "subspace": [BitVector(r, args.n).to_hex() for r in note.subspace.rows],
            "state": qsim.state_dump(note.state),
        },
        args.out,
    )


def _cmd_money_verify(args):
    doc = _load_json(args.note)
    n = int(doc["n"])
    from .gf2 import BitMatrix

    basis = BitMatrix(
        tuple(BitVector.from_hex(h, n).bits for h in doc["subspace"]), n
    )
    note = money.note_for_subspace(basis, n, _rng(args.seed))
    state = qsim.state_load(doc["state"])
    p_exact, _ = money.money_verify_analysis(state, note.oracles)
    accepted, _ = money.money_verify(state, note.oracles, _rng(args.seed))
    p_proj, _ = money.projective_verify(state, basis)
    _emit(
        {
            "n": n,
            "exact_acceptance_probability": p_exact,
            "projective_probability": p_proj,
            "sampled_accept": accepted,
        },
        args.out,
    )


def _cmd_money_counterfeit(args):
    adv = money.BUILTIN_ADVERSARIES.get(args.adversary)
    if adv is None:
        raise PreconditionError(f"unknown adversary {args.adversary!r}")
    stats = money.counterfeit_experiment(args.n, adv, args.trials, _rng(args.seed))
    exact_expected = {
        "measure-copy": 2.0 ** (-args.n),
        "fixed-guess": 2.0 ** (-args.n),
        "honest-forward": 2.0 ** (-args.n / 2),
    }[args.adversary]
    _emit(
        {
            "n": stats.n,
            "adversary": args.adversary,
            "trials": stats.trials,
            "successes": stats.successes,
            "success_rate": stats.success_rate,
            "wilson_95": list(stats.wilson_95),
            "mean_f2": stats.mean_f2,
            "exact_expected": exact_expected,
        },
        args.out,
    )


def _states_from_docs(docs) -> list:
    return [qsim.state_load(d) for d in docs]


def _cmd_bound_conversion(args):
    doc = _load_json(args.problem)
    problem = bounds.ConversionProblem.make(
        _states_from_docs(doc["family1"]),
        _states_from_docs(doc["family2"]),
        doc["prior"],
        doc.get("d"),
    )
    _emit(bounds.conversion_bound(problem).to_json(), args.out)


def _cmd_bound_cloning(args):
    doc = _load_json(args.problem)
    report = bounds.cloning_bound(
        _states_from_docs(doc["states"]), doc["prior"], args.copies
    )
    _emit(report.to_json(), args.out)


def _cmd_bound_subspace(args):
    if args.analytic:
        _emit(bounds.subspace_example_analytic(args.n, args.q), args.out)
    else:
        if args.q != 2:
            raise PreconditionError("exact enumeration requires q=2 (use --analytic)")
        _emit(bounds.subspace_example_exact(args.n), args.out)


def _cmd_randomness_prove(args):
    key = _load_key(args)
    params = _params(args, key)
    bolt = lightning.gen_bolt(key, params, _rng(args.seed))
    with open(args.proof, "w") as fh:
        fh.write(jsonio.dumps(lightning.bolt_to_json(bolt)) + "\n")
    _emit({"serial": bolt.serial.to_hex(), "proof": args.proof}, args.out)


def _cmd_randomness_verify(args):
    key = _load_key(args)
    params = _params(args, key)
    bolt = lightning.bolt_from_json(_load_json(args.proof))
    exact = lightning.full_verify_acceptance(key, params, bolt)
    res = lightning.full_verify(key, params, bolt, _rng(args.seed))
    claimed = args.serial if args.serial else bolt.serial.to_hex()
    _emit(
        {
            "accepted": res.accepted,
            "serial": res.serial.to_hex() if res.serial else None,
            "claimed_serial": claimed,
            "serial_match": bool(res.accepted and res.serial.to_hex() == claimed),
            "exact_acceptance_probability": exact,
        },
        args.out,
    )


# -- parser ------------------------------------------------------------------


def _add_key_opts(p, with_mk=True):
    p.add_argument("--key", help="key file (JSON)")
    if with_mk:
        p.add_argument("--n", type=int, help="digest bits (when no --key)")
        p.add_argument("--m", type=int, help="input bits (when no --key)")
    p.add_argument("--key-seed", type=int, default=0, help="seed for ad-hoc keygen")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--config", help="JSON file of default flag values")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boltlab")
    sub = ap.add_subparsers(dest="command", required=True)

    h = sub.add_parser("hash").add_subparsers(dest="sub", required=True)
    p = h.add_parser("keygen")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_hash_keygen)
    p = h.add_parser("eval")
    _add_key_opts(p)
    p.add_argument("--x", required=True, help="input as a hex bitstring")
    _add_common(p)
    p.set_defaults(func=_cmd_hash_eval)

    a = sub.add_parser("attack").add_subparsers(dest="sub", required=True)
    p = a.add_parser("collide")
    _add_key_opts(p)
    p.add_argument("--max-tries", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=_cmd_attack_collide)
    p = a.add_parser("multicollide")
    _add_key_opts(p)
    p.add_argument("--k", type=int, required=True, help="number of difference vectors")
    p.add_argument("--max-tries", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=_cmd_attack_multicollide)
    p = a.add_parser("affine-space")
    _add_key_opts(p)
    p.add_argument("--r", type=int, required=True, help="space dimension")
    p.add_argument("--max-tries", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=_cmd_attack_affine)

    l = sub.add_parser("lightning").add_subparsers(dest="sub", required=True)
    p = l.add_parser("setup")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--u", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=_cmd_lightning_setup)
    for name, fn in [
        ("gen", _cmd_lightning_gen),
        ("verify", _cmd_lightning_verify),
        ("game", _cmd_lightning_game),
        ("collapse", _cmd_lightning_collapse),
        ("minentropy", _cmd_lightning_minentropy),
    ]:
        p = l.add_parser(name)
        _add_key_opts(p)
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--u", type=int, default=3)
        if name == "gen":
            p.add_argument(
                "--mode",
                default=lightning.MODE_PRODUCT,
                choices=[lightning.MODE_PRODUCT, lightning.MODE_JOINT],
            )
        if name == "verify":
            p.add_argument("--bolt", required=True)
        if name in ("verify", "game"):
            p.add_argument(
                "--strategy", default="oracle", choices=["oracle", "circuit"]
            )
        if name == "game":
            p.add_argument("--storm", required=True)
            p.add_argument("--trials", type=int, default=100)
        if name == "minentropy":
            p.add_argument("--storm", default="honest")
            p.add_argument("--trials", type=int, default=100)
        if name == "collapse":
            p.add_argument("--trials", type=int, default=0)
        _add_common(p)
        p.set_defaults(func=fn)

    mny = sub.add_parser("money").add_subparsers(dest="sub", required=True)
    p = mny.add_parser("gen")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_money_gen)
    p = mny.add_parser("verify")
    p.add_argument("--note", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_money_verify)
    p = mny.add_parser("counterfeit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--adversary", default="measure-copy")
    p.add_argument("--trials", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=_cmd_money_counterfeit)

    b = sub.add_parser("bound").add_subparsers(dest="sub", required=True)
    p = b.add_parser("conversion")
    p.add_argument("--problem", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_bound_conversion)
    p = b.add_parser("cloning")
    p.add_argument("--problem", required=True)
    p.add_argument("--copies", type=int, default=2)
    _add_common(p)
    p.set_defaults(func=_cmd_bound_cloning)
    p = b.add_parser("subspace-example")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--analytic", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_bound_subspace)

    r = sub.add_parser("randomness").add_subparsers(dest="sub", required=True)
    p = r.add_parser("prove")
    _add_key_opts(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--u", type=int, default=3)
    p.add_argument("--proof", required=True, help="path for the bolt file")
    _add_common(p)
    p.set_defaults(func=_cmd_randomness_prove)
    p = r.add_parser("verify")
    _add_key_opts(p)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--u", type=int, default=3)
    p.add_argument("--proof", required=True)
    p.add_argument("--serial", help="expected serial (hex); defaults to the proof's")
    _add_common(p)
    p.set_defaults(func=_cmd_randomness_verify)

    return ap


def _apply_config(args: argparse.Namespace):
    if not getattr(args, "config", None):
        return
    cfg = _load_json(args.config)
    for k, v in cfg.items():
        attr = k.replace("-", "_")
        if getattr(args, attr, None) is None:
            setattr(args, attr, v)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        _apply_config(args)
        args.func(args)
    except BoltlabError as err:
        sys.stdout.write(jsonio.dumps(err.report()) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

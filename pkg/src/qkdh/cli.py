"""Command-line front end.

Subcommands: session, sweep, encrypt, decrypt, game. Every run is
reproducible from its seed: sweep cells use sub-seed `cell_index`, trials
inside a cell use sub-seed `trial_index` of the cell seed (SplitMix64
derivation, see `rng`). Exit codes: 0 success, 1 usage/parse error,
2 protocol abort, 3 tag rejection on decrypt, 4 enumeration budget
exceeded.

Config precedence is flag > config file > built-in default; the config
file is JSON with keys named like the long flags (lambda, sample_r,
eta0, flip_prob, intercept_prob, tag_bits, eps_pe, eps_pa, passes, mode,
trials, seed). Extended keys available only in the file: seed_len,
seed_choices, ell_override, flip_grid, intercept_grid, message_len.
The environment variable QKDH_SEED supplies the seed when neither flag
nor file does.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import games, hybrid, kem, protocol, qsim, recon
from .bits import bits_to_bytes, bits_to_hex, bytes_to_bits
from .dem import DemMode
from .games import (
    DEM_DISTINGUISHERS,
    GAME_CSV_HEADER,
    IKIND_DISTINGUISHERS,
    QHE_DISTINGUISHERS,
    SdBudgetExceeded,
)
from .kem import KemAbort
from .protocol import ParamError, SessionParams
from .rng import derive_seed, make_generator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2
EXIT_TAG = 3
EXIT_BUDGET = 4

DEFAULTS = {
    "lambda": None,  # required
    "sample_r": None,  # default: lambda // 4
    "eta0": 0.11,
    "flip_prob": 0.0,
    "intercept_prob": 0.0,
    "tag_bits": 32,
    "eps_pe": 2.0**-20,
    "eps_pa": 2.0**-20,
    "passes": 2,
    "mode": "keystream",
    "trials": 100,
    "seed": None,  # falls back to QKDH_SEED, then 0
    "seed_len": 64,
    "seed_choices": None,
    "ell_override": None,
    "flip_grid": None,
    "intercept_grid": None,
    "message_len": 64,
}


class UsageError(Exception):
    pass


def add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=int, help="number of signals")
    p.add_argument("--sample-r", dest="sample_r", type=int, help="estimation sample size")
    p.add_argument("--eta0", type=float, help="QBER abort threshold")
    p.add_argument("--flip-prob", dest="flip_prob", type=float)
    p.add_argument("--intercept-prob", dest="intercept_prob", type=float)
    p.add_argument("--tag-bits", dest="tag_bits", type=int)
    p.add_argument("--eps-pe", dest="eps_pe", type=float)
    p.add_argument("--eps-pa", dest="eps_pa", type=float)
    p.add_argument("--passes", type=int, help="reconciliation passes")
    p.add_argument("--mode", choices=["otp", "keystream"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--out", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdh")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("session", help="run one session, print its JSON outcome")
    add_param_flags(p)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over channel grids, CSV out")
    add_param_flags(p)
    p.add_argument("--flip-grid", dest="flip_grid", help="comma-separated flip probs")
    p.add_argument(
        "--intercept-grid", dest="intercept_grid", help="comma-separated intercept probs"
    )
    p.add_argument("--plot", action="store_true", help="render figures beside the CSV")

    p = sub.add_parser("encrypt", help="simulate a session and encrypt a file")
    add_param_flags(p)
    p.add_argument("--in", dest="infile", required=True, help="plaintext file")
    p.add_argument("--keyfile", required=True, help="receiver key file to write")

    p = sub.add_parser("decrypt", help="decrypt a ciphertext envelope")
    add_param_flags(p)
    p.add_argument("--in", dest="infile", required=True, help="envelope file")
    p.add_argument("--keyfile", required=True, help="receiver key file")

    p = sub.add_parser("game", help="run a security game or the exact SD oracle")
    p.add_argument("kind", choices=["ikind", "dem", "qhe", "sd"])
    add_param_flags(p)
    p.add_argument("--distinguisher", help="strategy name (default: all legitimate)")
    p.add_argument("--message-len", dest="message_len", type=int)
    p.add_argument("--plot", action="store_true", help="render figures beside the CSV")

    return parser


def merge_config(ns: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS)
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config: cannot read {ns.config}: {exc}")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"config: unknown keys {sorted(unknown)}")
        merged.update(file_cfg)

    flag_map = {
        "lam": "lambda",
        "sample_r": "sample_r",
        "eta0": "eta0",
        "flip_prob": "flip_prob",
        "intercept_prob": "intercept_prob",
        "tag_bits": "tag_bits",
        "eps_pe": "eps_pe",
        "eps_pa": "eps_pa",
        "passes": "passes",
        "mode": "mode",
        "trials": "trials",
        "seed": "seed",
        "message_len": "message_len",
    }
    for attr, key in flag_map.items():
        value = getattr(ns, attr, None)
        if value is not None:
            merged[key] = value
    for key in ("flip_grid", "intercept_grid"):
        value = getattr(ns, key, None)
        if value is not None:
            merged[key] = [float(v) for v in str(value).split(",") if v != ""]

    if merged["seed"] is None:
        env = os.environ.get("QKDH_SEED")
        merged["seed"] = int(env) if env else 0
    return merged


def params_from_config(cfg: dict) -> SessionParams:
    if cfg["lambda"] is None:
        raise ParamError("lambda", "required parameter is missing")
    lam = int(cfg["lambda"])
    sample_r = cfg["sample_r"] if cfg["sample_r"] is not None else max(1, lam // 4)
    intercept = float(cfg["intercept_prob"])
    kind = (
        qsim.AdversaryKind.PASSIVE
        if intercept == 0.0
        else qsim.AdversaryKind.INTERCEPT_RESEND
    )
    seed_choices = cfg["seed_choices"]
    params = SessionParams(
        num_signals=lam,
        sample_size=int(sample_r),
        qber_threshold=float(cfg["eta0"]),
        tag_bits=int(cfg["tag_bits"]),
        eps_pe=float(cfg["eps_pe"]),
        eps_pa=float(cfg["eps_pa"]),
        channel=qsim.ChannelModel(float(cfg["flip_prob"])),
        adversary=qsim.AdversaryStrategy(kind, intercept),
        recon=recon.ReconConfig(
            passes=int(cfg["passes"]),
            permutation_seed_len=int(cfg["seed_len"]),
            seed_choices=tuple(seed_choices) if seed_choices else None,
        ),
        seed=int(cfg["seed"]),
        key_len_override=(
            int(cfg["ell_override"]) if cfg["ell_override"] is not None else None
        ),
    )
    params.validate()
    return params


def _write_output(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    print(text, end="" if text.endswith("\n") else "\n")


def cmd_session(ns: argparse.Namespace) -> int:
    params = params_from_config(merge_config(ns))
    outcome = protocol.run_session(params)
    doc = json.dumps(outcome.to_json(), sort_keys=True, indent=2)
    _write_output(doc + "\n", ns.out)
    return EXIT_OK if outcome.completed else EXIT_ABORT


SWEEP_CSV_HEADER = (
    "flip_prob,intercept_prob,trials,abort_rate,mean_eta_hat,mean_ell,frame_success"
)


def run_sweep_cell(
    params: SessionParams, trials: int, cell_seed: int
) -> dict:
    aborts = 0
    etas: list[float] = []
    ells: list[int] = []
    frames_ok = 0
    completed = 0
    for i in range(trials):
        outcome = protocol.run_session(
            replace(params, seed=derive_seed(cell_seed, i))
        )
        if outcome.eta_hat is not None:
            etas.append(outcome.eta_hat)
        ells.append(outcome.ell)
        if outcome.completed:
            completed += 1
            if outcome.frame_corrected:
                frames_ok += 1
        else:
            aborts += 1
    return {
        "flip_prob": params.channel.flip_prob,
        "intercept_prob": params.adversary.intercept_prob,
        "trials": trials,
        "abort_rate": aborts / trials,
        "mean_eta_hat": sum(etas) / len(etas) if etas else 0.0,
        "mean_ell": sum(ells) / trials,
        "frame_success": frames_ok / completed if completed else 0.0,
    }


def cmd_sweep(ns: argparse.Namespace) -> int:
    cfg = merge_config(ns)
    base = params_from_config(cfg)
    flips = cfg["flip_grid"] if cfg["flip_grid"] is not None else [base.channel.flip_prob]
    intercepts = (
        cfg["intercept_grid"]
        if cfg["intercept_grid"] is not None
        else [base.adversary.intercept_prob]
    )
    if not flips or not intercepts:
        raise UsageError("sweep grid is empty")
    trials = int(cfg["trials"])

    rows = []
    lines = [SWEEP_CSV_HEADER]
    cell = 0
    for flip in flips:
        for intercept in intercepts:
            kind = (
                qsim.AdversaryKind.PASSIVE
                if intercept == 0.0
                else qsim.AdversaryKind.INTERCEPT_RESEND
            )
            params = replace(
                base,
                channel=qsim.ChannelModel(flip),
                adversary=qsim.AdversaryStrategy(kind, intercept),
            )
            row = run_sweep_cell(params, trials, derive_seed(base.seed, cell))
            rows.append(row)
            lines.append(
                ",".join(
                    [
                        format(row["flip_prob"], ".6g"),
                        format(row["intercept_prob"], ".6g"),
                        str(row["trials"]),
                        format(row["abort_rate"], ".8f"),
                        format(row["mean_eta_hat"], ".8f"),
                        format(row["mean_ell"], ".8f"),
                        format(row["frame_success"], ".8f"),
                    ]
                )
            )
            cell += 1
    _write_output("\n".join(lines) + "\n", ns.out)
    if ns.plot:
        if not ns.out:
            raise UsageError("--plot requires --out")
        from . import report

        report.render_sweep_figure(rows, ns.out + ".png")
    return EXIT_OK


def cmd_encrypt(ns: argparse.Namespace) -> int:
    cfg = merge_config(ns)
    params = params_from_config(cfg)
    mode = DemMode.ONE_TIME_PAD if cfg["mode"] == "otp" else DemMode.KEYSTREAM
    try:
        with open(ns.infile, "rb") as fh:
            message = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read message file: {exc}")

    try:
        g = kem.gen(params)
        ct = hybrid.qhe_enc(g.x_a, bytes_to_bits(message), g.params, mode)
    except KemAbort as exc:
        print(f"abort: {exc.reason}", file=sys.stderr)
        return EXIT_ABORT

    keyfile_doc = {
        "x_b": bits_to_hex(g.x_b),
        "n": int(g.x_b.size),
        "eta_hat": g.params.measured_qber,
        "seed": params.seed,
    }
    with open(ns.keyfile, "w") as fh:
        json.dump(keyfile_doc, fh, sort_keys=True)
    envelope = ct.serialize()
    if not ns.out:
        raise UsageError("encrypt requires --out for the envelope")
    with open(ns.out, "w") as fh:
        fh.write(envelope)
    print(f"encrypted {len(message)} bytes; ell={ct.c1.ell}")
    return EXIT_OK


def cmd_decrypt(ns: argparse.Namespace) -> int:
    cfg = merge_config(ns)
    params = params_from_config(cfg)
    try:
        with open(ns.infile) as fh:
            envelope = hybrid.HybridCiphertext.parse(fh.read())
        with open(ns.keyfile) as fh:
            keydoc = json.load(fh)
        from .bits import hex_to_bits

        x_b = hex_to_bits(keydoc["x_b"], int(keydoc["n"]))
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    message = hybrid.qhe_dec(x_b, envelope, params)
    if message is None:
        print("tag verification failed", file=sys.stderr)
        return EXIT_TAG
    if message.size % 8:
        print("parse error: message not byte-aligned", file=sys.stderr)
        return EXIT_USAGE
    data = bits_to_bytes(message)
    if not ns.out:
        raise UsageError("decrypt requires --out for the plaintext")
    with open(ns.out, "wb") as fh:
        fh.write(data)
    print(f"decrypted {len(data)} bytes")
    return EXIT_OK


def _selected(registry: dict, name: str | None) -> list:
    if name is None:
        return [d for d in registry.values() if not d.sanity]
    if name not in registry:
        raise UsageError(
            f"unknown distinguisher {name!r}; choose from {sorted(registry)}"
        )
    return [registry[name]]


def cmd_game(ns: argparse.Namespace) -> int:
    cfg = merge_config(ns)
    trials = int(cfg["trials"])

    if ns.kind == "sd":
        params = params_from_config(cfg)
        try:
            result = games.sd_oracle(params)
        except SdBudgetExceeded as exc:
            print(f"budget exceeded: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        doc = {
            "sd": result.sd,
            "states": result.states,
            "abort_fraction": result.abort_fraction,
            "ell": result.ell,
            "event_set_size": len(result.w_set),
        }
        _write_output(json.dumps(doc, sort_keys=True, indent=2) + "\n", ns.out)
        return EXIT_OK

    reports = []
    if ns.kind == "dem":
        mode = DemMode.ONE_TIME_PAD if cfg["mode"] == "otp" else DemMode.KEYSTREAM
        rng = make_generator(derive_seed(int(cfg["seed"]), 0x64656D))
        chooser = games.fixed_pair_chooser(int(cfg["message_len"]))
        for d in _selected(DEM_DISTINGUISHERS, ns.distinguisher):
            reports.append(
                games.play_dem_ind_ot(mode, d, trials, chooser, rng)
            )
    else:
        params = params_from_config(cfg)
        if ns.kind == "ikind":
            registry = IKIND_DISTINGUISHERS
            for d in _selected(registry, ns.distinguisher):
                rng = make_generator(derive_seed(params.seed, 0x696B))
                reports.append(
                    games.play_ikind_ot(
                        params, d, trials, rng, expose_x_a=d.sanity
                    )
                )
        else:
            mode = DemMode.ONE_TIME_PAD if cfg["mode"] == "otp" else DemMode.KEYSTREAM
            for d in _selected(QHE_DISTINGUISHERS, ns.distinguisher):
                rng = make_generator(derive_seed(params.seed, 0x716865))
                reports.append(
                    games.play_qhe_ind_ot(
                        params,
                        d,
                        trials,
                        rng,
                        mode=mode,
                        message_len=int(cfg["message_len"]),
                    )
                )

    lines = [GAME_CSV_HEADER] + [r.csv_row() for r in reports]
    _write_output("\n".join(lines) + "\n", ns.out)
    if ns.plot:
        if not ns.out:
            raise UsageError("--plot requires --out")
        from . import report

        report.render_game_figure(reports, ns.out + ".png")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    handlers = {
        "session": cmd_session,
        "sweep": cmd_sweep,
        "encrypt": cmd_encrypt,
        "decrypt": cmd_decrypt,
        "game": cmd_game,
    }
    try:
        return handlers[ns.command](ns)
    except (UsageError, ParamError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

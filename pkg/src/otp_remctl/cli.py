"""Command-line front end for the precharged one-time-pad control stack.

Subcommands: gen-keys (dump raw key bytes), charge (build a matched pair
of key stores), simulate (scripted session over a lossy channel),
intercept-export (same, capturing the eavesdropper corpus), randtest
(statistical checks on byte files or corpora), demo (encrypt the five
stock commands repeatedly and show that ciphertexts never repeat).

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 randtest ran
to completion but at least one check failed.  Every subcommand is
deterministic given its flags; nothing reads ambient randomness unless
``--source system`` is requested explicitly.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .channel import Channel, ChannelConfig, TamperModel, export_intercepts, \
    extract_ciphertext, load_intercepts
from .entropy import SeededSource, make_source
from .errors import OtpRemctlError
from .frame import FRAME_LEN, CipherMode, CommandRegistry, standard_registry
from .keystore import FULL_BLOCK_SIZE, SELECTIVE_BLOCK_SIZE, SksStore, charge
from .protocol import Controlee, Controller, run_session
from . import randtest as rt

REGISTRY_ENV = "OTP_REMCTL_REGISTRY"

_TEST_TOKENS = ("freq", "runs", "balance", "runlen", "autocorr")


class _UsageError(Exception):
    """Bad flag grammar; rendered with usage text and mapped to exit 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract here wants 1,
    # so errors are raised and handled in run().
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _source_arg(text):
    try:
        return make_source(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _probability(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _tests_arg(text):
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if not tokens:
        raise argparse.ArgumentTypeError("no tests named")
    for t in tokens:
        if t not in _TEST_TOKENS:
            raise argparse.ArgumentTypeError(
                f"unknown test {t!r}; choose from {', '.join(_TEST_TOKENS)}")
    return tokens


def resolve_registry(path=None) -> CommandRegistry:
    """--registry beats the OTP_REMCTL_REGISTRY env var beats the built-ins."""
    if path is None:
        path = os.environ.get(REGISTRY_ENV) or None
    if path is None:
        return standard_registry()
    return CommandRegistry.load(path)


def _read_script(path, registry: CommandRegistry):
    """Command frames for a script file: one name per line, # comments ok."""
    frames = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        name = raw.strip()
        if not name or name.startswith("#"):
            continue
        try:
            frames.append(registry.lookup(name))
        except KeyError:
            raise ValueError(
                f"{path}:{lineno}: unknown command {name!r}; "
                f"registry has {', '.join(registry.names())}") from None
    return frames


def _mode_block_size(mode: str) -> int:
    return FULL_BLOCK_SIZE if mode == "full" else SELECTIVE_BLOCK_SIZE


def _cmd_gen_keys(args) -> int:
    args.source.dump(args.bytes, args.out)
    print(f"wrote {args.bytes} bytes ({args.source.kind}) to {args.out}")
    return 0


def _cmd_charge(args) -> int:
    block_size = _mode_block_size(args.mode)
    tx_store, rx_store = charge(args.source, block_size, args.blocks)
    tx_store.save(args.controller)
    rx_store.save(args.controlee)
    print(f"charged {args.blocks} blocks of {block_size} bytes "
          f"into {args.controller} and {args.controlee}")
    return 0


def _build_session(args):
    """Stores, state machines and channel shared by simulate and export."""
    controller = Controller(SksStore.load(args.controller))
    registry = resolve_registry(args.registry)
    controlee = Controlee(SksStore.load(args.controlee), registry=registry)
    script = _read_script(args.script, registry)
    model = (TamperModel.FLIP_ONE_RANDOM_BYTE if args.tamper_model == "flip"
             else TamperModel.RANDOMIZE_PAYLOAD)
    channel = Channel(ChannelConfig(loss_prob=args.loss, tamper_prob=args.tamper,
                                    tamper_model=model, rng_seed=args.seed))
    return controller, controlee, script, channel


def _session_summary(log, controller, controlee) -> str:
    lines = [
        f"frames sent      : {controller.frames_sent}",
        f"dropped          : {len(log.events('dropped'))}",
        f"tampered         : {len(log.events('tampered'))}",
        f"accepted         : {controlee.accepted}",
        f"discarded        : {controlee.discarded}",
        f"keys consumed    : controller {controller.store.consumed_count}, "
        f"controlee {controlee.store.consumed_count}",
    ]
    return "\n".join(lines)


def _cmd_simulate(args) -> int:
    controller, controlee, script, channel = _build_session(args)
    log = run_session(controller, controlee, script, channel)
    if args.log:
        log.save(args.log)
    print(_session_summary(log, controller, controlee))
    if args.log:
        print(f"session log      : {args.log}")
    return 0


def _cmd_intercept_export(args) -> int:
    controller, controlee, script, channel = _build_session(args)
    log = run_session(controller, controlee, script, channel)
    export_intercepts(channel.intercepts, args.out)
    if args.log:
        log.save(args.log)
    print(_session_summary(log, controller, controlee))
    print(f"intercepts       : {len(channel.intercepts)} frames "
          f"to {args.out} (+ .idx)")
    return 0


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _write_rows(path, rows) -> None:
    lines = ["test,n,statistic,p_value,alpha,pass"]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _rows_json(rows) -> str:
    keys = ("test", "n", "statistic", "p_value", "alpha", "pass")
    return json.dumps([dict(zip(keys, row)) for row in rows], indent=2) + "\n"


def _load_test_bytes(args) -> bytes:
    data = Path(args.input).read_bytes()
    if args.format == "raw":
        return data
    # A corpus is 36-byte wire frames; strip the clear fields so only
    # ciphered bytes are tested.
    mode = CipherMode.FULL if args.format == "corpus-full" else CipherMode.SELECTIVE
    return extract_ciphertext(load_intercepts(args.input), mode)


def _cmd_randtest(args) -> int:
    data = _load_test_bytes(args)
    if not data:
        raise ValueError(f"{args.input}: no bytes to test")
    bits = rt.BitSequence.from_bytes(data)
    rows = []
    failures = 0

    def record(row, line, ok):
        nonlocal failures
        rows.append(row)
        print(f"{line} {'pass' if ok else 'FAIL'}")
        if not ok:
            failures += 1

    split = args.split_bits
    if split:
        m = bits.n // split
        if m < 1:
            raise ValueError(
                f"--split-bits {split} exceeds the {bits.n} input bits")
        seqs = [rt.BitSequence(bits.bits[i * split:(i + 1) * split])
                for i in range(m)]
    for token in args.tests:
        if token == "freq":
            if split:
                results = [rt.monobit_frequency(s, args.alpha) for s in seqs]
                rows.extend((r.test_name, r.n, r.statistic, r.p_value,
                             r.alpha, r.passed) for r in results)
                prop = rt.pass_proportion(results)
                record(("frequency_proportion", prop.m, prop.proportion,
                        None, prop.alpha, prop.ok),
                       f"frequency : {prop.passed}/{prop.m} sequences passed "
                       f"(proportion {prop.proportion:.4f}, "
                       f"acceptance >= {prop.lower:.4f})", prop.ok)
            else:
                r = rt.monobit_frequency(bits, args.alpha)
                record((r.test_name, r.n, r.statistic, r.p_value, r.alpha,
                        r.passed),
                       f"frequency : n={r.n} statistic={r.statistic:.4f} "
                       f"p={r.p_value:.4f}", r.passed)
        elif token == "runs":
            if split:
                results = [rt.nist_runs(s, args.alpha) for s in seqs]
                rows.extend((r.test_name, r.n, r.statistic, r.p_value,
                             r.alpha, r.passed) for r in results)
                prop = rt.pass_proportion(results)
                record(("runs_proportion", prop.m, prop.proportion,
                        None, prop.alpha, prop.ok),
                       f"runs      : {prop.passed}/{prop.m} sequences passed "
                       f"(proportion {prop.proportion:.4f}, "
                       f"acceptance >= {prop.lower:.4f})", prop.ok)
            else:
                r = rt.nist_runs(bits, args.alpha)
                note = f" ({r.note})" if r.note else ""
                record((r.test_name, r.n, r.statistic, r.p_value, r.alpha,
                        r.passed),
                       f"runs      : n={r.n} V={r.statistic:.0f} "
                       f"p={r.p_value:.4f}{note}", r.passed)
        elif token == "balance":
            b = rt.golomb_balance(bits)
            # 4 sigma of a fair-coin proportion: sigma = 1/(2 sqrt(n)).
            limit = 2.0 / math.sqrt(b.n)
            ok = b.deviation <= limit
            record(("balance", b.n, b.deviation, None, None, ok),
                   f"balance   : n={b.n} deviation={b.deviation:.6f} "
                   f"(limit {limit:.6f})", ok)
        elif token == "runlen":
            rl = rt.golomb_run_lengths(bits)
            record(("run_lengths", bits.n, rl.worst_excess, None, None,
                    rl.geometric_ok),
                   f"run-length: runs={rl.total_runs} "
                   f"checked 1..{rl.max_checked} "
                   f"worst-excess={rl.worst_excess:.3f}", rl.geometric_ok)
        else:
            max_lag = min(args.max_lag, bits.n - 1)
            series = rt.autocorrelation(bits, max_lag)
            fraction = series.fraction_within_bound(4.0)
            ok = series.c(0) == 1.0 and fraction >= 0.99
            record(("autocorrelation", bits.n, fraction, None, None, ok),
                   f"autocorr  : n={bits.n} lags=1..{max_lag} "
                   f"within-bound={100 * fraction:.2f}% c0={series.c(0):g}",
                   ok)
            if args.autocorr_out:
                Path(args.autocorr_out).write_text(rt.autocorr_csv(series))
    if args.report:
        _write_rows(args.report, rows)
    if args.json:
        Path(args.json).write_text(_rows_json(rows))
    print(f"{failures} of {len(args.tests)} checks failed" if failures
          else f"all {len(args.tests)} checks passed")
    return 3 if failures else 0


def demo_end_to_end(seed: int = 7, out=None, stream=None) -> int:
    """Encrypt the five stock commands five times each with fresh blocks.

    Prints plaintext rows (identical across repetitions) and ciphertext
    rows (no visible structure), and optionally writes a CSV of both for
    plotting byte-value traces.
    """
    stream = stream if stream is not None else sys.stdout
    registry = standard_registry()
    reps = 5
    names = registry.names()
    tx_store, _ = charge(SeededSource(seed), FULL_BLOCK_SIZE, len(names) * reps)
    controller = Controller(tx_store)
    rows = []
    for name in names:
        frame = registry.lookup(name)
        print(f"== {name} ==", file=stream)
        print(f"plain      : {frame.data.hex()}", file=stream)
        for rep in range(reps):
            wire = controller.send(frame)
            rows.append((name, rep, wire.address.index, frame.data, wire.payload))
            print(f"cipher[{wire.address.index:3d}]: {wire.payload.hex()}",
                  file=stream)
    addresses = [r[2] for r in rows]
    ciphers = np.frombuffer(b"".join(r[4] for r in rows),
                            dtype=np.uint8).reshape(len(rows), FRAME_LEN)
    matches = total = 0
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            matches += int(np.count_nonzero(ciphers[i] == ciphers[j]))
            total += FRAME_LEN
    print(f"addresses consumed in order: {addresses[0]}..{addresses[-1]}",
          file=stream)
    print(f"pairwise ciphertext byte-agreement rate: {matches / total:.4f} "
          f"(uniform expectation {1 / 256:.4f})", file=stream)
    if out:
        header = "name,rep,address,kind," + ",".join(f"b{i}" for i in range(FRAME_LEN))
        lines = [header]
        for name, rep, addr, plain, cipher in rows:
            lines.append(f"{name},{rep},{addr},plain," + ",".join(map(str, plain)))
            lines.append(f"{name},{rep},{addr},cipher," + ",".join(map(str, cipher)))
        Path(out).write_text("\n".join(lines) + "\n")
        print(f"csv: {out}", file=stream)
    return 0


def _cmd_demo(args) -> int:
    return demo_end_to_end(seed=args.seed, out=args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="otp-remctl",
                     description="Precharged one-time-pad remote-control toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-keys", help="dump raw key bytes from an entropy source")
    p.add_argument("--source", required=True, type=_source_arg,
                   help="system | seeded:<u64> | file:<path>")
    p.add_argument("--bytes", required=True, type=_nonneg_int,
                   help="number of bytes to write")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=_cmd_gen_keys)

    p = sub.add_parser("charge", help="precharge a matched pair of key stores")
    p.add_argument("--source", required=True, type=_source_arg,
                   help="system | seeded:<u64> | file:<path>")
    p.add_argument("--blocks", required=True, type=_positive_int,
                   help="number of key blocks")
    p.add_argument("--mode", choices=("full", "selective"), default="full",
                   help="full: 32-byte blocks; selective: 23-byte blocks")
    p.add_argument("--controller", required=True, help="controller store file")
    p.add_argument("--controlee", required=True, help="controlee store file")
    p.set_defaults(func=_cmd_charge)

    def session_flags(p):
        p.add_argument("--controller", required=True, help="controller store file")
        p.add_argument("--controlee", required=True, help="controlee store file")
        p.add_argument("--script", required=True,
                       help="command script, one name per line")
        p.add_argument("--loss", type=_probability, default=0.0,
                       help="frame loss probability")
        p.add_argument("--tamper", type=_probability, default=0.0,
                       help="in-flight corruption probability")
        p.add_argument("--tamper-model", choices=("flip", "randomize"),
                       default="flip", help="corruption model")
        p.add_argument("--seed", type=int, default=0, help="channel seed")
        p.add_argument("--registry", default=None,
                       help=f"command registry file (default: ${REGISTRY_ENV} "
                            "or the built-in five commands)")

    p = sub.add_parser("simulate", help="run a scripted session over a lossy channel")
    session_flags(p)
    p.add_argument("--log", default=None, help="write the session log here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("intercept-export",
                       help="run a session and export the eavesdropped corpus")
    session_flags(p)
    p.add_argument("--out", required=True, help="corpus file (sidecar: <out>.idx)")
    p.add_argument("--log", default=None, help="write the session log here")
    p.set_defaults(func=_cmd_intercept_export)

    p = sub.add_parser("randtest", help="statistical randomness checks on a byte file")
    p.add_argument("--input", required=True, help="input file")
    p.add_argument("--format", choices=("raw", "corpus-full", "corpus-selective"),
                   default="raw",
                   help="raw bytes, or an intercept corpus stripped to its "
                        "ciphered bytes")
    p.add_argument("--tests", type=_tests_arg, default=list(_TEST_TOKENS),
                   help=f"comma-separated subset of {','.join(_TEST_TOKENS)}")
    p.add_argument("--alpha", type=_probability, default=rt.DEFAULT_ALPHA,
                   help="significance level for P-value tests")
    p.add_argument("--split-bits", type=_positive_int, default=None,
                   help="split the input into sequences of this many bits and "
                        "report the pass proportion for freq/runs")
    p.add_argument("--max-lag", type=_positive_int, default=1000,
                   help="largest autocorrelation lag")
    p.add_argument("--report", default=None, help="write a CSV report here")
    p.add_argument("--json", default=None, help="write a JSON report here")
    p.add_argument("--autocorr-out", default=None,
                   help="write the tau,c series here")
    p.set_defaults(func=_cmd_randtest)

    p = sub.add_parser("demo", help="five commands, five encryptions each")
    p.add_argument("--seed", type=_nonneg_int, default=7, help="key-material seed")
    p.add_argument("--out", default=None, help="write plot-ready CSV here")
    p.set_defaults(func=_cmd_demo)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (OtpRemctlError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

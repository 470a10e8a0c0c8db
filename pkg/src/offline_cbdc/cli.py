"""Command line: run the bank service, scenarios and benchmarks, inspect files, generate keys."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__, proofs
from .bank import BankConfig, BankService, read_ledger_file
from .bench import run_bench
from .crypto.commit import solve_identity
from .crypto.encoding import DecodeError
from .proofs import MissingKeys, RelationId
from .proofs.snark import SnarkBackend, default_key_dir
from .sim import ScenarioError, load_scenario
from .sim.runner import Runner
from .transport import BankServer, ChannelModel
from .wallet import decode_wallet, save_wallet
from .wallet.storage import MAGIC as WALLET_MAGIC

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _short(x: int | None) -> str:
    return "-" if x is None else f"{x:064x}"[:16]


def make_backend(args, generate: bool = False) -> proofs.Backend:
    if args.backend == "mock":
        return proofs.make_backend("mock", seed=args.seed)
    key_dir = Path(args.key_dir) if args.key_dir else default_key_dir()
    return SnarkBackend(key_dir=key_dir, seed=None, generate=generate)


def _require_keys(backend) -> None:
    if isinstance(backend, SnarkBackend):
        try:
            for rid in RelationId:
                backend.verifying_key(rid)
                backend.proving_key(rid)
        except MissingKeys as exc:
            raise CliError(f"{exc}", EXIT_CONFIG) from None


def _print_config(args) -> dict:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}
    print("config: " + json.dumps(config, sort_keys=True))
    return config


# -- serve ----------------------------------------------------------------------


def cmd_serve(args) -> int:
    _print_config(args)
    backend = make_backend(args)
    _require_keys(backend)
    clock = (lambda: args.fixed_time) if args.fixed_time is not None else time.time
    config = BankConfig(args.epoch_seconds, args.delta_sync, args.max_holding_limit)
    try:
        bank = BankService(backend, config, args.ledger_path, clock=clock, seed=args.seed, fsync=args.fsync)
    except DecodeError as exc:
        raise CliError(f"ledger is corrupt: {exc}", EXIT_IO) from None
    except OSError as exc:
        raise CliError(f"cannot open ledger: {exc}", EXIT_IO) from None
    server = BankServer(bank, (args.host, args.port))
    print(f"bank public key: {bank.public_key.to_bytes().hex()}")
    print(f"listening on {args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        bank.close()
    return EXIT_OK


# -- scenario ---------------------------------------------------------------------


def cmd_scenario(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        raise CliError(f"invalid scenario: {exc}", EXIT_CONFIG) from None
    except OSError as exc:
        raise CliError(f"cannot read scenario: {exc}", EXIT_IO) from None
    if args.seed is not None:
        scenario.seed = args.seed
    if args.epoch_seconds is not None:
        scenario.epoch_seconds = args.epoch_seconds
    if args.delta_sync is not None:
        scenario.delta_sync = args.delta_sync
    args.seed = scenario.seed
    _print_config(args)
    backend = make_backend(args)
    _require_keys(backend)
    runner = Runner(
        scenario, backend, proximity=ChannelModel.proximity(bitrate=args.bitrate),
        online=ChannelModel.online(bitrate=args.online_bitrate), ledger_path=args.ledger_path,
    )
    result = runner.run()
    runner.bank.close()
    summary = result.metrics.summary(scenario.epoch_seconds)
    print(summary)
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "scenario.json").write_text(json.dumps(scenario.to_dict(), indent=2, sort_keys=True))
            with open(out / "trace.jsonl", "w") as fh:
                for rec in result.trace:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            (out / "metrics.json").write_text(json.dumps(result.metrics.to_dict(timings=True), indent=2, sort_keys=True))
            (out / "summary.txt").write_text(summary + "\n")
            wallets = out / "wallets"
            wallets.mkdir(exist_ok=True)
            for name, w in runner.wallets.items():
                save_wallet(w, wallets / f"{name}.wallet")
        except OSError as exc:
            raise CliError(f"cannot write results: {exc}", EXIT_IO) from None
        print(f"results written to {out}")
    if not all(result.metrics.properties.values()):
        return EXIT_VERIFY
    return EXIT_OK


# -- bench ------------------------------------------------------------------------


def cmd_bench(args) -> int:
    _print_config(args)
    backend = make_backend(args)
    _require_keys(backend)
    sizes = tuple(int(x) for x in args.sizes.split(",") if x.strip()) if args.sizes else ()
    report = run_bench(
        backend, payments=args.payments, bank_rounds=args.rounds, sizes=sizes,
        circuit_samples=args.circuits, seed=args.seed or 0,
    )
    print(report.render())
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "bench.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
            (out / "bench.txt").write_text(report.render() + "\n")
        except OSError as exc:
            raise CliError(f"cannot write results: {exc}", EXIT_IO) from None
    return EXIT_OK


# -- inspect ----------------------------------------------------------------------


def inspect_ledger(path: Path) -> list[str]:
    entries = read_ledger_file(path)
    by_sn: dict[int, list[int]] = {}
    for i, e in enumerate(entries):
        if e.sn is not None:
            by_sn.setdefault(e.sn, []).append(i)
    clashing = {sn for sn, idx in by_sn.items() if len(idx) > 1}
    lines = [f"ledger {path}: {len(entries)} entries, {sum(e.sig is not None for e in entries)} signed"]
    lines.append("  #  scm               sn                signed")
    for i, e in enumerate(entries):
        mark = "  <-- serial number collision" if e.sn in clashing else ""
        lines.append(f"{i:>3}  {_short(e.scm)}  {_short(e.sn)}  {'yes' if e.sig else 'no ':<6}{mark}")
    for sn in sorted(clashing):
        group = [entries[i] for i in by_sn[sn]]
        ident = solve_identity(group[0].scm, group[0].ds, group[1].scm, group[1].ds)
        lines.append(f"double spend: serial {_short(sn)} used {len(group)} times, identity {_short(ident)}")
    return lines


def inspect_wallet(path: Path, reveal: bool) -> list[str]:
    f = decode_wallet(path.read_bytes(), secrets=reveal)
    unsigned = [scm for scm in f.chain if f.external.get(scm) is None or f.external[scm].sig is None]
    lines = [
        f"wallet {path}: {f.name or '(unnamed)'}",
        f"bank key: {f.bank_key.to_bytes().hex()[:32]}...",
        f"sync window: {f.delta_sync} epochs",
        f"chain length: {len(f.chain)} ({len(unsigned)} unsigned)",
        f"external history: {len(f.external)} entries",
    ]
    for scm in f.chain:
        entry = f.external.get(scm)
        kind = entry.kind.name.lower() if entry else "?"
        signed = "signed" if entry is not None and entry.sig is not None else "unsigned"
        line = f"  {_short(scm)}  {kind:<10} {signed}"
        if reveal and scm in f.internal:
            s = f.internal[scm].state
            line += f"  bal={s.bal} ctr={s.ctr} epoch={s.epoch} limit={s.holding_limit}"
        lines.append(line)
    if reveal and f.head in f.internal:
        s = f.internal[f.head].state
        lines.append(f"balance: {s.bal} of {s.holding_limit}; secret key {s.sk:064x}")
    elif not reveal:
        lines.append("secrets redacted (use --reveal to show balances and keys)")
    return lines


def cmd_inspect(args) -> int:
    path = Path(args.path)
    try:
        head = path.read_bytes()[: len(WALLET_MAGIC)]
        lines = inspect_wallet(path, args.reveal) if head == WALLET_MAGIC else inspect_ledger(path)
    except DecodeError as exc:
        raise CliError(f"{path} is corrupt: {exc}", EXIT_IO) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    print("\n".join(lines))
    return EXIT_OK


# -- keygen -----------------------------------------------------------------------


def cmd_keygen(args) -> int:
    _print_config(args)
    key_dir = Path(args.key_dir) if args.key_dir else default_key_dir()
    names = [n.strip().upper() for n in args.relations.split(",")] if args.relations else [r.name for r in RelationId]
    try:
        relations = [RelationId[n] for n in names]
    except KeyError as exc:
        raise CliError(f"unknown relation {exc}", EXIT_CONFIG) from None
    backend = SnarkBackend(key_dir=key_dir, seed=args.seed)
    for rid in relations:
        start = time.perf_counter()
        try:
            backend.keygen([rid])
        except OSError as exc:
            raise CliError(f"cannot write keys: {exc}", EXIT_IO) from None
        print(f"{rid.name:<15} keys written in {time.perf_counter() - start:.1f} s")
    print(f"key directory: {key_dir}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offline-cbdc", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=None):
        sp.add_argument("--backend", choices=("mock", "snark"), default="mock", help="proof backend")
        sp.add_argument("--seed", type=int, default=seed_default, help="seed for reproducible runs")
        sp.add_argument("--key-dir", help="directory of Groth16 keys (snark backend)")

    sp = sub.add_parser("serve", help="run the central bank service over TCP")
    common(sp)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=7421)
    sp.add_argument("--ledger-path", help="append-only ledger file (its siblings hold registry and audit logs)")
    sp.add_argument("--epoch-seconds", type=float, default=86400)
    sp.add_argument("--delta-sync", type=int, default=30, help="epochs a wallet may stay unsynchronized")
    sp.add_argument("--max-holding-limit", type=int, default=3000)
    sp.add_argument("--fixed-time", type=float, help="freeze the bank clock at this many seconds (reproducible runs)")
    sp.add_argument("--fsync", action="store_true", help="fsync every ledger record")
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("scenario", help="run a scripted scenario")
    common(sp)
    sp.add_argument("--scenario", required=True, help="scenario file, or a bundled name: triple_spend, offline_week, ...")
    sp.add_argument("--out", help="directory for trace, metrics, summary and wallet files")
    sp.add_argument("--ledger-path", help="persist the bank ledger to this file")
    sp.add_argument("--epoch-seconds", type=float, help="override the scenario's epoch length")
    sp.add_argument("--delta-sync", type=int, help="override the scenario's synchronization window")
    sp.add_argument("--bitrate", type=float, default=420_000, help="proximity channel bits per second")
    sp.add_argument("--online-bitrate", type=float, default=50_000_000, help="online channel bits per second")
    sp.set_defaults(func=cmd_scenario)

    sp = sub.add_parser("bench", help="measure bank operations, throughput, payment sizes and proofs")
    common(sp, seed_default=0)
    sp.add_argument("--payments", type=int, default=1000, help="sequential payments for the throughput run")
    sp.add_argument("--rounds", type=int, default=10, help="samples per bank operation")
    sp.add_argument("--sizes", default="1,51,101", help="unsigned history sizes to measure (comma separated)")
    sp.add_argument("--circuits", type=int, default=1, help="prove/verify samples per relation (0 skips)")
    sp.add_argument("--out", help="directory for bench.json and bench.txt")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("inspect", help="dump a ledger or wallet file")
    sp.add_argument("path")
    sp.add_argument("--reveal", action="store_true", help="show wallet balances and secret keys")
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("keygen", help="generate Groth16 keys for the snark backend")
    sp.add_argument("--key-dir", help=f"output directory (default {default_key_dir()})")
    sp.add_argument("--relations", help="comma separated relation names (default: all)")
    sp.add_argument("--seed", type=int, help="deterministic setup (testing only: the toxic waste is reproducible)")
    sp.set_defaults(func=cmd_keygen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

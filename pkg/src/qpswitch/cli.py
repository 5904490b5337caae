"""Command-line entry point.

Subcommands:
    frame encode|decode   build or parse a quantum frame header
    qkd-sweep             key rate against length and switch count (CSV)
    mc-k                  Monte-Carlo estimate of the routing factor K
    entdist               entanglement-distribution sweeps (CSV)

Exit status is 0 on success, 2 for usage or parse errors and 1 for anything
unexpected.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import sys
from collections.abc import Sequence

from . import entdist, frame, qkd
from .config import FIELD_TYPES, ConfigError, RunConfig, build_config, parse_grid, parse_int_grid

QKD_HEADER = ["L_km", "n", "Q", "e", "K", "R"]
ENT_HEADER = ["scenario", "total_length_km", "hops", "T1_ns", "T2_ns", "proc_ns", "pair_index", "fidelity"]
SWEEPS = ("length-hops", "t1t2-length", "proc-t1", "compare")


class UsageError(Exception):
    pass


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file with run settings")
    group = parser.add_argument_group("run settings (override the config file)")
    for name, kind in FIELD_TYPES.items():
        default = getattr(RunConfig, name)
        group.add_argument(_flag(name), dest=name, type=kind, default=None, help=f"default {default}")


def _config_from(args: argparse.Namespace) -> RunConfig:
    overrides = {name: getattr(args, name) for name in FIELD_TYPES}
    return build_config(args.config, overrides)


def _int(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpswitch", description="Packet-switched quantum network models.")
    sub = parser.add_subparsers(dest="command", required=True)

    fr = sub.add_parser("frame", help="encode or decode a frame header")
    fsub = fr.add_subparsers(dest="action", required=True)
    enc = fsub.add_parser("encode", help="print the frame as hex")
    enc.add_argument("--dest", required=True, help="destination MAC, e.g. 01:80:c2:00:00:0e")
    enc.add_argument("--src", required=True, help="source MAC")
    enc.add_argument("--role", choices=["header", "trailer"], default="header")
    enc.add_argument("--payload-len", type=_int, default=10)
    enc.add_argument("--encoding", type=_int, default=frame.ENCODING_EPR_HALF)
    enc.add_argument("--period", type=_int, default=5000, help="emission period in ns")
    enc.add_argument("--mux", type=_int, default=frame.MUX_TDM)
    enc.add_argument("--guard", type=_int, default=0, help="guard time in ns")
    enc.add_argument("--elapsed", type=_int, default=0, help="elapsed memory time in ns")
    enc.add_argument("--cutoff", type=_int, default=0, help="max cut-off time in ns, 0 = none")
    enc.add_argument("--qec", type=_int, default=0)
    enc.add_argument("--ttl", type=_int, default=120)
    dec = fsub.add_parser("decode", help="print the fields of a hex frame")
    dec.add_argument("hex", help="frame bytes as hex (spaces and colons allowed)")

    qs = sub.add_parser("qkd-sweep", help="secret key rate table as CSV")
    _add_config_flags(qs)

    mc = sub.add_parser("mc-k", help="Monte-Carlo estimate of K")
    mc.add_argument("--n", type=int, required=True, help="number of switches")
    _add_config_flags(mc)

    ed = sub.add_parser("entdist", help="entanglement distribution sweeps as CSV")
    ed.add_argument("--sweep", choices=SWEEPS, required=True)
    ed.add_argument("--scenario", choices=["central", "sender"], default="central")
    ed.add_argument("--noise", choices=["on", "off"], default="on", help="off sets p_l=0 and T1=T2=inf")
    _add_config_flags(ed)
    return parser


def _fmt(value) -> str:
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[_fmt(v) for v in row] for row in rows])
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def cmd_frame(args: argparse.Namespace) -> int:
    if args.action == "decode":
        text = "".join(ch for ch in args.hex if ch not in " :\n\t")
        try:
            data = bytes.fromhex(text)
        except ValueError:
            raise UsageError("input is not valid hex") from None
        header = frame.decode(data)
        print(f"dest={frame.format_mac(header.dest_addr)}")
        print(f"src={frame.format_mac(header.src_addr)}")
        print(f"role={header.role.name.lower()}")
        if header.qdu is not None:
            q = header.qdu
            print(f"payload_len={q.payload_len}")
            print(f"encoding={q.encoding_scheme}")
            print(f"period={q.emission_period}")
            print(f"mux={q.multiplexing}")
            print(f"guard={header.guard_time}")
            print(f"elapsed={header.elapsed_memory_time}")
            print(f"cutoff={header.max_cutoff_time}")
            print(f"qec={header.qec_protocol}")
            print(f"ttl={header.ttl}")
        for tlv in header.extra_tlvs:
            print(f"tlv={tlv.tlv_type}:{tlv.value.hex()}")
        return 0

    try:
        dest, src = frame.parse_mac(args.dest), frame.parse_mac(args.src)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.role == "trailer":
        header = frame.FrameHeader(dest_addr=dest, src_addr=src, role=frame.Role.TRAILER)
    else:
        header = frame.FrameHeader(
            dest_addr=dest,
            src_addr=src,
            qdu=frame.QduDescriptor(args.payload_len, args.encoding, args.period, args.mux),
            guard_time=args.guard,
            elapsed_memory_time=args.elapsed,
            max_cutoff_time=args.cutoff,
            qec_protocol=args.qec,
            ttl=args.ttl,
        )
    print(frame.encode(header).hex())
    return 0


def cmd_qkd_sweep(cfg: RunConfig) -> int:
    rows = qkd.qkd_sweep(parse_grid(cfg.qkd_lengths), parse_int_grid(cfg.qkd_switches), cfg.qkd_params())
    _write_csv(cfg.out, QKD_HEADER, [[r.L_km, r.n, r.Q, r.e_Z, r.K, r.R] for r in rows])
    return 0


def cmd_mc_k(cfg: RunConfig, n: int) -> int:
    if n < 0 or cfg.trials < 1:
        raise UsageError("need --n >= 0 and --trials >= 1")
    estimate = qkd.monte_carlo_k(cfg.P, n, cfg.tq_over_tp, cfg.trials, cfg.seed)
    exact = qkd.k_factor(cfg.P, n, cfg.tq_over_tp)
    text = f"K_hat={estimate!r}\nK={exact!r}\ntrials={cfg.trials}\nseed={cfg.seed}\n"
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    return 0


def cmd_entdist(cfg: RunConfig, sweep: str, scenario: str, noise: str) -> int:
    params = cfg.ent_params()
    if noise == "off":
        params = dataclasses.replace(params, p_l=0.0, T1=math.inf, T2=math.inf)
    lengths = parse_grid(cfg.lengths)
    hops = parse_int_grid(cfg.hops)
    if sweep == "length-hops":
        rows = entdist.sweep_length_hops(params, lengths, hops, scenario)
    elif sweep == "t1t2-length":
        t_grid = [math.inf] if noise == "off" else parse_grid(cfg.t_grid)
        rows = [r for h in hops for r in entdist.sweep_t1t2_length(params, t_grid, lengths, h)]
    elif sweep == "proc-t1":
        t_grid = [math.inf] if noise == "off" else parse_grid(cfg.t_grid)
        rows = [r for h in hops for r in entdist.sweep_proc_t1(params, parse_int_grid(cfg.proc_grid), t_grid, h)]
    else:
        rows = []
        for h in hops:
            result = entdist.compare_scenarios(params, lengths, h)
            rows.extend(result.rows)
            print(
                f"hops={h} crossing central={_fmt(result.central_crossing)} sender={_fmt(result.sender_crossing)}",
                file=sys.stderr,
            )
    _write_csv(cfg.out, ENT_HEADER, [list(dataclasses.astuple(r)) for r in rows])
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "frame":
            return cmd_frame(args)
        cfg = _config_from(args)
        if args.command == "qkd-sweep":
            return cmd_qkd_sweep(cfg)
        if args.command == "mc-k":
            return cmd_mc_k(cfg, args.n)
        return cmd_entdist(cfg, args.sweep, args.scenario, args.noise)
    except (UsageError, ConfigError, frame.FrameError) as exc:
        print(f"qpswitch: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and signal internal failure
        print(f"qpswitch: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands:

* ``run --config F --out D [--resolution desk|paper] [--threads N]``
  runs a scenario (a config file, or ``preset:NAME``) and writes NLCD
  snapshots, a report CSV and a machine-readable check summary; exit code 0
  exactly when all configured checks pass.
* ``oracle --config F --iterations K [--out D] [--samples S]``
  cross-validates a small scenario with the characteristics-based
  fixed-point reference and dumps the reference field.
* ``encrypt --key K --in F --out G`` / ``decrypt --key K --in F --out G``
  forward / backward transport of an NLCD payload under a key file.
* ``report --orig A --dec B --cipher C [--out CSV]``
  recovery metrics of a decrypt(encrypt(.)) roundtrip.

``--version`` prints the package and file-format versions.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import CONFIG_FORMAT_VERSION
from .crypt import CryptKey, decrypt, encrypt, roundtrip_report
from .characteristics import picard_solve
from .kernels import set_fft_workers
from .nlcd import FORMAT_VERSION as NLCD_VERSION, read_nlcd, write_nlcd
from .scenarios import parse_scenario, preset_names, preset_text, run

PRESET_PREFIX = "preset:"


def _load_scenario(config: str, resolution: str):
    if config.startswith(PRESET_PREFIX):
        text = preset_text(config[len(PRESET_PREFIX):], resolution)
    else:
        text = Path(config).read_text()
    return parse_scenario(text)


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.config, args.resolution)
    status = run(scenario, args.out)
    print(f"{scenario.name}: {'all checks passed' if status == 0 else 'CHECKS FAILED'}")
    return status


def _cmd_oracle(args) -> int:
    scenario = _load_scenario(args.config, args.resolution)
    initial = scenario.build_initial()
    kernel = scenario.build_kernel()
    result = picard_solve(
        initial,
        kernel,
        scenario.model,
        scenario.t_final,
        n_iterations=args.iterations,
        time_samples=args.samples,
    )
    print(f"{scenario.name}: fixed-point gaps {['%.3e' % g for g in result.gaps]}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_nlcd(out / f"oracle_{scenario.name}.nlcd", result.field)
    return 0


def _cmd_encrypt(args) -> int:
    key = CryptKey.read(args.key)
    payload = read_nlcd(args.infile)
    write_nlcd(args.outfile, encrypt(payload, key))
    return 0


def _cmd_decrypt(args) -> int:
    key = CryptKey.read(args.key)
    cipher = read_nlcd(args.infile)
    write_nlcd(args.outfile, decrypt(cipher, key))
    return 0


def _cmd_report(args) -> int:
    rep = roundtrip_report(
        read_nlcd(args.orig), read_nlcd(args.dec), read_nlcd(args.cipher)
    )
    csv = rep.to_csv()
    if args.out:
        Path(args.out).write_text(csv)
    else:
        sys.stdout.write(csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlclaw",
        description="Nonlocal conservation-law simulator",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=(
            f"nlclaw {__version__} "
            f"(nlcd format v{NLCD_VERSION}, config format v{CONFIG_FORMAT_VERSION})"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and its checks")
    p_run.add_argument("--config", required=True,
                       help=f"config file or preset:NAME ({', '.join(preset_names())})")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--resolution", choices=("desk", "paper"), default="desk")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_or = sub.add_parser("oracle", help="characteristics-based cross-validation")
    p_or.add_argument("--config", required=True)
    p_or.add_argument("--iterations", type=int, default=5)
    p_or.add_argument("--samples", type=int, default=16)
    p_or.add_argument("--out", default=None)
    p_or.add_argument("--resolution", choices=("desk", "paper"), default="desk")
    p_or.set_defaults(func=_cmd_oracle)

    p_en = sub.add_parser("encrypt", help="forward transport of a payload")
    p_en.add_argument("--key", required=True)
    p_en.add_argument("--in", dest="infile", required=True)
    p_en.add_argument("--out", dest="outfile", required=True)
    p_en.set_defaults(func=_cmd_encrypt)

    p_de = sub.add_parser("decrypt", help="backward transport of a cipher")
    p_de.add_argument("--key", required=True)
    p_de.add_argument("--in", dest="infile", required=True)
    p_de.add_argument("--out", dest="outfile", required=True)
    p_de.set_defaults(func=_cmd_decrypt)

    p_re = sub.add_parser("report", help="roundtrip recovery metrics")
    p_re.add_argument("--orig", required=True)
    p_re.add_argument("--dec", required=True)
    p_re.add_argument("--cipher", required=True)
    p_re.add_argument("--out", default=None)
    p_re.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) and getattr(args, "threads", 1) > 1:
        set_fft_workers(args.threads)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line: tag provisioning, scenario runs, and the threat suite.

Exit codes: 0 success, 2 usage or configuration error, 3 domain failure
(aborted initialization, lost field, unblocked threat). Set NFCBMS_LOG to a
level name (DEBUG, INFO, ...) for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
from pathlib import Path

from .auth import TagUid, provision_tag
from .config import (
    ConfigError,
    build_system,
    load_config,
    load_key_file,
    save_key_file,
    save_tag_image,
)
from .curve import generate_keypair
from .link import BLOCK_BYTES, DEFAULT_BLOCK_COUNT
from .orchestrator import InitFinal, resume_session, run_monitoring
from .report import build_run_report, render_run_figures, render_threat_matrix_figure, write_json, write_samples_csv
from .threats import ThreatScenario, inject, run_scenario, run_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3

log = logging.getLogger("nfcbms")


def _setup_logging() -> None:
    level_name = os.environ.get("NFCBMS_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfcbms",
        description="Simulated NFC readout of battery-module sensors with "
        "anti-counterfeit authentication.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    provision = sub.add_parser("provision", help="generate a key pair and a signed tag image")
    provision.add_argument("--uid", required=True, help="16 hex chars, first byte E0")
    provision.add_argument("--key-out", required=True, help="key file to create or reuse")
    provision.add_argument(
        "--tag-out", default=None, help="tag image path (default: tag-<UID>.json next to the key)"
    )
    provision.add_argument("--seed", type=int, default=None, help="seed new-key generation")

    run = sub.add_parser("run", help="discovery, initialization and monitoring from a config")
    run.add_argument("--config", required=True)
    run.add_argument("--samples", type=int, default=10, help="monitoring samples (default 10)")
    run.add_argument("--out", default="report.json", help="report path (default report.json)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--trace", action="store_true", help="include the full link trace")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    suite = sub.add_parser("threat-suite", help="baseline plus the four adversary scenarios")
    suite.add_argument("--config", required=True)
    suite.add_argument("--out", default="threat_report.json")
    suite.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def _cmd_provision(args) -> int:
    try:
        uid = TagUid.from_hex(args.uid.strip())
    except ValueError as exc:
        print(
            f"invalid uid {args.uid!r}: need 16 hex chars with first byte E0 ({exc})",
            file=sys.stderr,
        )
        return EXIT_USAGE
    key_path = Path(args.key_out)
    if key_path.exists():
        key = load_key_file(key_path)
        log.info("reusing key file %s", key_path)
    else:
        rng = random.Random(args.seed) if args.seed is not None else None
        key = generate_keypair(rng)
        save_key_file(key_path, key)
        log.info("wrote new key file %s", key_path)
    signature = provision_tag(key, uid)
    tag_path = (
        Path(args.tag_out)
        if args.tag_out
        else key_path.parent / f"tag-{uid.hex}.json"
    )
    save_tag_image(tag_path, uid, signature, [bytes(BLOCK_BYTES)] * DEFAULT_BLOCK_COUNT)
    print(f"tag image written to {tag_path} (key: {key_path})")
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.samples < 1:
        print("--samples must be a positive integer", file=sys.stderr)
        return EXIT_USAGE
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw["seed"] = args.seed
    system = build_system(cfg)
    scenario_result = None
    if cfg.threat is not None:
        scenario = ThreatScenario.from_dict(cfg.threat)
        inject(scenario, system)
        scenario_result = run_scenario(cfg, scenario, monitor_samples=0)
    rng = random.Random(cfg.seed)
    discovered = system.bus.discovery_loop()
    init = None
    monitor = None
    succeeded = False
    if system.target_uid is not None and system.target_uid in discovered:
        init = resume_session(system, cfg.timings, rng=rng)
        if init.final is InitFinal.SUCCEEDED:
            monitor = run_monitoring(system, cfg.timings, n_samples=args.samples, rng=rng)
            succeeded = not monitor.field_lost
    else:
        log.warning("target tag was not discovered; nothing to initialize")
    report = build_run_report(
        cfg,
        discovered,
        init,
        monitor,
        system.bus,
        scenario_result=scenario_result,
        include_trace=args.trace,
    )
    out_path = write_json(report, args.out)
    csv_path = write_samples_csv(monitor, out_path.parent / (out_path.stem + "_samples.csv"))
    outputs = [out_path, csv_path]
    if not args.no_figures:
        outputs.extend(render_run_figures(out_path, cfg, init, monitor))
    final = init.final.value if init is not None else "NoTag"
    print(f"run finished: {final}", end="")
    if init is not None and init.steps:
        print(f", init {init.total_elapsed_ms:.2f} ms", end="")
    if monitor is not None:
        print(f", monitoring {len(monitor.samples)} samples in {monitor.elapsed_ms:.2f} ms", end="")
    print()
    if scenario_result is not None:
        state = "blocked" if scenario_result.blocked else "not blocked"
        print(f"threat {scenario_result.name}: {state}")
    for path in outputs:
        print(f"wrote {path}")
    domain_ok = succeeded and (scenario_result is None or scenario_result.blocked)
    return EXIT_OK if domain_ok else EXIT_DOMAIN


def _cmd_threat_suite(args) -> int:
    cfg = load_config(args.config)
    suite = run_suite(cfg)
    out_path = write_json(suite.to_dict(), args.out)
    table = suite.table_text()
    table_path = out_path.parent / (out_path.stem + "_table.txt")
    table_path.write_text(table + "\n", encoding="utf-8")
    outputs = [out_path, table_path]
    if not args.no_figures:
        outputs.append(
            render_threat_matrix_figure(suite, out_path.parent / (out_path.stem + "_matrix.png"))
        )
    print(table)
    print()
    for path in outputs:
        print(f"wrote {path}")
    print(f"suite {'passed' if suite.passed else 'FAILED'}")
    return EXIT_OK if suite.passed else EXIT_DOMAIN


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return EXIT_USAGE if code != 0 else EXIT_OK
    handlers = {
        "provision": _cmd_provision,
        "run": _cmd_run,
        "threat-suite": _cmd_threat_suite,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

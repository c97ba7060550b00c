#!/usr/bin/env python3
"""
flatmoduli - gauge classes of flat connections over flat complex tori

Runs one job per invocation from a YAML/JSON job file: property suites,
Hodge splitting, canonical forms, classification of the admissible set,
holonomy, Hodge-property certificates and Picard-lattice checks. Every
numeric claim is written as a check record to a line-delimited report.
"""

import argparse
import sys
import traceback
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from certificates import hodge_certificate, hodge_status, verify_certificate
from config import COMMANDS, SAMPLE_CONFIG, ConfigLoader, JobConfig
from derham import (TwistContext, is_picard, make_twist, picard_coordinates, reduce_picard, transfer_r_gamma,
                    trivial_twist, twist_check_records)
from errors import ConfigError
from formats import (canonical_to_json, certificate_to_json, encode_matrix, equivalence_to_json, form_to_json,
                     form_from_json, geometry_to_json, group_to_json, load_json, moduli_to_json)
from holonomy import COMMUTATOR_TOL, holonomy, holonomy_character_check, holonomy_commutators
from lie import build_group
from logging_config import AppLogger, LoggedOperation, create_component_logger
from moduli import UNDECIDED, Sector, admissible_set, canonicalize, equivalent, reconstruct
from reports import EXIT_USAGE, Check, ReportWriter, check_exact, check_le
from suites import EXACT_TOL, SuiteCase, run_suites
from torus import TorusGeom, harmonic_dimension, hodge_decompose, make_torus

logger = create_component_logger('cli')


class Job:
    """Geometry, group and twist of a config, built once per run."""

    def __init__(self, config: JobConfig):
        self.config = config
        self.geom: TorusGeom = make_torus(config.g, config.period_array(), config.cutoff, config.grid)
        self.spec = build_group(config.family, config.rank)
        chi = config.chi_array()
        self.ctx: TwistContext = (make_twist(chi, self.geom, self.spec) if chi is not None
                                  else trivial_twist(self.geom, self.spec))
        self.tol = config.tolerances
        self.rng = np.random.default_rng(config.seed)

    def read_form(self, path: str):
        return form_from_json(load_json(path), self.geom, self.spec)


def _verify_identities(job: Job, writer: ReportWriter):
    case = SuiteCase(job.geom, job.spec, job.ctx)
    writer.checks_from(run_suites(case, job.config.suites, job.config.seed, job.config.trials, job.tol))


def _hodge_decompose(job: Job, writer: ReportWriter):
    alpha = job.read_form(job.config.input)
    split = hodge_decompose(alpha)
    harmonic, exact, coexact = split.parts()
    scale = 1.0 + alpha.norm()
    writer.check(check_le("hodge.reconstruction", split.residual / scale, job.tol["identity"]))
    overlap = max(abs(harmonic.inner(exact)), abs(harmonic.inner(coexact)), abs(exact.inner(coexact)))
    writer.check(check_le("hodge.orthogonality", overlap / scale ** 2, job.tol["identity"]))
    writer.data("split", {"harmonic": form_to_json(harmonic), "exact": form_to_json(exact),
                          "coexact": form_to_json(coexact)})


def _canonicalize(job: Job, writer: ReportWriter):
    omega = job.read_form(job.config.input)
    cf = canonicalize(omega, job.ctx, job.spec, flat_tol=job.tol["flat"])
    writer.checks_from(cf.checks(job.tol["canonical"]))
    writer.data("canonical", canonical_to_json(cf))
    if job.config.compare:
        other = job.read_form(job.config.compare)
        result = equivalent(omega, other, job.ctx, job.spec, job.rng,
                            accept=job.tol["accept"], reject=job.tol["reject"])
        writer.check(result.check(job.tol["accept"], job.tol["reject"]))
        writer.data("equivalence", equivalence_to_json(result))
        if result.decision == UNDECIDED:
            logger.warning(f"Equivalence undecided (residual {result.residual:.3e})")


def _reconstruct(job: Job, writer: ReportWriter):
    psi = job.read_form(job.config.input)
    cf = reconstruct(psi, job.ctx, job.spec, flat_tol=job.tol["canonical"])
    writer.checks_from(cf.checks(job.tol["canonical"]))
    writer.data("canonical", canonical_to_json(cf))
    writer.data("omega", form_to_json(cf.global_omega))


def _classify(job: Job, writer: ReportWriter):
    desc = admissible_set(job.spec, job.ctx, job.geom, Sector(job.config.sector),
                          samples=job.config.samples, rng=job.rng)
    for k, sample in enumerate(desc.samples):
        writer.check(check_le(f"classify.sample{k}.constraint", sample.constraint, job.tol["kahler"]))
        if sample.partner_of is not None:
            source = desc.samples[sample.partner_of]
            writer.check(check_exact(f"classify.sample{k}.same_orbit", sample.orbit, source.orbit))
    writer.check(check_exact("classify.undecided_samples", sum(s.decision == UNDECIDED for s in desc.samples), 0))
    writer.data("moduli", moduli_to_json(desc))


def _holonomy(job: Job, writer: ReportWriter):
    if job.config.input:
        omega = job.read_form(job.config.input)
        if omega.shift is not None and not omega.shift.is_trivial:
            omega = transfer_r_gamma(omega, job.ctx, "toGlobal")
    else:
        omega = job.ctx.gamma
        writer.checks_from(holonomy_character_check(job.ctx, job.tol["character"]))
    loops = job.config.loops or tuple(range(1, job.geom.real_dim + 1))
    results = []
    for loop in loops:
        # generator indices in the config are 1-based
        target = loop - 1 if isinstance(loop, int) else list(loop)
        H = holonomy(omega, target, tol=job.tol["holonomy"])
        results.append({"loop": loop if isinstance(loop, int) else list(loop), "matrix": encode_matrix(H.matrix)})
    for (a, b), norm in holonomy_commutators(omega, job.tol["holonomy"]):
        writer.check(check_le(f"holonomy.commutator_{a + 1}{b + 1}", norm, COMMUTATOR_TOL))
    writer.data("holonomy", results)


def _certify_hodge(job: Job, writer: ReportWriter):
    groups = job.config.groups or ((job.config.family, job.config.rank),)
    for family, rank in groups:
        status = hodge_status(family)
        if status != "certified":
            writer.data("status", {"group": f"{family}({rank})", "hodge_property": status})
            continue
        spec = build_group(family, rank)
        cert = hodge_certificate(spec, bottom_out=job.config.bottom_out)
        report = verify_certificate(cert)
        for check in report.checks:
            writer.check(Check(f"{spec.name}.{check.name}", check.value, check.tolerance, check.passed,
                               check.comparison))
        writer.data("certificate", certificate_to_json(cert))


def _picard(job: Job, writer: ReportWriter):
    ctx, geom = job.ctx, job.geom
    for name, deviation in twist_check_records(ctx):
        writer.check(check_le(name, deviation, EXACT_TOL))
    writer.checks_from(holonomy_character_check(ctx, job.tol["character"]))
    trivial = ctx.shift.trivial_entries()
    expected = sum(1 for X in job.spec.basis if np.all(trivial[X != 0])) * geom.g
    writer.check(check_exact("picard.harmonic_01_dimension",
                             harmonic_dimension(geom, job.spec, ctx.twisted_shift(), (0, 1)), expected))
    case = SuiteCase(geom, job.spec, ctx)
    writer.checks_from(run_suites(case, ["picard"], job.config.seed, job.config.trials, job.tol))

    entries = []
    for i in range(job.spec.ambient_dim):
        c = ctx.chi_coeffs[:, i]
        m, rest = reduce_picard(geom, c)
        entries.append({"index": i, "exponents": picard_coordinates(geom, c).tolist(),
                        "in_lattice": bool(is_picard(geom, c)), "lattice_part": m.tolist(),
                        "remainder": [[float(z.real), float(z.imag)] for z in rest]})
    writer.data("picard", {"is_picard": ctx.is_picard, "entries": entries})


DISPATCH: Dict[str, Callable[[Job, ReportWriter], None]] = {
    "verify-identities": _verify_identities,
    "hodge-decompose": _hodge_decompose,
    "canonicalize": _canonicalize,
    "reconstruct": _reconstruct,
    "classify": _classify,
    "holonomy": _holonomy,
    "certify-hodge": _certify_hodge,
    "picard": _picard,
}


def execute(config: JobConfig, writer: ReportWriter) -> int:
    """Run one job, streaming its records; returns the exit code."""
    job = Job(config)
    writer.header({
        **config.summary(),
        "geometry": geometry_to_json(job.geom),
        "group_spec": group_to_json(job.spec),
        "tolerances": dict(sorted(config.tolerances.items())),
    })
    with LoggedOperation('cli', config.command, {'group': job.spec.name, 'seed': config.seed}):
        DISPATCH[config.command](job, writer)
    return writer.summary()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatmoduli",
        description="Non-abelian de Rham/Dolbeault cohomology of flat complex tori",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the property suites for a job file
  python flatmoduli.py verify-identities --config configs/verify.yml --seed 7

  # Classify the admissible harmonic set, report to a file
  python flatmoduli.py classify --config configs/classify.yml --out reports/t2.jsonl

  # Scaffold a starter job file
  python flatmoduli.py --sample-config

Exit codes: 0 pass, 1 a check failed, 2 undecided equivalence, 3 usage error.
        """
    )

    parser.add_argument(
        'command',
        nargs='?',
        choices=COMMANDS,
        help='Job to run (must match the config, or supplies it)'
    )

    parser.add_argument(
        '--config', '-c',
        help='Path to the job file (default: discovered, e.g. configs/flatmoduli.yml)'
    )

    parser.add_argument(
        '--seed',
        type=int,
        help='Random seed (overrides config)'
    )

    parser.add_argument(
        '--out', '-o',
        help='Report path (overrides config; default stdout)'
    )

    parser.add_argument(
        '--debug', '-d',
        action='store_true',
        help='Enable debug output'
    )

    parser.add_argument(
        '--log-file',
        help='Path to debug log file (default: auto-generated in /tmp)'
    )

    parser.add_argument(
        '--console-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        default='WARNING',
        help='Console logging level (default: WARNING)'
    )

    parser.add_argument(
        '--sample-config',
        nargs='?', const='flatmoduli.yml', default=None, metavar='PATH',
        help='Write a sample job file (default: flatmoduli.yml) and exit'
    )
    return parser


def main(argv: List[str] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad arguments; usage errors are 3 here
        return EXIT_USAGE if e.code else 0

    if args.sample_config is not None:
        dest = Path(args.sample_config)
        if dest.parent != Path('.'):
            dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(SAMPLE_CONFIG)
        print(f"Sample configuration file created: {dest}")
        return 0

    console_level = 'DEBUG' if args.debug else args.console_level
    log_file_path = AppLogger.setup_logging(
        console_level=console_level,
        enable_file_logging=True,
        log_file=args.log_file
    )
    main_logger = create_component_logger('startup')
    main_logger.info("Starting flatmoduli")

    try:
        config = ConfigLoader().load_config(args.config)
        if args.command and args.command != config.command:
            raise ConfigError(f"command '{args.command}' does not match the config's '{config.command}'",
                              "command")
        config = config.with_overrides(seed=args.seed, output=args.out)
        main_logger.info(f"Configuration loaded from: {config.source}")
    except ConfigError as e:
        AppLogger.log_error_context('error', e, {'config_file': args.config}, 'load_config')
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        with ReportWriter(config.command, path=config.output) as writer:
            try:
                code = execute(config, writer)
            except ConfigError as e:
                writer.error(e)
                writer.summary(EXIT_USAGE)
                raise
            except Exception as e:
                writer.error(e)
                writer.summary(1)
                raise
        if config.output:
            print(f"Report written: {config.output}", file=sys.stderr)
        if args.debug and log_file_path:
            print(f"Debug log available at: {log_file_path}", file=sys.stderr)
        return code

    except Exception as e:
        AppLogger.log_error_context('error', e, {
            'config_file': config.source,
            'command': config.command,
            'seed': config.seed,
            'debug_mode': args.debug
        }, 'main_execution')

        print(f"Error: {e}", file=sys.stderr)

        if args.debug:
            traceback.print_exc()
            log_file = AppLogger.get_log_file_path()
            if log_file:
                print(f"Full debug information available in: {log_file}", file=sys.stderr)

        return EXIT_USAGE if isinstance(e, ConfigError) else 1


if __name__ == '__main__':
    sys.exit(main())

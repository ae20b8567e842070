#!/usr/bin/env python3

#    This file is part of holonome.
#
#    holonome is free software: you can redistribute it and/or modify it
#    under the terms of the GNU General Public License as published by the
#    Free Software Foundation, either version 3 of the License, or (at your
#    option) any later version.
#
#    holonome is distributed in the hope that it will be useful, but WITHOUT
#    ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or
#    FITNESS FOR A PARTICULAR PURPOSE.  See the GNU General Public License for
#    more details.
#
#    You should have received a copy of the GNU General Public License along
#    with holonome.  If not, see <http://www.gnu.org/licenses/>.

import sys

# quick version check
if sys.version_info < (3, 6):
    print("Sorry, holonome requires at least Python 3.6 to run.")
    sys.exit(1)

import logging
import multiprocessing
import os.path
import time
from argparse import ArgumentParser

import holonome_core
from holonome_core import util

# exit codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

helptext = """
%(prog)s simulate --model=<model.cfg> --q=... --t-end=T --out=<file.csv>
%(prog)s equilibria --model=<model.cfg> --out=<file.json>
%(prog)s manifold --model=<model.cfg> [--seed=...] --out=<file.json>
%(prog)s stability --model=<model.cfg> --q=... --out=<file.json>
%(prog)s topology --report=<topology.json>
%(prog)s check --model=<model.cfg>"""


def _flag(name):
    return "--" + name.replace("_", "-")


def add_tolerance_options(parser):
    """One option per numerical tolerance, all defaulting to the library
    defaults (see settingsDefinition.get_default_tolerances)
    """
    from holonome_core import settingsDefinition
    group = parser.add_argument_group("Numerical settings")
    for name, setting in settingsDefinition.get_default_tolerances().items():
        flags = [_flag(name)]
        if name == "rel_tol":
            flags.append("--tol")
        group.add_argument(*flags, dest=name, action="store", default=None, metavar="VALUE",
                           help="Default: %s." % (setting.default,))
    group.add_argument("--set", dest="assignments", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="Override any numerical setting by name. May be repeated.")


def build_parser():
    parser = ArgumentParser(usage=helptext)
    parser.add_argument("-V", "--version", dest="version", action="store_true",
                        help="Display version information and then exit.")
    parser.add_argument("-p", "--processes", dest="procs", action="store", type=int,
                        help="The number of local worker processes to spawn. Defaults to "
                        "$HOLONOME_THREADS, then to the number of CPU cores.")

    # Log level options:
    parser.add_argument("-q", "--quiet", dest="quiet", action="count", default=0,
                        help="Print less output. You can specify this option multiple times.")
    parser.add_argument("-v", "--verbose", dest="verbose", action="count", default=0,
                        help="Print more output. You can specify this option multiple times.")
    parser.add_argument("--simple-output", dest="simple", action="store_true", default=False,
                        help="Use a simple output format, with no colors.")

    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", help="Integrate the extension (or a descent flow) of a "
                       "model and write the trajectory as CSV.")
    p.add_argument("--model", required=True, help="The model file.")
    p.add_argument("--q", required=True, help="Initial configuration, comma-separated.")
    p.add_argument("--p", help="Initial momentum, comma-separated. Default: zero.")
    p.add_argument("--project-leaf", dest="project_leaf", action="store_true",
                   help="Replace p by its projection rho^T p onto the physical leaf.")
    p.add_argument("--t-end", dest="t_end", required=True, help="Final time.")
    p.add_argument("--flow", choices=("extension", "descent", "phase-descent"),
                   default="extension",
                   help="extension: the extended Hamiltonian flow (default). descent: the "
                   "gradient-like flow of U on Q, from --q. phase-descent: the "
                   "gradient-like flow of H on phase space.")
    p.add_argument("--out", required=True, help="The trajectory CSV to write.")
    add_tolerance_options(p)

    p = sub.add_parser("equilibria", help="Find the critical points of U by multistart "
                       "Newton and classify them as points of C_Q.")
    p.add_argument("--model", required=True, help="The model file.")
    p.add_argument("--out", required=True, help="The JSON file to write.")
    add_tolerance_options(p)

    p = sub.add_parser("manifold", help="Trace components of the critical manifold C_Q.")
    p.add_argument("--model", required=True, help="The model file.")
    p.add_argument("--seed", dest="seeds", action="append", default=[],
                   help="A seed configuration, comma-separated. May be repeated. Without "
                   "seeds, every critical point of U seeds the tracing.")
    p.add_argument("--out", required=True, help="The JSON file to write.")
    p.add_argument("--csv", dest="csv", help="Also write the points as a flat CSV file.")
    add_tolerance_options(p)

    p = sub.add_parser("stability", help="Linearize the extension at points of C_Q and "
                       "classify their stability.")
    p.add_argument("--model", required=True, help="The model file.")
    p.add_argument("--q", dest="points", action="append", required=True,
                   help="A point of C_Q, comma-separated. May be repeated.")
    p.add_argument("--out", required=True, help="The JSON file to write.")
    add_tolerance_options(p)

    p = sub.add_parser("topology", help="Check the Morse-Bott identity for declared "
                       "component topology.")
    p.add_argument("--report", required=True, help="The topology JSON file.")
    p.add_argument("--out", help="Write the verdict JSON here.")

    p = sub.add_parser("check", help="Run the invariant smoke suite on a model.")
    p.add_argument("--model", required=True, help="The model file.")
    add_tolerance_options(p)
    return parser


##############################################################################
# helpers shared by the commands

def _vector(text, what):
    from holonome_core.settingsValidators import ValidationException, validateFloatList
    try:
        return validateFloatList(text)
    except ValidationException as e:
        raise ValidationException("%s: %s" % (what, e))


def _tolerances(args):
    from holonome_core import config_parser
    overrides = config_parser.parse_assignments(args.assignments)
    for name in config_parser.settingsDefinition.get_default_tolerances():
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return config_parser.get_tolerances(overrides)


def _load(args):
    from holonome_core import mechsys
    system = mechsys.load_system_file(os.path.expanduser(args.model))
    logging.info("Loaded model %r: n=%d, k=%d", system.name, system.n, system.k)
    return system


def _manifest(args, system, tolerances, seeds=None, start=None):
    from holonome_core import files
    return files.RunManifest(
        command=args.command,
        model=os.path.abspath(args.model) if getattr(args, "model", None) else None,
        params=dict(sorted(system.params.items())) if system is not None else {},
        seeds=seeds or [],
        tolerances=dict(tolerances or {}),
        version=util.findGitVersion(),
        wall_time=None if start is None else time.time() - start)


##############################################################################
# the commands

def cmd_simulate(args, dispatcher):
    from holonome_core import flow, mechsys
    start = time.time()
    tol = _tolerances(args)
    system = _load(args)
    q = system.check_q(_vector(args.q, "--q"))
    p = system.check_q(_vector(args.p, "--p")) if args.p else [0.0] * system.n
    t_end = _vector(args.t_end, "--t-end")[0]
    if t_end <= 0:
        from holonome_core.settingsValidators import ValidationException
        raise ValidationException("--t-end must be positive, got %r" % t_end)
    opts = flow.IntegratorOptions.from_tolerances(t_end, tol)

    if args.flow == "descent":
        traj = flow.descent_flow_q(system, q, opts, tol['descent_threshold'])
    else:
        x0 = mechsys.PhasePoint(q, p)
        if args.project_leaf:
            x0 = mechsys.physical_leaf_project(system, x0)
        if args.flow == "phase-descent":
            traj = flow.gradient_like_flow_phase(system, x0, opts, tol['descent_threshold'])
        else:
            traj = flow.extension_flow(system, x0, opts)
            h = traj.monitor('H')
            logging.info("Energy drift over [0, %g]: %.3g", t_end, max(abs(h - h[0])))
    flow.export_csv(traj, args.out)
    _manifest(args, system, tol, [list(q), list(p)], start).write(args.out)
    return EXIT_OK


def cmd_equilibria(args, dispatcher):
    from holonome_core import critical, files
    start = time.time()
    tol = _tolerances(args)
    system = _load(args)
    points = critical.find_U_critical_points(system, tol['grid'], tol['newton_tol'],
                                             tol['max_iter'], tol['dedup_tol'], dispatcher,
                                             rank_threshold=tol['rank_threshold'])
    files.write_json(args.out, [critical.point_to_record(system, cp) for cp in points])
    _manifest(args, system, tol, start=start).write(args.out)
    return EXIT_OK


def cmd_manifold(args, dispatcher):
    from holonome_core import critical, files
    start = time.time()
    tol = _tolerances(args)
    system = _load(args)
    seeds = [system.check_q(_vector(s, "--seed")) for s in args.seeds]
    if seeds:
        try:
            components = critical.continue_from_seeds(system, seeds, tol['step'],
                                                      tol['max_points'], tol['newton_tol'],
                                                      tol['max_iter'], dispatcher)
        except critical.NoConvergenceError as e:
            logging.error("A seed could not be refined onto C_Q; last residual %.3g",
                          e.residual if e.residual is not None else float('nan'))
            raise
    else:
        components, _ = critical.trace_critical_manifold(
            system, tol['grid'], tol['step'], tol['max_points'], tol['newton_tol'],
            tol['max_iter'], tol['membership_tol'], dispatcher)
    records = [critical.component_to_record(system, c, i) for i, c in enumerate(components)]
    files.write_json(args.out, records)
    manifest = _manifest(args, system, tol, [list(s) for s in seeds], start)
    manifest.write(args.out)
    if args.csv:
        header, rows = critical.components_csv_rows(system, components)
        files.write_csv(args.csv, header, rows)
        manifest.write(args.csv)
    for i, c in enumerate(components):
        logging.info("component %d: %d points, index %s, %s, arc length %.6g", i, len(c),
                     c.index, "closed" if c.closed else "open", c.arc_length)
    return EXIT_OK


def cmd_stability(args, dispatcher):
    from holonome_core import files, stability
    start = time.time()
    tol = _tolerances(args)
    system = _load(args)
    points = [system.check_q(_vector(q, "--q")) for q in args.points]
    reports = stability.stability_reports(system, points, tol['r_max'], tol, dispatcher)
    data = [r.as_dict() for r in reports]
    files.write_json(args.out, data[0] if len(data) == 1 else data)
    _manifest(args, system, tol, [list(q) for q in points], start).write(args.out)
    for r in reports:
        if r.classification == stability.CRITICALLY_STABLE:
            logging.info("hypotheses for long-time stability %s at q=%s",
                         "hold" if r.hypotheses_hold() else "do not hold", list(r.point.q))
    return EXIT_OK


def cmd_topology(args, dispatcher):
    from holonome_core import files, topology
    components, ambient = topology.load_report(args.report)
    result = topology.verdict(components, ambient)
    print(result["verdict"])
    if args.out:
        files.write_json(args.out, result)
        files.RunManifest(command=args.command, seeds=[os.path.abspath(args.report)],
                          version=util.findGitVersion()).write(args.out)
    return EXIT_OK if result["identity_holds"] else EXIT_CHECK_FAILED


def cmd_check(args, dispatcher):
    from holonome_core import checks
    tol = _tolerances(args)
    system = _load(args)
    results = checks.run_all(system, tol)
    failed = [name for name, ok in results.items() if not ok]
    if failed:
        logging.error("%d check group(s) failed: %s", len(failed), ", ".join(failed))
        return EXIT_CHECK_FAILED
    logging.info("All %d check groups passed.", len(results))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "manifold": cmd_manifold,
    "stability": cmd_stability,
    "topology": cmd_topology,
    "check": cmd_check,
}


def main(argv=None):
    # bootstrap the logger with defaults
    from holonome_core import logger
    logger.configure()

    parser = build_parser()
    args = parser.parse_args(argv)

    # re-configure the logger now that we've processed the command line options
    logger.configure(logging.INFO + 10 * args.quiet - 10 * args.verbose,
                     verbose=args.verbose > 0, simple=args.simple)

    if args.version:
        print("holonome %s (%s)" % (util.findGitVersion(), util.findGitHash()[:7]))
        if args.verbose > 0:
            print("Python executable: %r" % sys.executable)
            print(sys.version)
        return EXIT_OK

    if not args.command:
        logging.error("You must give a command.")
        parser.print_help()
        return EXIT_CONFIG

    if holonome_core.check_dependencies():
        return EXIT_NUMERIC

    from holonome_core import dispatcher as dispatcher_module
    from holonome_core.errors import ConfigError, NumericError

    logging.debug("holonome %s, command %s", util.findGitVersion(), args.command)
    try:
        with dispatcher_module.get_dispatcher(args.procs) as dispatcher:
            return COMMANDS[args.command](args, dispatcher)
    except ConfigError as e:
        # not a bug, so no traceback
        logging.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except NumericError as e:
        logging.error("Numerical failure: %s", e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    multiprocessing.freeze_support()
    try:
        util.nice_exit(main())
    except KeyboardInterrupt:
        logging.info("Interrupted by user. Aborting.")
        util.nice_exit(EXIT_CONFIG)
    except Exception:
        logging.exception("An error has occurred. This may be a bug. Please let us know!\n\n"
                          "This is the error that occurred:")
        util.nice_exit(EXIT_CHECK_FAILED)

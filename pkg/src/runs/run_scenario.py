"""
Run, validate and list the figure scenarios.

    python src/runs/run_scenario.py run --cfg cfg/fig2-ratio-collective.yaml
    python src/runs/run_scenario.py validate --cfg cfg/fig4-lattice-scaling.yaml
    python src/runs/run_scenario.py list-scenarios

"""

import argparse
import logging
import os
import sys
import time

from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from src.scenarios import list_scenarios, run_scenario, validate
from src.utils import plot_columns, resolve_threads, set_num_threads, write_csv, write_manifest

EXIT_USAGE = 2


def load_cfg(path):
    cfg = OmegaConf.load(path)
    OmegaConf.resolve(cfg)
    return cfg


def output_dir_of(cfg, out=None):
    return out if out else os.path.join(cfg.output_parent_dir, cfg.exp_name)


def report(diagnostics):
    for d in diagnostics:
        log = {"error": logging.error, "warning": logging.warning}.get(d.level, logging.info)
        log(f"[{d.level}] {d.message}")
    return [d for d in diagnostics if d.level == "error"]


def main(cfg, output_dir, threads=None):
    errors = report(validate(cfg))
    if errors:
        raise ValueError(f"{len(errors)} config error(s): " + "; ".join(d.message for d in errors))
    set_num_threads(threads)

    start = time.perf_counter()
    tables = run_scenario(cfg, threads)

    # all tables are complete before anything is written
    outputs = []
    for table in tables:
        path = os.path.join(output_dir, f"{table.name}.csv")
        write_csv(path, table.columns, table.rows)
        outputs.append(path)
        logging.info(f"Wrote {len(table.rows)} rows to {path}")
    if OmegaConf.select(cfg, "plot.enabled", default=False):
        fmt = OmegaConf.select(cfg, "plot.format", default="pdf")
        for table, path in zip(tables, list(outputs)):
            if table.plot is None:
                continue
            spec = table.plot
            figure = plot_columns(
                path,
                spec.x,
                spec.ys,
                os.path.splitext(path)[0] + f".{fmt}",
                logx=spec.logx,
                logy=spec.logy,
                title=f"{cfg.scenario}: {table.name}",
                group=spec.group,
            )
            outputs.append(figure)
    manifest = write_manifest(output_dir, cfg, time.perf_counter() - start, outputs)
    logging.info(f"Manifest: {manifest}")
    return outputs


def cmd_run(args):
    cfg = load_cfg(args.cfg_file)
    if args.seed is not None:
        cfg.seed = args.seed
    output_dir = output_dir_of(cfg, args.out)
    os.makedirs(output_dir, exist_ok=True)

    logging_path = os.path.join(output_dir, "log.log")
    logging.basicConfig(
        level=logging.INFO,
        format="%(message)s",
        handlers=[
            logging.FileHandler(logging_path, mode="w"),
            logging.StreamHandler(),
        ],
        force=True,
    )
    logging.info(f"***** Running {cfg.exp_name} ({cfg.scenario}) *****")
    main(cfg, output_dir, resolve_threads(args.threads))
    return 0


def cmd_validate(args):
    logging.basicConfig(level=logging.INFO, format="%(message)s", force=True)
    cfg = load_cfg(args.cfg_file)
    errors = report(validate(cfg))
    if not errors:
        logging.info(f"{args.cfg_file}: OK")
    return EXIT_USAGE if errors else 0


def cmd_list(args):
    for name, description in list_scenarios():
        print(f"{name:<26} {description}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(description="Noise-unbiased frequency estimation scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its CSVs")
    run.add_argument("-cfg", "--cfg", "--config", dest="cfg_file", help="cfg file path", required=True, type=str)
    run.add_argument("--out", help="output directory, overrides output_parent_dir/exp_name", default=None, type=str)
    run.add_argument("--seed", help="overrides the config seed", default=None, type=int)
    run.add_argument("--threads", help="worker threads, falls back to RATIO_METROLOGY_THREADS", default=None, type=int)
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("validate", help="report config diagnostics")
    check.add_argument("-cfg", "--cfg", "--config", dest="cfg_file", help="cfg file path", required=True, type=str)
    check.set_defaults(func=cmd_validate)

    listing = sub.add_parser("list-scenarios", help="list registered scenarios")
    listing.set_defaults(func=cmd_list)
    return parser


def cli(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, OmegaConfBaseException) as err:
        logging.error(f"[!] {err}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(cli())

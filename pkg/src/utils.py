import csv
import hashlib
import logging
import math
import os
import platform

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numba
import numpy as np
import scipy
from omegaconf import OmegaConf

THREADS_ENV = "RATIO_METROLOGY_THREADS"
NA = "NA"

MOMENT_COLUMNS = ("tau[1/omega_c]", "phi[rad]", "jx[spin]", "jy[spin]", "jx2[spin^2]", "jy2[spin^2]")
OPTIMUM_COLUMNS = ("N", "x0_opt[v/omega_c]", "tau_opt[1/omega_c]", "delta_b_opt[omega_c]", "method")


def format_value(value):
    """CSV cell text; missing or non-finite numbers become NA, never 0."""
    if value is None:
        return NA
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}" if math.isfinite(value) else NA
    return str(value)


def write_csv(path, columns, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            assert len(row) == len(columns), f"[!] row has {len(row)} cells, header has {len(columns)}"
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """Header and rows with NA mapped back to NaN."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = []
        for row in reader:
            rows.append([math.nan if cell == NA else _parse(cell) for cell in row])
    return header, rows


def _parse(cell):
    try:
        return float(cell)
    except ValueError:
        return cell


def config_hash(cfg):
    text = OmegaConf.to_yaml(cfg, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(output_dir, cfg, runtime, outputs):
    path = os.path.join(output_dir, "manifest.txt")
    lines = [
        f"scenario: {cfg.scenario}",
        f"exp_name: {cfg.exp_name}",
        f"config_sha256: {config_hash(cfg)}",
        f"seed: {cfg.seed}",
        f"python: {platform.python_version()}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        f"numba: {numba.__version__}",
        f"matplotlib: {matplotlib.__version__}",
        f"runtime_s: {runtime:.3f}",
        "outputs:",
    ]
    lines += [f"  - {os.path.basename(p)}" for p in outputs]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path


def resolve_threads(threads=None):
    """CLI value, then RATIO_METROLOGY_THREADS, then None (numba default)."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError as err:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from err
    if threads is not None and threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def set_num_threads(threads):
    if threads is None:
        return numba.get_num_threads()
    threads = min(int(threads), numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(threads)
    logging.info(f"Using {threads} threads")
    return threads


def plot_columns(csv_path, x, ys, out_path, logx=False, logy=False, title=None, group=None):
    """
    Render selected CSV columns against x into a vector-graphic file. With
    group, one line per distinct value of that column.
    """
    header, rows = read_csv(csv_path)
    for name in [x, *ys] + ([group] if group else []):
        if name not in header:
            raise ValueError(f"column {name!r} not in {csv_path}")
    keys = [r[header.index(group)] for r in rows] if group else [None] * len(rows)
    data = np.array([[r[header.index(c)] for c in [x] + list(ys)] for r in rows], dtype=float)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for key in dict.fromkeys(keys):
        mask = np.array([k == key for k in keys])
        for i, name in enumerate(ys, start=1):
            label = name if key is None else f"{name}, {group}={key:g}" if isinstance(key, float) else f"{name}, {key}"
            ax.plot(data[mask, 0], data[mask, i], marker=".", label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.legend(frameon=False, fontsize="small")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path

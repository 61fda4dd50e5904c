"""Histogram density tables of chains and SMC populations, for external plotting."""

import json
import logging
from pathlib import Path

import numpy as np

from stratabc.exceptions import ParameterError
from stratabc.services.experiment import read_chain

logger = logging.getLogger(__name__)

DEFAULT_BINS = 50


def density_table(draws: np.ndarray, bins: int = DEFAULT_BINS, weights: np.ndarray | None = None) -> np.ndarray:
    """Rows (left edge, right edge, density); the densities integrate to 1."""
    x = np.asarray(draws, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("cannot build a density from an empty sample")
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    density, edges = np.histogram(x, bins=bins, range=(lo, hi), weights=weights, density=True)
    return np.column_stack([edges[:-1], edges[1:], density])


def _write_densities(path: Path, names: list[str], columns: np.ndarray, bins: int, weights=None) -> None:
    rows = []
    for j, name in enumerate(names):
        for left, right, density in density_table(columns[:, j], bins, weights):
            rows.append(f"{name}\t{left:.17g}\t{right:.17g}\t{density:.17g}")
    path.write_text("\t".join(["parameter", "left", "right", "density"]) + "\n" + "\n".join(rows) + "\n")


def _burn_in(run_dir: Path, stage: str) -> int:
    config_path = run_dir / "config.json"
    if not config_path.is_file():
        return 0
    for s in json.loads(config_path.read_text()).get("stages", []):
        if s.get("name") == stage:
            return int(s.get("burn_in", 0))
    return 0


def emit_plot_data(run_dir: Path, bins: int = DEFAULT_BINS) -> list[Path]:
    """Write ``density_<stage>.tsv`` for every chain and population in ``run_dir``."""
    run_dir = Path(run_dir)
    written = []
    for chain_path in sorted(run_dir.glob("chain_*.tsv")):
        stage = chain_path.stem.removeprefix("chain_")
        chain = read_chain(chain_path, _burn_in(run_dir, stage))
        draws = chain.retained()
        if draws.shape[0] == 0:
            raise ParameterError(f"{chain_path}: no draws after burn-in")
        path = run_dir / f"density_{stage}.tsv"
        _write_densities(path, list(chain.parameter_names), draws, bins)
        written.append(path)
    for pop_path in sorted(run_dir.glob("population_*.tsv")):
        stage = pop_path.stem.removeprefix("population_")
        header = pop_path.read_text().splitlines()[0].split("\t")
        table = np.atleast_2d(np.loadtxt(pop_path, delimiter="\t", skiprows=1))
        p = len(header) - 2
        path = run_dir / f"density_{stage}.tsv"
        _write_densities(path, header[:p], table[:, :p], bins, weights=table[:, p])
        written.append(path)
    logger.info(f"[PLOT] {len(written)} density tables written to {run_dir}")
    return written

"""
privcon tradeoff command - DP utility, privacy and lower bound over a log grid of noise variances.
"""

from pathlib import Path
from typing import List, Optional

from privcon.commands._experiment import experiment_command
from privcon.core.spec import ExperimentKind


def tradeoff_command(
    spec_path: Optional[Path] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    sigma: Optional[List[float]] = None,
    workers: Optional[int] = None,
    output_dir: Optional[str] = None,
    graph_files: Optional[List[str]] = None,
) -> None:
    experiment_command(ExperimentKind.TRADEOFF, spec_path, trials, seed, sigma, workers, output_dir,
                       graph_files)

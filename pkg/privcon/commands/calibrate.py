"""
privcon calibrate command - kNN estimator calibration on Gaussian pairs and at the noise floor.
"""

from pathlib import Path
from typing import List, Optional

from privcon.commands._experiment import experiment_command
from privcon.core.spec import ExperimentKind


def calibrate_command(
    spec_path: Optional[Path] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    sigma: Optional[List[float]] = None,
    workers: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> None:
    experiment_command(ExperimentKind.CALIBRATION, spec_path, trials, seed, sigma, workers, output_dir)

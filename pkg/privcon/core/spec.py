"""
Experiment specs: built-in defaults, YAML spec files and command-line overrides.

Node identifiers in spec files are 1-based; `target_index` and
`corrupted_indices` give the 0-based library view.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import yaml

from privcon.core.info_metrics import DEFAULT_K
from privcon.core.pdmm import DEFAULT_C, DEFAULT_T
from privcon.core.perturbation import MechanismKind, SolverKind
from privcon.exceptions import SpecError
from privcon.utils.helpers import stable_hash

FULL_TRIALS = 10_000
CI_TRIALS = 1_000


class ExperimentKind(str, Enum):
    CONVERGENCE = "convergence"
    TRADEOFF = "tradeoff"
    TOPOLOGY = "topology"
    CALIBRATION = "calibration"


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines an experiment's result table."""
    experiment: ExperimentKind
    n: int = 10
    radius_sq: Optional[float] = None
    graph_seed: int = 7
    graph_file: Optional[str] = None
    graphs: List[str] = field(default_factory=lambda: ["topology_g", "topology_g_prime"])
    mechanisms: List[MechanismKind] = field(default_factory=list)
    solver: Optional[SolverKind] = None
    sigma_sq: List[float] = field(default_factory=list)
    sigma_s_sq: float = 1.0
    trials: int = FULL_TRIALS
    T: int = DEFAULT_T
    c: float = DEFAULT_C
    target: int = 1
    corrupted: Optional[List[int]] = None
    k: int = DEFAULT_K
    seed: int = 1
    repeats: int = 20
    correlations: List[float] = field(default_factory=lambda: [0.0, 0.3, 0.6, 0.9])
    epsilons: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0])

    @property
    def target_index(self) -> int:
        return self.target - 1

    @property
    def corrupted_indices(self) -> List[int]:
        return [c - 1 for c in (self.corrupted or [])]

    def validate(self) -> "ExperimentSpec":
        if self.trials < 1:
            raise SpecError(f"trials must be at least 1, got {self.trials}")
        if self.n < 2:
            raise SpecError(f"n must be at least 2, got {self.n}")
        if self.T < 1:
            raise SpecError(f"T must be at least 1, got {self.T}")
        if self.c <= 0:
            raise SpecError(f"c must be positive, got {self.c}")
        if self.k < 1:
            raise SpecError(f"k must be at least 1, got {self.k}")
        if self.sigma_s_sq <= 0:
            raise SpecError(f"sigma_s_sq must be positive, got {self.sigma_s_sq}")
        if self.radius_sq is not None and self.radius_sq <= 0:
            raise SpecError(f"radius_sq must be positive, got {self.radius_sq}")
        if any(v < 0 for v in self.sigma_sq):
            raise SpecError(f"sigma_sq entries must be non-negative, got {self.sigma_sq}")
        if self.target < 1:
            raise SpecError(f"target is a 1-based node id, got {self.target}")
        if self.corrupted is not None:
            if any(c < 1 for c in self.corrupted):
                raise SpecError(f"corrupted holds 1-based node ids, got {self.corrupted}")
            if self.target in self.corrupted:
                raise SpecError(f"target node {self.target} is listed as corrupted")
        if self.experiment is ExperimentKind.TRADEOFF and self.mechanisms != [MechanismKind.DP]:
            raise SpecError("The trade-off experiment runs the DP mechanism only")
        if self.experiment is ExperimentKind.TOPOLOGY:
            allowed = {MechanismKind.SMPC, MechanismKind.DOSP}
            if not set(self.mechanisms) <= allowed:
                raise SpecError("The topology experiment compares SMPC and DOSP only")
        if self.experiment is ExperimentKind.CALIBRATION:
            if self.repeats < 1:
                raise SpecError(f"repeats must be at least 1, got {self.repeats}")
            if any(e <= 0 for e in self.epsilons):
                raise SpecError(f"epsilons must be positive, got {self.epsilons}")
            if any(abs(r) >= 1 for r in self.correlations):
                raise SpecError(f"correlations must lie in (-1, 1), got {self.correlations}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Plain mapping with enum values, as written to provenance headers."""
        data = asdict(self)
        data["experiment"] = self.experiment.value
        data["mechanisms"] = [m.value for m in self.mechanisms]
        data["solver"] = self.solver.value if self.solver else None
        return data

    @property
    def spec_hash(self) -> str:
        return stable_hash(self.to_dict())

    def with_overrides(
        self,
        trials: Optional[int] = None,
        seed: Optional[int] = None,
        sigma_sq: Optional[Sequence[float]] = None,
        graph_files: Optional[Sequence[str]] = None,
    ) -> "ExperimentSpec":
        """
        Apply command-line flags; they take precedence over file values.

        `graph_files` replaces the compared graphs of the topology experiment and
        sets the single `graph_file` of every other experiment.
        """
        changes: Dict[str, Any] = {}
        if trials is not None:
            changes["trials"] = trials
        if seed is not None:
            changes["seed"] = seed
        if sigma_sq:
            changes["sigma_sq"] = [float(v) for v in sigma_sq]
        if graph_files:
            if self.experiment is ExperimentKind.TOPOLOGY:
                changes["graphs"] = [str(p) for p in graph_files]
            elif len(graph_files) == 1:
                changes["graph_file"] = str(graph_files[0])
            else:
                raise SpecError(f"The {self.experiment.value} experiment takes one graph file, "
                                f"got {len(graph_files)}")
        return replace(self, **changes).validate()


def default_spec(experiment: Union[ExperimentKind, str]) -> ExperimentSpec:
    """Built-in defaults reproducing each experiment."""
    kind = ExperimentKind(experiment)
    if kind is ExperimentKind.CONVERGENCE:
        return ExperimentSpec(
            experiment=kind,
            mechanisms=[MechanismKind.NONE, MechanismKind.DP, MechanismKind.SMPC, MechanismKind.DOSP],
            sigma_sq=[0.0, 1.0, 100.0],
        )
    if kind is ExperimentKind.TRADEOFF:
        return ExperimentSpec(
            experiment=kind,
            mechanisms=[MechanismKind.DP],
            sigma_sq=[float(v) for v in np.logspace(-3, 3, 13)],
        )
    if kind is ExperimentKind.TOPOLOGY:
        return ExperimentSpec(
            experiment=kind,
            mechanisms=[MechanismKind.SMPC, MechanismKind.DOSP],
            sigma_sq=[0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
            corrupted=[5, 8],
        )
    return ExperimentSpec(experiment=kind, mechanisms=[MechanismKind.NONE], sigma_sq=[])


_ENUM_FIELDS = {"experiment": ExperimentKind, "solver": SolverKind}


def _coerce(name: str, value: Any, current: Any) -> Any:
    if name in _ENUM_FIELDS:
        if value is None and name == "solver":
            return None
        return _ENUM_FIELDS[name](value)
    if name == "mechanisms":
        return [MechanismKind(v) for v in value]
    if name in ("sigma_sq", "correlations", "epsilons"):
        return [float(v) for v in value]
    if name in ("graphs",):
        return [str(v) for v in value]
    if name == "corrupted":
        return None if value is None else [int(v) for v in value]
    if value is None:
        return None
    if name in ("radius_sq", "sigma_s_sq", "c"):
        return float(value)
    if name == "graph_file":
        return str(value)
    if isinstance(current, bool) or isinstance(value, bool):
        raise TypeError(f"boolean not allowed for {name}")
    if isinstance(current, int) or name in ("n", "trials", "T", "target", "k", "seed", "repeats", "graph_seed"):
        if isinstance(value, float) and not value.is_integer():
            raise TypeError(f"{name} must be an integer")
        return int(value)
    return value


def spec_from_mapping(data: Mapping[str, Any], experiment: Optional[ExperimentKind] = None) -> ExperimentSpec:
    """Layer a mapping of spec keys over the experiment's defaults."""
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise SpecError(f"Unknown spec keys: {', '.join(unknown)}")
    try:
        kind = ExperimentKind(data.get("experiment", experiment.value if experiment else None))
    except ValueError as e:
        raise SpecError(f"Unknown or missing experiment: {e}") from e
    if experiment is not None and kind is not experiment:
        raise SpecError(f"Spec is for experiment {kind.value!r}, not {experiment.value!r}")

    base = default_spec(kind)
    changes: Dict[str, Any] = {}
    for name, value in data.items():
        if name == "experiment":
            continue
        try:
            changes[name] = _coerce(name, value, getattr(base, name))
        except (TypeError, ValueError) as e:
            raise SpecError(f"Invalid value for {name!r}: {value!r} ({e})") from e
    return replace(base, **changes).validate()


def load_spec(path: Union[str, Path], experiment: Optional[ExperimentKind] = None) -> ExperimentSpec:
    """Read a YAML key-value spec file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise SpecError(f"Cannot read spec file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise SpecError(f"Spec file {path} is not valid YAML: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SpecError(f"Spec file {path} must contain key: value pairs")
    return spec_from_mapping(data, experiment)

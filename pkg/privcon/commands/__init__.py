"""Commands package initialization."""

from privcon.commands.convergence import convergence_command
from privcon.commands.tradeoff import tradeoff_command
from privcon.commands.topology import topology_command
from privcon.commands.calibrate import calibrate_command
from privcon.commands.check_graph import check_graph_command
from privcon.commands.compare import compare_command

__all__ = [
    "convergence_command",
    "tradeoff_command",
    "topology_command",
    "calibrate_command",
    "check_graph_command",
    "compare_command",
]

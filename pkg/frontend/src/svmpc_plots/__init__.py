"""Plotting front end for steinmpc experiment dumps.

Consumes the line-delimited JSON dumps written by the experiment harness
(episode, planning and summary files) and renders figures. The only
interface to the experiment code is the dump file format; this package never
imports the controller library.
"""

from .dumps import SchemaError, read_episode_dump, read_planning_dump, read_summary
from .plots import (
    plot_nav_episode,
    plot_planner_snapshots,
    plot_summary_table,
    summary_cells,
)

__all__ = [
    "SchemaError",
    "plot_nav_episode",
    "plot_planner_snapshots",
    "plot_summary_table",
    "read_episode_dump",
    "read_planning_dump",
    "read_summary",
    "summary_cells",
]

__version__ = "0.1.0"

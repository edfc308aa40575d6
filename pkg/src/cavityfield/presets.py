"""Figure presets: the parameters behind each reproduced figure."""

from __future__ import annotations

import math

from .quasiprob import PhaseSpaceGrid

GT_SWEEP = {"start": 0.05, "stop": 2 * math.pi, "step": 0.05}

_GRID_DEFAULT = PhaseSpaceGrid(-4, 4, -4, 4, 121, 121)
_GRID_WIDE = PhaseSpaceGrid(-6, 6, -6, 6, 161, 161)


def _grid(kind, input_, t1, t2, grid=_GRID_DEFAULT):
    return {"command": kind, "input": input_, "t1": t1, "t2": t2, "grid": grid}


PRESETS = {
    "fig2a": _grid("qfunc", "coherent:2", "pi:1/6", "pi:1/6"),
    "fig2b": _grid("qfunc", "coherent:2", "pi:1", "pi:1"),
    "fig2c": _grid("qfunc", "coherent:2", "pi:7/6", "pi:7/6"),
    "fig2d": _grid("qfunc", "coherent:2", "pi:2", "pi:2"),
    "fig3a": _grid("qfunc", "thermal:2", "pi:2/3", "pi:2/3"),
    "fig3b": _grid("qfunc", "thermal:12", "pi:2/3", "pi:2/3", _GRID_WIDE),
    "fig4a": _grid("wigner", "coherent:2", "pi:1/2", "pi:3/2"),
    "fig4b": _grid("wigner", "coherent:2", "pi:1/2", "pi:5/2"),
    "fig4c": _grid("wigner", "coherent:2", "pi:3/2", "pi:7/2"),
    "fig4d": _grid("wigner", "coherent:2", "pi:5/2", "pi:7/2"),
    "fig5a": {"command": "sweep", "parameter": "gt", "inputs": ["coherent:1", "coherent:2", "coherent:3"],
              **GT_SWEEP},
    "fig5b": {"command": "sweep", "parameter": "gt", "inputs": ["thermal:1", "thermal:2", "thermal:3"],
              **GT_SWEEP},
    # axis ranges of the contour figures are not given; these cover the plotted regime
    "fig6a": {"command": "contour", "parameter": "alpha0",
              "values": [round(0.1 * k, 10) for k in range(1, 31)], **GT_SWEEP},
    "fig6b": {"command": "contour", "parameter": "nbar",
              "values": [round(0.25 * k, 10) for k in range(1, 13)], **GT_SWEEP},
}


def preset_names():
    return sorted(PRESETS)

"""Certified computation of Whitney extensions on computable closed sets."""
from .exact import CPoint, CReal, Dyadic, DyInterval
from .closedset import TotalClosedSet, make_set, point_set, box_set, ball_set, union
from .cubes import Decomposition, DyadicCube, decomposition_for
from .extend import WhitneyJet, jet_make, wet0_eval, wetm_eval, wetm_eval_detail, taylor_eval

__all__ = [
    "CPoint", "CReal", "Dyadic", "DyInterval", "TotalClosedSet", "make_set", "point_set", "box_set",
    "ball_set", "union", "Decomposition", "DyadicCube", "decomposition_for", "WhitneyJet", "jet_make",
    "wet0_eval", "wetm_eval", "wetm_eval_detail", "taylor_eval",
]

from .cvxpy_engine import CvxpyEngine, make_engine

__all__ = ["CvxpyEngine", "make_engine"]

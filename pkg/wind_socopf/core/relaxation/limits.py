import math

import numpy as np

FULL_CIRCLE = (-math.pi, math.pi)


def tangent_angles(M: int, arc: tuple[float, float] = FULL_CIRCLE) -> np.ndarray:
    if M < 4:
        raise ValueError(f"flow-limit linearization needs at least 4 segments (got {M})")
    a, b = arc
    if not b > a:
        raise ValueError(f"flow-limit arc must satisfy start < end (got {arc})")
    if b - a >= 2.0 * math.pi - 1e-12:
        return 2.0 * math.pi * np.arange(M) / M
    return a + (b - a) * np.arange(M) / (M - 1)


def linearize_flow_limits(
    S_max: float, M: int = 16, arc: tuple[float, float] = FULL_CIRCLE
) -> list[tuple[float, float, float]]:
    """Tangent rows cosψ·P + sinψ·Q ≤ S_max of the circle P² + Q² ≤ S_max².

    The rows form an outer polygon; an unlimited branch (S_max ≤ 0 or infinite)
    gets none.
    """
    psi = tangent_angles(M, arc)
    if not (S_max > 0.0 and math.isfinite(S_max)):
        return []
    return [(math.cos(p), math.sin(p), float(S_max)) for p in psi]

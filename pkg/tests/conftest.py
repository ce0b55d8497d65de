import numpy as np
import pytest

from armsynth.kinematics import DesignLimits, DHLinkParams, RobotDesign


@pytest.fixture
def limits():
    return DesignLimits()


def random_valid_design(rng, n=3, limits=None, single_segment=False, tool=False, min_link=0.0):
    """Random design passing the static limit checks.

    Link lengths split a feasible total, so any n works; single_segment=True
    zeroes d so every link is one straight piece, which makes link-end
    anchors sit exactly on the arm's corners.  min_link floors each link
    length: markers anchored to a near-zero link are indistinguishable, which
    makes tracking identification ill-posed.
    """
    limits = limits or DesignLimits()
    from armsynth.kinematics import check_design_limits

    per_link_cap = limits.a_max + (0.0 if single_segment else limits.d_max)
    for _ in range(1000):
        tool_row = None
        tool_len = 0.0
        if tool:
            tool_row = DHLinkParams(rng.uniform(limits.alpha_min, limits.alpha_max), 0.0, rng.uniform(0.02, 0.1))
            tool_len = tool_row.d
        hi = min(limits.L_max - 0.03, n * per_link_cap * 0.95) - tool_len
        lo = limits.L_min + 0.03
        if hi <= lo:
            raise RuntimeError("length band infeasible for this n")
        target = rng.uniform(lo, hi)
        split = rng.dirichlet(np.ones(n)) * target
        links = []
        ok = bool(np.all(split >= min_link))
        if not ok:
            continue
        for i in range(n):
            alpha = rng.uniform(limits.alpha_min, limits.alpha_max)
            if single_segment:
                a, d = split[i], 0.0
            else:
                frac = rng.uniform(0.0, 1.0)
                a, d = split[i] * frac, split[i] * (1 - frac)
            if a > limits.a_max or d > limits.d_max:
                ok = False
                break
            links.append(DHLinkParams(alpha, a, d))
        if not ok:
            continue
        design = RobotDesign(tuple(links), tool=tool_row)
        if not check_design_limits(design, limits):
            return design
    raise RuntimeError("could not sample a valid design")


def random_config(rng, n, limits=None):
    limits = limits or DesignLimits()
    return rng.uniform(limits.q_min, limits.q_max, n)

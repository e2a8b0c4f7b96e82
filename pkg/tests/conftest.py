import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hopf_recenter.trees import DecoratedTree, Noise, planted, tree_product

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def trees(d: int = 1, max_leaves: int = 4, noise: bool = True, dot: bool = False):
    """Random decorated trees in dimension ``d`` with small decorations."""
    idx = st.tuples(*[st.integers(0, 1)] * (d + 1)).filter(lambda k: sum(k) <= 1)
    noises = [Noise.NONE]
    if noise:
        noises.append(Noise.XI)
    if dot:
        noises.append(Noise.XIDOT)
    leaf = st.builds(DecoratedTree, idx, st.sampled_from(noises))

    def extend(sub):
        def build(k, nz, kids):
            t = DecoratedTree(k, nz)
            for a, c in kids:
                t = tree_product(t, planted(a, c)) or t
            return t
        return st.builds(build, idx, st.sampled_from(noises),
                         st.lists(st.tuples(idx, sub), max_size=2))

    return st.recursive(leaf, extend, max_leaves=max_leaves).filter(lambda t: t is not None)

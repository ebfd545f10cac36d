import math
from fractions import Fraction

from hypothesis import strategies as st

from lcachar.groups import GroupDescriptor, Homomorphism

GROUPS = [
    GroupDescriptor(0, 0, (6,)),
    GroupDescriptor(0, 0, (2, 4)),
    GroupDescriptor(1, 0, ()),
    GroupDescriptor(0, 1, ()),
    GroupDescriptor(1, 1, (4,)),
    GroupDescriptor(2, 0, (3,)),
]

angles = st.fractions(min_value=0, max_value=1, max_denominator=24).map(lambda a: a % 1)


@st.composite
def elements(draw, g: GroupDescriptor, radius: int = 20):
    z = [draw(st.integers(-radius, radius)) for _ in range(g.z_rank)]
    t = [draw(angles) for _ in range(g.t_rank)]
    f = [draw(st.integers(0, n - 1)) for n in g.finite_orders]
    return g.element(z, t, f)


@st.composite
def endomorphisms(draw, g: GroupDescriptor):
    a, b = g.z_rank, g.t_rank
    ints = st.integers(-3, 3)
    zz = [[draw(ints) for _ in range(a)] for _ in range(a)]
    zt = [[draw(angles) for _ in range(a)] for _ in range(b)]
    zf = [[draw(ints) for _ in range(a)] for _ in g.finite_orders]
    tt = [[draw(ints) for _ in range(b)] for _ in range(b)]
    ft = [[Fraction(draw(ints), n) for n in g.finite_orders] for _ in range(b)]
    # ff[i][j] must send order-n_j elements into Z_{n_i}
    ff = [[(ni // math.gcd(ni, nj)) * draw(ints) for nj in g.finite_orders]
          for ni in g.finite_orders]
    return Homomorphism(g, g, zz, zt, zf, tt, ft, ff)

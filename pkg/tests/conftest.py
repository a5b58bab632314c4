from __future__ import annotations

import numpy as np
import pytest

from solitonforge import catalog
from solitonforge.sampling import rng


def catalog_expressions():
    """(case id, coords, expr) for every expression in the catalog."""
    out = []
    for c in catalog.all_cases():
        coords = c.group.coords
        exprs = [c.metric.f, c.lam, *c.X] + ([c.phi] if c.phi is not None else [])
        exprs += [e for _, e in c.expected_kappa]
        exprs += [e for row in c.group.frame for e in row]
        for e in exprs:
            out.append((c.id, coords, e))
    return out


def case_points(case, count=100, seed=0):
    return case.sample_box().random(count, rng(seed))


@pytest.fixture(scope="session")
def cases():
    return catalog.all_cases()


@pytest.fixture
def gen():
    return np.random.default_rng(1234)


def random_inputs(g, r: np.random.Generator):
    """Smooth non-soliton (f, X, lambda) text for a group: f > 0 with f(e) = 1."""
    e = np.asarray(g.identity)
    d = [f"({c} - {e[k]:g})" for k, c in enumerate(g.coords)]
    a = r.uniform(-0.6, 0.6, size=g.dim)
    b = r.uniform(-0.3, 0.3)
    f = "exp(" + " + ".join(f"{a[k]:.4f}*{d[k]}" for k in range(g.dim)) + f" + {b:.4f}*{d[0]}*{d[-1]})"
    X = []
    for i in range(g.dim):
        c = r.uniform(-1, 1, size=4)
        u, v = g.coords[i], g.coords[(i + 1) % g.dim]
        X.append(f"{c[0]:.4f} + {c[1]:.4f}*{u} + {c[2]:.4f}*{u}*{v} + {c[3]:.4f}*sin({v})")
    lc = r.uniform(-1, 1, size=2)
    lam = f"{lc[0]:.4f} + {lc[1]:.4f}*cos({g.coords[0]})"
    return f, X, lam

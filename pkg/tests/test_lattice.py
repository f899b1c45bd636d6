import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundclusters.lattice import GeometryError, Impurity, LatticeSpec


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_sites=1),
        dict(n_sites=2, boundary="periodic"),
        dict(n_sites=5, boundary="twisted"),
        dict(n_sites=5, onsite_u=math.inf),
        dict(n_sites=5, t=math.nan),
        dict(n_sites=5, hopping_overrides=((4, 1.0),)),
        dict(n_sites=5, interaction_overrides=((-1, 1.0),)),
        dict(n_sites=5, potential_overrides=((5, 1.0),)),
        dict(n_sites=5, impurity=Impurity(bond=4, bond_hopping=1.0)),
        dict(n_sites=5, impurity=Impurity(mu_site=7, chem_potential=1.0)),
    ],
)
def test_invalid_lattices_raise(kwargs):
    with pytest.raises(GeometryError):
        LatticeSpec(**kwargs)


@given(st.integers(3, 50), st.sampled_from(["open", "periodic"]))
def test_bond_count(n, boundary):
    lat = LatticeSpec(n, boundary)
    assert lat.n_bonds == (n if boundary == "periodic" else n - 1)
    assert len(lat.bond_hoppings()) == lat.n_bonds
    assert len(lat.nn_interactions()) == lat.n_bonds


def test_overrides_and_impurity():
    imp = Impurity(bond=2, bond_hopping=0.5, offres_site=3, offres_onsite=9.0, mu_site=1, chem_potential=2.0)
    lat = LatticeSpec(6, "open", 1.0, 4.0, 3.0, imp, hopping_overrides=((0, 0.1),),
                      potential_overrides=((1, 1.0),), interaction_overrides=((4, 7.0),))
    np.testing.assert_array_equal(lat.bond_hoppings(), [0.1, 1, 0.5, 1, 1])
    np.testing.assert_array_equal(lat.nn_interactions(), [3, 3, 3, 3, 7])
    np.testing.assert_array_equal(lat.onsite_interactions(), [4, 4, 4, 9, 4, 4])
    np.testing.assert_array_equal(lat.potentials(), [0, 3, 0, 0, 0, 0])


def test_neighbors():
    ring = LatticeSpec(5, "periodic")
    chain = LatticeSpec(5, "open")
    np.testing.assert_array_equal(ring.neighbor(np.array([0, 4]), 1), [1, 0])
    np.testing.assert_array_equal(chain.neighbor(np.array([0, 4]), 1), [1, -1])
    np.testing.assert_array_equal(chain.neighbor(np.array([0, 4]), -1), [-1, 3])

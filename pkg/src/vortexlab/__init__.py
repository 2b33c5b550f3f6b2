"""Numerical laboratory for coupled monopole and generalized vortex gauge
equations on a flat Kahler 2-torus, plus exact intersection-lattice arithmetic
for closed 4-manifolds.

Subpackages / modules:

* ``spin_algebra``      -- exact fiber algebra of the canonical spin-c structure
* ``surface_topology``  -- exact integer/rational lattice arithmetic
* ``field_calculus``    -- periodic fields, covariant calculus, two backends
* ``sw_system``         -- coupled monopole equations, Weitzenboeck / energy identities
* ``vortex_solver``     -- moment map, Kazdan-Warner solver, stability, moduli chain
* ``service``           -- FastAPI wrapper exposing the laboratory over HTTP
* ``cli``               -- thin command line client of the service
"""

__version__ = "0.1.0"

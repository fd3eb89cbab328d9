"""Construct non-scattering configurations in the plane and certify them numerically."""
from . import errors
from .bessel import bessel_first_zero, bessel_zeros, besselj, besselj_derivs
from .fields import (HelmholtzField, PlaneWaves, TrigProducts, BesselSum, bessel_wave, combine, cos_cos,
                     eckmann_pillet, field_from_dict, neg_cos_sum, plane_wave, sin_sin, sine_product_planewaves)
from .geometry import Disk, PlanarCurve, PolygonDomain, Rectangle, Sector
from .nodal import certify_signs, find_critical_points, corner_angle_check, trace_nodal, assemble_dirichlet_domain
from .flow import assemble_neumann_domain, find_stationary, full_orbit, trace_orbit
from .spectra import (CavityProblem, cavity_from_itep, itep_from_cavity, sector_spectrum, verify_cavity_eigenpair,
                      verify_itep)
from .media import (MediumSpec, build_explicit_example, build_transform_medium, constant_medium, disk_diffeo,
                    square_diffeo)
from .scatter import SolverConfig, assemble_and_solve, refinement_study

__version__ = "0.1.0"

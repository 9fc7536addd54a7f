"""Exception hierarchy with stable machine-readable error codes.

Every error carries a ``code`` string that the CLI emits verbatim in its
JSON error reports, so callers can dispatch on failures without parsing
messages.
"""


class HodgekitError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"


class ComplexError(HodgekitError):
    """Input does not describe a closed oriented simplicial pseudomanifold."""

    code = "invalid_complex"


class DegreeError(HodgekitError):
    """Requested form degree is outside the valid range for the complex."""

    code = "degree_out_of_range"


class ShapeError(HodgekitError):
    """Cochain degree, length, or owning complex does not match."""

    code = "shape_mismatch"


class GeometryError(HodgekitError):
    """Degenerate simplex geometry (zero volume) or non-SPD mass matrix."""

    code = "degenerate_geometry"


class SchemeError(HodgekitError):
    """Requested inner-product scheme is not applicable to this mesh."""

    code = "scheme_not_applicable"


class RankAmbiguityError(HodgekitError):
    """An eigenvalue sits too close to the harmonic rank cutoff."""

    code = "rank_ambiguity"


class SolverError(HodgekitError):
    """A linear solve failed to reach its residual tolerance."""

    code = "solver_failure"


class NotExactError(HodgekitError):
    """Operand is not an exact cochain and the operation requires one."""

    code = "not_exact"


class ParameterError(HodgekitError):
    """A numeric parameter violates its precondition."""

    code = "bad_parameter"


class GridError(HodgekitError):
    """Parameter grid is non-uniform, too coarse, or missing neighbors."""

    code = "grid_error"


class CapabilityError(HodgekitError):
    """A registry entry lacks data required by the requested check."""

    code = "capability_missing"


class RegistryError(HodgekitError):
    """Unknown registry name (family, grid function, or spectral form)."""

    code = "unknown_registry_name"


class MeshFormatError(HodgekitError):
    """Mesh file could not be parsed."""

    code = "mesh_unreadable"


class CochainFormatError(HodgekitError):
    """Cochain JSON could not be parsed or fails validation."""

    code = "cochain_malformed"


class UnsupportedMeshError(HodgekitError):
    """Operation needs a corpus mesh (torus/circle) and got something else."""

    code = "mesh_not_supported"

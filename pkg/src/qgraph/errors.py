"""Exception hierarchy shared by all modules."""


class QGraphError(Exception):
    """Base class for library errors."""


class GraphError(QGraphError, ValueError):
    """Invalid graph description (bad lengths, disconnected, ...)."""


class ResonanceError(QGraphError):
    """Spectral parameter too close to a Dirichlet eigenvalue of some edge."""

    def __init__(self, lam, edge=None, lam_d=None):
        self.lam = lam
        self.edge = edge
        self.lam_d = lam_d
        msg = f"lambda={lam!r} lies in the Dirichlet exclusion zone"
        if edge is not None:
            msg += f" of edge {edge!r}"
        if lam_d is not None:
            msg += f" (Dirichlet eigenvalue {lam_d!r})"
        super().__init__(msg)


class SolverError(QGraphError):
    """Numerical procedure failed to produce a trustworthy answer."""


class PoleError(SolverError):
    """Interior problem is singular (parameter sits on a pole)."""


class CertificateNotFound(QGraphError):
    """A gap or compact eigenfunction search came back empty."""

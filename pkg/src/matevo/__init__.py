"""Numerical toolkit for material evolution: symmetry algebras, evolution and
morphogenesis fibres of response functions, and finite groupoid algebra."""

__version__ = "0.1.0"

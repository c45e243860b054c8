"""TCL: apprentissage de contraintes transférables par décomposition de récompense."""

__version__ = "0.1.0"

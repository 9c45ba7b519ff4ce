"""Two-stack automata, partial-pattern avoidance and the matrix encoding between them."""

__version__ = "0.1.0"

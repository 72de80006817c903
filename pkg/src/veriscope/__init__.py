"""veriscope: fact checking backed by web evidence, runnable fully offline."""

__version__ = "0.1.0"

# Cactus sandpile toolkit package
__version__ = "1.0.0"

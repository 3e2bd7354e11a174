"""Automatic target dossier pipeline.

Given a gene and a disease, assemble a fully cited dossier (PDF + slide
deck) from biomedical data sources, a grounded retrieval engine, and local
analytical tools.
"""

__version__ = "0.1.0"

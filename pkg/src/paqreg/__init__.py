"""paqreg: molecular property regression with classical tree ensembles and
a simulated hybrid quantum-classical model, plus the data plumbing around
them (curation, similarity clustering, feature selection, cross-validation).
"""

__version__ = "0.1.0"

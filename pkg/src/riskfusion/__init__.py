"""Breast cancer risk prediction: pedigree and covariate models plus combiners.

The package exposes four risk models behind a common scoring surface:

* ``mendelian`` -- carrier-gene pedigree model: an exact genotype posterior for
  the counselee computed by pedigree peeling, followed by a genotype-mixture
  competing-risk projection.
* ``relative_hazard`` -- questionnaire model: age-banded relative hazards over
  five risk factors applied to a piecewise-constant baseline.
* ``combined_m`` -- penetrance-modification combination: the questionnaire
  relative hazard, rescaled to population level, modifies the non-carrier
  hazard inside the pedigree model's genotype mixture.
* ``ensemble`` -- stacked logistic combinations of the two base model scores,
  fitted with censoring-compensated weights.
"""

from riskfusion.pedigree import Pedigree, Relative, RiskFactors
from riskfusion.parameters import ParameterSet, load_parameters

__all__ = [
    "Pedigree",
    "Relative",
    "RiskFactors",
    "ParameterSet",
    "load_parameters",
    "__version__",
]

__version__ = "0.1.0"

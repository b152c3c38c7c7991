"""Reference estimates reported for the original TIMES couples sample.

These are used as generator defaults and as targets for internal-consistency
checks. Values are transcribed digit for digit, including any typos.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LoadingRow:
    indicator: str
    latent: str
    unstd: float
    std: float
    se: float
    z: float


@dataclass(frozen=True)
class VarianceRow:
    indicator: str
    fitted: float
    predicted: float
    residual: float
    r2: float
    mc: float
    mc2: float


LOADINGS = (
    LoadingRow("physical_strength", "Masculinity", 13.746, 0.423, 0.329, 42.16),
    LoadingRow("emotional_strength", "Masculinity", 15.503, 0.677, 0.227, 68.27),
    LoadingRow("emotional_toughness", "Masculinity", 15.49, 0.690, 0.216, 71.54),
    LoadingRow("minimization_of_harassment", "Masculinity", 12.54, 0.462, 0.285, 43.93),
    LoadingRow("drinking", "Masculinity", 14.31, 0.498, 0.288, 49.59),
    LoadingRow("justification", "Justification", 8.82, 0.416, 0.228, 38.63),
    LoadingRow("perpetrator_accountability", "Justification", 15.05, 0.667, 0.249, 60.27),
    LoadingRow("victim_blaming", "Justification", 13.99, 0.553, 0.263, 53.10),
    LoadingRow("seriousness", "Justification", 13.33, 0.601, 0.243, 54.70),
    LoadingRow("gap_chores", "GenderGapUnpaidWork", 1.02, 0.112, 0.323, 3.16),
    LoadingRow("gap_childcare", "GenderGapUnpaidWork", 1.14, 0.282, 0.346, 3.31),
)

VARIANCES = (
    VarianceRow("physical_strength", 1051.792, 188.9756, 862.8163, 0.1796701, 0.4238751, 0.1796701),
    VarianceRow("emotional_strength", 523.1136, 240.3733, 282.7404, 0.4595049, 0.6778679, 0.4595049),
    VarianceRow("emotional_toughness", 503.7534, 240.0157, 263.7377, 0.4764548, 0.6902571, 0.4764548),
    VarianceRow("minimization_of_harassment", 735.2562, 157.4338, 577.8164, 0.2141228, 0.4627343, 0.2141228),
    VarianceRow("drinking", 823.4362, 204.8036, 618.6326, 0.2487182, 0.4987164, 0.2487182),
    VarianceRow("justification", 448.8415, 77.9037, 370.9378, 0.1735662, 0.4166127, 0.1735662),
    VarianceRow("perpetrator_accountability", 509.0743, 226.7054, 282.3679, 0.4453296, 0.6673302, 0.4453296),
    VarianceRow("victim_blaming", 639.9978, 195.8456, 444.1522, 0.3060098, 0.5531815, 0.3060098),
    VarianceRow("seriousness", 491.1438, 177.9263, 313.2175, 0.3626292, 0.6018838, 0.3626292),
    VarianceRow("gap_chores", 83.37905, 1.046148, 82.3329, 0.0125469, 0.1120129, 0.0125469),
    VarianceRow("gap_childcare", 16.42664, 1.313552, 15.11309, 0.0799647, 0.2827804, 0.0799647),
)

OVERALL_CD = 0.8831087
SRMR = 0.057

# latent covariances (unit latent variances)
PSI_MASC_JUST = 0.799
PSI_MASC_GAP = -0.170

AVERAGE_INTERITEM_COVARIANCE = 0.263
CRONBACH_ALPHA = 0.777

# leisure (weekly hours) on the composite index, couple-clustered
LEISURE_REGRESSIONS = {
    "leisure_with_partner": {"slope": 0.783, "se": 0.309, "constant": 18.70, "n": 1511},
    "leisure_with_partner_children": {"slope": 1.335, "se": 0.306, "constant": 15.50, "n": 1259},
}

# physical vignette arm, women, probit average marginal effect
INFORMATION_TREATMENT_AME = {"ame": -0.0523, "se": 0.0296, "ci": (-0.1104, 0.0057), "n": 1060}

N_COUPLES = 848


def loading(indicator: str) -> LoadingRow:
    return next(r for r in LOADINGS if r.indicator == indicator)


def variance(indicator: str) -> VarianceRow:
    return next(r for r in VARIANCES if r.indicator == indicator)

from .calibration import fit_platt, platt_calibrate
from .cv import ClassifierSpec, CvError, CvReport, cross_validate, curve_summary_features
from .fusion import FusionResult, FusionWeights, cross_fitted_fusion, decision_fusion
from .lda import SingularCovarianceError, train_lda
from .metrics import UndefinedMetricWarning, accuracy, f1_score
from .model import ClassifierModel
from .mtl import MtlError, MtlModel, mtl_predict, quadrant_graph, train_mtl
from .svm import SvmConvergenceError, train_svm

__all__ = [
    "ClassifierModel", "ClassifierSpec", "CvError", "CvReport", "FusionResult",
    "FusionWeights", "MtlError", "MtlModel", "SingularCovarianceError", "SvmConvergenceError",
    "UndefinedMetricWarning", "accuracy", "cross_fitted_fusion", "cross_validate", "curve_summary_features",
    "decision_fusion", "f1_score", "fit_platt", "mtl_predict", "platt_calibrate",
    "quadrant_graph", "train_lda", "train_mtl", "train_svm",
]

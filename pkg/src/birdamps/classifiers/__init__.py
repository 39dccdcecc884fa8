from .base import ModelError, Scaler
from .forest import ForestModel, Tree, count_rf_ops, train_forest
from .logistic import LogisticModel, train_logistic
from .serialize import deserialize_model, model_from_dict, model_to_dict, serialize_model
from .stacking import StackingModel, StackingParams, train_stacking
from .svm import SvmModel, train_svm_rbf

__all__ = [
    "ForestModel", "LogisticModel", "ModelError", "Scaler", "StackingModel", "StackingParams",
    "SvmModel", "Tree", "count_rf_ops", "deserialize_model", "model_from_dict", "model_to_dict",
    "predict_forest", "predict_logistic", "predict_svm", "serialize_model", "train_forest",
    "train_logistic", "train_stacking", "train_svm_rbf", "model_scores",
]


def predict_logistic(m: LogisticModel, x):
    score = m.scores(x)
    return score, (score > m.threshold).astype(int)


def predict_svm(m: SvmModel, x):
    margin = m.decision(x)
    return margin, (margin > 0).astype(int)


def predict_forest(m: ForestModel, x):
    score = m.scores(x)
    return score, (score > 0.5).astype(int)


def model_scores(model, X):
    """Continuous score of any model (probability-like or margin)."""
    if isinstance(model, (LogisticModel, ForestModel)):
        return model.scores(X)
    return model.decision(X)

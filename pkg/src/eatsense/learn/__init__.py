from .smote import smote
from .pca import PCATransform, fit_pca, apply_pca
from .models import (
    MODEL_KINDS,
    Model,
    train,
    predict_scores,
    gini_importance,
    log_loss,
    log_loss_gradient,
    save_model,
    load_model,
)
from .sfs import sfs, stratified_folds

__all__ = [
    "smote",
    "PCATransform", "fit_pca", "apply_pca",
    "MODEL_KINDS", "Model", "train", "predict_scores", "gini_importance",
    "log_loss", "log_loss_gradient", "save_model", "load_model",
    "sfs", "stratified_folds",
]

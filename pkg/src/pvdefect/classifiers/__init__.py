from .params import TrainParams
from .svm import SvmModel, svm_train, svm_predict
from .gbdt import GbdtModel, gbdt_train, gbdt_predict
from .io import save_model, load_model

__all__ = [
    "TrainParams",
    "SvmModel",
    "svm_train",
    "svm_predict",
    "GbdtModel",
    "gbdt_train",
    "gbdt_predict",
    "save_model",
    "load_model",
]

from .models import (ARCHS, Adam, GraphModel, ModelConfig, TrainReport, accuracy, evaluate,
                     roc_auc, train)
from .tensor import Tensor, cross_entropy, parameter, softmax

__all__ = ["ARCHS", "Adam", "GraphModel", "ModelConfig", "TrainReport", "Tensor", "accuracy",
           "cross_entropy", "evaluate", "parameter", "roc_auc", "softmax", "train"]

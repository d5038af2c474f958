"""Real-time head-gesture recognition: data synthesis, change-point-guided
time-warp augmentation, small recurrent classifiers, and buffered streaming
inference."""

from .seqdata import (  # noqa: F401
    Dataset,
    GestureSequence,
    Label,
    SynthConfig,
    filter_short,
    load_dataset,
    save_dataset,
    split,
    synth_dataset,
)
from .changepoint import ChangePointBounds, PeltConfig, gesture_bounds, pelt  # noqa: F401
from .augment import AugmentConfig, augment_dataset  # noqa: F401
from .preprocess import ModelInput, Standardizer, fit_standardizer, pad_and_flatten  # noqa: F401
from .nn import CellType, Model, ModelConfig, load_model, save_model  # noqa: F401
from .pipeline import TrainConfig, evaluate, grid_search, kfold_cv, train  # noqa: F401
from .stream import StreamConfig, StreamPredictor  # noqa: F401

"""Terrain texture recognition with LBP features and a random forest."""

from ._terrabench import (
    LABELS,
    Error,
    ForestModel,
    accuracy,
    center_crop,
    confusion_matrix,
    detect_rest_windows,
    gen_texture,
    lbp_histogram,
    load_gray,
    predict,
    resize_bilinear,
    save_png,
    select_keyframes,
    sharpness,
    simulate_gait,
    train_forest,
)

__all__ = [
    "LABELS",
    "Error",
    "ForestModel",
    "accuracy",
    "center_crop",
    "confusion_matrix",
    "detect_rest_windows",
    "gen_texture",
    "lbp_histogram",
    "load_gray",
    "predict",
    "resize_bilinear",
    "save_png",
    "select_keyframes",
    "sharpness",
    "simulate_gait",
    "train_forest",
]

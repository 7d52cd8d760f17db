from lcvsr.data.color import YCbCrImage, rgb_to_ycbcr, ycbcr_to_rgb
from lcvsr.data.dataset import SequenceDataset, TrainingPairs, build_training_pairs, center_window
from lcvsr.data.degrade import bicubic_resize, decimate, degrade, gaussian_blur_3x3, gaussian_kernel_3x3

__all__ = [
    "SequenceDataset",
    "TrainingPairs",
    "YCbCrImage",
    "bicubic_resize",
    "build_training_pairs",
    "center_window",
    "decimate",
    "degrade",
    "gaussian_blur_3x3",
    "gaussian_kernel_3x3",
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
]

"""HOG features + soft-margin SVM for late-blight detection in tomato-leaf images."""

__version__ = "0.1.0"

from .baselines import KnnParams, TreeParams, gini, knn_predict, tree_fit, tree_predict
from .dataset import Manifest, SplitSpec, read_manifest, scan_dataset, stratified_split, write_manifest
from .evaluation import compare, confusion, evaluate, metrics
from .hog import HogConfig, descriptor_len, extract_hog
from .imaging import decode_image, resize_bilinear, to_grayscale
from .persistence import load_model, save_model
from .pipeline import PipelineConfig
from .svm import KernelSpec, SvmModel, TrainParams, kernel_eval, kkt_max_violation, train_smo

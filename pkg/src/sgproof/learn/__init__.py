from .encoder import encode, encode_batch, feature_count, flat_dim
from .model import PolicyModel, ValueNet, load_checkpoint, save_checkpoint
from .pool import SamplePool
from .targets import (policy_from_value_grid, rank_modified_targets, target_global_onestep,
                      target_global_pruned, target_local)
from .train import TrainConfig, generalization_run, train_segment, training_cycle

__all__ = [
    "encode", "encode_batch", "feature_count", "flat_dim",
    "PolicyModel", "ValueNet", "save_checkpoint", "load_checkpoint",
    "SamplePool", "target_local", "rank_modified_targets",
    "target_global_pruned", "target_global_onestep", "policy_from_value_grid",
    "TrainConfig", "train_segment", "training_cycle", "generalization_run",
]

"""Encoder bridge: batch embedding into PLEMB files and contrastive
fine-tuning on pair CSVs. Talks to the analysis pipeline through files only."""

__version__ = "0.1.0"

from .embed import embed_file, read_texts
from .encoders import NullEncoder, load_encoder
from .plemb import write_plemb
from .train import TrainSpec, contrastive_loss, finetune, read_pairs

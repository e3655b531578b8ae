import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")

import numpy as np
import pytest
import torch
from PIL import Image

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "how", "to", "press", "the", "button", "start", "stop", "turn",
    "knob", "defrost", "fish", "microwave", "timer", "power", "##s", "##er",
]


@pytest.fixture(scope="session")
def text_encoder_dir(tmp_path_factory):
    """Tiny seeded text encoder checkpoint with a wordpiece tokenizer."""
    from transformers import BertConfig, BertModel, BertTokenizer

    d = tmp_path_factory.mktemp("text_encoder")
    (d / "vocab.txt").write_text("\n".join(VOCAB))
    BertTokenizer(vocab_file=str(d / "vocab.txt")).save_pretrained(d)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=37,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def image_encoder_dir(tmp_path_factory):
    """Tiny seeded vision-transformer checkpoint with its processor."""
    from transformers import ViTConfig, ViTImageProcessor, ViTModel

    d = tmp_path_factory.mktemp("image_encoder")
    torch.manual_seed(4321)
    config = ViTConfig(
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=37,
        image_size=30,
        patch_size=15,
        num_channels=3,
    )
    ViTModel(config).save_pretrained(d)
    ViTImageProcessor(size={"height": 30, "width": 30}).save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def media_dir(tmp_path_factory):
    """Button images plus a clip's pre-extracted frames."""
    d = tmp_path_factory.mktemp("media")
    rng = np.random.default_rng(7)
    for name in ("button0.png", "button1.png"):
        arr = rng.uniform(0, 255, (30, 30, 3)).astype("uint8")
        Image.fromarray(arr).save(d / name)
    frames = d / "clip0"
    frames.mkdir()
    for k in range(3):
        arr = rng.uniform(0, 255, (30, 30, 3)).astype("uint8")
        Image.fromarray(arr).save(frames / f"{k:03d}.png")
    return d


@pytest.fixture(scope="session")
def base_manifest(text_encoder_dir, image_encoder_dir):
    def build(entries, **overrides):
        doc = {
            "text_encoder": text_encoder_dir,
            "image_encoder": image_encoder_dir,
            "text_pooling": "last",
            "image_pooling": "first",
            "fps": 1,
            "entries": entries,
        }
        doc.update(overrides)
        return doc

    return build

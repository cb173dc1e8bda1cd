import numpy as np
import pytest

from cme.wemodel import WEModel


@pytest.fixture
def toy_model():
    """Hand-built 4-word model with easily checkable vectors."""
    vocab = {"herb": 0, "plant": 1, "smile": 2, "news": 3}
    vectors = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.5],
        ]
    )
    return WEModel(vocabulary=vocab, vectors=vectors)

import random

import hypothesis
import pytest

from podsearch.generate import RandomLimits, random_corpus

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

SMALL = RandomLimits(servers=3, pods_per_server=4, resources_per_pod=8, webids=5, vocabulary_size=14)


@pytest.fixture
def small_corpus_factory():
    def make(seed: int):
        return random_corpus(random.Random(seed), SMALL)

    return make

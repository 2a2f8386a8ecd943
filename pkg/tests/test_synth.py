import numpy as np
import pytest

from fakereview.corpus import FAKE, write_corpus
from fakereview.synth import SynthConfig, generate_synthetic
from fakereview.textsim import WeightingScheme, preprocess, reviewer_content_similarity


def _fake_count(corpus):
    return sum(1 for lab in corpus.labels().values() if lab == FAKE)


class TestSynth:
    def test_byte_identical(self, tmp_path):
        cfg = SynthConfig(n_reviews=300, n_reviewers=200, seed=7)
        a = write_corpus(generate_synthetic(cfg), tmp_path / "a")
        b = write_corpus(generate_synthetic(cfg), tmp_path / "b")
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_seed_changes_output(self):
        a = generate_synthetic(SynthConfig(n_reviews=100, n_reviewers=50, seed=1))
        b = generate_synthetic(SynthConfig(n_reviews=100, n_reviewers=50, seed=2))
        assert a != b

    def test_no_fakes(self):
        assert _fake_count(generate_synthetic(SynthConfig(n_reviews=200, n_reviewers=80, fake_fraction=0.0))) == 0

    def test_default_counts(self):
        c = generate_synthetic(SynthConfig())
        assert c.sizes[0] == 2060
        assert _fake_count(c) == 1030

    def test_hotel_kind(self):
        assert generate_synthetic(SynthConfig(n_reviews=50, n_reviewers=20, kind="hotel")).kind == "hotel"

    def test_duplicate_text_raises_fake_rcs(self):
        cfg = SynthConfig(n_reviews=1500, n_reviewers=300, duplicate_text_rate=1.0, seed=5)
        c = generate_synthetic(cfg)
        labels = c.labels()
        scheme = WeightingScheme("LTC")
        fake, genuine = [], []
        for aid, ids in c.by_reviewer.items():
            if not ids:
                continue
            docs = [preprocess(c.reviews[i].content) for i in ids]
            rcs = reviewer_content_similarity(docs, scheme)
            (fake if labels[ids[0]] == FAKE else genuine).append(rcs)
        assert np.mean(fake) > np.mean(genuine)

    @pytest.mark.parametrize("bad", [{"n_reviews": 0}, {"fake_fraction": 1.5}, {"kind": "bar"}, {"colour": 1}])
    def test_invalid_config(self, bad):
        with pytest.raises(ValueError):
            SynthConfig.from_dict(bad)

    def test_config_round_trip(self):
        cfg = SynthConfig(seed=99, burst_rate=0.0)
        assert SynthConfig.from_dict(cfg.to_dict()) == cfg
